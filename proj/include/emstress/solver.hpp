#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "emstress/physics.hpp"
#include "emstress/stress_field.hpp"
#include "emstress/tree.hpp"

namespace emstress {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TimeIntegrator { BackwardEuler, CrankNicolson };

// Geometric ramp dt_initial, dt_initial*ramp, ... capped at dt_max, then uniform.
struct TimeSchedule {
  double dt_initial_s = 1e4;
  double dt_max_s = 1e6;
  double ramp_factor = 2.0;

  double dt(std::size_t step_index) const;
};

struct SolverConfig {
  double dx_um = 1.0;
  TimeSchedule schedule;
  TimeIntegrator integrator = TimeIntegrator::BackwardEuler;
  double linear_solver_tol = 1e-10;

  void validate() const;
};

// Finite-volume discretisation of a tree. Unknowns are numbered branch by
// branch (cells in local +x order), followed by one shared unknown per
// interior junction.
struct BranchMesh {
  int branch_id = 0;
  std::size_t cells = 0;
  std::size_t first_unknown = 0;
  double width_um = 1.0;
  double current_density = 0.0;
  // Junction unknown at the low (x = 0) and high (x = L) ends; nullopt for a
  // blocked terminal.
  std::optional<std::size_t> low_junction;
  std::optional<std::size_t> high_junction;
};

class Mesh {
 public:
  Mesh(const InterconnectTree& tree, double dx_um);

  double dx_um() const { return dx_um_; }
  std::int64_t design_id() const { return design_id_; }
  const std::vector<BranchMesh>& branches() const { return branches_; }
  const std::vector<int>& junction_node_ids() const { return junction_node_ids_; }
  std::size_t junction_unknown(std::size_t k) const { return cell_count_ + k; }
  std::size_t cell_count() const { return cell_count_; }
  std::size_t unknown_count() const { return cell_count_ + junction_node_ids_.size(); }

  // Elimination structure: the unknown graph of a tree is itself a tree, so
  // eliminating in post-order produces no fill.
  const std::vector<std::size_t>& elimination_order() const { return order_; }
  // Parent of each unknown in the elimination tree; the root is its own parent.
  const std::vector<std::size_t>& parent() const { return parent_; }

  // Unknown index of each face-sharing neighbour pair with its centre distance (um).
  struct Link {
    std::size_t low;
    std::size_t high;
    double distance_um;
    std::size_t branch;  // index into branches()
  };
  const std::vector<Link>& links() const { return links_; }

 private:
  void build_elimination_tree();

  double dx_um_;
  std::int64_t design_id_;
  std::size_t cell_count_ = 0;
  std::vector<BranchMesh> branches_;
  std::vector<int> junction_node_ids_;
  std::vector<Link> links_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> parent_;
};

// Discrete operator V dsigma/dt = -K sigma + g, with V the cell volumes (um^3,
// zero on junction rows), K the conductance Laplacian (um^3/s) and g the
// driving-force source. Units: um, s, Pa.
class KorhonenSystem {
 public:
  KorhonenSystem(const Mesh& mesh, const PhysicalParams& params);
  // Uses an explicitly supplied stress diffusivity (m^2/s) instead of deriving it.
  KorhonenSystem(const Mesh& mesh, const PhysicalParams& params, double kappa_m2s);

  const Mesh& mesh() const { return *mesh_; }
  std::span<const double> volumes() const { return volume_; }
  std::span<const double> source() const { return source_; }

  std::vector<double> apply_laplacian(std::span<const double> state) const;

  // Replaces junction values by the ones balancing flux against the
  // neighbouring cells.
  void balance_junctions(std::span<double> state) const;

  // One theta-step (theta = 1 backward Euler, 1/2 Crank-Nicolson) on the cell
  // rows; junction rows are always enforced at the new time level.
  std::vector<double> step(std::span<const double> state, double dt_s, TimeIntegrator integrator,
                           double tol = 1e-10) const;

  // Sum of V_i sigma_i, Pa*um^3.
  double content(std::span<const double> state) const;

 private:
  void assemble(const PhysicalParams& params, double kappa_m2s);

  const Mesh* mesh_;
  std::vector<double> volume_;
  std::vector<double> diag_;         // diagonal of K
  std::vector<double> conductance_;  // per mesh link
  std::vector<double> source_;
  std::vector<double> parent_coupling_;  // -conductance to elimination parent
};

// Free-function form of one implicit step.
std::vector<double> step(const Mesh& mesh, std::span<const double> state, double dt_s,
                         const PhysicalParams& params,
                         TimeIntegrator integrator = TimeIntegrator::BackwardEuler);

std::vector<double> uniform_state(const Mesh& mesh, double value);
StressSnapshot to_snapshot(const Mesh& mesh, std::span<const double> state, double time_s);
std::vector<double> from_snapshot(const Mesh& mesh, const StressSnapshot& snap);
StressField empty_field(const Mesh& mesh);

// Transient solve from sigma(x, 0) = sigma_T; report times in seconds.
StressField solve_transient_seconds(const InterconnectTree& tree, const PhysicalParams& params,
                                    const SolverConfig& cfg, std::span<const double> report_times_s);

// Same, report times in years.
StressField solve_transient(const InterconnectTree& tree, const PhysicalParams& params,
                            const SolverConfig& cfg, std::span<const double> report_years);

// Closed-form steady state sampled on the mesh; single snapshot at t = +inf.
StressField steady_state(const InterconnectTree& tree, const PhysicalParams& params,
                         const SolverConfig& cfg = {});

// Piecewise-linear reconstruction of a branch profile at local coordinate s
// (um, 0 <= s <= L). Junction ends use the junction value; blocked ends are
// extrapolated from the two nearest cell centres.
double sample_branch(const Mesh& mesh, const StressSnapshot& snap, std::size_t branch_index,
                     double s_um);

}  // namespace emstress
