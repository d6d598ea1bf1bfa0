#include "emstress/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace emstress {

double TimeSchedule::dt(std::size_t step_index) const {
  double dt = dt_initial_s;
  for (std::size_t i = 0; i < step_index && dt < dt_max_s; ++i) dt *= ramp_factor;
  return std::min(dt, dt_max_s);
}

void SolverConfig::validate() const {
  if (!(dx_um > 0.0)) throw std::invalid_argument("solver dx must be > 0");
  if (!(schedule.dt_initial_s > 0.0) || !(schedule.dt_max_s > 0.0)) {
    throw std::invalid_argument("solver time steps must be > 0");
  }
  if (!(schedule.ramp_factor >= 1.0)) throw std::invalid_argument("time-step ramp factor must be >= 1");
  if (!(linear_solver_tol > 0.0 && linear_solver_tol < 1.0)) {
    throw std::invalid_argument("linear solver tolerance must lie in (0, 1)");
  }
}

Mesh::Mesh(const InterconnectTree& tree, double dx_um) : dx_um_(dx_um), design_id_(tree.design_id()) {
  if (!(dx_um > 0.0)) throw std::invalid_argument("dx must be > 0");
  std::unordered_map<int, std::size_t> junction_of;
  for (const Node& n : tree.nodes()) {
    if (tree.degree(n.id) >= 2) {
      junction_of[n.id] = junction_node_ids_.size();
      junction_node_ids_.push_back(n.id);
    }
  }
  for (const Branch& b : tree.branches()) {
    const double length = tree.length_um(b);
    const double ratio = length / dx_um;
    const double cells = std::round(ratio);
    if (cells < 1.0 || std::abs(ratio - cells) > 1e-9 * std::max(1.0, ratio)) {
      throw SolverError("branch " + std::to_string(b.id) + ": length " + std::to_string(length) +
                        " um is not a multiple of dx = " + std::to_string(dx_um) + " um");
    }
    BranchMesh bm;
    bm.branch_id = b.id;
    bm.cells = static_cast<std::size_t>(cells);
    bm.first_unknown = cell_count_;
    bm.width_um = b.width;
    bm.current_density = b.current_density;
    cell_count_ += bm.cells;
    branches_.push_back(bm);
  }
  for (std::size_t bi = 0; bi < branches_.size(); ++bi) {
    BranchMesh& bm = branches_[bi];
    const Branch& b = tree.branches()[bi];
    if (auto it = junction_of.find(tree.low_node(b).id); it != junction_of.end()) {
      bm.low_junction = junction_unknown(it->second);
    }
    if (auto it = junction_of.find(tree.high_node(b).id); it != junction_of.end()) {
      bm.high_junction = junction_unknown(it->second);
    }
    if (bm.low_junction) links_.push_back({*bm.low_junction, bm.first_unknown, 0.5 * dx_um, bi});
    for (std::size_t k = 0; k + 1 < bm.cells; ++k) {
      links_.push_back({bm.first_unknown + k, bm.first_unknown + k + 1, dx_um, bi});
    }
    if (bm.high_junction) {
      links_.push_back({bm.first_unknown + bm.cells - 1, *bm.high_junction, 0.5 * dx_um, bi});
    }
  }
  build_elimination_tree();
}

void Mesh::build_elimination_tree() {
  const std::size_t n = unknown_count();
  if (n == 0) return;
  std::vector<std::vector<std::size_t>> adj(n);
  for (const Link& l : links_) {
    adj[l.low].push_back(l.high);
    adj[l.high].push_back(l.low);
  }
  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  parent_.assign(n, kUnset);
  order_.clear();
  order_.reserve(n);
  // Iterative DFS producing a post-order.
  std::vector<std::pair<std::size_t, std::size_t>> stack;
  parent_[0] = 0;
  stack.emplace_back(0, 0);
  while (!stack.empty()) {
    auto& [u, next] = stack.back();
    if (next < adj[u].size()) {
      const std::size_t v = adj[u][next++];
      if (v == parent_[u] && u != 0) continue;
      if (parent_[v] != kUnset) throw SolverError("mesh connectivity contains a cycle");
      parent_[v] = u;
      stack.emplace_back(v, 0);
    } else {
      order_.push_back(u);
      stack.pop_back();
    }
  }
  if (order_.size() != n) throw SolverError("mesh connectivity is not connected");
}

KorhonenSystem::KorhonenSystem(const Mesh& mesh, const PhysicalParams& params)
    : KorhonenSystem(mesh, params, diffusivity(params)) {}

KorhonenSystem::KorhonenSystem(const Mesh& mesh, const PhysicalParams& params, double kappa_m2s)
    : mesh_(&mesh) {
  assemble(params, kappa_m2s);
}

void KorhonenSystem::assemble(const PhysicalParams& params, double kappa_m2s) {
  const Mesh& m = *mesh_;
  const std::size_t n = m.unknown_count();
  const double kappa = kappa_m2s * 1e12;  // um^2/s
  const double t = params.t_metal_um;
  volume_.assign(n, 0.0);
  diag_.assign(n, 0.0);
  source_.assign(n, 0.0);
  conductance_.assign(m.links().size(), 0.0);
  for (const BranchMesh& bm : m.branches()) {
    const double v = bm.width_um * t * m.dx_um();
    for (std::size_t k = 0; k < bm.cells; ++k) volume_[bm.first_unknown + k] = v;
  }
  // Parent link lookup for the elimination coupling.
  std::unordered_map<std::uint64_t, double> coupling;
  auto key = [](std::size_t a, std::size_t b) {
    return (static_cast<std::uint64_t>(std::min(a, b)) << 32) | static_cast<std::uint64_t>(std::max(a, b));
  };
  for (std::size_t li = 0; li < m.links().size(); ++li) {
    const auto& l = m.links()[li];
    const BranchMesh& bm = m.branches()[l.branch];
    const double area = bm.width_um * t;
    const double c = area * kappa / l.distance_um;
    const double g_pa_per_um = driving_force(bm.current_density, params) * 1e-6;
    const double s = area * kappa * g_pa_per_um;
    conductance_[li] = c;
    diag_[l.low] += c;
    diag_[l.high] += c;
    source_[l.low] += s;
    source_[l.high] -= s;
    coupling[key(l.low, l.high)] = -c;
  }
  parent_coupling_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t p = m.parent()[i];
    if (p != i) parent_coupling_[i] = coupling.at(key(i, p));
  }
}

std::vector<double> KorhonenSystem::apply_laplacian(std::span<const double> state) const {
  std::vector<double> out(state.size(), 0.0);
  const auto& links = mesh_->links();
  for (std::size_t li = 0; li < links.size(); ++li) {
    const double flow = conductance_[li] * (state[links[li].low] - state[links[li].high]);
    out[links[li].low] += flow;
    out[links[li].high] -= flow;
  }
  return out;
}

void KorhonenSystem::balance_junctions(std::span<double> state) const {
  const Mesh& m = *mesh_;
  const std::size_t first = m.cell_count();
  std::vector<double> weighted(m.unknown_count() - first, 0.0);
  std::vector<double> total(weighted.size(), 0.0);
  const auto& links = m.links();
  for (std::size_t li = 0; li < links.size(); ++li) {
    const auto& l = links[li];
    if (l.low >= first) {
      weighted[l.low - first] += conductance_[li] * state[l.high];
      total[l.low - first] += conductance_[li];
    }
    if (l.high >= first) {
      weighted[l.high - first] += conductance_[li] * state[l.low];
      total[l.high - first] += conductance_[li];
    }
  }
  for (std::size_t k = 0; k < weighted.size(); ++k) {
    if (total[k] > 0.0) state[first + k] = (source_[first + k] + weighted[k]) / total[k];
  }
}

namespace {

// Direct solve of a symmetric system whose sparsity graph is the mesh's
// elimination tree.
void tree_solve(const Mesh& mesh, std::span<const double> diag, std::span<const double> coupling,
                std::span<const double> rhs, std::span<double> x) {
  const auto& order = mesh.elimination_order();
  const auto& parent = mesh.parent();
  std::vector<double> d(diag.begin(), diag.end());
  std::vector<double> b(rhs.begin(), rhs.end());
  for (std::size_t i : order) {
    if (!(d[i] > 0.0) || !std::isfinite(d[i])) throw SolverError("singular pivot in tree elimination");
    const std::size_t p = parent[i];
    if (p == i) continue;
    const double f = coupling[i] / d[i];
    d[p] -= f * coupling[i];
    b[p] -= f * b[i];
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t i = *it;
    const std::size_t p = parent[i];
    x[i] = p == i ? b[i] / d[i] : (b[i] - coupling[i] * x[p]) / d[i];
  }
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

}  // namespace

std::vector<double> KorhonenSystem::step(std::span<const double> state, double dt_s,
                                         TimeIntegrator integrator, double tol) const {
  const Mesh& m = *mesh_;
  const std::size_t n = m.unknown_count();
  if (state.size() != n) throw std::invalid_argument("state does not conform to the mesh");
  if (!(dt_s > 0.0)) throw std::invalid_argument("time step must be > 0");
  const double theta = integrator == TimeIntegrator::BackwardEuler ? 1.0 : 0.5;

  // Solved for the increment d = sigma^{n+1} - sigma^n so that a stationary
  // state gives an exactly zero right-hand side.
  //   cells:     (V/dt + theta K) d = g - K sigma^n
  //   junctions: theta K d = theta (g - K sigma^n)
  const std::vector<double> k_state = apply_laplacian(state);
  std::vector<double> rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    rhs[i] = source_[i] - k_state[i];
    if (volume_[i] == 0.0) rhs[i] *= theta;
  }
  std::vector<double> diag(n);
  std::vector<double> coupling(n);
  for (std::size_t i = 0; i < n; ++i) {
    diag[i] = volume_[i] / dt_s + theta * diag_[i];
    coupling[i] = theta * parent_coupling_[i];
  }

  std::vector<double> x(n);
  tree_solve(m, diag, coupling, rhs, x);

  // Residual check with iterative refinement.
  const double rhs_norm = std::max(norm2(rhs), std::numeric_limits<double>::min());
  for (int pass = 0;; ++pass) {
    std::vector<double> r = apply_laplacian(x);
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - (volume_[i] / dt_s * x[i] + theta * r[i]);
    if (norm2(r) <= tol * rhs_norm) break;
    if (pass == 3) throw SolverError("linear solve did not reach the requested tolerance");
    std::vector<double> dx(n);
    tree_solve(m, diag, coupling, r, dx);
    for (std::size_t i = 0; i < n; ++i) x[i] += dx[i];
  }
  // Only V/dt pins the constant vector, so for long steps the solve roundoff
  // piles up there, and that is exactly the total-content direction. Summing
  // all rows (1^T K = 0) gives its exact amplitude; a uniform shift leaves K d alone.
  double junction_rhs = 0.0;
  double total_volume = 0.0;
  double content_change = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (volume_[i] == 0.0) {
      junction_rhs += rhs[i];
    } else {
      total_volume += volume_[i];
      content_change += volume_[i] * x[i];
    }
  }
  const double target = theta < 1.0 ? -dt_s * (1.0 - theta) / theta * junction_rhs : 0.0;
  const double shift = (target - content_change) / total_volume;
  for (double& v : x) v += shift;

  std::vector<double> next(n);
  for (std::size_t i = 0; i < n; ++i) {
    next[i] = state[i] + x[i];
    if (!std::isfinite(next[i])) throw SolverError("non-finite stress value after step");
  }
  return next;
}

double KorhonenSystem::content(std::span<const double> state) const {
  double c = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) c += volume_[i] * state[i];
  return c;
}

std::vector<double> step(const Mesh& mesh, std::span<const double> state, double dt_s,
                         const PhysicalParams& params, TimeIntegrator integrator) {
  KorhonenSystem sys(mesh, params);
  return sys.step(state, dt_s, integrator);
}

std::vector<double> uniform_state(const Mesh& mesh, double value) {
  return std::vector<double>(mesh.unknown_count(), value);
}

StressSnapshot to_snapshot(const Mesh& mesh, std::span<const double> state, double time_s) {
  StressSnapshot snap;
  snap.time_s = time_s;
  snap.branches.reserve(mesh.branches().size());
  for (const BranchMesh& bm : mesh.branches()) {
    auto first = state.begin() + static_cast<std::ptrdiff_t>(bm.first_unknown);
    snap.branches.emplace_back(first, first + static_cast<std::ptrdiff_t>(bm.cells));
  }
  snap.junctions.assign(state.begin() + static_cast<std::ptrdiff_t>(mesh.cell_count()), state.end());
  return snap;
}

std::vector<double> from_snapshot(const Mesh& mesh, const StressSnapshot& snap) {
  std::vector<double> state(mesh.unknown_count());
  if (snap.branches.size() != mesh.branches().size() ||
      snap.junctions.size() != mesh.junction_node_ids().size()) {
    throw std::invalid_argument("snapshot does not conform to the mesh");
  }
  for (std::size_t b = 0; b < mesh.branches().size(); ++b) {
    const BranchMesh& bm = mesh.branches()[b];
    if (snap.branches[b].size() != bm.cells) throw std::invalid_argument("snapshot cell count mismatch");
    std::copy(snap.branches[b].begin(), snap.branches[b].end(),
              state.begin() + static_cast<std::ptrdiff_t>(bm.first_unknown));
  }
  std::copy(snap.junctions.begin(), snap.junctions.end(),
            state.begin() + static_cast<std::ptrdiff_t>(mesh.cell_count()));
  return state;
}

StressField empty_field(const Mesh& mesh) {
  StressField f;
  f.design_id = mesh.design_id();
  f.dx_um = mesh.dx_um();
  for (const BranchMesh& bm : mesh.branches()) f.branch_ids.push_back(bm.branch_id);
  f.junction_ids = mesh.junction_node_ids();
  return f;
}

StressField solve_transient_seconds(const InterconnectTree& tree, const PhysicalParams& params,
                                    const SolverConfig& cfg, std::span<const double> report_times_s) {
  cfg.validate();
  validate_params(params);
  for (std::size_t i = 0; i < report_times_s.size(); ++i) {
    const double t = report_times_s[i];
    if (!std::isfinite(t) || t < 0.0 || (i > 0 && !(t > report_times_s[i - 1]))) {
      throw std::invalid_argument("report times must be finite, >= 0 and strictly increasing");
    }
  }
  const Mesh mesh(tree, cfg.dx_um);
  const KorhonenSystem sys(mesh, params);
  StressField field = empty_field(mesh);

  const std::vector<double> initial = uniform_state(mesh, params.sigma_T);
  std::vector<double> state = initial;
  sys.balance_junctions(state);
  double t = 0.0;
  std::size_t k = 0;
  for (double target : report_times_s) {
    if (target == 0.0) {
      field.snapshots.push_back(to_snapshot(mesh, initial, 0.0));
      continue;
    }
    while (t < target) {
      double dt = cfg.schedule.dt(k);
      const bool lands = t + dt >= target * (1.0 - 1e-12);
      if (lands) dt = target - t;
      state = sys.step(state, dt, cfg.integrator, cfg.linear_solver_tol);
      ++k;
      t = lands ? target : t + dt;
    }
    field.snapshots.push_back(to_snapshot(mesh, state, target));
  }
  return field;
}

StressField solve_transient(const InterconnectTree& tree, const PhysicalParams& params,
                            const SolverConfig& cfg, std::span<const double> report_years) {
  std::vector<double> seconds(report_years.size());
  std::transform(report_years.begin(), report_years.end(), seconds.begin(),
                 [](double y) { return y * kSecondsPerYear; });
  return solve_transient_seconds(tree, params, cfg, seconds);
}

StressField steady_state(const InterconnectTree& tree, const PhysicalParams& params,
                         const SolverConfig& cfg) {
  const Mesh mesh(tree, cfg.dx_um);
  const auto& nodes = tree.nodes();
  const auto& branches = tree.branches();
  std::vector<double> node_value(nodes.size(), 0.0);
  std::vector<bool> known(nodes.size(), false);
  if (!nodes.empty()) known[0] = true;
  std::vector<std::size_t> queue{0};
  for (std::size_t qi = 0; qi < queue.size() && !nodes.empty(); ++qi) {
    const std::size_t u = queue[qi];
    for (std::size_t bi : tree.incidence()[u]) {
      const Branch& b = branches[bi];
      const int other_id = b.from == nodes[u].id ? b.to : b.from;
      const std::size_t v = *tree.node_index(other_id);
      if (known[v]) continue;
      // sigma(high) = sigma(low) - G L
      const double drop = driving_force(b.current_density, params) * tree.length_um(b) * 1e-6;
      const bool u_is_low = tree.low_node(b).id == nodes[u].id;
      node_value[v] = u_is_low ? node_value[u] - drop : node_value[u] + drop;
      known[v] = true;
      queue.push_back(v);
    }
  }
  // Fix the free constant by conserving the initial content.
  double weighted_mean = 0.0;
  double weight = 0.0;
  for (const Branch& b : branches) {
    const double w = b.width * static_cast<double>(tree.length_um(b));
    const double lo = node_value[*tree.node_index(tree.low_node(b).id)];
    const double hi = node_value[*tree.node_index(tree.high_node(b).id)];
    weighted_mean += w * 0.5 * (lo + hi);
    weight += w;
  }
  const double shift = params.sigma_T - (weight > 0.0 ? weighted_mean / weight : 0.0);

  std::vector<double> state(mesh.unknown_count());
  for (std::size_t bi = 0; bi < branches.size(); ++bi) {
    const Branch& b = branches[bi];
    const BranchMesh& bm = mesh.branches()[bi];
    const double g_um = driving_force(b.current_density, params) * 1e-6;
    const double lo = node_value[*tree.node_index(tree.low_node(b).id)] + shift;
    for (std::size_t k = 0; k < bm.cells; ++k) {
      state[bm.first_unknown + k] = lo - g_um * (static_cast<double>(k) + 0.5) * mesh.dx_um();
    }
  }
  for (std::size_t k = 0; k < mesh.junction_node_ids().size(); ++k) {
    state[mesh.junction_unknown(k)] = node_value[*tree.node_index(mesh.junction_node_ids()[k])] + shift;
  }
  StressField field = empty_field(mesh);
  field.snapshots.push_back(to_snapshot(mesh, state, std::numeric_limits<double>::infinity()));
  return field;
}

double sample_branch(const Mesh& mesh, const StressSnapshot& snap, std::size_t branch_index,
                     double s_um) {
  const BranchMesh& bm = mesh.branches().at(branch_index);
  const auto& v = snap.branches.at(branch_index);
  const double dx = mesh.dx_um();
  const double length = dx * static_cast<double>(bm.cells);
  const std::size_t n = bm.cells;
  auto centre = [dx](std::size_t k) { return (static_cast<double>(k) + 0.5) * dx; };
  auto lerp = [](double s0, double v0, double s1, double v1, double s) {
    return v0 + (v1 - v0) * (s - s0) / (s1 - s0);
  };
  auto junction_value = [&](std::size_t unknown) { return snap.junctions.at(unknown - mesh.cell_count()); };

  if (s_um <= centre(0)) {
    if (bm.low_junction) return lerp(0.0, junction_value(*bm.low_junction), centre(0), v[0], s_um);
    if (n >= 2) return lerp(centre(0), v[0], centre(1), v[1], s_um);
    if (bm.high_junction) return lerp(centre(0), v[0], length, junction_value(*bm.high_junction), s_um);
    return v[0];
  }
  if (s_um >= centre(n - 1)) {
    if (bm.high_junction) return lerp(centre(n - 1), v[n - 1], length, junction_value(*bm.high_junction), s_um);
    if (n >= 2) return lerp(centre(n - 2), v[n - 2], centre(n - 1), v[n - 1], s_um);
    if (bm.low_junction) return lerp(0.0, junction_value(*bm.low_junction), centre(0), v[0], s_um);
    return v[0];
  }
  const auto k = std::min(n - 2, static_cast<std::size_t>(std::floor(s_um / dx - 0.5)));
  return lerp(centre(k), v[k], centre(k + 1), v[k + 1], s_um);
}

}  // namespace emstress
