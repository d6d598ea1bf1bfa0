#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "emstress/physics.hpp"
#include "emstress/rng.hpp"
#include "emstress/tree.hpp"

namespace emstress {

struct GenConfig {
  std::uint64_t rng_seed = 1;
  std::size_t n_designs = 10;
  int branch_count_min = 5;
  int branch_count_max = 79;
  int width_min_px = 1;
  int width_max_px = 4;
  int segment_length_min_um = 8;
  int segment_length_max_um = 120;
  double j_magnitude_min = 1e7;
  double j_magnitude_max = 1e9;
  // Shortest piece left on either side when a segment is split by a new branch.
  int min_split_piece_um = 4;
  // Empty pixels required between footprints of branches that do not share a node.
  int clearance_px = 1;
  int attach_attempts = 400;
  int restarts = 64;

  void validate() const;
};

class GenerationError : public std::runtime_error {
 public:
  GenerationError(const std::string& what, std::uint64_t seed)
      : std::runtime_error(what + " (seed " + std::to_string(seed) + ")"), seed_(seed) {}
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
};

// Random Manhattan tree: a first segment, then repeated attachment of new
// axis-aligned segments either at an existing node or at an interior point of
// an existing branch (which splits it). Candidates whose footprint collides
// with non-adjacent wires are rejected; a build that stalls restarts from a
// derived seed. Currents come from assign_random_currents. Deterministic in
// (design_id, seed, cfg, t_metal).
InterconnectTree generate_tree(std::uint64_t seed, const GenConfig& cfg, const PhysicalParams& params,
                               std::int64_t design_id = 0);

// Routes terminal injections (A, positive = entering the wire) through the
// tree and sets j = I / (w t_metal) on every branch, signed toward +x/+y.
// Injections must sum to zero; missing terminals inject nothing.
InterconnectTree assign_currents(const InterconnectTree& topology, const std::map<int, double>& injections,
                                 const PhysicalParams& params);

// Random zero-sum integer injections at the terminals, scaled so that the
// largest |j| in the design equals a peak drawn uniformly from
// [j_magnitude_min, j_magnitude_max].
InterconnectTree assign_random_currents(const InterconnectTree& topology, std::uint64_t seed,
                                        const GenConfig& cfg);

// Seed used for design i of a run.
inline std::uint64_t design_seed(std::uint64_t run_seed, std::uint64_t index) {
  return mix_seed(run_seed, index);
}

}  // namespace emstress
