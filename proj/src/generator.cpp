#include "emstress/generator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>

namespace emstress {

void GenConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("generator config: ") + what);
  };
  require(branch_count_min >= 1 && branch_count_min <= branch_count_max, "branch count range is empty");
  require(width_min_px >= 1 && width_min_px <= width_max_px, "width range is empty");
  require(segment_length_min_um >= 1 && segment_length_min_um <= segment_length_max_um,
          "segment length range is empty");
  require(segment_length_max_um < kCanvasPixels - 2 * width_max_px, "segments cannot exceed the canvas");
  require(j_magnitude_min > 0.0 && j_magnitude_min <= j_magnitude_max, "current density range is empty");
  require(min_split_piece_um >= 1, "split piece must be >= 1 um");
  require(clearance_px >= 0, "clearance must be >= 0");
  require(attach_attempts > 0 && restarts > 0, "retry budgets must be positive");
}

namespace {

constexpr std::array<std::array<int, 2>, 4> kDirections{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

// Mutable tree under construction; ids equal vector indices.
struct Draft {
  std::vector<Node> nodes;
  std::vector<Branch> branches;
  std::vector<std::vector<int>> incident;  // branch ids per node

  int add_node(int x, int y) {
    nodes.push_back({static_cast<int>(nodes.size()), x, y, NodeKind::Terminal});
    incident.emplace_back();
    return nodes.back().id;
  }
  int add_branch(int from, int to, int width) {
    const int id = static_cast<int>(branches.size());
    branches.push_back({id, from, to, width, 0.0});
    incident[from].push_back(id);
    incident[to].push_back(id);
    return id;
  }
  void retarget(int branch_id, int old_node, int new_node) {
    Branch& b = branches[branch_id];
    (b.from == old_node ? b.from : b.to) = new_node;
    auto& inc = incident[old_node];
    inc.erase(std::find(inc.begin(), inc.end(), branch_id));
    incident[new_node].push_back(branch_id);
  }
};

PixelRect segment_rect(int ax, int ay, int bx, int by, int width) {
  const int off = width_offset(width);
  if (ay == by) {
    return {std::min(ax, bx), ay - off, std::max(ax, bx), ay - off + width - 1};
  }
  return {ax - off, std::min(ay, by), ax - off + width - 1, std::max(ay, by)};
}

PixelRect branch_rect(const Draft& d, const Branch& b) {
  const Node& a = d.nodes[b.from];
  const Node& c = d.nodes[b.to];
  return segment_rect(a.x, a.y, c.x, c.y, b.width);
}

PixelRect square_at(const Node& n, int width) {
  const int off = width_offset(width);
  return {n.x - off, n.y - off, n.x - off + width - 1, n.y - off + width - 1};
}

bool in_canvas(const PixelRect& r) {
  return r.inside(PixelRect{0, 0, kCanvasPixels - 1, kCanvasPixels - 1});
}

// Direction index of branch b as seen from node n.
int direction_from(const Draft& d, const Branch& b, int n) {
  const Node& here = d.nodes[n];
  const Node& there = d.nodes[b.from == n ? b.to : b.from];
  const int dx = (there.x > here.x) - (there.x < here.x);
  const int dy = (there.y > here.y) - (there.y < here.y);
  for (int i = 0; i < 4; ++i) {
    if (kDirections[i][0] == dx && kDirections[i][1] == dy) return i;
  }
  return -1;
}

class Builder {
 public:
  Builder(const GenConfig& cfg, Rng& rng) : cfg_(cfg), rng_(rng) {}

  bool build(int target) {
    if (!seed_segment()) return false;
    while (static_cast<int>(d_.branches.size()) < target) {
      const int remaining = target - static_cast<int>(d_.branches.size());
      bool placed = false;
      for (int attempt = 0; attempt < cfg_.attach_attempts && !placed; ++attempt) {
        placed = (remaining >= 2 && rng_.coin()) ? try_split_attach() : try_node_attach();
      }
      if (!placed) return false;
    }
    return true;
  }

  Draft& draft() { return d_; }

 private:
  int random_width() { return static_cast<int>(rng_.uniform_int(cfg_.width_min_px, cfg_.width_max_px)); }
  int random_length() {
    return static_cast<int>(rng_.uniform_int(cfg_.segment_length_min_um, cfg_.segment_length_max_um));
  }

  bool seed_segment() {
    const int width = random_width();
    const int length = random_length();
    const bool horizontal = rng_.coin();
    const int margin = cfg_.width_max_px;
    const int span_lo = margin;
    const int span_hi = kCanvasPixels - 1 - margin - length;
    if (span_hi < span_lo) return false;
    const int along = static_cast<int>(rng_.uniform_int(span_lo, span_hi));
    const int across = static_cast<int>(rng_.uniform_int(margin, kCanvasPixels - 1 - margin));
    const int a = horizontal ? d_.add_node(along, across) : d_.add_node(across, along);
    const int b = horizontal ? d_.add_node(along + length, across) : d_.add_node(across, along + length);
    d_.add_branch(a, b, width);
    return true;
  }

  // Checks a candidate segment from node `anchor` against the draft. `adjacent`
  // lists branches sharing the anchor after the change.
  bool fits(const PixelRect& rect, int anchor, int anchor_width, const std::vector<int>& adjacent,
            int skip_branch = -1) const {
    if (!in_canvas(rect)) return false;
    const PixelRect square = square_at(d_.nodes[anchor], anchor_width);
    const PixelRect halo = rect.grown(cfg_.clearance_px);
    for (const Branch& b : d_.branches) {
      if (b.id == skip_branch) continue;
      const PixelRect other = branch_rect(d_, b);
      if (std::find(adjacent.begin(), adjacent.end(), b.id) != adjacent.end()) {
        if (!rect.intersect(other).inside(square)) return false;
      } else if (!halo.intersect(other).empty()) {
        return false;
      }
    }
    return true;
  }

  int widest_incident(int node, int extra) const {
    int w = extra;
    for (int b : d_.incident[node]) w = std::max(w, d_.branches[b].width);
    return w;
  }

  bool try_node_attach() {
    const int n = static_cast<int>(rng_.uniform_int(0, static_cast<std::int64_t>(d_.nodes.size()) - 1));
    if (d_.incident[n].size() >= 4) return false;
    std::array<bool, 4> used{};
    for (int b : d_.incident[n]) {
      const int dir = direction_from(d_, d_.branches[b], n);
      if (dir >= 0) used[dir] = true;
    }
    const int dir = static_cast<int>(rng_.uniform_int(0, 3));
    if (used[dir]) return false;
    const int width = random_width();
    const int length = random_length();
    const Node& anchor = d_.nodes[n];
    const int ex = anchor.x + kDirections[dir][0] * length;
    const int ey = anchor.y + kDirections[dir][1] * length;
    const PixelRect rect = segment_rect(anchor.x, anchor.y, ex, ey, width);
    if (!fits(rect, n, widest_incident(n, width), d_.incident[n])) return false;
    const int end = d_.add_node(ex, ey);
    d_.add_branch(n, end, width);
    return true;
  }

  bool try_split_attach() {
    const int bi = static_cast<int>(rng_.uniform_int(0, static_cast<std::int64_t>(d_.branches.size()) - 1));
    const Branch host = d_.branches[bi];
    const Node a = d_.nodes[host.from];
    const Node c = d_.nodes[host.to];
    const int length = std::abs(a.x - c.x) + std::abs(a.y - c.y);
    if (length < 2 * cfg_.min_split_piece_um) return false;
    const int offset = static_cast<int>(rng_.uniform_int(cfg_.min_split_piece_um, length - cfg_.min_split_piece_um));
    const int sx = a.x + (c.x > a.x ? offset : c.x < a.x ? -offset : 0);
    const int sy = a.y + (c.y > a.y ? offset : c.y < a.y ? -offset : 0);
    const bool host_horizontal = a.y == c.y;
    const int side = rng_.coin() ? 1 : -1;
    const int width = random_width();
    const int new_length = random_length();
    const int ex = host_horizontal ? sx : sx + side * new_length;
    const int ey = host_horizontal ? sy + side * new_length : sy;
    const PixelRect rect = segment_rect(sx, sy, ex, ey, width);
    // The split point is not a node yet: check against the host's pieces by hand.
    if (!in_canvas(rect)) return false;
    const int square_width = std::max(width, host.width);
    const int so = width_offset(square_width);
    const PixelRect square{sx - so, sy - so, sx - so + square_width - 1, sy - so + square_width - 1};
    if (!rect.intersect(branch_rect(d_, host)).inside(square)) return false;
    const PixelRect halo = rect.grown(cfg_.clearance_px);
    for (const Branch& b : d_.branches) {
      if (b.id == host.id) continue;
      if (!halo.intersect(branch_rect(d_, b)).empty()) return false;
    }
    // Host now ends at the split node; a new tail branch takes over the far end.
    const int split = d_.add_node(sx, sy);
    d_.retarget(host.id, host.to, split);
    d_.add_branch(split, host.to, host.width);
    const int end = d_.add_node(ex, ey);
    d_.add_branch(split, end, width);
    return true;
  }

  const GenConfig& cfg_;
  Rng& rng_;
  Draft d_;
};

InterconnectTree finish(Draft& d, std::int64_t design_id) {
  for (std::size_t i = 0; i < d.nodes.size(); ++i) {
    d.nodes[i].kind = d.incident[i].size() >= 2 ? NodeKind::Junction : NodeKind::Terminal;
  }
  return InterconnectTree(design_id, d.nodes, d.branches);
}

// Current entering the network through each branch toward its parent,
// computed from subtree sums rooted at node index 0. Returns branch currents
// signed toward the branch's high node.
template <typename Value>
std::vector<Value> route(const InterconnectTree& tree, const std::vector<Value>& injection) {
  const auto& nodes = tree.nodes();
  const auto& branches = tree.branches();
  std::vector<Value> subtree = injection;
  std::vector<Value> branch_current(branches.size(), Value{});
  if (nodes.empty()) return branch_current;
  std::vector<std::size_t> order;
  std::vector<std::ptrdiff_t> via(nodes.size(), -1);  // branch to parent
  std::vector<bool> seen(nodes.size(), false);
  order.push_back(0);
  seen[0] = true;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::size_t u = order[i];
    for (std::size_t bi : tree.incidence()[u]) {
      const Branch& b = branches[bi];
      const std::size_t v = *tree.node_index(b.from == nodes[u].id ? b.to : b.from);
      if (seen[v]) continue;
      seen[v] = true;
      via[v] = static_cast<std::ptrdiff_t>(bi);
      order.push_back(v);
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t v = *it;
    if (via[v] < 0) continue;
    const Branch& b = branches[static_cast<std::size_t>(via[v])];
    const std::size_t parent = *tree.node_index(b.from == nodes[v].id ? b.to : b.from);
    subtree[parent] += subtree[v];
    // subtree[v] flows from v to its parent.
    const bool v_is_low = tree.low_node(b).id == nodes[v].id;
    branch_current[static_cast<std::size_t>(via[v])] = v_is_low ? subtree[v] : -subtree[v];
  }
  return branch_current;
}

}  // namespace

InterconnectTree assign_currents(const InterconnectTree& topology, const std::map<int, double>& injections,
                                 const PhysicalParams& params) {
  std::vector<double> inj(topology.nodes().size(), 0.0);
  double total = 0.0;
  double largest = 0.0;
  for (const auto& [node_id, amps] : injections) {
    auto idx = topology.node_index(node_id);
    if (!idx) throw std::invalid_argument("injection at unknown node " + std::to_string(node_id));
    if (topology.degree(node_id) != 1) {
      throw std::invalid_argument("injection at node " + std::to_string(node_id) + " which is not a terminal");
    }
    inj[*idx] = amps;
    total += amps;
    largest = std::max(largest, std::abs(amps));
  }
  if (std::abs(total) > 1e-9 * largest) throw std::invalid_argument("terminal injections do not sum to zero");
  const std::vector<double> currents = route(topology, inj);
  std::vector<Branch> branches = topology.branches();
  for (std::size_t i = 0; i < branches.size(); ++i) {
    branches[i].current_density = currents[i] / (branches[i].width * params.t_metal_um * 1e-12);
  }
  return InterconnectTree(topology.design_id(), topology.nodes(), std::move(branches));
}

InterconnectTree assign_random_currents(const InterconnectTree& topology, std::uint64_t seed,
                                        const GenConfig& cfg) {
  Rng rng(seed);
  const auto& nodes = topology.nodes();
  std::vector<std::size_t> terminals;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (topology.incidence()[i].size() == 1) terminals.push_back(i);
  }
  constexpr std::int64_t kUnits = 1000;
  std::vector<std::int64_t> inj(nodes.size(), 0);
  std::vector<std::int64_t> currents;
  double peak_ratio = 0.0;
  for (int attempt = 0; attempt < cfg.restarts && peak_ratio == 0.0; ++attempt) {
    std::int64_t sum = 0;
    for (std::size_t t : terminals) {
      inj[t] = rng.uniform_int(-kUnits, kUnits);
      sum += inj[t];
    }
    // Spread the imbalance so the injections sum to exactly zero.
    const auto n = static_cast<std::int64_t>(terminals.size());
    const std::int64_t share = sum / n;
    std::int64_t rest = sum % n;
    for (std::size_t t : terminals) {
      inj[t] -= share;
      if (rest != 0) {
        const std::int64_t unit = rest > 0 ? 1 : -1;
        inj[t] -= unit;
        rest -= unit;
      }
    }
    currents = route(topology, inj);
    for (std::size_t b = 0; b < currents.size(); ++b) {
      peak_ratio = std::max(peak_ratio, std::abs(static_cast<double>(currents[b])) / topology.branches()[b].width);
    }
  }
  const double peak = rng.uniform(cfg.j_magnitude_min, cfg.j_magnitude_max);
  std::vector<Branch> branches = topology.branches();
  for (std::size_t b = 0; b < branches.size(); ++b) {
    branches[b].current_density =
        peak_ratio > 0.0 ? peak * (static_cast<double>(currents[b]) / branches[b].width) / peak_ratio : 0.0;
  }
  return InterconnectTree(topology.design_id(), topology.nodes(), std::move(branches));
}

InterconnectTree generate_tree(std::uint64_t seed, const GenConfig& cfg, const PhysicalParams& params,
                               std::int64_t design_id) {
  cfg.validate();
  for (int restart = 0; restart < cfg.restarts; ++restart) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(restart)));
    const int target = static_cast<int>(rng.uniform_int(cfg.branch_count_min, cfg.branch_count_max));
    Builder builder(cfg, rng);
    if (!builder.build(target)) continue;
    InterconnectTree topology = finish(builder.draft(), design_id);
    InterconnectTree tree = assign_random_currents(topology, rng.next(), cfg);
    ValidationOptions opts;
    opts.max_current_density = cfg.j_magnitude_max;
    if (validate_tree(tree, params, opts).empty()) return tree;
  }
  throw GenerationError("could not place a valid tree within the retry budget", seed);
}

}  // namespace emstress
