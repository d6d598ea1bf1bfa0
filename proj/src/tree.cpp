#include "emstress/tree.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace emstress {

PixelRect PixelRect::intersect(const PixelRect& o) const {
  return {std::max(x0, o.x0), std::max(y0, o.y0), std::min(x1, o.x1), std::min(y1, o.y1)};
}

InterconnectTree::InterconnectTree(std::int64_t design_id, std::vector<Node> nodes,
                                   std::vector<Branch> branches)
    : design_id_(design_id), nodes_(std::move(nodes)), branches_(std::move(branches)) {
  incidence_.assign(nodes_.size(), {});
  for (std::size_t b = 0; b < branches_.size(); ++b) {
    for (int end : {branches_[b].from, branches_[b].to}) {
      if (auto n = node_index(end)) incidence_[*n].push_back(b);
    }
  }
}

std::optional<std::size_t> InterconnectTree::node_index(int id) const {
  // Generated trees use dense ids; fall back to a scan for external files.
  if (id >= 0 && static_cast<std::size_t>(id) < nodes_.size() && nodes_[id].id == id) {
    return static_cast<std::size_t>(id);
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> InterconnectTree::branch_index(int id) const {
  if (id >= 0 && static_cast<std::size_t>(id) < branches_.size() && branches_[id].id == id) {
    return static_cast<std::size_t>(id);
  }
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    if (branches_[i].id == id) return i;
  }
  return std::nullopt;
}

const Node& InterconnectTree::node(int id) const {
  auto i = node_index(id);
  if (!i) throw std::out_of_range("no node with id " + std::to_string(id));
  return nodes_[*i];
}

const Branch& InterconnectTree::branch(int id) const {
  auto i = branch_index(id);
  if (!i) throw std::out_of_range("no branch with id " + std::to_string(id));
  return branches_[*i];
}

Orientation InterconnectTree::orientation(const Branch& b) const {
  return node(b.from).y == node(b.to).y ? Orientation::Horizontal : Orientation::Vertical;
}

const Node& InterconnectTree::low_node(const Branch& b) const {
  const Node& a = node(b.from);
  const Node& c = node(b.to);
  if (orientation(b) == Orientation::Horizontal) return a.x <= c.x ? a : c;
  return a.y <= c.y ? a : c;
}

const Node& InterconnectTree::high_node(const Branch& b) const {
  const Node& lo = low_node(b);
  return lo.id == b.from ? node(b.to) : node(b.from);
}

int InterconnectTree::length_um(const Branch& b) const {
  const Node& a = node(b.from);
  const Node& c = node(b.to);
  return std::abs(a.x - c.x) + std::abs(a.y - c.y);
}

std::size_t InterconnectTree::degree(int node_id) const {
  auto i = node_index(node_id);
  return i ? incidence_[*i].size() : 0;
}

PixelRect InterconnectTree::footprint(const Branch& b) const {
  const Node& lo = low_node(b);
  const Node& hi = high_node(b);
  const int off = width_offset(b.width);
  if (orientation(b) == Orientation::Horizontal) {
    return {lo.x, lo.y - off, hi.x, lo.y - off + b.width - 1};
  }
  return {lo.x - off, lo.y, lo.x - off + b.width - 1, hi.y};
}

PixelRect InterconnectTree::junction_square(const Node& n) const {
  int w = 1;
  if (auto i = node_index(n.id)) {
    for (std::size_t b : incidence_[*i]) w = std::max(w, branches_[b].width);
  }
  const int off = width_offset(w);
  return {n.x - off, n.y - off, n.x - off + w - 1, n.y - off + w - 1};
}

std::string to_string(Violation::Kind kind) {
  switch (kind) {
    case Violation::Kind::NodeOutOfCanvas: return "node-out-of-canvas";
    case Violation::Kind::FootprintOutOfCanvas: return "footprint-out-of-canvas";
    case Violation::Kind::DuplicateId: return "duplicate-id";
    case Violation::Kind::UnknownNode: return "unknown-node";
    case Violation::Kind::SelfLoop: return "self-loop";
    case Violation::Kind::NotAxisAligned: return "not-axis-aligned";
    case Violation::Kind::ZeroLength: return "zero-length";
    case Violation::Kind::BadWidth: return "bad-width";
    case Violation::Kind::CurrentTooLarge: return "current-too-large";
    case Violation::Kind::NodeKindMismatch: return "node-kind-mismatch";
    case Violation::Kind::Disconnected: return "disconnected";
    case Violation::Kind::Cycle: return "cycle";
    case Violation::Kind::KclViolation: return "kcl-violation";
    case Violation::Kind::Overlap: return "overlap";
  }
  return "unknown";
}

namespace {

std::string node_tag(int id) { return "node " + std::to_string(id); }
std::string branch_tag(int id) { return "branch " + std::to_string(id); }

// Signed current leaving a node through a branch, in A.
double outgoing_current(const InterconnectTree& tree, const Branch& b, const Node& n,
                        double t_metal_um) {
  const double amps = b.current_density * b.width * t_metal_um * 1e-12;
  // Positive j flows low -> high, i.e. out of the low node.
  return tree.low_node(b).id == n.id ? amps : -amps;
}

struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

}  // namespace

double kcl_residual(const InterconnectTree& tree, const Node& node, const PhysicalParams& params) {
  auto idx = tree.node_index(node.id);
  if (!idx) return 0.0;
  double sum = 0.0;
  double largest = 0.0;
  for (std::size_t bi : tree.incidence()[*idx]) {
    const Branch& b = tree.branches()[bi];
    const double out = outgoing_current(tree, b, node, params.t_metal_um);
    sum += out;
    largest = std::max(largest, std::abs(out));
  }
  return largest > 0.0 ? std::abs(sum) / largest : 0.0;
}

std::vector<Violation> validate_tree(const InterconnectTree& tree, const PhysicalParams& params,
                                     const ValidationOptions& opts) {
  std::vector<Violation> out;
  auto report = [&](Violation::Kind k, std::string subject, std::string msg) {
    out.push_back({k, std::move(subject), std::move(msg)});
  };
  const auto& nodes = tree.nodes();
  const auto& branches = tree.branches();
  const PixelRect canvas{0, 0, kCanvasPixels - 1, kCanvasPixels - 1};

  std::unordered_set<int> seen;
  for (const Node& n : nodes) {
    if (!seen.insert(n.id).second) report(Violation::Kind::DuplicateId, node_tag(n.id), "duplicate node id");
    if (n.x < 0 || n.x > kCanvasPixels || n.y < 0 || n.y > kCanvasPixels) {
      report(Violation::Kind::NodeOutOfCanvas, node_tag(n.id), "position outside [0, 256] um");
    }
  }
  seen.clear();
  bool geometry_ok = true;
  for (const Branch& b : branches) {
    const std::string tag = branch_tag(b.id);
    if (!seen.insert(b.id).second) report(Violation::Kind::DuplicateId, tag, "duplicate branch id");
    if (!tree.node_index(b.from) || !tree.node_index(b.to)) {
      report(Violation::Kind::UnknownNode, tag, "endpoint refers to a missing node");
      geometry_ok = false;
      continue;
    }
    if (b.from == b.to) {
      report(Violation::Kind::SelfLoop, tag, "from and to are the same node");
      geometry_ok = false;
      continue;
    }
    const Node& a = tree.node(b.from);
    const Node& c = tree.node(b.to);
    if (a.x != c.x && a.y != c.y) {
      report(Violation::Kind::NotAxisAligned, tag, "endpoints are not axis-aligned");
      geometry_ok = false;
    } else if (a.x == c.x && a.y == c.y) {
      report(Violation::Kind::ZeroLength, tag, "endpoints coincide");
      geometry_ok = false;
    }
    if (b.width < 1) {
      report(Violation::Kind::BadWidth, tag, "width must be >= 1 um");
      geometry_ok = false;
    }
    if (!std::isfinite(b.current_density) || std::abs(b.current_density) > opts.max_current_density) {
      report(Violation::Kind::CurrentTooLarge, tag, "|j| exceeds the configured maximum");
    }
  }

  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::size_t deg = tree.incidence()[i].size();
    const Node& n = nodes[i];
    if (deg == 0 && nodes.size() > 1) {
      report(Violation::Kind::Disconnected, node_tag(n.id), "node has no incident branch");
    } else if (n.kind == NodeKind::Terminal && deg != 1) {
      report(Violation::Kind::NodeKindMismatch, node_tag(n.id), "blocked terminal must have degree 1");
    } else if (n.kind == NodeKind::Junction && deg < 2) {
      report(Violation::Kind::NodeKindMismatch, node_tag(n.id), "interior junction must have degree >= 2");
    }
  }

  DisjointSet ds(nodes.size());
  for (const Branch& b : branches) {
    auto a = tree.node_index(b.from);
    auto c = tree.node_index(b.to);
    if (!a || !c || *a == *c) continue;
    if (!ds.unite(*a, *c)) report(Violation::Kind::Cycle, branch_tag(b.id), "branch closes a cycle");
  }
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    if (ds.find(i) != ds.find(0) && !tree.incidence()[i].empty()) {
      report(Violation::Kind::Disconnected, node_tag(nodes[i].id), "not connected to node " +
                                                                       std::to_string(nodes[0].id));
    }
  }

  if (!geometry_ok) return out;

  for (const Node& n : nodes) {
    if (tree.degree(n.id) < 2) continue;
    const double r = kcl_residual(tree, n, params);
    if (r >= opts.kcl_rel_tol) {
      std::ostringstream msg;
      msg << "current not conserved (relative residual " << r << ")";
      report(Violation::Kind::KclViolation, node_tag(n.id), msg.str());
    }
  }

  std::vector<PixelRect> rects;
  rects.reserve(branches.size());
  for (const Branch& b : branches) {
    rects.push_back(tree.footprint(b));
    if (!rects.back().inside(canvas)) {
      report(Violation::Kind::FootprintOutOfCanvas, branch_tag(b.id), "footprint leaves the 256x256 canvas");
    }
  }
  for (std::size_t i = 0; i < branches.size(); ++i) {
    for (std::size_t k = i + 1; k < branches.size(); ++k) {
      const PixelRect overlap = rects[i].intersect(rects[k]);
      if (overlap.empty()) continue;
      const Branch& p = branches[i];
      const Branch& q = branches[k];
      std::optional<int> shared;
      for (int e : {p.from, p.to}) {
        if (e == q.from || e == q.to) shared = e;
      }
      if (shared && overlap.inside(tree.junction_square(tree.node(*shared)))) continue;
      report(Violation::Kind::Overlap, branch_tag(p.id) + "/" + branch_tag(q.id),
             "footprints overlap outside a shared junction square");
    }
  }
  return out;
}

InterconnectTree mirror_left_right(const InterconnectTree& tree) {
  std::vector<Node> nodes = tree.nodes();
  for (Node& n : nodes) n.x = (kCanvasPixels - 1) - n.x;
  std::vector<Branch> branches = tree.branches();
  for (Branch& b : branches) {
    if (tree.orientation(b) == Orientation::Horizontal) b.current_density = -b.current_density;
  }
  return InterconnectTree(tree.design_id(), std::move(nodes), std::move(branches));
}

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  throw std::runtime_error("EMTREE line " + std::to_string(line) + ": " + what);
}

template <typename T>
T parse_number(const std::string& token, std::size_t line) {
  T value{};
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    parse_error(line, "malformed number '" + token + "'");
  }
  return value;
}

}  // namespace

void write_tree(std::ostream& os, const InterconnectTree& tree) {
  os << "EMTREE v1\n";
  os << "DESIGN " << tree.design_id() << "\n";
  for (const Node& n : tree.nodes()) {
    os << "NODE " << n.id << ' ' << n.x << ' ' << n.y << ' '
       << (n.kind == NodeKind::Junction ? "junction" : "terminal") << "\n";
  }
  for (const Branch& b : tree.branches()) {
    os << "BRANCH " << b.id << ' ' << b.from << ' ' << b.to << ' ' << b.width << ' '
       << format_double(b.current_density) << "\n";
  }
}

std::string serialize_tree(const InterconnectTree& tree) {
  std::ostringstream os;
  write_tree(os, tree);
  return os.str();
}

InterconnectTree read_tree(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::int64_t design_id = 0;
  std::vector<Node> nodes;
  std::vector<Branch> branches;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (!header) {
      if (tok[0] != "EMTREE" || tok.size() != 2) parse_error(lineno, "missing EMTREE header");
      if (tok[1] != "v1") parse_error(lineno, "unsupported EMTREE version '" + tok[1] + "'");
      header = true;
      continue;
    }
    if (tok[0] == "DESIGN" && tok.size() == 2) {
      design_id = parse_number<std::int64_t>(tok[1], lineno);
    } else if (tok[0] == "NODE" && tok.size() == 5) {
      Node n;
      n.id = parse_number<int>(tok[1], lineno);
      n.x = parse_number<int>(tok[2], lineno);
      n.y = parse_number<int>(tok[3], lineno);
      if (tok[4] == "junction") {
        n.kind = NodeKind::Junction;
      } else if (tok[4] == "terminal") {
        n.kind = NodeKind::Terminal;
      } else {
        parse_error(lineno, "unknown node kind '" + tok[4] + "'");
      }
      nodes.push_back(n);
    } else if (tok[0] == "BRANCH" && tok.size() == 6) {
      Branch b;
      b.id = parse_number<int>(tok[1], lineno);
      b.from = parse_number<int>(tok[2], lineno);
      b.to = parse_number<int>(tok[3], lineno);
      b.width = parse_number<int>(tok[4], lineno);
      b.current_density = parse_number<double>(tok[5], lineno);
      branches.push_back(b);
    } else {
      parse_error(lineno, "unrecognised record '" + tok[0] + "'");
    }
  }
  if (!header) throw std::runtime_error("EMTREE: empty input");
  return InterconnectTree(design_id, std::move(nodes), std::move(branches));
}

InterconnectTree parse_tree(const std::string& text) {
  std::istringstream is(text);
  return read_tree(is);
}

InterconnectTree load_tree(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_tree(in);
}

void save_tree(const std::string& path, const InterconnectTree& tree) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_tree(out, tree);
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace emstress
