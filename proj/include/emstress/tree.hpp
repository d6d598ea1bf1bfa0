#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "emstress/physics.hpp"

namespace emstress {

inline constexpr int kCanvasPixels = 256;
inline constexpr double kDefaultMaxCurrentDensity = 1e9;

enum class NodeKind { Junction, Terminal };
enum class Orientation { Horizontal, Vertical };

// Node positions are integer micrometres on the canvas; one pixel is 1 um.
struct Node {
  int id = 0;
  int x = 0;
  int y = 0;
  NodeKind kind = NodeKind::Terminal;
};

struct Branch {
  int id = 0;
  int from = 0;
  int to = 0;
  int width = 1;                 // um (= pixels)
  double current_density = 0.0;  // A/m^2, positive toward +x / +y
};

// Integer pixel rectangle, inclusive bounds.
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = -1;
  int y1 = -1;

  bool empty() const { return x1 < x0 || y1 < y0; }
  bool contains(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  PixelRect intersect(const PixelRect& o) const;
  PixelRect grown(int margin) const { return {x0 - margin, y0 - margin, x1 + margin, y1 + margin}; }
  bool inside(const PixelRect& o) const {
    return empty() || (x0 >= o.x0 && y0 >= o.y0 && x1 <= o.x1 && y1 <= o.y1);
  }
};

// Offset of the first pixel row (or column) of a wire of the given width,
// relative to the node coordinate. Widths are centred, odd extra pixel on the high side.
inline int width_offset(int width) { return (width - 1) / 2; }

class InterconnectTree {
 public:
  InterconnectTree() = default;
  InterconnectTree(std::int64_t design_id, std::vector<Node> nodes, std::vector<Branch> branches);

  std::int64_t design_id() const { return design_id_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Branch>& branches() const { return branches_; }

  // Index into nodes()/branches() by id; nullopt if absent.
  std::optional<std::size_t> node_index(int id) const;
  std::optional<std::size_t> branch_index(int id) const;
  const Node& node(int id) const;
  const Branch& branch(int id) const;

  // Low/high end of a branch along its axis (x_i < x_j).
  const Node& low_node(const Branch& b) const;
  const Node& high_node(const Branch& b) const;
  Orientation orientation(const Branch& b) const;
  int length_um(const Branch& b) const;

  // Branch indices incident to each node index.
  const std::vector<std::vector<std::size_t>>& incidence() const { return incidence_; }
  std::size_t degree(int node_id) const;

  PixelRect footprint(const Branch& b) const;
  // Square around a node with side equal to the widest incident branch.
  PixelRect junction_square(const Node& n) const;

 private:
  std::int64_t design_id_ = 0;
  std::vector<Node> nodes_;
  std::vector<Branch> branches_;
  std::vector<std::vector<std::size_t>> incidence_;
};

struct Violation {
  enum class Kind {
    NodeOutOfCanvas,
    FootprintOutOfCanvas,
    DuplicateId,
    UnknownNode,
    SelfLoop,
    NotAxisAligned,
    ZeroLength,
    BadWidth,
    CurrentTooLarge,
    NodeKindMismatch,
    Disconnected,
    Cycle,
    KclViolation,
    Overlap,
  };
  Kind kind;
  std::string subject;  // e.g. "node 3" or "branch 7/branch 9"
  std::string message;
};

std::string to_string(Violation::Kind kind);

struct ValidationOptions {
  double max_current_density = kDefaultMaxCurrentDensity;
  double kcl_rel_tol = 1e-6;
};

// Returns every invariant violation found; empty means the tree is valid.
std::vector<Violation> validate_tree(const InterconnectTree& tree, const PhysicalParams& params,
                                     const ValidationOptions& opts = {});

// Relative KCL residual at a node: |sum of signed outgoing currents| over the
// largest incident |w t j|. Zero when no current flows.
double kcl_residual(const InterconnectTree& tree, const Node& node, const PhysicalParams& params);

// Left-right mirror about the canvas centre. Horizontal currents change sign,
// vertical currents keep theirs.
InterconnectTree mirror_left_right(const InterconnectTree& tree);

// EMTREE v1 text format.
void write_tree(std::ostream& os, const InterconnectTree& tree);
std::string serialize_tree(const InterconnectTree& tree);
InterconnectTree read_tree(std::istream& is);
InterconnectTree parse_tree(const std::string& text);
InterconnectTree load_tree(const std::string& path);
void save_tree(const std::string& path, const InterconnectTree& tree);

}  // namespace emstress
