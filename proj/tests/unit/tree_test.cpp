#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "emstress/tree.hpp"
#include "oracles.hpp"

using namespace emstress;

namespace {

bool has(const std::vector<Violation>& v, Violation::Kind k) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.kind == k; });
}

}  // namespace

TEST_CASE("straight segment is valid for any current") {
  const PhysicalParams p;
  for (double j : {0.0, 5e8, -1e9}) CHECK(validate_tree(oracle::segment(50, j), p).empty());
}

TEST_CASE("T junction KCL") {
  const PhysicalParams p;
  // left arm flows in (+x into the junction), right arm and up arm carry it away
  CHECK(validate_tree(oracle::tee(3e8, 1e8, 2e8), p).empty());
  const auto bad = validate_tree(oracle::tee(3e8, 1e8, 1e8), p);
  REQUIRE(has(bad, Violation::Kind::KclViolation));
  const auto it = std::find_if(bad.begin(), bad.end(), [](auto& v) { return v.kind == Violation::Kind::KclViolation; });
  CHECK(it->subject == "node 1");
  // widths weight the balance: 2 um in, 1 um out each way
  CHECK(validate_tree(oracle::tee(3e8, 2e8, 4e8, 2, 1, 1), p).empty());
  const InterconnectTree t = oracle::tee(3e8, 1e8, 2e8);
  CHECK(kcl_residual(t, t.node(1), p) < 1e-12);
}

TEST_CASE("cycle of four branches") {
  const InterconnectTree loop(0,
                              {{0, 10, 10, NodeKind::Junction},
                               {1, 50, 10, NodeKind::Junction},
                               {2, 50, 50, NodeKind::Junction},
                               {3, 10, 50, NodeKind::Junction}},
                              {{0, 0, 1, 1, 0}, {1, 1, 2, 1, 0}, {2, 2, 3, 1, 0}, {3, 3, 0, 1, 0}});
  CHECK(has(validate_tree(loop, PhysicalParams{}), Violation::Kind::Cycle));
}

TEST_CASE("geometry and bookkeeping violations") {
  const PhysicalParams p;
  SUBCASE("diagonal branch") {
    const InterconnectTree t(0, {{0, 10, 10}, {1, 20, 20}}, {{0, 0, 1, 1, 0}});
    CHECK(has(validate_tree(t, p), Violation::Kind::NotAxisAligned));
  }
  SUBCASE("node outside canvas") {
    const InterconnectTree t(0, {{0, 10, 10}, {1, 300, 10}}, {{0, 0, 1, 1, 0}});
    CHECK(has(validate_tree(t, p), Violation::Kind::NodeOutOfCanvas));
  }
  SUBCASE("current above limit") {
    CHECK(has(validate_tree(oracle::segment(20, 2e9), p), Violation::Kind::CurrentTooLarge));
  }
  SUBCASE("terminal kind on a junction") {
    InterconnectTree t = oracle::tee(3e8, 1e8, 2e8);
    std::vector<Node> nodes = t.nodes();
    nodes[1].kind = NodeKind::Terminal;
    CHECK(has(validate_tree(InterconnectTree(0, nodes, t.branches()), p), Violation::Kind::NodeKindMismatch));
  }
  SUBCASE("disconnected") {
    const InterconnectTree t(0, {{0, 10, 10}, {1, 30, 10}, {2, 10, 40}, {3, 30, 40}},
                             {{0, 0, 1, 1, 0}, {1, 2, 3, 1, 0}});
    CHECK(has(validate_tree(t, p), Violation::Kind::Disconnected));
  }
  SUBCASE("crossing wires") {
    const InterconnectTree t(0, {{0, 10, 30}, {1, 50, 30}, {2, 30, 10}, {3, 30, 50}},
                             {{0, 0, 1, 1, 0}, {1, 2, 3, 1, 0}});
    CHECK(has(validate_tree(t, p), Violation::Kind::Overlap));
  }
  SUBCASE("wide wire leaving the canvas") {
    CHECK(has(validate_tree(oracle::segment(20, 0, 4, 10, 0), p), Violation::Kind::FootprintOutOfCanvas));
  }
}

TEST_CASE("low and high node follow the axis") {
  const InterconnectTree t(0, {{0, 80, 10}, {1, 20, 10}}, {{0, 0, 1, 1, 0}});
  CHECK(t.low_node(t.branch(0)).id == 1);
  CHECK(t.high_node(t.branch(0)).id == 0);
  CHECK(t.length_um(t.branch(0)) == 60);
}

TEST_CASE("EMTREE round trip and version check") {
  const InterconnectTree t = oracle::tee(3e8, 1.234567890123e8, 1.765432109877e8, 2, 1, 3);
  const std::string text = serialize_tree(t);
  CHECK(text.rfind("EMTREE v1", 0) == 0);
  const InterconnectTree back = parse_tree(text);
  CHECK(serialize_tree(back) == text);
  CHECK(back.branches()[1].current_density == t.branches()[1].current_density);
  std::string v2 = text;
  v2.replace(0, 9, "EMTREE v2");
  CHECK_THROWS(parse_tree(v2));
}

TEST_CASE("mirror flips horizontal current only") {
  const InterconnectTree t = oracle::tee(3e8, 1e8, 2e8);
  const InterconnectTree m = mirror_left_right(t);
  CHECK(m.node(0).x == 255 - 40);
  CHECK(m.branch(0).current_density == -3e8);
  CHECK(m.branch(2).current_density == 2e8);
  CHECK(validate_tree(m, PhysicalParams{}).empty());
}
