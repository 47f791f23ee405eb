#include <gtest/gtest.h>

#include <set>

#include "test_util.hpp"

using namespace mfnav;

namespace {

/// Map with every listed cell observed: '#' obstacle, 'S' stair, '.' free,
/// '?' left unexplored. The map is anchored on `agent` (world frame).
SemanticMap build(const std::vector<std::string>& rows, Cell agent, int r_cells = 64) {
  SemanticMap m(2, agent, {r_cells, r_cells, 0.3, 3});
  Observation o;
  o.cell = agent;
  for (int y = 0; y < int(rows.size()); ++y)
    for (int x = 0; x < int(rows[std::size_t(y)].size()); ++x) {
      const char ch = rows[std::size_t(y)][std::size_t(x)];
      if (ch == '?') continue;
      o.visible.push_back({{x, y}, ch == '#', std::nullopt, 0.0, ch == 'S'});
    }
  m.integrate(o);
  return m;
}

void move_to(SemanticMap& m, Cell world) { m.integrate(testutil::obs_of(world, {})); }

const std::vector<std::string> kHall = {
    "###########",
    "#.........#",
    "#.........#",
    "#..SSSSSS.#",
    "#.........#",
    "###########",
};

}  // namespace

TEST(Activate, RoutesToNearestStairCell) {
  SemanticMap m = build(kHall, {1, 3});
  InterfloorState st;
  ASSERT_EQ(activate(m, st, 160), ActivationResult::Activated);
  EXPECT_EQ(st.phase, Phase::RoutingToStairs);
  EXPECT_EQ(m.to_world(st.stair_goal), (Cell{3, 3}));
  EXPECT_EQ(st.deadline, 360);

  // Exhaustive check against the arrival field.
  const Cell a = m.agent_cell();
  const auto f = solve_fmm(m, std::span<const Cell>(&a, 1), {false, true});
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.stair({x, y})) EXPECT_LE(f[st.stair_goal], (f[{x, y}]));
}

TEST(Activate, FarAgentPicksFacingEnd) {
  SemanticMap m = build(kHall, {9, 1});
  InterfloorState st;
  ASSERT_EQ(activate(m, st, 200), ActivationResult::Activated);
  EXPECT_EQ(m.to_world(st.stair_goal), (Cell{8, 3}));
}

TEST(Activate, WalledOffStairsAbortWithCooldown) {
  SemanticMap m = build({
                            "#########",
                            "#...#SSS#",
                            "#...#####",
                        },
                        {1, 1});
  InterfloorState st;
  EXPECT_EQ(activate(m, st, 170), ActivationResult::Aborted);
  EXPECT_EQ(st.phase, Phase::Inactive);
  EXPECT_EQ(st.cooldown_until, 220);
  EXPECT_FALSE(st.mfnp_allowed(219));
  EXPECT_TRUE(st.mfnp_allowed(220));
  EXPECT_EQ(activate(m, st, 200), ActivationResult::Refused);
}

TEST(Activate, RefusedWhenActiveOrNoStairs) {
  SemanticMap m = build(kHall, {1, 3});
  InterfloorState st;
  ASSERT_EQ(activate(m, st, 160), ActivationResult::Activated);
  EXPECT_EQ(activate(m, st, 161), ActivationResult::Refused);
  SemanticMap plain = build({"#####", "#...#", "#####"}, {1, 1});
  InterfloorState s2;
  EXPECT_EQ(activate(plain, s2, 160), ActivationResult::Refused);
}

TEST(Seal, StraightCorridorSealsAroundEntry) {
  SemanticMap m = build(kHall, {1, 3});
  InterfloorState st;
  ASSERT_EQ(activate(m, st, 160), ActivationResult::Activated);
  move_to(m, {2, 3});
  EXPECT_EQ(tick(m, st, 161).kind, Directive::Kind::NavigateTo);
  move_to(m, {3, 3});
  const auto d = tick(m, st, 162);
  ASSERT_TRUE(st.entry_cell.has_value());
  EXPECT_EQ(m.to_world(*st.entry_cell), (Cell{3, 3}));
  EXPECT_EQ(d.kind, Directive::Kind::NavigateTo);
  EXPECT_EQ(m.to_world(d.target), (Cell{8, 3}));
  EXPECT_TRUE(st.entrance_cells.empty());

  move_to(m, {4, 3});
  tick(m, st, 163);
  ASSERT_EQ(st.phase, Phase::Traversing);
  std::set<Cell> sealed;
  for (Cell c : st.entrance_cells) sealed.insert(m.to_world(c));
  std::set<Cell> want;
  for (int y = 1; y <= 5; ++y)
    for (int x = 1; x <= 5; ++x)
      if (!(y == 3 && (x == 4 || x == 5))) want.insert({x, y});
  EXPECT_EQ(sealed, want);
  for (Cell c : st.entrance_cells) EXPECT_TRUE(m.obstacle(c));
  EXPECT_EQ(m.to_world(*st.exit_waypoint), (Cell{8, 3}));

  const Cell a = m.agent_cell();
  const auto f = solve_fmm(m, std::span<const Cell>(&a, 1), {false, true});
  EXPECT_TRUE(std::isinf(f[*st.entry_cell]));
  EXPECT_TRUE(has_free_neighbor(m, a, {}));
}

TEST(Seal, ZeroRadiusSealsOnlyEntry) {
  SemanticMap m = build(kHall, {3, 3});
  InterfloorConfig cfg;
  cfg.seal_radius = 0;
  InterfloorState st;
  ASSERT_EQ(activate(m, st, 160, cfg), ActivationResult::Activated);
  tick(m, st, 160, cfg);
  move_to(m, {4, 3});
  tick(m, st, 161, cfg);
  ASSERT_EQ(st.entrance_cells.size(), 1u);
  EXPECT_EQ(m.to_world(st.entrance_cells[0]), (Cell{3, 3}));
}

TEST(Seal, RadiusShrinksToKeepAFreeNeighbor) {
  SemanticMap m = build(
      {
          "########",
          "#.#####.",
          "#.SS...#",
          "#.#####.",
          "########",
      },
      {1, 2});
  InterfloorState st;
  ASSERT_EQ(activate(m, st, 160), ActivationResult::Activated);
  move_to(m, {2, 2});
  tick(m, st, 161);
  move_to(m, {3, 2});
  tick(m, st, 162);
  ASSERT_EQ(st.phase, Phase::Traversing);
  for (Cell c : st.entrance_cells) EXPECT_LE(chebyshev(m.to_world(c), {2, 2}), 1);
  EXPECT_TRUE(has_free_neighbor(m, m.agent_cell(), {}));
  EXPECT_FALSE(m.obstacle(m.to_map({4, 2})));
}

TEST(Seal, EnclosedAgentForcesReset) {
  SemanticMap m = build(
      {
          "#####",
          "#.SS#",
          "#####",
      },
      {1, 1});
  InterfloorState st;
  ASSERT_EQ(activate(m, st, 160), ActivationResult::Activated);
  move_to(m, {2, 1});
  tick(m, st, 161);
  move_to(m, {3, 1});
  EXPECT_EQ(tick(m, st, 162).kind, Directive::Kind::Reset);
  EXPECT_EQ(st.phase, Phase::Inactive);
  EXPECT_EQ(st.cooldown_until, 262);
}

TEST(Seal, RequiresAgentOnStairs) {
  SemanticMap m = build(kHall, {1, 3});
  InterfloorState st;
  EXPECT_THROW(seal_entrance(m, st), std::logic_error);
}

TEST(Tick, InactiveIsNoOp) {
  SemanticMap m = build(kHall, {1, 3});
  const long explored = m.explored_count();
  InterfloorState st;
  EXPECT_EQ(tick(m, st, 10).kind, Directive::Kind::None);
  EXPECT_EQ(m.explored_count(), explored);
}

TEST(Tick, ExitThenSettleThenReset) {
  SemanticMap m = build(kHall, {3, 3});
  InterfloorState st;
  ASSERT_EQ(activate(m, st, 160), ActivationResult::Activated);
  tick(m, st, 160);
  move_to(m, {4, 3});
  tick(m, st, 161);
  ASSERT_EQ(st.phase, Phase::Traversing);
  int t = 162;
  for (int x = 5; x <= 8; ++x, ++t) {
    EXPECT_EQ(tick(m, st, t).kind, Directive::Kind::NavigateTo);
    move_to(m, {x, 3});
  }
  EXPECT_EQ(tick(m, st, t).kind, Directive::Kind::LookAround);
  EXPECT_EQ(st.phase, Phase::Settling);
  const int settle_start = t;
  for (++t; t < settle_start + 10; ++t) EXPECT_EQ(tick(m, st, t).kind, Directive::Kind::LookAround);
  EXPECT_EQ(tick(m, st, t).kind, Directive::Kind::Reset);
  EXPECT_EQ(st.phase, Phase::Inactive);
  EXPECT_EQ(st.cooldown_until, t + 100);
  EXPECT_EQ(m.explored_count(), 0);
  EXPECT_EQ(m.to_world(m.agent_cell()), (Cell{8, 3}));
  EXPECT_TRUE(st.entrance_cells.empty());
}

TEST(Tick, DeadlineForcesResetMidTraversal) {
  SemanticMap m = build(kHall, {3, 3});
  InterfloorState st;
  ASSERT_EQ(activate(m, st, 0), ActivationResult::Activated);
  tick(m, st, 1);
  move_to(m, {4, 3});
  tick(m, st, 2);
  ASSERT_EQ(st.phase, Phase::Traversing);
  EXPECT_EQ(tick(m, st, 199).kind, Directive::Kind::NavigateTo);
  EXPECT_EQ(tick(m, st, 200).kind, Directive::Kind::Reset);
  EXPECT_EQ(st.phase, Phase::Inactive);
  EXPECT_EQ(m.explored_count(), 0);
  EXPECT_EQ(st.cooldown_until, 300);
}

TEST(FarthestStair, BfsAlongBlob) {
  SemanticMap m = build(
      {
          "......",
          ".SSS..",
          "...S..",
          "...S..",
      },
      {0, 0});
  EXPECT_EQ(m.to_world(farthest_stair_cell(m, m.to_map({1, 1}))), (Cell{3, 3}));
  EXPECT_EQ(m.to_world(farthest_stair_cell(m, m.to_map({3, 3}))), (Cell{1, 1}));
}
