#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

using namespace mfnav;
using testutil::obs_of;

namespace {

SemanticMapConfig small_cfg() { return {32, 32, 0.3, 3}; }

long count_channel(const SemanticMap& m, int ch) {
  long n = 0;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) n += m.channel(ch, {x, y}) > 0.0f;
  return n;
}

}  // namespace

TEST(SemanticMap, ChannelLayout) {
  const SemanticMap m(6, {0, 0}, small_cfg());
  EXPECT_EQ(m.channel_count(), 11);
  EXPECT_EQ(m.stair_channel(), 10);
  EXPECT_THROW(m.channel(11, {0, 0}), std::out_of_range);
  EXPECT_THROW(SemanticMap(0, {0, 0}), std::invalid_argument);
}

TEST(SemanticMap, StartCellIsCenterAndExploredAfterIntegrate) {
  SemanticMap m(2, {10, 20}, small_cfg());
  EXPECT_EQ(m.to_map({10, 20}), m.center());
  EXPECT_EQ(m.to_world(m.center()), (Cell{10, 20}));
  m.integrate(obs_of({10, 20}, {{10, 19}, {10, 18}, {11, 19}, {9, 19}, {10, 17}}));
  EXPECT_EQ(m.explored_count(), 6);  // five cells plus the agent cell
  EXPECT_EQ(count_channel(m, SemanticMap::kPosition), 1);
}

TEST(SemanticMap, IntegrateIsIdempotent) {
  SemanticMap m(2, {0, 0}, small_cfg());
  const auto o = obs_of({0, 0}, {{0, -1}, {0, -2}}, {{0, -3}});
  m.integrate(o);
  const long n = m.explored_count();
  m.integrate(o);
  EXPECT_EQ(m.explored_count(), n);
  EXPECT_TRUE(m.obstacle(m.to_map({0, -3})));
  EXPECT_FALSE(m.obstacle(m.to_map({0, -2})));
}

TEST(SemanticMap, StairCellsSetStairChannelAndPresence) {
  SemanticMap m(2, {0, 0}, small_cfg());
  Observation o = obs_of({0, 0}, {});
  for (int x = 1; x <= 2; ++x) o.visible.push_back({{x, 0}, false, std::nullopt, 0.0, true});
  m.integrate(o);
  EXPECT_EQ(m.stair_count(), 2);
  EXPECT_FALSE(m.stair_present());
  o.visible.push_back({{3, 0}, false, std::nullopt, 0.0, true});
  m.integrate(o);
  EXPECT_TRUE(m.stair_present());
  EXPECT_EQ(m.channel(m.stair_channel(), m.to_map({3, 0})), 1.0f);
}

TEST(SemanticMap, OutOfBoundsCellsAreDroppedAndCounted) {
  SemanticMap m(2, {0, 0}, small_cfg());
  m.integrate(obs_of({0, 0}, {{100, 0}, {0, -100}, {1, 0}}));
  EXPECT_EQ(m.dropped_count(), 2);
  EXPECT_EQ(m.explored_count(), 2);
  EXPECT_THROW(m.integrate(obs_of({200, 0}, {})), std::out_of_range);
}

TEST(SemanticMap, LabelsBelowRecordingFloorIgnored) {
  SemanticMap m(3, {0, 0}, small_cfg());
  Observation o = obs_of({0, 0}, {});
  o.visible.push_back({{1, 0}, false, 2, 0.25, false});
  o.visible.push_back({{2, 0}, false, 1, 0.8, false});
  o.visible.push_back({{2, 0}, false, 1, 0.5, false});
  m.integrate(o);
  EXPECT_FALSE(m.labeled(2, m.to_map({1, 0})));
  EXPECT_FLOAT_EQ(m.confidence(1, m.to_map({2, 0})), 0.8f);
}

TEST(SemanticMap, ResetClearsEverythingAndReanchors) {
  SemanticMap m(2, {0, 0}, small_cfg());
  Observation o = obs_of({0, 0}, {{1, 0}, {2, 0}}, {{3, 0}});
  o.visible.push_back({{0, 1}, false, 1, 0.9, true});
  m.integrate(o);
  m.seal({m.to_map({0, -1})});
  m.reset({5, 5});
  for (int ch = 0; ch < m.channel_count(); ++ch) {
    const long want = (ch == SemanticMap::kPosition || ch == SemanticMap::kHistory) ? 1 : 0;
    EXPECT_EQ(count_channel(m, ch), want) << "channel " << ch;
  }
  EXPECT_EQ(m.explored_count(), 0);
  EXPECT_EQ(m.stair_count(), 0);
  EXPECT_TRUE(m.explored_bounds().empty());
  EXPECT_EQ(m.to_map({5, 5}), m.center());
}

TEST(SemanticMap, ResetThenIntegrateEqualsFresh) {
  const auto o = obs_of({5, 5}, {{5, 4}, {5, 3}, {6, 4}}, {{4, 4}});
  SemanticMap a(2, {0, 0}, small_cfg());
  a.integrate(obs_of({0, 0}, {{0, 1}, {0, 2}}));
  a.reset({5, 5});
  a.integrate(o);
  SemanticMap b(2, {5, 5}, small_cfg());
  b.integrate(o);
  for (int ch = 0; ch < a.channel_count(); ++ch)
    for (int y = 0; y < a.height(); ++y)
      for (int x = 0; x < a.width(); ++x) ASSERT_EQ(a.channel(ch, {x, y}), b.channel(ch, {x, y}));
  EXPECT_EQ(a.explored_count(), b.explored_count());
}

TEST(SemanticMap, SealedCellsStayObstaclesUntilReset) {
  SemanticMap m(2, {0, 0}, small_cfg());
  m.integrate(obs_of({0, 0}, {{1, 0}}));
  m.seal({m.to_map({1, 0})});
  m.integrate(obs_of({0, 0}, {{1, 0}}));
  EXPECT_TRUE(m.obstacle(m.to_map({1, 0})));
  EXPECT_TRUE(m.sealed(m.to_map({1, 0})));
}

TEST(SemanticMap, InvariantsAlongRandomWalk) {
  SceneGenParams p;
  p.object_density = 0.05;
  const Scene s = generate_scene(p, 31);
  EpisodeSpec e = sample_episode(s, {}, 3);
  AgentState a = e.initial_state();
  SemanticMap m(s.category_count(), a.cell, {128, 128, 0.3, 3});
  std::mt19937_64 rng(5);
  NoiseModel noise{0.2};
  long last_explored = 0;
  Grid<std::uint8_t> seen_pos(128, 128, 0);
  for (int t = 0; t < 300 && !a.terminated; ++t) {
    const auto obs = observe(s, a, noise, rng);
    m.integrate(obs);
    seen_pos[m.agent_cell()] = 1;
    ASSERT_GE(m.explored_count(), last_explored);
    last_explored = m.explored_count();
    ASSERT_EQ(count_channel(m, SemanticMap::kPosition), 1);
    const Action act = std::array{Action::MoveForward, Action::MoveForward, Action::TurnLeft, Action::TurnRight}[rng() % 4];
    step(s, a, act, 1000);
  }
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) {
      const Cell c{x, y};
      // History covers every visited cell; labels live on explored cells only.
      if (seen_pos[c]) EXPECT_TRUE(m.visited(c));
      for (int k = 0; k < m.category_count(); ++k)
        if (m.labeled(k, c)) EXPECT_TRUE(m.explored(c));
      if (m.stair(c)) EXPECT_TRUE(m.explored(c));
    }
}
