#include <gtest/gtest.h>

#include <cstdlib>
#include <deque>
#include <mutex>
#include <random>
#include <thread>

#include <httplib.h>

#include "test_util.hpp"

using namespace mfnav;

TEST(Fusion, Examples) {
  EXPECT_EQ(fuse_detection(0.8, 0.6, 0.5), 0.7);
  EXPECT_EQ(fuse_detection(0.8, 0.6, 1.0), 0.8);
  EXPECT_EQ(fuse_detection(0.8, 0.6, 0.0), 0.6);
}

TEST(Fusion, DomainErrors) {
  EXPECT_THROW(fuse_detection(1.1, 0.5, 0.5), std::domain_error);
  EXPECT_THROW(fuse_detection(0.5, -0.1, 0.5), std::domain_error);
  EXPECT_THROW(fuse_detection(0.5, 0.5, 2.0), std::domain_error);
}

TEST(Fusion, BoundedByInputs) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100000; ++i) {
    const double s = u(rng), v = u(rng), b = u(rng);
    const double c = fuse_detection(s, v, b);
    ASSERT_GE(c, std::min(s, v));
    ASSERT_LE(c, std::max(s, v));
  }
}

TEST(StubVlm, ReliabilityAnswers) {
  const Scene s = testutil::two_floor_scene({{2, 0, {3, 3}}});
  EXPECT_EQ(stub_vlm_check(s, 0, {3, 3}, 2, 0.9), 0.9);
  EXPECT_DOUBLE_EQ(stub_vlm_check(s, 0, {3, 3}, 1, 0.9), 0.1);
  EXPECT_DOUBLE_EQ(stub_vlm_check(s, 1, {3, 3}, 2, 0.9), 0.1);
  // At rho = 0.5 the check carries no information.
  EXPECT_EQ(fuse_detection(0.7, stub_vlm_check(s, 0, {3, 3}, 2, 0.5), 0.6), 0.6 * 0.7 + 0.5 * 0.4);
  EXPECT_EQ(fuse_detection(0.7, stub_vlm_check(s, 0, {3, 3}, 1, 0.5), 0.6), 0.6 * 0.7 + 0.5 * 0.4);
}

namespace {

std::vector<CandidateWaypoint> make_candidates(const std::vector<std::tuple<Cell, double, double, double>>& spec) {
  std::vector<CandidateWaypoint> out;
  for (const auto& [cell, sc, dist, ratio] : spec) {
    CandidateWaypoint c;
    c.cell = cell;
    c.score = sc;
    c.distance = dist;
    c.explored_ratio = ratio;
    out.push_back(c);
  }
  std::sort(out.begin(), out.end(), ranks_before);
  return out;
}

/// Returns the same ranking every time.
class FixedAdvisor final : public Advisor {
 public:
  explicit FixedAdvisor(std::vector<std::size_t> order) : order_(std::move(order)) {}
  AdvisorScoreSet rank_waypoints(const WaypointQuery&) override {
    AdvisorScoreSet s;
    s.provenance = Provenance::Remote;
    double v = 1.0;
    for (auto i : order_) s.ranked.push_back({i, v -= 0.1});
    return s;
  }
  double multifloor_probability(const MultifloorQuery&) override { return 0.5; }
  Provenance provenance() const override { return Provenance::Remote; }

 private:
  std::vector<std::size_t> order_;
};

class FailingAdvisor final : public Advisor {
 public:
  AdvisorScoreSet rank_waypoints(const WaypointQuery&) override { throw AdvisorError("down"); }
  double multifloor_probability(const MultifloorQuery&) override { throw AdvisorError("down"); }
  Provenance provenance() const override { return Provenance::Remote; }
};

}  // namespace

TEST(SelectWaypoint, Singleton) {
  const auto c = make_candidates({{{1, 1}, 3.0, 2.0, 0.5}});
  StubAdvisor stub;
  RepeatDetector rep;
  EXPECT_EQ(select_waypoint(c, "bed", 0, &stub, rep, {0, 0}).index, 0u);
}

TEST(SelectWaypoint, MostlyExploredTopIsSkipped) {
  const auto c = make_candidates({{{1, 1}, 9.0, 2.0, 0.95}, {{5, 5}, 3.0, 2.0, 0.3}});
  StubAdvisor stub;
  RepeatDetector rep;
  const auto sel = select_waypoint(c, "bed", 0, &stub, rep, {0, 0});
  EXPECT_EQ(c[sel.index].cell, (Cell{5, 5}));
  EXPECT_FALSE(sel.all_excluded);
}

TEST(SelectWaypoint, AllExcludedReturnsTopRanked) {
  const auto c = make_candidates({{{1, 1}, 9.0, 2.0, 0.95}, {{5, 5}, 3.0, 2.0, 0.99}});
  StubAdvisor stub;
  RepeatDetector rep;
  const auto sel = select_waypoint(c, "bed", 0, &stub, rep, {0, 0});
  EXPECT_TRUE(sel.all_excluded);
  EXPECT_EQ(c[sel.index].cell, (Cell{1, 1}));
}

TEST(SelectWaypoint, UnreachableSkipped) {
  const auto c = make_candidates({{{1, 1}, 9.0, 2.0, 0.2}, {{5, 5}, 3.0, 2.0, 0.2}});
  auto mod = c;
  mod[0].distance = kInf;
  FixedAdvisor adv({0, 1});
  RepeatDetector rep;
  EXPECT_EQ(select_waypoint(mod, "bed", 0, &adv, rep, {0, 0}).index, 1u);
}

TEST(SelectWaypoint, RepeatedPickWithoutProgressTriggersFreeExplore) {
  // Advisor insists on the far candidate; the near one is at distance 1.
  const auto c = make_candidates({{{9, 9}, 9.0, 12.0, 0.2}, {{1, 0}, 1.0, 1.0, 0.2}});
  FixedAdvisor adv({0, 1});
  RepeatDetector rep;
  const SelectionParams p;
  EXPECT_FALSE(select_waypoint(c, "bed", 0, &adv, rep, {0, 0}, p).free_explore);
  EXPECT_FALSE(select_waypoint(c, "bed", 1, &adv, rep, {0, 0}, p).free_explore);
  const auto third = select_waypoint(c, "bed", 2, &adv, rep, {0, 1}, p);
  EXPECT_TRUE(third.free_explore);
  EXPECT_EQ(c[third.index].cell, (Cell{1, 0}));
  for (int k = 0; k < 20; ++k) {
    const auto sel = select_waypoint(c, "bed", 3 + k, &adv, rep, {0, 0}, p);
    EXPECT_TRUE(sel.free_explore) << k;
    EXPECT_EQ(c[sel.index].cell, (Cell{1, 0}));
    rep.tick();
  }
  EXPECT_FALSE(select_waypoint(c, "bed", 30, &adv, rep, {0, 0}, p).free_explore);
}

TEST(SelectWaypoint, MovingAgentDoesNotTriggerFreeExplore) {
  const auto c = make_candidates({{{9, 9}, 9.0, 12.0, 0.2}, {{1, 0}, 1.0, 1.0, 0.2}});
  FixedAdvisor adv({0, 1});
  RepeatDetector rep;
  for (int k = 0; k < 6; ++k) EXPECT_FALSE(select_waypoint(c, "bed", k, &adv, rep, {3 * k, 0}).free_explore);
}

TEST(SelectWaypoint, AdvisorFailureFallsBackToBestScore) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 30.0);
  FailingAdvisor adv;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::tuple<Cell, double, double, double>> spec;
    const int n = 1 + int(rng() % 8);
    for (int i = 0; i < n; ++i) spec.push_back({{i, int(rng() % 5)}, u(rng), u(rng), 0.5});
    const auto c = make_candidates(spec);
    RepeatDetector rep;
    const auto sel = select_waypoint(c, "bed", 0, &adv, rep, {100, 100});
    EXPECT_TRUE(sel.advisor_failed);
    EXPECT_EQ(sel.scores.provenance, Provenance::Fallback);
    double best = -kInf;
    for (const auto& s : spec) best = std::max(best, std::get<1>(s));
    EXPECT_EQ(c[sel.index].score, best);
  }
}

TEST(StubAdvisor, RescalesScoresBestFirst) {
  const auto c = make_candidates({{{1, 1}, 2.0, 1.0, 0.5}, {{2, 2}, 6.0, 1.0, 0.5}, {{3, 3}, 4.0, 1.0, 0.5}});
  StubAdvisor stub;
  const auto g = stub.rank_waypoints({c, "bed", 0});
  ASSERT_EQ(g.ranked.size(), 3u);
  EXPECT_EQ(g.ranked[0].score, 1.0);
  EXPECT_EQ(g.ranked[1].score, 0.5);
  EXPECT_EQ(g.ranked[2].score, 0.0);
  EXPECT_EQ(c[g.ranked[0].candidate].cell, (Cell{2, 2}));
  const auto again = stub.rank_waypoints({c, "bed", 0});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(again.ranked[i].candidate, g.ranked[i].candidate);
}

TEST(StubAdvisor, MultifloorProbability) {
  StubAdvisor stub;
  MultifloorQuery q;
  q.total_categories = 4;
  q.seen_categories = {"bed", "chair"};
  q.area_growth = 0.2;
  EXPECT_DOUBLE_EQ(stub.multifloor_probability(q), 0.5 * 0.5 + 0.5 * 0.8);
}

TEST(Parse, Probability) {
  EXPECT_EQ(parse_probability("0.85"), 0.85);
  EXPECT_EQ(parse_probability(" 1 \n"), 1.0);
  EXPECT_EQ(parse_probability("0"), 0.0);
  EXPECT_FALSE(parse_probability("maybe"));
  EXPECT_FALSE(parse_probability("1.5"));
  EXPECT_FALSE(parse_probability("0.5 probably"));
  EXPECT_FALSE(parse_probability("-0.1"));
  EXPECT_FALSE(parse_probability("."));
}

TEST(Parse, Ranking) {
  EXPECT_EQ(parse_ranking("3,1,2", 3), (std::vector<int>{3, 1, 2}));
  EXPECT_EQ(parse_ranking(" 2 , 1 ", 3), (std::vector<int>{2, 1}));
  EXPECT_FALSE(parse_ranking("maybe", 3));
  EXPECT_FALSE(parse_ranking("1,1", 3));
  EXPECT_FALSE(parse_ranking("4", 3));
  EXPECT_FALSE(parse_ranking("1,", 3));
  EXPECT_FALSE(parse_ranking("0", 3));
}

TEST(Parse, RankingToScoreSet) {
  const auto s = score_set_from_ranking({3, 1}, 4);
  ASSERT_EQ(s.ranked.size(), 4u);
  EXPECT_EQ(s.ranked[0].candidate, 2u);
  EXPECT_EQ(s.ranked[0].score, 1.0);
  EXPECT_EQ(s.ranked[1].candidate, 0u);
  EXPECT_EQ(s.ranked[1].score, 0.75);
  EXPECT_EQ(s.ranked[2].score, 0.0);
}

TEST(Prompts, MultifloorTemplate) {
  MultifloorQuery q;
  q.timestep = 210;
  q.max_steps = 500;
  q.seen_categories = {"bed", "chair"};
  q.total_categories = 6;
  q.delta_t = 50;
  q.area_growth = 0.127;
  EXPECT_EQ(render_multifloor_prompt(q),
            "Your task has a time limit of 500 timesteps, and the current timestep is 210. On the present floor, "
            "you have identified objects bed, chair out of a total of 6 object types. In the past 50 timesteps, the "
            "proportion of newly explored area is 0.13. Answer with a single number between 0 and 1.");
}

namespace {

/// Local chat-completions endpoint that replays canned replies.
class FakeEndpoint {
 public:
  explicit FakeEndpoint(std::deque<std::string> replies) : replies_(std::move(replies)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard<std::mutex> lock(mu_);
      requests_.push_back(nlohmann::json::parse(req.body));
      auth_ = req.get_header_value("Authorization");
      if (replies_.empty()) {
        res.status = 500;
        return;
      }
      const std::string reply = replies_.front();
      replies_.pop_front();
      res.set_content(nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", reply}}}}}}}.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  EndpointConfig endpoint() const {
    EndpointConfig e;
    e.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    e.model = "test-model";
    e.api_key_env = "MFNAV_TEST_KEY";
    e.timeout_ms = 5000;
    return e;
  }
  std::vector<nlohmann::json> requests() {
    std::lock_guard<std::mutex> lock(mu_);
    return requests_;
  }
  std::string auth() {
    std::lock_guard<std::mutex> lock(mu_);
    return auth_;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::mutex mu_;
  std::deque<std::string> replies_;
  std::vector<nlohmann::json> requests_;
  std::string auth_;
};

}  // namespace

TEST(RemoteAdvisor, ParsesProbabilityReply) {
  FakeEndpoint fake({"0.85"});
  ::setenv("MFNAV_TEST_KEY", "secret", 1);
  RemoteAdvisor adv(std::make_shared<HttpChatTransport>(fake.endpoint()));
  MultifloorQuery q;
  q.total_categories = 3;
  EXPECT_EQ(adv.multifloor_probability(q), 0.85);
  const auto reqs = fake.requests();
  ASSERT_EQ(reqs.size(), 1u);
  EXPECT_EQ(reqs[0]["model"], "test-model");
  EXPECT_EQ(reqs[0]["messages"][1]["content"], render_multifloor_prompt(q));
  EXPECT_EQ(fake.auth(), "Bearer secret");
  EXPECT_NE(adv.last_transcript().find("0.85"), std::string::npos);
}

TEST(RemoteAdvisor, ParsesRankingReply) {
  FakeEndpoint fake({"3,1,2"});
  RemoteAdvisor adv(std::make_shared<HttpChatTransport>(fake.endpoint()));
  const auto c = make_candidates({{{1, 1}, 3.0, 1.0, 0.2}, {{2, 2}, 2.0, 1.0, 0.2}, {{3, 3}, 1.0, 1.0, 0.2}});
  const auto g = adv.rank_waypoints({c, "bed", 5});
  ASSERT_EQ(g.ranked.size(), 3u);
  EXPECT_EQ(g.ranked[0].candidate, 2u);
  EXPECT_EQ(g.ranked[1].candidate, 0u);
  EXPECT_EQ(g.ranked[2].candidate, 1u);
  EXPECT_EQ(g.provenance, Provenance::Remote);
}

TEST(RemoteAdvisor, RetriesOnceThenRecovers) {
  FakeEndpoint fake({"maybe", "0.4"});
  RemoteAdvisor adv(std::make_shared<HttpChatTransport>(fake.endpoint()));
  EXPECT_EQ(adv.multifloor_probability({}), 0.4);
  EXPECT_EQ(fake.requests().size(), 2u);
}

TEST(RemoteAdvisor, MalformedRepliesReachFallback) {
  FakeEndpoint fake({"maybe", "maybe"});
  RemoteAdvisor adv(std::make_shared<HttpChatTransport>(fake.endpoint()));
  const auto c = make_candidates({{{1, 1}, 1.0, 1.0, 0.2}, {{2, 2}, 5.0, 1.0, 0.2}});
  RepeatDetector rep;
  const auto sel = select_waypoint(c, "bed", 0, &adv, rep, {0, 0});
  EXPECT_TRUE(sel.advisor_failed);
  EXPECT_EQ(c[sel.index].cell, (Cell{2, 2}));
}

TEST(RemoteAdvisor, TransportErrorsAreTyped) {
  FakeEndpoint fake({});
  HttpChatTransport t(fake.endpoint());
  EXPECT_THROW(t.complete("s", "u"), AdvisorError);  // HTTP 500
  EndpointConfig dead = fake.endpoint();
  dead.base_url = "http://127.0.0.1:1/v1";
  dead.timeout_ms = 500;
  EXPECT_THROW(HttpChatTransport(dead).complete("s", "u"), AdvisorError);
  EXPECT_THROW(HttpChatTransport(EndpointConfig{}), std::invalid_argument);
}
