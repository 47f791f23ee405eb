#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "frontier.hpp"
#include "scene.hpp"

namespace mfnav {

// ---------------------------------------------------------------------------
// Detection fusion

/// C_conf = beta * P_seg + (1 - beta) * P_vlm. All inputs must lie in [0, 1].
inline double fuse_detection(double p_seg, double p_vlm, double beta) {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(p_seg) || !in_unit(p_vlm) || !in_unit(beta))
    throw std::domain_error("fuse_detection: inputs must lie in [0, 1]");
  const double c = beta * p_seg + (1.0 - beta) * p_vlm;
  // Rounding may leave the blend an ulp outside its endpoints.
  return std::clamp(c, std::min(p_seg, p_vlm), std::max(p_seg, p_vlm));
}

/// Stand-in for a vision-language double check: answers `reliability` when
/// the claimed category matches ground truth at the cell, else
/// 1 - reliability.
inline double stub_vlm_check(const Scene& scene, int floor, Cell world_cell, int claimed_category,
                             double reliability = 0.9) {
  const bool truth = scene.in_bounds(world_cell) && scene.object_at(floor, world_cell) == claimed_category;
  return truth ? reliability : 1.0 - reliability;
}

// ---------------------------------------------------------------------------
// Advisor interface

class AdvisorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Provenance { Stub, Remote, Fallback };

inline const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Stub: return "stub";
    case Provenance::Remote: return "remote";
    case Provenance::Fallback: return "fallback";
  }
  return "?";
}

struct AdvisorScore {
  std::size_t candidate = 0;  // index into the query's candidate list
  double score = 0.0;         // in [0, 1]
};

/// G: candidates in descending advisor score.
struct AdvisorScoreSet {
  std::vector<AdvisorScore> ranked;
  Provenance provenance = Provenance::Stub;
  std::string transcript;
};

struct WaypointQuery {
  /// Scored and ordered best-first by `ranks_before`.
  std::span<const CandidateWaypoint> candidates;
  std::string target_name;
  int timestep = 0;
};

struct MultifloorQuery {
  int timestep = 0;
  int max_steps = 500;
  std::vector<std::string> seen_categories;
  int total_categories = 0;
  int delta_t = 50;
  double area_growth = 1.0;  // E_t
  std::string target_name;

  double object_ratio() const {
    return total_categories > 0 ? double(seen_categories.size()) / double(total_categories) : 0.0;
  }
};

class Advisor {
 public:
  virtual ~Advisor() = default;
  /// Throws AdvisorError when no usable answer is obtained.
  virtual AdvisorScoreSet rank_waypoints(const WaypointQuery& q) = 0;
  /// P_LLM: probability that exploring another floor pays off.
  virtual double multifloor_probability(const MultifloorQuery& q) = 0;
  virtual Provenance provenance() const = 0;
  /// Last prompt/reply exchange, empty for local advisors.
  virtual std::string last_transcript() const { return {}; }
};

/// Deterministic local advisor: waypoint scores are frontier scores rescaled to
/// [0, 1]; P_LLM blends object coverage with area stagnation.
class StubAdvisor final : public Advisor {
 public:
  AdvisorScoreSet rank_waypoints(const WaypointQuery& q) override {
    AdvisorScoreSet out;
    out.provenance = Provenance::Stub;
    double lo = kInf, hi = -kInf;
    for (const auto& c : q.candidates) {
      if (!std::isfinite(c.score)) continue;
      lo = std::min(lo, c.score);
      hi = std::max(hi, c.score);
    }
    for (std::size_t i = 0; i < q.candidates.size(); ++i) {
      const double s = q.candidates[i].score;
      double v = 0.0;
      if (std::isfinite(s)) v = hi > lo ? (s - lo) / (hi - lo) : 1.0;
      out.ranked.push_back({i, v});
    }
    // Candidates arrive best-first, so a stable sort keeps the frontier
    // tie-break among equal scores.
    std::stable_sort(out.ranked.begin(), out.ranked.end(),
                     [](const AdvisorScore& a, const AdvisorScore& b) { return a.score > b.score; });
    return out;
  }

  double multifloor_probability(const MultifloorQuery& q) override {
    return 0.5 * q.object_ratio() + 0.5 * (1.0 - q.area_growth);
  }

  Provenance provenance() const override { return Provenance::Stub; }
};

// ---------------------------------------------------------------------------
// Prompts and reply parsing

inline std::string format_number(double v, int precision = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

inline std::string render_multifloor_prompt(const MultifloorQuery& q) {
  std::ostringstream s;
  s << "Your task has a time limit of " << q.max_steps << " timesteps, and the current timestep is " << q.timestep
    << ". On the present floor, you have identified objects ";
  if (q.seen_categories.empty()) {
    s << "none";
  } else {
    for (std::size_t i = 0; i < q.seen_categories.size(); ++i) s << (i ? ", " : "") << q.seen_categories[i];
  }
  s << " out of a total of " << q.total_categories << " object types. In the past " << q.delta_t
    << " timesteps, the proportion of newly explored area is " << format_number(q.area_growth) << ".";
  if (!q.target_name.empty()) {
    s << " How likely is it that the " << q.target_name
      << " is on another floor and that the agent should take the stairs now?";
  }
  s << " Answer with a single number between 0 and 1.";
  return s.str();
}

inline std::string render_waypoint_prompt(const WaypointQuery& q) {
  std::ostringstream s;
  s << "You are guiding a robot that searches an unfamiliar house for a " << q.target_name
    << ". The current timestep is " << q.timestep << ". Candidate exploration points:\n";
  for (std::size_t i = 0; i < q.candidates.size(); ++i) {
    const auto& c = q.candidates[i];
    s << (i + 1) << ". " << c.benefit << " unexplored cells nearby, "
      << (std::isfinite(c.distance) ? format_number(c.distance, 1) : std::string("unreachable")) << " cells away, "
      << format_number(100.0 * c.explored_ratio, 0) << "% of its surroundings explored.\n";
  }
  s << "Rank the candidates from most to least promising for finding the " << q.target_name
    << ". Answer with the candidate numbers only, separated by commas.";
  return s.str();
}

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

/// A reply consisting of exactly one decimal number in [0, 1].
inline std::optional<double> parse_probability(const std::string& reply) {
  const std::string t = trim(reply);
  if (t.empty()) return std::nullopt;
  bool dot = false, digit = false;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const char ch = t[i];
    if (std::isdigit(static_cast<unsigned char>(ch))) {
      digit = true;
    } else if (ch == '.' && !dot) {
      dot = true;
    } else if (!(ch == '+' && i == 0)) {
      return std::nullopt;
    }
  }
  if (!digit) return std::nullopt;
  const double v = std::strtod(t.c_str(), nullptr);
  if (!(v >= 0.0 && v <= 1.0)) return std::nullopt;
  return v;
}

/// A comma-separated list of distinct 1-based candidate numbers in [1, n],
/// returned as written.
inline std::optional<std::vector<int>> parse_ranking(const std::string& reply, std::size_t n) {
  const std::string t = trim(reply);
  if (t.empty()) return std::nullopt;
  std::vector<int> out;
  std::set<int> seen;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string v = trim(item);
    if (v.empty() || v.size() > 6 || !std::all_of(v.begin(), v.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      return std::nullopt;
    const int k = std::stoi(v);
    if (k < 1 || std::size_t(k) > n || !seen.insert(k).second) return std::nullopt;
    out.push_back(k);
  }
  if (t.back() == ',') return std::nullopt;
  return out;
}

/// Converts a ranking into a score set: listed candidates in order with
/// linearly decreasing scores, unlisted ones after them with score 0.
inline AdvisorScoreSet score_set_from_ranking(const std::vector<int>& ranking, std::size_t n) {
  AdvisorScoreSet out;
  out.provenance = Provenance::Remote;
  std::vector<char> listed(n, 0);
  for (std::size_t pos = 0; pos < ranking.size(); ++pos) {
    const auto idx = std::size_t(ranking[pos] - 1);
    listed[idx] = 1;
    out.ranked.push_back({idx, double(n - pos) / double(n)});
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!listed[i]) out.ranked.push_back({i, 0.0});
  return out;
}

// ---------------------------------------------------------------------------
// Remote advisor over a chat transport

/// One chat-completion exchange. Implementations throw AdvisorError on
/// transport failure.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual std::string complete(const std::string& system_prompt, const std::string& user_prompt) = 0;
};

/// Advisor backed by a chat model. Malformed replies are retried once, then
/// reported as AdvisorError.
class RemoteAdvisor final : public Advisor {
 public:
  explicit RemoteAdvisor(std::shared_ptr<ChatTransport> transport) : transport_(std::move(transport)) {}

  AdvisorScoreSet rank_waypoints(const WaypointQuery& q) override {
    const std::string prompt = render_waypoint_prompt(q);
    for (int attempt = 0; attempt < 2; ++attempt) {
      const std::string reply = ask(prompt);
      if (auto ranking = parse_ranking(reply, q.candidates.size())) {
        auto set = score_set_from_ranking(*ranking, q.candidates.size());
        set.transcript = transcript_;
        return set;
      }
    }
    throw AdvisorError("advisor returned no valid ranking");
  }

  double multifloor_probability(const MultifloorQuery& q) override {
    const std::string prompt = render_multifloor_prompt(q);
    for (int attempt = 0; attempt < 2; ++attempt) {
      if (auto p = parse_probability(ask(prompt))) return *p;
    }
    throw AdvisorError("advisor returned no valid probability");
  }

  Provenance provenance() const override { return Provenance::Remote; }
  std::string last_transcript() const override { return transcript_; }

 private:
  static constexpr const char* kSystem =
      "You assist a household robot searching for objects. Follow the requested answer format exactly.";

  std::string ask(const std::string& prompt) {
    const std::string reply = transport_->complete(kSystem, prompt);
    transcript_ = prompt + "\n---\n" + reply;
    return reply;
  }

  std::shared_ptr<ChatTransport> transport_;
  std::string transcript_;
};

// ---------------------------------------------------------------------------
// Waypoint selection with repeat detection

struct SelectionParams {
  double exclusion_ratio = 0.9;
  int repeat_limit = 3;                // K
  double repeat_displacement = 2.0;    // epsilon, cells
  int free_explore_steps = 20;         // M
};

/// Tracks repeated picks of the same waypoint without progress.
class RepeatDetector {
 public:
  bool free_explore() const { return free_steps_ > 0; }
  int free_steps_remaining() const { return free_steps_; }
  int consecutive_same() const { return consecutive_; }
  std::optional<Cell> last_choice() const { return last_; }

  /// Advances the free-explore countdown by one timestep.
  void tick() {
    if (free_steps_ > 0) --free_steps_;
  }

  /// Records a pick; returns true when free exploration starts.
  bool record(Cell choice, Cell agent, const SelectionParams& p) {
    if (last_ && *last_ == choice) {
      ++consecutive_;
    } else {
      last_ = choice;
      consecutive_ = 1;
      span_start_ = agent;
    }
    if (consecutive_ >= p.repeat_limit && euclidean(agent, span_start_) < p.repeat_displacement) {
      free_steps_ = p.free_explore_steps;
      consecutive_ = 0;
      last_.reset();
      return true;
    }
    return false;
  }

  void clear() { *this = RepeatDetector{}; }

 private:
  std::optional<Cell> last_;
  int consecutive_ = 0;
  Cell span_start_;
  int free_steps_ = 0;
};

struct Selection {
  std::size_t index = 0;  // into the candidate list
  bool advisor_failed = false;
  bool free_explore = false;
  bool all_excluded = false;
  AdvisorScoreSet scores;
};

/// Nearest reachable candidate (smallest distance, then cell order).
inline std::size_t nearest_candidate(std::span<const CandidateWaypoint> candidates) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const auto& a = candidates[i];
    const auto& b = candidates[best];
    if (a.distance < b.distance || (a.distance == b.distance && a.cell < b.cell)) best = i;
  }
  return best;
}

/// Picks the next waypoint. `candidates` must be scored and ordered by
/// `ranks_before`. The advisor ranking is walked best-first, skipping
/// candidates whose surroundings are mostly explored or that are
/// unreachable; when everything is skipped the top-ranked candidate is
/// returned anyway. If the advisor fails, the best frontier score wins.
inline Selection select_waypoint(std::span<const CandidateWaypoint> candidates, const std::string& target_name,
                                 int timestep, Advisor* advisor, RepeatDetector& repeats, Cell agent,
                                 const SelectionParams& p = {}) {
  if (candidates.empty()) throw std::invalid_argument("select_waypoint: no candidates");
  Selection sel;
  if (repeats.free_explore()) {
    sel.free_explore = true;
    sel.index = nearest_candidate(candidates);
    return sel;
  }

  bool ranked = false;
  if (advisor) {
    try {
      sel.scores = advisor->rank_waypoints({candidates, target_name, timestep});
      ranked = !sel.scores.ranked.empty();
    } catch (const AdvisorError&) {
      sel.advisor_failed = true;
    }
  }
  if (!ranked) {
    sel.scores = {};
    sel.scores.provenance = Provenance::Fallback;
    sel.index = 0;
  } else {
    bool found = false;
    for (const auto& s : sel.scores.ranked) {
      const auto& c = candidates[s.candidate];
      if (c.explored_ratio > p.exclusion_ratio || !std::isfinite(c.distance)) continue;
      sel.index = s.candidate;
      found = true;
      break;
    }
    if (!found) {
      sel.all_excluded = true;
      sel.index = sel.scores.ranked.front().candidate;
    }
  }

  if (repeats.record(candidates[sel.index].cell, agent, p)) {
    sel.free_explore = true;
    sel.index = nearest_candidate(candidates);
  }
  return sel;
}

}  // namespace mfnav
