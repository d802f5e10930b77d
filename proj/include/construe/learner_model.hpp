#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "construe/pack.hpp"

namespace construe {

enum class AttemptKind { Answer, HintRequest };

struct AttemptEvent {
  std::string learner;
  std::string exercise;
  std::vector<std::string> constructs;
  std::size_t ordinal = 0;  // 1-based, strictly increasing per (learner, exercise)
  AttemptKind kind = AttemptKind::Answer;
  std::string given;
  bool correct = false;
  std::size_t hints_consumed = 0;
  std::int64_t timestamp = 0;
};

struct Observation {
  std::string learner;
  std::string construct;
  bool outcome = false;
  double weight = 1.0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Weight of a final outcome after `hints` hints: max(0.2, 1 - 0.2 * hints).
double credit_weight(std::size_t hints);

/// Validates attempt events and turns them into construct observations.
class AttemptLog {
 public:
  explicit AttemptLog(std::size_t max_attempts = 5) : max_attempts_(max_attempts) {}

  void register_learner(const std::string& learner);
  void register_exercise(const std::string& exercise, std::vector<std::string> constructs);
  /// Correct answers and final failures (hearts = max_attempts - wrong answers
  /// - hint requests reaching zero) credit every linked construct with weight
  /// credit_weight(hints); earlier wrong answers give (false, 0.5).
  /// Throws Error(UnknownExercise | OutOfOrderAttempt).
  std::vector<Observation> record_attempt(const AttemptEvent& event);

  bool has_learner(const std::string& learner) const { return learners_.count(learner) > 0; }
  const std::set<std::string>& learners() const { return learners_; }
  const std::vector<Observation>& observations() const { return observations_; }
  const std::vector<AttemptEvent>& events() const { return events_; }
  std::size_t max_attempts() const { return max_attempts_; }

 private:
  struct Progress {
    std::size_t last_ordinal = 0;
    std::size_t wrong = 0;
    std::size_t hint_requests = 0;
    bool final = false;
  };
  std::size_t max_attempts_;
  std::set<std::string> learners_;
  std::map<std::string, std::vector<std::string>> exercises_;
  std::map<std::pair<std::string, std::string>, Progress> progress_;
  std::vector<Observation> observations_;
  std::vector<AttemptEvent> events_;
};

struct SkillState {
  std::map<std::string, double> theta;
  std::map<std::string, double> b;
  std::map<std::string, double> theta_se;
  std::map<std::string, double> b_se;
  std::size_t iterations = 0;
  double log_likelihood = 0.0;
  bool converged = false;

  friend bool operator==(const SkillState&, const SkillState&) = default;
};

struct EstimateOptions {
  double tolerance = 1e-4;
  std::size_t max_iterations = 200;
};

double logistic(double x);

/// Weighted Rasch fit with N(0,1) priors on abilities and difficulties.
/// Throws Error(Degenerate) on an empty log.
SkillState estimate(const std::vector<Observation>& observations, const EstimateOptions& options = {});

struct AbilityEstimate {
  double theta = 0.0;
  double se = 1.0;
};

/// Prior-shrunk ability for responses to items of known difficulty.
AbilityEstimate estimate_ability(const std::vector<std::pair<double, bool>>& responses);

/// P(correct) = logistic(theta - max b).
double p_correct(double theta, const std::vector<double>& difficulties);

/// A1..C2 -> -2.5..2.5. Throws Error(NoLevel) when the construct has no level.
double cefr_fallback(const ConstructDef& construct);
double cefr_to_logit(const std::string& level);

/// Difficulty from the state, else the CEFR fallback (may throw NoLevel).
double construct_difficulty(const std::string& construct, const SkillState& state, const LanguagePack* pack);

/// p_correct for an exercise linked to `constructs`; the learner's theta
/// defaults to `default_theta` when absent from the state.
double p_correct(const std::string& learner, const std::vector<std::string>& constructs, const SkillState& state,
                 const LanguagePack* pack, double default_theta = 0.0);

struct SamplerConfig {
  double target = 0.5;
  double spread = 0.15;
  std::uint64_t seed = 0;
};

std::vector<double> sampling_weights(const std::vector<double>& p, const SamplerConfig& config);

/// Uniform double in [0, 1) from the top 53 bits of the generator.
double uniform01(std::mt19937_64& rng);

/// Draws an index with probability proportional to the sampling weight.
/// Throws Error(EmptyPool).
std::size_t sample_index(const std::vector<double>& p, const SamplerConfig& config, std::mt19937_64& rng);

struct PlacementItem {
  std::string id;
  double b = 0.0;
};

struct PlacementResponse {
  std::size_t item = 0;  // index into the bank
  bool correct = false;
};

struct PlacementConfig {
  std::size_t max_items = 20;
  double se_stop = 0.4;
};

struct PlacementStep {
  bool finished = false;
  std::optional<std::size_t> next;
  double theta = 0.0;
  double se = 1.0;
};

/// Re-estimates theta and picks the unanswered item with b nearest to it.
/// Throws Error(EmptyBank).
PlacementStep placement_next(const std::vector<PlacementItem>& bank, const std::vector<PlacementResponse>& responses,
                             const PlacementConfig& config = {});

struct ConstructProgress {
  std::string construct;
  std::size_t observations = 0;
  std::size_t successes = 0;
  double weighted_rate = 0.0;
  std::vector<bool> recent;  // last 20 outcomes, oldest first
  double recent_rate = 0.0;
  std::optional<double> p_correct;

  friend bool operator==(const ConstructProgress&, const ConstructProgress&) = default;
};

/// Per-construct summary for one learner. Throws Error(UnknownLearner).
std::vector<ConstructProgress> progress_report(const std::string& learner, const SkillState& state,
                                               const AttemptLog& log, const LanguagePack* pack = nullptr);

// ---------------------------------------------------------------------------
// Event log persistence (newline-delimited JSON)

/// Appends records to an NDJSON file; each record is one line.
class EventLogWriter {
 public:
  explicit EventLogWriter(std::filesystem::path path);
  void learner(const std::string& learner);
  void exercise(const std::string& exercise, const std::vector<std::string>& constructs);
  void attempt(const AttemptEvent& event);
  /// Writes an arbitrary single-line JSON record.
  void write_line(const std::string& line);

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

/// Rebuilds an AttemptLog by replaying learner/exercise/attempt records.
AttemptLog replay_event_log(const std::filesystem::path& path, std::size_t max_attempts = 5);

// ---------------------------------------------------------------------------
// Simulation

struct SimulationSpec {
  std::size_t learners = 200;
  std::size_t constructs = 100;
  std::size_t answers = 100;  // per learner
  double theta_sd = 1.0;
  double b_sd = 1.0;
  std::uint64_t seed = 7;
};

struct SimulationResult {
  std::vector<double> planted_theta;
  std::vector<double> planted_b;
  SkillState state;
  double r_theta = 0.0;
  double r_b = 0.0;
  std::size_t events = 0;
};

double pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Plants Rasch parameters, draws answers, records them through an AttemptLog
/// (optionally persisted to `events_path`) and re-estimates.
SimulationResult simulate(const SimulationSpec& spec, const std::optional<std::filesystem::path>& events_path = {});

}  // namespace construe
