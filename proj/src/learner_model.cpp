#include "construe/learner_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "json.hpp"

namespace construe {

using nlohmann::json;

double credit_weight(std::size_t hints) { return std::max(0.2, 1.0 - 0.2 * static_cast<double>(hints)); }

// ---------------------------------------------------------------------------
// Attempt log

void AttemptLog::register_learner(const std::string& learner) { learners_.insert(learner); }

void AttemptLog::register_exercise(const std::string& exercise, std::vector<std::string> constructs) {
  exercises_[exercise] = std::move(constructs);
}

std::vector<Observation> AttemptLog::record_attempt(const AttemptEvent& event) {
  const auto ex = exercises_.find(event.exercise);
  if (ex == exercises_.end()) fail(ErrorCode::UnknownExercise, "unknown exercise '" + event.exercise + "'");
  Progress& p = progress_[{event.learner, event.exercise}];
  if (p.final) fail(ErrorCode::OutOfOrderAttempt, "exercise '" + event.exercise + "' is already finished");
  if (event.ordinal <= p.last_ordinal)
    fail(ErrorCode::OutOfOrderAttempt, "attempt ordinal " + std::to_string(event.ordinal) + " does not follow " +
                                           std::to_string(p.last_ordinal));
  if (event.hints_consumed > max_attempts_)
    fail(ErrorCode::OutOfOrderAttempt, "more hints consumed than attempts available");
  learners_.insert(event.learner);
  p.last_ordinal = event.ordinal;
  events_.push_back(event);

  std::vector<Observation> out;
  const auto emit = [&](bool outcome, double weight) {
    for (const auto& c : ex->second) out.push_back({event.learner, c, outcome, weight});
  };
  if (event.kind == AttemptKind::HintRequest) {
    ++p.hint_requests;
    if (p.wrong + p.hint_requests >= max_attempts_) {
      p.final = true;
      emit(false, credit_weight(event.hints_consumed));
    }
  } else if (event.correct) {
    p.final = true;
    emit(true, credit_weight(event.hints_consumed));
  } else {
    ++p.wrong;
    if (p.wrong + p.hint_requests >= max_attempts_) {
      p.final = true;
      emit(false, credit_weight(event.hints_consumed));
    } else {
      emit(false, 0.5);
    }
  }
  observations_.insert(observations_.end(), out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Rasch estimation

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

SkillState estimate(const std::vector<Observation>& observations, const EstimateOptions& options) {
  if (observations.empty()) fail(ErrorCode::Degenerate, "cannot estimate from an empty log");
  std::map<std::string, std::size_t> li, ci;
  for (const auto& o : observations) {
    li.emplace(o.learner, 0);
    ci.emplace(o.construct, 0);
  }
  std::size_t k = 0;
  for (auto& [name, idx] : li) idx = k++;
  k = 0;
  for (auto& [name, idx] : ci) idx = k++;

  struct Obs {
    std::size_t l, c;
    double y, w;
  };
  std::vector<Obs> data;
  data.reserve(observations.size());
  for (const auto& o : observations) data.push_back({li[o.learner], ci[o.construct], o.outcome ? 1.0 : 0.0, o.weight});

  std::vector<double> theta(li.size(), 0.0), b(ci.size(), 0.0);
  std::vector<double> grad, hess;
  SkillState state;
  for (std::size_t iter = 1; iter <= options.max_iterations; ++iter) {
    double delta = 0.0;
    // Abilities given difficulties.
    grad.assign(theta.size(), 0.0);
    hess.assign(theta.size(), 0.0);
    for (const auto& d : data) {
      const double p = logistic(theta[d.l] - b[d.c]);
      grad[d.l] += d.w * (d.y - p);
      hess[d.l] += d.w * p * (1.0 - p);
    }
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double step = (grad[i] - theta[i]) / (hess[i] + 1.0);
      theta[i] += step;
      delta = std::max(delta, std::abs(step));
    }
    // Difficulties given abilities.
    grad.assign(b.size(), 0.0);
    hess.assign(b.size(), 0.0);
    for (const auto& d : data) {
      const double p = logistic(theta[d.l] - b[d.c]);
      grad[d.c] -= d.w * (d.y - p);
      hess[d.c] += d.w * p * (1.0 - p);
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double step = (grad[i] - b[i]) / (hess[i] + 1.0);
      b[i] += step;
      delta = std::max(delta, std::abs(step));
    }
    state.iterations = iter;
    if (delta < options.tolerance) {
      state.converged = true;
      break;
    }
  }

  // Identify the scale by centring difficulties; shifting abilities by the
  // same amount leaves every predicted probability unchanged.
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(b.size());
  for (auto& x : b) x -= mean_b;
  for (auto& x : theta) x -= mean_b;

  std::vector<double> info_t(theta.size(), 0.0), info_b(b.size(), 0.0);
  double ll = 0.0;
  for (const auto& d : data) {
    const double p = logistic(theta[d.l] - b[d.c]);
    info_t[d.l] += d.w * p * (1.0 - p);
    info_b[d.c] += d.w * p * (1.0 - p);
    ll += d.w * (d.y > 0.5 ? std::log(p) : std::log1p(-p));
  }
  for (const auto& [name, idx] : li) {
    state.theta[name] = theta[idx];
    state.theta_se[name] = 1.0 / std::sqrt(info_t[idx] + 1.0);
  }
  for (const auto& [name, idx] : ci) {
    state.b[name] = b[idx];
    state.b_se[name] = 1.0 / std::sqrt(info_b[idx] + 1.0);
  }
  state.log_likelihood = ll;
  return state;
}

AbilityEstimate estimate_ability(const std::vector<std::pair<double, bool>>& responses) {
  double theta = 0.0, info = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    double g = -theta;
    info = 0.0;
    for (const auto& [b, y] : responses) {
      const double p = logistic(theta - b);
      g += (y ? 1.0 : 0.0) - p;
      info += p * (1.0 - p);
    }
    const double step = g / (info + 1.0);
    theta += step;
    if (std::abs(step) < 1e-10) break;
  }
  info = 0.0;
  for (const auto& [b, y] : responses) {
    const double p = logistic(theta - b);
    info += p * (1.0 - p);
  }
  return {theta, 1.0 / std::sqrt(info + 1.0)};
}

double p_correct(double theta, const std::vector<double>& difficulties) {
  const double b = difficulties.empty() ? 0.0 : *std::max_element(difficulties.begin(), difficulties.end());
  return logistic(theta - b);
}

double cefr_to_logit(const std::string& level) {
  static const char* levels[] = {"A1", "A2", "B1", "B2", "C1", "C2"};
  for (int i = 0; i < 6; ++i)
    if (level == levels[i]) return -2.5 + i;
  fail(ErrorCode::NoLevel, "unknown CEFR level '" + level + "'");
}

double cefr_fallback(const ConstructDef& construct) {
  if (!construct.cefr) fail(ErrorCode::NoLevel, "construct '" + construct.id + "' has no CEFR level");
  return cefr_to_logit(*construct.cefr);
}

double construct_difficulty(const std::string& construct, const SkillState& state, const LanguagePack* pack) {
  if (const auto it = state.b.find(construct); it != state.b.end()) return it->second;
  const ConstructDef* def = pack ? pack->find_construct(construct) : nullptr;
  if (def == nullptr) fail(ErrorCode::NoLevel, "construct '" + construct + "' has neither data nor a CEFR level");
  return cefr_fallback(*def);
}

double p_correct(const std::string& learner, const std::vector<std::string>& constructs, const SkillState& state,
                 const LanguagePack* pack, double default_theta) {
  const auto it = state.theta.find(learner);
  const double theta = it == state.theta.end() ? default_theta : it->second;
  std::vector<double> bs;
  for (const auto& c : constructs) bs.push_back(construct_difficulty(c, state, pack));
  return p_correct(theta, bs);
}

// ---------------------------------------------------------------------------
// Sampling

std::vector<double> sampling_weights(const std::vector<double>& p, const SamplerConfig& config) {
  std::vector<double> w;
  w.reserve(p.size());
  for (const double x : p) {
    const double d = x - config.target;
    w.push_back(std::exp(-d * d / (2.0 * config.spread * config.spread)));
  }
  return w;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t sample_index(const std::vector<double>& p, const SamplerConfig& config, std::mt19937_64& rng) {
  if (p.empty()) fail(ErrorCode::EmptyPool, "no exercises to sample from");
  const auto w = sampling_weights(p, config);
  std::vector<double> cumulative(w.size());
  std::partial_sum(w.begin(), w.end(), cumulative.begin());
  const double u = uniform01(rng) * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min(static_cast<std::size_t>(it - cumulative.begin()), p.size() - 1);
}

// ---------------------------------------------------------------------------
// Placement

PlacementStep placement_next(const std::vector<PlacementItem>& bank, const std::vector<PlacementResponse>& responses,
                             const PlacementConfig& config) {
  if (bank.empty()) fail(ErrorCode::EmptyBank, "placement bank is empty");
  std::vector<std::pair<double, bool>> rs;
  std::vector<bool> used(bank.size(), false);
  for (const auto& r : responses) {
    if (r.item >= bank.size()) fail(ErrorCode::BadRequest, "response names an item outside the bank");
    rs.emplace_back(bank[r.item].b, r.correct);
    used[r.item] = true;
  }
  const AbilityEstimate est = estimate_ability(rs);
  PlacementStep step;
  step.theta = est.theta;
  step.se = est.se;
  if (responses.size() >= config.max_items || (!responses.empty() && est.se < config.se_stop)) {
    step.finished = true;
    return step;
  }
  double best = 0.0;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    if (used[i]) continue;
    const double d = std::abs(bank[i].b - est.theta);
    if (!step.next || d < best) {
      step.next = i;
      best = d;
    }
  }
  step.finished = !step.next.has_value();
  return step;
}

// ---------------------------------------------------------------------------
// Progress

std::vector<ConstructProgress> progress_report(const std::string& learner, const SkillState& state,
                                               const AttemptLog& log, const LanguagePack* pack) {
  if (!log.has_learner(learner)) fail(ErrorCode::UnknownLearner, "unknown learner '" + learner + "'");
  struct Acc {
    std::size_t n = 0, successes = 0;
    double wy = 0.0, w = 0.0;
    std::vector<bool> outcomes;
  };
  std::map<std::string, Acc> acc;
  for (const auto& o : log.observations()) {
    if (o.learner != learner) continue;
    Acc& a = acc[o.construct];
    ++a.n;
    a.successes += o.outcome ? 1 : 0;
    a.wy += o.outcome ? o.weight : 0.0;
    a.w += o.weight;
    a.outcomes.push_back(o.outcome);
  }
  const auto theta = state.theta.find(learner);
  std::vector<ConstructProgress> out;
  for (auto& [construct, a] : acc) {
    ConstructProgress p;
    p.construct = construct;
    p.observations = a.n;
    p.successes = a.successes;
    p.weighted_rate = a.w > 0 ? a.wy / a.w : 0.0;
    const std::size_t from = a.outcomes.size() > 20 ? a.outcomes.size() - 20 : 0;
    p.recent.assign(a.outcomes.begin() + static_cast<std::ptrdiff_t>(from), a.outcomes.end());
    p.recent_rate = static_cast<double>(std::count(p.recent.begin(), p.recent.end(), true)) /
                    static_cast<double>(p.recent.size());
    try {
      const double b = construct_difficulty(construct, state, pack);
      p.p_correct = logistic((theta == state.theta.end() ? 0.0 : theta->second) - b);
    } catch (const Error&) {
      // No difficulty data and no CEFR level.
    }
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Event log

EventLogWriter::EventLogWriter(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  out_.open(path_, std::ios::app | std::ios::binary);
  if (!out_) fail(ErrorCode::Io, "cannot open event log " + path_.string());
}

void EventLogWriter::write_line(const std::string& line) {
  out_ << line << '\n';
  out_.flush();
  if (!out_) fail(ErrorCode::Io, "cannot append to event log " + path_.string());
}

void EventLogWriter::learner(const std::string& learner) {
  write_line(json{{"type", "learner"}, {"learner", learner}}.dump());
}

void EventLogWriter::exercise(const std::string& exercise, const std::vector<std::string>& constructs) {
  write_line(json{{"type", "exercise"}, {"exercise", exercise}, {"constructs", constructs}}.dump());
}

void EventLogWriter::attempt(const AttemptEvent& e) {
  write_line(json{{"type", "attempt"},
                  {"learner", e.learner},
                  {"exercise", e.exercise},
                  {"constructs", e.constructs},
                  {"ordinal", e.ordinal},
                  {"kind", e.kind == AttemptKind::Answer ? "answer" : "hint"},
                  {"given", e.given},
                  {"correct", e.correct},
                  {"hints_consumed", e.hints_consumed},
                  {"timestamp", e.timestamp}}
                 .dump());
}

AttemptLog replay_event_log(const std::filesystem::path& path, std::size_t max_attempts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::MissingFile, "event log " + path.string() + " not found");
  AttemptLog log(max_attempts);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const json r = json::parse(line, nullptr, false);
    if (r.is_discarded() || !r.is_object())
      fail(ErrorCode::SchemaViolation, path.string() + ":" + std::to_string(n) + ": not a JSON object");
    const std::string type = r.value("type", "");
    try {
      if (type == "learner") {
        log.register_learner(r.at("learner").get<std::string>());
      } else if (type == "exercise") {
        log.register_exercise(r.at("exercise").get<std::string>(), r.at("constructs").get<std::vector<std::string>>());
      } else if (type == "attempt") {
        AttemptEvent e;
        e.learner = r.at("learner").get<std::string>();
        e.exercise = r.at("exercise").get<std::string>();
        e.constructs = r.value("constructs", std::vector<std::string>{});
        e.ordinal = r.at("ordinal").get<std::size_t>();
        e.kind = r.at("kind").get<std::string>() == "hint" ? AttemptKind::HintRequest : AttemptKind::Answer;
        e.given = r.value("given", "");
        e.correct = r.value("correct", false);
        e.hints_consumed = r.value("hints_consumed", std::size_t{0});
        e.timestamp = r.value("timestamp", std::int64_t{0});
        log.record_attempt(e);
      }
    } catch (const json::exception& ex) {
      fail(ErrorCode::SchemaViolation, path.string() + ":" + std::to_string(n) + ": " + ex.what());
    }
  }
  return log;
}

// ---------------------------------------------------------------------------
// Simulation

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return 0.0;
  const double mx = std::accumulate(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0 || syy <= 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

namespace {

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%05zu", prefix, i);
  return buf;
}

}  // namespace

SimulationResult simulate(const SimulationSpec& spec, const std::optional<std::filesystem::path>& events_path) {
  if (spec.learners == 0 || spec.constructs == 0 || spec.answers == 0)
    fail(ErrorCode::BadRequest, "simulation counts must be positive");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  SimulationResult res;
  for (std::size_t i = 0; i < spec.learners; ++i) res.planted_theta.push_back(spec.theta_sd * normal(rng));
  for (std::size_t i = 0; i < spec.constructs; ++i) res.planted_b.push_back(spec.b_sd * normal(rng));

  std::optional<EventLogWriter> writer;
  if (events_path) {
    std::filesystem::remove(*events_path);
    writer.emplace(*events_path);
  }
  // One answer per exercise, so every answer is final and unweighted.
  AttemptLog log(1);
  for (std::size_t l = 0; l < spec.learners; ++l) {
    const std::string learner = numbered("learner-", l);
    log.register_learner(learner);
    if (writer) writer->learner(learner);
    for (std::size_t k = 0; k < spec.answers; ++k) {
      const std::size_t c = static_cast<std::size_t>(rng() % spec.constructs);
      const std::string exercise = learner + "/" + numbered("ex-", k);
      const std::vector<std::string> constructs{numbered("construct-", c)};
      log.register_exercise(exercise, constructs);
      AttemptEvent e;
      e.learner = learner;
      e.exercise = exercise;
      e.constructs = constructs;
      e.ordinal = 1;
      e.correct = uniform01(rng) < logistic(res.planted_theta[l] - res.planted_b[c]);
      e.given = e.correct ? "correct" : "wrong";
      e.timestamp = static_cast<std::int64_t>(l * spec.answers + k);
      log.record_attempt(e);
      if (writer) {
        writer->exercise(exercise, constructs);
        writer->attempt(e);
      }
      ++res.events;
    }
  }
  res.state = estimate(log.observations());
  std::vector<double> th, tt, bh, bt;
  for (std::size_t l = 0; l < spec.learners; ++l) {
    th.push_back(res.state.theta.at(numbered("learner-", l)));
    tt.push_back(res.planted_theta[l]);
  }
  for (std::size_t c = 0; c < spec.constructs; ++c) {
    const auto it = res.state.b.find(numbered("construct-", c));
    if (it == res.state.b.end()) continue;  // never drawn
    bh.push_back(it->second);
    bt.push_back(res.planted_b[c]);
  }
  res.r_theta = pearson(th, tt);
  res.r_b = pearson(bh, bt);
  return res;
}

}  // namespace construe
