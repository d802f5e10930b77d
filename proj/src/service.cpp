#include "construe/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "construe/unicode.hpp"
#include "json_io.hpp"

namespace construe {

namespace {

using io::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::Unauthorized: return 401;
    case ErrorCode::Forbidden: return 403;
    case ErrorCode::NotFound:
    case ErrorCode::UnknownExercise:
    case ErrorCode::UnknownLearner: return 404;
    case ErrorCode::NoCandidates:
    case ErrorCode::ExhaustedAttempts:
    case ErrorCode::OutOfOrderAttempt: return 409;
    case ErrorCode::UnsupportedLanguage:
    case ErrorCode::EmptyText:
    case ErrorCode::EmptyInput:
    case ErrorCode::BadRequest: return 400;
    case ErrorCode::EmptyBank:
    case ErrorCode::NoLevel: return 422;
    default: return 500;
  }
}

ApiResponse respond(int status, const json& body) { return {status, body.dump()}; }

ApiResponse error_response(ErrorCode code, const std::string& message) {
  return respond(http_status(code), json{{"error", {{"code", std::string(error_code_name(code))}, {"message", message}}}});
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::string cur;
  for (const char c : path) {
    if (c == '/') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string random_token() {
  std::random_device rd;
  std::mt19937_64 rng((static_cast<std::uint64_t>(rd()) << 32) ^ rd());
  static constexpr char hex[] = "0123456789abcdef";
  std::string t;
  for (int i = 0; i < 32; ++i) t += hex[rng() % 16];
  return t;
}

std::int64_t now_seconds() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

enum class Role { Learner, Teacher };

struct User {
  std::string id, name, token;
  Role role = Role::Learner;
  std::map<std::string, std::string> levels;  // language -> CEFR
};

struct Story {
  std::string id, owner, language, title, text;
  std::string visibility = "private";  // private | group | public
  std::string group;
  AnnotatedStory annotated;
  std::vector<ConstructInstance> instances;
  std::vector<ExerciseCandidate> candidates;
};

struct Group {
  std::string id, teacher, name;
  std::set<std::string> invited, members, stories;
};

struct SessionExercise {
  Exercise exercise;
  ExerciseProgress progress;
  std::size_t ordinal = 0;
  std::vector<std::pair<std::string, bool>> answers;
};

struct Session {
  std::string id, learner, story;
  std::uint64_t seed = 0;
  std::size_t density = 0;
  bool active = true;
  std::vector<SessionExercise> exercises;
};

struct PlacementRun {
  std::string id, learner, language;
  std::vector<PlacementItem> bank;
  std::vector<Exercise> items;
  std::vector<std::vector<const Token*>> contexts;
  std::vector<PlacementResponse> responses;
  PlacementStep step;
};

struct GoldItem {
  AnnotatedStory story;
  std::vector<ExerciseCandidate> candidates;
};

}  // namespace

struct Service::Impl {
  ServiceConfig config;
  std::map<std::string, LanguagePack> packs;
  std::map<std::string, AttemptLog> logs;
  std::map<std::string, std::optional<SkillState>> states;
  std::map<std::string, std::vector<GoldItem>> gold_items;

  std::map<std::string, User> users;
  std::map<std::string, std::string> tokens;
  std::map<std::string, Story> stories;
  std::map<std::string, Group> groups;
  std::map<std::string, Session> sessions;
  std::map<std::string, PlacementRun> placements;
  std::map<std::pair<std::string, std::string>, AbilityEstimate> placed;  // (learner, language)
  std::size_t next_user = 1, next_story = 1, next_group = 1, next_session = 1, next_placement = 1;

  std::optional<EventLogWriter> writer;
  std::mutex mutex;
  std::unique_ptr<httplib::Server> server;

  explicit Impl(ServiceConfig c) : config(std::move(c)) {
    for (const auto& [lang, dir] : config.packs) {
      LanguagePack p = load_pack(dir);
      if (p.language != lang) fail(ErrorCode::SchemaViolation, "pack " + dir.string() + " declares language " + p.language);
      packs.emplace(lang, std::move(p));
      logs.emplace(lang, AttemptLog(ExerciseProgress::kMaxHearts));
    }
    if (!config.data_dir.empty()) {
      const auto path = config.data_dir / "events.ndjson";
      if (std::filesystem::exists(path)) replay(path);
      writer.emplace(path);
    }
  }

  // -- event sourcing ---------------------------------------------------------

  void replay(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      const json r = json::parse(line, nullptr, false);
      if (r.is_discarded() || !r.is_object())
        fail(ErrorCode::SchemaViolation, path.string() + ":" + std::to_string(n) + ": not a JSON object");
      apply(r);
    }
  }

  void commit(const json& record) {
    apply(record);
    if (writer) writer->write_line(record.dump());
  }

  json apply(const json& r) {
    const std::string type = r.value("type", "");
    if (type == "user") return apply_user(r);
    if (type == "level") {
      users.at(r.at("user")).levels[r.at("language")] = r.at("cefr");
      return {};
    }
    if (type == "story") return apply_story(r);
    if (type == "visibility") {
      Story& s = stories.at(r.at("story"));
      s.visibility = r.at("visibility");
      s.group = r.value("group", "");
      return {};
    }
    if (type == "group") {
      Group g;
      g.id = r.at("id");
      g.teacher = r.at("teacher");
      g.name = r.at("name");
      groups[g.id] = g;
      bump(next_group, g.id);
      return {};
    }
    if (type == "invite") {
      groups.at(r.at("group")).invited.insert(r.at("learner").get<std::string>());
      return {};
    }
    if (type == "accept") {
      Group& g = groups.at(r.at("group"));
      g.invited.erase(r.at("learner").get<std::string>());
      g.members.insert(r.at("learner").get<std::string>());
      return {};
    }
    if (type == "share") {
      const std::string gid = r.at("group"), sid = r.at("story");
      groups.at(gid).stories.insert(sid);
      stories.at(sid).visibility = "group";
      stories.at(sid).group = gid;
      return {};
    }
    if (type == "session") return apply_session(r);
    if (type == "attempt") return apply_attempt(r);
    if (type == "placement") {
      placed[{r.at("learner"), r.at("language")}] = {r.at("theta").get<double>(), r.at("se").get<double>()};
      return {};
    }
    return {};  // records of other tools are ignored
  }

  static void bump(std::size_t& counter, const std::string& id) {
    const auto digits = id.find_first_of("0123456789");
    if (digits == std::string::npos) return;
    counter = std::max(counter, std::stoul(id.substr(digits)) + 1);
  }

  json apply_user(const json& r) {
    User u;
    u.id = r.at("id");
    u.name = r.at("name");
    u.token = r.at("token");
    u.role = r.at("role") == "teacher" ? Role::Teacher : Role::Learner;
    tokens[u.token] = u.id;
    users[u.id] = u;
    bump(next_user, u.id);
    return {};
  }

  json apply_story(const json& r) {
    Story s;
    s.id = r.at("id");
    s.owner = r.at("owner");
    s.language = r.at("language");
    s.title = r.value("title", "");
    s.text = r.at("text");
    const LanguagePack& pack = packs.at(s.language);
    s.annotated = annotate(s.id, s.text, pack);
    s.instances = detect_constructs(s.annotated, pack);
    s.candidates = generate_candidates(s.annotated, s.instances, pack);
    stories[s.id] = std::move(s);
    bump(next_story, r.at("id"));
    return {};
  }

  Exercise rebuild_exercise(const Story& story, const json& spec) const {
    const LanguagePack& pack = packs.at(story.language);
    const std::size_t first = spec.at("first"), last = spec.at("last");
    const auto it = std::find_if(story.candidates.begin(), story.candidates.end(),
                                 [&](const ExerciseCandidate& c) { return c.first == first && c.last == last; });
    if (it == story.candidates.end()) fail(ErrorCode::Internal, "session references a vanished candidate");
    Exercise ex;
    if (spec.at("kind") == "multiple_choice") {
      ex.kind = ExerciseKind::MultipleChoice;
      ex.candidate = *it;
      ex.construct = spec.at("construct").get<std::string>();
      ex.options = spec.at("options").get<std::vector<std::string>>();
      ex.correct = static_cast<std::size_t>(std::find(ex.options.begin(), ex.options.end(), it->answer) - ex.options.begin());
      ex.id = story.id + ":" + std::to_string(first) + "-" + std::to_string(last) + ":mc:" + *ex.construct;
    } else {
      ex = build_cloze(*it);
    }
    ex.hints = build_hint_sequence(ex, story.instances, story.annotated, pack);
    return ex;
  }

  json apply_session(const json& r) {
    Session s;
    s.id = r.at("id");
    s.learner = r.at("learner");
    s.story = r.at("story");
    s.seed = r.at("seed");
    s.density = r.at("density");
    const Story& story = stories.at(s.story);
    for (auto& [id, other] : sessions)
      if (other.learner == s.learner && other.story == s.story) other.active = false;
    AttemptLog& log = logs.at(story.language);
    for (const auto& spec : r.at("exercises")) {
      SessionExercise se;
      se.exercise = rebuild_exercise(story, spec);
      log.register_exercise(s.id + "/" + se.exercise.id, se.exercise.candidate.constructs);
      s.exercises.push_back(std::move(se));
    }
    bump(next_session, s.id);
    sessions[s.id] = std::move(s);
    return {};
  }

  json apply_attempt(const json& r) {
    Session& s = sessions.at(r.at("session"));
    SessionExercise& se = s.exercises.at(r.at("index"));
    const Story& story = stories.at(s.story);
    const LanguagePack& pack = packs.at(story.language);
    const bool hint = r.at("kind") == "hint";
    const std::string given = r.value("given", "");
    AttemptOutcome out = hint ? se.progress.request_hint(se.exercise) : se.progress.submit(se.exercise, given, pack);
    if (!hint) se.answers.emplace_back(given, out.correct);
    AttemptEvent e;
    e.learner = s.learner;
    e.exercise = s.id + "/" + se.exercise.id;
    e.constructs = se.exercise.candidate.constructs;
    e.ordinal = ++se.ordinal;
    e.kind = hint ? AttemptKind::HintRequest : AttemptKind::Answer;
    e.given = given;
    e.correct = out.correct;
    e.hints_consumed = se.progress.hints_consumed();
    e.timestamp = r.value("timestamp", std::int64_t{0});
    if (!logs.at(story.language).record_attempt(e).empty()) states[story.language].reset();
    return io::outcome_json(out);
  }

  // -- helpers ----------------------------------------------------------------

  const User& auth(const ApiRequest& req) const {
    const auto it = tokens.find(req.token);
    if (req.token.empty() || it == tokens.end()) fail(ErrorCode::Unauthorized, "missing or unknown bearer token");
    return users.at(it->second);
  }

  static json body_json(const ApiRequest& req) {
    if (req.body.empty()) return json::object();
    json b = json::parse(req.body, nullptr, false);
    if (b.is_discarded() || !b.is_object()) fail(ErrorCode::BadRequest, "request body must be a JSON object");
    return b;
  }

  static std::string body_string(const json& b, const char* key) {
    const auto it = b.find(key);
    if (it == b.end() || !it->is_string()) fail(ErrorCode::BadRequest, std::string("missing string field '") + key + "'");
    return it->get<std::string>();
  }

  const LanguagePack& pack_for(const std::string& lang) const {
    const auto it = packs.find(lang);
    if (it == packs.end()) fail(ErrorCode::UnsupportedLanguage, "no pack loaded for language '" + lang + "'");
    return it->second;
  }

  const std::string& query_language(const ApiRequest& req) const {
    const auto it = req.query.find("language");
    if (it == req.query.end()) fail(ErrorCode::BadRequest, "query parameter 'language' is required");
    pack_for(it->second);
    return it->second;
  }

  bool can_read(const User& u, const Story& s) const {
    if (s.owner == u.id || s.visibility == "public") return true;
    if (s.visibility == "group") {
      const auto g = groups.find(s.group);
      return g != groups.end() && (g->second.teacher == u.id || g->second.members.count(u.id) > 0);
    }
    return false;
  }

  const Story& readable_story(const User& u, const std::string& id) const {
    const auto it = stories.find(id);
    if (it == stories.end()) fail(ErrorCode::NotFound, "no story '" + id + "'");
    if (!can_read(u, it->second)) fail(ErrorCode::Forbidden, "story '" + id + "' is not visible to this user");
    return it->second;
  }

  Session& own_session(const User& u, const std::string& id) {
    const auto it = sessions.find(id);
    if (it == sessions.end()) fail(ErrorCode::NotFound, "no session '" + id + "'");
    if (it->second.learner != u.id) fail(ErrorCode::Forbidden, "session belongs to another learner");
    return it->second;
  }

  Group& owned_group(const User& u, const std::string& id) {
    const auto it = groups.find(id);
    if (it == groups.end()) fail(ErrorCode::NotFound, "no group '" + id + "'");
    if (it->second.teacher != u.id) fail(ErrorCode::Forbidden, "group belongs to another teacher");
    return it->second;
  }

  const SkillState& state_for(const std::string& lang) {
    auto& slot = states[lang];
    if (!slot) {
      const AttemptLog& log = logs.at(lang);
      slot = log.observations().empty() ? SkillState{} : estimate(log.observations());
    }
    return *slot;
  }

  double default_theta(const User& u, const std::string& lang) const {
    if (const auto it = placed.find({u.id, lang}); it != placed.end()) return it->second.theta;
    if (const auto it = u.levels.find(lang); it != u.levels.end()) return cefr_to_logit(it->second);
    return 0.0;
  }

  double predicted(const User& u, const std::string& lang, const std::vector<std::string>& constructs) {
    const SkillState& st = state_for(lang);
    try {
      return p_correct(u.id, constructs, st, &packs.at(lang), default_theta(u, lang));
    } catch (const Error&) {
      return 0.5;
    }
  }

  static json user_json(const User& u, bool with_token) {
    json out{{"id", u.id}, {"name", u.name}, {"role", u.role == Role::Teacher ? "teacher" : "learner"},
             {"levels", u.levels}};
    if (with_token) out["token"] = u.token;
    return out;
  }

  static json story_summary(const Story& s) {
    return json{{"id", s.id}, {"owner", s.owner}, {"language", s.language}, {"title", s.title},
                {"visibility", s.visibility}, {"group", s.group.empty() ? json(nullptr) : json(s.group)},
                {"tokens", s.annotated.tokens.size()}, {"instances", s.instances.size()},
                {"candidates", s.candidates.size()}};
  }

  json preview_json(const Story& s) const {
    const LanguagePack& pack = packs.at(s.language);
    std::vector<bool> candidate(s.annotated.tokens.size(), false);
    for (const auto& c : s.candidates)
      for (std::size_t t = c.first; t <= c.last; ++t) candidate[t] = true;
    json tokens = json::array();
    for (std::size_t i = 0; i < s.annotated.tokens.size(); ++i) {
      const Token& t = s.annotated.tokens[i];
      json tj{{"index", i}, {"surface", t.surface}, {"space_after", space_after(s.annotated, i)},
              {"sentence", t.sentence}, {"is_word", t.is_word}, {"candidate", static_cast<bool>(candidate[i])},
              {"ambiguous", t.ambiguous}};
      if (t.chosen) {
        tj["lemma"] = t.chosen->lemma;
        tj["pos"] = t.chosen->pos;
      } else {
        tj["lemma"] = nullptr;
        tj["pos"] = nullptr;
      }
      tj["constructs"] = constructs_for_token(s.annotated, s.instances, i, pack);
      tokens.push_back(std::move(tj));
    }
    json chunks = json::array();
    for (const auto& c : s.annotated.chunks) chunks.push_back(io::to_json(c));
    json instances = json::array();
    std::map<std::string, std::size_t> counts;
    for (const auto& inst : s.instances) {
      json ij{{"construct", inst.construct}, {"sentence", inst.sentence}, {"tokens", inst.tokens},
              {"candidates", inst.candidates}};
      instances.push_back(std::move(ij));
      ++counts[inst.construct];
    }
    json list = json::array();
    for (const auto& def : pack.constructs) {
      const auto it = counts.find(def.id);
      if (it == counts.end()) continue;
      list.push_back({{"id", def.id}, {"name", def.name}, {"count", it->second},
                      {"cefr", def.cefr ? json(*def.cefr) : json(nullptr)}});
    }
    return json{{"story", story_summary(s)}, {"tokens", tokens}, {"chunks", chunks}, {"instances", instances},
                {"constructs", list}};
  }

  static bool space_after(const AnnotatedStory& s, std::size_t i) {
    if (i + 1 >= s.tokens.size()) return false;
    return s.tokens[i + 1].byte_start > s.tokens[i].byte_end;
  }

  json exercise_state(const SessionExercise& se, const LanguagePack& pack) const {
    json ex = io::exercise_client_json(se.exercise, pack);
    const ExerciseProgress& p = se.progress;
    json hints = json::array();
    for (const std::size_t level : p.history().consumed)
      for (const auto& h : se.exercise.hints)
        if (h.level == level) hints.push_back(io::to_json(h));
    json answers = json::array();
    for (const auto& [given, ok] : se.answers) answers.push_back({{"given", given}, {"correct", ok}});
    const bool exhausted = p.finished() && !p.solved();
    ex["state"] = {{"hearts", p.hearts()},   {"finished", p.finished()}, {"solved", p.solved()},
                   {"exhausted", exhausted}, {"hints", hints},          {"answers", answers}};
    ex["answer"] = p.finished() ? json(se.exercise.candidate.answer) : json(nullptr);
    return ex;
  }

  json session_json(const Session& s) const {
    const Story& story = stories.at(s.story);
    const LanguagePack& pack = packs.at(story.language);
    std::map<std::size_t, std::string> starts;
    std::vector<bool> hidden(story.annotated.tokens.size(), false);
    json exercises = json::array();
    for (const auto& se : s.exercises) {
      const auto& c = se.exercise.candidate;
      starts[c.first] = se.exercise.id;
      for (std::size_t t = c.first; t <= c.last; ++t) hidden[t] = !se.progress.finished();
      exercises.push_back(exercise_state(se, pack));
    }
    json tokens = json::array();
    for (std::size_t i = 0; i < story.annotated.tokens.size(); ++i) {
      const Token& t = story.annotated.tokens[i];
      const auto st = starts.find(i);
      tokens.push_back({{"index", i},
                        {"surface", hidden[i] ? json(nullptr) : json(t.surface)},
                        {"space_after", space_after(story.annotated, i)},
                        {"exercise", st == starts.end() ? json(nullptr) : json(st->second)}});
    }
    return json{{"id", s.id},       {"learner", s.learner},     {"story", s.story},
                {"language", story.language}, {"active", s.active}, {"seed", s.seed},
                {"density", s.density}, {"exercises", exercises}, {"tokens", tokens}};
  }

  // -- session creation ---------------------------------------------------------

  json plan_session(const User& u, const Story& story, std::size_t density, std::uint64_t seed) {
    const LanguagePack& pack = packs.at(story.language);
    if (story.candidates.empty()) fail(ErrorCode::NoCandidates, "story '" + story.id + "' has no exercisable words");
    std::mt19937_64 rng(seed);
    const SamplerConfig cfg;
    std::map<std::size_t, std::vector<std::size_t>> by_paragraph;
    for (std::size_t i = 0; i < story.candidates.size(); ++i)
      by_paragraph[story.annotated.sentences[story.candidates[i].sentence].paragraph].push_back(i);

    std::vector<std::size_t> chosen;
    for (auto& [para, pool] : by_paragraph) {
      std::vector<std::pair<std::size_t, std::size_t>> taken;
      for (std::size_t k = 0; k < density && !pool.empty(); ++k) {
        std::vector<double> p;
        for (const std::size_t i : pool) p.push_back(predicted(u, story.language, story.candidates[i].constructs));
        const std::size_t pick = pool[sample_index(p, cfg, rng)];
        const ExerciseCandidate& c = story.candidates[pick];
        chosen.push_back(pick);
        std::erase_if(pool, [&](std::size_t i) {
          const ExerciseCandidate& o = story.candidates[i];
          return o.first <= c.last && c.first <= o.last;
        });
      }
    }
    std::sort(chosen.begin(), chosen.end());

    json specs = json::array();
    for (const std::size_t i : chosen) {
      const ExerciseCandidate& c = story.candidates[i];
      json spec{{"first", c.first}, {"last", c.last}, {"kind", "cloze"}};
      if (uniform01(rng) < 0.5) {
        for (const auto& construct : c.constructs) {
          try {
            const Exercise mc = build_mc(c, construct, pack, rng);
            spec = {{"first", c.first}, {"last", c.last}, {"kind", "multiple_choice"},
                    {"construct", construct}, {"options", mc.options}};
            break;
          } catch (const Error&) {
            // No usable recipe for this construct; try the next one.
          }
        }
      }
      specs.push_back(std::move(spec));
    }
    return specs;
  }

  // -- placement ----------------------------------------------------------------

  const std::vector<GoldItem>& gold_for(const std::string& lang) {
    auto it = gold_items.find(lang);
    if (it != gold_items.end()) return it->second;
    const LanguagePack& pack = packs.at(lang);
    std::vector<GoldItem> items;
    for (const auto& g : pack.gold) {
      GoldItem gi;
      gi.story = annotate("placement-" + g.id, g.text, pack);
      gi.candidates = generate_candidates(gi.story, detect_constructs(gi.story, pack), pack);
      items.push_back(std::move(gi));
    }
    return gold_items.emplace(lang, std::move(items)).first->second;
  }

  json placement_json(const PlacementRun& run, std::optional<bool> correct) const {
    json out{{"id", run.id}, {"language", run.language}, {"finished", run.step.finished},
             {"theta", run.step.theta}, {"se", run.step.se}, {"answered", run.responses.size()}};
    if (correct) out["correct"] = *correct;
    if (!run.step.finished && run.step.next) {
      const std::size_t k = *run.step.next;
      const Exercise& ex = run.items[k];
      json ctx = json::array();
      const auto& tokens = run.contexts[k];
      for (const Token* t : tokens) ctx.push_back(t ? json(t->surface) : json(nullptr));
      out["item"] = {{"construct", run.bank[k].id}, {"lemma", ex.candidate.hint_lemma}, {"context", ctx}};
    } else {
      out["item"] = nullptr;
    }
    return out;
  }

  json start_placement(const User& u, const std::string& lang) {
    const LanguagePack& pack = packs.at(lang);
    const auto& gold = gold_for(lang);
    PlacementRun run;
    run.id = "p" + std::to_string(next_placement++);
    run.learner = u.id;
    run.language = lang;
    const SkillState& st = state_for(lang);
    for (const auto& def : pack.constructs) {
      for (const auto& gi : gold) {
        const auto c = std::find_if(gi.candidates.begin(), gi.candidates.end(), [&](const ExerciseCandidate& x) {
          return std::find(x.constructs.begin(), x.constructs.end(), def.id) != x.constructs.end();
        });
        if (c == gi.candidates.end()) continue;
        double b = 0.0;
        try {
          b = construct_difficulty(def.id, st, &pack);
        } catch (const Error&) {
        }
        run.bank.push_back({def.id, b});
        run.items.push_back(build_cloze(*c));
        std::vector<const Token*> ctx;
        const Sentence& sent = gi.story.sentences[c->sentence];
        for (std::size_t t = sent.first_token; t < sent.end_token; ++t)
          ctx.push_back(t >= c->first && t <= c->last ? nullptr : &gi.story.tokens[t]);
        run.contexts.push_back(std::move(ctx));
        break;
      }
    }
    run.step = placement_next(run.bank, run.responses);
    const auto id = run.id;
    const json out = placement_json(run, std::nullopt);
    placements[id] = std::move(run);
    return out;
  }

  // -- routing ------------------------------------------------------------------

  ApiResponse route(const ApiRequest& req) {
    const auto seg = split_path(req.path);
    if (seg.size() < 2 || seg[0] != "api" || seg[1] != "v1") fail(ErrorCode::NotFound, "unknown route " + req.path);
    const std::vector<std::string> p(seg.begin() + 2, seg.end());
    const std::string& m = req.method;
    const auto is = [&](std::initializer_list<const char*> parts) {
      if (parts.size() != p.size()) return false;
      std::size_t i = 0;
      for (const char* part : parts) {
        if (std::string(part) != "*" && p[i] != part) return false;
        ++i;
      }
      return true;
    };

    if (m == "GET" && is({"health"})) return respond(200, {{"status", "ok"}});
    if (m == "GET" && is({"languages"})) {
      json list = json::array();
      for (const auto& [lang, pack] : packs) {
        json cs = json::array();
        for (const auto& c : pack.constructs)
          cs.push_back({{"id", c.id}, {"name", c.name}, {"cefr", c.cefr ? json(*c.cefr) : json(nullptr)}});
        list.push_back({{"language", lang}, {"name", pack.name}, {"constructs", cs}});
      }
      return respond(200, {{"languages", list}});
    }
    if (m == "POST" && is({"users"})) {
      const json b = body_json(req);
      const std::string name = body_string(b, "name");
      const std::string role = b.value("role", "learner");
      if (role != "learner" && role != "teacher") fail(ErrorCode::BadRequest, "role must be learner or teacher");
      const std::string id = "u" + std::to_string(next_user);
      commit({{"type", "user"}, {"id", id}, {"name", name}, {"role", role}, {"token", random_token()}});
      return respond(201, user_json(users.at(id), true));
    }

    const User& u = auth(req);

    if (m == "GET" && is({"me"})) {
      json out = user_json(u, false);
      json est = json::object();
      for (const auto& [lang, pack] : packs) {
        const SkillState& st = state_for(lang);
        const auto it = st.theta.find(u.id);
        est[lang] = {{"theta", it == st.theta.end() ? default_theta(u, lang) : it->second},
                     {"estimated", it != st.theta.end()}};
      }
      out["ability"] = est;
      return respond(200, out);
    }
    if (m == "PUT" && is({"me", "level"})) {
      const json b = body_json(req);
      const std::string lang = body_string(b, "language"), cefr = body_string(b, "cefr");
      pack_for(lang);
      try {
        cefr_to_logit(cefr);
      } catch (const Error&) {
        fail(ErrorCode::BadRequest, "cefr must be one of A1..C2");
      }
      commit({{"type", "level"}, {"user", u.id}, {"language", lang}, {"cefr", cefr}});
      return respond(200, {{"language", lang}, {"cefr", cefr}, {"theta", cefr_to_logit(cefr)}});
    }
    if (m == "GET" && is({"translate"})) {
      const std::string& lang = query_language(req);
      const auto w = req.query.find("word");
      if (w == req.query.end() || unicode::trim(w->second).empty()) fail(ErrorCode::BadRequest, "query parameter 'word' is required");
      const LanguagePack& pack = packs.at(lang);
      json entries = json::array();
      std::set<std::pair<std::string, std::string>> seen;
      auto readings = analyze(w->second, pack);
      if (readings.empty()) readings = analyze(unicode::to_lower(w->second), pack);
      for (const auto& a : readings) {
        if (!seen.insert({a.lemma, a.pos}).second) continue;
        entries.push_back({{"lemma", a.lemma}, {"pos", a.pos}, {"gloss", pack.lexicon[a.lexeme].gloss}});
      }
      return respond(200, {{"word", w->second}, {"language", lang}, {"entries", entries}});
    }

    // stories
    if (m == "POST" && is({"stories"})) {
      const json b = body_json(req);
      const std::string lang = body_string(b, "language");
      pack_for(lang);
      const std::string text = b.value("text", "");
      if (unicode::trim(text).empty()) fail(ErrorCode::EmptyText, "story text is empty");
      const std::string id = "s" + std::to_string(next_story);
      commit({{"type", "story"}, {"id", id}, {"owner", u.id}, {"language", lang}, {"title", b.value("title", "")},
              {"text", text}});
      return respond(201, story_summary(stories.at(id)));
    }
    if (m == "GET" && is({"stories"})) {
      json list = json::array();
      for (const auto& [id, s] : stories)
        if (can_read(u, s)) list.push_back(story_summary(s));
      return respond(200, {{"stories", list}});
    }
    if (m == "GET" && is({"stories", "*"})) return respond(200, story_summary(readable_story(u, p[1])));
    if (m == "GET" && is({"stories", "*", "preview"})) return respond(200, preview_json(readable_story(u, p[1])));
    if (m == "PUT" && is({"stories", "*", "visibility"})) {
      const Story& s = readable_story(u, p[1]);
      if (s.owner != u.id) fail(ErrorCode::Forbidden, "only the owner may change visibility");
      const std::string v = body_string(body_json(req), "visibility");
      if (v != "private" && v != "public") fail(ErrorCode::BadRequest, "visibility must be private or public");
      commit({{"type", "visibility"}, {"story", s.id}, {"visibility", v}});
      return respond(200, story_summary(s));
    }
    if (m == "POST" && is({"stories", "*", "sessions"})) {
      const Story& s = readable_story(u, p[1]);
      std::size_t density = config.default_density;
      std::uint64_t seed = next_session;
      try {
        if (const auto it = req.query.find("density"); it != req.query.end()) density = std::stoul(it->second);
        if (const auto it = req.query.find("seed"); it != req.query.end()) seed = std::stoull(it->second);
      } catch (const std::exception&) {
        fail(ErrorCode::BadRequest, "density and seed must be non-negative integers");
      }
      if (density == 0) fail(ErrorCode::BadRequest, "density must be positive");
      const json specs = plan_session(u, s, density, seed);
      const std::string id = "x" + std::to_string(next_session);
      commit({{"type", "session"}, {"id", id}, {"learner", u.id}, {"story", s.id}, {"seed", seed},
              {"density", density}, {"exercises", specs}});
      return respond(201, session_json(sessions.at(id)));
    }
    if (m == "GET" && is({"sessions", "*"})) return respond(200, session_json(own_session(u, p[1])));
    if (m == "POST" && (is({"sessions", "*", "exercises", "*", "answer"}) || is({"sessions", "*", "exercises", "*", "hint"}))) {
      Session& s = own_session(u, p[1]);
      if (!s.active) fail(ErrorCode::OutOfOrderAttempt, "session was replaced by a newer one");
      const auto it = std::find_if(s.exercises.begin(), s.exercises.end(),
                                   [&](const SessionExercise& se) { return se.exercise.id == p[3]; });
      if (it == s.exercises.end()) fail(ErrorCode::UnknownExercise, "no exercise '" + p[3] + "' in this session");
      const bool hint = p[4] == "hint";
      json record{{"type", "attempt"},
                  {"language", stories.at(s.story).language},
                  {"session", s.id},
                  {"index", static_cast<std::size_t>(it - s.exercises.begin())},
                  {"kind", hint ? "hint" : "answer"},
                  {"timestamp", now_seconds()}};
      if (!hint) record["given"] = body_string(body_json(req), "answer");
      json out = apply(record);
      if (writer) writer->write_line(record.dump());
      out["exercise"] = p[3];
      return respond(200, out);
    }

    // placement
    if (m == "POST" && is({"placement"})) {
      const std::string lang = body_string(body_json(req), "language");
      pack_for(lang);
      return respond(201, start_placement(u, lang));
    }
    if (m == "GET" && is({"placement", "*"})) {
      const auto it = placements.find(p[1]);
      if (it == placements.end()) fail(ErrorCode::NotFound, "no placement '" + p[1] + "'");
      if (it->second.learner != u.id) fail(ErrorCode::Forbidden, "placement belongs to another learner");
      return respond(200, placement_json(it->second, std::nullopt));
    }
    if (m == "POST" && is({"placement", "*", "answer"})) {
      const auto it = placements.find(p[1]);
      if (it == placements.end()) fail(ErrorCode::NotFound, "no placement '" + p[1] + "'");
      PlacementRun& run = it->second;
      if (run.learner != u.id) fail(ErrorCode::Forbidden, "placement belongs to another learner");
      if (run.step.finished || !run.step.next) fail(ErrorCode::OutOfOrderAttempt, "placement is finished");
      const std::string given = body_string(body_json(req), "answer");
      const bool ok = check_answer(run.items[*run.step.next], given);
      run.responses.push_back({*run.step.next, ok});
      run.step = placement_next(run.bank, run.responses);
      if (run.step.finished)
        commit({{"type", "placement"}, {"learner", u.id}, {"language", run.language}, {"theta", run.step.theta},
                {"se", run.step.se}});
      return respond(200, placement_json(run, ok));
    }

    // progress
    if (m == "GET" && is({"progress"})) return respond(200, progress_json(u.id, query_language(req)));

    // groups
    if (m == "POST" && is({"groups"})) {
      if (u.role != Role::Teacher) fail(ErrorCode::Forbidden, "only teachers create groups");
      const std::string id = "g" + std::to_string(next_group);
      commit({{"type", "group"}, {"id", id}, {"teacher", u.id}, {"name", body_string(body_json(req), "name")}});
      return respond(201, group_json(groups.at(id)));
    }
    if (m == "GET" && is({"groups"})) {
      json list = json::array();
      for (const auto& [id, g] : groups)
        if (g.teacher == u.id || g.members.count(u.id) || g.invited.count(u.id)) list.push_back(group_json(g));
      return respond(200, {{"groups", list}});
    }
    if (m == "POST" && is({"groups", "*", "invitations"})) {
      Group& g = owned_group(u, p[1]);
      const std::string learner = body_string(body_json(req), "learner");
      if (!users.count(learner)) fail(ErrorCode::NotFound, "no user '" + learner + "'");
      if (!g.members.count(learner)) commit({{"type", "invite"}, {"group", g.id}, {"learner", learner}});
      return respond(201, group_json(g));
    }
    if (m == "POST" && is({"groups", "*", "accept"})) {
      const auto it = groups.find(p[1]);
      if (it == groups.end()) fail(ErrorCode::NotFound, "no group '" + p[1] + "'");
      if (!it->second.invited.count(u.id) && !it->second.members.count(u.id))
        fail(ErrorCode::Forbidden, "no invitation to this group");
      if (it->second.invited.count(u.id)) commit({{"type", "accept"}, {"group", p[1]}, {"learner", u.id}});
      return respond(200, group_json(it->second));
    }
    if (m == "POST" && is({"groups", "*", "stories"})) {
      Group& g = owned_group(u, p[1]);
      const std::string sid = body_string(body_json(req), "story");
      const Story& s = readable_story(u, sid);
      if (s.owner != u.id) fail(ErrorCode::Forbidden, "only the owner may share a story");
      commit({{"type", "share"}, {"group", g.id}, {"story", sid}});
      return respond(201, group_json(g));
    }
    if (m == "GET" && is({"groups", "*", "progress"})) {
      const Group& g = owned_group(u, p[1]);
      const std::string& lang = query_language(req);
      json members = json::array();
      for (const auto& learner : g.members) members.push_back(progress_json(learner, lang));
      return respond(200, {{"group", g.id}, {"language", lang}, {"members", members}});
    }
    if (m == "GET" && is({"groups", "*", "members", "*", "progress"})) {
      const Group& g = owned_group(u, p[1]);
      if (!g.members.count(p[3])) fail(ErrorCode::Forbidden, "learner has not accepted an invitation to this group");
      return respond(200, progress_json(p[3], query_language(req)));
    }
    fail(ErrorCode::NotFound, "unknown route " + m + " " + req.path);
  }

  json group_json(const Group& g) const {
    return json{{"id", g.id},
                {"name", g.name},
                {"teacher", g.teacher},
                {"members", std::vector<std::string>(g.members.begin(), g.members.end())},
                {"invited", std::vector<std::string>(g.invited.begin(), g.invited.end())},
                {"stories", std::vector<std::string>(g.stories.begin(), g.stories.end())}};
  }

  json progress_json(const std::string& learner, const std::string& lang) {
    const LanguagePack& pack = packs.at(lang);
    const AttemptLog& log = logs.at(lang);
    const SkillState& st = state_for(lang);
    json list = json::array();
    if (log.has_learner(learner))
      for (const auto& p : progress_report(learner, st, log, &pack)) list.push_back(io::to_json(p));
    const auto th = st.theta.find(learner);
    return json{{"learner", learner},
                {"language", lang},
                {"theta", th == st.theta.end() ? json(nullptr) : json(th->second)},
                {"constructs", list}};
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}
Service::~Service() { stop(); }

ApiResponse Service::handle(const ApiRequest& request) {
  std::lock_guard lock(impl_->mutex);
  try {
    return impl_->route(request);
  } catch (const Error& e) {
    return error_response(e.code(), e.what());
  } catch (const std::exception& e) {
    return error_response(ErrorCode::Internal, e.what());
  }
}

bool Service::serve(const std::string& host, int port, const std::function<void(int)>& on_ready) {
  auto server = std::make_unique<httplib::Server>();
  const auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query[k] = v;
    const std::string auth = req.get_header_value("Authorization");
    if (auth.rfind("Bearer ", 0) == 0) r.token = auth.substr(7);
    r.body = req.body;
    const ApiResponse out = handle(r);
    res.status = out.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(out.body, "application/json; charset=utf-8");
  };
  const std::string pattern = "/api/v1/.*";
  server->Get(pattern, handler);
  server->Post(pattern, handler);
  server->Put(pattern, handler);
  server->Options(pattern, [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS");
    res.status = 204;
  });
  int bound = port;
  if (port == 0) {
    bound = server->bind_to_any_port(host);
    if (bound < 0) return false;
  } else if (!server->bind_to_port(host, port)) {
    return false;
  }
  httplib::Server* raw = server.get();
  {
    std::lock_guard lock(impl_->mutex);
    impl_->server = std::move(server);
  }
  if (on_ready) on_ready(bound);
  return raw->listen_after_bind();
}

void Service::stop() {
  if (!impl_) return;
  std::lock_guard lock(impl_->mutex);
  if (impl_->server) impl_->server->stop();
}

}  // namespace construe
