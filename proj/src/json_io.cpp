#include "json_io.hpp"

#include <algorithm>

namespace construe::io {

json to_json(const FeatureBundle& f) {
  json out = json::object();
  for (const auto& [k, v] : f.entries()) out[k] = v;
  return out;
}

json to_json(const MorphAnalysis& a) {
  return json{{"lemma", a.lemma}, {"pos", a.pos}, {"features", to_json(a.features)}};
}

json to_json(const Chunk& c) {
  return json{{"kind", std::string(chunk_kind_name(c.kind))}, {"first", c.first}, {"last", c.last}, {"head", c.head}};
}

json to_json(const Hint& h) {
  json out{{"level", h.level}, {"text", h.text}};
  out["target"] = h.target ? json(*h.target) : json(nullptr);
  if (!h.category.empty()) out["category"] = h.category;
  return out;
}

json to_json(const AnswerDiff& d) {
  json m = json::array();
  for (const auto& x : d.mismatches) m.push_back({{"category", x.category}, {"expected", x.expected}, {"given", x.given}});
  return json{{"lemma_match", d.lemma_match}, {"out_of_vocabulary", d.out_of_vocabulary}, {"mismatches", m}};
}

json to_json(const ConstructProgress& p) {
  json out{{"construct", p.construct},
           {"observations", p.observations},
           {"successes", p.successes},
           {"weighted_rate", p.weighted_rate},
           {"recent", p.recent},
           {"recent_rate", p.recent_rate}};
  out["p_correct"] = p.p_correct ? json(*p.p_correct) : json(nullptr);
  return out;
}

json to_json(const SkillState& s) {
  json th = json::object(), b = json::object();
  for (const auto& [k, v] : s.theta) th[k] = {{"theta", v}, {"se", s.theta_se.at(k)}};
  for (const auto& [k, v] : s.b) b[k] = {{"b", v}, {"se", s.b_se.at(k)}};
  return json{{"learners", th},
              {"constructs", b},
              {"iterations", s.iterations},
              {"log_likelihood", s.log_likelihood},
              {"converged", s.converged}};
}

json instance_json(const AnnotatedStory& story, const ConstructInstance& inst) {
  const std::size_t base = story.sentences[inst.sentence].first_token;
  json surfaces = json::array(), local = json::array(), local_c = json::array();
  for (const std::size_t t : inst.tokens) {
    surfaces.push_back(story.tokens[t].surface);
    local.push_back(t - base);
  }
  for (const std::size_t t : inst.candidates) local_c.push_back(t - base);
  return json{{"construct", inst.construct}, {"sentence", inst.sentence}, {"tokens", inst.tokens},
              {"candidates", inst.candidates}, {"surfaces", surfaces}, {"sentence_tokens", local},
              {"sentence_candidates", local_c}};
}

json annotation_json(const AnnotatedStory& story, const std::vector<ConstructInstance>& instances,
                     const LanguagePack& pack) {
  json tokens = json::array();
  for (std::size_t i = 0; i < story.tokens.size(); ++i) {
    const Token& t = story.tokens[i];
    json tj{{"index", i}, {"surface", t.surface}, {"start", t.char_start}, {"end", t.char_end},
            {"sentence", t.sentence}, {"is_word", t.is_word}, {"ambiguous", t.ambiguous}};
    json readings = json::array();
    for (const auto& a : t.analyses) readings.push_back(to_json(a));
    tj["analyses"] = readings;
    tj["chosen"] = t.chosen ? to_json(*t.chosen) : json(nullptr);
    tj["constructs"] = constructs_for_token(story, instances, i, pack);
    tokens.push_back(std::move(tj));
  }
  json sentences = json::array();
  for (const auto& s : story.sentences)
    sentences.push_back({{"first_token", s.first_token}, {"end_token", s.end_token}, {"paragraph", s.paragraph}});
  json chunks = json::array();
  for (const auto& c : story.chunks) chunks.push_back(to_json(c));
  json found = json::array();
  for (const auto& inst : instances) found.push_back(instance_json(story, inst));
  return json{{"id", story.id}, {"language", pack.language}, {"text", story.text}, {"tokens", tokens},
              {"sentences", sentences}, {"chunks", chunks}, {"constructs", found}};
}

json gold_json(const std::vector<GoldSentence>& sentences) {
  json out = json::array();
  for (const auto& g : sentences) {
    json inst = json::array();
    for (const auto& i : g.instances)
      inst.push_back({{"construct", i.construct}, {"tokens", i.tokens}, {"surfaces", i.surfaces}, {"candidates", i.candidates}});
    out.push_back({{"id", g.id}, {"text", g.text}, {"instances", inst}});
  }
  return json{{"sentences", out}};
}

json detect_gold(const std::vector<GoldSentence>& sentences, const LanguagePack& pack) {
  std::vector<GoldSentence> found;
  for (const auto& g : sentences) {
    const AnnotatedStory story = annotate(g.id, g.text, pack);
    GoldSentence d{g.id, g.text, {}};
    for (const auto& inst : detect_constructs(story, pack)) {
      const std::size_t base = story.sentences[inst.sentence].first_token;
      GoldInstance gi;
      gi.construct = inst.construct;
      for (const std::size_t t : inst.tokens) {
        gi.tokens.push_back(t - base);
        gi.surfaces.push_back(story.tokens[t].surface);
      }
      for (const std::size_t t : inst.candidates) gi.candidates.push_back(t - base);
      d.instances.push_back(std::move(gi));
    }
    found.push_back(std::move(d));
  }
  return gold_json(found);
}

json exercise_client_json(const Exercise& ex, const LanguagePack& pack) {
  const ExerciseCandidate& c = ex.candidate;
  json constructs = json::array();
  for (const auto& id : c.constructs) {
    const ConstructDef* def = pack.find_construct(id);
    constructs.push_back({{"id", id}, {"name", def ? def->name : id}});
  }
  json out{{"id", ex.id}, {"kind", std::string(exercise_kind_name(ex.kind))}, {"sentence", c.sentence},
           {"first", c.first}, {"last", c.last}, {"lemma", c.hint_lemma}, {"constructs", constructs}};
  if (ex.kind == ExerciseKind::MultipleChoice) {
    out["options"] = ex.options;
    out["construct"] = ex.construct.value_or("");
  }
  out["hint_count"] = ex.hints.size();
  return out;
}

json exercise_server_json(const Exercise& ex) {
  const ExerciseCandidate& c = ex.candidate;
  json hints = json::array();
  for (const auto& h : ex.hints) hints.push_back(to_json(h));
  json out{{"id", ex.id}, {"kind", std::string(exercise_kind_name(ex.kind))}, {"first", c.first}, {"last", c.last},
           {"anchor", c.anchor}, {"answer", c.answer}, {"lemma", c.hint_lemma}, {"constructs", c.constructs},
           {"hints", hints}};
  if (c.expected) out["expected"] = to_json(*c.expected);
  if (ex.kind == ExerciseKind::MultipleChoice) {
    out["options"] = ex.options;
    out["correct"] = ex.correct;
    out["construct"] = ex.construct.value_or("");
  }
  return out;
}

json outcome_json(const AttemptOutcome& o) {
  json out{{"correct", o.correct}, {"finished", o.finished}, {"exhausted", o.exhausted}, {"hearts", o.hearts}};
  out["hint"] = o.hint ? to_json(*o.hint) : json(nullptr);
  out["diff"] = o.diff ? to_json(*o.diff) : json(nullptr);
  out["answer"] = o.revealed ? json(*o.revealed) : json(nullptr);
  return out;
}

json violations_json(const std::vector<Violation>& v) {
  json list = json::array();
  for (const auto& x : v)
    list.push_back({{"code", std::string(error_code_name(x.code))}, {"pointer", x.pointer}, {"message", x.message}});
  return json{{"valid", v.empty()}, {"violations", list}};
}

}  // namespace construe::io
