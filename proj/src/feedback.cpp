#include "construe/feedback.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "construe/unicode.hpp"

namespace construe {

namespace {

std::string replace_all(std::string text, std::string_view key, std::string_view value) {
  for (std::size_t pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size()))
    text.replace(pos, key.size(), value);
  return text;
}

std::string join_labels(const std::vector<std::string>& items, const FeatureHierarchy& h) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += i + 1 == items.size() ? h.last_separator : h.separator;
    out += items[i];
  }
  return out;
}

std::string lemma_for_government(const AnnotatedStory& story, std::size_t token) {
  const Token& t = story.tokens[token];
  if (const Chunk* c = story.chunk_at(token, ChunkKind::AnalyticVerb))
    if (story.tokens[c->head].chosen) return story.tokens[c->head].chosen->lemma;
  return t.chosen ? t.chosen->lemma : t.surface;
}

bool covers(const ConstructInstance& inst, const ExerciseCandidate& c) {
  return std::any_of(inst.candidates.begin(), inst.candidates.end(),
                     [&](std::size_t t) { return t >= c.first && t <= c.last; });
}

const ConstructInstance* instance_for(const std::vector<ConstructInstance>& instances, const std::string& construct,
                                      const ExerciseCandidate& c) {
  for (const auto& inst : instances)
    if (inst.construct == construct && inst.story == c.story && covers(inst, c)) return &inst;
  return nullptr;
}

std::size_t governor_of(const ConstructDef& def, const ConstructInstance& inst, std::size_t anchor) {
  for (std::size_t k = 0; k < inst.tokens.size(); ++k)
    if (inst.tokens[k] == anchor && def.matchers[k].governed_by) return inst.tokens[*def.matchers[k].governed_by];
  for (const std::size_t t : inst.tokens)
    if (t != anchor) return t;
  return anchor;
}

std::string interpolate(const std::string& tpl, const AnnotatedStory& story, const ConstructInstance& inst,
                        std::size_t governor) {
  static const std::regex placeholder(R"(\{(lemma|surface):(\d+)\})");
  std::string out = replace_all(tpl, "{governor}", lemma_for_government(story, governor));
  std::string result;
  auto begin = std::sregex_iterator(out.begin(), out.end(), placeholder);
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    result += out.substr(last, m.position(0) - last);
    const std::size_t slot = std::stoul(m.str(2));
    if (slot < inst.tokens.size()) {
      const Token& t = story.tokens[inst.tokens[slot]];
      result += m.str(1) == "surface" ? t.surface : (t.chosen ? t.chosen->lemma : t.surface);
    }
    last = m.position(0) + m.length(0);
  }
  result += out.substr(last);
  return result;
}

std::vector<std::string> ordered_categories(const std::string& pos, const FeatureBundle& a, const FeatureBundle& b,
                                            const LanguagePack& pack) {
  std::vector<std::string> out = pack.hierarchy.categories_for(pos);
  std::set<std::string> rest;
  for (const auto& [k, v] : a) rest.insert(k);
  for (const auto& [k, v] : b) rest.insert(k);
  for (const auto& k : out) rest.erase(k);
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

}  // namespace

std::vector<std::string> distinguishing_categories(const MorphAnalysis& expected, const LanguagePack& pack) {
  const FeatureBundle& citation = citation_features(expected, pack);
  std::vector<std::string> out;
  for (const auto& cat : ordered_categories(expected.pos, expected.features, citation, pack)) {
    const auto v = expected.features.get(cat);
    if (v && citation.get(cat) != v) out.push_back(cat);
  }
  return out;
}

std::string generate_paraphrase(const ParaphraseTemplate& tpl, const ConstructInstance& instance,
                                const AnnotatedStory& story, const LanguagePack& pack) {
  std::vector<std::string> words;
  for (const auto& part : tpl.parts) {
    if (part.text) {
      words.push_back(*part.text);
      continue;
    }
    if (part.slot >= instance.tokens.size()) fail(ErrorCode::GenerationGap, "paraphrase slot outside the instance");
    const Token& t = story.tokens[instance.tokens[part.slot]];
    if (!t.chosen) fail(ErrorCode::GenerationGap, "paraphrase slot token '" + t.surface + "' is ambiguous");
    const MorphAnalysis& a = *t.chosen;
    FeatureBundle f = part.replace ? FeatureBundle{} : a.features;
    for (const auto& [cat, val] : part.features) {
      if (!val.empty() && val[0] == '@') {
        const auto dot = val.find('.');
        const std::size_t ref = std::stoul(val.substr(1, dot - 1));
        const Token& r = story.tokens[instance.tokens.at(ref)];
        const auto v = r.chosen ? r.chosen->features.get(val.substr(dot + 1)) : std::nullopt;
        if (!v) fail(ErrorCode::GenerationGap, "feature reference '" + val + "' has no value");
        f.set(cat, std::string(*v));
      } else {
        f.set(cat, val);
      }
    }
    std::set<std::string> forms;
    try {
      forms = generate(a.lemma, a.pos, f, pack);
    } catch (const Error& e) {
      fail(ErrorCode::GenerationGap, e.what());
    }
    if (forms.empty()) fail(ErrorCode::GenerationGap, "no form of '" + a.lemma + "' with " + f.to_string());
    words.push_back(forms.count(t.surface) ? t.surface : *forms.begin());
  }
  std::string out;
  for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
  return out;
}

std::vector<Hint> build_hint_sequence(const Exercise& exercise, const std::vector<ConstructInstance>& instances,
                                      const AnnotatedStory& story, const LanguagePack& pack) {
  const ExerciseCandidate& c = exercise.candidate;
  const FeatureHierarchy& h = pack.hierarchy;
  std::vector<std::string> linked = exercise.construct ? std::vector<std::string>{*exercise.construct} : c.constructs;
  std::vector<Hint> hints;

  const ConstructDef* primary = nullptr;
  for (const auto& id : linked) {
    const ConstructDef* def = pack.find_construct(id);
    const ConstructInstance* inst = instance_for(instances, id, c);
    if (def == nullptr || inst == nullptr) continue;
    if (primary == nullptr) primary = def;
    if (def->feedback.context.empty()) continue;
    const std::size_t gov = governor_of(*def, *inst, c.anchor);
    hints.push_back({0, interpolate(def->feedback.context, story, *inst, gov), gov, ""});
    primary = def;
    break;
  }

  std::vector<std::string> distinguishing;
  if (c.expected) distinguishing = distinguishing_categories(*c.expected, pack);
  for (const auto& cat : distinguishing)
    hints.push_back({0, replace_all(h.category_template, "{category}", h.category_label(cat)), std::nullopt, cat});

  for (const auto& id : linked) {
    const ConstructDef* def = pack.find_construct(id);
    const ConstructInstance* inst = instance_for(instances, id, c);
    if (def == nullptr || inst == nullptr || !def->paraphrase) continue;
    try {
      const std::string text = generate_paraphrase(*def->paraphrase, *inst, story, pack);
      hints.push_back({0, replace_all(h.paraphrase_template, "{text}", text), std::nullopt, ""});
      break;
    } catch (const Error&) {
      // GenerationGap: the paraphrase hint is omitted.
    }
  }

  std::string final_text;
  if (!distinguishing.empty()) {
    std::vector<std::string> labels;
    for (const auto& cat : distinguishing)
      labels.push_back(h.value_label(cat, *c.expected->features.get(cat)));
    final_text = replace_all(h.values_template, "{values}", join_labels(labels, h));
  } else if (primary != nullptr && !primary->feedback.final_hint.empty()) {
    const ConstructInstance* inst = instance_for(instances, primary->id, c);
    final_text = interpolate(primary->feedback.final_hint, story, *inst, governor_of(*primary, *inst, c.anchor));
  } else {
    final_text = replace_all(h.citation_template, "{lemma}", c.hint_lemma);
  }
  hints.push_back({0, final_text, std::nullopt, ""});
  for (std::size_t i = 0; i < hints.size(); ++i) hints[i].level = i;
  return hints;
}

AnswerDiff diagnose_answer(std::string_view given, const Exercise& exercise, const LanguagePack& pack) {
  AnswerDiff diff;
  const ExerciseCandidate& c = exercise.candidate;
  std::string word = unicode::nfc(unicode::trim(given));
  if (word.empty()) fail(ErrorCode::EmptyInput, "empty answer");
  if (!c.expected) {
    diff.lemma_match = word == c.answer;
    return diff;
  }
  if (c.is_span()) {
    // Compare the word standing where the anchor stands in the span.
    const std::size_t words_before = static_cast<std::size_t>(
        std::count(c.answer.begin(), c.answer.begin() + static_cast<std::ptrdiff_t>(c.anchor_begin), ' '));
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : word) {
      if (ch == ' ') {
        if (!cur.empty()) parts.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    if (!cur.empty()) parts.push_back(cur);
    const std::size_t expected_words =
        static_cast<std::size_t>(std::count(c.answer.begin(), c.answer.end(), ' ')) + 1;
    if (parts.size() != expected_words) {
      diff.out_of_vocabulary = true;
      return diff;
    }
    word = parts[words_before];
  }
  auto analyses = analyze(word, pack);
  if (analyses.empty() && unicode::starts_upper(word)) analyses = analyze(unicode::lower_first(word), pack);
  if (analyses.empty()) {
    diff.out_of_vocabulary = true;
    return diff;
  }
  const MorphAnalysis& expected = *c.expected;
  std::vector<const MorphAnalysis*> pool;
  for (const auto& a : analyses)
    if (a.lemma == expected.lemma) pool.push_back(&a);
  diff.lemma_match = !pool.empty();
  if (pool.empty())
    for (const auto& a : analyses) pool.push_back(&a);

  bool first = true;
  for (const MorphAnalysis* a : pool) {
    std::vector<FeatureMismatch> m;
    for (const auto& cat : ordered_categories(expected.pos, expected.features, a->features, pack)) {
      const std::string e(expected.features.get(cat).value_or("")), g(a->features.get(cat).value_or(""));
      if (e != g) m.push_back({cat, e, g});
    }
    if (first || m.size() < diff.mismatches.size()) diff.mismatches = std::move(m);
    first = false;
  }
  return diff;
}

std::optional<Hint> next_hint(const Exercise& exercise, const HintHistory& history) {
  std::size_t level = history.consumed.empty() ? 0 : history.consumed.back() + 1;
  if (history.last_wrong && !history.last_wrong->mismatches.empty()) {
    const std::string& cat = history.last_wrong->mismatches.front().category;
    for (const auto& h : exercise.hints)
      if (h.category == cat && h.level > level) {
        level = h.level;
        break;
      }
  }
  if (level >= exercise.hints.size()) return std::nullopt;
  return exercise.hints[level];
}

void ExerciseProgress::ensure_open() const {
  if (solved_) fail(ErrorCode::OutOfOrderAttempt, "exercise already solved");
  if (hearts() == 0) fail(ErrorCode::ExhaustedAttempts, "no attempts left");
}

AttemptOutcome ExerciseProgress::outcome(const Exercise& exercise) const {
  AttemptOutcome o;
  o.correct = solved_;
  o.finished = finished();
  o.exhausted = !solved_ && hearts() == 0;
  o.hearts = hearts();
  if (o.exhausted) o.revealed = exercise.candidate.answer;
  return o;
}

AttemptOutcome ExerciseProgress::submit(const Exercise& exercise, std::string_view given, const LanguagePack& pack) {
  ensure_open();
  if (check_answer(exercise, given)) {
    solved_ = true;
    return outcome(exercise);
  }
  ++wrong_answers_;
  std::optional<AnswerDiff> diff;
  if (!unicode::trim(given).empty()) diff = diagnose_answer(given, exercise, pack);
  history_.last_wrong = diff;
  std::optional<Hint> hint;
  if (hearts() > 0) {
    hint = next_hint(exercise, history_);
    if (hint) history_.consumed.push_back(hint->level);
  }
  AttemptOutcome o = outcome(exercise);
  o.hint = std::move(hint);
  o.diff = std::move(diff);
  return o;
}

AttemptOutcome ExerciseProgress::request_hint(const Exercise& exercise) {
  ensure_open();
  std::optional<Hint> hint = next_hint(exercise, history_);
  if (hint) {
    history_.consumed.push_back(hint->level);
    ++hint_requests_;
  }
  AttemptOutcome o = outcome(exercise);
  o.hint = std::move(hint);
  return o;
}

}  // namespace construe
