#include "construe/exercises.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <set>

#include "construe/unicode.hpp"

namespace construe {

std::string_view exercise_kind_name(ExerciseKind kind) noexcept {
  return kind == ExerciseKind::Cloze ? "cloze" : "multiple_choice";
}

std::vector<ExerciseCandidate> generate_candidates(const AnnotatedStory& story,
                                                   const std::vector<ConstructInstance>& instances,
                                                   const LanguagePack& pack) {
  struct Entry {
    ExerciseCandidate candidate;
    std::set<std::size_t> orders;
  };
  std::map<std::pair<std::size_t, std::size_t>, Entry> spans;

  for (const auto& inst : instances) {
    const ConstructDef* def = pack.find_construct(inst.construct);
    if (def == nullptr || inst.candidates.empty()) continue;
    if (def->kind == ConstructKind::Orthography) {
      const auto [lo, hi] = std::minmax_element(inst.tokens.begin(), inst.tokens.end());
      Entry& e = spans[{*lo, *hi}];
      e.candidate.first = *lo;
      e.candidate.last = *hi;
      e.candidate.anchor = *lo;
      e.candidate.hint_lemma = def->hint_lemma;
      e.orders.insert(def->order);
      continue;
    }
    for (const std::size_t c : inst.candidates) {
      const Token& t = story.tokens[c];
      if (!t.chosen) continue;
      std::size_t first = c, last = c;
      if (const Chunk* av = story.chunk_at(c, ChunkKind::AnalyticVerb); av != nullptr && av->head == c) {
        first = av->first;
        last = av->last;
      }
      Entry& e = spans[{first, last}];
      e.candidate.first = first;
      e.candidate.last = last;
      e.candidate.anchor = c;
      e.candidate.hint_lemma = t.chosen->lemma;
      e.candidate.expected = t.chosen;
      e.orders.insert(def->order);
    }
  }

  std::vector<ExerciseCandidate> out;
  for (auto& [span, e] : spans) {
    ExerciseCandidate& c = e.candidate;
    c.story = story.id;
    c.sentence = story.tokens[c.first].sentence;
    c.answer = story.slice(c.first, c.last);
    const std::size_t base = story.tokens[c.first].byte_start;
    c.anchor_begin = story.tokens[c.anchor].byte_start - base;
    c.anchor_end = story.tokens[c.anchor].byte_end - base;
    c.sentence_initial = story.sentence_initial(c.first);
    for (const std::size_t o : e.orders) c.constructs.push_back(pack.constructs[o].id);
    out.push_back(std::move(c));
  }
  return out;
}

Exercise build_cloze(const ExerciseCandidate& candidate) {
  Exercise ex;
  ex.id = candidate.story + ":" + std::to_string(candidate.first) + "-" + std::to_string(candidate.last) + ":cloze";
  ex.kind = ExerciseKind::Cloze;
  ex.candidate = candidate;
  return ex;
}

namespace {

// Rebuilds the candidate span with the anchor replaced by `form`.
std::string splice(const ExerciseCandidate& c, std::string form) {
  const std::string original = c.answer.substr(c.anchor_begin, c.anchor_end - c.anchor_begin);
  if (unicode::starts_upper(original) && unicode::starts_lower(form)) form = unicode::upper_first(form);
  return c.answer.substr(0, c.anchor_begin) + form + c.answer.substr(c.anchor_end);
}

void add_forms(const ExerciseCandidate& c, const std::set<std::string>& forms, std::vector<std::string>& out) {
  for (const auto& f : forms) out.push_back(splice(c, f));
}

}  // namespace

std::vector<std::string> recipe_outputs(const ExerciseCandidate& candidate, const DistractorRecipe& recipe,
                                        const LanguagePack& pack) {
  std::vector<std::string> out;
  switch (recipe.strategy) {
    case DistractorStrategy::FeatureVariation: {
      if (!candidate.expected) break;
      const MorphAnalysis& a = *candidate.expected;
      if (!a.features.has(recipe.category)) break;
      for (const auto& v : recipe.values) {
        FeatureBundle f = a.features;
        f.set(recipe.category, v);
        add_forms(candidate, generate(a.lemma, a.pos, f, pack), out);
      }
      break;
    }
    case DistractorStrategy::LemmaPairSwap: {
      if (!candidate.expected) break;
      const MorphAnalysis& a = *candidate.expected;
      for (const std::size_t i : pack.lexemes_for(a.lemma, a.pos)) {
        const auto it = pack.lexicon[i].links.find(recipe.link);
        if (it == pack.lexicon[i].links.end()) continue;
        if (!pack.lexemes_for(it->second, a.pos).empty())
          add_forms(candidate, generate(it->second, a.pos, a.features, pack), out);
        break;
      }
      break;
    }
    case DistractorStrategy::OrthographyVariants:
      for (const auto& rule : recipe.rules) out.push_back(std::regex_replace(candidate.answer, rule.pattern, rule.replacement));
      break;
  }
  return out;
}

Exercise build_mc(const ExerciseCandidate& candidate, std::string_view construct, const LanguagePack& pack,
                  std::mt19937_64& rng) {
  if (std::find(candidate.constructs.begin(), candidate.constructs.end(), construct) == candidate.constructs.end())
    fail(ErrorCode::RecipeFailed, "construct '" + std::string(construct) + "' is not linked to the candidate");
  const ConstructDef* def = pack.find_construct(construct);
  const DistractorRecipe* recipe = def && def->recipe ? pack.find_recipe(*def->recipe) : nullptr;
  if (recipe == nullptr) fail(ErrorCode::RecipeFailed, "construct '" + std::string(construct) + "' has no distractor recipe");

  const std::size_t cap = std::min<std::size_t>(recipe->count, 5);
  std::vector<std::string> options{candidate.answer};
  for (auto& o : recipe_outputs(candidate, *recipe, pack)) {
    if (options.size() >= cap) break;
    if (std::find(options.begin(), options.end(), o) == options.end()) options.push_back(std::move(o));
  }
  if (options.size() < 2)
    fail(ErrorCode::RecipeFailed, "recipe '" + recipe->id + "' produced no distractor for '" + candidate.answer + "'");
  for (std::size_t i = options.size() - 1; i > 0; --i) std::swap(options[i], options[rng() % (i + 1)]);

  Exercise ex;
  ex.id = candidate.story + ":" + std::to_string(candidate.first) + "-" + std::to_string(candidate.last) + ":mc:" +
          std::string(construct);
  ex.kind = ExerciseKind::MultipleChoice;
  ex.candidate = candidate;
  ex.construct = std::string(construct);
  ex.correct = static_cast<std::size_t>(std::find(options.begin(), options.end(), candidate.answer) - options.begin());
  ex.options = std::move(options);
  return ex;
}

bool check_answer(const Exercise& exercise, std::string_view given) {
  const std::string g = unicode::nfc(unicode::trim(given));
  const std::string& answer = exercise.candidate.answer;
  if (g == answer) return true;
  if (exercise.kind == ExerciseKind::Cloze && exercise.candidate.sentence_initial)
    return unicode::lower_first(g) == unicode::lower_first(answer);
  return false;
}

}  // namespace construe
