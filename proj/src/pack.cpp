#include "construe/pack.hpp"

#include <algorithm>

namespace construe {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::UnknownLemma: return "UnknownLemma";
    case ErrorCode::InvalidFeatures: return "InvalidFeatures";
    case ErrorCode::UnknownToken: return "UnknownToken";
    case ErrorCode::RecipeFailed: return "RecipeFailed";
    case ErrorCode::GenerationGap: return "GenerationGap";
    case ErrorCode::UnknownExercise: return "UnknownExercise";
    case ErrorCode::OutOfOrderAttempt: return "OutOfOrderAttempt";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::NoLevel: return "NoLevel";
    case ErrorCode::EmptyBank: return "EmptyBank";
    case ErrorCode::UnknownLearner: return "UnknownLearner";
    case ErrorCode::UnsupportedLanguage: return "UnsupportedLanguage";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::Forbidden: return "Forbidden";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::ExhaustedAttempts: return "ExhaustedAttempts";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::BadRequest: return "BadRequest";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

RealizationRule RealizationRule::parse(std::string_view text) {
  RealizationRule rule;
  const auto plus = text.find('+');
  std::string_view head = text.substr(0, plus);
  if (plus != std::string_view::npos) rule.suffix = std::string(text.substr(plus + 1));
  const auto colon = head.find(':');
  std::string_view index = head.substr(0, colon);
  if (index.empty() || !std::all_of(index.begin(), index.end(), [](char c) { return c >= '0' && c <= '9'; }))
    fail(ErrorCode::SchemaViolation, "form rule '" + std::string(text) + "' must start with a stem index");
  rule.stem = std::stoul(std::string(index));
  if (colon != std::string_view::npos) {
    const auto rw = head.substr(colon + 1);
    const auto arrow = rw.find('>');
    if (arrow == std::string_view::npos || arrow == 0)
      fail(ErrorCode::SchemaViolation, "form rule '" + std::string(text) + "' has a malformed rewrite");
    rule.rewrite = Rewrite{std::string(rw.substr(0, arrow)), std::string(rw.substr(arrow + 1))};
  }
  return rule;
}

std::string RealizationRule::apply(const std::vector<std::string>& stems) const {
  if (stem >= stems.size()) return {};
  std::string base = stems[stem];
  if (rewrite && base.size() >= rewrite->from.size() &&
      base.compare(base.size() - rewrite->from.size(), rewrite->from.size(), rewrite->from) == 0) {
    base.replace(base.size() - rewrite->from.size(), rewrite->from.size(), rewrite->to);
  }
  return base + suffix;
}

bool LemmaClass::contains(const std::string& lemma) const {
  if (lemmas.count(lemma)) return true;
  return std::any_of(patterns.begin(), patterns.end(),
                     [&](const std::regex& re) { return std::regex_search(lemma, re); });
}

std::string_view chunk_kind_name(ChunkKind kind) noexcept {
  switch (kind) {
    case ChunkKind::NounPhrase: return "NounPhrase";
    case ChunkKind::PrepPhrase: return "PrepPhrase";
    case ChunkKind::AnalyticVerb: return "AnalyticVerb";
  }
  return "";
}

std::optional<ChunkKind> parse_chunk_kind(std::string_view name) noexcept {
  if (name == "NounPhrase") return ChunkKind::NounPhrase;
  if (name == "PrepPhrase") return ChunkKind::PrepPhrase;
  if (name == "AnalyticVerb") return ChunkKind::AnalyticVerb;
  return std::nullopt;
}

std::string_view construct_kind_name(ConstructKind kind) noexcept {
  switch (kind) {
    case ConstructKind::MorphFeature: return "MorphFeature";
    case ConstructKind::Government: return "Government";
    case ConstructKind::Construction: return "Construction";
    case ConstructKind::LemmaClass: return "LemmaClass";
    case ConstructKind::Orthography: return "Orthography";
  }
  return "";
}

std::optional<ConstructKind> parse_construct_kind(std::string_view name) noexcept {
  if (name == "MorphFeature") return ConstructKind::MorphFeature;
  if (name == "Government") return ConstructKind::Government;
  if (name == "Construction") return ConstructKind::Construction;
  if (name == "LemmaClass") return ConstructKind::LemmaClass;
  if (name == "Orthography") return ConstructKind::Orthography;
  return std::nullopt;
}

std::string_view distractor_strategy_name(DistractorStrategy s) noexcept {
  switch (s) {
    case DistractorStrategy::FeatureVariation: return "FeatureVariation";
    case DistractorStrategy::LemmaPairSwap: return "LemmaPairSwap";
    case DistractorStrategy::OrthographyVariants: return "OrthographyVariants";
  }
  return "";
}

bool TokenMatcher::needs_analysis() const {
  return lemmas || lemma_class || pos || !features.empty() || chunk || governed_by || governs_case ||
         governs_clause;
}

const std::vector<std::string>& FeatureHierarchy::categories_for(std::string_view pos) const {
  static const std::vector<std::string> none;
  const auto it = order.find(pos);
  return it == order.end() ? none : it->second;
}

std::string FeatureHierarchy::category_label(std::string_view category) const {
  const auto it = category_labels.find(category);
  return it == category_labels.end() ? std::string(category) : it->second;
}

std::string FeatureHierarchy::value_label(std::string_view category, std::string_view value) const {
  std::string key(category);
  key += '=';
  key += value;
  const auto it = value_labels.find(key);
  if (it != value_labels.end()) return it->second;
  return std::string(value) + " " + category_label(category);
}

const Paradigm* LanguagePack::find_paradigm(std::string_view id) const {
  const auto it = paradigm_index_.find(std::string(id));
  return it == paradigm_index_.end() ? nullptr : &paradigms[it->second];
}

const ConstructDef* LanguagePack::find_construct(std::string_view id) const {
  const auto it = construct_index_.find(std::string(id));
  return it == construct_index_.end() ? nullptr : &constructs[it->second];
}

const DistractorRecipe* LanguagePack::find_recipe(std::string_view id) const {
  const auto it = recipes.find(id);
  return it == recipes.end() ? nullptr : &it->second;
}

const LemmaClass* LanguagePack::find_lemma_class(std::string_view id) const {
  const auto it = lemma_classes.find(id);
  return it == lemma_classes.end() ? nullptr : &it->second;
}

std::vector<std::size_t> LanguagePack::lexemes_for(std::string_view lemma) const {
  std::vector<std::size_t> out;
  const auto [lo, hi] = lemma_index_.equal_range(std::string(lemma));
  for (auto it = lo; it != hi; ++it) out.push_back(it->second);
  std::sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) {
    return lexicon[a].frequency_rank < lexicon[b].frequency_rank;
  });
  return out;
}

std::vector<std::size_t> LanguagePack::lexemes_for(std::string_view lemma, std::string_view pos) const {
  auto all = lexemes_for(lemma);
  std::erase_if(all, [&](std::size_t i) { return lexicon[i].pos != pos; });
  return all;
}

std::vector<const GovernmentPattern*> LanguagePack::patterns_for(std::string_view lemma,
                                                                 std::string_view pos) const {
  std::vector<const GovernmentPattern*> out;
  const std::string l(lemma);
  for (const auto& g : government) {
    if (g.governor_pos != pos) continue;
    if (!g.governor.empty() && g.governor[0] == '@') {
      const auto* cls = find_lemma_class(std::string_view(g.governor).substr(1));
      if (cls && cls->contains(l)) out.push_back(&g);
    } else if (g.governor == lemma) {
      out.push_back(&g);
    }
  }
  return out;
}

const std::vector<FormRef>* LanguagePack::forms(std::string_view surface) const {
  const auto it = surface_index_.find(std::string(surface));
  return it == surface_index_.end() ? nullptr : &it->second;
}

void LanguagePack::build_indexes() {
  paradigm_index_.clear();
  construct_index_.clear();
  lemma_index_.clear();
  surface_index_.clear();
  for (std::size_t i = 0; i < paradigms.size(); ++i) paradigm_index_[paradigms[i].id] = i;
  for (std::size_t i = 0; i < constructs.size(); ++i) construct_index_[constructs[i].id] = i;
  for (std::size_t i = 0; i < lexicon.size(); ++i) {
    Lexeme& lx = lexicon[i];
    lx.paradigm_index = paradigm_index_.at(lx.paradigm);
    lemma_index_.emplace(lx.lemma, i);
    const Paradigm& par = paradigms[lx.paradigm_index];
    for (std::size_t s = 0; s < par.slots.size(); ++s) {
      const std::string form = par.slots[s].rule.apply(lx.stems);
      if (!form.empty()) surface_index_[form].push_back({i, s});
    }
  }
}

}  // namespace construe
