#include "construe/morphology.hpp"

#include <algorithm>

#include "construe/unicode.hpp"

namespace construe {

std::vector<MorphAnalysis> analyze(std::string_view surface, const LanguagePack& pack) {
  const auto trimmed = unicode::trim(surface);
  if (trimmed.empty()) fail(ErrorCode::EmptyInput, "cannot analyze an empty word");
  std::vector<MorphAnalysis> out;
  const auto* refs = pack.forms(unicode::nfc(trimmed));
  if (refs == nullptr) return out;
  for (const FormRef& ref : *refs) {
    const Lexeme& lx = pack.lexicon[ref.lexeme];
    const Paradigm& par = pack.paradigms[lx.paradigm_index];
    out.push_back({lx.lemma, lx.pos, par.slots[ref.slot].features, ref.lexeme, ref.slot});
  }
  std::sort(out.begin(), out.end(), [&](const MorphAnalysis& a, const MorphAnalysis& b) {
    const int ra = pack.lexicon[a.lexeme].frequency_rank, rb = pack.lexicon[b.lexeme].frequency_rank;
    return ra != rb ? ra < rb : a.slot < b.slot;
  });
  // Two lexemes may share lemma, pos and paradigm shape; keep set semantics.
  std::vector<MorphAnalysis> unique;
  for (auto& a : out)
    if (std::find(unique.begin(), unique.end(), a) == unique.end()) unique.push_back(std::move(a));
  return unique;
}

std::set<std::string> generate(std::string_view lemma, std::string_view pos, const FeatureBundle& features,
                               const LanguagePack& pack) {
  if (auto bad = pack.schema.first_violation(features))
    fail(ErrorCode::InvalidFeatures, "feature '" + *bad + "' is not in the schema");
  const auto lexemes = pack.lexemes_for(lemma, pos);
  if (lexemes.empty())
    fail(ErrorCode::UnknownLemma, "unknown lemma '" + std::string(lemma) + "' (" + std::string(pos) + ")");
  std::set<std::string> out;
  for (const std::size_t i : lexemes) {
    const Lexeme& lx = pack.lexicon[i];
    for (const auto& slot : pack.paradigms[lx.paradigm_index].slots)
      if (slot.features == features) out.insert(slot.rule.apply(lx.stems));
  }
  return out;
}

const FeatureBundle& citation_features(const MorphAnalysis& analysis, const LanguagePack& pack) {
  const Lexeme& lx = pack.lexicon.at(analysis.lexeme);
  const Paradigm& par = pack.paradigms[lx.paradigm_index];
  return par.slots[par.citation_slot].features;
}

}  // namespace construe
