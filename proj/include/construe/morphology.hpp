#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "construe/features.hpp"
#include "construe/pack.hpp"

namespace construe {

struct MorphAnalysis {
  std::string lemma;
  std::string pos;
  FeatureBundle features;
  // Provenance inside the pack; not part of equality.
  std::size_t lexeme = 0;
  std::size_t slot = 0;

  friend bool operator==(const MorphAnalysis& a, const MorphAnalysis& b) {
    return a.lemma == b.lemma && a.pos == b.pos && a.features == b.features;
  }
};

/// All analyses that regenerate `surface` exactly, ordered by (frequency rank,
/// paradigm slot). Out-of-vocabulary words yield an empty list.
/// Throws Error(EmptyInput) when the trimmed surface is empty.
std::vector<MorphAnalysis> analyze(std::string_view surface, const LanguagePack& pack);

/// All surface forms realizing (lemma, pos, features), sorted. Empty when the
/// lexeme has no such slot. Throws Error(UnknownLemma | InvalidFeatures).
std::set<std::string> generate(std::string_view lemma, std::string_view pos, const FeatureBundle& features,
                               const LanguagePack& pack);

/// Form of the lexeme's citation slot (normally equal to its lemma).
const FeatureBundle& citation_features(const MorphAnalysis& analysis, const LanguagePack& pack);

}  // namespace construe
