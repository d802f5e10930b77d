#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "construe/constructs.hpp"
#include "construe/exercises.hpp"
#include "construe/pack.hpp"
#include "construe/text_pipeline.hpp"

namespace test {

inline std::filesystem::path pack_dir(const std::string& lang) { return std::filesystem::path(CONSTRUE_PACKS_DIR) / lang; }

// Packs are immutable after load, so one copy per process is enough.
inline const construe::LanguagePack& pack(const std::string& lang) {
  static std::map<std::string, construe::LanguagePack> cache;
  auto it = cache.find(lang);
  if (it == cache.end()) it = cache.emplace(lang, construe::load_pack(pack_dir(lang))).first;
  return it->second;
}

struct Analyzed {
  construe::AnnotatedStory story;
  std::vector<construe::ConstructInstance> instances;
  std::vector<construe::ExerciseCandidate> candidates;
};

inline Analyzed run(const std::string& lang, const std::string& text, const std::string& id = "t") {
  const auto& p = pack(lang);
  Analyzed a;
  a.story = construe::annotate(id, text, p);
  a.instances = construe::detect_constructs(a.story, p);
  a.candidates = construe::generate_candidates(a.story, a.instances, p);
  return a;
}

inline std::size_t token_index(const construe::AnnotatedStory& s, const std::string& surface) {
  for (std::size_t i = 0; i < s.tokens.size(); ++i)
    if (s.tokens[i].surface == surface) return i;
  return s.tokens.size();
}

inline const construe::ExerciseCandidate* candidate_at(const Analyzed& a, const std::string& surface) {
  const std::size_t t = token_index(a.story, surface);
  for (const auto& c : a.candidates)
    if (t >= c.first && t <= c.last) return &c;
  return nullptr;
}

}  // namespace test
