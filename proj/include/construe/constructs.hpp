#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "construe/pack.hpp"
#include "construe/text_pipeline.hpp"

namespace construe {

/// One detected construct occurrence. Token indices are story-global.
struct ConstructInstance {
  std::string construct;
  std::string story;
  std::size_t sentence = 0;
  std::vector<std::size_t> tokens;      // matched token per matcher position
  std::vector<std::size_t> candidates;  // tokens offered for exercises

  friend bool operator==(const ConstructInstance&, const ConstructInstance&) = default;
};

/// Arguments governed by `governor` anywhere in its sentence. For a token
/// inside an analytic verb form the lemma of the chunk head is used; an
/// adposition governs the head of the preposition phrase it opens.
std::vector<std::size_t> match_government(const AnnotatedStory& story, std::size_t governor, const LanguagePack& pack);

/// Every instance of every pack construct, ordered by (sentence, construct
/// declaration order, matched tokens). Candidates exclude ambiguous tokens,
/// except for orthography constructs, which never consult morphology.
std::vector<ConstructInstance> detect_constructs(const AnnotatedStory& story, const LanguagePack& pack);

/// Ids of constructs with an instance covering `token`, in pack declaration
/// order. Throws Error(UnknownToken) for an index outside the story.
std::vector<std::string> constructs_for_token(const AnnotatedStory& story, const std::vector<ConstructInstance>& instances,
                                              std::size_t token, const LanguagePack& pack);

/// Re-checks every matcher constraint of an instance against the story.
bool verify_instance(const AnnotatedStory& story, const ConstructInstance& instance, const LanguagePack& pack);

}  // namespace construe
