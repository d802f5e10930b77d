#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "construe/constructs.hpp"
#include "construe/morphology.hpp"

namespace construe {

/// A token, or an analytic verb span, that may be exercised.
struct ExerciseCandidate {
  std::string story;
  std::size_t sentence = 0;
  std::size_t first = 0;  // token span, inclusive
  std::size_t last = 0;
  std::size_t anchor = 0;  // the token carrying the expected analysis
  std::string answer;      // original surface of the span
  std::size_t anchor_begin = 0;  // byte range of the anchor inside `answer`
  std::size_t anchor_end = 0;
  std::string hint_lemma;
  std::optional<MorphAnalysis> expected;  // absent for orthography spans
  std::vector<std::string> constructs;    // pack declaration order
  bool sentence_initial = false;

  bool is_span() const { return first != last; }
};

enum class ExerciseKind { Cloze, MultipleChoice };

std::string_view exercise_kind_name(ExerciseKind kind) noexcept;

struct Hint {
  std::size_t level = 0;
  std::string text;
  std::optional<std::size_t> target;  // token to underline
  std::string category;               // set on category-level hints
};

struct Exercise {
  std::string id;
  ExerciseKind kind = ExerciseKind::Cloze;
  ExerciseCandidate candidate;
  std::vector<std::string> options;  // multiple choice only
  std::size_t correct = 0;
  std::optional<std::string> construct;  // targeted construct (multiple choice)
  std::vector<Hint> hints;
};

/// One candidate per distinct token or analytic span covered by an instance
/// candidate marker, in story order, with all linked constructs aggregated.
std::vector<ExerciseCandidate> generate_candidates(const AnnotatedStory& story,
                                                   const std::vector<ConstructInstance>& instances,
                                                   const LanguagePack& pack);

/// Cloze exercise showing the hint lemma; hints are filled in by the feedback module.
Exercise build_cloze(const ExerciseCandidate& candidate);

/// Multiple-choice exercise targeting `construct`. Options are the answer plus
/// recipe outputs, shuffled with `rng`. Throws Error(RecipeFailed) when fewer
/// than two distinct options survive.
Exercise build_mc(const ExerciseCandidate& candidate, std::string_view construct, const LanguagePack& pack,
                  std::mt19937_64& rng);

/// Distractor surfaces produced by a recipe, in recipe order, before dedup.
std::vector<std::string> recipe_outputs(const ExerciseCandidate& candidate, const DistractorRecipe& recipe,
                                        const LanguagePack& pack);

/// Cloze: equality after NFC, ignoring the case of the first letter when the
/// blank starts a sentence. Multiple choice: `given` is the option text.
bool check_answer(const Exercise& exercise, std::string_view given);

}  // namespace construe
