#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "construe/exercises.hpp"

namespace construe {

struct FeatureMismatch {
  std::string category;
  std::string expected;  // empty when the category is absent
  std::string given;

  friend bool operator==(const FeatureMismatch&, const FeatureMismatch&) = default;
};

struct AnswerDiff {
  bool lemma_match = false;
  bool out_of_vocabulary = false;
  std::vector<FeatureMismatch> mismatches;  // hierarchy order first
};

/// Categories (hierarchy order) whose answer value differs from the citation form.
std::vector<std::string> distinguishing_categories(const MorphAnalysis& expected, const LanguagePack& pack);

/// Context hint, category hints, optional paraphrase hint, final value hint.
std::vector<Hint> build_hint_sequence(const Exercise& exercise, const std::vector<ConstructInstance>& instances,
                                      const AnnotatedStory& story, const LanguagePack& pack);

/// Regenerates the matched tokens with the template's target features.
/// Throws Error(GenerationGap) when a slot form cannot be produced.
std::string generate_paraphrase(const ParaphraseTemplate& tpl, const ConstructInstance& instance,
                                const AnnotatedStory& story, const LanguagePack& pack);

/// Analyzes the given answer against the expected analysis.
AnswerDiff diagnose_answer(std::string_view given, const Exercise& exercise, const LanguagePack& pack);

struct HintHistory {
  std::vector<std::size_t> consumed;    // levels already shown, increasing
  std::optional<AnswerDiff> last_wrong;  // diagnosis of the latest wrong answer
};

/// Lowest unconsumed hint, skipping forward to the category hint of the first
/// mismatch of the latest wrong answer. nullopt once the sequence is exhausted.
std::optional<Hint> next_hint(const Exercise& exercise, const HintHistory& history);

struct AttemptOutcome {
  bool correct = false;
  bool finished = false;   // solved, or out of hearts
  bool exhausted = false;  // out of hearts without solving
  std::size_t hearts = 0;
  std::optional<Hint> hint;
  std::optional<AnswerDiff> diff;
  std::optional<std::string> revealed;  // answer, once exhausted
};

/// Attempt state of one exercise: five hearts shared by wrong answers and hint requests.
class ExerciseProgress {
 public:
  static constexpr std::size_t kMaxHearts = 5;

  /// Throws Error(ExhaustedAttempts) once out of hearts, Error(OutOfOrderAttempt) once solved.
  AttemptOutcome submit(const Exercise& exercise, std::string_view given, const LanguagePack& pack);
  /// Shows the next hint at the cost of one heart. Throws like submit.
  AttemptOutcome request_hint(const Exercise& exercise);

  std::size_t hearts() const { return kMaxHearts - wrong_answers_ - hint_requests_; }
  std::size_t hints_consumed() const { return history_.consumed.size(); }
  std::size_t wrong_answers() const { return wrong_answers_; }
  bool finished() const { return solved_ || hearts() == 0; }
  bool solved() const { return solved_; }
  const HintHistory& history() const { return history_; }

 private:
  void ensure_open() const;
  AttemptOutcome outcome(const Exercise& exercise) const;

  HintHistory history_;
  std::size_t wrong_answers_ = 0;
  std::size_t hint_requests_ = 0;
  bool solved_ = false;
};

}  // namespace construe
