#include <doctest.h>

#include <random>

#include "construe/feedback.hpp"
#include "construe/morphology.hpp"
#include "support.hpp"

using namespace construe;

namespace {

struct Item {
  std::string lang;
  Exercise exercise;
};

Exercise with_hints(const test::Analyzed& a, const ExerciseCandidate& c, const std::string& lang) {
  Exercise e = build_cloze(c);
  e.hints = build_hint_sequence(e, a.instances, a.story, test::pack(lang));
  return e;
}

Exercise cloze_for(const std::string& lang, const std::string& text, const std::string& word) {
  const auto a = test::run(lang, text);
  const ExerciseCandidate* c = test::candidate_at(a, word);
  REQUIRE(c);
  return with_hints(a, *c, lang);
}

std::vector<Item> gold_exercises() {
  std::vector<Item> out;
  for (const std::string lang : {"fi", "ru", "de"})
    for (const auto& g : test::pack(lang).gold) {
      const auto a = test::run(lang, g.text, g.id);
      for (const auto& c : a.candidates) out.push_back({lang, with_hints(a, c, lang)});
    }
  return out;
}

// Every surface of the expected lemma, as wrong-answer material.
std::vector<std::string> sibling_forms(const Exercise& e, const LanguagePack& p) {
  std::vector<std::string> out;
  if (!e.candidate.expected) return out;
  const Lexeme& lex = p.lexicon[e.candidate.expected->lexeme];
  for (const auto& slot : p.paradigms[lex.paradigm_index].slots) out.push_back(slot.rule.apply(lex.stems));
  return out;
}

// Citation features read directly from the lexeme's paradigm.
FeatureBundle citation_of(const MorphAnalysis& a, const LanguagePack& p) {
  const Paradigm& par = p.paradigms[p.lexicon[a.lexeme].paradigm_index];
  return par.slots[par.citation_slot].features;
}

}  // namespace

TEST_CASE("diagnosis against the expected analysis") {
  const Exercise e = cloze_for("fi", "Kaupunki lisää aurinkopaneeleja.", "aurinkopaneeleja");
  const AnswerDiff d = diagnose_answer("aurinkopaneelit", e, test::pack("fi"));
  CHECK(d.lemma_match);
  CHECK_FALSE(d.out_of_vocabulary);
  CHECK(d.mismatches == std::vector<FeatureMismatch>{{"Case", "Par", "Nom"}});
  CHECK(diagnose_answer("aurinkopaneeleja", e, test::pack("fi")).mismatches.empty());
  CHECK(diagnose_answer("qwerty", e, test::pack("fi")).out_of_vocabulary);

  // Gender is diagnosed before case for Russian adjectives.
  const Exercise r = cloze_for("ru", "Она читала новую книгу.", "новую");
  const AnswerDiff rd = diagnose_answer("новому", r, test::pack("ru"));
  REQUIRE(rd.mismatches.size() >= 2);
  CHECK(rd.mismatches.front().category == "Gender");
  CHECK(rd.mismatches.back().category == "Case");
}

TEST_CASE("next hint") {
  const Exercise e = cloze_for("fi", "Kokki lisää keittoon suolaa.", "suolaa");
  HintHistory h;
  auto first = next_hint(e, h);
  REQUIRE(first);
  CHECK(first->level == 0);

  // A wrong case skips straight to the case hint.
  ExerciseProgress p;
  const auto out = p.submit(e, "suola", test::pack("fi"));
  CHECK_FALSE(out.correct);
  REQUIRE(out.hint);
  CHECK(out.hint->text == "Use another case.");
  CHECK(out.hint->category == "Case");
  CHECK(out.hearts == 4);

  HintHistory all;
  for (const auto& hint : e.hints) all.consumed.push_back(hint.level);
  CHECK_FALSE(next_hint(e, all));
}

TEST_CASE("minimum sequence without templates") {
  // The comparative construct has no context template: category hints then the value hint.
  const Exercise e = cloze_for("fi", "Uusi talo on suurempi.", "suurempi");
  REQUIRE_FALSE(e.hints.empty());
  CHECK(e.hints.front().category != "");
  CHECK(e.hints.back().text.find("comparative") != std::string::npos);
}

TEST_CASE("hearts are shared by wrong answers and hint requests") {
  const Exercise e = cloze_for("fi", "Kokki lisää keittoon suolaa.", "suolaa");
  ExerciseProgress p;
  p.request_hint(e);
  p.submit(e, "suola", test::pack("fi"));
  CHECK(p.hearts() == 3);
  CHECK(p.submit(e, "suolaa", test::pack("fi")).correct);
  CHECK(p.finished());
  try {
    p.submit(e, "suolaa", test::pack("fi"));
    FAIL("expected OutOfOrderAttempt");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::OutOfOrderAttempt);
  }

  ExerciseProgress q;
  for (int i = 0; i < 4; ++i) CHECK_FALSE(q.submit(e, "suola", test::pack("fi")).finished);
  const auto last = q.submit(e, "suola", test::pack("fi"));
  CHECK(last.exhausted);
  CHECK(last.revealed == std::optional<std::string>("suolaa"));
  try {
    q.submit(e, "suolaa", test::pack("fi"));
    FAIL("expected ExhaustedAttempts");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::ExhaustedAttempts);
  }
}

TEST_CASE("property: 1000 randomized histories") {
  const auto items = gold_exercises();
  REQUIRE(items.size() > 50);
  std::mt19937_64 rng(2024);
  std::size_t histories = 0, skipped_forward = 0;
  for (; histories < 1000; ++histories) {
    const Item& item = items[rng() % items.size()];
    const Exercise& e = item.exercise;
    const LanguagePack& p = test::pack(item.lang);
    const auto wrong = sibling_forms(e, p);

    ExerciseProgress progress;
    std::size_t spent = 0;  // hearts consumed by the oracle's own count
    while (!progress.finished()) {
      const auto roll = rng() % 10;
      if (roll < 4) {
        spent += progress.request_hint(e).hint ? 1 : 0;
      } else if (roll < 9) {
        std::string given = wrong.empty() ? "qwerty" : wrong[rng() % wrong.size()];
        if (check_answer(e, given)) given = "qwerty";
        progress.submit(e, given, p);
        ++spent;
      } else {
        progress.submit(e, e.candidate.answer, p);
      }
    }
    const auto& levels = progress.history().consumed;
    for (std::size_t i = 1; i < levels.size(); ++i) {
      CHECK(levels[i] > levels[i - 1]);
      skipped_forward += levels[i] > levels[i - 1] + 1;
    }
    for (const auto lvl : levels) CHECK(lvl < e.hints.size());
    CHECK(spent == ExerciseProgress::kMaxHearts - progress.hearts());
    CHECK(spent <= ExerciseProgress::kMaxHearts);
  }
  CHECK(histories == 1000);
  CHECK(skipped_forward > 0);  // the forward skip rule was exercised

  // Sufficiency, with citation forms taken from the paradigm tables.
  for (const auto& item : items) {
    const auto& c = item.exercise.candidate;
    if (!c.expected) continue;
    const LanguagePack& p = test::pack(item.lang);
    const FeatureBundle citation = citation_of(*c.expected, p);
    const std::string& final_text = item.exercise.hints.back().text;
    for (const auto& [cat, val] : c.expected->features) {
      if (citation.get(cat) == std::optional<std::string_view>(val)) continue;
      INFO(item.lang << " " << c.answer << " " << cat << "=" << val << " final: " << final_text);
      CHECK(final_text.find(p.hierarchy.value_label(cat, val)) != std::string::npos);
    }
  }
}

TEST_CASE("property: diagnosis follows the hierarchy order") {
  std::mt19937_64 rng(99);
  for (const auto& item : gold_exercises()) {
    const auto& e = item.exercise;
    if (!e.candidate.expected || e.candidate.is_span()) continue;
    const LanguagePack& p = test::pack(item.lang);
    const auto& order = p.hierarchy.categories_for(e.candidate.expected->pos);
    const auto forms = sibling_forms(e, p);
    for (int k = 0; k < 3 && !forms.empty(); ++k) {
      const auto d = diagnose_answer(forms[rng() % forms.size()], e, p);
      std::size_t last = 0;
      bool outside = false;
      for (const auto& m : d.mismatches) {
        const auto it = std::find(order.begin(), order.end(), m.category);
        if (it == order.end()) {
          outside = true;
          continue;
        }
        CHECK_FALSE(outside);  // hierarchy categories always come first
        const auto pos = static_cast<std::size_t>(it - order.begin());
        CHECK(pos >= last);
        last = pos;
      }
    }
  }
}
