#include <doctest.h>

#include "construe/feedback.hpp"
#include "support.hpp"

using namespace construe;

namespace {

std::set<std::string> option_set(const Exercise& e) { return {e.options.begin(), e.options.end()}; }

std::vector<std::string> hint_texts(const Exercise& e) {
  std::vector<std::string> out;
  for (const auto& h : e.hints) out.push_back(h.text);
  return out;
}

Exercise cloze_with_hints(const test::Analyzed& a, const ExerciseCandidate& c, const std::string& lang) {
  Exercise e = build_cloze(c);
  e.hints = build_hint_sequence(e, a.instances, a.story, test::pack(lang));
  return e;
}

}  // namespace

// End to end through pipeline, detection, exercises and feedback.
TEST_CASE("trace: the aurinkopaneeli cloze shows its lemma") {
  const auto a = test::run("fi", "Kaupunki lisää aurinkopaneeleja.");
  const ExerciseCandidate* c = test::candidate_at(a, "aurinkopaneeleja");
  REQUIRE(c);
  const Exercise e = build_cloze(*c);
  CHECK(e.kind == ExerciseKind::Cloze);
  CHECK(e.candidate.hint_lemma == "aurinkopaneeli");
  CHECK(e.candidate.answer == "aurinkopaneeleja");
  CHECK(check_answer(e, "aurinkopaneeleja"));
  CHECK_FALSE(check_answer(e, "aurinkopaneelit"));
}

TEST_CASE("trace: the analytic form on otettava shows the head lemma") {
  const auto a = test::run("fi", "Energiakriisin lähestyessä kaikki keinot on otettava käyntiin.");
  const ExerciseCandidate* c = test::candidate_at(a, "otettava");
  REQUIRE(c);
  CHECK(c->hint_lemma == "ottaa");
  CHECK(c->answer == "on otettava");
  CHECK(a.story.tokens[c->first].surface == "on");
  const Exercise e = build_cloze(*c);
  CHECK(check_answer(e, "on otettava"));
  CHECK_FALSE(check_answer(e, "otettava"));
  // Exactly one candidate covers the chunk.
  std::size_t covering = 0;
  for (const auto& x : a.candidates)
    if (x.first <= c->last && c->first <= x.last) ++covering;
  CHECK(covering == 1);
}

TEST_CASE("trace: partitive government hint sequence") {
  const auto a = test::run("fi", "Kokki lisää keittoon suolaa.");
  const ExerciseCandidate* c = test::candidate_at(a, "suolaa");
  REQUIRE(c);
  const Exercise e = cloze_with_hints(a, *c, "fi");
  CHECK(hint_texts(e) == std::vector<std::string>{"This is the object of the verb 'lisätä'.", "Use another case.",
                                                  "Use partitive case."});
  REQUIRE(e.hints[0].target);
  CHECK(a.story.tokens[*e.hints[0].target].surface == "lisää");
}

TEST_CASE("trace: participial clause paraphrase") {
  const auto a = test::run("fi", "Maija kertoi vanhempien asuvan kaupungissa.");
  const ExerciseCandidate* c = test::candidate_at(a, "asuvan");
  REQUIRE(c);
  const Exercise e = cloze_with_hints(a, *c, "fi");
  const auto texts = hint_texts(e);
  CHECK(std::count(texts.begin(), texts.end(), "This is equivalent to '...kertoi että vanhemmat asuvat...'") == 1);

  const ConstructDef* def = test::pack("fi").find_construct("participial-that-clause");
  REQUIRE(def);
  REQUIRE(def->paraphrase);
  for (const auto& inst : a.instances)
    if (inst.construct == def->id)
      CHECK(generate_paraphrase(*def->paraphrase, inst, a.story, test::pack("fi")) == "kertoi että vanhemmat asuvat");
}

TEST_CASE("trace: distractors for the joint and hyphenated pronoun") {
  const auto a = test::run("ru", "Нам нужно кое о чем поговорить.");
  const ExerciseCandidate* c = test::candidate_at(a, "кое");
  REQUIRE(c);
  CHECK(c->answer == "кое о чем");
  std::mt19937_64 rng(1);
  const Exercise e = build_mc(*c, "pronoun-joint-hyphenated", test::pack("ru"), rng);
  CHECK(option_set(e) == std::set<std::string>{"кое о чем", "кое-о-чем", "о кое-чем"});
  CHECK(e.options[e.correct] == "кое о чем");
}

TEST_CASE("case variation distractors for the genitive subject") {
  const auto a = test::run("fi", "Maija kertoi vanhempien asuvan kaupungissa.");
  const ExerciseCandidate* c = test::candidate_at(a, "vanhempien");
  REQUIRE(c);
  std::mt19937_64 rng(3);
  const Exercise e = build_mc(*c, "participial-that-clause", test::pack("fi"), rng);
  const auto opts = option_set(e);
  CHECK(opts.count("vanhempien"));
  CHECK(opts.count("vanhemmat"));
  CHECK(opts.count("vanhempia"));
  CHECK(e.options.size() <= 5);
  CHECK(opts.size() == e.options.size());
  CHECK(std::count(e.options.begin(), e.options.end(), c->answer) == 1);
}

TEST_CASE("candidates") {
  const auto a = test::run("fi", "Kaupungit eivät ole muuttuneet energiatehokkaammiksi.");
  const ExerciseCandidate* c = test::candidate_at(a, "energiatehokkaammiksi");
  REQUIRE(c);
  CHECK(c->hint_lemma == "energiatehokas");
  CHECK(std::count(c->constructs.begin(), c->constructs.end(), "government-translative") == 1);
  CHECK(test::run("fi", "Xyzzy.").candidates.empty());

  // Ordered by position, one per distinct span, every link backed by a covering instance.
  for (const std::string lang : {"fi", "ru", "de"}) {
    for (const auto& g : test::pack(lang).gold) {
      const auto r = test::run(lang, g.text, g.id);
      for (std::size_t i = 0; i + 1 < r.candidates.size(); ++i) {
        const auto& x = r.candidates[i];
        const auto& y = r.candidates[i + 1];
        CHECK((x.first < y.first || (x.first == y.first && x.last < y.last)));
      }
      for (const auto& cand : r.candidates) {
        REQUIRE_FALSE(cand.constructs.empty());
        for (const auto& id : cand.constructs) {
          bool backed = false;
          for (const auto& inst : r.instances)
            if (inst.construct == id)
              for (auto t : inst.candidates) backed = backed || (t >= cand.first && t <= cand.last);
          CHECK(backed);
          CHECK(test::pack(lang).find_construct(id) != nullptr);
        }
        if (cand.expected) CHECK_FALSE(r.story.tokens[cand.anchor].ambiguous);
      }
    }
  }
}

TEST_CASE("answer checking folds a sentence-initial capital") {
  const auto a = test::run("fi", "Valo sammui.");
  const ExerciseCandidate* c = test::candidate_at(a, "sammui");
  REQUIRE(c);
  const auto b = test::run("de", "Wir sind aus dem Haus gelaufen.");
  for (const auto& cand : b.candidates) {
    if (!cand.sentence_initial) continue;
    const Exercise e = build_cloze(cand);
    std::string lower = cand.answer;
    lower[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(lower[0])));
    CHECK(check_answer(e, lower));
    CHECK(check_answer(e, cand.answer));
  }
  const Exercise e = build_cloze(*c);
  CHECK(check_answer(e, " sammui "));
  CHECK_FALSE(c->sentence_initial);
  CHECK_FALSE(check_answer(e, "Sammui"));
}

TEST_CASE("multiple choice is reproducible and recipe dependent") {
  const auto a = test::run("fi", "Maija kertoi vanhempien asuvan kaupungissa.");
  const ExerciseCandidate* c = test::candidate_at(a, "vanhempien");
  REQUIRE(c);
  std::mt19937_64 r1(42), r2(42);
  const Exercise e1 = build_mc(*c, "participial-that-clause", test::pack("fi"), r1);
  const Exercise e2 = build_mc(*c, "participial-that-clause", test::pack("fi"), r2);
  CHECK(e1.options == e2.options);
  CHECK(e1.correct == e2.correct);

  // A different recipe on the same candidate gives a different option set.
  LanguagePack p = test::pack("fi");
  ConstructDef* def = const_cast<ConstructDef*>(p.find_construct("participial-that-clause"));
  REQUIRE(def);
  const std::string before = *def->recipe;
  std::string other;
  for (const auto& [id, recipe] : p.recipes)
    if (id != before && recipe.strategy == DistractorStrategy::FeatureVariation && recipe.category == "Case") {
      other = id;
      break;
    }
  if (!other.empty()) {
    def->recipe = other;
    std::mt19937_64 r3(42);
    try {
      const Exercise e3 = build_mc(*c, "participial-that-clause", p, r3);
      CHECK(option_set(e3) != option_set(e1));
    } catch (const Error& err) {
      CHECK(err.code() == ErrorCode::RecipeFailed);
    }
  }

  // A recipe that can only reproduce the answer fails.
  for (auto& [id, recipe] : p.recipes)
    if (recipe.strategy == DistractorStrategy::FeatureVariation) recipe.values = {"Gen"};
  def->recipe = before;
  std::mt19937_64 r4(42);
  try {
    build_mc(*c, "participial-that-clause", p, r4);
    FAIL("expected RecipeFailed");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::RecipeFailed);
  }
}
