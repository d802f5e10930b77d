#include "construe/constructs.hpp"

#include <algorithm>
#include <set>

namespace construe {

namespace {

// Analysis whose lemma drives government: the analytic chunk head's, if any.
const MorphAnalysis* governing_analysis(const AnnotatedStory& story, std::size_t token) {
  const Token& t = story.tokens[token];
  if (!t.chosen) return nullptr;
  if (const Chunk* c = story.chunk_at(token, ChunkKind::AnalyticVerb)) {
    const Token& head = story.tokens[c->head];
    if (head.chosen) return &*head.chosen;
  }
  return &*t.chosen;
}

bool governs(const AnnotatedStory& story, std::size_t token, const LanguagePack& pack,
             const std::optional<std::string>& case_value, const std::optional<std::string>& clause) {
  const MorphAnalysis* a = governing_analysis(story, token);
  if (a == nullptr) return false;
  for (const GovernmentPattern* g : pack.patterns_for(a->lemma, a->pos)) {
    if (case_value && g->case_value == case_value) return true;
    if (clause && g->clause_marker == clause) return true;
  }
  return false;
}

bool nominal(const MorphAnalysis& a, const LanguagePack& pack) {
  return pack.syntax.np_heads.count(a.pos) > 0 || pack.syntax.np_modifiers.count(a.pos) > 0;
}

// Constraints that depend on the token alone (not on other matched tokens).
bool token_matches(const AnnotatedStory& story, std::size_t index, const TokenMatcher& m, const LanguagePack& pack) {
  const Token& t = story.tokens[index];
  if (!t.is_word) return false;
  if (m.surface && !std::regex_match(t.surface, *m.surface)) return false;
  if (!m.needs_analysis()) return true;
  if (!t.chosen) return false;
  if (!matches_analysis(m, *t.chosen, pack)) return false;
  if (m.chunk) {
    const Chunk* c = story.chunk_at(index, *m.chunk);
    if (c == nullptr || (m.chunk_head && c->head != index)) return false;
  }
  if (m.governs_case && !governs(story, index, pack, m.governs_case, std::nullopt)) return false;
  if (m.governs_clause && !governs(story, index, pack, std::nullopt, m.governs_clause)) return false;
  return true;
}

bool governed(const AnnotatedStory& story, std::size_t governor, std::size_t argument, const LanguagePack& pack) {
  const auto args = match_government(story, governor, pack);
  return std::find(args.begin(), args.end(), argument) != args.end();
}

class Search {
 public:
  Search(const AnnotatedStory& story, const Sentence& sentence, std::size_t sentence_index, const ConstructDef& def,
         const LanguagePack& pack, std::vector<ConstructInstance>& out)
      : story_(story), sentence_(sentence), sentence_index_(sentence_index), def_(def), pack_(pack), out_(out) {}

  void run() { assign(0); }

 private:
  void assign(std::size_t k) {
    if (k == def_.matchers.size()) {
      emit();
      return;
    }
    const TokenMatcher& m = def_.matchers[k];
    if (k == 0 || m.anywhere) {
      for (std::size_t i = sentence_.first_token; i < sentence_.end_token; ++i) try_token(k, i);
    } else {
      const std::size_t next = chosen_.back() + 1;
      if (next < sentence_.end_token) try_token(k, next);
    }
  }

  void try_token(std::size_t k, std::size_t i) {
    if (std::find(chosen_.begin(), chosen_.end(), i) != chosen_.end()) return;
    const TokenMatcher& m = def_.matchers[k];
    if (!token_matches(story_, i, m, pack_)) return;
    if (m.governed_by && *m.governed_by < k && !governed(story_, chosen_[*m.governed_by], i, pack_)) return;
    chosen_.push_back(i);
    assign(k + 1);
    chosen_.pop_back();
  }

  void emit() {
    for (std::size_t k = 0; k < def_.matchers.size(); ++k) {
      const auto& g = def_.matchers[k].governed_by;
      if (g && *g > k && !governed(story_, chosen_[*g], chosen_[k], pack_)) return;
    }
    if (!seen_.insert(chosen_).second) return;
    ConstructInstance inst;
    inst.construct = def_.id;
    inst.story = story_.id;
    inst.sentence = sentence_index_;
    inst.tokens = chosen_;
    for (const std::size_t c : def_.candidates) {
      const std::size_t t = chosen_[c];
      const bool usable = def_.kind == ConstructKind::Orthography || story_.tokens[t].chosen.has_value();
      if (usable && std::find(inst.candidates.begin(), inst.candidates.end(), t) == inst.candidates.end())
        inst.candidates.push_back(t);
    }
    std::sort(inst.candidates.begin(), inst.candidates.end());
    out_.push_back(std::move(inst));
  }

  const AnnotatedStory& story_;
  const Sentence& sentence_;
  std::size_t sentence_index_;
  const ConstructDef& def_;
  const LanguagePack& pack_;
  std::vector<ConstructInstance>& out_;
  std::vector<std::size_t> chosen_;
  std::set<std::vector<std::size_t>> seen_;
};

}  // namespace

std::vector<std::size_t> match_government(const AnnotatedStory& story, std::size_t governor, const LanguagePack& pack) {
  std::vector<std::size_t> out;
  if (governor >= story.tokens.size()) return out;
  const MorphAnalysis* gov = governing_analysis(story, governor);
  if (gov == nullptr) return out;
  const auto patterns = pack.patterns_for(gov->lemma, gov->pos);
  if (patterns.empty()) return out;
  const Sentence& s = story.sentences[story.tokens[governor].sentence];

  if (pack.syntax.adpositions.count(gov->pos)) {
    for (const Chunk& c : story.chunks) {
      if (c.kind != ChunkKind::PrepPhrase || c.first != governor) continue;
      const Token& head = story.tokens[c.head];
      for (const GovernmentPattern* g : patterns)
        if (g->case_value && head.chosen && head.chosen->features.get("Case") == *g->case_value) {
          out.push_back(c.head);
          break;
        }
    }
    return out;
  }

  const Chunk* own = story.chunk_at(governor, ChunkKind::AnalyticVerb);
  for (std::size_t i = s.first_token; i < s.end_token; ++i) {
    const Token& t = story.tokens[i];
    if (i == governor || !t.is_word || !t.chosen || !nominal(*t.chosen, pack)) continue;
    if (own != nullptr && own->contains(i)) continue;
    const Chunk* np = story.chunk_at(i, ChunkKind::NounPhrase);
    if (np != nullptr && np->head != i) continue;
    const Chunk* pp = story.chunk_at(i, ChunkKind::PrepPhrase);
    const MorphAnalysis* adp = nullptr;
    if (pp != nullptr && story.tokens[pp->first].chosen) adp = &*story.tokens[pp->first].chosen;
    for (const GovernmentPattern* g : patterns) {
      if (!g->case_value || t.chosen->features.get("Case") != *g->case_value) continue;
      if (!g->direction_free && i < governor) continue;
      if (g->preposition) {
        if (pp == nullptr || pp->head != i || adp == nullptr || adp->lemma != *g->preposition) continue;
      } else if (pp != nullptr) {
        continue;
      }
      out.push_back(i);
      break;
    }
  }
  return out;
}

std::vector<ConstructInstance> detect_constructs(const AnnotatedStory& story, const LanguagePack& pack) {
  std::vector<ConstructInstance> out;
  for (std::size_t s = 0; s < story.sentences.size(); ++s)
    for (const ConstructDef& def : pack.constructs) {
      std::vector<ConstructInstance> found;
      Search(story, story.sentences[s], s, def, pack, found).run();
      std::sort(found.begin(), found.end(),
                [](const ConstructInstance& a, const ConstructInstance& b) { return a.tokens < b.tokens; });
      out.insert(out.end(), std::make_move_iterator(found.begin()), std::make_move_iterator(found.end()));
    }
  return out;
}

std::vector<std::string> constructs_for_token(const AnnotatedStory& story, const std::vector<ConstructInstance>& instances,
                                              std::size_t token, const LanguagePack& pack) {
  if (token >= story.tokens.size())
    fail(ErrorCode::UnknownToken, "token " + std::to_string(token) + " is outside the story");
  std::set<std::size_t> orders;
  for (const auto& inst : instances) {
    if (std::find(inst.tokens.begin(), inst.tokens.end(), token) == inst.tokens.end()) continue;
    if (const ConstructDef* def = pack.find_construct(inst.construct)) orders.insert(def->order);
  }
  std::vector<std::string> out;
  for (const std::size_t o : orders) out.push_back(pack.constructs[o].id);
  return out;
}

bool verify_instance(const AnnotatedStory& story, const ConstructInstance& instance, const LanguagePack& pack) {
  const ConstructDef* def = pack.find_construct(instance.construct);
  if (def == nullptr || instance.tokens.size() != def->matchers.size()) return false;
  for (std::size_t k = 0; k < def->matchers.size(); ++k) {
    const std::size_t t = instance.tokens[k];
    if (t >= story.tokens.size() || story.tokens[t].sentence != instance.sentence) return false;
    const TokenMatcher& m = def->matchers[k];
    if (!token_matches(story, t, m, pack)) return false;
    if (k > 0 && !m.anywhere && t != instance.tokens[k - 1] + 1) return false;
    if (m.governed_by && !governed(story, instance.tokens[*m.governed_by], t, pack)) return false;
  }
  for (const std::size_t c : instance.candidates)
    if (def->kind != ConstructKind::Orthography && !story.tokens[c].chosen) return false;
  return true;
}

}  // namespace construe
