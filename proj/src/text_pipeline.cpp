#include "construe/text_pipeline.hpp"

#include <algorithm>

#include "construe/unicode.hpp"

namespace construe {

namespace {

bool is_terminal(char32_t c) { return c == U'.' || c == U'!' || c == U'?' || c == U'…'; }

bool is_closer(char32_t c) {
  return c == U'"' || c == U'»' || c == U'”' || c == U'’' || c == U')' || c == U']' || c == U'\'';
}

bool is_joiner(char32_t c) { return c == U'-' || c == U'\'' || c == U'’' || c == U'‐'; }

bool is_word_char(char32_t c) { return unicode::is_letter(c) || unicode::is_digit(c); }

}  // namespace

std::span<const Token> AnnotatedStory::sentence_tokens(std::size_t sentence) const {
  const Sentence& s = sentences.at(sentence);
  return std::span<const Token>(tokens).subspan(s.first_token, s.end_token - s.first_token);
}

const Chunk* AnnotatedStory::chunk_at(std::size_t token, ChunkKind kind) const {
  for (const Chunk& c : chunks)
    if (c.kind == kind && c.contains(token)) return &c;
  return nullptr;
}

std::string AnnotatedStory::slice(std::size_t first_token, std::size_t last_token) const {
  const auto b = tokens.at(first_token).byte_start, e = tokens.at(last_token).byte_end;
  return text.substr(b, e - b);
}

bool AnnotatedStory::sentence_initial(std::size_t token) const {
  const Sentence& s = sentences.at(tokens.at(token).sentence);
  for (std::size_t i = s.first_token; i < s.end_token; ++i)
    if (tokens[i].is_word) return i == token;
  return false;
}

Tokenization tokenize(std::string_view text, const std::set<std::string>& abbreviations) {
  if (unicode::trim(text).empty()) fail(ErrorCode::EmptyInput, "text is empty");
  const auto cps = unicode::decode(text);
  Tokenization out;
  std::size_t paragraph = 0;
  std::size_t sentence_start = 0;
  bool pending_break = false;   // a terminal mark has been seen

  const auto close_sentence = [&](std::size_t end) {
    if (end > sentence_start) {
      out.sentences.push_back({sentence_start, end, paragraph});
      for (std::size_t k = sentence_start; k < end; ++k) out.tokens[k].sentence = out.sentences.size() - 1;
    }
    sentence_start = end;
    pending_break = false;
  };
  const auto push = [&](std::size_t from, std::size_t to, bool word) {
    Token t;
    t.byte_start = cps[from].byte_start;
    t.byte_end = cps[to - 1].byte_end;
    t.char_start = from;
    t.char_end = to;
    t.surface = std::string(text.substr(t.byte_start, t.byte_end - t.byte_start));
    t.is_word = word;
    out.tokens.push_back(std::move(t));
  };

  std::size_t i = 0;
  while (i < cps.size()) {
    const char32_t c = cps[i].value;
    if (unicode::is_space(c)) {
      std::size_t newlines = 0, j = i;
      while (j < cps.size() && unicode::is_space(cps[j].value)) newlines += cps[j++].value == U'\n';
      if (newlines >= 2) {
        close_sentence(out.tokens.size());
        ++paragraph;
      }
      i = j;
      continue;
    }
    if (is_word_char(c)) {
      std::size_t j = i + 1;
      while (j < cps.size()) {
        const char32_t d = cps[j].value;
        if (is_word_char(d)) {
          ++j;
        } else if (j + 1 < cps.size() && is_word_char(cps[j + 1].value) &&
                   (is_joiner(d) || ((d == U'.' || d == U',') && unicode::is_digit(cps[j - 1].value) &&
                                     unicode::is_digit(cps[j + 1].value)))) {
          j += 2;
        } else {
          break;
        }
      }
      // Pack abbreviations (possibly with inner dots, "z.B.") win over the plain word.
      std::size_t abbrev_bytes = 0;
      for (const auto& a : abbreviations) {
        const std::size_t at = cps[i].byte_start;
        if (a.size() <= abbrev_bytes || at + a.size() > text.size()) continue;
        if (unicode::to_lower(text.substr(at, a.size())) != unicode::to_lower(a)) continue;
        const auto next = std::find_if(cps.begin() + i, cps.end(),
                                       [&](const unicode::CodePoint& cp) { return cp.byte_start >= at + a.size(); });
        if (next != cps.end() && (next->byte_start != at + a.size() || is_word_char(next->value))) continue;
        abbrev_bytes = a.size();
        j = static_cast<std::size_t>(next - cps.begin());
      }
      if (pending_break) close_sentence(out.tokens.size());
      push(i, j, true);
      i = j;
      continue;
    }
    // punctuation
    if (is_terminal(c)) {
      std::size_t j = i + 1;
      while (j < cps.size() && is_terminal(cps[j].value)) ++j;
      if (pending_break) close_sentence(out.tokens.size());
      push(i, j, false);
      pending_break = true;
      i = j;
      continue;
    }
    if (pending_break && !is_closer(c)) close_sentence(out.tokens.size());
    push(i, i + 1, false);
    ++i;
  }
  close_sentence(out.tokens.size());
  return out;
}

void attach_analyses(std::vector<Token>& tokens, const std::vector<Sentence>& sentences, const LanguagePack& pack) {
  std::vector<bool> initial(tokens.size(), false);
  for (const Sentence& s : sentences)
    for (std::size_t i = s.first_token; i < s.end_token; ++i)
      if (tokens[i].is_word) {
        initial[i] = true;
        break;
      }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    Token& t = tokens[i];
    t.analyses.clear();
    t.chosen.reset();
    t.ambiguous = false;
    if (!t.is_word) continue;
    t.analyses = analyze(t.surface, pack);
    if (unicode::starts_upper(t.surface) && (initial[i] || t.analyses.empty())) {
      for (auto& a : analyze(unicode::lower_first(t.surface), pack))
        if (std::find(t.analyses.begin(), t.analyses.end(), a) == t.analyses.end()) t.analyses.push_back(std::move(a));
    }
  }
}

bool matches_analysis(const TokenMatcher& m, const MorphAnalysis& a, const LanguagePack& pack) {
  if (m.lemmas && !m.lemmas->count(a.lemma)) return false;
  if (m.pos && !m.pos->count(a.pos)) return false;
  if (!m.features.accepts(a.features)) return false;
  if (m.lemma_class) {
    const auto* cls = pack.find_lemma_class(*m.lemma_class);
    if (cls == nullptr || !cls->contains(a.lemma)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Disambiguation

namespace {

class Disambiguator {
 public:
  Disambiguator(std::span<Token> sentence, const LanguagePack& pack)
      : toks_(sentence), pack_(pack), sx_(pack.syntax) {
    for (std::size_t i = 0; i < toks_.size(); ++i)
      if (toks_[i].is_word) words_.push_back(i);
  }

  void run() {
    while (true) {
      bool changed = modifier_support();
      changed |= modifier_agreement();
      changed |= preposition_case();
      changed |= subject_agreement();
      if (!changed) changed = tie_break();
      if (!changed) break;
    }
    for (std::size_t i : words_) {
      Token& t = toks_[i];
      if (t.analyses.size() == 1) t.chosen = t.analyses.front();
      t.ambiguous = !t.chosen && t.analyses.size() > 1;
    }
  }

 private:
  bool modifier(const MorphAnalysis& a) const { return sx_.np_modifiers.count(a.pos) > 0; }
  bool head(const MorphAnalysis& a) const { return sx_.np_heads.count(a.pos) > 0; }
  bool nominal(const MorphAnalysis& a) const { return modifier(a) || head(a); }

  bool agree(const MorphAnalysis& a, const MorphAnalysis& b) const {
    for (const auto& cat : sx_.agreement) {
      const auto va = a.features.get(cat), vb = b.features.get(cat);
      if (va && vb && *va != *vb) return false;
    }
    return true;
  }

  // Next word token after position k (index into words_), or npos.
  std::size_t next_word(std::size_t k) const { return k + 1 < words_.size() ? words_[k + 1] : npos; }

  bool replace(Token& t, std::vector<MorphAnalysis> keep) {
    if (keep.empty() || keep.size() == t.analyses.size()) return false;
    t.analyses = std::move(keep);
    return true;
  }

  // An adjective-like reading must be followed by a nominal it agrees with,
  // otherwise it is dropped in favour of the token's other readings.
  bool modifier_support() {
    bool changed = false;
    for (std::size_t k = 0; k < words_.size(); ++k) {
      Token& t = toks_[words_[k]];
      if (t.analyses.size() < 2) continue;
      const bool has_mod = std::any_of(t.analyses.begin(), t.analyses.end(), [&](const auto& a) { return modifier(a); });
      const bool has_other = std::any_of(t.analyses.begin(), t.analyses.end(), [&](const auto& a) { return !modifier(a); });
      if (!has_mod || !has_other) continue;
      const std::size_t n = next_word(k);
      std::vector<MorphAnalysis> keep;
      for (const auto& a : t.analyses) {
        bool ok = !modifier(a);
        if (!ok && n != npos)
          ok = std::any_of(toks_[n].analyses.begin(), toks_[n].analyses.end(),
                           [&](const auto& b) { return nominal(b) && agree(a, b); });
        if (ok) keep.push_back(a);
      }
      changed |= replace(t, std::move(keep));
    }
    return changed;
  }

  // A definite modifier and the nominal readings that follow it must agree.
  bool modifier_agreement() {
    bool changed = false;
    for (std::size_t k = 0; k + 1 < words_.size(); ++k) {
      Token& t = toks_[words_[k]];
      Token& u = toks_[words_[k + 1]];
      if (t.analyses.empty() || u.analyses.empty()) continue;
      if (!std::all_of(t.analyses.begin(), t.analyses.end(), [&](const auto& a) { return modifier(a); })) continue;
      bool any_pair = false;
      for (const auto& a : t.analyses)
        for (const auto& b : u.analyses)
          any_pair |= nominal(b) && agree(a, b);
      if (!any_pair) continue;
      std::vector<MorphAnalysis> keep_t, keep_u;
      for (const auto& a : t.analyses)
        if (std::any_of(u.analyses.begin(), u.analyses.end(), [&](const auto& b) { return nominal(b) && agree(a, b); }))
          keep_t.push_back(a);
      for (const auto& b : u.analyses)
        if (!nominal(b) || std::any_of(t.analyses.begin(), t.analyses.end(), [&](const auto& a) { return agree(a, b); }))
          keep_u.push_back(b);
      changed |= replace(t, std::move(keep_t));
      changed |= replace(u, std::move(keep_u));
    }
    return changed;
  }

  // Nominals right after a preposition take one of the cases it governs.
  bool preposition_case() {
    bool changed = false;
    for (std::size_t k = 0; k < words_.size(); ++k) {
      const Token& p = toks_[words_[k]];
      if (p.analyses.empty() ||
          !std::all_of(p.analyses.begin(), p.analyses.end(), [&](const auto& a) { return sx_.adpositions.count(a.pos) > 0; }))
        continue;
      std::set<std::string> cases;
      for (const auto& a : p.analyses)
        for (const auto* g : pack_.patterns_for(a.lemma, a.pos))
          if (g->case_value) cases.insert(*g->case_value);
      if (cases.empty()) continue;
      for (std::size_t j = k + 1; j < words_.size(); ++j) {
        Token& u = toks_[words_[j]];
        if (u.analyses.empty() ||
            !std::all_of(u.analyses.begin(), u.analyses.end(), [&](const auto& a) { return nominal(a); }))
          break;
        std::vector<MorphAnalysis> keep;
        for (const auto& a : u.analyses) {
          const auto c = a.features.get("Case");
          if (!c || cases.count(std::string(*c))) keep.push_back(a);
        }
        changed |= replace(u, std::move(keep));
        if (std::any_of(u.analyses.begin(), u.analyses.end(), [&](const auto& a) { return head(a); })) break;
      }
    }
    return changed;
  }

  struct Subject {
    std::size_t word = 0;
    FeatureBundle agreement;
  };

  std::optional<Subject> subject_at(std::size_t k) const {
    const Token& t = toks_[words_[k]];
    if (t.analyses.empty() || sx_.subject.empty()) return std::nullopt;
    std::optional<FeatureBundle> agreed;
    for (const auto& a : t.analyses) {
      if (!head(a) || !sx_.subject.accepts(a.features)) return std::nullopt;
      FeatureBundle f;
      for (const auto& cat : sx_.subject_agreement) {
        if (auto v = a.features.get(cat)) f.set(cat, std::string(*v));
        else if (cat == "Person") f.set(cat, sx_.default_person);
      }
      if (agreed && !(*agreed == f)) return std::nullopt;
      agreed = f;
    }
    return Subject{k, *agreed};
  }

  bool subject_agreement() {
    if (sx_.finite.empty()) return false;
    bool changed = false;
    for (std::size_t k = 0; k < words_.size(); ++k) {
      Token& v = toks_[words_[k]];
      if (v.analyses.size() < 2) continue;
      if (std::none_of(v.analyses.begin(), v.analyses.end(), [&](const auto& a) { return sx_.finite.accepts(a.features); }))
        continue;
      std::optional<Subject> subj;
      std::size_t at = npos;
      for (std::size_t j = k; j-- > 0 && !subj;) {
        subj = subject_at(j);
        at = j;
      }
      for (std::size_t j = k + 1; j < words_.size() && !subj; ++j) {
        subj = subject_at(j);
        at = j;
      }
      if (!subj) continue;
      // The word right after the subject is its verb unless another finite verb is certain.
      const bool adjacent = at + 1 == k && !other_finite(k);
      std::vector<MorphAnalysis> keep;
      for (const auto& a : v.analyses) {
        const bool finite = sx_.finite.accepts(a.features);
        bool ok = finite || !adjacent;
        if (finite)
          for (const auto& [cat, val] : subj->agreement) {
            const auto got = a.features.get(cat);
            if (got && *got != val) ok = false;
          }
        if (ok) keep.push_back(a);
      }
      changed |= replace(v, std::move(keep));
    }
    return changed;
  }

  bool other_finite(std::size_t k) const {
    for (std::size_t j = 0; j < words_.size(); ++j) {
      if (j == k) continue;
      const auto& as = toks_[words_[j]].analyses;
      if (!as.empty() && std::all_of(as.begin(), as.end(), [&](const auto& a) { return sx_.finite.accepts(a.features); }))
        return true;
    }
    return false;
  }

  // Same-lemma readings: keep the most frequent lexeme's first paradigm slot.
  bool tie_break() {
    for (std::size_t i : words_) {
      Token& t = toks_[i];
      if (t.analyses.size() < 2) continue;
      const auto& lemma = t.analyses.front().lemma;
      if (!std::all_of(t.analyses.begin(), t.analyses.end(), [&](const auto& a) { return a.lemma == lemma; }))
        continue;
      t.analyses.resize(1);
      return true;
    }
    return false;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::span<Token> toks_;
  const LanguagePack& pack_;
  const SyntaxRules& sx_;
  std::vector<std::size_t> words_;
};

}  // namespace

void disambiguate(std::span<Token> sentence, const LanguagePack& pack) {
  Disambiguator(sentence, pack).run();
}

// ---------------------------------------------------------------------------
// Chunking

std::vector<Chunk> chunk(std::span<const Token> sentence, std::size_t offset, const LanguagePack& pack) {
  const SyntaxRules& sx = pack.syntax;
  std::vector<std::size_t> words;
  for (std::size_t i = 0; i < sentence.size(); ++i)
    if (sentence[i].is_word) words.push_back(i);
  const auto chosen = [&](std::size_t w) -> const MorphAnalysis* {
    const auto& c = sentence[words[w]].chosen;
    return c ? &*c : nullptr;
  };
  std::vector<Chunk> out;

  // Analytic verb forms: contiguous words, longest match wins, left to right.
  std::vector<Chunk> verbs;
  for (const auto& pat : sx.analytic_verbs) {
    for (std::size_t w = 0; w + pat.tokens.size() <= words.size(); ++w) {
      bool ok = true;
      for (std::size_t k = 0; k < pat.tokens.size() && ok; ++k) {
        const auto* a = chosen(w + k);
        ok = a != nullptr && matches_analysis(pat.tokens[k], *a, pack);
      }
      if (ok)
        verbs.push_back({ChunkKind::AnalyticVerb, offset + words[w], offset + words[w + pat.tokens.size() - 1],
                         offset + words[w + pat.head]});
    }
  }
  std::sort(verbs.begin(), verbs.end(), [](const Chunk& a, const Chunk& b) {
    return a.first != b.first ? a.first < b.first : a.last > b.last;
  });
  std::size_t covered_until = 0;
  bool any = false;
  for (const auto& c : verbs) {
    if (any && c.first <= covered_until) continue;
    out.push_back(c);
    covered_until = c.last;
    any = true;
  }

  // Noun phrases: modifier* head, all sharing one case value.
  std::vector<Chunk> nps;
  for (std::size_t w = 0; w < words.size();) {
    const auto* a = chosen(w);
    if (a == nullptr || !(sx.np_modifiers.count(a->pos) || sx.np_heads.count(a->pos))) {
      ++w;
      continue;
    }
    const auto case_of = [](const MorphAnalysis* x) { return x->features.get("Case"); };
    std::size_t end = w;
    bool found = false;
    while (true) {
      const auto* cur = chosen(end);
      if (sx.np_heads.count(cur->pos)) {
        found = true;
        break;
      }
      if (end + 1 >= words.size() || words[end + 1] != words[end] + 1) break;
      const auto* nxt = chosen(end + 1);
      if (nxt == nullptr || !(sx.np_modifiers.count(nxt->pos) || sx.np_heads.count(nxt->pos)) ||
          case_of(nxt) != case_of(a))
        break;
      ++end;
    }
    if (!found) {
      ++w;
      continue;
    }
    nps.push_back({ChunkKind::NounPhrase, offset + words[w], offset + words[end], offset + words[end]});
    w = end + 1;
  }

  // Preposition phrases: adposition directly followed by a noun phrase.
  for (std::size_t w = 0; w + 1 < words.size(); ++w) {
    const auto* a = chosen(w);
    if (a == nullptr || !sx.adpositions.count(a->pos) || words[w + 1] != words[w] + 1) continue;
    const std::size_t start = offset + words[w + 1];
    for (const auto& np : nps)
      if (np.first == start) out.push_back({ChunkKind::PrepPhrase, offset + words[w], np.last, np.head});
  }
  out.insert(out.end(), nps.begin(), nps.end());
  std::sort(out.begin(), out.end(), [](const Chunk& a, const Chunk& b) {
    return a.first != b.first ? a.first < b.first : (a.last != b.last ? a.last > b.last : a.kind < b.kind);
  });
  return out;
}

AnnotatedStory annotate(std::string id, std::string_view text, const LanguagePack& pack) {
  AnnotatedStory story;
  story.id = std::move(id);
  story.text = unicode::nfc(text);
  auto tk = tokenize(story.text, pack.syntax.abbreviations);
  story.tokens = std::move(tk.tokens);
  story.sentences = std::move(tk.sentences);
  attach_analyses(story.tokens, story.sentences, pack);
  for (const Sentence& s : story.sentences) {
    std::span<Token> span(story.tokens.data() + s.first_token, s.end_token - s.first_token);
    disambiguate(span, pack);
    auto chunks = chunk(span, s.first_token, pack);
    story.chunks.insert(story.chunks.end(), chunks.begin(), chunks.end());
  }
  return story;
}

}  // namespace construe
