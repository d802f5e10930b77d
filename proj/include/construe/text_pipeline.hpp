#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "construe/morphology.hpp"
#include "construe/pack.hpp"

namespace construe {

struct Token {
  std::string surface;
  std::size_t byte_start = 0;
  std::size_t byte_end = 0;
  std::size_t char_start = 0;  // code point offsets into the story text
  std::size_t char_end = 0;
  std::size_t sentence = 0;
  bool is_word = true;
  std::vector<MorphAnalysis> analyses;
  std::optional<MorphAnalysis> chosen;
  bool ambiguous = false;
};

struct Chunk {
  ChunkKind kind = ChunkKind::NounPhrase;
  std::size_t first = 0;  // token indices, inclusive
  std::size_t last = 0;
  std::size_t head = 0;

  bool contains(std::size_t token) const { return token >= first && token <= last; }
  friend bool operator==(const Chunk&, const Chunk&) = default;
};

struct Sentence {
  std::size_t first_token = 0;
  std::size_t end_token = 0;  // exclusive
  std::size_t paragraph = 0;
};

struct AnnotatedStory {
  std::string id;
  std::string text;
  std::vector<Token> tokens;
  std::vector<Chunk> chunks;
  std::vector<Sentence> sentences;

  std::span<const Token> sentence_tokens(std::size_t sentence) const;
  /// Chunks of `kind` containing the token.
  const Chunk* chunk_at(std::size_t token, ChunkKind kind) const;
  std::string slice(std::size_t first_token, std::size_t last_token) const;
  /// True when the token is the first word of its sentence.
  bool sentence_initial(std::size_t token) const;
};

struct Tokenization {
  std::vector<Token> tokens;
  std::vector<Sentence> sentences;
};

/// Splits text into word and punctuation tokens and sentences. Abbreviations
/// (lowercase, with the trailing period) keep their period and do not end a
/// sentence unless the next word is capitalized. Throws Error(EmptyInput).
Tokenization tokenize(std::string_view text, const std::set<std::string>& abbreviations = {});

/// Looks up analyses for every word token; sentence-initial words also get the
/// analyses of their lower-cased form, other words fall back to it when unknown.
void attach_analyses(std::vector<Token>& tokens, const std::vector<Sentence>& sentences, const LanguagePack& pack);

/// Agreement-rule filtering over one sentence, then frequency tie-breaking
/// among same-lemma readings. Sets `chosen` or the ambiguity flag on each token.
void disambiguate(std::span<Token> sentence, const LanguagePack& pack);

/// Noun phrases, preposition phrases and analytic verb forms over one sentence.
/// `offset` is the story index of sentence[0]; returned indices are story-global.
std::vector<Chunk> chunk(std::span<const Token> sentence, std::size_t offset, const LanguagePack& pack);

/// Full pipeline: NFC, tokenize, analyze, disambiguate, chunk.
AnnotatedStory annotate(std::string id, std::string_view text, const LanguagePack& pack);

/// Shared by chunking and detection: does the chosen analysis satisfy the
/// lemma/pos/feature/lemma-class part of a matcher?
bool matches_analysis(const TokenMatcher& m, const MorphAnalysis& a, const LanguagePack& pack);

}  // namespace construe
