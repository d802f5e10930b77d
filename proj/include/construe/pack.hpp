#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "construe/error.hpp"
#include "construe/features.hpp"

namespace construe {

// ---------------------------------------------------------------------------
// Morphology tables

struct Rewrite {
  std::string from;
  std::string to;
};

/// stem selector + optional trailing rewrite of that stem + literal suffix.
struct RealizationRule {
  std::size_t stem = 0;
  std::optional<Rewrite> rewrite;
  std::string suffix;

  /// Parses "<stem>[:<from>><to>][+<suffix>]", e.g. "1+n" or "2:a>e+mpi".
  static RealizationRule parse(std::string_view text);
  std::string apply(const std::vector<std::string>& stems) const;
};

struct ParadigmSlot {
  FeatureBundle features;
  RealizationRule rule;
};

struct Paradigm {
  std::string id;
  std::string pos;
  std::vector<ParadigmSlot> slots;
  std::size_t citation_slot = 0;
  std::size_t stem_count = 0;  // 1 + highest stem index referenced by a slot
};

struct Lexeme {
  std::string lemma;
  std::string pos;
  std::string paradigm;
  std::vector<std::string> stems;
  int frequency_rank = 0;
  std::map<std::string, std::string> links;
  std::string gloss;
  std::size_t paradigm_index = 0;
};

struct LemmaClass {
  std::string id;
  std::set<std::string> lemmas;
  std::vector<std::string> pattern_sources;
  std::vector<std::regex> patterns;

  bool contains(const std::string& lemma) const;
};

// ---------------------------------------------------------------------------
// Government, chunking and constructs

struct GovernmentPattern {
  std::string governor;  // lemma, or "@class" for a lemma class
  std::string governor_pos;
  std::optional<std::string> case_value;
  std::optional<std::string> preposition;
  std::optional<std::string> clause_marker;
  bool direction_free = true;
  std::string role;
};

enum class ChunkKind { NounPhrase, PrepPhrase, AnalyticVerb };

std::string_view chunk_kind_name(ChunkKind kind) noexcept;
std::optional<ChunkKind> parse_chunk_kind(std::string_view name) noexcept;

/// Conjunctive constraints on a single token. Empty optionals are unconstrained.
struct TokenMatcher {
  std::optional<std::set<std::string>> lemmas;
  std::optional<std::string> lemma_class;
  std::optional<std::set<std::string>> pos;
  FeatureConstraint features;
  std::optional<std::string> surface_source;
  std::optional<std::regex> surface;
  std::optional<ChunkKind> chunk;
  bool chunk_head = false;
  std::optional<std::size_t> governed_by;
  std::optional<std::string> governs_case;
  std::optional<std::string> governs_clause;
  bool anywhere = false;

  /// False only for pure surface matchers (orthography), which bypass morphology.
  bool needs_analysis() const;
};

enum class ConstructKind { MorphFeature, Government, Construction, LemmaClass, Orthography };

std::string_view construct_kind_name(ConstructKind kind) noexcept;
std::optional<ConstructKind> parse_construct_kind(std::string_view name) noexcept;

/// A paraphrase part is either literal text or a regenerated matched token.
struct ParaphrasePart {
  std::optional<std::string> text;
  std::size_t slot = 0;
  /// Target values; a value of the form "@<slot>.<Category>" copies that
  /// category from another matched token's chosen analysis.
  std::map<std::string, std::string> features;
  bool replace = false;  // replace the token's features instead of overlaying
};

struct ParaphraseTemplate {
  std::vector<ParaphrasePart> parts;
};

struct FeedbackTemplates {
  std::string context;     // level-0 hint, may be empty
  std::string final_hint;  // overrides the generated value hint when set
};

struct ConstructDef {
  std::string id;
  std::string name;
  ConstructKind kind = ConstructKind::MorphFeature;
  std::vector<TokenMatcher> matchers;
  std::vector<std::size_t> candidates;
  FeedbackTemplates feedback;
  std::optional<ParaphraseTemplate> paraphrase;
  std::optional<std::string> cefr;
  std::optional<std::string> recipe;
  std::string hint_lemma;  // display lemma for span (orthography) candidates
  std::size_t order = 0;   // declaration order within the pack
};

enum class DistractorStrategy { FeatureVariation, LemmaPairSwap, OrthographyVariants };

std::string_view distractor_strategy_name(DistractorStrategy s) noexcept;

struct OrthographyRule {
  std::string pattern_source;
  std::regex pattern;
  std::string replacement;
};

struct DistractorRecipe {
  std::string id;
  DistractorStrategy strategy = DistractorStrategy::FeatureVariation;
  std::string category;
  std::vector<std::string> values;
  std::string link = "pair";
  std::vector<OrthographyRule> rules;
  std::size_t count = 3;  // target number of options including the answer
};

struct AnalyticVerbPattern {
  std::string name;
  std::vector<TokenMatcher> tokens;
  std::size_t head = 0;
};

struct SyntaxRules {
  std::set<std::string> abbreviations;
  std::set<std::string> np_heads;
  std::set<std::string> np_modifiers;
  std::vector<std::string> agreement;
  std::set<std::string> adpositions;
  FeatureConstraint subject;
  FeatureConstraint finite;
  std::vector<std::string> subject_agreement;
  std::string default_person = "3";
  std::vector<AnalyticVerbPattern> analytic_verbs;
};

struct FeatureHierarchy {
  std::map<std::string, std::vector<std::string>, std::less<>> order;  // pos -> categories
  std::map<std::string, std::string, std::less<>> category_labels;
  std::map<std::string, std::string, std::less<>> value_labels;  // "Case=Par" -> "partitive case"
  std::string category_template = "Use another {category}.";
  std::string values_template = "Use {values}.";
  std::string paraphrase_template = "This is equivalent to '...{text}...'";
  std::string citation_template = "Use the dictionary form '{lemma}'.";
  std::string separator = ", ";
  std::string last_separator = " and ";

  const std::vector<std::string>& categories_for(std::string_view pos) const;
  std::string category_label(std::string_view category) const;
  std::string value_label(std::string_view category, std::string_view value) const;
};

struct GoldInstance {
  std::string construct;
  std::vector<std::size_t> tokens;
  std::vector<std::string> surfaces;
  std::vector<std::size_t> candidates;
};

struct GoldSentence {
  std::string id;
  std::string text;
  std::vector<GoldInstance> instances;
};

// ---------------------------------------------------------------------------

struct Violation {
  ErrorCode code = ErrorCode::SchemaViolation;
  std::string pointer;  // "<file>#/json/pointer"
  std::string message;
};

/// Slot reference produced by the surface index.
struct FormRef {
  std::size_t lexeme = 0;
  std::size_t slot = 0;
};

/// Immutable, validated language bundle.
class LanguagePack {
 public:
  std::string language;
  std::string name;
  std::filesystem::path root;
  FeatureSchema schema;
  std::vector<Paradigm> paradigms;
  std::vector<Lexeme> lexicon;
  std::map<std::string, LemmaClass, std::less<>> lemma_classes;
  std::vector<GovernmentPattern> government;
  std::vector<ConstructDef> constructs;
  std::map<std::string, DistractorRecipe, std::less<>> recipes;
  FeatureHierarchy hierarchy;
  SyntaxRules syntax;
  std::vector<GoldSentence> gold;

  const Paradigm* find_paradigm(std::string_view id) const;
  const ConstructDef* find_construct(std::string_view id) const;
  const DistractorRecipe* find_recipe(std::string_view id) const;
  const LemmaClass* find_lemma_class(std::string_view id) const;
  /// Lexemes with this lemma, ordered by frequency rank.
  std::vector<std::size_t> lexemes_for(std::string_view lemma) const;
  std::vector<std::size_t> lexemes_for(std::string_view lemma, std::string_view pos) const;
  /// Government patterns whose governor matches `lemma` (directly or via class).
  std::vector<const GovernmentPattern*> patterns_for(std::string_view lemma,
                                                     std::string_view pos) const;
  const std::vector<FormRef>* forms(std::string_view surface) const;

  /// Rebuilds lookup tables; called by the loader after validation.
  void build_indexes();

 private:
  std::unordered_map<std::string, std::size_t> paradigm_index_;
  std::unordered_map<std::string, std::size_t> construct_index_;
  std::unordered_multimap<std::string, std::size_t> lemma_index_;
  std::unordered_map<std::string, std::vector<FormRef>> surface_index_;
};

/// Loads and validates a pack directory. Throws Error(MissingFile |
/// SchemaViolation | DanglingReference) naming the offending element.
LanguagePack load_pack(const std::filesystem::path& dir);

/// Runs the full validation and returns every violation found (empty = valid).
std::vector<Violation> validate_pack(const std::filesystem::path& dir);

}  // namespace construe
