#pragma once

// JSON views shared by the C API and the HTTP service. Internal header.

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "construe/constructs.hpp"
#include "construe/exercises.hpp"
#include "construe/feedback.hpp"
#include "construe/learner_model.hpp"
#include "construe/text_pipeline.hpp"

namespace construe::io {

using json = nlohmann::ordered_json;

json to_json(const MorphAnalysis& a);
json to_json(const FeatureBundle& f);
json to_json(const Chunk& c);
json to_json(const Hint& h);
json to_json(const AnswerDiff& d);
json to_json(const ConstructProgress& p);
json to_json(const SkillState& s);

/// Instance with surfaces and sentence-local token indices alongside the global ones.
json instance_json(const AnnotatedStory& story, const ConstructInstance& inst);

/// Annotation dump: tokens, sentences, chunks and the detected "constructs".
json annotation_json(const AnnotatedStory& story, const std::vector<ConstructInstance>& instances,
                     const LanguagePack& pack);

/// Gold-corpus shape: {"sentences": [{id, text, instances}]} with sentence-local indices.
json gold_json(const std::vector<GoldSentence>& sentences);

/// Annotates every gold sentence and renders the detected instances in gold shape.
json detect_gold(const std::vector<GoldSentence>& sentences, const LanguagePack& pack);

/// Learner-facing exercise view: never contains the answer or the correct index.
json exercise_client_json(const Exercise& ex, const LanguagePack& pack);

/// Server-side record including the answer (event log, diagnostics).
json exercise_server_json(const Exercise& ex);

json outcome_json(const AttemptOutcome& o);

json violations_json(const std::vector<Violation>& v);

}  // namespace construe::io
