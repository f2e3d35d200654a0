// Online inference: P(v|q) ∝ Σ_{e,t,p} P(e|q)·P(t|e,q)·θ_pt·P(v|e,p),
// answer selection, and chained answering of decomposed questions.

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kbqa/concept_graph.hpp"
#include "kbqa/entity_index.hpp"
#include "kbqa/kb_store.hpp"
#include "kbqa/template_learner.hpp"
#include "kbqa/text.hpp"

namespace kbqa {

// Read-only stores consulted while answering.
struct Resources {
  const KnowledgeBase &kb;
  const StaticHashArray &index;
  const ConceptGraph &concepts;
  const PredicateModel &model;
  const NodeLexicon &lexicon;
  std::size_t max_mention_tokens = 6;
};

inline constexpr const char *kReasonNoEntity = "no entity";
inline constexpr const char *kReasonNoTemplate = "no template";
inline constexpr const char *kReasonNoValue = "no value";

// Best (entity, template, predicate) explanation for one value, with the
// raw (unnormalized) mass of that explanation.
struct AnswerTrace {
  NodeId entity = 0;
  std::string template_key;
  std::string path;
  double mass = 0;
};

struct AnswerDistribution {
  std::map<NodeId, double> probabilities;  // normalized
  std::map<NodeId, double> raw_mass;       // before normalization
  std::map<NodeId, AnswerTrace> traces;
  std::string reason;  // set when empty
  // Number of (entity, template, predicate) combinations evaluated.
  std::size_t enumerations = 0;

  bool empty() const { return probabilities.empty(); }
};

// KB entities mentioned in the question, each with the span of its first
// mention; P(e|q) is uniform over them.
std::vector<std::pair<NodeId, TokenSpan>> QuestionEntities(
    std::span<const std::string> question, const Resources &res);

AnswerDistribution ComputeAnswerDistribution(std::span<const std::string> question,
                                             const Resources &res);

struct Answer {
  NodeId value = 0;
  double probability = 0;
  AnswerTrace trace;
};

struct AnswerResult {
  std::optional<Answer> answer;
  std::string reason;
};

// Argmax of the distribution; ties go to the lexicographically smaller
// value symbol.
AnswerResult AnswerQuestion(std::span<const std::string> question,
                            const Resources &res);
std::optional<Answer> SelectAnswer(const AnswerDistribution &dist,
                                   const KnowledgeBase &kb);

struct SequenceResult {
  std::optional<Answer> answer;
  std::optional<std::size_t> failed_index;
  std::string reason;
  std::vector<Tokens> questions;  // materialized questions, in order
  std::vector<Answer> steps;
};

// Answers sequence[0], substitutes the answer's surface form for `$e` in
// the next question, and so on. Stops at the first unanswerable step.
SequenceResult AnswerSequence(std::span<const Tokens> sequence,
                              const Resources &res);

}  // namespace kbqa
