// isA taxonomy: concept priors P(c|e), context-aware conceptualization
// P(c|q,e), and question templates t(q,e,c).

#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kbqa/text.hpp"

namespace kbqa {

using ConceptDistribution = std::map<std::string, double>;
// (concept, token) → weight.
using ContextWeights = std::map<std::pair<std::string, std::string>, double>;

// Concept assigned to entities that have no isA edges.
inline constexpr const char *kUniversalConcept = "entity";

// A question with one entity mention replaced by `$concept`.
struct Template {
  Tokens tokens;
  std::string concept_name;

  std::string Key() const { return JoinTokens(tokens); }
  auto operator<=>(const Template &) const = default;
};

// P(c|q,e) ∝ P(c|e) · (1 + Σ_{w in q outside the mention} weights[c, w]).
ConceptDistribution Conceptualize(const ConceptDistribution &prior,
                                  std::span<const std::string> question,
                                  TokenSpan mention,
                                  const ContextWeights &weights);

// One template per concept with positive probability. Throws Error when
// the mention is out of range.
std::vector<std::pair<Template, double>> DeriveTemplates(
    std::span<const std::string> question, TokenSpan mention,
    const ConceptDistribution &concepts);

class ConceptGraph {
 public:
  ConceptGraph() = default;

  // TSV `entity<TAB>concept<TAB>weight`, weight > 0.
  static ConceptGraph Load(std::istream &isa);
  static ConceptGraph LoadFile(const std::filesystem::path &isa);
  // TSV `concept<TAB>token<TAB>weight`.
  void LoadContextWeights(std::istream &in);
  // TSV `question<TAB>concept<TAB>probability`; the question text is
  // normalized before use as a key.
  void LoadOverrides(std::istream &in);

  void AddEdge(const std::string &entity, const std::string &concept_name,
               double weight);
  void SetContextWeight(const std::string &concept_name,
                        const std::string &token, double weight);
  void SetOverride(const std::string &question, const std::string &concept_name,
                   double probability);

  // Normalized isA weights; empty when the entity has no edges.
  ConceptDistribution ConceptPrior(const std::string &entity) const;

  // P(c|q,e) used by learning and answering: a per-question override if
  // one exists, else Conceptualize over the prior. Entities without edges
  // get {entity: 1}.
  ConceptDistribution ContextConcepts(std::span<const std::string> question,
                                      TokenSpan mention,
                                      const std::string &entity) const;

  // DeriveTemplates(question, mention, ContextConcepts(...)).
  std::vector<std::pair<Template, double>> Templates(
      std::span<const std::string> question, TokenSpan mention,
      const std::string &entity) const;

  const ContextWeights &context_weights() const { return context_weights_; }

 private:
  std::map<std::string, std::map<std::string, double>> edges_;
  ContextWeights context_weights_;
  std::map<std::string, ConceptDistribution> overrides_;
};

}  // namespace kbqa
