// Offline estimation of θ = P(p|t) by expectation-maximization over the
// observation set X, a counting baseline, and likelihood evaluation.
//
// Each observation x_i contributes the latent assignments z = (p, t) for
// which f(x_i, z) = P(q)·P(e|q)·P(t|e,q)·P(v|e,p) is positive; all other
// assignments are pruned before estimation, so one EM iteration costs
// O(number of (observation, z) candidates).

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kbqa/concept_graph.hpp"
#include "kbqa/kb_store.hpp"
#include "kbqa/qa_extraction.hpp"

namespace kbqa {

struct FactorComponents {
  double question_prob = 0;  // P(q)
  double entity_prob = 0;    // P(e|q)
  double template_prob = 0;  // P(t|e,q)
  double value_prob = 0;     // P(v|e,p)
};

// f(x, z): product of the four factors.
double FactorF(const FactorComponents &c);

// f(x, (p, t)) computed from the stores; 0 when t is not derivable from
// (q, e) or p does not connect e to v.
double FactorF(const Observation &x, const std::string &template_key,
               const ExpandedPredicate &path, const KnowledgeBase &kb,
               const ConceptGraph &concepts);

// Dense ids for (template, predicate-path) parameters, grouped by template.
class ParamSpace {
 public:
  std::uint32_t Intern(const std::string &template_key, const std::string &path);

  std::size_t size() const { return params_.size(); }
  std::size_t template_count() const { return templates_.size(); }
  std::uint32_t TemplateOf(std::uint32_t param) const { return params_[param].first; }
  std::uint32_t PathOf(std::uint32_t param) const { return params_[param].second; }
  const std::string &TemplateName(std::uint32_t t) const { return templates_[t]; }
  const std::string &PathName(std::uint32_t p) const { return paths_[p]; }
  // Params belonging to template t, in interning order.
  const std::vector<std::uint32_t> &Row(std::uint32_t t) const { return rows_[t]; }

 private:
  std::vector<std::string> templates_;
  std::vector<std::string> paths_;
  std::unordered_map<std::string, std::uint32_t> template_ids_;
  std::unordered_map<std::string, std::uint32_t> path_ids_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> params_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> param_ids_;
  std::vector<std::vector<std::uint32_t>> rows_;
};

struct Candidate {
  std::uint32_t param;
  double f;
  double template_prob;
  double value_prob;
};

struct TrainingItem {
  std::vector<Candidate> candidates;
  double weight = 0;  // observation weight, used by the counting baseline
};

struct TrainingSet {
  ParamSpace params;
  std::vector<TrainingItem> items;
};

// Enumerates the positive-f assignments of every observation.
TrainingSet BuildTrainingSet(std::span<const Observation> observations,
                             const KnowledgeBase &kb, const ConceptGraph &concepts,
                             const PathPolicy &policy);

using Theta = std::vector<double>;  // indexed by param id

struct Posterior {
  // responsibilities[i][j] belongs to items[i].candidates[j].
  std::vector<std::vector<double>> responsibilities;
  std::vector<bool> kept;
  std::size_t dropped = 0;
};

// θ⁽⁰⁾: uniform over each template's supported predicates.
Theta InitTheta(const TrainingSet &x);

// Responsibility ∝ f(x_i, z)·θ_pt, normalized per observation.
// Observations with no positive score are dropped and counted.
Posterior EStep(const TrainingSet &x, const Theta &theta);

// θ_pt = Σ_i resp_i(p,t) / Σ_p' Σ_i resp_i(p',t). Rows with no mass are
// left at zero (absent).
Theta MStep(const TrainingSet &x, const Posterior &posterior);

// Σ_i log Σ_z f(x_i, z)·θ_pt over observations with positive support.
double LogLikelihood(const TrainingSet &x, const Theta &theta);

struct LearnOptions {
  int max_iters = 100;
  double epsilon = 1e-6;
};

struct LearnResult {
  Theta theta;
  int iterations = 0;
  bool converged = false;
  double final_log_likelihood = 0;
  std::size_t dropped_observations = 0;
  std::vector<double> log_likelihoods;  // after init and each iteration
};

LearnResult Learn(const TrainingSet &x, const LearnOptions &options = {});

// θ_pt ∝ Σ_i weight_i · P(t|q_i,e_i) · P(p|e_i,v_i), with P(p|e,v)
// proportional to P(v|e,p) over the paths connecting (e, v).
Theta CountingBaseline(const TrainingSet &x);

// Sparse P(p|t) table keyed by template and path strings.
class PredicateModel {
 public:
  using Row = std::vector<std::pair<std::string, double>>;

  static PredicateModel FromTheta(const ParamSpace &params, const Theta &theta);

  void Set(const std::string &template_key, const std::string &path, double p);
  // Entries sorted by probability descending, then path.
  const Row *Find(const std::string &template_key) const;
  double Probability(const std::string &template_key, const std::string &path) const;
  // Argmax path (ties to the lexicographically smaller symbol).
  std::string Best(const std::string &template_key) const;
  const std::map<std::string, Row> &rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }

  // TSV `template<TAB>p1|p2|...<TAB>probability`.
  void Save(std::ostream &out) const;
  static PredicateModel Load(std::istream &in);
  static PredicateModel LoadFile(const std::filesystem::path &path);

 private:
  void SortRow(Row &row);
  std::map<std::string, Row> rows_;
};

}  // namespace kbqa
