// QA-corpus ingestion and the corpus-grounded distributions: P(q), P(a|q),
// joint entity & value extraction with category refinement, P(e,v|q,a),
// P(e|q), and construction of the (question, entity, value) observations.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kbqa/entity_index.hpp"
#include "kbqa/kb_store.hpp"
#include "kbqa/text.hpp"

namespace kbqa {

struct QaPair {
  Tokens question;
  Tokens answer;
  std::uint64_t frequency = 1;
};

// JSON lines: {"question": "...", "answer": "...", "count": n}.
std::vector<QaPair> LoadCorpus(std::istream &in);
std::vector<QaPair> LoadCorpusFile(const std::filesystem::path &path);

class CorpusStats {
 public:
  std::uint64_t total() const { return total_; }
  std::uint64_t QuestionCount(const std::string &question) const;
  std::uint64_t PairCount(const std::string &question,
                          const std::string &answer) const;
  // P(q) = Σ_y n(q,y) / Σ_{x,y} n(x,y).
  double QuestionProb(const std::string &question) const;
  // P(a|q) = n(q,a) / Σ_y n(q,y).
  double AnswerProb(const std::string &question, const std::string &answer) const;
  const std::map<std::string, std::uint64_t> &questions() const {
    return question_counts_;
  }
  const std::map<std::pair<std::string, std::string>, std::uint64_t> &pairs() const {
    return pair_counts_;
  }

 private:
  friend CorpusStats ComputeCorpusStats(std::span<const QaPair>);
  std::map<std::string, std::uint64_t> question_counts_;
  std::map<std::pair<std::string, std::string>, std::uint64_t> pair_counts_;
  std::uint64_t total_ = 0;
};

// Throws Error on an empty corpus.
CorpusStats ComputeCorpusStats(std::span<const QaPair> corpus);

enum class Category { kDate, kNumber, kPerson, kLocation, kDescription, kOther };

std::string_view CategoryName(Category c);
std::optional<Category> ParseCategory(std::string_view name);

// Rule-based expected answer type from wh-words.
Category CategorizeQuestion(std::span<const std::string> question);

// Manually labeled predicate-path categories: TSV `path<TAB>category`
// where path is `p1|p2|...`. Unlabeled paths are Category::kOther.
class PredicateCategories {
 public:
  static PredicateCategories Load(std::istream &in);
  static PredicateCategories LoadFile(const std::filesystem::path &path);
  void Set(std::string path, Category c) { labels_[std::move(path)] = c; }
  Category Of(const std::string &path) const;

 private:
  std::map<std::string, Category> labels_;
};

// Values reachable from each entity, either precomputed by predicate
// expansion or computed on demand from the store.
class PathCatalog {
 public:
  PathCatalog(const KnowledgeBase &kb, PathPolicy policy);
  PathCatalog(const KnowledgeBase &kb, PathPolicy policy,
              const std::set<SpoPath> &expansion);

  std::map<NodeId, std::vector<ExpandedPredicate>> Reachable(NodeId entity) const;
  const PathPolicy &policy() const { return policy_; }

 private:
  const KnowledgeBase &kb_;
  PathPolicy policy_;
  std::set<NodeId> precomputed_;
  std::map<NodeId, std::map<NodeId, std::vector<ExpandedPredicate>>> paths_;
};

struct EntityMention {
  NodeId entity;
  TokenSpan span;

  auto operator<=>(const EntityMention &) const = default;
};

struct ExtractedPair {
  NodeId entity;
  NodeId value;
  TokenSpan mention;
  TokenSpan value_span;
  std::vector<ExpandedPredicate> paths;
};

struct ExtractionOptions {
  std::size_t max_mention_tokens = 6;
};

class EntityValueExtractor {
 public:
  EntityValueExtractor(const KnowledgeBase &kb, const StaticHashArray &index,
                       const NodeLexicon &lexicon, const PathCatalog &catalog,
                       const PredicateCategories &categories,
                       ExtractionOptions options = {});

  // Index mentions whose candidates are KB entities, one entry per
  // (candidate, span), in span order then id order.
  std::vector<EntityMention> EntityMentions(std::span<const std::string> question) const;

  // EV(q, a): pairs (e, v) with e mentioned in the question and v a token
  // span of the answer reachable from e. With `refine`, keeps a pair only
  // if some connecting path's category equals the question's category.
  // Sorted by (entity, value).
  std::vector<ExtractedPair> Extract(const QaPair &pair, bool refine) const;

  const KnowledgeBase &kb() const { return kb_; }
  const StaticHashArray &index() const { return index_; }

 private:
  const KnowledgeBase &kb_;
  const StaticHashArray &index_;
  const NodeLexicon &lexicon_;
  const PathCatalog &catalog_;
  const PredicateCategories &categories_;
  ExtractionOptions options_;
};

using EntityValueSet = std::set<std::pair<NodeId, NodeId>>;

EntityValueSet ToPairSet(std::span<const ExtractedPair> pairs);

// Uniform P(e,v|q,a) over the extracted pairs.
std::map<std::pair<NodeId, NodeId>, double> EntityValueDistribution(
    const EntityValueSet &pairs);

// Uniform P(e|q) over the distinct entities of EV; when EV is empty,
// uniform over the question's KB-verified index mentions.
std::map<NodeId, double> EntityDistribution(
    const EntityValueSet &pairs, std::span<const EntityMention> fallback);

struct Observation {
  Tokens question;
  TokenSpan mention;
  NodeId entity;
  NodeId value;
  // P(e,v|q,a) · P(a|q) · P(q).
  double weight;
  double question_prob;
  double entity_prob;
  std::size_t pair_index;
};

// One observation per (corpus pair, extracted (e, v)), in corpus order.
std::vector<Observation> BuildObservations(std::span<const QaPair> corpus,
                                           const EntityValueExtractor &extractor,
                                           const CorpusStats &stats, bool refine);

// Debug dump: `question<TAB>entity<TAB>value<TAB>weight`.
void WriteObservations(std::ostream &out, const KnowledgeBase &kb,
                       std::span<const Observation> observations);

}  // namespace kbqa
