// Immutable RDF triple store with forward adjacency, a (subject, object)
// pair index, and bounded-length predicate-path (expanded predicate)
// traversal.

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace kbqa {

using NodeId = std::uint32_t;
using PredicateId = std::uint32_t;

struct Triple {
  NodeId subject;
  PredicateId predicate;
  NodeId object;

  auto operator<=>(const Triple &) const = default;
};

// A predicate sequence treated as one relation, e.g. marriage→person→name.
struct ExpandedPredicate {
  std::vector<PredicateId> steps;

  std::size_t length() const { return steps.size(); }
  auto operator<=>(const ExpandedPredicate &) const = default;
};

struct SpoPath {
  NodeId subject;
  ExpandedPredicate path;
  NodeId object;

  auto operator<=>(const SpoPath &) const = default;
};

// Controls which paths count as expanded predicates.
struct PathPolicy {
  int k_max = 3;
  // Paths of length >= 2 must end with `name_predicate`.
  bool name_restriction = true;
  std::string name_predicate = "name";
};

class KnowledgeBase {
 public:
  KnowledgeBase() = default;

  // Parses `subject<TAB>predicate<TAB>object` lines; '#' lines and blank
  // lines are skipped. Throws ParseError with the offending line number.
  static KnowledgeBase Load(std::istream &in);
  static KnowledgeBase LoadFile(const std::filesystem::path &path);
  static KnowledgeBase FromTriples(
      std::span<const std::array<std::string, 3>> triples);

  std::size_t triple_count() const { return triples_.size(); }
  std::size_t node_count() const { return node_names_.size(); }
  std::size_t predicate_count() const { return predicate_names_.size(); }
  // Nodes that appear as a subject.
  std::size_t entity_count() const { return entity_count_; }

  std::optional<NodeId> FindNode(std::string_view name) const;
  std::optional<PredicateId> FindPredicate(std::string_view name) const;
  const std::string &NodeName(NodeId id) const { return node_names_[id]; }
  const std::string &PredicateName(PredicateId id) const {
    return predicate_names_[id];
  }
  bool IsEntity(NodeId id) const {
    return id < out_offsets_.size() - 1 &&
           out_offsets_[id] != out_offsets_[id + 1];
  }

  // All triples sorted by (subject, predicate, object); ids are assigned
  // in lexicographic name order so this order is load-order independent.
  std::span<const Triple> triples() const { return triples_; }
  std::span<const Triple> Outgoing(NodeId subject) const;
  std::span<const Triple> Outgoing(NodeId subject, PredicateId p) const;
  // Predicates p with (s, p, o) in the store, ascending.
  std::span<const PredicateId> PredicatesBetween(NodeId s, NodeId o) const;

  // Uniform P(v | e, path) over the distinct nodes reached from e by
  // following `path`. Empty when nothing is reachable.
  std::map<NodeId, double> ValueDistribution(
      NodeId entity, const ExpandedPredicate &path) const;
  std::set<NodeId> Reach(NodeId entity, const ExpandedPredicate &path) const;

  // Every expanded predicate p+ with (e, p+, v) in the store, length
  // <= k_max, honoring the name restriction. Ordered shorter first, then
  // lexicographically by predicate symbols.
  std::vector<ExpandedPredicate> PredicatesBetween(
      NodeId entity, NodeId value, const PathPolicy &policy) const;

  // All values reachable from `entity` under `policy`, each with its
  // connecting paths in the same order as PredicatesBetween.
  std::map<NodeId, std::vector<ExpandedPredicate>> ReachableValues(
      NodeId entity, const PathPolicy &policy) const;

  std::string PathString(const ExpandedPredicate &path) const;
  // Parses "p1|p2|..."; nullopt if any symbol is unknown.
  std::optional<ExpandedPredicate> ParsePath(std::string_view text) const;
  // Orders paths shorter first, then by predicate symbols.
  bool PathLess(const ExpandedPredicate &a, const ExpandedPredicate &b) const;

 private:
  void Build(std::vector<std::array<std::string, 3>> raw);

  std::vector<std::string> node_names_;
  std::vector<std::string> predicate_names_;
  std::unordered_map<std::string, NodeId> node_ids_;
  std::unordered_map<std::string, PredicateId> predicate_ids_;
  std::vector<Triple> triples_;
  std::vector<std::size_t> out_offsets_{0};
  std::unordered_map<std::uint64_t, std::vector<PredicateId>> pair_index_;
  std::size_t entity_count_ = 0;
};

// One full pass over a triple source. Called once per expansion round.
using TripleScan = std::function<void(const std::function<void(const Triple &)> &)>;

// Scans the store's own triple array.
TripleScan ScanStore(const KnowledgeBase &kb);
// Re-reads a KB file on every pass, resolving names through `kb`.
TripleScan ScanFile(const std::filesystem::path &path, const KnowledgeBase &kb);

// Computes {(s, p+, o) : s in seeds, |p+| <= k} with k sequential scans
// joined against the frontier of partial paths. The store's adjacency is
// never consulted; `kb` only resolves the name-restriction symbol.
std::set<SpoPath> ExpandPredicates(const KnowledgeBase &kb,
                                   const TripleScan &scan,
                                   const std::set<NodeId> &seeds, int k,
                                   const PathPolicy &policy);
std::set<SpoPath> ExpandPredicates(const KnowledgeBase &kb,
                                   const std::set<NodeId> &seeds, int k,
                                   const PathPolicy &policy);

// Number of length-k paths whose (subject, object) is in `reference`.
std::size_t ValidK(const std::set<SpoPath> &paths,
                   const std::set<std::pair<NodeId, NodeId>> &reference, int k);

// `subject<TAB>p1|p2|...<TAB>object` lines, in set order.
void WriteExpansion(std::ostream &out, const KnowledgeBase &kb,
                    const std::set<SpoPath> &paths);
std::set<SpoPath> ReadExpansion(std::istream &in, const KnowledgeBase &kb);

}  // namespace kbqa
