#include "kbqa/kb_store.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include "kbqa/errors.hpp"
#include "kbqa/text.hpp"

namespace kbqa {

namespace {

std::uint64_t PairKey(NodeId s, NodeId o) {
  return (static_cast<std::uint64_t>(s) << 32) | o;
}

// Parses one KB line. Returns false for comments and blank lines.
bool ParseTripleLine(std::string_view line, std::size_t line_no,
                     std::array<std::string, 3> *out) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (Trim(line).empty() || line.front() == '#') return false;
  auto fields = SplitTabs(line);
  if (fields.size() != 3) {
    throw ParseError("expected 3 tab-separated fields, got " +
                         std::to_string(fields.size()),
                     line_no);
  }
  for (const auto &f : fields) {
    if (f.empty()) throw ParseError("empty field", line_no);
  }
  (*out)[0] = std::move(fields[0]);
  (*out)[1] = std::move(fields[1]);
  (*out)[2] = std::move(fields[2]);
  return true;
}

}  // namespace

KnowledgeBase KnowledgeBase::Load(std::istream &in) {
  std::vector<std::array<std::string, 3>> raw;
  std::string line;
  std::size_t line_no = 0;
  std::array<std::string, 3> fields;
  while (std::getline(in, line)) {
    ++line_no;
    if (ParseTripleLine(line, line_no, &fields)) raw.push_back(fields);
  }
  KnowledgeBase kb;
  kb.Build(std::move(raw));
  return kb;
}

KnowledgeBase KnowledgeBase::LoadFile(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open knowledge base " + path.string());
  return Load(in);
}

KnowledgeBase KnowledgeBase::FromTriples(
    std::span<const std::array<std::string, 3>> triples) {
  KnowledgeBase kb;
  kb.Build({triples.begin(), triples.end()});
  return kb;
}

void KnowledgeBase::Build(std::vector<std::array<std::string, 3>> raw) {
  std::sort(raw.begin(), raw.end());
  raw.erase(std::unique(raw.begin(), raw.end()), raw.end());

  std::vector<std::string> nodes;
  std::vector<std::string> preds;
  for (const auto &t : raw) {
    nodes.push_back(t[0]);
    nodes.push_back(t[2]);
    preds.push_back(t[1]);
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  std::sort(preds.begin(), preds.end());
  preds.erase(std::unique(preds.begin(), preds.end()), preds.end());

  node_names_ = std::move(nodes);
  predicate_names_ = std::move(preds);
  for (NodeId i = 0; i < node_names_.size(); ++i) node_ids_[node_names_[i]] = i;
  for (PredicateId i = 0; i < predicate_names_.size(); ++i) {
    predicate_ids_[predicate_names_[i]] = i;
  }

  triples_.reserve(raw.size());
  for (const auto &t : raw) {
    triples_.push_back({node_ids_[t[0]], predicate_ids_[t[1]], node_ids_[t[2]]});
  }
  std::sort(triples_.begin(), triples_.end());

  out_offsets_.assign(node_names_.size() + 1, 0);
  for (const auto &t : triples_) ++out_offsets_[t.subject + 1];
  for (std::size_t i = 1; i < out_offsets_.size(); ++i) {
    out_offsets_[i] += out_offsets_[i - 1];
  }
  entity_count_ = 0;
  for (NodeId n = 0; n < node_names_.size(); ++n) {
    if (IsEntity(n)) ++entity_count_;
  }
  for (const auto &t : triples_) {
    pair_index_[PairKey(t.subject, t.object)].push_back(t.predicate);
  }
}

std::optional<NodeId> KnowledgeBase::FindNode(std::string_view name) const {
  auto it = node_ids_.find(std::string(name));
  if (it == node_ids_.end()) return std::nullopt;
  return it->second;
}

std::optional<PredicateId> KnowledgeBase::FindPredicate(
    std::string_view name) const {
  auto it = predicate_ids_.find(std::string(name));
  if (it == predicate_ids_.end()) return std::nullopt;
  return it->second;
}

std::span<const Triple> KnowledgeBase::Outgoing(NodeId subject) const {
  if (subject + 1 >= out_offsets_.size()) return {};
  return std::span<const Triple>(triples_).subspan(
      out_offsets_[subject], out_offsets_[subject + 1] - out_offsets_[subject]);
}

std::span<const Triple> KnowledgeBase::Outgoing(NodeId subject,
                                                PredicateId p) const {
  auto all = Outgoing(subject);
  auto lo = std::lower_bound(
      all.begin(), all.end(), p,
      [](const Triple &t, PredicateId v) { return t.predicate < v; });
  auto hi = std::upper_bound(
      lo, all.end(), p,
      [](PredicateId v, const Triple &t) { return v < t.predicate; });
  return {lo, hi};
}

std::span<const PredicateId> KnowledgeBase::PredicatesBetween(NodeId s,
                                                              NodeId o) const {
  auto it = pair_index_.find(PairKey(s, o));
  if (it == pair_index_.end()) return {};
  return it->second;
}

std::set<NodeId> KnowledgeBase::Reach(NodeId entity,
                                      const ExpandedPredicate &path) const {
  std::set<NodeId> frontier;
  if (entity >= node_names_.size() || path.steps.empty()) return frontier;
  frontier.insert(entity);
  for (PredicateId p : path.steps) {
    std::set<NodeId> next;
    for (NodeId n : frontier) {
      for (const auto &t : Outgoing(n, p)) next.insert(t.object);
    }
    frontier = std::move(next);
    if (frontier.empty()) break;
  }
  return frontier;
}

std::map<NodeId, double> KnowledgeBase::ValueDistribution(
    NodeId entity, const ExpandedPredicate &path) const {
  std::map<NodeId, double> dist;
  auto values = Reach(entity, path);
  if (values.empty()) return dist;
  const double p = 1.0 / static_cast<double>(values.size());
  for (NodeId v : values) dist.emplace(v, p);
  return dist;
}

bool KnowledgeBase::PathLess(const ExpandedPredicate &a,
                             const ExpandedPredicate &b) const {
  if (a.length() != b.length()) return a.length() < b.length();
  for (std::size_t i = 0; i < a.length(); ++i) {
    const auto &x = predicate_names_[a.steps[i]];
    const auto &y = predicate_names_[b.steps[i]];
    if (x != y) return x < y;
  }
  return false;
}

namespace {

class PathWalker {
 public:
  PathWalker(const KnowledgeBase &kb, const PathPolicy &policy)
      : kb_(kb), policy_(policy), name_(kb.FindPredicate(policy.name_predicate)) {}

  // Calls visit(object, path) for every accepted path from `start`.
  template <typename Visit>
  void Walk(NodeId start, Visit &&visit) {
    path_.steps.clear();
    Recurse(start, visit);
  }

 private:
  bool Accepts(const ExpandedPredicate &path) const {
    if (path.length() == 1 || !policy_.name_restriction) return true;
    return name_ && path.steps.back() == *name_;
  }

  template <typename Visit>
  void Recurse(NodeId node, Visit &visit) {
    if (static_cast<int>(path_.length()) >= policy_.k_max) return;
    for (const auto &t : kb_.Outgoing(node)) {
      path_.steps.push_back(t.predicate);
      if (Accepts(path_)) visit(t.object, path_);
      Recurse(t.object, visit);
      path_.steps.pop_back();
    }
  }

  const KnowledgeBase &kb_;
  const PathPolicy &policy_;
  std::optional<PredicateId> name_;
  ExpandedPredicate path_;
};

}  // namespace

std::vector<ExpandedPredicate> KnowledgeBase::PredicatesBetween(
    NodeId entity, NodeId value, const PathPolicy &policy) const {
  std::set<ExpandedPredicate> found;
  if (entity < node_names_.size() && value < node_names_.size()) {
    PathWalker walker(*this, policy);
    walker.Walk(entity, [&](NodeId o, const ExpandedPredicate &p) {
      if (o == value) found.insert(p);
    });
  }
  std::vector<ExpandedPredicate> out(found.begin(), found.end());
  std::sort(out.begin(), out.end(),
            [this](const auto &a, const auto &b) { return PathLess(a, b); });
  return out;
}

std::map<NodeId, std::vector<ExpandedPredicate>> KnowledgeBase::ReachableValues(
    NodeId entity, const PathPolicy &policy) const {
  std::map<NodeId, std::set<ExpandedPredicate>> found;
  if (entity < node_names_.size()) {
    PathWalker walker(*this, policy);
    walker.Walk(entity, [&](NodeId o, const ExpandedPredicate &p) {
      found[o].insert(p);
    });
  }
  std::map<NodeId, std::vector<ExpandedPredicate>> out;
  for (auto &[node, paths] : found) {
    auto &v = out[node];
    v.assign(paths.begin(), paths.end());
    std::sort(v.begin(), v.end(),
              [this](const auto &a, const auto &b) { return PathLess(a, b); });
  }
  return out;
}

std::string KnowledgeBase::PathString(const ExpandedPredicate &path) const {
  std::string out;
  for (std::size_t i = 0; i < path.length(); ++i) {
    if (i) out.push_back('|');
    out += predicate_names_[path.steps[i]];
  }
  return out;
}

std::optional<ExpandedPredicate> KnowledgeBase::ParsePath(
    std::string_view text) const {
  ExpandedPredicate path;
  std::size_t i = 0;
  while (i <= text.size()) {
    std::size_t j = text.find('|', i);
    if (j == std::string_view::npos) j = text.size();
    auto p = FindPredicate(text.substr(i, j - i));
    if (!p) return std::nullopt;
    path.steps.push_back(*p);
    i = j + 1;
  }
  if (path.steps.empty()) return std::nullopt;
  return path;
}

TripleScan ScanStore(const KnowledgeBase &kb) {
  return [&kb](const std::function<void(const Triple &)> &emit) {
    for (const auto &t : kb.triples()) emit(t);
  };
}

TripleScan ScanFile(const std::filesystem::path &path, const KnowledgeBase &kb) {
  return [path, &kb](const std::function<void(const Triple &)> &emit) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open knowledge base " + path.string());
    std::string line;
    std::size_t line_no = 0;
    std::array<std::string, 3> f;
    while (std::getline(in, line)) {
      ++line_no;
      if (!ParseTripleLine(line, line_no, &f)) continue;
      auto s = kb.FindNode(f[0]);
      auto p = kb.FindPredicate(f[1]);
      auto o = kb.FindNode(f[2]);
      if (!s || !p || !o) {
        throw ParseError("triple not present in the loaded store", line_no);
      }
      emit(Triple{*s, *p, *o});
    }
  };
}

std::set<SpoPath> ExpandPredicates(const KnowledgeBase &kb,
                                   const TripleScan &scan,
                                   const std::set<NodeId> &seeds, int k,
                                   const PathPolicy &policy) {
  std::set<SpoPath> result;
  if (k <= 0 || seeds.empty()) return result;
  const auto name_id = kb.FindPredicate(policy.name_predicate);
  auto accepts = [&](const ExpandedPredicate &p) {
    if (p.length() == 1 || !policy.name_restriction) return true;
    return name_id && p.steps.back() == *name_id;
  };

  // Frontier entries reuse SpoPath: (seed, partial path, current node).
  std::set<SpoPath> frontier;
  for (NodeId s : seeds) frontier.insert(SpoPath{s, {}, s});

  for (int round = 1; round <= k && !frontier.empty(); ++round) {
    std::unordered_map<NodeId, std::vector<const SpoPath *>> by_node;
    for (const auto &f : frontier) by_node[f.object].push_back(&f);

    std::set<SpoPath> next;
    scan([&](const Triple &t) {
      auto it = by_node.find(t.subject);
      if (it == by_node.end()) return;
      for (const SpoPath *f : it->second) {
        SpoPath extended{f->subject, f->path, t.object};
        extended.path.steps.push_back(t.predicate);
        next.insert(std::move(extended));
      }
    });
    frontier = std::move(next);
    for (const auto &f : frontier) {
      if (accepts(f.path)) result.insert(f);
    }
  }
  return result;
}

std::set<SpoPath> ExpandPredicates(const KnowledgeBase &kb,
                                   const std::set<NodeId> &seeds, int k,
                                   const PathPolicy &policy) {
  return ExpandPredicates(kb, ScanStore(kb), seeds, k, policy);
}

std::size_t ValidK(const std::set<SpoPath> &paths,
                   const std::set<std::pair<NodeId, NodeId>> &reference,
                   int k) {
  if (k <= 0) return 0;
  std::size_t n = 0;
  for (const auto &p : paths) {
    if (static_cast<int>(p.path.length()) == k &&
        reference.count({p.subject, p.object})) {
      ++n;
    }
  }
  return n;
}

void WriteExpansion(std::ostream &out, const KnowledgeBase &kb,
                    const std::set<SpoPath> &paths) {
  for (const auto &p : paths) {
    out << kb.NodeName(p.subject) << '\t' << kb.PathString(p.path) << '\t'
        << kb.NodeName(p.object) << '\n';
  }
}

std::set<SpoPath> ReadExpansion(std::istream &in, const KnowledgeBase &kb) {
  std::set<SpoPath> paths;
  std::string line;
  std::size_t line_no = 0;
  std::array<std::string, 3> f;
  while (std::getline(in, line)) {
    ++line_no;
    if (!ParseTripleLine(line, line_no, &f)) continue;
    auto s = kb.FindNode(f[0]);
    auto p = kb.ParsePath(f[1]);
    auto o = kb.FindNode(f[2]);
    if (!s || !p || !o) throw ParseError("path refers to unknown symbols", line_no);
    paths.insert(SpoPath{*s, std::move(*p), *o});
  }
  return paths;
}

}  // namespace kbqa
