#include "kbqa/qa_extraction.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "kbqa/errors.hpp"

namespace kbqa {

std::vector<QaPair> LoadCorpus(std::istream &in) {
  std::vector<QaPair> corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error &e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (!record.is_object() || !record.contains("question") ||
        !record.contains("answer") || !record["question"].is_string() ||
        !record["answer"].is_string()) {
      throw ParseError("record needs string fields question and answer", line_no);
    }
    QaPair pair;
    pair.question = Tokenize(record["question"].get<std::string>());
    pair.answer = Tokenize(record["answer"].get<std::string>());
    if (record.contains("count")) {
      const auto &c = record["count"];
      if (!c.is_number_integer() || c.get<std::int64_t>() < 1) {
        throw ParseError("count must be a positive integer", line_no);
      }
      pair.frequency = c.get<std::uint64_t>();
    }
    corpus.push_back(std::move(pair));
  }
  return corpus;
}

std::vector<QaPair> LoadCorpusFile(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus " + path.string());
  return LoadCorpus(in);
}

CorpusStats ComputeCorpusStats(std::span<const QaPair> corpus) {
  if (corpus.empty()) throw Error("empty corpus");
  CorpusStats stats;
  for (const auto &p : corpus) {
    std::string q = JoinTokens(p.question);
    std::string a = JoinTokens(p.answer);
    stats.question_counts_[q] += p.frequency;
    stats.pair_counts_[{std::move(q), std::move(a)}] += p.frequency;
    stats.total_ += p.frequency;
  }
  return stats;
}

std::uint64_t CorpusStats::QuestionCount(const std::string &question) const {
  auto it = question_counts_.find(question);
  return it == question_counts_.end() ? 0 : it->second;
}

std::uint64_t CorpusStats::PairCount(const std::string &question,
                                     const std::string &answer) const {
  auto it = pair_counts_.find({question, answer});
  return it == pair_counts_.end() ? 0 : it->second;
}

double CorpusStats::QuestionProb(const std::string &question) const {
  if (total_ == 0) return 0;
  return static_cast<double>(QuestionCount(question)) / static_cast<double>(total_);
}

double CorpusStats::AnswerProb(const std::string &question,
                               const std::string &answer) const {
  const auto n = QuestionCount(question);
  if (n == 0) return 0;
  return static_cast<double>(PairCount(question, answer)) / static_cast<double>(n);
}

std::string_view CategoryName(Category c) {
  switch (c) {
    case Category::kDate: return "date";
    case Category::kNumber: return "number";
    case Category::kPerson: return "person";
    case Category::kLocation: return "location";
    case Category::kDescription: return "description";
    case Category::kOther: return "other";
  }
  return "other";
}

std::optional<Category> ParseCategory(std::string_view name) {
  if (name == "date") return Category::kDate;
  if (name == "number") return Category::kNumber;
  if (name == "person") return Category::kPerson;
  if (name == "location") return Category::kLocation;
  if (name == "description" || name == "desc") return Category::kDescription;
  if (name == "other") return Category::kOther;
  return std::nullopt;
}

Category CategorizeQuestion(std::span<const std::string> q) {
  for (std::size_t i = 0; i < q.size(); ++i) {
    const std::string &t = q[i];
    const std::string next = i + 1 < q.size() ? q[i + 1] : std::string();
    if (t == "when") return Category::kDate;
    if ((t == "what" || t == "which") && next == "year") return Category::kDate;
    if (t == "how" && (next == "many" || next == "much" || next == "long")) {
      return Category::kNumber;
    }
    if (t == "who" || t == "whom" || t == "whose") return Category::kPerson;
    if (t == "where") return Category::kLocation;
  }
  return Category::kDescription;
}

PredicateCategories PredicateCategories::Load(std::istream &in) {
  PredicateCategories out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty() || line.front() == '#') continue;
    auto f = SplitTabs(line);
    if (f.size() != 2) throw ParseError("expected predicate<TAB>category", line_no);
    auto c = ParseCategory(f[1]);
    if (!c) throw ParseError("unknown category '" + f[1] + "'", line_no);
    out.Set(f[0], *c);
  }
  return out;
}

PredicateCategories PredicateCategories::LoadFile(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open predicate categories " + path.string());
  return Load(in);
}

Category PredicateCategories::Of(const std::string &path) const {
  auto it = labels_.find(path);
  return it == labels_.end() ? Category::kOther : it->second;
}

PathCatalog::PathCatalog(const KnowledgeBase &kb, PathPolicy policy)
    : kb_(kb), policy_(std::move(policy)) {}

PathCatalog::PathCatalog(const KnowledgeBase &kb, PathPolicy policy,
                         const std::set<SpoPath> &expansion)
    : kb_(kb), policy_(std::move(policy)) {
  for (const auto &p : expansion) {
    if (static_cast<int>(p.path.length()) > policy_.k_max) continue;
    precomputed_.insert(p.subject);
    paths_[p.subject][p.object].push_back(p.path);
  }
  for (auto &[s, by_value] : paths_) {
    for (auto &[v, paths] : by_value) {
      std::sort(paths.begin(), paths.end(),
                [&](const auto &a, const auto &b) { return kb_.PathLess(a, b); });
    }
  }
}

std::map<NodeId, std::vector<ExpandedPredicate>> PathCatalog::Reachable(
    NodeId entity) const {
  if (precomputed_.count(entity)) return paths_.at(entity);
  return kb_.ReachableValues(entity, policy_);
}

EntityValueExtractor::EntityValueExtractor(const KnowledgeBase &kb,
                                           const StaticHashArray &index,
                                           const NodeLexicon &lexicon,
                                           const PathCatalog &catalog,
                                           const PredicateCategories &categories,
                                           ExtractionOptions options)
    : kb_(kb),
      index_(index),
      lexicon_(lexicon),
      catalog_(catalog),
      categories_(categories),
      options_(options) {}

std::vector<EntityMention> EntityValueExtractor::EntityMentions(
    std::span<const std::string> question) const {
  std::vector<EntityMention> out;
  for (const auto &m : FindMentions(index_, question, options_.max_mention_tokens)) {
    for (std::uint64_t c : m.candidates) {
      if (c < kb_.node_count() && kb_.IsEntity(static_cast<NodeId>(c))) {
        out.push_back({static_cast<NodeId>(c), m.span});
      }
    }
  }
  return out;
}

std::vector<ExtractedPair> EntityValueExtractor::Extract(const QaPair &pair,
                                                         bool refine) const {
  std::map<std::pair<NodeId, NodeId>, ExtractedPair> found;
  const auto &answer = pair.answer;
  const std::size_t max_len = lexicon_.max_tokens();
  for (const auto &mention : EntityMentions(pair.question)) {
    const auto reachable = catalog_.Reachable(mention.entity);
    if (reachable.empty()) continue;
    for (std::size_t i = 0; i < answer.size(); ++i) {
      for (std::size_t len = 1; len <= max_len && i + len <= answer.size(); ++len) {
        std::span<const std::string> span(answer.data() + i, len);
        for (NodeId v : lexicon_.Find(JoinTokens(span))) {
          auto it = reachable.find(v);
          if (it == reachable.end()) continue;
          found.try_emplace({mention.entity, v},
                            ExtractedPair{mention.entity, v, mention.span,
                                          TokenSpan{i, i + len}, it->second});
        }
      }
    }
  }

  std::vector<ExtractedPair> out;
  const Category question_category = CategorizeQuestion(pair.question);
  for (auto &[key, ev] : found) {
    if (refine) {
      bool match = std::any_of(ev.paths.begin(), ev.paths.end(), [&](const auto &p) {
        return categories_.Of(kb_.PathString(p)) == question_category;
      });
      if (!match) continue;
    }
    out.push_back(std::move(ev));
  }
  return out;
}

EntityValueSet ToPairSet(std::span<const ExtractedPair> pairs) {
  EntityValueSet out;
  for (const auto &p : pairs) out.insert({p.entity, p.value});
  return out;
}

std::map<std::pair<NodeId, NodeId>, double> EntityValueDistribution(
    const EntityValueSet &pairs) {
  std::map<std::pair<NodeId, NodeId>, double> out;
  if (pairs.empty()) return out;
  const double p = 1.0 / static_cast<double>(pairs.size());
  for (const auto &ev : pairs) out[ev] = p;
  return out;
}

std::map<NodeId, double> EntityDistribution(const EntityValueSet &pairs,
                                            std::span<const EntityMention> fallback) {
  std::set<NodeId> entities;
  for (const auto &[e, v] : pairs) entities.insert(e);
  if (entities.empty()) {
    for (const auto &m : fallback) entities.insert(m.entity);
  }
  std::map<NodeId, double> out;
  if (entities.empty()) return out;
  const double p = 1.0 / static_cast<double>(entities.size());
  for (NodeId e : entities) out[e] = p;
  return out;
}

std::vector<Observation> BuildObservations(std::span<const QaPair> corpus,
                                           const EntityValueExtractor &extractor,
                                           const CorpusStats &stats, bool refine) {
  std::vector<Observation> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const QaPair &pair = corpus[i];
    auto extracted = extractor.Extract(pair, refine);
    if (extracted.empty()) continue;
    const auto ev_set = ToPairSet(extracted);
    const auto ev_dist = EntityValueDistribution(ev_set);
    const auto mentions = extractor.EntityMentions(pair.question);
    const auto entity_dist = EntityDistribution(ev_set, mentions);
    const std::string q = JoinTokens(pair.question);
    const std::string a = JoinTokens(pair.answer);
    const double pq = stats.QuestionProb(q);
    const double paq = stats.AnswerProb(q, a);
    for (const auto &ev : extracted) {
      Observation obs;
      obs.question = pair.question;
      obs.mention = ev.mention;
      obs.entity = ev.entity;
      obs.value = ev.value;
      obs.weight = ev_dist.at({ev.entity, ev.value}) * paq * pq;
      obs.question_prob = pq;
      obs.entity_prob = entity_dist.at(ev.entity);
      obs.pair_index = i;
      out.push_back(std::move(obs));
    }
  }
  return out;
}

void WriteObservations(std::ostream &out, const KnowledgeBase &kb,
                       std::span<const Observation> observations) {
  const auto precision = out.precision(17);
  for (const auto &o : observations) {
    out << JoinTokens(o.question) << '\t' << kb.NodeName(o.entity) << '\t'
        << kb.NodeName(o.value) << '\t' << o.weight << '\n';
  }
  out.precision(precision);
}

}  // namespace kbqa
