#include "kbqa/concept_graph.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "kbqa/errors.hpp"

namespace kbqa {

namespace {

ConceptDistribution Normalize(const std::map<std::string, double> &weights) {
  ConceptDistribution out;
  double total = 0;
  for (const auto &[c, w] : weights) total += w;
  if (total <= 0) return out;
  for (const auto &[c, w] : weights) {
    if (w > 0) out[c] = w / total;
  }
  return out;
}

double ParseWeight(const std::string &text, std::size_t line_no) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ParseError("bad number '" + text + "'", line_no);
  }
  return v;
}

// Calls fn(fields, line_no) for each 3-field TSV record.
template <typename Fn>
void ReadTsv3(std::istream &in, Fn &&fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty() || line.front() == '#') continue;
    auto f = SplitTabs(line);
    if (f.size() != 3) throw ParseError("expected 3 tab-separated fields", line_no);
    fn(f, line_no);
  }
}

}  // namespace

ConceptDistribution Conceptualize(const ConceptDistribution &prior,
                                  std::span<const std::string> question,
                                  TokenSpan mention,
                                  const ContextWeights &weights) {
  std::map<std::string, double> scores;
  for (const auto &[c, p] : prior) {
    double boost = 1.0;
    for (std::size_t i = 0; i < question.size(); ++i) {
      if (i >= mention.begin && i < mention.end) continue;
      auto it = weights.find({c, question[i]});
      if (it != weights.end()) boost += it->second;
    }
    scores[c] = p * boost;
  }
  return Normalize(scores);
}

std::vector<std::pair<Template, double>> DeriveTemplates(
    std::span<const std::string> question, TokenSpan mention,
    const ConceptDistribution &concepts) {
  if (mention.begin >= mention.end || mention.end > question.size()) {
    throw Error("mention span out of range");
  }
  std::vector<std::pair<Template, double>> out;
  for (const auto &[c, p] : concepts) {
    if (p <= 0) continue;
    Template t{ReplaceSpan(question, mention, "$" + c), c};
    out.emplace_back(std::move(t), p);
  }
  return out;
}

ConceptGraph ConceptGraph::Load(std::istream &isa) {
  ConceptGraph g;
  ReadTsv3(isa, [&](const std::vector<std::string> &f, std::size_t line_no) {
    double w = ParseWeight(f[2], line_no);
    if (w <= 0) throw ParseError("isA weight must be positive", line_no);
    g.AddEdge(f[0], f[1], w);
  });
  return g;
}

ConceptGraph ConceptGraph::LoadFile(const std::filesystem::path &isa) {
  std::ifstream in(isa);
  if (!in) throw Error("cannot open isA file " + isa.string());
  return Load(in);
}

void ConceptGraph::LoadContextWeights(std::istream &in) {
  ReadTsv3(in, [&](const std::vector<std::string> &f, std::size_t line_no) {
    SetContextWeight(f[0], f[1], ParseWeight(f[2], line_no));
  });
}

void ConceptGraph::LoadOverrides(std::istream &in) {
  ReadTsv3(in, [&](const std::vector<std::string> &f, std::size_t line_no) {
    double p = ParseWeight(f[2], line_no);
    if (p < 0) throw ParseError("negative probability", line_no);
    SetOverride(f[0], f[1], p);
  });
}

void ConceptGraph::AddEdge(const std::string &entity,
                           const std::string &concept_name, double weight) {
  edges_[entity][concept_name] += weight;
}

void ConceptGraph::SetContextWeight(const std::string &concept_name,
                                    const std::string &token, double weight) {
  context_weights_[{concept_name, token}] = weight;
}

void ConceptGraph::SetOverride(const std::string &question,
                               const std::string &concept_name,
                               double probability) {
  overrides_[NormalizePhrase(question)][concept_name] = probability;
}

ConceptDistribution ConceptGraph::ConceptPrior(const std::string &entity) const {
  auto it = edges_.find(entity);
  if (it == edges_.end()) return {};
  return Normalize(it->second);
}

ConceptDistribution ConceptGraph::ContextConcepts(
    std::span<const std::string> question, TokenSpan mention,
    const std::string &entity) const {
  auto prior = ConceptPrior(entity);
  if (prior.empty()) return {{kUniversalConcept, 1.0}};
  auto ov = overrides_.find(JoinTokens(question));
  if (ov != overrides_.end()) {
    // Only concepts the entity actually has are eligible.
    std::map<std::string, double> kept;
    for (const auto &[c, p] : ov->second) {
      if (prior.count(c)) kept[c] = p;
    }
    auto dist = Normalize(kept);
    if (!dist.empty()) return dist;
  }
  return Conceptualize(prior, question, mention, context_weights_);
}

std::vector<std::pair<Template, double>> ConceptGraph::Templates(
    std::span<const std::string> question, TokenSpan mention,
    const std::string &entity) const {
  return DeriveTemplates(question, mention,
                         ContextConcepts(question, mention, entity));
}

}  // namespace kbqa
