#include "kbqa/answer_engine.hpp"

#include <algorithm>
#include <set>

namespace kbqa {

std::vector<std::pair<NodeId, TokenSpan>> QuestionEntities(
    std::span<const std::string> question, const Resources &res) {
  std::vector<std::pair<NodeId, TokenSpan>> out;
  std::set<NodeId> seen;
  for (const auto &m : FindMentions(res.index, question, res.max_mention_tokens)) {
    for (std::uint64_t c : m.candidates) {
      if (c >= res.kb.node_count()) continue;
      const auto e = static_cast<NodeId>(c);
      if (!res.kb.IsEntity(e) || !seen.insert(e).second) continue;
      out.emplace_back(e, m.span);
    }
  }
  return out;
}

AnswerDistribution ComputeAnswerDistribution(std::span<const std::string> question,
                                             const Resources &res) {
  AnswerDistribution dist;
  const auto entities = QuestionEntities(question, res);
  if (entities.empty()) {
    dist.reason = kReasonNoEntity;
    return dist;
  }
  const double p_entity = 1.0 / static_cast<double>(entities.size());
  bool any_template = false;
  for (const auto &[e, span] : entities) {
    for (const auto &[t, p_template] :
         res.concepts.Templates(question, span, res.kb.NodeName(e))) {
      const std::string key = t.Key();
      const auto *row = res.model.Find(key);
      if (!row) continue;
      any_template = true;
      for (const auto &[path_text, theta] : *row) {
        ++dist.enumerations;
        if (theta <= 0) continue;
        auto path = res.kb.ParsePath(path_text);
        if (!path) continue;
        const double upstream = p_entity * p_template * theta;
        for (const auto &[v, p_value] : res.kb.ValueDistribution(e, *path)) {
          const double mass = upstream * p_value;
          dist.raw_mass[v] += mass;
          auto &trace = dist.traces[v];
          if (mass > trace.mass) trace = AnswerTrace{e, key, path_text, mass};
        }
      }
    }
  }
  if (!any_template) {
    dist.reason = kReasonNoTemplate;
    return dist;
  }
  double total = 0;
  for (const auto &[v, m] : dist.raw_mass) total += m;
  if (!(total > 0)) {
    dist.raw_mass.clear();
    dist.traces.clear();
    dist.reason = kReasonNoValue;
    return dist;
  }
  for (const auto &[v, m] : dist.raw_mass) dist.probabilities[v] = m / total;
  return dist;
}

std::optional<Answer> SelectAnswer(const AnswerDistribution &dist,
                                   const KnowledgeBase &kb) {
  std::optional<Answer> best;
  for (const auto &[v, p] : dist.probabilities) {
    if (!best || p > best->probability ||
        (p == best->probability && kb.NodeName(v) < kb.NodeName(best->value))) {
      best = Answer{v, p, dist.traces.at(v)};
    }
  }
  return best;
}

AnswerResult AnswerQuestion(std::span<const std::string> question,
                            const Resources &res) {
  auto dist = ComputeAnswerDistribution(question, res);
  AnswerResult result;
  result.answer = SelectAnswer(dist, res.kb);
  result.reason = dist.reason;
  return result;
}

SequenceResult AnswerSequence(std::span<const Tokens> sequence,
                              const Resources &res) {
  SequenceResult out;
  Tokens previous_value;
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    Tokens q = i == 0 ? sequence[i]
                      : Substitute(sequence[i], kEntityVariable, previous_value);
    out.questions.push_back(q);
    auto r = AnswerQuestion(q, res);
    if (!r.answer) {
      out.failed_index = i;
      out.reason = r.reason;
      return out;
    }
    previous_value = Tokenize(res.lexicon.Surface(r.answer->value));
    out.steps.push_back(*r.answer);
  }
  if (!out.steps.empty()) out.answer = out.steps.back();
  return out;
}

}  // namespace kbqa
