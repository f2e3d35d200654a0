#include <doctest.h>

#include <chrono>
#include <cmath>

#include "kbqa/answer_engine.hpp"
#include "toy_fixture.hpp"

using namespace kbqa;
using kbqa::testing::Toy;

namespace {

PredicateModel ChainModel() {
  PredicateModel m;
  m.Set("when was $person born", "dob", 1.0);
  m.Set("$person 's wife", "marriage|person|name", 1.0);
  return m;
}

// P(v|q) as an explicit sum over every (entity, template, path, value)
// combination, with entities found by trying every question span against
// the lexicon.
std::map<NodeId, double> BruteForceAnswer(const Toy &toy, const Tokens &q) {
  std::vector<std::pair<NodeId, TokenSpan>> entities;
  std::set<NodeId> seen;
  for (std::size_t len = q.size(); len >= 1; --len) {
    for (std::size_t b = 0; b + len <= q.size(); ++b) {
      std::span<const std::string> span(q.data() + b, len);
      for (NodeId n : toy.lexicon.Find(JoinTokens(span))) {
        if (toy.kb.IsEntity(n) && seen.insert(n).second) {
          entities.push_back({n, {b, b + len}});
        }
      }
    }
  }
  std::map<NodeId, double> mass;
  for (const auto &[e, span] : entities) {
    auto concepts = toy.concepts.ContextConcepts(q, span, toy.kb.NodeName(e));
    for (const auto &[c, pc] : concepts) {
      std::string key = JoinTokens(ReplaceSpan(q, span, "$" + c));
      for (const auto &[tkey, row] : toy.model.rows()) {
        if (tkey != key) continue;
        for (const auto &[ptext, theta] : row) {
          auto path = toy.kb.ParsePath(ptext);
          auto reach = toy.kb.Reach(e, *path);
          for (NodeId v = 0; v < toy.kb.node_count(); ++v) {
            if (!reach.count(v)) continue;
            mass[v] += (1.0 / entities.size()) * pc * theta / reach.size();
          }
        }
      }
    }
  }
  double total = 0;
  for (const auto &[v, m] : mass) total += m;
  for (auto &[v, m] : mass) m /= total;
  return mass;
}

}  // namespace

TEST_CASE("answer distribution for the birth-date question") {
  Toy toy;
  auto q = Tokenize("When was Barack Obama born?");
  auto d = ComputeAnswerDistribution(q, toy.res);
  REQUIRE(d.probabilities.size() == 3);
  CHECK(d.raw_mass.at(toy.Node("1961")) == doctest::Approx(0.64 * 0.67 + 0.36));
  CHECK(d.raw_mass.at(toy.Node("person")) == doctest::Approx(0.64 * 0.33 * 0.5));
  CHECK(d.probabilities.at(toy.Node("politician")) ==
        doctest::Approx(0.64 * 0.33 * 0.5 / 1.0));
  const auto &trace = d.traces.at(toy.Node("1961"));
  CHECK(trace.template_key == "when was $person born");
  CHECK(trace.path == "dob");
  CHECK(d.enumerations == 3);

  auto oracle = BruteForceAnswer(toy, q);
  REQUIRE(oracle.size() == d.probabilities.size());
  for (const auto &[v, p] : oracle) {
    CHECK(std::abs(d.probabilities.at(v) - p) < 1e-12);
  }

  auto r = AnswerQuestion(q, toy.res);
  REQUIRE(r.answer);
  CHECK(toy.kb.NodeName(r.answer->value) == "1961");
  CHECK(r.answer->probability == doctest::Approx(0.7888));
}

TEST_CASE("unanswerable questions carry a reason") {
  PredicateModel m;
  m.Set("where was $person born", "population", 1.0);
  Toy toy(true, m);
  CHECK(AnswerQuestion(Tokenize("what is the meaning of life"), toy.res).reason ==
        kReasonNoEntity);
  CHECK(AnswerQuestion(Tokenize("when was barack obama born"), toy.res).reason ==
        kReasonNoTemplate);
  CHECK(AnswerQuestion(Tokenize("where was barack obama born"), toy.res).reason ==
        kReasonNoValue);
}

TEST_CASE("ties go to the smaller value symbol") {
  PredicateModel m;
  m.Set("what is $person", "category", 1.0);
  Toy toy(true, m);
  auto r = AnswerQuestion(Tokenize("what is barack obama"), toy.res);
  REQUIRE(r.answer);
  CHECK(r.answer->probability == doctest::Approx(0.5));
  CHECK(toy.kb.NodeName(r.answer->value) == "person");
}

TEST_CASE("chained answering substitutes each answer") {
  Toy toy(true, ChainModel());
  std::vector<Tokens> seq{Tokenize("barack obama's wife"), SplitKey("when was $e born")};
  auto r = AnswerSequence(seq, toy.res);
  REQUIRE(r.answer);
  CHECK(toy.kb.NodeName(r.steps[0].value) == "MichelleObama");
  CHECK(JoinTokens(r.questions[1]) == "when was michelle obama born");
  CHECK(toy.kb.NodeName(r.answer->value) == "1964");

  std::vector<Tokens> broken{Tokenize("barack obama's wife"), SplitKey("where is $e")};
  auto f = AnswerSequence(broken, toy.res);
  CHECK_FALSE(f.answer);
  REQUIRE(f.failed_index);
  CHECK(*f.failed_index == 1);
  CHECK(f.reason == kReasonNoTemplate);
}

TEST_CASE("answering is fast on the toy stores") {
  Toy toy;
  auto q = Tokenize("When was Barack Obama born?");
  auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 1000; ++i) ComputeAnswerDistribution(q, toy.res);
  auto elapsed = std::chrono::steady_clock::now() - start;
  CHECK(elapsed < std::chrono::seconds(1));
}
