#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "extraction_fixture.hpp"
#include "kbqa/errors.hpp"
#include "kbqa/template_learner.hpp"
#include "oracles.hpp"

using namespace kbqa;
using kbqa::testing::ToyExtraction;

namespace {

double ThetaOf(const TrainingSet &x, const Theta &theta, const std::string &t,
               const std::string &p) {
  for (std::uint32_t id = 0; id < x.params.size(); ++id) {
    if (x.params.TemplateName(x.params.TemplateOf(id)) == t &&
        x.params.PathName(x.params.PathOf(id)) == p) {
      return theta[id];
    }
  }
  return 0;
}

TrainingItem Item(std::initializer_list<std::pair<std::uint32_t, double>> c,
                  double weight = 1) {
  TrainingItem item;
  item.weight = weight;
  for (auto [param, f] : c) item.candidates.push_back({param, f, 1.0, f});
  return item;
}

}  // namespace

TEST_CASE("factor for the refined sample observation") {
  ToyExtraction t;
  auto obs = BuildObservations(t.corpus, t.extractor, t.stats, true);
  REQUIRE_FALSE(obs.empty());
  const auto &x = obs[0];
  CHECK(t.kb.NodeName(x.value) == "1961");
  double f = FactorF(x, "when was $person born", *t.kb.ParsePath("dob"), t.kb, t.concepts);
  CHECK(f == doctest::Approx(2.0 / 3.0 * 1.0 * 0.64 * 1.0).epsilon(1e-12));
  CHECK(FactorF(x, "when was $person born", *t.kb.ParsePath("category"), t.kb,
                t.concepts) == 0.0);
  CHECK(FactorF(x, "when was $city born", *t.kb.ParsePath("dob"), t.kb, t.concepts) == 0.0);
}

TEST_CASE("training candidates are exactly the positive factors") {
  ToyExtraction t;
  auto obs = BuildObservations(t.corpus, t.extractor, t.stats, false);
  auto x = BuildTrainingSet(obs, t.kb, t.concepts, PathPolicy{});
  REQUIRE(x.items.size() == obs.size());

  std::set<NodeId> all;
  for (NodeId n = 0; n < t.kb.node_count(); ++n) all.insert(n);
  std::set<ExpandedPredicate> paths;
  for (const auto &spo : ExpandPredicates(t.kb, all, 3, PathPolicy{})) paths.insert(spo.path);
  const std::vector<std::string> templates{
      "when was $person born", "when was $politician born",
      "how many people are there in $city", "when was $city born"};

  for (std::size_t i = 0; i < obs.size(); ++i) {
    std::map<std::pair<std::string, std::string>, double> expected;
    for (const auto &tk : templates) {
      for (const auto &p : paths) {
        double f = FactorF(obs[i], tk, p, t.kb, t.concepts);
        if (f > 0) expected[{tk, t.kb.PathString(p)}] = f;
      }
    }
    std::map<std::pair<std::string, std::string>, double> got;
    for (const auto &c : x.items[i].candidates) {
      got[{x.params.TemplateName(x.params.TemplateOf(c.param)),
           x.params.PathName(x.params.PathOf(c.param))}] = c.f;
    }
    CHECK(got == expected);
  }
}

TEST_CASE("EM on the unrefined sample reproduces the 2:1 split") {
  ToyExtraction t;
  auto obs = BuildObservations(t.corpus, t.extractor, t.stats, false);
  auto x = BuildTrainingSet(obs, t.kb, t.concepts, PathPolicy{});
  auto r = Learn(x);
  CHECK(r.converged);
  CHECK(r.dropped_observations == 0);
  CHECK(ThetaOf(x, r.theta, "when was $person born", "dob") == doctest::Approx(2.0 / 3.0));
  CHECK(ThetaOf(x, r.theta, "when was $person born", "category") ==
        doctest::Approx(1.0 / 3.0));
  CHECK(ThetaOf(x, r.theta, "how many people are there in $city", "population") ==
        doctest::Approx(1.0));
}

TEST_CASE("initial theta is uniform over supported paths") {
  TrainingSet x;
  auto a = x.params.Intern("t", "p1");
  auto b = x.params.Intern("t", "p2");
  auto c = x.params.Intern("u", "p1");
  x.items.push_back(Item({{a, 1}, {b, 1}, {c, 1}}));
  auto theta = InitTheta(x);
  CHECK(theta[a] == 0.5);
  CHECK(theta[b] == 0.5);
  CHECK(theta[c] == 1.0);
  CHECK(x.params.Row(x.params.TemplateOf(a)).size() == 2);
}

TEST_CASE("E-step matches joint posterior enumeration") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 1 + static_cast<int>(rng() % 5);
    auto x = kbqa::testing::RandomTrainingSet(rng, n);
    auto theta = kbqa::testing::RandomTheta(rng, x);
    auto post = EStep(x, theta);
    auto oracle = kbqa::testing::JointPosterior(x, theta);
    for (std::size_t i = 0; i < x.items.size(); ++i) {
      for (std::size_t j = 0; j < oracle[i].size(); ++j) {
        CHECK(std::abs(post.responsibilities[i][j] - oracle[i][j]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("observations without support are dropped") {
  TrainingSet x;
  auto a = x.params.Intern("t", "p");
  x.items.push_back(Item({{a, 1}}));
  x.items.push_back(Item({}));
  auto post = EStep(x, InitTheta(x));
  CHECK(post.dropped == 1);
  CHECK_FALSE(post.kept[1]);
  auto r = Learn(x);
  CHECK(r.dropped_observations == 1);
  CHECK(r.final_log_likelihood == doctest::Approx(0.0));
}

TEST_CASE("M-step rows are distributions and likelihood never drops") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto x = kbqa::testing::RandomTrainingSet(rng, 40);
    auto r = Learn(x, {50, 0.0});
    CHECK(r.iterations == 50);
    for (std::size_t s = 1; s < r.log_likelihoods.size(); ++s) {
      CHECK(r.log_likelihoods[s] >= r.log_likelihoods[s - 1] - 1e-9);
    }
    for (std::uint32_t t = 0; t < x.params.template_count(); ++t) {
      double sum = 0;
      for (auto p : x.params.Row(t)) sum += r.theta[p];
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("counting baseline weights by observation") {
  TrainingSet x;
  auto dob = x.params.Intern("when was $person born", "dob");
  auto cat = x.params.Intern("when was $person born", "category");
  x.items.push_back(Item({{dob, 1}}));
  x.items.push_back(Item({{dob, 1}}));
  x.items.push_back(Item({{cat, 1}}));
  auto theta = CountingBaseline(x);
  CHECK(theta[dob] == doctest::Approx(2.0 / 3.0));
  CHECK(theta[cat] == doctest::Approx(1.0 / 3.0));

  // An ambiguous observation is split by P(v|e,p).
  TrainingSet y;
  auto p = y.params.Intern("t", "p");
  auto q = y.params.Intern("t", "q");
  y.items.push_back(Item({{p, 1.0}, {q, 0.5}}));
  auto theta_y = CountingBaseline(y);
  CHECK(theta_y[p] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("predicate model persistence") {
  PredicateModel m;
  m.Set("when was $person born", "dob", 0.67);
  m.Set("when was $person born", "category", 0.33);
  m.Set("$person 's wife", "marriage|person|name", 1.0);
  CHECK(m.Best("when was $person born") == "dob");
  CHECK(m.Probability("when was $person born", "category") == 0.33);
  CHECK(m.Probability("nothing", "dob") == 0.0);
  CHECK(m.Find("nothing") == nullptr);

  std::ostringstream out;
  m.Save(out);
  std::istringstream in(out.str());
  auto loaded = PredicateModel::Load(in);
  CHECK(loaded.rows() == m.rows());
  std::ostringstream again;
  loaded.Save(again);
  CHECK(again.str() == out.str());

  std::istringstream bad("t\tp\tnot-a-number\n");
  CHECK_THROWS_AS(PredicateModel::Load(bad), ParseError);
}

TEST_CASE("ties in the best path go to the smaller symbol") {
  PredicateModel m;
  m.Set("t", "zeta", 0.5);
  m.Set("t", "alpha", 0.5);
  CHECK(m.Best("t") == "alpha");
}
