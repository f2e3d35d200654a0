#include <doctest.h>

#include <sstream>

#include "extraction_fixture.hpp"
#include "kbqa/errors.hpp"
#include "kbqa/qa_extraction.hpp"

using namespace kbqa;
using kbqa::testing::ToyExtraction;

namespace {

std::set<std::pair<std::string, std::string>> Named(const KnowledgeBase &kb,
                                                    const std::vector<ExtractedPair> &ev) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto &p : ev) out.insert({kb.NodeName(p.entity), kb.NodeName(p.value)});
  return out;
}

}  // namespace

TEST_CASE("corpus parsing") {
  std::istringstream in(
      "{\"question\": \"Q one?\", \"answer\": \"A.\"}\n"
      "\n"
      "{\"question\": \"Q two\", \"answer\": \"B\", \"count\": 4}\n");
  auto corpus = LoadCorpus(in);
  REQUIRE(corpus.size() == 2);
  CHECK(corpus[0].question == Tokens{"q", "one"});
  CHECK(corpus[1].frequency == 4);

  std::istringstream bad_json("{\"question\": \n");
  CHECK_THROWS_AS(LoadCorpus(bad_json), ParseError);
  std::istringstream missing("{\"question\": \"q\"}\n");
  CHECK_THROWS_AS(LoadCorpus(missing), ParseError);
  std::istringstream zero("{\"question\": \"q\", \"answer\": \"a\", \"count\": 0}\n");
  CHECK_THROWS_AS(LoadCorpus(zero), ParseError);
  CHECK_THROWS_AS(ComputeCorpusStats({}), Error);
}

TEST_CASE("corpus statistics on the sample pairs") {
  ToyExtraction t;
  const std::string q1 = "when was barack obama born";
  CHECK(t.stats.total() == 3);
  CHECK(t.stats.QuestionCount(q1) == 2);
  CHECK(t.stats.QuestionProb(q1) == 2.0 / 3.0);
  CHECK(t.stats.AnswerProb(q1, "he was born in 1961") == 0.5);
  CHECK(t.stats.AnswerProb(q1, "never asked") == 0.0);
  CHECK(t.stats.QuestionProb("unknown") == 0.0);
}

TEST_CASE("frequencies weight the statistics") {
  std::vector<QaPair> corpus{{{"a"}, {"x"}, 3}, {{"a"}, {"y"}, 1}, {{"b"}, {"x"}, 4}};
  auto s = ComputeCorpusStats(corpus);
  CHECK(s.QuestionProb("a") == 0.5);
  CHECK(s.AnswerProb("a", "x") == 0.75);
}

TEST_CASE("question categories") {
  CHECK(CategorizeQuestion(Tokenize("When was Barack Obama born?")) == Category::kDate);
  CHECK(CategorizeQuestion(Tokenize("In what year did it open?")) == Category::kDate);
  CHECK(CategorizeQuestion(Tokenize("How many people live there?")) == Category::kNumber);
  CHECK(CategorizeQuestion(Tokenize("Who is the mayor?")) == Category::kPerson);
  CHECK(CategorizeQuestion(Tokenize("Where is Honolulu?")) == Category::kLocation);
  CHECK(CategorizeQuestion(Tokenize("Barack Obama's wife?")) == Category::kDescription);
  CHECK(ParseCategory("desc") == Category::kDescription);
  CHECK_FALSE(ParseCategory("colour"));
  CHECK(CategoryName(Category::kNumber) == "number");
}

TEST_CASE("extraction with and without refinement") {
  ToyExtraction t;
  const QaPair &a1 = t.corpus[0];
  CHECK(Named(t.kb, t.extractor.Extract(a1, false)) ==
        std::set<std::pair<std::string, std::string>>{{"BarackObama", "1961"},
                                                      {"BarackObama", "politician"}});
  auto refined = t.extractor.Extract(a1, true);
  CHECK(Named(t.kb, refined) ==
        std::set<std::pair<std::string, std::string>>{{"BarackObama", "1961"}});
  REQUIRE(refined.size() == 1);
  CHECK(refined[0].mention == TokenSpan{2, 4});
  CHECK(refined[0].value_span == TokenSpan{5, 6});

  auto dist = EntityValueDistribution(ToPairSet(refined));
  CHECK(dist.at({t.Node("BarackObama"), t.Node("1961")}) == 1.0);

  CHECK(Named(t.kb, t.extractor.Extract(t.corpus[2], true)) ==
        std::set<std::pair<std::string, std::string>>{{"Honolulu", "390K"}});
}

TEST_CASE("entity distribution falls back to mentions") {
  ToyExtraction t;
  auto q = Tokenize("Who is Barack Obama?");
  auto mentions = t.extractor.EntityMentions(q);
  REQUIRE(mentions.size() == 1);
  auto d = EntityDistribution({}, mentions);
  CHECK(d.at(t.Node("BarackObama")) == 1.0);
}

TEST_CASE("observation weights") {
  ToyExtraction t;
  auto refined = BuildObservations(t.corpus, t.extractor, t.stats, true);
  REQUIRE(refined.size() == 3);
  for (const auto &o : refined) {
    CHECK(o.weight == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(o.entity_prob == 1.0);
  }
  auto raw = BuildObservations(t.corpus, t.extractor, t.stats, false);
  REQUIRE(raw.size() == 4);
  // (q1, a1) splits its mass over two (entity, value) pairs.
  CHECK(raw[0].weight == doctest::Approx(1.0 / 6.0));
  CHECK(raw[1].weight == doctest::Approx(1.0 / 6.0));
  CHECK(raw[2].weight == doctest::Approx(1.0 / 3.0));
  CHECK(raw[3].pair_index == 2);
}

TEST_CASE("precomputed catalog agrees with on-demand reachability") {
  ToyExtraction t;
  std::set<NodeId> seeds;
  for (NodeId n = 0; n < t.kb.node_count(); ++n) seeds.insert(n);
  auto expansion = ExpandPredicates(t.kb, seeds, 3, PathPolicy{});
  PathCatalog pre(t.kb, PathPolicy{}, expansion);
  for (NodeId n = 0; n < t.kb.node_count(); ++n) {
    CHECK(pre.Reachable(n) == t.catalog.Reachable(n));
  }
}
