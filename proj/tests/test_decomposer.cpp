#include <doctest.h>

#include <chrono>

#include "decomposition_fixture.hpp"
#include "kbqa/decomposer.hpp"
#include "kbqa/errors.hpp"
#include "kbqa/qa_extraction.hpp"
#include "toy_fixture.hpp"

using namespace kbqa;
using kbqa::testing::Fixture;
using kbqa::testing::Toy;

namespace {

PredicateModel ChainModel() {
  PredicateModel m;
  m.Set("when was $person born", "dob", 1.0);
  m.Set("$person 's wife", "marriage|person|name", 1.0);
  return m;
}

std::vector<std::string> Joined(const Decomposition &d) {
  std::vector<std::string> out;
  for (const auto &s : d.sequence) out.push_back(JoinTokens(s));
  return out;
}

}  // namespace

TEST_CASE("pattern validity on the sample pairs") {
  Toy toy;
  auto corpus = LoadCorpusFile(Fixture("toy_corpus.jsonl"));
  auto born = ComputePatternValidity(SplitKey("when was $e born"), corpus, toy.index);
  CHECK(born == PatternValidity{2, 2, 1.0});
  auto when = ComputePatternValidity(SplitKey("when $e"), corpus, toy.index);
  CHECK(when == PatternValidity{0, 2, 0.0});
  CHECK(ComputePatternValidity(SplitKey("why $e"), corpus, toy.index) == PatternValidity{});

  auto index = PatternIndex::Build(corpus, toy.index);
  CHECK(index.Validity(SplitKey("when was $e born")) == born);
  CHECK(index.Validity(SplitKey("when $e")) == when);
  CHECK(index.Validity(SplitKey("why $e")) == PatternValidity{});
  CHECK(index.Validity(SplitKey("how many people are there in $e")) ==
        PatternValidity{1, 1, 1.0});
}

TEST_CASE("pattern index agrees with the direct scan") {
  Toy toy;
  auto corpus = LoadCorpusFile(Fixture("toy_pipeline_corpus.jsonl"));
  auto index = PatternIndex::Build(corpus, toy.index);
  CHECK(index.size() > 0);
  for (const auto &pair : corpus) {
    const auto &q = pair.question;
    for (std::size_t b = 0; b < q.size(); ++b) {
      for (std::size_t e = b + 1; e <= q.size(); ++e) {
        auto pattern = ReplaceSpan(q, {b, e}, kEntityVariable);
        CHECK(index.Validity(pattern) == ComputePatternValidity(pattern, corpus, toy.index));
      }
    }
  }
}

TEST_CASE("primitive questions") {
  Toy toy(true, ChainModel());
  CHECK(IsPrimitive(Tokenize("barack obama's wife"), toy.res));
  CHECK(IsPrimitive(Tokenize("when was barack obama born"), toy.res));
  CHECK_FALSE(IsPrimitive(Tokenize("when was $e born"), toy.res));
  CHECK_FALSE(IsPrimitive(Tokenize("where is barack obama"), toy.res));
  CHECK_FALSE(IsPrimitive(Tokenize("barack obama's wife honolulu"), toy.res));
}

TEST_CASE("the wife question decomposes into two steps") {
  Toy toy(true, ChainModel());
  auto corpus = LoadCorpusFile(Fixture("toy_pipeline_corpus.jsonl"));
  auto patterns = PatternIndex::Build(corpus, toy.index);
  Decomposer d(patterns, toy.res);
  auto q = Tokenize("When was Barack Obama's wife born?");
  auto r = d.Decompose(q);
  CHECK(Joined(r) == std::vector<std::string>{"barack obama 's wife", "when was $e born"});
  CHECK(r.score == 1.0);
  CHECK(d.DecomposeBruteForce(q) == r);

  // A primitive question is its own decomposition.
  auto simple = d.Decompose(Tokenize("When was Barack Obama born?"));
  CHECK(Joined(simple) == std::vector<std::string>{"when was barack obama born"});
  CHECK(simple.score == 1.0);

  auto none = d.Decompose(Tokenize("what is the meaning of life"));
  CHECK(none.score == 0.0);
  CHECK(none.sequence.empty());
}

TEST_CASE("dynamic program equals exhaustive search") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    kbqa::testing::RandomDecompositionWorld world(seed);
    auto primitive = world.primitive();
    auto pattern = world.pattern();
    for (std::size_t len = 1; len <= 6; ++len) {
      auto q = world.Question(len);
      auto dp = Decompose(q, primitive, pattern);
      auto brute = DecomposeBruteForce(q, primitive, pattern);
      CHECK(dp == brute);
    }
  }
}

TEST_CASE("ties prefer the primitive, then the longer span, then leftmost") {
  auto always = [](std::span<const std::string>) { return 1.0; };
  auto singletons = [](std::span<const std::string> s) { return s.size() == 1; };
  Tokens q{"x", "y"};
  auto d = Decompose(q, singletons, always);
  // Both single tokens score 1; the leftmost wins.
  CHECK(Joined(d) == std::vector<std::string>{"x", "$e y"});

  auto whole = [](std::span<const std::string>) { return true; };
  CHECK(Joined(Decompose(q, whole, always)) == std::vector<std::string>{"x y"});

  auto pairs = [](std::span<const std::string> s) { return s.size() <= 2; };
  Tokens r{"x", "y", "z"};
  CHECK(Joined(Decompose(r, pairs, always)) == std::vector<std::string>{"x y", "$e z"});
}

TEST_CASE("length limits") {
  auto never = [](std::span<const std::string>) { return false; };
  auto zero = [](std::span<const std::string>) { return 0.0; };
  Tokens long_q(24, "w");
  CHECK_THROWS_WITH_AS(Decompose(long_q, never, zero),
                       "question has 24 tokens; the limit is 23", Error);
  Tokens nine(9, "w");
  CHECK_THROWS_AS(DecomposeBruteForce(nine, never, zero), Error);
  CHECK(Decompose(Tokens{}, never, zero).score == 0.0);
}

TEST_CASE("23-token questions decompose within two seconds") {
  kbqa::testing::RandomDecompositionWorld world(99);
  auto q = world.Question(23);
  auto start = std::chrono::steady_clock::now();
  auto d = Decompose(q, world.primitive(), world.pattern());
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(2));
  CHECK(d.score >= 0.0);
}
