#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "kbqa/errors.hpp"
#include "kbqa/kb_store.hpp"
#include "oracles.hpp"
#include "toy_fixture.hpp"

using namespace kbqa;
using kbqa::testing::Fixture;

namespace {

ExpandedPredicate Path(const KnowledgeBase &kb, const std::string &text) {
  auto p = kb.ParsePath(text);
  REQUIRE(p.has_value());
  return *p;
}

}  // namespace

TEST_CASE("toy store loads") {
  auto kb = KnowledgeBase::LoadFile(Fixture("toy_kb.tsv"));
  CHECK(kb.triple_count() == 9);
  // BarackObama, marriage_1, person_1, Honolulu.
  CHECK(kb.entity_count() == 4);
  CHECK(kb.predicate_count() == 7);
  auto obama = *kb.FindNode("BarackObama");
  CHECK(kb.Outgoing(obama).size() == 5);
  CHECK(kb.Outgoing(obama, *kb.FindPredicate("category")).size() == 2);
  CHECK_FALSE(kb.FindNode("Nobody"));
  CHECK(kb.IsEntity(obama));
  CHECK_FALSE(kb.IsEntity(*kb.FindNode("1961")));
  auto between = kb.PredicatesBetween(obama, *kb.FindNode("1961"));
  REQUIRE(between.size() == 1);
  CHECK(kb.PredicateName(between[0]) == "dob");
}

TEST_CASE("ids do not depend on load order") {
  std::vector<std::array<std::string, 3>> t{
      {"b", "p", "c"}, {"a", "q", "b"}, {"a", "p", "c"}, {"a", "p", "c"}};
  auto kb1 = KnowledgeBase::FromTriples(t);
  std::reverse(t.begin(), t.end());
  auto kb2 = KnowledgeBase::FromTriples(t);
  CHECK(kb1.triple_count() == 3);
  REQUIRE(kb1.triples().size() == kb2.triples().size());
  CHECK(std::equal(kb1.triples().begin(), kb1.triples().end(),
                   kb2.triples().begin()));
}

TEST_CASE("malformed lines report their line number") {
  std::istringstream in("# header\na\tb\tc\nbroken line\n");
  try {
    KnowledgeBase::Load(in);
    FAIL("expected ParseError");
  } catch (const ParseError &e) {
    CHECK(e.line() == 3);
  }
  std::istringstream empty_field("a\t\tc\n");
  CHECK_THROWS_AS(KnowledgeBase::Load(empty_field), ParseError);
}

TEST_CASE("path traversal on the toy store") {
  auto kb = KnowledgeBase::LoadFile(Fixture("toy_kb.tsv"));
  auto obama = *kb.FindNode("BarackObama");
  auto michelle = *kb.FindNode("MichelleObama");
  PathPolicy policy;

  auto spouse = Path(kb, "marriage|person|name");
  CHECK(kb.PathString(spouse) == "marriage|person|name");
  CHECK(kb.Reach(obama, spouse) == std::set<NodeId>{michelle});

  auto cat = kb.ValueDistribution(obama, Path(kb, "category"));
  CHECK(cat.size() == 2);
  CHECK(cat[*kb.FindNode("person")] == doctest::Approx(0.5));

  auto paths = kb.PredicatesBetween(obama, michelle, policy);
  REQUIRE(paths.size() == 1);
  CHECK(paths[0] == spouse);

  // marriage|person|dob does not end in name.
  CHECK(kb.PredicatesBetween(obama, *kb.FindNode("1964"), policy).empty());
  policy.name_restriction = false;
  auto loose = kb.PredicatesBetween(obama, *kb.FindNode("1964"), policy);
  REQUIRE(loose.size() == 1);
  CHECK(kb.PathString(loose[0]) == "marriage|person|dob");

  CHECK_FALSE(kb.ParsePath("dob|nonexistent"));
}

TEST_CASE("reachable values agree with pairwise path search") {
  auto kb = KnowledgeBase::LoadFile(Fixture("toy_kb.tsv"));
  PathPolicy policy;
  for (NodeId e = 0; e < kb.node_count(); ++e) {
    auto reach = kb.ReachableValues(e, policy);
    for (NodeId v = 0; v < kb.node_count(); ++v) {
      auto between = kb.PredicatesBetween(e, v, policy);
      auto it = reach.find(v);
      if (between.empty()) {
        CHECK(it == reach.end());
      } else {
        REQUIRE(it != reach.end());
        CHECK(it->second == between);
      }
    }
  }
}

TEST_CASE("streaming expansion equals the naive walk on random graphs") {
  std::mt19937_64 rng(7);
  for (int g = 0; g < 20; ++g) {
    auto kb = KnowledgeBase::FromTriples(kbqa::testing::RandomGraph(rng, 60, 150, 4));
    std::set<NodeId> seeds;
    for (NodeId n = 0; n < kb.node_count(); n += 3) seeds.insert(n);
    for (bool restrict : {true, false}) {
      PathPolicy policy{3, restrict, "name"};
      for (int k = 1; k <= 3; ++k) {
        CHECK(ExpandPredicates(kb, seeds, k, policy) ==
              kbqa::testing::NaiveExpansion(kb, seeds, k, policy));
      }
    }
  }
}

TEST_CASE("expansion from a file matches expansion from memory") {
  auto kb = KnowledgeBase::LoadFile(Fixture("toy_kb.tsv"));
  std::set<NodeId> seeds{*kb.FindNode("BarackObama")};
  PathPolicy policy;
  auto from_file = ExpandPredicates(kb, ScanFile(Fixture("toy_kb.tsv"), kb), seeds, 3, policy);
  CHECK(from_file == ExpandPredicates(kb, seeds, 3, policy));

  std::ostringstream out;
  WriteExpansion(out, kb, from_file);
  std::istringstream in(out.str());
  CHECK(ReadExpansion(in, kb) == from_file);
}

TEST_CASE("valid(k) counts reference hits per length") {
  auto kb = KnowledgeBase::LoadFile(Fixture("toy_kb.tsv"));
  auto obama = *kb.FindNode("BarackObama");
  auto paths = ExpandPredicates(kb, {obama}, 3, PathPolicy{});
  std::set<std::pair<NodeId, NodeId>> reference{
      {obama, *kb.FindNode("MichelleObama")}, {obama, *kb.FindNode("1961")}};
  CHECK(ValidK(paths, reference, 1) == 1);
  CHECK(ValidK(paths, reference, 2) == 0);
  CHECK(ValidK(paths, reference, 3) == 1);
}
