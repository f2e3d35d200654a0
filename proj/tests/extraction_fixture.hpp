// Toy stores wired into an entity & value extractor.
#pragma once

#include <fstream>

#include "kbqa/qa_extraction.hpp"
#include "toy_fixture.hpp"

namespace kbqa::testing {

struct ToyExtraction : Toy {
  ToyExtraction()
      : catalog(kb, PathPolicy{}),
        categories(PredicateCategories::LoadFile(Fixture("toy_predicate_categories.tsv"))),
        extractor(kb, index, lexicon, catalog, categories),
        corpus(LoadCorpusFile(Fixture("toy_corpus.jsonl"))),
        stats(ComputeCorpusStats(corpus)) {}

  PathCatalog catalog;
  PredicateCategories categories;
  EntityValueExtractor extractor;
  std::vector<QaPair> corpus;
  CorpusStats stats;
};

}  // namespace kbqa::testing
