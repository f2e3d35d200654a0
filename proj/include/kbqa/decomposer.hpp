// Complex-question decomposition. A question q is rewritten as a sequence
// (q̌_0, q̌_1, ..., q̌_k): q̌_0 is a primitive question and each later
// q̌_i carries one `$e` slot for the previous answer. The sequence score
// is Π P(q̌_i) with P(q̌) = f_v(q̌) / f_o(q̌) measured on the corpus.
//
// The optimum satisfies
//   P*(q_i) = max{ δ(q_i), max_{q_j ⊂ q_i} P(r(q_i, q_j)) · P*(q_j) }
// over contiguous token spans q_j, which Decompose evaluates bottom-up.

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kbqa/answer_engine.hpp"
#include "kbqa/entity_index.hpp"
#include "kbqa/qa_extraction.hpp"
#include "kbqa/text.hpp"

namespace kbqa {

struct PatternValidity {
  std::uint64_t valid = 0;     // f_v
  std::uint64_t observed = 0;  // f_o
  double probability = 0;      // f_v / f_o, 0 when f_o = 0

  bool operator==(const PatternValidity &) const = default;
};

// Direct scan of the corpus for one pattern (counts weighted by pair
// frequency). A question matches when replacing some contiguous span by
// `$e` yields the pattern; the match is valid when that span is an index
// mention.
PatternValidity ComputePatternValidity(std::span<const std::string> pattern,
                                       std::span<const QaPair> corpus,
                                       const StaticHashArray &index);

// Precomputed f_v / f_o for every pattern derivable from the corpus.
class PatternIndex {
 public:
  static PatternIndex Build(std::span<const QaPair> corpus,
                            const StaticHashArray &index);
  PatternValidity Validity(std::span<const std::string> pattern) const;
  std::size_t size() const { return counts_.size(); }

 private:
  std::unordered_map<std::string, PatternValidity> counts_;
};

struct Decomposition {
  std::vector<Tokens> sequence;
  double score = 0;

  bool operator==(const Decomposition &) const = default;
};

using PrimitiveTest = std::function<bool(std::span<const std::string>)>;
using PatternScore = std::function<double(std::span<const std::string>)>;

inline constexpr std::size_t kDefaultMaxQuestionTokens = 23;
inline constexpr std::size_t kBruteForceMaxTokens = 8;

// Dynamic program over spans in ascending length. Ties prefer the
// question itself when primitive, then the longer replaced span, then the
// leftmost one. Throws Error when the question exceeds max_tokens.
Decomposition Decompose(std::span<const std::string> question,
                        const PrimitiveTest &primitive, const PatternScore &pattern,
                        std::size_t max_tokens = kDefaultMaxQuestionTokens);

// Exhaustive recursive enumeration with the same tie rules; exponential,
// limited to kBruteForceMaxTokens tokens.
Decomposition DecomposeBruteForce(std::span<const std::string> question,
                                  const PrimitiveTest &primitive,
                                  const PatternScore &pattern);

// δ(q): exactly one mention span resolving to KB entities, and some
// template derivable from it has support in the model.
bool IsPrimitive(std::span<const std::string> question, const Resources &res);

// Binds the corpus pattern index and the online stores.
class Decomposer {
 public:
  Decomposer(const PatternIndex &patterns, const Resources &res,
             std::size_t max_tokens = kDefaultMaxQuestionTokens);

  Decomposition Decompose(std::span<const std::string> question) const;
  Decomposition DecomposeBruteForce(std::span<const std::string> question) const;
  bool IsPrimitive(std::span<const std::string> question) const;

 private:
  const PatternIndex &patterns_;
  const Resources &res_;
  std::size_t max_tokens_;
};

}  // namespace kbqa
