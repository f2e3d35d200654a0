// Random decomposition instances: a token vocabulary plus memoized random
// primitive flags and dyadic pattern scores, so that products of scores
// are exact and DP / exhaustive comparisons need no tolerance.
#pragma once

#include <map>
#include <random>
#include <string>

#include "kbqa/decomposer.hpp"

namespace kbqa::testing {

class RandomDecompositionWorld {
 public:
  explicit RandomDecompositionWorld(std::uint64_t seed) : rng_(seed) {}

  Tokens Question(std::size_t len) {
    static const char *kVocab[] = {"a", "b", "c", "d"};
    Tokens q;
    for (std::size_t i = 0; i < len; ++i) q.push_back(kVocab[rng_() % 4]);
    return q;
  }

  PrimitiveTest primitive() {
    return [this](std::span<const std::string> s) {
      auto [it, fresh] = primitive_.try_emplace(JoinTokens(s), false);
      if (fresh) it->second = rng_() % 3 == 0;
      return it->second;
    };
  }

  PatternScore pattern() {
    return [this](std::span<const std::string> s) {
      auto [it, fresh] = pattern_.try_emplace(JoinTokens(s), 0.0);
      if (fresh) it->second = static_cast<double>(rng_() % 5) / 4.0;
      return it->second;
    };
  }

 private:
  std::mt19937_64 rng_;
  std::map<std::string, bool> primitive_;
  std::map<std::string, double> pattern_;
};

}  // namespace kbqa::testing
