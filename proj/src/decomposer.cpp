#include "kbqa/decomposer.hpp"

#include <algorithm>
#include <set>

#include "kbqa/errors.hpp"

namespace kbqa {

namespace {

bool IsMention(std::span<const std::string> span, const StaticHashArray &index) {
  for (const auto &t : span) {
    if (IsPlaceholder(t)) return false;
  }
  return !index.Lookup(JoinTokens(span)).empty();
}

void CheckLength(std::span<const std::string> q, std::size_t limit) {
  if (q.size() > limit) {
    throw Error("question has " + std::to_string(q.size()) +
                " tokens; the limit is " + std::to_string(limit));
  }
}

Tokens SpanTokens(std::span<const std::string> q, std::size_t b, std::size_t e) {
  return Tokens(q.begin() + b, q.begin() + e);
}

// Pattern obtained by replacing [a, b) of q[i, j) with `$e`.
Tokens PatternOf(std::span<const std::string> q, std::size_t i, std::size_t j,
                 std::size_t a, std::size_t b) {
  Tokens out(q.begin() + i, q.begin() + a);
  out.emplace_back(kEntityVariable);
  out.insert(out.end(), q.begin() + b, q.begin() + j);
  return out;
}

}  // namespace

PatternValidity ComputePatternValidity(std::span<const std::string> pattern,
                                       std::span<const QaPair> corpus,
                                       const StaticHashArray &index) {
  PatternValidity v;
  const auto slot = std::find(pattern.begin(), pattern.end(), kEntityVariable);
  if (slot == pattern.end() ||
      std::count(pattern.begin(), pattern.end(), kEntityVariable) != 1 ||
      pattern.size() < 2) {
    return v;
  }
  const std::size_t prefix = slot - pattern.begin();
  const std::size_t suffix = pattern.size() - prefix - 1;
  for (const auto &pair : corpus) {
    const auto &q = pair.question;
    if (q.size() < prefix + suffix + 1) continue;
    if (!std::equal(pattern.begin(), slot, q.begin())) continue;
    if (!std::equal(slot + 1, pattern.end(), q.end() - suffix)) continue;
    // The replaced span is fixed by prefix and suffix lengths.
    std::span<const std::string> replaced(q.data() + prefix,
                                          q.size() - prefix - suffix);
    v.observed += pair.frequency;
    if (IsMention(replaced, index)) v.valid += pair.frequency;
  }
  if (v.observed) {
    v.probability = static_cast<double>(v.valid) / static_cast<double>(v.observed);
  }
  return v;
}

PatternIndex PatternIndex::Build(std::span<const QaPair> corpus,
                                 const StaticHashArray &index) {
  PatternIndex out;
  for (const auto &pair : corpus) {
    const auto &q = pair.question;
    const std::size_t n = q.size();
    // A given pattern determines its span, so each (question, pattern)
    // is visited once.
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b <= n; ++b) {
        if (b - a == n) continue;  // bare "$e" is not a pattern
        auto &v = out.counts_[JoinTokens(PatternOf(q, 0, n, a, b))];
        v.observed += pair.frequency;
        if (IsMention(std::span<const std::string>(q).subspan(a, b - a), index)) {
          v.valid += pair.frequency;
        }
      }
    }
  }
  for (auto &[k, v] : out.counts_) {
    v.probability = static_cast<double>(v.valid) / static_cast<double>(v.observed);
  }
  return out;
}

PatternValidity PatternIndex::Validity(std::span<const std::string> pattern) const {
  auto it = counts_.find(JoinTokens(pattern));
  return it == counts_.end() ? PatternValidity{} : it->second;
}

Decomposition Decompose(std::span<const std::string> q,
                        const PrimitiveTest &primitive, const PatternScore &pattern,
                        std::size_t max_tokens) {
  CheckLength(q, max_tokens);
  const std::size_t n = q.size();
  Decomposition result;
  if (n == 0) return result;

  struct Cell {
    double score = 0;
    bool primitive = false;
    std::size_t a = 0, b = 0;  // chosen sub-span when not primitive
  };
  // cells[i][len] describes q[i, i + len).
  std::vector<std::vector<Cell>> cells(n, std::vector<Cell>(n + 1));

  for (std::size_t len = 1; len <= n; ++len) {
    for (std::size_t i = 0; i + len <= n; ++i) {
      const std::size_t j = i + len;
      Cell &cell = cells[i][len];
      if (primitive(q.subspan(i, len))) {
        cell.score = 1;
        cell.primitive = true;
      }
      for (std::size_t sub = len - 1; sub >= 1; --sub) {
        for (std::size_t a = i; a + sub <= j; ++a) {
          const Cell &inner = cells[a][sub];
          if (inner.score <= 0) continue;
          const double p = pattern(PatternOf(q, i, j, a, a + sub));
          const double cand = p * inner.score;
          if (cand > cell.score) {
            cell.score = cand;
            cell.primitive = false;
            cell.a = a;
            cell.b = a + sub;
          }
        }
      }
    }
  }

  const Cell &top = cells[0][n];
  result.score = top.score;
  if (top.score <= 0) return result;
  // Unwind from the outside in, then reverse so q̌_0 comes first.
  std::size_t i = 0, j = n;
  std::vector<Tokens> reversed;
  while (true) {
    const Cell &c = cells[i][j - i];
    if (c.primitive) {
      reversed.push_back(SpanTokens(q, i, j));
      break;
    }
    reversed.push_back(PatternOf(q, i, j, c.a, c.b));
    i = c.a;
    j = c.b;
  }
  result.sequence.assign(reversed.rbegin(), reversed.rend());
  return result;
}

namespace {

struct Enumerated {
  double score;
  // Choice keys from the outermost level inwards: {0} for a primitive,
  // {1, -len, a} for a replacement. Smaller is preferred on ties.
  std::vector<long> key;
  std::vector<Tokens> reversed;
};

void EnumerateAll(std::span<const std::string> q, std::size_t i, std::size_t j,
                  const PrimitiveTest &primitive, const PatternScore &pattern,
                  std::vector<Enumerated> *out) {
  if (primitive(q.subspan(i, j - i))) {
    out->push_back({1.0, {0}, {SpanTokens(q, i, j)}});
  }
  for (std::size_t a = i; a < j; ++a) {
    for (std::size_t b = a + 1; b <= j; ++b) {
      if (a == i && b == j) continue;
      Tokens pat = PatternOf(q, i, j, a, b);
      const double p = pattern(pat);
      std::vector<Enumerated> inner;
      EnumerateAll(q, a, b, primitive, pattern, &inner);
      for (auto &e : inner) {
        Enumerated whole;
        whole.score = p * e.score;
        whole.key = {1, -static_cast<long>(b - a), static_cast<long>(a)};
        whole.key.insert(whole.key.end(), e.key.begin(), e.key.end());
        whole.reversed.push_back(pat);
        whole.reversed.insert(whole.reversed.end(), e.reversed.begin(),
                              e.reversed.end());
        out->push_back(std::move(whole));
      }
    }
  }
}

}  // namespace

Decomposition DecomposeBruteForce(std::span<const std::string> q,
                                  const PrimitiveTest &primitive,
                                  const PatternScore &pattern) {
  CheckLength(q, kBruteForceMaxTokens);
  Decomposition result;
  if (q.empty()) return result;
  std::vector<Enumerated> all;
  EnumerateAll(q, 0, q.size(), primitive, pattern, &all);
  const Enumerated *best = nullptr;
  for (const auto &e : all) {
    if (e.score <= 0) continue;
    if (!best || e.score > best->score ||
        (e.score == best->score && e.key < best->key)) {
      best = &e;
    }
  }
  if (!best) return result;
  result.score = best->score;
  // `reversed` lists the outermost pattern first; flip to q̌_0 first.
  result.sequence.assign(best->reversed.rbegin(), best->reversed.rend());
  return result;
}

bool IsPrimitive(std::span<const std::string> question, const Resources &res) {
  std::set<TokenSpan> spans;
  std::vector<std::pair<NodeId, TokenSpan>> entities;
  for (const auto &m : FindMentions(res.index, question, res.max_mention_tokens)) {
    for (std::uint64_t c : m.candidates) {
      if (c < res.kb.node_count() && res.kb.IsEntity(static_cast<NodeId>(c))) {
        spans.insert(m.span);
        entities.emplace_back(static_cast<NodeId>(c), m.span);
      }
    }
  }
  if (spans.size() != 1) return false;
  for (const auto &[e, span] : entities) {
    for (const auto &[t, p] : res.concepts.Templates(question, span, res.kb.NodeName(e))) {
      if (p > 0 && res.model.Find(t.Key())) return true;
    }
  }
  return false;
}

Decomposer::Decomposer(const PatternIndex &patterns, const Resources &res,
                       std::size_t max_tokens)
    : patterns_(patterns), res_(res), max_tokens_(max_tokens) {}

Decomposition Decomposer::Decompose(std::span<const std::string> question) const {
  return kbqa::Decompose(
      question, [this](auto s) { return kbqa::IsPrimitive(s, res_); },
      [this](auto p) { return patterns_.Validity(p).probability; }, max_tokens_);
}

Decomposition Decomposer::DecomposeBruteForce(
    std::span<const std::string> question) const {
  return kbqa::DecomposeBruteForce(
      question, [this](auto s) { return kbqa::IsPrimitive(s, res_); },
      [this](auto p) { return patterns_.Validity(p).probability; });
}

bool Decomposer::IsPrimitive(std::span<const std::string> question) const {
  return kbqa::IsPrimitive(question, res_);
}

}  // namespace kbqa
