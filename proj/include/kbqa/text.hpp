// Token-level text handling shared by every stage: normalization of
// questions, answers, and surface forms into comparable token sequences.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kbqa {

using Tokens = std::vector<std::string>;

// Half-open token range [begin, end).
struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const TokenSpan &) const = default;
  auto operator<=>(const TokenSpan &) const = default;
};

// Placeholder token used by question patterns.
inline constexpr std::string_view kEntityVariable = "$e";

// Lowercases ASCII, splits on whitespace, strips leading/trailing ASCII
// punctuation, and splits a trailing possessive "'s" into its own token.
// Tokens of the form "$word" are kept verbatim as placeholders.
Tokens Tokenize(std::string_view text);

// Space-joined key used for hashing and map lookups.
std::string JoinTokens(std::span<const std::string> tokens);

// Human-readable form: like JoinTokens but re-attaches possessive "'s".
std::string Detokenize(std::span<const std::string> tokens);

// Tokenize + JoinTokens.
std::string NormalizePhrase(std::string_view text);

// Splits on single spaces without normalization (for stored templates
// and patterns that are already normalized).
Tokens SplitKey(std::string_view key);

bool IsPlaceholder(std::string_view token);

// Returns tokens with [span) replaced by a single placeholder token.
Tokens ReplaceSpan(std::span<const std::string> tokens, TokenSpan span,
                   std::string_view placeholder);

// Replaces every occurrence of `placeholder` by the tokens of `value`.
Tokens Substitute(std::span<const std::string> tokens,
                  std::string_view placeholder,
                  std::span<const std::string> value);

std::vector<std::string> SplitTabs(std::string_view line);

std::string_view Trim(std::string_view s);

}  // namespace kbqa
