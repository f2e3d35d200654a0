#include "kbqa/text.hpp"

#include <cctype>

namespace kbqa {

namespace {

bool IsAsciiPunct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

bool IsAsciiSpace(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

void AppendToken(std::string raw, Tokens *out) {
  for (char &c : raw) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (IsPlaceholder(raw)) {
    out->push_back(std::move(raw));
    return;
  }
  std::size_t b = 0;
  std::size_t e = raw.size();
  while (b < e && IsAsciiPunct(raw[b])) ++b;
  while (e > b && IsAsciiPunct(raw[e - 1])) --e;
  if (b == e) return;
  std::string token = raw.substr(b, e - b);
  // Possessive clitic becomes a separate token so "obama's" still
  // exposes the mention "obama".
  if (token.size() > 2 && token.compare(token.size() - 2, 2, "'s") == 0) {
    std::string stem = token.substr(0, token.size() - 2);
    while (!stem.empty() && IsAsciiPunct(stem.back())) stem.pop_back();
    if (!stem.empty()) {
      out->push_back(std::move(stem));
      out->push_back("'s");
      return;
    }
  }
  out->push_back(std::move(token));
}

}  // namespace

bool IsPlaceholder(std::string_view token) {
  if (token.size() < 2 || token[0] != '$') return false;
  for (std::size_t i = 1; i < token.size(); ++i) {
    char c = token[i];
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
          c == '-')) {
      return false;
    }
  }
  return true;
}

Tokens Tokenize(std::string_view text) {
  Tokens out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && IsAsciiSpace(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !IsAsciiSpace(text[i])) ++i;
    if (i > start) AppendToken(std::string(text.substr(start, i - start)), &out);
  }
  return out;
}

std::string JoinTokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::string Detokenize(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i && tokens[i] != "'s") out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::string NormalizePhrase(std::string_view text) {
  return JoinTokens(Tokenize(text));
}

Tokens SplitKey(std::string_view key) {
  Tokens out;
  std::size_t i = 0;
  while (i <= key.size()) {
    std::size_t j = key.find(' ', i);
    if (j == std::string_view::npos) j = key.size();
    if (j > i) out.emplace_back(key.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

Tokens ReplaceSpan(std::span<const std::string> tokens, TokenSpan span,
                   std::string_view placeholder) {
  Tokens out;
  out.reserve(tokens.size() - span.size() + 1);
  out.insert(out.end(), tokens.begin(), tokens.begin() + span.begin);
  out.emplace_back(placeholder);
  out.insert(out.end(), tokens.begin() + span.end, tokens.end());
  return out;
}

Tokens Substitute(std::span<const std::string> tokens,
                  std::string_view placeholder,
                  std::span<const std::string> value) {
  Tokens out;
  for (const auto &t : tokens) {
    if (t == placeholder) {
      out.insert(out.end(), value.begin(), value.end());
    } else {
      out.push_back(t);
    }
  }
  return out;
}

std::vector<std::string> SplitTabs(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t i = 0;
  while (true) {
    std::size_t j = line.find('\t', i);
    if (j == std::string_view::npos) {
      fields.emplace_back(line.substr(i));
      break;
    }
    fields.emplace_back(line.substr(i, j - i));
    i = j + 1;
  }
  return fields;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && IsAsciiSpace(s.front())) s.remove_prefix(1);
  while (!s.empty() && IsAsciiSpace(s.back())) s.remove_suffix(1);
  return s;
}

}  // namespace kbqa
