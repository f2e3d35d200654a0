#include <doctest.h>

#include "kbqa/text.hpp"

using namespace kbqa;

TEST_CASE("tokenize lowercases and strips edge punctuation") {
  CHECK(Tokenize("When was Barack Obama born?") ==
        Tokens{"when", "was", "barack", "obama", "born"});
  CHECK(Tokenize("  It's   390K. ") == Tokens{"it", "'s", "390k"});
  CHECK(Tokenize("...") == Tokens{});
  CHECK(Tokenize("") == Tokens{});
}

TEST_CASE("possessive becomes its own token") {
  Tokens t = Tokenize("Barack Obama's wife?");
  CHECK(t == Tokens{"barack", "obama", "'s", "wife"});
  CHECK(JoinTokens(t) == "barack obama 's wife");
  CHECK(Detokenize(t) == "barack obama's wife");
}

TEST_CASE("placeholders are kept verbatim") {
  CHECK(IsPlaceholder("$e"));
  CHECK(IsPlaceholder("$person"));
  CHECK_FALSE(IsPlaceholder("$"));
  CHECK_FALSE(IsPlaceholder("e"));
  CHECK(Tokenize("when was $e born") == Tokens{"when", "was", "$e", "born"});
}

TEST_CASE("span replacement and substitution") {
  Tokens q = Tokenize("when was barack obama born");
  Tokens r = ReplaceSpan(q, {2, 4}, "$e");
  CHECK(r == Tokens{"when", "was", "$e", "born"});
  Tokens v{"michelle", "obama"};
  CHECK(Substitute(r, "$e", v) ==
        Tokens{"when", "was", "michelle", "obama", "born"});
  CHECK(Substitute(Tokens{"a"}, "$e", v) == Tokens{"a"});
}

TEST_CASE("normalize, split, trim") {
  CHECK(NormalizePhrase("Michelle  Obama") == "michelle obama");
  CHECK(SplitKey("when was $person born") ==
        Tokens{"when", "was", "$person", "born"});
  CHECK(SplitKey("") == Tokens{});
  CHECK(Trim("  x y \t") == "x y");
  CHECK(SplitTabs("a\tb\t\tc") == std::vector<std::string>{"a", "b", "", "c"});
}
