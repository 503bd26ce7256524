#include <gtest/gtest.h>

#include <random>
#include <string>

#include "coc/tokenizer.hpp"

namespace coc {
namespace {

std::vector<std::string> pieces(std::string_view text) {
    std::vector<std::string> out;
    for (auto s : default_tokenizer().spans(text)) {
        out.emplace_back(text.substr(s.begin, s.end - s.begin));
    }
    return out;
}

TEST(Tokenizer, WordsAndPunctuation) {
    EXPECT_EQ(pieces("Hello, world!"), (std::vector<std::string>{"Hello", ",", "world", "!"}));
    EXPECT_EQ(pieces("  a-b  "), (std::vector<std::string>{"a", "-", "b"}));
    EXPECT_EQ(pieces("<para 12>"), (std::vector<std::string>{"<", "para", "12", ">"}));
}

TEST(Tokenizer, EmptyAndWhitespace) {
    EXPECT_EQ(default_tokenizer().count(""), 0u);
    EXPECT_EQ(default_tokenizer().count(" \t\n\r "), 0u);
}

TEST(Tokenizer, Utf8StaysInOneWord) {
    EXPECT_EQ(pieces("caf\xc3\xa9 na\xc3\xafve"), (std::vector<std::string>{"caf\xc3\xa9", "na\xc3\xafve"}));
}

TEST(Tokenizer, CountMatchesSpansOnRandomText) {
    std::mt19937 gen(3);
    const std::string alphabet = "ab1 ,.\n-\xc3";
    for (int trial = 0; trial < 200; ++trial) {
        std::string text;
        const int len = static_cast<int>(gen() % 80);
        for (int i = 0; i < len; ++i) {
            text += alphabet[gen() % alphabet.size()];
        }
        const auto spans = default_tokenizer().spans(text);
        EXPECT_EQ(default_tokenizer().count(text), spans.size());
        std::size_t prev_end = 0;
        for (auto s : spans) {
            EXPECT_LT(s.begin, s.end);
            EXPECT_GE(s.begin, prev_end);
            prev_end = s.end;
        }
    }
}

}  // namespace
}  // namespace coc
