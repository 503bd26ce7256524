#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "coc/pointback_parser.hpp"

namespace coc {
namespace {

std::vector<int> idx(std::string_view reply, int n = 20) { return parse_pointback(reply, n).indices; }

TEST(Pointback, KeywordForms) {
    EXPECT_EQ(idx("para 3"), std::vector<int>{3});
    EXPECT_EQ(idx("See paras 9, 2, 2."), (std::vector<int>{2, 9}));
    EXPECT_EQ(idx("Paragraphs 4 and 5 are relevant"), (std::vector<int>{4, 5}));
    EXPECT_EQ(idx("Paragraph #7 or paragraph 1"), (std::vector<int>{1, 7}));
    EXPECT_EQ(idx("paragraphs 2, and para 5"), (std::vector<int>{2, 5}));
    EXPECT_EQ(idx("paragraphs 3-6"), (std::vector<int>{3, 4, 5, 6}));
    EXPECT_EQ(idx("paras 8 to 10; 12"), (std::vector<int>{8, 9, 10, 12}));
    EXPECT_EQ(idx("para 1/para 2 & 3"), (std::vector<int>{1, 2, 3}));
}

TEST(Pointback, TagForms) {
    EXPECT_EQ(idx("<para 3> <para 11>"), (std::vector<int>{3, 11}));
    EXPECT_EQ(idx("Relevant: </para 4>"), std::vector<int>{4});
}

TEST(Pointback, BareEnumerationOnlyWhenWholeReply) {
    EXPECT_EQ(idx("3, 7"), (std::vector<int>{3, 7}));
    EXPECT_EQ(idx("[2; 5]"), (std::vector<int>{2, 5}));
    EXPECT_EQ(idx("(1) and (4)."), (std::vector<int>{1, 4}));
    EXPECT_TRUE(idx("In 1911 there were 3 ships").empty());
    EXPECT_TRUE(idx("").empty());
}

TEST(Pointback, RejectsNonParagraphNumbers) {
    EXPECT_TRUE(idx("para 3rd").empty());
    EXPECT_TRUE(idx("para 3.5").empty());
    EXPECT_TRUE(idx("paranoid 4").empty());
    EXPECT_TRUE(idx("comparable 4").empty());
    EXPECT_TRUE(idx("paragraph").empty());
}

TEST(Pointback, OutOfRangeIsCountedButDropped) {
    const auto p = parse_pointback("paras 0, 3, 99", 5);
    EXPECT_EQ(p.indices, std::vector<int>{3});
    EXPECT_EQ(p.references, 3u);
    const auto none = parse_pointback("none of them", 5);
    EXPECT_EQ(none.references, 0u);
    const auto huge = parse_pointback("paras 2-99999999999999999999", 4);
    EXPECT_EQ(huge.indices, (std::vector<int>{2, 3, 4}));
}

TEST(Pointback, GeneratedRepliesRoundTrip) {
    std::mt19937 gen(5);
    const std::vector<std::string> seps{", ", " and ", "; ", " & ", " or ", ",and "};
    for (int trial = 0; trial < 2000; ++trial) {
        const int n = 1 + static_cast<int>(gen() % 30);
        std::set<int> chosen;
        const int k = 1 + static_cast<int>(gen() % 6);
        for (int i = 0; i < k; ++i) {
            chosen.insert(1 + static_cast<int>(gen() % (n + 5)));
        }
        std::vector<int> order(chosen.begin(), chosen.end());
        std::shuffle(order.begin(), order.end(), gen);
        std::string reply;
        switch (gen() % 3) {
            case 0:
                reply = "Relevant paragraphs ";
                for (std::size_t i = 0; i < order.size(); ++i) {
                    reply += (i ? seps[gen() % seps.size()] : "") + std::to_string(order[i]);
                }
                reply += ".";
                break;
            case 1:
                for (int v : order) {
                    reply += "<para " + std::to_string(v) + "> ";
                }
                break;
            default:
                for (std::size_t i = 0; i < order.size(); ++i) {
                    reply += (i ? ", " : "") + std::to_string(order[i]);
                }
        }
        std::vector<int> expected;
        for (int v : chosen) {
            if (v <= n) {
                expected.push_back(v);
            }
        }
        const auto got = parse_pointback(reply, n);
        EXPECT_EQ(got.indices, expected) << reply;
        EXPECT_EQ(got.references, chosen.size()) << reply;
    }
}

TEST(Pointback, RandomBytesStayWellFormed) {
    std::mt19937 gen(17);
    const std::string alphabet = "para graphs0123456789,;&/-#<>[]().to and or\n\xff";
    for (int trial = 0; trial < 3000; ++trial) {
        std::string reply;
        const int len = static_cast<int>(gen() % 120);
        for (int i = 0; i < len; ++i) {
            reply += alphabet[gen() % alphabet.size()];
        }
        const int n = static_cast<int>(gen() % 40);
        const auto got = parse_pointback(reply, n);
        EXPECT_TRUE(std::is_sorted(got.indices.begin(), got.indices.end()));
        EXPECT_EQ(std::adjacent_find(got.indices.begin(), got.indices.end()), got.indices.end());
        for (int v : got.indices) {
            EXPECT_GE(v, 1);
            EXPECT_LE(v, n);
        }
    }
}

TEST(YesNo, FirstWordAndConflicts) {
    EXPECT_EQ(parse_yes_no("Yes."), std::optional<bool>(true));
    EXPECT_EQ(parse_yes_no("NO, it is not"), std::optional<bool>(false));
    EXPECT_EQ(parse_yes_no("I'd say yes, it names the treasurer"), std::optional<bool>(true));
    EXPECT_EQ(parse_yes_no("yes and no"), std::nullopt);
    EXPECT_EQ(parse_yes_no("eyes nod"), std::nullopt);
    EXPECT_EQ(parse_yes_no(""), std::nullopt);
}

}  // namespace
}  // namespace coc
