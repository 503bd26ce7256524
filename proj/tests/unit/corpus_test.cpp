#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <string>

#include "coc/corpus.hpp"
#include "coc/errors.hpp"
#include "test_support.hpp"

namespace coc {
namespace {

std::string words(std::size_t n, std::string_view stem = "w") {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            out += i % 9 == 0 ? ".\n" : " ";
        }
        out += std::string(stem) + std::to_string(i);
    }
    return out;
}

TEST(Chunking, SizesAndConcatenation) {
    Document doc{"d", "  " + words(25), ""};
    const auto tokens = count_tokens(doc.text);
    const auto chunks = chunk_document(doc, 7);
    ASSERT_EQ(chunks.size(), (tokens + 6) / 7);
    std::string joined;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        EXPECT_EQ(chunks[i].index, static_cast<int>(i + 1));
        EXPECT_EQ(chunks[i].token_count, count_tokens(chunks[i].text));
        if (i + 1 < chunks.size()) {
            EXPECT_EQ(chunks[i].token_count, 7u);
        }
        joined += chunks[i].text;
    }
    EXPECT_EQ(joined, doc.text);
}

TEST(Chunking, PropertyOverRandomDocuments) {
    std::mt19937 gen(11);
    for (int trial = 0; trial < 100; ++trial) {
        Document doc{"d", words(1 + gen() % 300), ""};
        const std::size_t size = 1 + gen() % 40;
        const auto chunks = chunk_document(doc, size);
        std::string joined;
        std::size_t total = 0;
        for (const auto& c : chunks) {
            joined += c.text;
            total += c.token_count;
            EXPECT_LE(c.token_count, size);
            EXPECT_GT(c.token_count, 0u);
        }
        EXPECT_EQ(joined, doc.text);
        EXPECT_EQ(total, count_tokens(doc.text));
    }
}

TEST(Chunking, EmptyDocumentThrows) {
    EXPECT_THROW(chunk_document(Document{"e", "   \n", ""}, 8), EmptyDocument);
    EXPECT_THROW(chunk_document(Document{"e", "x", ""}, 0), Error);
}

TEST(TaggedContext, RenderAndParseBack) {
    Document doc{"d", words(40), ""};
    const auto chunks = chunk_document(doc, 9);
    const auto rendered = render_tagged_context(chunks);
    EXPECT_EQ(rendered.rfind("<para 1> ", 0), 0u);
    EXPECT_NE(rendered.find(" </para 5>"), std::string::npos);
    EXPECT_EQ(parse_tagged_context(rendered), chunks);
}

TEST(TaggedContext, MalformedInputThrows) {
    EXPECT_THROW(parse_tagged_context("<para 1> text"), Error);
    EXPECT_THROW(parse_tagged_context("para 1"), Error);
}

TEST(Synthesis, PadKeepsGoldChunksInOrder) {
    Document base{"base", words(200, "b"), ""};
    std::vector<Document> pool;
    for (int i = 0; i < 6; ++i) {
        pool.push_back(Document{"x" + std::to_string(i), words(300, "x" + std::to_string(i) + "_"), ""});
    }
    pool.push_back(base);
    QAItem item{"q", "base", "?", {"a"}, std::vector<int>{4, 2}};
    const auto base_chunks = chunk_document(base, 32);
    const auto out = synthesize_context(item, base, pool, LengthSpec{1024, LengthMode::pad_distractors}, 5, 32);
    EXPECT_LE(out.token_count, 1024u);
    EXPECT_GE(out.token_count + 32, 1024u);
    EXPECT_EQ(out.kept_chunks, 2u);
    const auto p2 = out.document.text.find(base_chunks[1].text);
    const auto p4 = out.document.text.find(base_chunks[3].text);
    ASSERT_NE(p2, std::string::npos);
    ASSERT_NE(p4, std::string::npos);
    EXPECT_LT(p2, p4);
    // Other base chunks never leak in, even though base sits in the pool.
    EXPECT_EQ(out.document.text.find(base_chunks[0].text), std::string::npos);
    EXPECT_TRUE(out.gold_cut.empty());
}

TEST(Synthesis, DeterministicPerSeed) {
    Document base{"base", words(100, "b"), ""};
    std::vector<Document> pool{Document{"x", words(3000, "x"), ""}};
    QAItem item{"q", "base", "?", {"a"}, std::vector<int>{1}};
    const LengthSpec spec{512, LengthMode::pad_distractors};
    const auto a = synthesize_context(item, base, pool, spec, 9, 16);
    const auto b = synthesize_context(item, base, pool, spec, 9, 16);
    const auto c = synthesize_context(item, base, pool, spec, 10, 16);
    EXPECT_EQ(a.document.text, b.document.text);
    EXPECT_NE(a.document.text, c.document.text);
}

TEST(Synthesis, Errors) {
    Document base{"base", words(100, "b"), ""};
    QAItem item{"q", "base", "?", {"a"}, std::vector<int>{1, 2, 3}};
    EXPECT_THROW(synthesize_context(item, base, {}, LengthSpec{8, LengthMode::pad_distractors}, 1, 16),
                 TargetTooSmall);
    EXPECT_THROW(synthesize_context(item, base, {}, LengthSpec{40, LengthMode::pad_distractors}, 1, 16),
                 TargetTooSmall);
    EXPECT_THROW(synthesize_context(item, base, {}, LengthSpec{4096, LengthMode::pad_distractors}, 1, 16),
                 InsufficientDistractors);
    std::vector<Document> small{Document{"x", words(50, "x"), ""}};
    EXPECT_THROW(synthesize_context(item, base, small, LengthSpec{4096, LengthMode::pad_distractors}, 1, 16),
                 InsufficientDistractors);
}

TEST(Synthesis, TruncateIsExactPrefixAndReportsCutGold) {
    Document base{"base", words(100, "b"), ""};
    QAItem item{"q", "base", "?", {"a"}, std::vector<int>{1, 5}};
    const auto out = synthesize_context(item, base, {}, LengthSpec{50, LengthMode::truncate_prefix}, 1, 16);
    EXPECT_EQ(out.token_count, 50u);
    EXPECT_EQ(count_tokens(out.document.text), 50u);
    EXPECT_EQ(base.text.rfind(out.document.text, 0), 0u);
    EXPECT_EQ(out.gold_cut, std::vector<int>{5});
    const auto whole = synthesize_context(item, base, {}, LengthSpec{100000, LengthMode::truncate_prefix}, 1, 16);
    EXPECT_EQ(whole.document.text, base.text);
    EXPECT_TRUE(whole.gold_cut.empty());
}

TEST(LengthMode, Names) {
    EXPECT_EQ(length_mode_from_string("pad"), LengthMode::pad_distractors);
    EXPECT_EQ(length_mode_from_string("truncate_prefix"), LengthMode::truncate_prefix);
    EXPECT_THROW(length_mode_from_string("zip"), ConfigError);
    EXPECT_EQ(default_length_ladder(), (std::vector<std::size_t>{8192, 16384, 32768, 65536, 131072}));
}

TEST(CorpusLoad, ReadsDocumentsAndItems) {
    const auto corpus = load_corpus(test::data_dir() / "toy" / "corpus.jsonl");
    EXPECT_EQ(corpus.documents.size(), 3u);
    EXPECT_EQ(corpus.items.size(), 3u);
    ASSERT_NE(corpus.find_document("saltmere"), nullptr);
    EXPECT_EQ(corpus.find_document("nope"), nullptr);
    EXPECT_NO_THROW(validate_corpus(corpus, 64));
}

TEST(CorpusLoad, ReportsBadLine) {
    test::TempDir dir;
    {
        std::ofstream out(dir / "c.jsonl");
        out << R"({"id": "a", "text": "some text"})" << "\n";
        out << R"({"id": "b", "text": )" << "\n";
    }
    try {
        load_corpus(dir / "c.jsonl");
        FAIL() << "expected CorpusParseError";
    } catch (const CorpusParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
    }
}

TEST(CorpusValidate, CrossRecordInvariants) {
    Corpus c;
    c.documents.push_back(Document{"a", words(20), ""});
    c.items.push_back(QAItem{"q", "a", "?", {"x"}, std::vector<int>{1}});
    EXPECT_NO_THROW(validate_corpus(c, 8));
    auto missing = c;
    missing.items[0].document_id = "zzz";
    EXPECT_THROW(validate_corpus(missing, 8), Error);
    auto out_of_range = c;
    out_of_range.items[0].gold_evidence = std::vector<int>{99};
    EXPECT_THROW(validate_corpus(out_of_range, 8), Error);
    auto dup = c;
    dup.documents.push_back(dup.documents[0]);
    EXPECT_THROW(validate_corpus(dup, 8), Error);
    auto no_gold = c;
    no_gold.items[0].gold_answers.clear();
    EXPECT_THROW(validate_corpus(no_gold, 8), Error);
}

}  // namespace
}  // namespace coc
