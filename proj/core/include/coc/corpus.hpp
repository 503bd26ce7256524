#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "coc/tokenizer.hpp"

namespace coc {

struct Document {
    std::string id;
    std::string text;
    std::string source;

    bool operator==(const Document&) const = default;
};

struct Chunk {
    int index = 0;  // 1-based
    std::string text;
    std::size_t token_count = 0;

    bool operator==(const Chunk&) const = default;
};

struct QAItem {
    std::string id;
    std::string document_id;
    std::string question;
    std::vector<std::string> gold_answers;
    std::optional<std::vector<int>> gold_evidence;

    bool operator==(const QAItem&) const = default;
};

enum class LengthMode { pad_distractors, truncate_prefix };

struct LengthSpec {
    std::size_t target_tokens = 8192;
    LengthMode mode = LengthMode::pad_distractors;
};

inline constexpr std::size_t kDefaultChunkSize = 512;

// 8K, 16K, 32K, 64K, 128K
const std::vector<std::size_t>& default_length_ladder();

std::string_view to_string(LengthMode mode);
LengthMode length_mode_from_string(std::string_view name);

// Greedy left-to-right split into chunks of exactly chunk_size_tokens tokens
// (the last may be shorter). Chunk k spans from the first byte of its first
// token up to the first byte of chunk k+1, so leading whitespace belongs to
// chunk 1 and the concatenation of all chunk texts is the input.
std::vector<Chunk> chunk_document(const Document& doc, std::size_t chunk_size_tokens,
                                  const Tokenizer& tokenizer = default_tokenizer());

// "<para 1> aa </para 1> <para 2> bb </para 2>"
std::string render_tagged_context(const std::vector<Chunk>& chunks);

// Inverse of render_tagged_context. Token counts are recomputed.
std::vector<Chunk> parse_tagged_context(std::string_view rendered,
                                        const Tokenizer& tokenizer = default_tokenizer());

struct SynthesizedContext {
    Document document;
    std::size_t token_count = 0;
    // Pad mode: number of base chunks kept and distractor chunks inserted.
    std::size_t kept_chunks = 0;
    std::size_t distractor_chunks = 0;
    // Chunk indices of the gold evidence in base that did not survive
    // truncation (always empty in pad mode).
    std::vector<int> gold_cut;
};

// Builds a context of roughly spec.target_tokens tokens for item.
//
// pad_distractors: keeps base's gold-evidence chunks (all base chunks when
// the item has no gold evidence) in their original relative order and
// interleaves distractor chunks sampled without replacement from the pool
// (documents sharing base's id are skipped). The result is within one chunk
// of the target. Pieces are joined with a blank line.
//
// truncate_prefix: the first target_tokens tokens of base, verbatim.
SynthesizedContext synthesize_context(const QAItem& item, const Document& base,
                                      const std::vector<Document>& distractor_pool,
                                      const LengthSpec& spec, std::uint64_t seed,
                                      std::size_t chunk_size_tokens = kDefaultChunkSize,
                                      const Tokenizer& tokenizer = default_tokenizer());

std::size_t count_tokens(std::string_view text, const Tokenizer& tokenizer = default_tokenizer());

struct Corpus {
    std::vector<Document> documents;
    std::vector<QAItem> items;

    const Document* find_document(std::string_view id) const;
};

// Reads corpus JSONL. A line with a "question" key is a QA item, any other
// line is a document. Throws CorpusParseError naming the offending line.
Corpus load_corpus(const std::filesystem::path& path);
void load_corpus_into(Corpus& corpus, const std::filesystem::path& path);

// Checks cross-record invariants: unique nonempty ids, nonempty text,
// items pointing at existing documents, gold_evidence within range.
void validate_corpus(const Corpus& corpus, std::size_t chunk_size_tokens,
                     const Tokenizer& tokenizer = default_tokenizer());

void to_json(nlohmann::json& j, const Document& doc);
void from_json(const nlohmann::json& j, Document& doc);
void to_json(nlohmann::json& j, const QAItem& item);
void from_json(const nlohmann::json& j, QAItem& item);
void to_json(nlohmann::json& j, const Chunk& chunk);

}  // namespace coc
