#pragma once

#include <cstddef>
#include <memory>
#include <string_view>
#include <vector>

namespace coc {

// Byte range [begin, end) of one token inside the tokenized text.
struct TokenSpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};

// Adapter interface for whatever tokenizer the token budgets are measured
// in. Implementations must be deterministic and thread-safe.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;

    virtual std::vector<TokenSpan> spans(std::string_view text) const = 0;

    virtual std::size_t count(std::string_view text) const { return spans(text).size(); }
};

// Default adapter: every maximal run of word bytes is one piece, every ASCII
// punctuation byte is its own piece, whitespace is never a piece. Bytes >= 0x80
// count as word bytes, so UTF-8 sequences are never split.
class WhitespacePunctTokenizer final : public Tokenizer {
public:
    std::vector<TokenSpan> spans(std::string_view text) const override;
    std::size_t count(std::string_view text) const override;
};

const Tokenizer& default_tokenizer();

}  // namespace coc
