#include "coc/tokenizer.hpp"

namespace coc {
namespace {

enum class ByteClass { space, punct, word };

ByteClass classify(unsigned char c) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
        return ByteClass::space;
    }
    if (c < 0x80 && ((c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') ||
                     (c >= '{' && c <= '~'))) {
        return ByteClass::punct;
    }
    // Letters, digits, control bytes and UTF-8 sequences.
    return ByteClass::word;
}

template <typename Emit>
void scan(std::string_view text, Emit&& emit) {
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const auto cls = classify(static_cast<unsigned char>(text[i]));
        if (cls == ByteClass::space) {
            ++i;
        } else if (cls == ByteClass::punct) {
            emit(i, i + 1);
            ++i;
        } else {
            std::size_t j = i + 1;
            while (j < n && classify(static_cast<unsigned char>(text[j])) == ByteClass::word) {
                ++j;
            }
            emit(i, j);
            i = j;
        }
    }
}

}  // namespace

std::vector<TokenSpan> WhitespacePunctTokenizer::spans(std::string_view text) const {
    std::vector<TokenSpan> out;
    scan(text, [&](std::size_t b, std::size_t e) { out.push_back({b, e}); });
    return out;
}

std::size_t WhitespacePunctTokenizer::count(std::string_view text) const {
    std::size_t n = 0;
    scan(text, [&](std::size_t, std::size_t) { ++n; });
    return n;
}

const Tokenizer& default_tokenizer() {
    static const WhitespacePunctTokenizer instance;
    return instance;
}

}  // namespace coc
