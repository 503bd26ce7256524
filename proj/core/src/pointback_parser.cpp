#include "coc/pointback_parser.hpp"

#include <algorithm>
#include <cstdint>
#include <string>

namespace coc {

namespace {

bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

constexpr std::int64_t kNumberCap = 1'000'000'000;

class Scanner {
public:
    Scanner(std::string_view text, int chunk_count) : s_(text), n_(chunk_count) {}

    PointbackParse run() {
        if (bare_enumeration()) {
            return finish();
        }
        for (std::size_t i = 0; i < s_.size();) {
            const std::size_t after = keyword_at(i);
            if (after == 0) {
                ++i;
                continue;
            }
            i = enumeration(after);
        }
        return finish();
    }

private:
    // Position right after "para", "paras", "paragraph" or "paragraphs" when
    // one starts at i on a word boundary; 0 otherwise.
    std::size_t keyword_at(std::size_t i) const {
        if (i > 0 && is_alpha(s_[i - 1])) {
            return 0;
        }
        constexpr std::string_view para = "para";
        if (s_.size() - i < para.size()) {
            return 0;
        }
        for (std::size_t k = 0; k < para.size(); ++k) {
            if (lower(s_[i + k]) != para[k]) {
                return 0;
            }
        }
        std::size_t j = i + para.size();
        std::size_t end = j;
        while (end < s_.size() && is_alpha(s_[end])) {
            ++end;
        }
        std::string rest;
        for (std::size_t k = j; k < end; ++k) {
            rest.push_back(lower(s_[k]));
        }
        if (rest.empty() || rest == "s" || rest == "graph" || rest == "graphs") {
            return end;
        }
        return 0;
    }

    std::size_t skip_space(std::size_t i) const {
        while (i < s_.size() && is_space(s_[i])) {
            ++i;
        }
        return i;
    }

    // Reads an integer at i; returns the end position, or i when none.
    std::size_t number(std::size_t i, std::int64_t& value) const {
        std::size_t j = i;
        value = 0;
        while (j < s_.size() && is_digit(s_[j])) {
            if (value < kNumberCap) {
                value = value * 10 + (s_[j] - '0');
            }
            ++j;
        }
        if (j == i) {
            return i;
        }
        // "3rd", "12b" and "3.5" are not paragraph numbers.
        if (j < s_.size() && (is_alpha(s_[j]) || (s_[j] == '.' && j + 1 < s_.size() && is_digit(s_[j + 1])))) {
            return i;
        }
        return j;
    }

    bool word_at(std::size_t i, std::string_view w) const {
        if (s_.size() - i < w.size()) {
            return false;
        }
        for (std::size_t k = 0; k < w.size(); ++k) {
            if (lower(s_[i + k]) != w[k]) {
                return false;
            }
        }
        const std::size_t end = i + w.size();
        return end == s_.size() || !is_alpha(s_[end]);
    }

    // Parses "N", "N, M and K", "N-M", "N to M" after a keyword.
    std::size_t enumeration(std::size_t i) {
        std::size_t j = skip_space(i);
        if (j < s_.size() && s_[j] == '#') {
            j = skip_space(j + 1);
        }
        std::int64_t first = 0;
        std::size_t k = number(j, first);
        if (k == j) {
            return i;
        }
        add(first);
        std::int64_t last = first;
        for (;;) {
            std::size_t p = skip_space(k);
            bool range = false;
            if (p < s_.size() && (s_[p] == '-' || s_[p] == '~')) {
                range = true;
                ++p;
            } else if (word_at(p, "to")) {
                range = true;
                p += 2;
            } else {
                bool sep = false;
                while (p < s_.size()) {
                    if (s_[p] == ',' || s_[p] == ';' || s_[p] == '&' || s_[p] == '/') {
                        ++p;
                    } else if (word_at(p, "and")) {
                        p += 3;
                    } else if (word_at(p, "or")) {
                        p += 2;
                    } else {
                        break;
                    }
                    sep = true;
                    p = skip_space(p);
                }
                if (!sep) {
                    return k;
                }
                // "paragraphs 2, and para 5" lets the keyword repeat.
                if (const auto kw = keyword_at(p); kw != 0) {
                    p = skip_space(kw);
                    if (p < s_.size() && s_[p] == '#') {
                        p = skip_space(p + 1);
                    }
                }
            }
            p = skip_space(p);
            std::int64_t value = 0;
            const std::size_t q = number(p, value);
            if (q == p) {
                return k;
            }
            if (range && value >= last) {
                add_range(last + 1, value);
            } else {
                add(value);
            }
            last = value;
            k = q;
        }
    }

    // True when the whole reply is integers and list punctuation.
    bool bare_enumeration() {
        std::vector<std::int64_t> found;
        std::size_t i = 0;
        while (i < s_.size()) {
            const char c = s_[i];
            if (is_space(c) || c == ',' || c == ';' || c == '[' || c == ']' || c == '(' || c == ')' || c == '.' ||
                c == '&') {
                ++i;
            } else if (word_at(i, "and")) {
                i += 3;
            } else if (is_digit(c)) {
                std::int64_t v = 0;
                const std::size_t j = number(i, v);
                if (j == i) {
                    return false;
                }
                found.push_back(v);
                i = j;
            } else {
                return false;
            }
        }
        if (found.empty()) {
            return false;
        }
        for (auto v : found) {
            add(v);
        }
        return true;
    }

    void add(std::int64_t v) {
        ++out_.references;
        if (v >= 1 && v <= n_) {
            out_.indices.push_back(static_cast<int>(v));
        }
    }

    void add_range(std::int64_t from, std::int64_t to) {
        out_.references += static_cast<std::size_t>(to - from + 1);
        const std::int64_t lo = std::max<std::int64_t>(from, 1);
        const std::int64_t hi = std::min<std::int64_t>(to, n_);
        for (std::int64_t v = lo; v <= hi; ++v) {
            out_.indices.push_back(static_cast<int>(v));
        }
    }

    PointbackParse finish() {
        std::sort(out_.indices.begin(), out_.indices.end());
        out_.indices.erase(std::unique(out_.indices.begin(), out_.indices.end()), out_.indices.end());
        return std::move(out_);
    }

    std::string_view s_;
    int n_;
    PointbackParse out_;
};

}  // namespace

PointbackParse parse_pointback(std::string_view reply, int chunk_count) {
    try {
        return Scanner(reply, chunk_count).run();
    } catch (...) {
        return {};
    }
}

std::optional<bool> parse_yes_no(std::string_view reply) {
    bool yes = false;
    bool no = false;
    std::optional<bool> first;
    std::string word;
    auto flush = [&] {
        if (word == "yes") {
            yes = true;
            if (!first) {
                first = true;
            }
        } else if (word == "no") {
            no = true;
            if (!first) {
                first = false;
            }
        }
        word.clear();
    };
    for (char c : reply) {
        if (is_alpha(c)) {
            word.push_back(lower(c));
        } else {
            flush();
        }
    }
    flush();
    if (yes && no) {
        return std::nullopt;
    }
    return first;
}

}  // namespace coc
