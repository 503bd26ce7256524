#pragma once

#include <optional>
#include <string_view>
#include <vector>

namespace coc {

struct PointbackParse {
    // Sorted, unique, all within [1, chunk_count].
    std::vector<int> indices;
    // Paragraph references recognised before range filtering.
    std::size_t references = 0;
};

// Accepts three reply shapes:
//   keyword form     "para 3", "paras 2, 2, 9", "paragraphs 4 and 5"
//   tag form         "<para 3>", "</para 3>"
//   bare enumeration a reply consisting only of integers and list
//                    punctuation, e.g. "3, 7" or "[2; 5]"
// Bare numbers elsewhere in prose are ignored. Never throws.
PointbackParse parse_pointback(std::string_view reply, int chunk_count);

// "yes"/"no" as the first such word in the reply; nullopt when absent or
// when both appear.
std::optional<bool> parse_yes_no(std::string_view reply);

}  // namespace coc
