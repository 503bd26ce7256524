#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace coc {

enum class Stage {
    system,
    context,
    raise_question,
    pointback,
    answer_clarification,
    final_answer,
    relevance,
};

inline constexpr std::size_t kStageCount = 7;

std::string_view to_string(Stage stage);
Stage stage_from_string(std::string_view name);

// Variant pools per prompt stage. The first variant of every workflow stage
// is the canonical wording; the rest are paraphrases used to keep finetuning
// data from collapsing onto one phrasing. "context" has no template.
class PromptTemplates {
public:
    // Built-in pools (four variants per workflow stage).
    static PromptTemplates builtin();

    // Reads {"system": [...], "raise_question": [...], ...}. Stages missing
    // from the file keep their built-in pool.
    static PromptTemplates load(const std::filesystem::path& path);

    // Restricts every pool to its first n variants (n >= 1).
    void limit_pool_size(std::size_t n);

    const std::vector<std::string>& variants(Stage stage) const;
    void set_variants(Stage stage, std::vector<std::string> variants);

    // Seeded choice: the same (seed, stage, round) always picks the same
    // variant.
    const std::string& select(Stage stage, std::uint64_t seed, std::uint64_t round = 0) const;

private:
    std::array<std::vector<std::string>, kStageCount> pools_;
};

// Fills the single {clarification} slot of a relevance template.
std::string render_relevance_prompt(std::string_view paragraph_block, std::string_view templ,
                                    std::string_view clarification);

}  // namespace coc
