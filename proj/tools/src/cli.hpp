#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace coc::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kUsage = 2 };

// Parses argv and dispatches to a subcommand. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

struct GenerateOptions {
    std::filesystem::path config;
    std::vector<std::filesystem::path> corpora;
    std::optional<std::filesystem::path> run_dir;
    bool resume = false;
    std::optional<std::uint64_t> seed;
    std::optional<int> branching;
    std::optional<int> depth;
    bool no_early_stop = false;
    std::optional<std::size_t> concurrency;
};

struct EvaluateOptions {
    std::filesystem::path config;
    std::filesystem::path task;
    std::optional<std::filesystem::path> run_dir;
    std::vector<std::string> strategies;
    std::vector<int> rounds;
    std::vector<std::string> ablations;
    std::optional<std::string> lengths;
    std::vector<std::filesystem::path> template_files;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> concurrency;
};

struct StatsOptions {
    std::filesystem::path run_dir;
};

struct ValidateOptions {
    std::filesystem::path path;
    std::optional<std::string> kind;
    std::optional<std::filesystem::path> verdicts;
};

struct RecipeOptions {
    std::string stage;
    std::filesystem::path out;
};

int cmd_generate(const GenerateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_stats(const StatsOptions& opts, std::ostream& out, std::ostream& err);
int cmd_validate(const ValidateOptions& opts, std::ostream& out, std::ostream& err);
int cmd_export_recipe(const RecipeOptions& opts, std::ostream& out, std::ostream& err);

// Files shared by the subcommands.
std::string versions_stamp();

}  // namespace coc::cli
