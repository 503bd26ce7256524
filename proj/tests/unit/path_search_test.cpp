#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "coc/call_log.hpp"
#include "coc/errors.hpp"
#include "coc/path_search.hpp"
#include "test_support.hpp"

namespace coc {
namespace {

struct Scenario {
    Corpus corpus = load_corpus(test::data_dir() / "scripts" / "scenario_corpus.jsonl");
    PromptTemplates templates = PromptTemplates::builtin();
    std::unique_ptr<Gateway> worker;
    std::unique_ptr<Gateway> judge = test::scripted_file_gateway(test::data_dir() / "toy" / "judge.jsonl", "judge");
    std::unique_ptr<Scorer> scorer = std::make_unique<Scorer>(*judge);

    explicit Scenario(std::string_view script)
        : worker(test::scripted_file_gateway(test::data_dir() / "scripts" / script, "worker")) {}
    Scenario(std::shared_ptr<ChatBackend> backend) : worker(std::make_unique<Gateway>(backend, test::mock_config("worker"))) {}

    const QAItem& item() const { return corpus.items.front(); }
    const Document& doc() const { return *corpus.find_document(item().document_id); }

    SearchResult run(SearchConfig cfg, JsonlWriter* log = nullptr) {
        PathSearch search(*worker, *scorer, templates, cfg);
        return search.search(item(), doc(), log);
    }
};

SearchConfig scenario_config() {
    SearchConfig cfg;
    cfg.branching = 8;
    cfg.max_depth = 3;
    cfg.chunk_size = 64;
    cfg.seed = 42;
    return cfg;
}

TEST(PathSearch, TwoStepChainSolvesAtDepthTwo) {
    Scenario s("chain2.jsonl");
    test::TempDir dir;
    SearchResult result;
    {
        JsonlWriter log(dir / "tree.jsonl", false);
        result = s.run(scenario_config(), &log);
    }
    EXPECT_TRUE(result.solved);
    EXPECT_EQ(result.solved_depth, 2);
    EXPECT_EQ(result.expansions, 16u);
    EXPECT_EQ(result.tree.size(), 16u);
    const auto& best = result.tree[result.best_node];
    EXPECT_EQ(best.depth, 2);
    EXPECT_EQ(best.branch, 0);
    ASSERT_TRUE(best.parent.has_value());
    EXPECT_EQ(result.tree[*best.parent].branch, 3);
    EXPECT_EQ(result.best_trace.final_answer, "The north gate.");
    ASSERT_EQ(result.best_trace.steps.size(), 2u);
    EXPECT_EQ(result.best_trace.steps[0].clarification, "Where were the carts loaded?");
    EXPECT_EQ(result.best_trace.steps[1].clarification, "Which gate is nearest to the east shed?");
    EXPECT_TRUE(result.best_trace.steps[0].final_answer.empty());
    EXPECT_EQ(check_transcript_grammar(result.best_trace.transcript, result.best_trace.stages), "");
    // Depth-1 children hang off the selected node only.
    EXPECT_EQ(result.tree[*best.parent].children.size(), 8u);

    std::map<std::string, int> events;
    for (const auto& e : read_jsonl(dir / "tree.jsonl")) {
        ++events[e.at("event").get<std::string>()];
        EXPECT_EQ(e.at("item_id"), "q-gate");
    }
    EXPECT_EQ(events["expand"], 16);
    EXPECT_EQ(events["score"], 16);
    EXPECT_EQ(events["select"], 1);
    EXPECT_EQ(events["stop"], 1);
}

TEST(PathSearch, EarlyStopAtDepthOne) {
    Scenario s("early_stop.jsonl");
    const auto result = s.run(scenario_config());
    EXPECT_TRUE(result.solved);
    EXPECT_EQ(result.solved_depth, 1);
    EXPECT_EQ(result.expansions, 8u);
    EXPECT_EQ(result.tree[result.best_node].branch, 5);
    EXPECT_EQ(result.negatives.size(), 7u);
}

TEST(PathSearch, NoEarlyStopKeepsExpanding) {
    Scenario s("early_stop.jsonl");
    auto cfg = scenario_config();
    cfg.early_stop_on_correct = false;
    const auto result = s.run(cfg);
    EXPECT_EQ(result.expansions, 24u);
    EXPECT_TRUE(result.solved);
}

TEST(PathSearch, DeterministicAndConcurrencyInvariant) {
    Scenario a("chain2.jsonl");
    Scenario b("chain2.jsonl");
    auto cfg = scenario_config();
    const auto serial = a.run(cfg);
    cfg.concurrency = 4;
    const auto parallel = b.run(cfg);
    EXPECT_EQ(serial, parallel);
    EXPECT_EQ(nlohmann::json(serial).dump(), nlohmann::json(parallel).dump());
}

TEST(PathSearch, DuplicateClarificationsCollapse) {
    const std::string script = std::string(R"({"match": {"regex": "is this paragraph relevant"}, "reply": "Yes."}
{"match": {"regex": "one (clarifying )?question"}, "replies": ["Same?", "Same?", "Other?", "Same?"]}
{"match": {"regex": "context above|relevant context|clarifying question|highlighted"}, "reply": "Dunno."}
{"match": {"regex": "final question|original question"}, "reply": "no idea"})");
    Scenario s(test::script_backend(script));
    auto cfg = scenario_config();
    cfg.branching = 4;
    cfg.max_depth = 2;
    test::TempDir dir;
    SearchResult result;
    {
        JsonlWriter log(dir / "tree.jsonl", false);
        result = s.run(cfg, &log);
    }
    EXPECT_EQ(result.expansions, 4u);
    EXPECT_FALSE(result.solved);
    int collapses = 0;
    for (const auto& e : read_jsonl(dir / "tree.jsonl")) {
        if (e["event"] == "collapse") {
            ++collapses;
            EXPECT_EQ(e["duplicate_of"], 0);
        }
    }
    EXPECT_EQ(collapses, 4);
}

TEST(PathSearch, AllIncorrectPicksBestCombinedScore) {
    Scenario s("all_incorrect.jsonl");
    auto cfg = scenario_config();
    cfg.negatives_cap = 5;
    const auto result = s.run(cfg);
    EXPECT_FALSE(result.solved);
    EXPECT_EQ(result.expansions, 24u);
    const auto& best = result.tree[result.best_node];
    EXPECT_EQ(best.step.final_answer, "the north side gate");
    for (const auto& n : result.tree) {
        EXPECT_FALSE(n.score.combined > best.score.combined);
    }
    ASSERT_EQ(result.negatives.size(), 5u);
    for (std::size_t i = 1; i < result.negatives.size(); ++i) {
        EXPECT_GE(result.negatives[i - 1].score->combined, result.negatives[i].score->combined);
    }
    for (const auto& neg : result.negatives) {
        EXPECT_NE(neg.final_answer, best.step.final_answer);
    }
}

TEST(PathSearch, EveryBranchFailingAborts) {
    Scenario s(test::script_backend(R"({"match": {"regex": "nothing matches this"}, "reply": "x"})"));
    try {
        s.run(scenario_config());
        FAIL();
    } catch (const SearchAborted& e) {
        EXPECT_TRUE(nlohmann::json::parse(e.partial_tree()).is_array());
    }
}

TEST(PathSearch, ConfigValidation) {
    SearchConfig cfg;
    cfg.branching = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = SearchConfig{};
    cfg.max_depth = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg = SearchConfig{};
    cfg.concurrency = 0;
    EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(CumulativeRecall, Composition) {
    const std::vector<double> rates{0.92, 0.53, 0.35};
    // 0.92 + 0.08*0.53 = 0.9624; + 0.0376*0.35 = 0.97556
    EXPECT_NEAR(cumulative_recall(rates), 0.97556, 1e-12);
    EXPECT_EQ(cumulative_recall(std::vector<double>{}), 0.0);
    EXPECT_EQ(cumulative_recall(std::vector<double>{1.0, 0.3}), 1.0);
    EXPECT_THROW(cumulative_recall(std::vector<double>{0.5, 1.5}), DomainError);
    EXPECT_THROW(cumulative_recall(std::vector<double>{std::nan("")}), DomainError);
}

TEST(CumulativeRecall, MonotoneInEveryRate) {
    std::mt19937 gen(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> rates{u(gen), u(gen), u(gen)};
        const double base = cumulative_recall(rates);
        EXPECT_GE(base, 0.0);
        EXPECT_LE(base, 1.0);
        auto bumped = rates;
        const auto k = gen() % 3;
        bumped[k] = std::min(1.0, bumped[k] + 0.1);
        EXPECT_GE(cumulative_recall(bumped), base);
        // Closed form: 1 - prod(1 - p)
        EXPECT_NEAR(base, 1.0 - (1 - rates[0]) * (1 - rates[1]) * (1 - rates[2]), 1e-12);
    }
}

TEST(SafeFileStem, KeepsSafeIdsAndDisambiguatesOthers) {
    EXPECT_EQ(safe_file_stem("q-beacon_1.v2"), "q-beacon_1.v2");
    const auto a = safe_file_stem("a/b");
    const auto b = safe_file_stem("a:b");
    EXPECT_EQ(a.rfind("a_b-", 0), 0u);
    EXPECT_NE(a, b);
    EXPECT_EQ(safe_file_stem("..").front(), '_');
    EXPECT_FALSE(safe_file_stem("").empty());
}

TEST(SearchCheckpoint, SaveLoadAndSkip) {
    Scenario s("early_stop.jsonl");
    test::TempDir dir;
    SearchCheckpoint ckpt(dir.path());
    PathSearch search(*s.worker, *s.scorer, s.templates, scenario_config());
    const auto first = ckpt.run(search, s.item(), s.doc());
    const auto calls = s.worker->backend_calls();
    EXPECT_TRUE(std::filesystem::exists(ckpt.result_path("q-gate")));
    EXPECT_TRUE(std::filesystem::exists(ckpt.tree_log_path("q-gate")));
    const auto second = ckpt.run(search, s.item(), s.doc());
    EXPECT_EQ(second, first);
    EXPECT_EQ(s.worker->backend_calls(), calls);
    EXPECT_EQ(ckpt.load("other"), std::nullopt);
}

TEST(SearchCheckpoint, CorruptResultIsResumeError) {
    test::TempDir dir;
    SearchCheckpoint ckpt(dir.path());
    std::filesystem::create_directories(dir / "results");
    write_file_atomic(ckpt.result_path("q"), "{\"item_id\": 3");
    EXPECT_THROW(ckpt.load("q"), ResumeError);
}

// A crash part-way through, then a resumed run, must reproduce the
// uninterrupted result without re-issuing completed calls.
TEST(SearchCheckpoint, ResumeAfterCrashMatchesCleanRun) {
    const auto script_path = test::data_dir() / "scripts" / "chain2.jsonl";
    auto script = std::make_shared<ScriptedBackend>(load_script(script_path));

    Scenario clean(script);
    const auto expected = clean.run(scenario_config());
    const auto total_calls = clean.worker->backend_calls();
    ASSERT_GT(total_calls, 40u);

    test::TempDir dir;
    const std::size_t crash_after = total_calls / 2;
    std::size_t issued = 0;
    auto crashing = std::make_shared<test::FnBackend>([&](const CompletionRequest& r) {
        if (issued == crash_after) {
            throw std::runtime_error("simulated crash");
        }
        ++issued;
        return script->complete(r);
    });
    {
        Scenario interrupted(crashing);
        interrupted.worker->attach_call_log(std::make_shared<CallLog>(dir / "calls_worker.jsonl"));
        interrupted.judge->attach_call_log(std::make_shared<CallLog>(dir / "calls_judge.jsonl"));
        SearchCheckpoint ckpt(dir.path());
        PathSearch search(*interrupted.worker, *interrupted.scorer, interrupted.templates, scenario_config());
        EXPECT_THROW(ckpt.run(search, interrupted.item(), interrupted.doc()), std::runtime_error);
        EXPECT_FALSE(std::filesystem::exists(ckpt.result_path("q-gate")));
    }

    Scenario resumed(script);
    resumed.worker->attach_call_log(std::make_shared<CallLog>(dir / "calls_worker.jsonl"));
    resumed.judge->attach_call_log(std::make_shared<CallLog>(dir / "calls_judge.jsonl"));
    SearchCheckpoint ckpt(dir.path());
    PathSearch search(*resumed.worker, *resumed.scorer, resumed.templates, scenario_config());
    const auto got = ckpt.run(search, resumed.item(), resumed.doc());
    EXPECT_EQ(got, expected);
    EXPECT_EQ(resumed.worker->replayed_calls(), crash_after);
    EXPECT_EQ(resumed.worker->backend_calls(), total_calls - crash_after);
}

TEST(SearchResultJson, RoundTrip) {
    Scenario s("chain2.jsonl");
    const auto result = s.run(scenario_config());
    EXPECT_EQ(nlohmann::json(result).get<SearchResult>(), result);
}

}  // namespace
}  // namespace coc
