#include <gtest/gtest.h>

#include "coc/errors.hpp"
#include "coc/run_config.hpp"
#include "test_support.hpp"

namespace coc {
namespace {

TEST(RunConfig, LoadsToyConfig) {
    const auto path = test::data_dir() / "toy" / "config.json";
    auto c = load_run_config(path);
    EXPECT_EQ(c.seed, 7u);
    EXPECT_EQ(c.chunk_size, 64u);
    EXPECT_EQ(c.search.branching, 4);
    EXPECT_EQ(c.search.max_depth, 3);
    EXPECT_EQ(c.worker.kind, BackendKind::scripted_mock);
    EXPECT_EQ(c.worker.script, std::filesystem::absolute(test::data_dir() / "toy" / "worker.jsonl").lexically_normal());
    EXPECT_EQ(c.judge.model_name, "toy-judge");
    c.finalize();
    EXPECT_EQ(c.search.seed, 7u);
    EXPECT_EQ(c.search.chunk_size, 64u);
    EXPECT_EQ(c.search.concurrency, 4u);
}

TEST(RunConfig, RoundTripsThroughJson) {
    const auto c = load_run_config(test::data_dir() / "toy" / "config.json");
    const auto j = to_json(c);
    const auto back = parse_run_config(j);
    EXPECT_EQ(to_json(back), j);
}

TEST(RunConfig, JudgeDefaultsToWorker) {
    const auto c = parse_run_config({{"worker", {{"kind", "scripted_mock"}, {"script", "/w.jsonl"}}}});
    EXPECT_EQ(c.judge.script, c.worker.script);
    EXPECT_EQ(c.search.branching, 8);
    EXPECT_EQ(c.search.max_depth, 3);
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
    const nlohmann::json worker{{"kind", "scripted_mock"}, {"script", "/w.jsonl"}};
    EXPECT_THROW(parse_run_config({{"worker", worker}, {"sede", 1}}), ConfigError);
    EXPECT_THROW(parse_run_config({{"worker", worker}, {"search", {{"branchs", 2}}}}), ConfigError);
    EXPECT_THROW(parse_run_config({{"worker", {{"kind", "scripted_mock"}, {"retries", 1}}}}), ConfigError);
    EXPECT_THROW(parse_run_config({{"worker", {{"kind", "carrier_pigeon"}}}}), ConfigError);
    EXPECT_THROW(parse_run_config({{"seed", 1}}), ConfigError);
    EXPECT_THROW(parse_run_config({{"worker", worker}, {"seed", "seven"}}), ConfigError);
    EXPECT_THROW(parse_run_config(nlohmann::json::array()), ConfigError);

    auto c = parse_run_config({{"worker", worker}, {"search", {{"branching", 0}}}});
    EXPECT_THROW(c.finalize(), ConfigError);
    c = parse_run_config({{"worker", worker}, {"chunk_size", 0}});
    EXPECT_THROW(c.finalize(), ConfigError);
    c = parse_run_config({{"worker", worker}, {"concurrency", 0}});
    EXPECT_THROW(c.finalize(), ConfigError);
}

TEST(RunConfig, LoadErrorsNameThePath) {
    test::TempDir dir;
    write_file_atomic(dir / "c.json", "{\"worker\": ");
    try {
        load_run_config(dir / "c.json");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("c.json"), std::string::npos);
    }
    EXPECT_THROW(load_run_config(dir / "absent.json"), ConfigError);
}

}  // namespace
}  // namespace coc
