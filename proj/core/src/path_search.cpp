#include "coc/path_search.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "coc/errors.hpp"
#include "coc/hash.hpp"
#include "coc/rng.hpp"

namespace coc {

void SearchConfig::validate() const {
    if (branching < 1) {
        throw ConfigError("branching must be at least 1");
    }
    if (max_depth < 1) {
        throw ConfigError("max_depth must be at least 1");
    }
    if (chunk_size < 1) {
        throw ConfigError("chunk_size must be at least 1");
    }
    if (concurrency < 1) {
        throw ConfigError("concurrency must be at least 1");
    }
}

namespace {

struct Branch {
    CocSession session;
    CallOptions options;
    std::string clarification;
    std::optional<std::size_t> duplicate_of;
    std::optional<std::string> error;
    CocStep step;
    CocTrace trace;
    EvalScore score;
    bool completed = false;
};

// Runs fn(i) for i in [0, n) on up to `workers` threads. The first
// exception is rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(failure_mutex);
                        if (!failure) {
                            failure = std::current_exception();
                        }
                        next = n;
                    }
                }
            });
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

json combined_json(const CombinedScore& c) { return json::array({c.correct, c.f1}); }

// Higher combined score first; lower node id on ties.
bool better(const SearchNode& a, const SearchNode& b) {
    if (a.score.combined != b.score.combined) {
        return a.score.combined > b.score.combined;
    }
    return a.id < b.id;
}

}  // namespace

PathSearch::PathSearch(Gateway& worker, Scorer& scorer, const PromptTemplates& templates, SearchConfig config)
    : worker_(worker), scorer_(scorer), templates_(templates), config_(std::move(config)) {
    config_.validate();
}

SearchResult PathSearch::search(const QAItem& item, const Document& doc, JsonlWriter* tree_log) {
    const auto chunks = chunk_document(doc, config_.chunk_size);
    const std::uint64_t item_seed = derive_seed(config_.seed, {fnv1a64(item.id)});

    CocConfig engine_cfg;
    engine_cfg.pointback_mode = config_.pointback_mode;
    engine_cfg.allow_empty_grounding = config_.allow_empty_grounding;
    CocEngine engine(worker_, templates_, engine_cfg);
    if (warn_) {
        engine.set_warning_sink([this, &item](const std::string& m) { warn_(item.id + ": " + m); });
    }

    auto log = [&](json event) {
        if (tree_log != nullptr) {
            event["item_id"] = item.id;
            tree_log->write(event);
        }
    };

    SearchResult result;
    result.item_id = item.id;
    std::map<std::size_t, CocTrace> traces;

    CocSession frontier = engine.open_session(item, chunks, item_seed);
    std::optional<std::size_t> frontier_node;
    std::vector<CocStep> frontier_steps;
    std::optional<std::size_t> early_winner;

    for (int depth = 1; depth <= config_.max_depth; ++depth) {
        const auto round = static_cast<std::uint64_t>(depth - 1);
        const auto width = static_cast<std::size_t>(config_.branching);
        std::vector<Branch> branches(width);
        for (std::size_t b = 0; b < width; ++b) {
            branches[b].session = frontier;
            branches[b].session.chat.set_id(item.id + "/d" + std::to_string(depth) + "b" + std::to_string(b));
            branches[b].options.sample_index = b;
            branches[b].options.seed = derive_seed(item_seed, {static_cast<std::uint64_t>(depth), b});
        }

        parallel_for(width, config_.concurrency, [&](std::size_t b) {
            auto& br = branches[b];
            try {
                br.clarification = engine.raise_clarification(br.session, item_seed, round, br.options);
            } catch (const Error& e) {
                br.error = e.what();
            }
        });
        for (std::size_t b = 0; b < width; ++b) {
            auto& br = branches[b];
            if (br.error) {
                continue;
            }
            for (std::size_t prior = 0; prior < b; ++prior) {
                if (!branches[prior].error && !branches[prior].duplicate_of &&
                    branches[prior].clarification == br.clarification) {
                    br.duplicate_of = prior;
                    break;
                }
            }
            json ev{{"event", "expand"}, {"depth", depth}, {"branch", b}, {"clarification", br.clarification}};
            ev["parent"] = frontier_node ? json(*frontier_node) : json(nullptr);
            log(ev);
            if (br.duplicate_of) {
                log({{"event", "collapse"}, {"depth", depth}, {"branch", b}, {"duplicate_of", *br.duplicate_of}});
            }
        }

        parallel_for(width, config_.concurrency, [&](std::size_t b) {
            auto& br = branches[b];
            if (br.error || br.duplicate_of) {
                return;
            }
            try {
                br.step = engine.complete_cycle(br.session, br.clarification, chunks, item_seed, round, br.options);
                CocSession probe = br.session;
                br.step.final_answer =
                    engine.answer_original(probe, item_seed, static_cast<std::uint64_t>(depth), br.options);
                br.score = scorer_.score_or_unverifiable(item, br.step.final_answer);
                br.trace.item_id = item.id;
                br.trace.steps = frontier_steps;
                for (auto& s : br.trace.steps) {
                    s.final_answer.clear();
                }
                br.trace.steps.push_back(br.step);
                br.trace.final_answer = br.step.final_answer;
                br.trace.score = br.score;
                br.trace.transcript = probe.chat.messages();
                br.trace.stages = probe.stages;
                br.completed = true;
            } catch (const JudgeParseError&) {
                throw;
            } catch (const Error& e) {
                br.error = e.what();
            }
        });

        // Serialized commit in branch order.
        std::vector<std::size_t> depth_nodes;
        for (std::size_t b = 0; b < width; ++b) {
            auto& br = branches[b];
            if (br.error) {
                log({{"event", "error"}, {"depth", depth}, {"branch", b}, {"error", *br.error}});
                if (warn_) {
                    warn_(item.id + ": branch " + std::to_string(b) + " at depth " + std::to_string(depth) +
                          " failed: " + *br.error);
                }
                continue;
            }
            if (!br.completed) {
                continue;
            }
            SearchNode node;
            node.id = result.tree.size();
            node.depth = depth;
            node.branch = static_cast<int>(b);
            node.parent = frontier_node;
            node.step = br.step;
            node.score = br.score;
            if (frontier_node) {
                result.tree[*frontier_node].children.push_back(node.id);
            }
            ++result.expansions;
            if (!br.score.verifiable()) {
                ++result.unverifiable;
            }
            json ev{{"event", "score"},
                    {"node", node.id},
                    {"depth", depth},
                    {"branch", b},
                    {"final_answer", node.step.final_answer},
                    {"f1", node.score.rouge_l.f1},
                    {"combined", combined_json(node.score.combined)}};
            ev["parent"] = node.parent ? json(*node.parent) : json(nullptr);
            ev["correct"] = node.score.verifiable() ? json(node.score.correct()) : json(nullptr);
            log(ev);
            traces.emplace(node.id, std::move(br.trace));
            depth_nodes.push_back(node.id);
            result.tree.push_back(std::move(node));
        }

        if (depth_nodes.empty()) {
            log({{"event", "stop"}, {"depth", depth}, {"reason", "all branches failed"}});
            throw SearchAborted(item.id + ": every branch failed at depth " + std::to_string(depth),
                                json(result.tree).dump());
        }

        if (config_.early_stop_on_correct) {
            std::optional<std::size_t> winner;
            for (auto id : depth_nodes) {
                const auto& n = result.tree[id];
                if (!n.score.correct()) {
                    continue;
                }
                if (!winner || n.score.rouge_l.f1 > result.tree[*winner].score.rouge_l.f1) {
                    winner = id;
                }
            }
            if (winner) {
                early_winner = winner;
                log({{"event", "stop"}, {"node", *winner}, {"depth", depth}, {"reason", "correct"}});
                break;
            }
        }

        if (depth == config_.max_depth) {
            break;
        }
        std::size_t pick = depth_nodes.front();
        for (auto id : depth_nodes) {
            if (better(result.tree[id], result.tree[pick])) {
                pick = id;
            }
        }
        log({{"event", "select"}, {"node", pick}, {"depth", depth}});
        const auto& chosen = result.tree[pick];
        frontier = branches[static_cast<std::size_t>(chosen.branch)].session;
        frontier_node = pick;
        auto step = chosen.step;
        step.final_answer.clear();
        frontier_steps.push_back(std::move(step));
    }

    std::size_t best = 0;
    if (early_winner) {
        best = *early_winner;
    } else {
        for (std::size_t id = 1; id < result.tree.size(); ++id) {
            if (better(result.tree[id], result.tree[best])) {
                best = id;
            }
        }
        log({{"event", "stop"}, {"node", best}, {"depth", result.tree[best].depth}, {"reason", "max_depth"}});
    }
    result.best_node = best;
    result.best_trace = traces.at(best);
    result.solved = result.tree[best].score.correct();
    if (result.solved) {
        result.solved_depth = result.tree[best].depth;
    }

    std::vector<std::size_t> negative_ids;
    for (const auto& n : result.tree) {
        if (n.id != best && n.score.verifiable() && !n.score.correct()) {
            negative_ids.push_back(n.id);
        }
    }
    std::sort(negative_ids.begin(), negative_ids.end(),
              [&](std::size_t a, std::size_t b) { return better(result.tree[a], result.tree[b]); });
    if (negative_ids.size() > config_.negatives_cap) {
        negative_ids.resize(config_.negatives_cap);
    }
    for (auto id : negative_ids) {
        result.negatives.push_back(traces.at(id));
    }
    return result;
}

double cumulative_recall(std::span<const double> round_rates) {
    double r = 0.0;
    for (double p : round_rates) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw DomainError("round rate " + std::to_string(p) + " outside [0, 1]");
        }
        r += (1.0 - r) * p;
    }
    return r;
}

std::string safe_file_stem(const std::string& id) {
    std::string out;
    bool changed = id.empty();
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                        c == '_' || c == '.';
        out.push_back(ok ? c : '_');
        changed = changed || !ok;
    }
    if (!out.empty() && out.front() == '.') {
        out.front() = '_';
        changed = true;
    }
    if (changed) {
        out += "-" + to_hex(fnv1a64(id)).substr(0, 8);
    }
    return out;
}

SearchCheckpoint::SearchCheckpoint(std::filesystem::path run_dir) : run_dir_(std::move(run_dir)) {}

std::filesystem::path SearchCheckpoint::tree_log_path(const std::string& item_id) const {
    return run_dir_ / "tree" / (safe_file_stem(item_id) + ".jsonl");
}

std::filesystem::path SearchCheckpoint::result_path(const std::string& item_id) const {
    return run_dir_ / "results" / (safe_file_stem(item_id) + ".json");
}

std::optional<SearchResult> SearchCheckpoint::load(const std::string& item_id) const {
    const auto path = result_path(item_id);
    if (!std::filesystem::exists(path)) {
        return std::nullopt;
    }
    try {
        auto result = json::parse(read_text_file(path)).get<SearchResult>();
        if (result.item_id != item_id) {
            throw ResumeError(path.string() + ": holds item '" + result.item_id + "'", 1);
        }
        return result;
    } catch (const json::exception& e) {
        throw ResumeError(path.string() + ": " + e.what(), 1);
    }
}

void SearchCheckpoint::save(const SearchResult& result) const {
    const auto path = result_path(result.item_id);
    std::filesystem::create_directories(path.parent_path());
    write_file_atomic(path, json(result).dump(1) + "\n");
}

SearchResult SearchCheckpoint::run(PathSearch& search, const QAItem& item, const Document& doc) const {
    if (auto done = load(item.id)) {
        return *done;
    }
    const auto tree_path = tree_log_path(item.id);
    std::filesystem::create_directories(tree_path.parent_path());
    auto result = [&] {
        JsonlWriter tree_log(tree_path, false);
        return search.search(item, doc, &tree_log);
    }();
    save(result);
    return result;
}

void to_json(nlohmann::json& j, const SearchConfig& c) {
    j = nlohmann::json{{"branching", c.branching},
                       {"max_depth", c.max_depth},
                       {"early_stop_on_correct", c.early_stop_on_correct},
                       {"seed", c.seed},
                       {"negatives_cap", c.negatives_cap},
                       {"chunk_size", c.chunk_size},
                       {"concurrency", c.concurrency},
                       {"pointback_mode", to_string(c.pointback_mode)},
                       {"allow_empty_grounding", c.allow_empty_grounding}};
}

void to_json(nlohmann::json& j, const SearchNode& n) {
    j = nlohmann::json{{"id", n.id},         {"depth", n.depth},   {"branch", n.branch},
                       {"children", n.children}, {"step", n.step}, {"score", n.score}};
    j["parent"] = n.parent ? nlohmann::json(*n.parent) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, SearchNode& n) {
    n.id = j.at("id").get<std::size_t>();
    n.depth = j.at("depth").get<int>();
    n.branch = j.at("branch").get<int>();
    n.children = j.at("children").get<std::vector<std::size_t>>();
    n.step = j.at("step").get<CocStep>();
    n.score = j.at("score").get<EvalScore>();
    if (j.at("parent").is_null()) {
        n.parent.reset();
    } else {
        n.parent = j.at("parent").get<std::size_t>();
    }
}

void to_json(nlohmann::json& j, const SearchResult& r) {
    j = nlohmann::json{{"item_id", r.item_id},       {"best_trace", r.best_trace}, {"best_node", r.best_node},
                       {"solved", r.solved},         {"expansions", r.expansions}, {"negatives", r.negatives},
                       {"tree", r.tree},             {"unverifiable", r.unverifiable}};
    j["solved_depth"] = r.solved_depth ? nlohmann::json(*r.solved_depth) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, SearchResult& r) {
    r.item_id = j.at("item_id").get<std::string>();
    r.best_trace = j.at("best_trace").get<CocTrace>();
    r.best_node = j.at("best_node").get<std::size_t>();
    r.solved = j.at("solved").get<bool>();
    r.expansions = j.at("expansions").get<std::size_t>();
    r.negatives = j.at("negatives").get<std::vector<CocTrace>>();
    r.tree = j.at("tree").get<std::vector<SearchNode>>();
    r.unverifiable = j.at("unverifiable").get<std::size_t>();
    if (j.at("solved_depth").is_null()) {
        r.solved_depth.reset();
    } else {
        r.solved_depth = j.at("solved_depth").get<int>();
    }
}

}  // namespace coc
