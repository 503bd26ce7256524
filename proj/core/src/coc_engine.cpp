#include "coc/coc_engine.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "coc/errors.hpp"
#include "coc/pointback_parser.hpp"

namespace coc {

namespace {

constexpr std::string_view kYesNoReprompt = "Answer with a single word: yes or no.";

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string tag(int index) { return "<para " + std::to_string(index) + ">"; }

}  // namespace

std::string_view to_string(PointbackMode mode) {
    return mode == PointbackMode::iterative_pointback ? "iterative_pointback" : "direct_pointback";
}

PointbackMode pointback_mode_from_string(std::string_view name) {
    if (name == "iterative_pointback" || name == "iterative") {
        return PointbackMode::iterative_pointback;
    }
    if (name == "direct_pointback" || name == "direct") {
        return PointbackMode::direct_pointback;
    }
    throw ConfigError("unknown pointback mode '" + std::string(name) + "'");
}

std::string_view to_string(Ablation ablation) {
    return ablation == Ablation::no_clarification ? "no_clarification" : "no_pointback";
}

Ablation ablation_from_string(std::string_view name) {
    if (name == "no_clarification") {
        return Ablation::no_clarification;
    }
    if (name == "no_pointback") {
        return Ablation::no_pointback;
    }
    throw ConfigError("unknown ablation '" + std::string(name) + "'");
}

void CocSession::append(ChatMessage message, Stage stage) {
    chat.append(std::move(message));
    stages.push_back(stage);
}

std::string check_transcript_grammar(const std::vector<ChatMessage>& transcript, const std::vector<Stage>& stages) {
    if (transcript.size() != stages.size()) {
        return "transcript has " + std::to_string(transcript.size()) + " messages but " +
               std::to_string(stages.size()) + " stage labels";
    }
    if (transcript.size() < 4) {
        return "transcript too short";
    }
    if (stages[0] != Stage::system || transcript[0].role != Role::system) {
        return "message 0 must be the system prompt";
    }
    if (stages[1] != Stage::context || transcript[1].role != Role::user) {
        return "message 1 must be the user context";
    }
    if ((transcript.size() - 2) % 2 != 0) {
        return "messages after the context must come in user/assistant pairs";
    }
    bool final_seen = false;
    for (std::size_t i = 2; i < transcript.size(); i += 2) {
        const std::string where = "messages " + std::to_string(i) + "-" + std::to_string(i + 1);
        if (transcript[i].role != Role::user || transcript[i + 1].role != Role::assistant) {
            return where + ": expected a user then an assistant message";
        }
        if (stages[i] != stages[i + 1]) {
            return where + ": pair has mixed stages";
        }
        const Stage s = stages[i];
        if (final_seen) {
            return where + ": content after the final answer";
        }
        switch (s) {
            case Stage::raise_question:
            case Stage::pointback:
            case Stage::answer_clarification:
                break;
            case Stage::final_answer:
                final_seen = true;
                break;
            default:
                return where + ": unexpected stage '" + std::string(to_string(s)) + "'";
        }
    }
    if (!final_seen) {
        return "transcript has no final answer";
    }
    return {};
}

std::string render_selected(const std::vector<Chunk>& chunks, const std::vector<int>& indices) {
    std::vector<int> sorted = indices;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<Chunk> picked;
    for (int i : sorted) {
        if (i >= 1 && static_cast<std::size_t>(i) <= chunks.size()) {
            picked.push_back(chunks[static_cast<std::size_t>(i) - 1]);
        }
    }
    return render_tagged_context(picked);
}

CocEngine::CocEngine(Gateway& gateway, const PromptTemplates& templates, CocConfig config)
    : gateway_(gateway), templates_(templates), config_(std::move(config)) {}

void CocEngine::warn(const std::string& message) const {
    if (warn_) {
        warn_(message);
    }
}

ChatMessage CocEngine::call(ChatSession& session, std::string prompt, const CallOptions& options) {
    ChatMessage user{Role::user, std::move(prompt)};
    if (ledger_ != nullptr) {
        return gateway_.complete(session, std::move(user), *ledger_, options);
    }
    return gateway_.complete(session, std::move(user), options);
}

std::string CocEngine::ask(CocSession& session, std::string prompt, Stage stage, const CallOptions& options) {
    auto reply = call(session.chat, std::move(prompt), options);
    session.stages.push_back(stage);
    session.stages.push_back(stage);
    return reply.content;
}

CocSession CocEngine::open_session(const QAItem& item, const std::vector<Chunk>& chunks, std::uint64_t seed) const {
    CocSession session;
    session.chat.set_id(item.id);
    session.question = item.question;
    session.append({Role::system, templates_.select(Stage::system, seed, 0)}, Stage::system);
    session.append({Role::user, render_tagged_context(chunks) + "\n" + item.question}, Stage::context);
    return session;
}

std::string CocEngine::raise_clarification(CocSession& session, std::uint64_t seed, std::uint64_t round,
                                           const CallOptions& options) {
    auto reply = trim(ask(session, templates_.select(Stage::raise_question, seed, round), Stage::raise_question,
                          options));
    if (reply.empty()) {
        throw EmptyClarification("model returned an empty clarifying question");
    }
    return reply;
}

std::optional<bool> CocEngine::relevance(const Chunk& chunk, const std::string& target, const CallOptions& options) {
    ChatSession mini("relevance:" + std::to_string(chunk.index));
    mini.append({Role::system, templates_.variants(Stage::system).front()});
    const std::string block = tag(chunk.index) + " " + chunk.text + " </para " + std::to_string(chunk.index) + ">";
    const auto first = call(mini, render_relevance_prompt(block, templates_.select(Stage::relevance, 0), target), options);
    if (auto verdict = parse_yes_no(first.content)) {
        return verdict;
    }
    const auto second = call(mini, std::string(kYesNoReprompt), options);
    return parse_yes_no(second.content);
}

std::vector<int> CocEngine::pointback_iterative(const std::string& clarification, const std::vector<Chunk>& chunks,
                                                const CallOptions& options, std::vector<int>* undetermined) {
    std::vector<std::optional<bool>> verdicts(chunks.size());
    const std::size_t workers = std::max<std::size_t>(1, std::min(config_.relevance_concurrency, chunks.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            verdicts[i] = relevance(chunks[i], clarification, options);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        {
            std::vector<std::jthread> pool;
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    for (std::size_t i = next++; i < chunks.size(); i = next++) {
                        try {
                            verdicts[i] = relevance(chunks[i], clarification, options);
                        } catch (...) {
                            std::lock_guard lock(failure_mutex);
                            if (!failure) {
                                failure = std::current_exception();
                            }
                            next = chunks.size();
                        }
                    }
                });
            }
        }
        if (failure) {
            std::rethrow_exception(failure);
        }
    }
    std::vector<int> selected;
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        if (!verdicts[i]) {
            warn("relevance reply for paragraph " + std::to_string(chunks[i].index) + " stayed unparseable");
            if (undetermined != nullptr) {
                undetermined->push_back(chunks[i].index);
            }
        } else if (*verdicts[i]) {
            selected.push_back(chunks[i].index);
        }
    }
    return selected;
}

std::vector<int> CocEngine::pointback_direct(CocSession& session, int doc_chunk_count, std::uint64_t seed,
                                             std::uint64_t round, const CallOptions& options) {
    const auto reply = ask(session, templates_.select(Stage::pointback, seed, round), Stage::pointback, options);
    auto parsed = parse_pointback(reply, doc_chunk_count);
    if (parsed.references == 0) {
        throw EmptyPointback("pointback reply names no paragraphs");
    }
    if (parsed.indices.size() < parsed.references) {
        warn("pointback reply referenced paragraphs outside 1.." + std::to_string(doc_chunk_count));
    }
    return parsed.indices;
}

void CocEngine::record_pointback(CocSession& session, const std::vector<int>& indices, std::uint64_t seed,
                                 std::uint64_t round) const {
    std::string reply;
    for (int i : indices) {
        if (!reply.empty()) {
            reply += ' ';
        }
        reply += tag(i);
    }
    if (reply.empty()) {
        reply = "None of the paragraphs are relevant.";
    }
    session.append({Role::user, templates_.select(Stage::pointback, seed, round)}, Stage::pointback);
    session.append({Role::assistant, std::move(reply)}, Stage::pointback);
}

std::string CocEngine::answer_clarification(CocSession& session, const std::vector<int>& pointback_indices,
                                            const std::vector<Chunk>& chunks, std::uint64_t seed,
                                            std::uint64_t round, const CallOptions& options) {
    std::string prompt = templates_.select(Stage::answer_clarification, seed, round);
    const std::string selected = render_selected(chunks, pointback_indices);
    if (!selected.empty()) {
        prompt = selected + "\n\n" + prompt;
    }
    return trim(ask(session, std::move(prompt), Stage::answer_clarification, options));
}

std::string CocEngine::answer_original(CocSession& session, std::uint64_t seed, std::uint64_t round,
                                       const CallOptions& options, const std::vector<int>& grounding,
                                       const std::vector<Chunk>& chunks) {
    std::string prompt = templates_.select(Stage::final_answer, seed, round);
    const std::string selected = render_selected(chunks, grounding);
    if (!selected.empty()) {
        prompt = selected + "\n\n" + prompt;
    }
    return trim(ask(session, std::move(prompt), Stage::final_answer, options));
}

CocStep CocEngine::run_cycle(CocSession& session, const std::vector<Chunk>& chunks, std::uint64_t seed,
                             std::uint64_t round, const CallOptions& options) {
    std::string clarification;
    if (!config_.ablations.contains(Ablation::no_clarification)) {
        clarification = raise_clarification(session, seed, round, options);
    }
    return complete_cycle(session, std::move(clarification), chunks, seed, round, options);
}

CocStep CocEngine::complete_cycle(CocSession& session, std::string clarification, const std::vector<Chunk>& chunks,
                                  std::uint64_t seed, std::uint64_t round, const CallOptions& options) {
    const bool clarify = !config_.ablations.contains(Ablation::no_clarification);
    const bool point = !config_.ablations.contains(Ablation::no_pointback);
    CocStep step;
    step.mode = config_.pointback_mode;
    step.clarification = std::move(clarification);
    if (point) {
        const std::string& target = clarify ? step.clarification : session.question;
        if (config_.pointback_mode == PointbackMode::iterative_pointback) {
            step.pointback_indices = pointback_iterative(target, chunks, options, &step.undetermined_indices);
            record_pointback(session, step.pointback_indices, seed, round);
        } else {
            step.pointback_indices = pointback_direct(session, static_cast<int>(chunks.size()), seed, round, options);
        }
        if (step.pointback_indices.empty()) {
            if (!config_.allow_empty_grounding) {
                throw EmptyPointback("no paragraph was selected as relevant");
            }
            warn("pointback selected no paragraphs for round " + std::to_string(round));
        }
    }
    if (clarify) {
        step.clarification_answer = answer_clarification(session, step.pointback_indices, chunks, seed, round, options);
    }
    return step;
}

CocTrace CocEngine::run_inference(const QAItem& item, const std::vector<Chunk>& chunks, int rounds,
                                  std::uint64_t seed) {
    if (rounds < 1) {
        throw ConfigError("rounds must be at least 1");
    }
    CocSession session = open_session(item, chunks, seed);
    CocTrace trace;
    trace.item_id = item.id;
    std::vector<int> grounding;
    for (int r = 0; r < rounds; ++r) {
        auto step = run_cycle(session, chunks, seed, static_cast<std::uint64_t>(r));
        grounding.insert(grounding.end(), step.pointback_indices.begin(), step.pointback_indices.end());
        trace.steps.push_back(std::move(step));
    }
    if (!config_.ablations.contains(Ablation::no_clarification)) {
        grounding.clear();
    }
    trace.final_answer = answer_original(session, seed, static_cast<std::uint64_t>(rounds), {}, grounding, chunks);
    trace.steps.back().final_answer = trace.final_answer;
    trace.transcript = session.chat.messages();
    trace.stages = session.stages;
    return trace;
}

void to_json(nlohmann::json& j, const CocStep& step) {
    j = nlohmann::json{{"clarification", step.clarification},
                       {"pointback_indices", step.pointback_indices},
                       {"clarification_answer", step.clarification_answer},
                       {"final_answer", step.final_answer},
                       {"mode", to_string(step.mode)},
                       {"undetermined_indices", step.undetermined_indices}};
}

void from_json(const nlohmann::json& j, CocStep& step) {
    step.clarification = j.at("clarification").get<std::string>();
    step.pointback_indices = j.at("pointback_indices").get<std::vector<int>>();
    step.clarification_answer = j.at("clarification_answer").get<std::string>();
    step.final_answer = j.at("final_answer").get<std::string>();
    step.mode = pointback_mode_from_string(j.at("mode").get<std::string>());
    step.undetermined_indices = j.value("undetermined_indices", std::vector<int>{});
}

void to_json(nlohmann::json& j, const CocTrace& trace) {
    std::vector<std::string> stages;
    for (auto s : trace.stages) {
        stages.emplace_back(to_string(s));
    }
    j = nlohmann::json{{"item_id", trace.item_id},
                       {"steps", trace.steps},
                       {"final_answer", trace.final_answer},
                       {"score", trace.score ? nlohmann::json(*trace.score) : nlohmann::json(nullptr)},
                       {"transcript", trace.transcript},
                       {"stages", stages}};
}

void from_json(const nlohmann::json& j, CocTrace& trace) {
    trace.item_id = j.at("item_id").get<std::string>();
    trace.steps = j.at("steps").get<std::vector<CocStep>>();
    trace.final_answer = j.at("final_answer").get<std::string>();
    if (j.contains("score") && !j.at("score").is_null()) {
        trace.score = j.at("score").get<EvalScore>();
    } else {
        trace.score.reset();
    }
    trace.transcript = j.at("transcript").get<std::vector<ChatMessage>>();
    trace.stages.clear();
    for (const auto& s : j.at("stages")) {
        trace.stages.push_back(stage_from_string(s.get<std::string>()));
    }
}

}  // namespace coc
