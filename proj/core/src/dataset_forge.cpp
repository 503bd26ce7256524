#include "coc/dataset_forge.hpp"

#include <algorithm>
#include <fstream>

#include "coc/errors.hpp"
#include "coc/hash.hpp"
#include "coc/json_schema.hpp"
#include "coc/jsonl.hpp"

namespace coc {

namespace {

constexpr const char* kMessageSchema = R"({
  "type": "object",
  "required": ["role", "content"],
  "additionalProperties": false,
  "properties": {
    "role": {"enum": ["system", "user", "assistant"]},
    "content": {"type": "string"}
  }
})";

json messages_schema(std::size_t min_items) {
    return json{{"type", "array"}, {"minItems", min_items}, {"items", json::parse(kMessageSchema)}};
}

json build_recipe_schema() {
    return json::parse(R"({
  "type": "object",
  "required": ["stage", "learning_rate", "lr_scheduler", "optimizer", "adam_beta1", "adam_beta2",
               "dtype", "batch_size", "max_length"],
  "additionalProperties": false,
  "properties": {
    "stage": {"enum": ["sft", "dpo"]},
    "learning_rate": {"const": 5e-7},
    "lr_scheduler": {"const": "cosine_annealing"},
    "optimizer": {"const": "adam"},
    "adam_beta1": {"const": 0.9},
    "adam_beta2": {"const": 0.95},
    "dtype": {"const": "bf16"},
    "batch_size": {"const": 128},
    "max_length": {"const": 131072},
    "beta": {"const": 0.1}
  }
})");
}

json build_sft_schema() {
    json s = json::parse(R"({
  "type": "object",
  "required": ["messages", "meta"],
  "additionalProperties": false,
  "properties": {
    "meta": {
      "type": "object",
      "required": ["item_id", "solved_depth", "candidate_hash"],
      "additionalProperties": false,
      "properties": {
        "item_id": {"type": "string", "minLength": 1},
        "solved_depth": {"type": "integer", "minimum": 1},
        "candidate_hash": {"type": "string", "minLength": 1}
      }
    }
  }
})");
    s["properties"]["messages"] = messages_schema(4);
    return s;
}

json build_dpo_schema() {
    json s = json::parse(R"({
  "type": "object",
  "required": ["prompt", "chosen", "rejected", "meta"],
  "additionalProperties": false,
  "properties": {
    "meta": {
      "type": "object",
      "required": ["item_id", "divergence_stage", "chosen_candidate_hash", "rejected_candidate_hash"],
      "additionalProperties": false,
      "properties": {
        "item_id": {"type": "string", "minLength": 1},
        "divergence_stage": {"enum": ["clarification", "pointback", "clarification_answer", "final_answer"]},
        "chosen_candidate_hash": {"type": "string", "minLength": 1},
        "rejected_candidate_hash": {"type": "string", "minLength": 1}
      }
    }
  }
})");
    s["properties"]["prompt"] = messages_schema(2);
    s["properties"]["chosen"] = messages_schema(1);
    s["properties"]["rejected"] = messages_schema(1);
    return s;
}

json build_stats_schema() {
    return json::parse(R"({
  "type": "object",
  "required": ["num_items", "num_sft", "num_pairs", "skipped_unsolved", "total_target_tokens", "input_len",
               "recall_by_depth"],
  "additionalProperties": false,
  "properties": {
    "num_items": {"type": "integer", "minimum": 0},
    "num_sft": {"type": "integer", "minimum": 0},
    "num_pairs": {"type": "integer", "minimum": 0},
    "skipped_unsolved": {"type": "integer", "minimum": 0},
    "total_target_tokens": {"type": "integer", "minimum": 0},
    "input_len": {
      "type": "object",
      "required": ["mean", "max"],
      "additionalProperties": false,
      "properties": {
        "mean": {"type": "number", "minimum": 0},
        "max": {"type": "integer", "minimum": 0}
      }
    },
    "recall_by_depth": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}}
  }
})");
}

const ChatMessage* last_assistant(const std::vector<ChatMessage>& messages) {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == Role::assistant) {
            return &*it;
        }
    }
    return nullptr;
}

std::string hash_of_final(const std::vector<ChatMessage>& messages) {
    const auto* last = last_assistant(messages);
    return last == nullptr ? std::string() : candidate_hash(last->content);
}

}  // namespace

std::string_view to_string(DivergenceStage stage) {
    switch (stage) {
        case DivergenceStage::clarification:
            return "clarification";
        case DivergenceStage::pointback:
            return "pointback";
        case DivergenceStage::clarification_answer:
            return "clarification_answer";
        case DivergenceStage::final_answer:
            return "final_answer";
    }
    return "final_answer";
}

DivergenceStage divergence_stage_from_string(std::string_view name) {
    for (auto s : {DivergenceStage::clarification, DivergenceStage::pointback, DivergenceStage::clarification_answer,
                   DivergenceStage::final_answer}) {
        if (to_string(s) == name) {
            return s;
        }
    }
    throw ConfigError("unknown divergence stage '" + std::string(name) + "'");
}

std::vector<SftExample> build_sft(std::span<const SearchResult> results, std::size_t* skipped) {
    std::vector<SftExample> out;
    for (const auto& r : results) {
        if (!r.solved) {
            if (skipped != nullptr) {
                ++*skipped;
            }
            continue;
        }
        const auto& t = r.best_trace;
        if (auto problem = check_transcript_grammar(t.transcript, t.stages); !problem.empty()) {
            throw ExportError(r.item_id + ": " + problem, r.item_id);
        }
        if (t.transcript.back().content != t.final_answer) {
            throw ExportError(r.item_id + ": transcript does not end with the final answer", r.item_id);
        }
        SftExample ex;
        ex.messages = t.transcript;
        ex.item_id = r.item_id;
        ex.solved_depth = r.solved_depth.value_or(static_cast<int>(t.steps.size()));
        ex.candidate_hash = candidate_hash(t.final_answer);
        out.push_back(std::move(ex));
    }
    return out;
}

std::size_t common_prefix_length(const std::vector<ChatMessage>& a, const std::vector<ChatMessage>& b) {
    std::size_t n = 0;
    while (n < a.size() && n < b.size() && a[n] == b[n]) {
        ++n;
    }
    return n;
}

DivergenceStage divergence_stage_at(const std::vector<Stage>& stages, std::size_t position) {
    if (position >= stages.size()) {
        return DivergenceStage::final_answer;
    }
    switch (stages[position]) {
        case Stage::raise_question:
            return DivergenceStage::clarification;
        case Stage::pointback:
            return DivergenceStage::pointback;
        case Stage::answer_clarification:
            return DivergenceStage::clarification_answer;
        default:
            return DivergenceStage::final_answer;
    }
}

std::vector<PreferencePair> build_dpo(std::span<const SearchResult> results, std::size_t cap_per_item,
                                      const WarningSink& warn) {
    std::vector<PreferencePair> out;
    for (const auto& r : results) {
        if (!r.solved) {
            continue;
        }
        const auto& win = r.best_trace.transcript;
        std::size_t taken = 0;
        for (const auto& neg : r.negatives) {
            if (taken >= cap_per_item) {
                break;
            }
            if (neg.score && neg.score->correct()) {
                continue;
            }
            const auto& lose = neg.transcript;
            const std::size_t lcp = common_prefix_length(win, lose);
            if (lcp >= win.size() || lcp >= lose.size()) {
                if (warn) {
                    warn(r.item_id + ": negative coincides with the winning trace after the shared prefix; dropped");
                }
                continue;
            }
            PreferencePair p;
            p.prompt.assign(win.begin(), win.begin() + static_cast<std::ptrdiff_t>(lcp));
            p.chosen.assign(win.begin() + static_cast<std::ptrdiff_t>(lcp), win.end());
            p.rejected.assign(lose.begin() + static_cast<std::ptrdiff_t>(lcp), lose.end());
            p.divergence_stage = divergence_stage_at(r.best_trace.stages, lcp);
            p.item_id = r.item_id;
            p.chosen_hash = candidate_hash(r.best_trace.final_answer);
            p.rejected_hash = candidate_hash(neg.final_answer);
            out.push_back(std::move(p));
            ++taken;
        }
    }
    return out;
}

DatasetStats compute_stats(std::span<const Document> corpus, std::span<const SearchResult> results,
                           std::span<const SftExample> sft, std::span<const PreferencePair> dpo, int max_depth,
                           const Tokenizer& tokenizer) {
    DatasetStats s;
    s.num_items = results.size();
    s.num_sft = sft.size();
    s.num_pairs = dpo.size();
    std::uint64_t total = 0;
    for (const auto& doc : corpus) {
        const auto n = static_cast<std::uint64_t>(tokenizer.count(doc.text));
        total += n;
        s.input_len.max = std::max(s.input_len.max, n);
    }
    if (!corpus.empty()) {
        s.input_len.mean = static_cast<double>(total) / static_cast<double>(corpus.size());
    }
    for (const auto& ex : sft) {
        for (const auto& m : ex.messages) {
            if (m.role == Role::assistant) {
                s.total_target_tokens += tokenizer.count(m.content);
            }
        }
    }
    std::vector<std::uint64_t> solved_at(static_cast<std::size_t>(std::max(max_depth, 0)) + 1, 0);
    for (const auto& r : results) {
        if (!r.solved) {
            ++s.skipped_unsolved;
        } else if (r.solved_depth && *r.solved_depth >= 1 && *r.solved_depth <= max_depth) {
            ++solved_at[static_cast<std::size_t>(*r.solved_depth)];
        }
    }
    std::uint64_t running = 0;
    for (int d = 1; d <= max_depth; ++d) {
        running += solved_at[static_cast<std::size_t>(d)];
        s.recall_by_depth.push_back(results.empty() ? 0.0
                                                    : static_cast<double>(running) /
                                                          static_cast<double>(results.size()));
    }
    return s;
}

RecipeStage recipe_stage_from_string(std::string_view name) {
    if (name == "sft") {
        return RecipeStage::sft;
    }
    if (name == "dpo") {
        return RecipeStage::dpo;
    }
    throw ConfigError("unknown recipe stage '" + std::string(name) + "' (expected sft or dpo)");
}

nlohmann::json training_recipe(RecipeStage stage) {
    json r{{"stage", stage == RecipeStage::sft ? "sft" : "dpo"},
           {"learning_rate", 5e-7},
           {"lr_scheduler", "cosine_annealing"},
           {"optimizer", "adam"},
           {"adam_beta1", 0.9},
           {"adam_beta2", 0.95},
           {"dtype", "bf16"},
           {"batch_size", 128},
           {"max_length", 131072}};
    if (stage == RecipeStage::dpo) {
        r["beta"] = 0.1;
    }
    return r;
}

void emit_training_recipe(RecipeStage stage, const std::filesystem::path& out_path) {
    if (out_path.has_parent_path()) {
        std::filesystem::create_directories(out_path.parent_path());
    }
    write_file_atomic(out_path, training_recipe(stage).dump(2) + "\n");
}

const nlohmann::json& recipe_schema() {
    static const json s = build_recipe_schema();
    return s;
}

const nlohmann::json& sft_record_schema() {
    static const json s = build_sft_schema();
    return s;
}

const nlohmann::json& dpo_record_schema() {
    static const json s = build_dpo_schema();
    return s;
}

const nlohmann::json& stats_schema() {
    static const json s = build_stats_schema();
    return s;
}

nlohmann::json sft_to_json(const SftExample& example) {
    return json{{"messages", example.messages},
                {"meta",
                 {{"item_id", example.item_id},
                  {"solved_depth", example.solved_depth},
                  {"candidate_hash", example.candidate_hash}}}};
}

SftExample sft_from_json(const nlohmann::json& j) {
    SftExample ex;
    ex.messages = j.at("messages").get<std::vector<ChatMessage>>();
    const auto& meta = j.at("meta");
    ex.item_id = meta.at("item_id").get<std::string>();
    ex.solved_depth = meta.at("solved_depth").get<int>();
    ex.candidate_hash = meta.at("candidate_hash").get<std::string>();
    return ex;
}

nlohmann::json dpo_to_json(const PreferencePair& pair) {
    return json{{"prompt", pair.prompt},
                {"chosen", pair.chosen},
                {"rejected", pair.rejected},
                {"meta",
                 {{"item_id", pair.item_id},
                  {"divergence_stage", to_string(pair.divergence_stage)},
                  {"chosen_candidate_hash", pair.chosen_hash},
                  {"rejected_candidate_hash", pair.rejected_hash}}}};
}

PreferencePair dpo_from_json(const nlohmann::json& j) {
    PreferencePair p;
    p.prompt = j.at("prompt").get<std::vector<ChatMessage>>();
    p.chosen = j.at("chosen").get<std::vector<ChatMessage>>();
    p.rejected = j.at("rejected").get<std::vector<ChatMessage>>();
    const auto& meta = j.at("meta");
    p.item_id = meta.at("item_id").get<std::string>();
    p.divergence_stage = divergence_stage_from_string(meta.at("divergence_stage").get<std::string>());
    p.chosen_hash = meta.at("chosen_candidate_hash").get<std::string>();
    p.rejected_hash = meta.at("rejected_candidate_hash").get<std::string>();
    return p;
}

void to_json(nlohmann::json& j, const DatasetStats& stats) {
    j = json{{"num_items", stats.num_items},
             {"num_sft", stats.num_sft},
             {"num_pairs", stats.num_pairs},
             {"skipped_unsolved", stats.skipped_unsolved},
             {"total_target_tokens", stats.total_target_tokens},
             {"input_len", {{"mean", stats.input_len.mean}, {"max", stats.input_len.max}}},
             {"recall_by_depth", stats.recall_by_depth}};
}

void from_json(const nlohmann::json& j, DatasetStats& stats) {
    stats.num_items = j.at("num_items").get<std::uint64_t>();
    stats.num_sft = j.at("num_sft").get<std::uint64_t>();
    stats.num_pairs = j.at("num_pairs").get<std::uint64_t>();
    stats.skipped_unsolved = j.at("skipped_unsolved").get<std::uint64_t>();
    stats.total_target_tokens = j.at("total_target_tokens").get<std::uint64_t>();
    stats.input_len.mean = j.at("input_len").at("mean").get<double>();
    stats.input_len.max = j.at("input_len").at("max").get<std::uint64_t>();
    stats.recall_by_depth = j.at("recall_by_depth").get<std::vector<double>>();
}

std::string to_jsonl(std::span<const SftExample> examples) {
    std::string out;
    for (const auto& ex : examples) {
        out += sft_to_json(ex).dump();
        out += '\n';
    }
    return out;
}

std::string to_jsonl(std::span<const PreferencePair> pairs) {
    std::string out;
    for (const auto& p : pairs) {
        out += dpo_to_json(p).dump();
        out += '\n';
    }
    return out;
}

VerdictIndex load_verdict_index(const std::filesystem::path& path) {
    VerdictIndex index;
    for_each_jsonl(
        path,
        [&](const json& line, std::size_t) {
            const auto& v = line.at("verdict");
            if (v.is_null()) {
                return;
            }
            index[{line.at("item_id").get<std::string>(), line.at("candidate_hash").get<std::string>()}] =
                v.at("correct_answer").get<bool>();
        },
        [&](const std::string& message, std::size_t line) {
            throw ResumeError(path.string() + ":" + std::to_string(line) + ": " + message, line);
        });
    return index;
}

std::optional<ArtifactKind> guess_artifact_kind(const std::filesystem::path& path) {
    const std::string name = path.filename().string();
    const std::string ext = path.extension().string();
    if (ext == ".jsonl") {
        if (name.starts_with("sft")) {
            return ArtifactKind::sft;
        }
        if (name.starts_with("dpo")) {
            return ArtifactKind::dpo;
        }
    } else if (ext == ".json") {
        if (name.starts_with("stats")) {
            return ArtifactKind::stats;
        }
        if (name.starts_with("recipe")) {
            return ArtifactKind::recipe;
        }
    }
    return std::nullopt;
}

ArtifactKind artifact_kind_from_string(std::string_view name) {
    if (name == "sft") return ArtifactKind::sft;
    if (name == "dpo") return ArtifactKind::dpo;
    if (name == "stats") return ArtifactKind::stats;
    if (name == "recipe") return ArtifactKind::recipe;
    throw ConfigError("unknown artifact kind '" + std::string(name) + "' (expected sft, dpo, stats or recipe)");
}

namespace {

void check_roles(const std::vector<ChatMessage>& messages, const std::string& where, std::vector<std::string>& out) {
    if (messages.size() < 4 || messages[0].role != Role::system || messages[1].role != Role::user) {
        out.push_back(where + ": transcript must open with a system prompt and the user context");
        return;
    }
    for (std::size_t i = 2; i < messages.size(); ++i) {
        const Role expected = (i % 2 == 0) ? Role::user : Role::assistant;
        if (messages[i].role != expected) {
            out.push_back(where + ": message " + std::to_string(i) + " should be " +
                          std::string(to_string(expected)));
            return;
        }
    }
}

void check_verdict(const VerdictIndex* verdicts, const std::string& item, const std::string& hash, bool want,
                   const std::string& where, const std::string& what, std::vector<std::string>& out) {
    if (verdicts == nullptr) {
        return;
    }
    const auto it = verdicts->find({item, hash});
    if (it == verdicts->end()) {
        out.push_back(where + ": no verdict for " + what + " candidate " + hash);
    } else if (it->second != want) {
        out.push_back(where + ": " + what + " candidate " + hash + " was judged " +
                      (it->second ? "correct" : "incorrect"));
    }
}

void validate_record(const json& record, ArtifactKind kind, const std::string& where, const VerdictIndex* verdicts,
                     std::vector<std::string>& out) {
    const json& schema = kind == ArtifactKind::sft ? sft_record_schema() : dpo_record_schema();
    auto problems = validate_json_schema(schema, record);
    if (!problems.empty()) {
        for (auto& p : problems) {
            out.push_back(where + ": " + p);
        }
        return;
    }
    if (kind == ArtifactKind::sft) {
        const auto ex = sft_from_json(record);
        check_roles(ex.messages, where, out);
        if (ex.messages.back().role != Role::assistant) {
            out.push_back(where + ": last message is not an assistant reply");
        }
        if (hash_of_final(ex.messages) != ex.candidate_hash) {
            out.push_back(where + ": candidate_hash does not match the final answer");
        }
        check_verdict(verdicts, ex.item_id, ex.candidate_hash, true, where, "final", out);
        return;
    }
    const auto p = dpo_from_json(record);
    if (p.chosen == p.rejected) {
        out.push_back(where + ": chosen and rejected are identical");
    } else if (p.chosen.front() == p.rejected.front()) {
        out.push_back(where + ": prompt is not the longest common prefix");
    }
    if (p.chosen.back().role != Role::assistant || p.rejected.back().role != Role::assistant) {
        out.push_back(where + ": chosen and rejected must end with an assistant reply");
    }
    auto full_chosen = p.prompt;
    full_chosen.insert(full_chosen.end(), p.chosen.begin(), p.chosen.end());
    auto full_rejected = p.prompt;
    full_rejected.insert(full_rejected.end(), p.rejected.begin(), p.rejected.end());
    check_roles(full_chosen, where + " (chosen)", out);
    check_roles(full_rejected, where + " (rejected)", out);
    if (hash_of_final(p.chosen) != p.chosen_hash) {
        out.push_back(where + ": chosen_candidate_hash does not match the chosen final answer");
    }
    if (hash_of_final(p.rejected) != p.rejected_hash) {
        out.push_back(where + ": rejected_candidate_hash does not match the rejected final answer");
    }
    check_verdict(verdicts, p.item_id, p.chosen_hash, true, where, "chosen", out);
    check_verdict(verdicts, p.item_id, p.rejected_hash, false, where, "rejected", out);
}

}  // namespace

std::vector<std::string> validate_artifact(const std::filesystem::path& path, ArtifactKind kind,
                                           const VerdictIndex* verdicts) {
    std::vector<std::string> out;
    if (!std::filesystem::exists(path)) {
        out.push_back(path.string() + ": no such file");
        return out;
    }
    if (kind == ArtifactKind::sft || kind == ArtifactKind::dpo) {
        for_each_jsonl(
            path,
            [&](const json& record, std::size_t line) {
                validate_record(record, kind, "line " + std::to_string(line), verdicts, out);
            },
            [&](const std::string& message, std::size_t line) {
                out.push_back("line " + std::to_string(line) + ": " + message);
            });
        return out;
    }
    json doc;
    try {
        doc = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        out.push_back(std::string("invalid JSON: ") + e.what());
        return out;
    }
    const json& schema = kind == ArtifactKind::stats ? stats_schema() : recipe_schema();
    out = validate_json_schema(schema, doc);
    if (!out.empty()) {
        return out;
    }
    if (kind == ArtifactKind::recipe) {
        const bool dpo = doc.at("stage") == "dpo";
        if (dpo && !doc.contains("beta")) {
            out.push_back("/: dpo recipe lacks beta");
        }
        if (!dpo && doc.contains("beta")) {
            out.push_back("/beta: only the dpo recipe carries beta");
        }
        return out;
    }
    const auto stats = doc.get<DatasetStats>();
    if (stats.input_len.max < stats.input_len.mean) {
        out.push_back("/input_len: max below mean");
    }
    if (stats.num_sft > stats.num_items) {
        out.push_back("/num_sft: more examples than items");
    }
    for (std::size_t i = 1; i < stats.recall_by_depth.size(); ++i) {
        if (stats.recall_by_depth[i] < stats.recall_by_depth[i - 1]) {
            out.push_back("/recall_by_depth/" + std::to_string(i) + ": recall decreases");
        }
    }
    return out;
}

}  // namespace coc
