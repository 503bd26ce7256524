#include "coc/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "coc/errors.hpp"
#include "coc/hash.hpp"
#include "coc/jsonl.hpp"
#include "coc/rng.hpp"

namespace coc {

const std::vector<std::size_t>& default_length_ladder() {
    static const std::vector<std::size_t> ladder{8192, 16384, 32768, 65536, 131072};
    return ladder;
}

std::string_view to_string(LengthMode mode) {
    return mode == LengthMode::pad_distractors ? "pad_distractors" : "truncate_prefix";
}

LengthMode length_mode_from_string(std::string_view name) {
    if (name == "pad_distractors" || name == "pad") {
        return LengthMode::pad_distractors;
    }
    if (name == "truncate_prefix" || name == "truncate") {
        return LengthMode::truncate_prefix;
    }
    throw ConfigError("unknown length mode '" + std::string(name) + "'");
}

std::size_t count_tokens(std::string_view text, const Tokenizer& tokenizer) { return tokenizer.count(text); }

std::vector<Chunk> chunk_document(const Document& doc, std::size_t chunk_size_tokens, const Tokenizer& tokenizer) {
    if (chunk_size_tokens == 0) {
        throw Error("chunk size must be at least 1 token");
    }
    const auto spans = tokenizer.spans(doc.text);
    if (spans.empty()) {
        throw EmptyDocument("document '" + doc.id + "' has no tokens");
    }
    std::vector<Chunk> chunks;
    chunks.reserve(spans.size() / chunk_size_tokens + 1);
    for (std::size_t first = 0; first < spans.size(); first += chunk_size_tokens) {
        const std::size_t next = first + chunk_size_tokens;
        const std::size_t begin = first == 0 ? 0 : spans[first].begin;
        const std::size_t end = next < spans.size() ? spans[next].begin : doc.text.size();
        Chunk chunk;
        chunk.index = static_cast<int>(chunks.size() + 1);
        chunk.text = doc.text.substr(begin, end - begin);
        chunk.token_count = std::min(chunk_size_tokens, spans.size() - first);
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

std::string render_tagged_context(const std::vector<Chunk>& chunks) {
    std::string out;
    for (const auto& chunk : chunks) {
        if (!out.empty()) {
            out += ' ';
        }
        const auto idx = std::to_string(chunk.index);
        out += "<para " + idx + "> ";
        out += chunk.text;
        out += " </para " + idx + ">";
    }
    return out;
}

std::vector<Chunk> parse_tagged_context(std::string_view rendered, const Tokenizer& tokenizer) {
    std::vector<Chunk> chunks;
    std::size_t pos = 0;
    auto fail = [&](const std::string& why) {
        throw Error("malformed tagged context at byte " + std::to_string(pos) + ": " + why);
    };
    while (pos < rendered.size()) {
        if (!chunks.empty()) {
            if (rendered[pos] != ' ') {
                fail("expected separator");
            }
            ++pos;
        }
        constexpr std::string_view open = "<para ";
        if (rendered.substr(pos, open.size()) != open) {
            fail("expected <para N>");
        }
        pos += open.size();
        int index = 0;
        auto [ptr, ec] = std::from_chars(rendered.data() + pos, rendered.data() + rendered.size(), index);
        if (ec != std::errc{} || index < 1) {
            fail("bad paragraph index");
        }
        pos = static_cast<std::size_t>(ptr - rendered.data());
        if (rendered.substr(pos, 2) != "> ") {
            fail("expected '> '");
        }
        pos += 2;
        const std::string close = " </para " + std::to_string(index) + ">";
        const auto end = rendered.find(close, pos);
        if (end == std::string_view::npos) {
            fail("missing " + close);
        }
        Chunk chunk;
        chunk.index = index;
        chunk.text = std::string(rendered.substr(pos, end - pos));
        chunk.token_count = tokenizer.count(chunk.text);
        chunks.push_back(std::move(chunk));
        pos = end + close.size();
    }
    return chunks;
}

namespace {

std::size_t chunk_count_for(std::size_t tokens, std::size_t chunk_size) {
    return (tokens + chunk_size - 1) / chunk_size;
}

SynthesizedContext truncate_context(const QAItem& item, const Document& base, const LengthSpec& spec,
                                    std::size_t chunk_size, const Tokenizer& tokenizer) {
    const auto spans = tokenizer.spans(base.text);
    SynthesizedContext out;
    out.document.id = base.id + "@" + std::to_string(spec.target_tokens);
    out.document.source = "truncate:" + base.id;
    if (spans.size() <= spec.target_tokens) {
        out.document.text = base.text;
        out.token_count = spans.size();
    } else {
        out.document.text = base.text.substr(0, spans[spec.target_tokens - 1].end);
        out.token_count = spec.target_tokens;
    }
    if (item.gold_evidence) {
        for (int idx : *item.gold_evidence) {
            const std::size_t last_token =
                std::min(static_cast<std::size_t>(idx) * chunk_size, spans.size()) - 1;
            if (last_token >= spec.target_tokens) {
                out.gold_cut.push_back(idx);
            }
        }
        std::sort(out.gold_cut.begin(), out.gold_cut.end());
        out.gold_cut.erase(std::unique(out.gold_cut.begin(), out.gold_cut.end()), out.gold_cut.end());
    }
    return out;
}

}  // namespace

SynthesizedContext synthesize_context(const QAItem& item, const Document& base,
                                      const std::vector<Document>& distractor_pool, const LengthSpec& spec,
                                      std::uint64_t seed, std::size_t chunk_size_tokens,
                                      const Tokenizer& tokenizer) {
    if (spec.target_tokens < chunk_size_tokens) {
        throw TargetTooSmall("target of " + std::to_string(spec.target_tokens) +
                             " tokens is below the chunk size");
    }
    if (spec.mode == LengthMode::truncate_prefix) {
        return truncate_context(item, base, spec, chunk_size_tokens, tokenizer);
    }

    const auto base_chunks = chunk_document(base, chunk_size_tokens, tokenizer);
    std::vector<const Chunk*> kept;
    if (item.gold_evidence && !item.gold_evidence->empty()) {
        std::set<int> wanted(item.gold_evidence->begin(), item.gold_evidence->end());
        for (int idx : wanted) {
            if (idx < 1 || static_cast<std::size_t>(idx) > base_chunks.size()) {
                throw Error("gold evidence index " + std::to_string(idx) + " outside document '" + base.id + "'");
            }
            kept.push_back(&base_chunks[static_cast<std::size_t>(idx - 1)]);
        }
    } else {
        for (const auto& c : base_chunks) {
            kept.push_back(&c);
        }
    }
    std::size_t total = 0;
    for (const auto* c : kept) {
        total += c->token_count;
    }
    if (total > spec.target_tokens) {
        throw TargetTooSmall("gold evidence of item '" + item.id + "' has " + std::to_string(total) +
                             " tokens, above the target of " + std::to_string(spec.target_tokens));
    }

    std::vector<Chunk> pool;
    for (const auto& doc : distractor_pool) {
        if (doc.id == base.id) {
            continue;
        }
        try {
            auto chunks = chunk_document(doc, chunk_size_tokens, tokenizer);
            std::move(chunks.begin(), chunks.end(), std::back_inserter(pool));
        } catch (const EmptyDocument&) {
        }
    }
    if (pool.empty() && spec.target_tokens - total > chunk_size_tokens) {
        throw InsufficientDistractors("distractor pool is empty");
    }

    DeterministicRng rng(derive_seed(seed, {fnv1a64(item.id), spec.target_tokens}));
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    rng.shuffle(std::span<std::size_t>(order));

    std::vector<const Chunk*> distractors;
    for (std::size_t i : order) {
        if (total == spec.target_tokens) {
            break;
        }
        if (total + pool[i].token_count <= spec.target_tokens) {
            total += pool[i].token_count;
            distractors.push_back(&pool[i]);
        }
    }
    if (spec.target_tokens - total > chunk_size_tokens) {
        throw InsufficientDistractors("distractor pool reaches only " + std::to_string(total) + " of " +
                                      std::to_string(spec.target_tokens) + " tokens");
    }

    // Gold chunks take a random subset of slots, in their original order.
    const std::size_t slots = kept.size() + distractors.size();
    std::vector<std::size_t> positions(slots);
    for (std::size_t i = 0; i < slots; ++i) {
        positions[i] = i;
    }
    rng.shuffle(std::span<std::size_t>(positions));
    std::vector<bool> is_gold(slots, false);
    for (std::size_t i = 0; i < kept.size(); ++i) {
        is_gold[positions[i]] = true;
    }

    SynthesizedContext out;
    out.document.id = base.id + "@" + std::to_string(spec.target_tokens);
    out.document.source = "pad:" + base.id;
    std::size_t next_gold = 0;
    std::size_t next_distractor = 0;
    for (std::size_t slot = 0; slot < slots; ++slot) {
        if (slot > 0) {
            out.document.text += "\n\n";
        }
        const Chunk* piece = is_gold[slot] ? kept[next_gold++] : distractors[next_distractor++];
        out.document.text += piece->text;
    }
    out.kept_chunks = kept.size();
    out.distractor_chunks = distractors.size();
    out.token_count = tokenizer.count(out.document.text);
    return out;
}

const Document* Corpus::find_document(std::string_view id) const {
    for (const auto& d : documents) {
        if (d.id == id) {
            return &d;
        }
    }
    return nullptr;
}

void to_json(nlohmann::json& j, const Document& doc) {
    j = nlohmann::json{{"id", doc.id}, {"text", doc.text}, {"source", doc.source}};
}

void from_json(const nlohmann::json& j, Document& doc) {
    doc.id = j.at("id").get<std::string>();
    doc.text = j.at("text").get<std::string>();
    doc.source = j.value("source", std::string{});
}

void to_json(nlohmann::json& j, const QAItem& item) {
    j = nlohmann::json{{"id", item.id},
                       {"document_id", item.document_id},
                       {"question", item.question},
                       {"gold_answers", item.gold_answers}};
    if (item.gold_evidence) {
        j["gold_evidence"] = *item.gold_evidence;
    }
}

void from_json(const nlohmann::json& j, QAItem& item) {
    item.id = j.at("id").get<std::string>();
    item.document_id = j.at("document_id").get<std::string>();
    item.question = j.at("question").get<std::string>();
    item.gold_answers = j.at("gold_answers").get<std::vector<std::string>>();
    if (j.contains("gold_evidence") && !j.at("gold_evidence").is_null()) {
        item.gold_evidence = j.at("gold_evidence").get<std::vector<int>>();
    } else {
        item.gold_evidence.reset();
    }
}

void to_json(nlohmann::json& j, const Chunk& chunk) {
    j = nlohmann::json{{"index", chunk.index}, {"text", chunk.text}, {"token_count", chunk.token_count}};
}

void load_corpus_into(Corpus& corpus, const std::filesystem::path& path) {
    for_each_jsonl(
        path,
        [&](const json& value, std::size_t line) {
            if (!value.is_object()) {
                throw CorpusParseError(path.string() + ":" + std::to_string(line) + ": expected a JSON object", line);
            }
            try {
                if (value.contains("question")) {
                    QAItem item = value.get<QAItem>();
                    if (item.id.empty() || item.gold_answers.empty()) {
                        throw CorpusParseError(path.string() + ":" + std::to_string(line) +
                                                   ": QA item needs an id and at least one gold answer",
                                               line);
                    }
                    corpus.items.push_back(std::move(item));
                } else {
                    Document doc = value.get<Document>();
                    if (doc.id.empty() || doc.text.empty()) {
                        throw CorpusParseError(path.string() + ":" + std::to_string(line) +
                                                   ": document needs a nonempty id and text",
                                               line);
                    }
                    corpus.documents.push_back(std::move(doc));
                }
            } catch (const json::exception& e) {
                throw CorpusParseError(path.string() + ":" + std::to_string(line) + ": " + e.what(), line);
            }
        },
        [](const std::string& msg, std::size_t line) { throw CorpusParseError(msg, line); });
}

Corpus load_corpus(const std::filesystem::path& path) {
    Corpus corpus;
    load_corpus_into(corpus, path);
    return corpus;
}

void validate_corpus(const Corpus& corpus, std::size_t chunk_size_tokens, const Tokenizer& tokenizer) {
    std::set<std::string> doc_ids;
    for (const auto& d : corpus.documents) {
        if (d.id.empty() || d.text.empty()) {
            throw Error("document with empty id or text");
        }
        if (!doc_ids.insert(d.id).second) {
            throw Error("duplicate document id '" + d.id + "'");
        }
    }
    std::set<std::string> item_ids;
    for (const auto& item : corpus.items) {
        if (!item_ids.insert(item.id).second) {
            throw Error("duplicate QA item id '" + item.id + "'");
        }
        if (item.gold_answers.empty()) {
            throw Error("QA item '" + item.id + "' has no gold answers");
        }
        const Document* doc = corpus.find_document(item.document_id);
        if (doc == nullptr) {
            throw Error("QA item '" + item.id + "' refers to unknown document '" + item.document_id + "'");
        }
        if (item.gold_evidence) {
            const auto chunks = chunk_count_for(tokenizer.count(doc->text), chunk_size_tokens);
            for (int idx : *item.gold_evidence) {
                if (idx < 1 || static_cast<std::size_t>(idx) > chunks) {
                    throw Error("QA item '" + item.id + "' gold evidence " + std::to_string(idx) +
                                " is outside 1.." + std::to_string(chunks));
                }
            }
        }
    }
}

}  // namespace coc
