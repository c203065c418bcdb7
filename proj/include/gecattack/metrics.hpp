#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include "gecattack/backends.hpp"
#include "gecattack/core.hpp"
#include "gecattack/similarity.hpp"

namespace gecattack {

// The four reference-free metrics: SOME, Scribendi, IMPARA and the LLM
// judges (sentence and edit variants), plus the prompt/edit machinery the
// LLM variants need.

struct SomeWeights {
    double alpha = 0.55;
    double beta = 0.43;
    double gamma = 0.02;

    void validate() const {
        if (alpha < 0.0 || beta < 0.0 || gamma < 0.0)
            throw ConfigError("some weights must be non-negative");
        if (std::abs(alpha + beta + gamma - 1.0) > 1e-9)
            throw ConfigError("some weights must sum to 1");
    }
};

struct ImparaConfig {
    double theta = 0.9;  // similarity threshold in [0,1]

    void validate() const {
        if (theta < 0.0 || theta > 1.0) throw ConfigError("impara theta must be in [0,1]");
    }
};

// One contiguous edited region of a token alignment. `source_pos` is the
// offset of the region in the source token list (insertion point for pure
// insertions), which is what makes edit scripts applicable.
struct EditSpan {
    std::vector<std::string> source_tokens;
    std::vector<std::string> target_tokens;
    std::size_t source_pos = 0;
};

enum class PromptMode { sentence, edits };

// One source with 1-5 (system, hypothesis) pairs rendered into a single prompt.
struct PromptBatch {
    Sentence source;
    std::vector<std::pair<std::string, Sentence>> targets;
    PromptMode mode = PromptMode::sentence;
};

inline double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw BackendError("embedding dimensions differ");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) throw BackendError("zero-norm embedding");
    return dot / std::sqrt(na * nb);
}

// SOME(S,H) = alpha*G(H) + beta*F(H) + gamma*M(S,H).
inline ScoreRecord some_score(const EvalUnit& unit, const RegressionScorer& scorer,
                              const SomeWeights& weights = {}) {
    weights.validate();
    const std::string src = detokenize(unit.source);
    const std::string hyp = detokenize(unit.hypothesis);
    const double g = scorer.score_g(hyp);
    const double f = scorer.score_f(hyp);
    const double m = scorer.score_m(src, hyp);
    ScoreRecord r;
    r.metric_id = "some";
    r.system_id = unit.system_id;
    r.index = unit.index;
    r.score = weights.alpha * g + weights.beta * f + weights.gamma * m;
    r.components = {{"some_g", g}, {"some_f", f}, {"some_m", m}};
    return r;
}

// Scribendi(S,H): 0 if S = H, 1 if perplexity drops and the surface gate
// passes, -1 otherwise. Both inequalities are strict.
inline ScoreRecord scribendi_score(const EvalUnit& unit, const PerplexityScorer& ppl,
                                   double surface_threshold = 0.8) {
    const std::string src = detokenize(unit.source);
    const std::string hyp = detokenize(unit.hypothesis);
    ScoreRecord r;
    r.metric_id = "scribendi";
    r.system_id = unit.system_id;
    r.index = unit.index;
    const SimilarityReport sim = surface_similarity(src, hyp);
    const double ppl_src = ppl.score(src);
    const double ppl_hyp = ppl.score(hyp);
    r.components = {{"ppl_src", ppl_src}, {"ppl_hyp", ppl_hyp}, {"ldr", sim.ldr}, {"tsr", sim.tsr}};
    if (src == hyp) {
        r.score = 0.0;
    } else if (ppl_src > ppl_hyp && sim.max_sim > surface_threshold) {
        r.score = 1.0;
    } else {
        r.score = -1.0;
    }
    validate_record(r);
    return r;
}

// IMPARA(S,H) = QE(H) if SE(S,H) > theta else 0, with SE the cosine of the
// mean-pooled embeddings.
inline ScoreRecord impara_score(const EvalUnit& unit, const RegressionScorer& scorer,
                                const Embedder& embedder, const ImparaConfig& cfg = {}) {
    cfg.validate();
    const std::string src = detokenize(unit.source);
    const std::string hyp = detokenize(unit.hypothesis);
    const double se = cosine_similarity(embedder.embed(src), embedder.embed(hyp));
    const double qe = scorer.score_qe(hyp);
    ScoreRecord r;
    r.metric_id = "impara";
    r.system_id = unit.system_id;
    r.index = unit.index;
    r.score = se > cfg.theta ? qe : 0.0;
    r.components = {{"qe", qe}, {"se", se}};
    return r;
}

// ---------------------------------------------------------------------------
// Edit extraction / serialization for LLM-E.

// Minimal token-level edit script (unit costs), merged into maximal runs of
// non-matching operations. Alignment ties resolve substitution > insertion >
// deletion scanning left to right, so the output is deterministic.
inline std::vector<EditSpan> extract_edits(const Sentence& source, const Sentence& hypothesis) {
    const std::vector<std::string>& s = source.tokens;
    const std::vector<std::string>& t = hypothesis.tokens;
    const std::size_t n = s.size(), m = t.size();

    // dp[i][j] = distance between source suffix i.. and target suffix j..
    std::vector<std::vector<std::size_t>> dp(n + 1, std::vector<std::size_t>(m + 1, 0));
    for (std::size_t i = 0; i <= n; ++i) dp[i][m] = n - i;
    for (std::size_t j = 0; j <= m; ++j) dp[n][j] = m - j;
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t j = m; j-- > 0;) {
            const std::size_t sub = dp[i + 1][j + 1] + (s[i] == t[j] ? 0 : 1);
            dp[i][j] = std::min({sub, dp[i][j + 1] + 1, dp[i + 1][j] + 1});
        }
    }

    std::vector<EditSpan> spans;
    EditSpan run;
    bool in_run = false;
    const auto flush = [&]() {
        if (in_run) {
            spans.push_back(run);
            run = EditSpan{};
            in_run = false;
        }
    };
    const auto extend = [&](std::size_t pos) {
        if (!in_run) {
            run.source_pos = pos;
            in_run = true;
        }
    };

    std::size_t i = 0, j = 0;
    while (i < n || j < m) {
        if (i < n && j < m && s[i] == t[j] && dp[i][j] == dp[i + 1][j + 1]) {
            flush();
            ++i;
            ++j;
        } else if (i < n && j < m && dp[i][j] == dp[i + 1][j + 1] + 1) {
            extend(i);
            run.source_tokens.push_back(s[i]);
            run.target_tokens.push_back(t[j]);
            ++i;
            ++j;
        } else if (j < m && dp[i][j] == dp[i][j + 1] + 1) {
            extend(i);
            run.target_tokens.push_back(t[j]);
            ++j;
        } else {
            extend(i);
            run.source_tokens.push_back(s[i]);
            ++i;
        }
    }
    flush();
    return spans;
}

// "[src → tgt]" per span, spans joined by single spaces; an empty side
// simply drops out ("[the →]" for a deletion, "[→ the]" for an
// insertion). No edits render as the empty string.
inline std::string render_edits(const std::vector<EditSpan>& spans) {
    std::string out;
    for (std::size_t k = 0; k < spans.size(); ++k) {
        if (k) out += ' ';
        out += '[';
        std::vector<std::string> parts = spans[k].source_tokens;
        parts.push_back("→");
        parts.insert(parts.end(), spans[k].target_tokens.begin(), spans[k].target_tokens.end());
        for (std::size_t p = 0; p < parts.size(); ++p) {
            if (p) out += ' ';
            out += parts[p];
        }
        out += ']';
    }
    return out;
}

// ---------------------------------------------------------------------------
// LLM judge prompting.

inline std::string build_prompt(const PromptBatch& batch) {
    if (batch.targets.empty() || batch.targets.size() > 5)
        throw DataError("prompt batch must contain between 1 and 5 targets");

    std::string p;
    p += "The goal of this task is to rank the presented targets based on the quality of the "
         "sentences. After reading the source sentence and target sentences, please assign a "
         "score from a minimum of 1 point to a maximum of 5 points to each target based on the "
         "quality of the sentence (note that you can assign the same score multiple times).\n";
    if (batch.mode == PromptMode::edits) {
        p += "\nFor targets without any edits, if the sentence is correct, they will be awarded "
             "5 points; if there is an error, they will receive 1 point.\n";
        p += "\nThe edits in each target are indicated as follows:\n";
        p += "Insert \"the\": [→the]\n";
        p += "Delete \"the\": [the→]\n";
        p += "Replace \"the\" with \"a\": [the→a]\n";
    }
    p += "\n# source\n\n";
    p += detokenize(batch.source);
    p += "\n\n# targets\n";
    for (const auto& [system_id, hyp] : batch.targets) {
        (void)system_id;
        p += "\n";
        if (batch.mode == PromptMode::sentence) {
            p += detokenize(hyp);
        } else {
            p += render_edits(extract_edits(batch.source, hyp));
        }
        p += "\n";
    }
    p += "\n# output format\n\n";
    p += "The output should be a markdown code snippet formatted in the following schema, "
         "including the leading and trailing \"```json\" and \"```\":\n";
    p += "\n```json\n{\n";
    for (std::size_t k = 1; k <= batch.targets.size(); ++k) {
        p += "\"target" + std::to_string(k) + "_score\": int // assigned score for target " +
             std::to_string(k) + "\n";
    }
    p += "}\n```\n";
    return p;
}

// Reads target1_score..targetN_score out of the first fenced code block (or,
// failing that, the first brace-delimited object). Values clamp into [1,5];
// anything missing or non-integer is a parse failure so the caller can retry.
inline std::optional<std::vector<int>> parse_llm_scores(const std::string& response, std::size_t n,
                                                        std::string* error = nullptr) {
    const auto fail = [&](const std::string& why) -> std::optional<std::vector<int>> {
        if (error) *error = why;
        return std::nullopt;
    };
    if (n == 0) return fail("no targets requested");

    std::string block;
    const std::size_t open = response.find("```");
    if (open != std::string::npos) {
        std::size_t body = response.find('\n', open);
        if (body != std::string::npos) {
            const std::size_t close = response.find("```", body);
            if (close != std::string::npos) block = response.substr(body, close - body);
        }
    }
    if (block.empty()) {
        const std::size_t lbrace = response.find('{');
        if (lbrace == std::string::npos) return fail("response contains no json block");
        int depth = 0;
        std::size_t end = std::string::npos;
        for (std::size_t i = lbrace; i < response.size(); ++i) {
            if (response[i] == '{') ++depth;
            if (response[i] == '}' && --depth == 0) {
                end = i;
                break;
            }
        }
        if (end == std::string::npos) return fail("unterminated json object");
        block = response.substr(lbrace, end - lbrace + 1);
    }

    static const std::regex entry_re(
        "\"?target([0-9]+)_score\"?\\s*:\\s*(-?[0-9]+)(?![0-9.])");
    std::map<std::size_t, int> found;
    for (auto it = std::sregex_iterator(block.begin(), block.end(), entry_re);
         it != std::sregex_iterator(); ++it) {
        const std::size_t k = std::stoul((*it)[1].str());
        if (k >= 1 && k <= n && !found.count(k)) {
            long v = std::stol((*it)[2].str());
            found[k] = static_cast<int>(std::clamp<long>(v, 1, 5));
        }
    }
    std::vector<int> out;
    out.reserve(n);
    for (std::size_t k = 1; k <= n; ++k) {
        auto it = found.find(k);
        if (it == found.end()) return fail("missing integer target" + std::to_string(k) + "_score");
        out.push_back(it->second);
    }
    return out;
}

struct BatchPolicy {
    enum class Order { fixed, shuffled };
    Order order = Order::fixed;
    std::uint64_t seed = 0;
};

// Scores every (system, index) unit with the LLM judge. Systems at each
// index are split into prompts of at most five targets; a batch whose
// response stays unparseable after the retry budget is marked invalid rather
// than given a made-up score, and the failure is reported via `warnings`.
inline std::vector<ScoreRecord> llm_metric_score(const std::vector<EvalUnit>& units,
                                                 const ChatModel& chat, PromptMode mode,
                                                 const BatchPolicy& policy = {}, int retries = 3,
                                                 std::vector<std::string>* warnings = nullptr) {
    const std::string metric_id = mode == PromptMode::sentence ? "llm_s" : "llm_e";

    std::map<std::size_t, std::vector<const EvalUnit*>> by_index;
    for (const EvalUnit& u : units) by_index[u.index].push_back(&u);

    std::vector<ScoreRecord> records;
    records.reserve(units.size());
    for (auto& [index, group] : by_index) {
        std::sort(group.begin(), group.end(), [](const EvalUnit* a, const EvalUnit* b) {
            return a->system_id < b->system_id;
        });
        const std::string src = detokenize(group.front()->source);
        for (const EvalUnit* u : group) {
            if (detokenize(u->source) != src)
                throw DataError("units at index " + std::to_string(index) +
                                " do not share one source");
        }
        if (policy.order == BatchPolicy::Order::shuffled) {
            std::mt19937_64 rng(policy.seed ^ detail::stable_hash(index, "llm_batch", ""));
            std::shuffle(group.begin(), group.end(), rng);
        }

        for (std::size_t start = 0; start < group.size(); start += 5) {
            const std::size_t count = std::min<std::size_t>(5, group.size() - start);
            PromptBatch batch;
            batch.source = group.front()->source;
            batch.mode = mode;
            for (std::size_t k = 0; k < count; ++k)
                batch.targets.emplace_back(group[start + k]->system_id,
                                           group[start + k]->hypothesis);
            const std::string prompt = build_prompt(batch);

            std::optional<std::vector<int>> scores;
            std::string parse_error;
            for (int attempt = 0; attempt <= std::max(0, retries) && !scores; ++attempt)
                scores = parse_llm_scores(chat.complete(prompt), count, &parse_error);
            if (!scores && warnings)
                warnings->push_back("index " + std::to_string(index) + ": batch of " +
                                    std::to_string(count) + " starting at system " +
                                    group[start]->system_id + " invalid after " +
                                    std::to_string(1 + std::max(0, retries)) +
                                    " attempt(s): " + parse_error);

            for (std::size_t k = 0; k < count; ++k) {
                ScoreRecord r;
                r.metric_id = metric_id;
                r.system_id = group[start + k]->system_id;
                r.index = index;
                if (scores) {
                    r.score = (*scores)[k];
                    r.components = {{"llm_raw", static_cast<double>((*scores)[k])}};
                } else {
                    r.valid = false;
                    r.score = 0.0;
                }
                validate_record(r);
                records.push_back(std::move(r));
            }
        }
    }
    return records;
}

}  // namespace gecattack
