#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gecattack/attacks.hpp"
#include "gecattack/backends.hpp"
#include "gecattack/core.hpp"
#include "gecattack/http_chat.hpp"
#include "gecattack/metrics.hpp"
#include "gecattack/ranking.hpp"
#include "gecattack/trueskill.hpp"

namespace gecattack {

// Run configuration: one JSON file with a section per subsystem. Unknown
// keys are rejected so typos fail loudly instead of silently using defaults.

struct BackendConfig {
    std::string kind = "mock";  // built-in backends: "mock"
    std::uint64_t seed = 0;
    std::string model;       // model identifier for real backends
    std::string device;      // opaque placement hint
    int batch_size = 32;
    double timeout_s = 30.0;
    int retries = 3;
    bool single_threaded = false;  // serialize all calls to this suite
    // chat-specific: "" inherits `kind`; "openai-compat" enables HTTP chat
    std::string chat_kind;
    std::string chat_base_url;
    std::string chat_model;
    std::string chat_api_key_env = "OPENAI_API_KEY";
};

struct MetricConfig {
    SomeWeights some_weights;
    ImparaConfig impara;
    double scribendi_threshold = 0.8;
    BatchPolicy llm_batch;
};

struct RankingConfig {
    TrueSkillConfig trueskill;
    // Published convention: Scribendi system scores are sums, the rest means.
    std::map<std::string, Aggregation> default_agg = {
        {"some", Aggregation::mean},  {"scribendi", Aggregation::sum},
        {"impara", Aggregation::mean}, {"llm_s", Aggregation::mean},
        {"llm_e", Aggregation::mean}};
};

struct RunConfig {
    BackendConfig backends;
    MetricConfig metric;
    AttackConfig attack;
    RankingConfig ranking;
    std::uint64_t seed = 0;
    std::string source_path;
    std::string corpus_path;
    std::string out_path;

    void validate() const {
        metric.some_weights.validate();
        metric.impara.validate();
        if (metric.scribendi_threshold < 0.0 || metric.scribendi_threshold > 1.0)
            throw ConfigError("scribendi threshold must be in [0,1]");
        attack.validate();
        ranking.trueskill.validate();
    }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, const std::string& section,
                                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool known = false;
        for (const char* a : allowed)
            if (key == a) {
                known = true;
                break;
            }
        if (!known) throw ConfigError("unknown config key '" + section + "." + key + "'");
    }
}

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end()) {
        try {
            out = it->get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(std::string("config key '") + key + "' has the wrong type");
        }
    }
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
    detail::reject_unknown_keys(
        j, "", {"backends", "metric", "attack", "ranking", "seed", "source", "corpus", "out"});
    RunConfig cfg;
    detail::read_if(j, "seed", cfg.seed);
    detail::read_if(j, "source", cfg.source_path);
    detail::read_if(j, "corpus", cfg.corpus_path);
    detail::read_if(j, "out", cfg.out_path);

    // Sections inherit the global seed unless they set their own.
    cfg.backends.seed = cfg.seed;
    cfg.ranking.trueskill.seed = cfg.seed;
    cfg.metric.llm_batch.seed = cfg.seed;

    if (auto it = j.find("backends"); it != j.end()) {
        detail::reject_unknown_keys(*it, "backends",
                                    {"kind", "seed", "model", "device", "batch_size", "timeout_s",
                                     "retries", "single_threaded", "chat_kind", "chat_base_url",
                                     "chat_model", "chat_api_key_env"});
        detail::read_if(*it, "kind", cfg.backends.kind);
        detail::read_if(*it, "seed", cfg.backends.seed);
        detail::read_if(*it, "model", cfg.backends.model);
        detail::read_if(*it, "device", cfg.backends.device);
        detail::read_if(*it, "batch_size", cfg.backends.batch_size);
        detail::read_if(*it, "timeout_s", cfg.backends.timeout_s);
        detail::read_if(*it, "retries", cfg.backends.retries);
        detail::read_if(*it, "single_threaded", cfg.backends.single_threaded);
        detail::read_if(*it, "chat_kind", cfg.backends.chat_kind);
        detail::read_if(*it, "chat_base_url", cfg.backends.chat_base_url);
        detail::read_if(*it, "chat_model", cfg.backends.chat_model);
        detail::read_if(*it, "chat_api_key_env", cfg.backends.chat_api_key_env);
    }

    if (auto it = j.find("metric"); it != j.end()) {
        detail::reject_unknown_keys(
            *it, "metric",
            {"some_weights", "impara_theta", "scribendi_threshold", "llm_batch_order", "llm_batch_seed"});
        if (auto w = it->find("some_weights"); w != it->end()) {
            if (!w->is_array() || w->size() != 3)
                throw ConfigError("metric.some_weights must be [alpha, beta, gamma]");
            cfg.metric.some_weights.alpha = (*w)[0].get<double>();
            cfg.metric.some_weights.beta = (*w)[1].get<double>();
            cfg.metric.some_weights.gamma = (*w)[2].get<double>();
        }
        detail::read_if(*it, "impara_theta", cfg.metric.impara.theta);
        detail::read_if(*it, "scribendi_threshold", cfg.metric.scribendi_threshold);
        std::string order;
        detail::read_if(*it, "llm_batch_order", order);
        if (order == "shuffled") {
            cfg.metric.llm_batch.order = BatchPolicy::Order::shuffled;
        } else if (!order.empty() && order != "fixed") {
            throw ConfigError("metric.llm_batch_order must be 'fixed' or 'shuffled'");
        }
        detail::read_if(*it, "llm_batch_seed", cfg.metric.llm_batch.seed);
    }

    if (auto it = j.find("attack"); it != j.end()) {
        detail::reject_unknown_keys(*it, "attack",
                                    {"scribendi_candidates", "impara_k",
                                     "include_source_candidate", "some_weights_gf"});
        detail::read_if(*it, "scribendi_candidates", cfg.attack.scribendi_candidates);
        detail::read_if(*it, "impara_k", cfg.attack.impara_k);
        detail::read_if(*it, "include_source_candidate", cfg.attack.include_source_candidate);
        if (auto w = it->find("some_weights_gf"); w != it->end()) {
            if (!w->is_array() || w->size() != 2)
                throw ConfigError("attack.some_weights_gf must be [g_weight, f_weight]");
            cfg.attack.some_weight_g = (*w)[0].get<double>();
            cfg.attack.some_weight_f = (*w)[1].get<double>();
        }
    }

    if (auto it = j.find("ranking"); it != j.end()) {
        detail::reject_unknown_keys(*it, "ranking", {"trueskill", "aggregation", "rank_by_conservative"});
        if (auto ts = it->find("trueskill"); ts != it->end()) {
            detail::reject_unknown_keys(
                *ts, "ranking.trueskill",
                {"mu0", "sigma0", "beta", "tau", "draw_probability", "seed"});
            detail::read_if(*ts, "mu0", cfg.ranking.trueskill.mu0);
            detail::read_if(*ts, "sigma0", cfg.ranking.trueskill.sigma0);
            detail::read_if(*ts, "beta", cfg.ranking.trueskill.beta);
            detail::read_if(*ts, "tau", cfg.ranking.trueskill.tau);
            detail::read_if(*ts, "draw_probability", cfg.ranking.trueskill.draw_probability);
            detail::read_if(*ts, "seed", cfg.ranking.trueskill.seed);
        }
        detail::read_if(*it, "rank_by_conservative", cfg.ranking.trueskill.rank_by_conservative);
        if (auto agg = it->find("aggregation"); agg != it->end()) {
            if (!agg->is_object()) throw ConfigError("ranking.aggregation must be an object");
            for (const auto& [metric, value] : agg->items()) {
                const std::string v = value.get<std::string>();
                if (v == "mean") {
                    cfg.ranking.default_agg[metric] = Aggregation::mean;
                } else if (v == "sum") {
                    cfg.ranking.default_agg[metric] = Aggregation::sum;
                } else {
                    throw ConfigError("ranking.aggregation values must be 'mean' or 'sum'");
                }
            }
        }
    }

    cfg.validate();
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path + " is not valid json: " + e.what());
    }
    return parse_run_config(j);
}

// Builds the backend suite a run uses. "mock" is the built-in suite; the
// chat interface can additionally be served by an OpenAI-compatible HTTP
// endpoint. Neural scorer backends plug in behind the same interfaces but
// are not bundled here.
inline BackendSuite load_backends(const BackendConfig& cfg) {
    BackendSuite suite;
    if (cfg.kind == "mock") {
        suite = make_mock_suite(cfg.seed).backends();
    } else {
        throw BackendError("unknown backend kind '" + cfg.kind +
                           "' (built-in kinds: mock; chat_kind additionally supports "
                           "openai-compat)");
    }
    suite.chat_retries = cfg.retries;

    const std::string chat_kind = cfg.chat_kind.empty() ? cfg.kind : cfg.chat_kind;
    if (chat_kind == "openai-compat") {
        HttpChatModel::Options opt;
        opt.base_url = cfg.chat_base_url;
        opt.model = cfg.chat_model.empty() ? cfg.model : cfg.chat_model;
        opt.api_key_env = cfg.chat_api_key_env;
        opt.timeout_s = cfg.timeout_s;
        opt.retries = cfg.retries;
        suite.chat = std::make_shared<HttpChatModel>(opt);
    } else if (chat_kind != "mock") {
        throw BackendError("unknown chat backend kind '" + chat_kind + "'");
    }

    if (cfg.single_threaded) {
        suite.ppl = std::make_shared<SerializedPerplexity>(suite.ppl);
        suite.regression = std::make_shared<SerializedRegression>(suite.regression);
        suite.embedder = std::make_shared<SerializedEmbedder>(suite.embedder);
        suite.chat = std::make_shared<SerializedChat>(suite.chat);
    }
    return suite;
}

}  // namespace gecattack
