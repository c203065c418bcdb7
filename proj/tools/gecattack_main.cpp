// Command-line front end: score | attack | rank | ensemble.
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 backend error.

#include <atomic>
#include <cstdio>
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "gecattack/gecattack.hpp"

namespace {

using namespace gecattack;

// Order-preserving parallel map: results land at their input slot no matter
// which worker finishes first.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
    jobs = std::max(1u, jobs);
    if (jobs == 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    std::vector<std::thread> workers;
    for (unsigned t = 0; t < std::min<std::size_t>(jobs, count); ++t) {
        workers.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mu);
                    if (!first_error) first_error = std::current_exception();
                    next.store(count);
                    return;
                }
            }
        });
    }
    for (std::thread& w : workers) w.join();
    if (first_error) std::rethrow_exception(first_error);
}

std::map<std::string, std::string> parse_hyp_args(const std::vector<std::string>& args) {
    std::map<std::string, std::string> out;
    for (const std::string& a : args) {
        const std::size_t eq = a.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == a.size())
            throw ConfigError("--hyp expects NAME=PATH, got '" + a + "'");
        const std::string name = a.substr(0, eq);
        if (out.count(name)) throw ConfigError("duplicate --hyp system name '" + name + "'");
        out[name] = a.substr(eq + 1);
    }
    return out;
}

std::string format_score(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

struct CommonArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned jobs = 1;
};

RunConfig effective_config(const CommonArgs& common) {
    RunConfig cfg;
    if (!common.config_path.empty()) cfg = load_run_config(common.config_path);
    if (common.seed_set) {
        cfg.seed = common.seed;
        cfg.backends.seed = common.seed;
        cfg.ranking.trueskill.seed = common.seed;
        cfg.metric.llm_batch.seed = common.seed;
    }
    return cfg;
}

// Flags win over config-file paths; missing both is a usage error.
std::string resolve_path(const std::string& flag_value, const std::string& config_value,
                         const char* what) {
    if (!flag_value.empty()) return flag_value;
    if (!config_value.empty()) return config_value;
    throw ConfigError(std::string("missing ") + what + " (pass the flag or set it in the config)");
}

int cmd_score(const CommonArgs& common, const std::string& metric, const std::string& source_arg,
              const std::vector<std::string>& hyp_args, std::size_t first_n,
              const std::string& out_arg) {
    RunConfig cfg = effective_config(common);
    const std::string source_path = resolve_path(source_arg, cfg.source_path, "--source");
    const std::string out_path = resolve_path(out_arg, cfg.out_path, "--out");
    const BackendSuite suite = load_backends(cfg.backends);
    const EvaluationSet set = load_parallel(source_path, parse_hyp_args(hyp_args), first_n);
    if (set.systems.empty()) throw ConfigError("at least one --hyp NAME=PATH is required");

    std::vector<EvalUnit> units;
    for (const auto& [system_id, hyps] : set.systems) {
        for (std::size_t i = 0; i < set.sources.size(); ++i) {
            EvalUnit u;
            u.system_id = system_id;
            u.index = i;
            u.source = set.sources[i];
            u.hypothesis = hyps[i];
            units.push_back(std::move(u));
        }
    }

    std::vector<ScoreRecord> records(units.size());
    std::string metric_id;
    if (metric == "some") {
        metric_id = "some";
        parallel_for(units.size(), common.jobs, [&](std::size_t i) {
            records[i] = some_score(units[i], *suite.regression, cfg.metric.some_weights);
        });
    } else if (metric == "scribendi") {
        metric_id = "scribendi";
        parallel_for(units.size(), common.jobs, [&](std::size_t i) {
            records[i] = scribendi_score(units[i], *suite.ppl, cfg.metric.scribendi_threshold);
        });
    } else if (metric == "impara") {
        metric_id = "impara";
        parallel_for(units.size(), common.jobs, [&](std::size_t i) {
            records[i] = impara_score(units[i], *suite.regression, *suite.embedder,
                                      cfg.metric.impara);
        });
    } else if (metric == "llm-s" || metric == "llm-e") {
        const PromptMode mode = metric == "llm-s" ? PromptMode::sentence : PromptMode::edits;
        metric_id = mode == PromptMode::sentence ? "llm_s" : "llm_e";
        std::vector<std::string> llm_warnings;
        records = llm_metric_score(units, *suite.chat, mode, cfg.metric.llm_batch,
                                   suite.chat_retries, &llm_warnings);
        for (const std::string& w : llm_warnings) std::cerr << "warning: " << w << "\n";
    } else {
        throw ConfigError("unknown metric '" + metric +
                          "' (expected some|scribendi|impara|llm-s|llm-e)");
    }

    save_records_jsonl(records, out_path);

    const Aggregation agg = cfg.ranking.default_agg.count(metric_id)
                                ? cfg.ranking.default_agg.at(metric_id)
                                : Aggregation::mean;
    std::vector<std::string> warnings;
    const std::map<std::string, double> summary = absolute_system_score(records, agg, &warnings);
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
    std::map<std::string, std::size_t> valid_counts;
    for (const ScoreRecord& r : records)
        if (r.valid) ++valid_counts[r.system_id];
    for (const auto& [sys, score] : summary) {
        std::cout << "metric=" << metric_id << " system=" << sys << " score="
                  << format_score(score)
                  << " agg=" << (agg == Aggregation::sum ? "sum" : "mean") << " valid="
                  << valid_counts[sys] << "/" << set.sources.size() << "\n";
    }
    std::cout << "wrote " << records.size() << " records to " << out_path << "\n";
    return 0;
}

int cmd_attack(const CommonArgs& common, const std::string& metric,
               const std::string& source_arg, const std::string& corpus_arg, std::size_t first_n,
               const std::string& out_arg, const std::string& index_prefix,
               const std::string& index_out) {
    RunConfig cfg = effective_config(common);
    const std::string source_path = resolve_path(source_arg, cfg.source_path, "--source");
    const std::string out_path = resolve_path(out_arg, cfg.out_path, "--out");
    const std::string corpus_path = corpus_arg.empty() ? cfg.corpus_path : corpus_arg;
    const BackendSuite suite = load_backends(cfg.backends);

    std::vector<Sentence> sources;
    for (const std::string& line : load_lines(source_path)) sources.push_back(tokenize(line));
    if (first_n > 0 && first_n < sources.size()) sources.resize(first_n);

    std::vector<std::string> out_lines(sources.size());
    if (metric == "some") {
        if (corpus_path.empty()) throw ConfigError("attack some requires --corpus");
        std::vector<Sentence> corpus;
        for (const std::string& line : load_lines(corpus_path)) corpus.push_back(tokenize(line));
        const Sentence best = attack_some(corpus, *suite.regression, cfg.attack);
        const std::string text = detokenize(best);
        for (std::string& line : out_lines) line = text;
    } else if (metric == "scribendi") {
        parallel_for(sources.size(), common.jobs, [&](std::size_t i) {
            out_lines[i] = detokenize(attack_scribendi(sources[i], *suite.proposer, *suite.ppl,
                                                       cfg.attack, cfg.metric.scribendi_threshold));
        });
    } else if (metric == "impara") {
        CandidateIndex index;
        if (!index_prefix.empty()) {
            index = load_candidate_index(index_prefix, suite.embedder_id,
                                         suite.embedder->dimension());
        } else if (!corpus_path.empty()) {
            index = build_candidate_index_from_file(
                corpus_path, *suite.embedder, suite.embedder_id,
                static_cast<std::size_t>(std::max(1, cfg.backends.batch_size)));
        } else {
            throw ConfigError("attack impara requires --corpus or --index");
        }
        if (!index_out.empty()) save_candidate_index(index, index_out);
        parallel_for(sources.size(), common.jobs, [&](std::size_t i) {
            out_lines[i] = detokenize(attack_impara(sources[i], index, *suite.regression,
                                                    *suite.embedder, cfg.metric.impara,
                                                    cfg.attack));
        });
    } else if (metric == "llm") {
        for (std::size_t i = 0; i < sources.size(); ++i)
            out_lines[i] = detokenize(attack_llm(sources[i]));
    } else {
        throw ConfigError("unknown attack '" + metric + "' (expected some|scribendi|impara|llm)");
    }

    save_lines(out_path, out_lines);
    std::cout << "wrote " << out_lines.size() << " adversarial hypotheses to " << out_path << "\n";
    return 0;
}

int cmd_rank(const CommonArgs& common, const std::vector<std::string>& score_paths,
             const std::string& mode, const std::string& agg_override,
             const std::string& out_path, const std::string& matrix_out) {
    RunConfig cfg = effective_config(common);

    std::map<std::string, std::vector<ScoreRecord>> by_metric;
    for (const std::string& path : score_paths)
        for (ScoreRecord& r : load_records_jsonl(path)) by_metric[r.metric_id].push_back(std::move(r));
    if (by_metric.empty()) throw DataError("no score records loaded");

    std::vector<RankRow> rows;
    ScoreMatrix matrix;
    if (mode == "abs") {
        std::map<std::string, std::map<std::string, double>> per_metric_scores;
        for (const auto& [metric_id, records] : by_metric) {
            Aggregation agg = cfg.ranking.default_agg.count(metric_id)
                                  ? cfg.ranking.default_agg.at(metric_id)
                                  : Aggregation::mean;
            if (agg_override == "mean") agg = Aggregation::mean;
            if (agg_override == "sum") agg = Aggregation::sum;
            std::vector<std::string> warnings;
            per_metric_scores[metric_id] = absolute_system_score(records, agg, &warnings);
            for (const std::string& w : warnings)
                std::cerr << "warning: " << metric_id << ": " << w << "\n";
        }
        for (const auto& [metric_id, scores] : per_metric_scores) {
            const RankTable ranks = ranks_from_scores(scores, true);
            for (const auto& [sys, score] : scores)
                rows.push_back({sys, metric_id, score, ranks.at(sys)});
        }
        if (!matrix_out.empty()) {
            for (const auto& [metric_id, scores] : per_metric_scores) {
                (void)scores;
                matrix.metrics.push_back(metric_id);
            }
            matrix.higher_is_better.assign(matrix.metrics.size(), true);
            const auto& first_scores = per_metric_scores.begin()->second;
            for (const auto& [sys, score] : first_scores) {
                (void)score;
                matrix.systems.push_back(sys);
                std::vector<double> row;
                for (const std::string& metric_id : matrix.metrics) {
                    const auto& scores = per_metric_scores.at(metric_id);
                    auto it = scores.find(sys);
                    if (it == scores.end())
                        throw DataError("system " + sys + " missing from metric " + metric_id);
                    row.push_back(it->second);
                }
                matrix.values.push_back(std::move(row));
            }
            save_score_matrix(matrix, matrix_out);
        }
    } else if (mode == "rel") {
        for (const auto& [metric_id, records] : by_metric) {
            const RelativeResult rel = relative_rank(records, cfg.ranking.trueskill);
            for (const auto& [sys, rating] : rel.ratings) {
                const double score = cfg.ranking.trueskill.rank_by_conservative
                                         ? rating.mu - 3.0 * rating.sigma
                                         : rating.mu;
                rows.push_back({sys, metric_id, score, rel.ranks.at(sys)});
            }
        }
    } else {
        throw ConfigError("--mode must be abs or rel");
    }

    save_rank_csv(rows, out_path);
    for (const RankRow& r : rows)
        std::cout << r.metric << " " << r.system << " score=" << format_score(r.score)
                  << " rank=" << r.rank << "\n";
    return 0;
}

int cmd_ensemble(const std::string& matrix_path, const std::vector<std::string>& metric_names,
                 const std::string& out_path) {
    ScoreMatrix matrix = load_score_matrix(matrix_path);
    if (!metric_names.empty()) matrix = select_metrics(matrix, metric_names);
    const std::map<std::string, double> ensemble = negative_ranking_average(matrix);
    const RankTable ranks = ranks_from_scores(ensemble, true);
    std::vector<RankRow> rows;
    for (const auto& [sys, score] : ensemble) rows.push_back({sys, "ensemble", score, ranks.at(sys)});
    save_rank_csv(rows, out_path);
    for (const RankRow& r : rows)
        std::cout << r.system << " score=" << format_score(r.score) << " rank=" << r.rank << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reference-free GEC metrics, adversarial attacks, and ranking"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string metric, source_path, corpus_path, out_path, mode = "abs", agg_override;
    std::string matrix_path, matrix_out;
    std::vector<std::string> hyp_args, score_paths;
    std::size_t first_n = 0;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", common.config_path, "run config file (json)");
        cmd->add_option("--seed", common.seed, "global seed override")
            ->each([&](const std::string&) { common.seed_set = true; });
        cmd->add_option("--jobs", common.jobs, "worker threads for sentence-level work");
    };

    CLI::App* score = app.add_subcommand("score", "score hypotheses with one metric");
    add_common(score);
    score->add_option("--metric", metric, "some|scribendi|impara|llm-s|llm-e")->required();
    score->add_option("--source", source_path, "source sentences, one per line (or config)");
    score->add_option("--hyp", hyp_args, "NAME=PATH hypothesis file (repeatable)")->required();
    score->add_option("--first-n", first_n, "only score the first N sentences");
    score->add_option("--out", out_path, "output JSONL path (or config)");

    std::string index_prefix, index_out;
    CLI::App* attack = app.add_subcommand("attack", "generate adversarial hypotheses");
    add_common(attack);
    attack->add_option("--metric", metric, "some|scribendi|impara|llm")->required();
    attack->add_option("--source", source_path, "source sentences, one per line (or config)");
    attack->add_option("--corpus", corpus_path, "candidate corpus (some/impara)");
    attack->add_option("--index", index_prefix, "load a saved candidate index (impara)");
    attack->add_option("--index-out", index_out, "persist the candidate index (impara)");
    attack->add_option("--first-n", first_n, "only attack the first N sentences");
    attack->add_option("--out", out_path, "output hypothesis file (or config)");

    CLI::App* rank = app.add_subcommand("rank", "aggregate score records into system rankings");
    add_common(rank);
    rank->add_option("--scores", score_paths, "score JSONL file (repeatable)")->required();
    rank->add_option("--mode", mode, "abs|rel");
    rank->add_option("--agg", agg_override, "force mean|sum aggregation (abs mode)");
    rank->add_option("--matrix-out", matrix_out, "also write a system x metric score matrix CSV");
    rank->add_option("--out", out_path, "output CSV path")->required();

    std::vector<std::string> ensemble_metrics;
    CLI::App* ensemble = app.add_subcommand("ensemble", "negative-ranking-averaging ensemble");
    ensemble->add_option("--matrix", matrix_path, "score matrix CSV")->required();
    ensemble->add_option("--metrics", ensemble_metrics,
                         "restrict to these metric columns (repeatable; default: all)");
    ensemble->add_option("--out", out_path, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (score->parsed())
            return cmd_score(common, metric, source_path, hyp_args, first_n, out_path);
        if (attack->parsed())
            return cmd_attack(common, metric, source_path, corpus_path, first_n, out_path);
        if (rank->parsed())
            return cmd_rank(common, score_paths, mode, agg_override, out_path, matrix_out);
        if (ensemble->parsed()) return cmd_ensemble(matrix_path, ensemble_metrics, out_path);
    } catch (const gecattack::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const gecattack::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const gecattack::BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
