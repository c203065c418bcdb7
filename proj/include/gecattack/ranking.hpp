#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gecattack/core.hpp"
#include "gecattack/trueskill.hpp"

namespace gecattack {

// System-level aggregation: absolute scores, TrueSkill relative ranking from
// pairwise sentence-score comparisons, competition ("1224") ranking, and the
// negative-ranking-averaging ensemble.

enum class Aggregation { mean, sum };

// best = 1; tied systems share the minimal rank of their block.
using RankTable = std::map<std::string, std::size_t>;

inline RankTable ranks_from_scores(const std::map<std::string, double>& scores,
                                   bool higher_is_better = true) {
    RankTable ranks;
    for (const auto& [sys, value] : scores) {
        std::size_t better = 0;
        for (const auto& [other, other_value] : scores) {
            (void)other;
            if (higher_is_better ? other_value > value : other_value < value) ++better;
        }
        ranks[sys] = better + 1;
    }
    return ranks;
}

// Per-system mean or sum of one metric's sentence scores. Invalid records
// are excluded (reported through `warnings`); a missing (system, index)
// record is a data error naming the gaps.
inline std::map<std::string, double> absolute_system_score(
    const std::vector<ScoreRecord>& records, Aggregation agg,
    std::vector<std::string>* warnings = nullptr) {
    if (records.empty()) throw DataError("absolute_system_score: no records");

    std::set<std::size_t> universe;
    std::map<std::string, std::map<std::size_t, const ScoreRecord*>> by_system;
    for (const ScoreRecord& r : records) {
        universe.insert(r.index);
        auto [it, inserted] = by_system[r.system_id].emplace(r.index, &r);
        if (!inserted)
            throw DataError("duplicate record for system " + r.system_id + " at index " +
                            std::to_string(r.index));
    }

    std::string gaps;
    for (const auto& [sys, rows] : by_system) {
        for (std::size_t idx : universe) {
            if (!rows.count(idx)) {
                if (!gaps.empty()) gaps += "; ";
                gaps += sys + " missing index " + std::to_string(idx);
            }
        }
    }
    if (!gaps.empty()) throw DataError("incomplete score coverage: " + gaps);

    std::map<std::string, double> out;
    for (const auto& [sys, rows] : by_system) {
        double sum = 0.0;
        std::size_t valid = 0, invalid = 0;
        for (const auto& [idx, rec] : rows) {
            (void)idx;
            if (!rec->valid) {
                ++invalid;
                continue;
            }
            sum += rec->score;
            ++valid;
        }
        if (invalid && warnings)
            warnings->push_back("system " + sys + ": excluded " + std::to_string(invalid) +
                                " invalid record(s)");
        if (valid == 0) {
            if (warnings) warnings->push_back("system " + sys + ": no valid records, scored 0");
            out[sys] = 0.0;
        } else {
            out[sys] = agg == Aggregation::sum ? sum : sum / static_cast<double>(valid);
        }
    }
    return out;
}

struct RelativeResult {
    std::map<std::string, Rating> ratings;
    RankTable ranks;
};

// TrueSkill over pairwise sentence-score comparisons: indices ascending,
// unordered pairs in lexicographic order, win to the strictly higher score,
// draw on equality. Indices where any system lacks a valid record are
// skipped whole. Fully deterministic for fixed inputs and config.
inline RelativeResult relative_rank(const std::vector<ScoreRecord>& records,
                                    const TrueSkillConfig& cfg = {}) {
    cfg.validate();
    std::map<std::string, std::map<std::size_t, double>> scores;
    std::set<std::size_t> universe;
    for (const ScoreRecord& r : records) {
        universe.insert(r.index);
        if (r.valid) scores[r.system_id][r.index] = r.score;
    }
    if (scores.size() < 2) throw DataError("relative_rank: need at least 2 systems");

    std::vector<std::string> systems;
    for (const auto& [sys, rows] : scores) {
        (void)rows;
        systems.push_back(sys);  // std::map iteration is already lexicographic
    }

    RelativeResult result;
    for (const std::string& sys : systems) result.ratings[sys] = Rating{cfg.mu0, cfg.sigma0};

    for (std::size_t idx : universe) {
        bool covered = true;
        for (const std::string& sys : systems)
            if (!scores[sys].count(idx)) {
                covered = false;
                break;
            }
        if (!covered) continue;
        for (std::size_t a = 0; a < systems.size(); ++a) {
            for (std::size_t b = a + 1; b < systems.size(); ++b) {
                Rating& ra = result.ratings[systems[a]];
                Rating& rb = result.ratings[systems[b]];
                const double sa = scores[systems[a]][idx];
                const double sb = scores[systems[b]][idx];
                if (sa > sb) {
                    std::tie(ra, rb) = rate_pair(ra, rb, PairOutcome::first_wins, cfg);
                } else if (sb > sa) {
                    std::tie(rb, ra) = rate_pair(rb, ra, PairOutcome::first_wins, cfg);
                } else {
                    std::tie(ra, rb) = rate_pair(ra, rb, PairOutcome::draw, cfg);
                }
            }
        }
    }

    std::map<std::string, double> ordering;
    for (const auto& [sys, rating] : result.ratings)
        ordering[sys] = cfg.rank_by_conservative ? rating.mu - 3.0 * rating.sigma : rating.mu;
    result.ranks = ranks_from_scores(ordering, /*higher_is_better=*/true);
    return result;
}

// Ensemble score = -(mean of the system's competition ranks across metrics);
// higher is better. Only ranks matter, so any strictly monotone rescaling of
// a metric column leaves the result unchanged.
inline std::map<std::string, double> negative_ranking_average(const ScoreMatrix& matrix) {
    if (matrix.systems.empty() || matrix.metrics.empty())
        throw DataError("negative_ranking_average: empty matrix");
    std::map<std::string, double> rank_sum;
    for (std::size_t j = 0; j < matrix.metrics.size(); ++j) {
        std::map<std::string, double> col;
        for (std::size_t i = 0; i < matrix.systems.size(); ++i)
            col[matrix.systems[i]] = matrix.at(i, j);
        const RankTable ranks = ranks_from_scores(col, matrix.metric_higher_is_better(j));
        for (const auto& [sys, rank] : ranks) rank_sum[sys] += static_cast<double>(rank);
    }
    std::map<std::string, double> out;
    for (const auto& [sys, sum] : rank_sum)
        out[sys] = -sum / static_cast<double>(matrix.metrics.size());
    return out;
}

}  // namespace gecattack
