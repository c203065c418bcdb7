#pragma once

#include <charconv>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gecattack/attacks.hpp"
#include "gecattack/core.hpp"
#include "gecattack/ranking.hpp"

namespace gecattack {

// File formats: sentences are one-per-line UTF-8 text, score records are
// JSONL, matrices and rank tables are headered CSV.

inline std::vector<std::string> load_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

inline void save_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    for (const std::string& line : lines) out << line << '\n';
}

struct EvaluationSet {
    std::vector<Sentence> sources;
    std::map<std::string, std::vector<Sentence>> systems;
};

// Parallel loader; every hypothesis file must match the source line count
// exactly, then `first_n` (0 = all) truncates to a prefix.
inline EvaluationSet load_parallel(const std::string& source_path,
                                   const std::map<std::string, std::string>& hyp_paths,
                                   std::size_t first_n = 0) {
    const std::vector<std::string> src_lines = load_lines(source_path);
    EvaluationSet set;
    for (const std::string& line : src_lines) set.sources.push_back(tokenize(line));
    for (const auto& [system_id, path] : hyp_paths) {
        const std::vector<std::string> hyp_lines = load_lines(path);
        if (hyp_lines.size() != src_lines.size())
            throw DataError("line count mismatch: " + source_path + " has " +
                            std::to_string(src_lines.size()) + " lines, " + path + " has " +
                            std::to_string(hyp_lines.size()));
        std::vector<Sentence>& out = set.systems[system_id];
        for (const std::string& line : hyp_lines) out.push_back(tokenize(line));
    }
    if (first_n > 0 && first_n < set.sources.size()) {
        set.sources.resize(first_n);
        for (auto& [system_id, hyps] : set.systems) {
            (void)system_id;
            hyps.resize(first_n);
        }
    }
    return set;
}

// ---------------------------------------------------------------------------
// Minimal CSV with quoting.

namespace detail {

inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

// Shortest decimal form that round-trips the exact double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("not a number in " + context + ": '" + s + "'");
    }
}

}  // namespace detail

// Header row: system,<metric>,... ; one row per system, no missing cells.
inline ScoreMatrix load_score_matrix(const std::string& csv_path) {
    const std::vector<std::string> lines = load_lines(csv_path);
    if (lines.size() < 2) throw DataError("score matrix needs a header and at least one row");
    const std::vector<std::string> header = detail::csv_split(lines[0]);
    if (header.size() < 2) throw DataError("score matrix header needs at least one metric column");

    ScoreMatrix m;
    m.metrics.assign(header.begin() + 1, header.end());
    m.higher_is_better.assign(m.metrics.size(), true);
    std::set<std::string> seen;
    for (std::size_t row = 1; row < lines.size(); ++row) {
        if (lines[row].empty()) continue;
        const std::vector<std::string> fields = detail::csv_split(lines[row]);
        if (fields.size() != header.size())
            throw DataError("row " + std::to_string(row + 1) + " of " + csv_path + " has " +
                            std::to_string(fields.size()) + " cells, expected " +
                            std::to_string(header.size()));
        if (!seen.insert(fields[0]).second)
            throw DataError("duplicate system row: " + fields[0]);
        m.systems.push_back(fields[0]);
        std::vector<double> values;
        for (std::size_t j = 1; j < fields.size(); ++j)
            values.push_back(detail::parse_double(fields[j], csv_path));
        m.values.push_back(std::move(values));
    }
    if (m.systems.empty()) throw DataError("score matrix has no system rows");
    return m;
}

inline void save_score_matrix(const ScoreMatrix& m, const std::string& csv_path) {
    std::ofstream out(csv_path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + csv_path);
    out << "system";
    for (const std::string& metric : m.metrics) out << ',' << detail::csv_escape(metric);
    out << '\n';
    for (std::size_t i = 0; i < m.systems.size(); ++i) {
        out << detail::csv_escape(m.systems[i]);
        for (std::size_t j = 0; j < m.metrics.size(); ++j)
            out << ',' << detail::format_double(m.at(i, j));
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Score records as JSONL.

inline void save_records_jsonl(const std::vector<ScoreRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    for (const ScoreRecord& r : records) {
        nlohmann::json j;
        j["metric"] = r.metric_id;
        j["system"] = r.system_id;
        j["index"] = r.index;
        j["score"] = r.score;
        j["components"] = r.components;
        j["valid"] = r.valid;
        out << j.dump() << '\n';
    }
}

inline std::vector<ScoreRecord> load_records_jsonl(const std::string& path) {
    std::vector<ScoreRecord> records;
    for (const std::string& line : load_lines(path)) {
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("bad jsonl line in " + path + ": " + e.what());
        }
        ScoreRecord r;
        try {
            r.metric_id = j.at("metric").get<std::string>();
            r.system_id = j.at("system").get<std::string>();
            r.index = j.at("index").get<std::size_t>();
            r.score = j.at("score").get<double>();
            r.valid = j.at("valid").get<bool>();
            for (const auto& [key, value] : j.at("components").items())
                r.components[key] = value.get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError("bad record in " + path + ": " + e.what());
        }
        records.push_back(std::move(r));
    }
    return records;
}

// ---------------------------------------------------------------------------
// Rank/ensemble output rows.

struct RankRow {
    std::string system;
    std::string metric;
    double score = 0.0;
    std::size_t rank = 0;
};

inline void save_rank_csv(const std::vector<RankRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << "system,metric,score,rank\n";
    for (const RankRow& r : rows)
        out << detail::csv_escape(r.system) << ',' << detail::csv_escape(r.metric) << ','
            << detail::format_double(r.score) << ',' << r.rank << '\n';
}

// ---------------------------------------------------------------------------
// Candidate-index persistence: <prefix>.manifest.json + <prefix>.txt
// (sentences) + <prefix>.emb (little-endian doubles, row-major). Loading
// validates the manifest against the configured embedder so a stale index
// cannot silently pair with the wrong model.

inline void save_candidate_index(const CandidateIndex& index, const std::string& prefix) {
    nlohmann::json manifest;
    manifest["embedder"] = index.embedder_id;
    manifest["dimension"] = index.dimension;
    manifest["count"] = index.size();
    manifest["format"] = "f64le";
    {
        std::ofstream out(prefix + ".manifest.json", std::ios::binary);
        if (!out) throw DataError("cannot write index manifest: " + prefix);
        out << manifest.dump(2) << '\n';
    }
    {
        std::vector<std::string> lines;
        lines.reserve(index.size());
        for (const Sentence& s : index.corpus) lines.push_back(detokenize(s));
        save_lines(prefix + ".txt", lines);
    }
    {
        std::ofstream out(prefix + ".emb", std::ios::binary);
        if (!out) throw DataError("cannot write index embeddings: " + prefix);
        for (const std::vector<double>& row : index.embeddings)
            out.write(reinterpret_cast<const char*>(row.data()),
                      static_cast<std::streamsize>(row.size() * sizeof(double)));
    }
}

inline CandidateIndex load_candidate_index(const std::string& prefix,
                                           const std::string& expected_embedder_id,
                                           std::size_t expected_dimension) {
    nlohmann::json manifest;
    {
        std::ifstream in(prefix + ".manifest.json", std::ios::binary);
        if (!in) throw DataError("cannot open index manifest: " + prefix);
        try {
            in >> manifest;
        } catch (const nlohmann::json::exception& e) {
            throw DataError(std::string("bad index manifest: ") + e.what());
        }
    }
    CandidateIndex index;
    index.embedder_id = manifest.at("embedder").get<std::string>();
    index.dimension = manifest.at("dimension").get<std::size_t>();
    const std::size_t count = manifest.at("count").get<std::size_t>();
    if (!expected_embedder_id.empty() && index.embedder_id != expected_embedder_id)
        throw ConfigError("index was built with embedder '" + index.embedder_id +
                          "' but the configured embedder is '" + expected_embedder_id + "'");
    if (expected_dimension != 0 && index.dimension != expected_dimension)
        throw ConfigError("index dimension " + std::to_string(index.dimension) +
                          " does not match configured embedder dimension " +
                          std::to_string(expected_dimension));

    for (const std::string& line : load_lines(prefix + ".txt")) index.corpus.push_back(tokenize(line));
    if (index.corpus.size() != count)
        throw DataError("index sentence count does not match manifest");

    std::ifstream in(prefix + ".emb", std::ios::binary);
    if (!in) throw DataError("cannot open index embeddings: " + prefix);
    index.embeddings.assign(count, std::vector<double>(index.dimension, 0.0));
    for (std::vector<double>& row : index.embeddings) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(row.size() * sizeof(double)));
        if (!in) throw DataError("index embedding file truncated");
    }
    return index;
}

}  // namespace gecattack
