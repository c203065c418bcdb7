#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gecattack {

// Error categories map onto CLI exit codes: config=1, data=2, backend=3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BackendError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A sentence is its raw text plus whitespace-split tokens. All scoring code
// consumes the canonical detokenized form (tokens joined by single spaces),
// so differences in the original spacing never affect results.
struct Sentence {
    std::string text;
    std::vector<std::string> tokens;
};

inline Sentence tokenize(const std::string& text) {
    Sentence s;
    s.text = text;
    std::size_t i = 0;
    const auto is_space = [](char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    };
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !is_space(text[i])) ++i;
        if (i > start) s.tokens.emplace_back(text.substr(start, i - start));
    }
    return s;
}

inline std::string detokenize(const Sentence& s) {
    std::string out;
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
        if (i) out += ' ';
        out += s.tokens[i];
    }
    return out;
}

// One (system, sentence) scoring instance.
struct EvalUnit {
    std::string system_id;
    std::size_t index = 0;
    Sentence source;
    Sentence hypothesis;
};

// One metric's sentence-level result. `components` carries the per-metric
// breakdown (ppl_src/ppl_hyp/ldr/tsr, qe/se, some_g/some_f/some_m, llm_raw).
struct ScoreRecord {
    std::string metric_id;
    std::string system_id;
    std::size_t index = 0;
    double score = 0.0;
    std::map<std::string, double> components;
    bool valid = true;
};

inline void validate_record(const ScoreRecord& r) {
    if (r.metric_id == "scribendi") {
        if (r.score != -1.0 && r.score != 0.0 && r.score != 1.0)
            throw DataError("scribendi score must be -1, 0 or 1");
    } else if (r.metric_id == "llm_s" || r.metric_id == "llm_e") {
        if (r.valid) {
            if (r.score != static_cast<long long>(r.score) || r.score < 1.0 || r.score > 5.0)
                throw DataError("llm score must be an integer in [1,5] unless the record is invalid");
        }
    }
}

// systems x metrics table of system-level scores.
struct ScoreMatrix {
    std::vector<std::string> systems;
    std::vector<std::string> metrics;
    std::vector<std::vector<double>> values;  // [system][metric]
    std::vector<bool> higher_is_better;       // per metric; defaults to true

    double at(std::size_t sys, std::size_t metric) const { return values.at(sys).at(metric); }
    bool metric_higher_is_better(std::size_t metric) const {
        return metric < higher_is_better.size() ? higher_is_better[metric] : true;
    }
};

// Column projection, e.g. to ensemble only the absolute-score metrics of a
// wider table.
inline ScoreMatrix select_metrics(const ScoreMatrix& m, const std::vector<std::string>& names) {
    ScoreMatrix out;
    out.systems = m.systems;
    std::vector<std::size_t> columns;
    for (const std::string& name : names) {
        bool found = false;
        for (std::size_t j = 0; j < m.metrics.size(); ++j) {
            if (m.metrics[j] == name) {
                columns.push_back(j);
                found = true;
                break;
            }
        }
        if (!found) throw DataError("score matrix has no metric column '" + name + "'");
        out.metrics.push_back(name);
        out.higher_is_better.push_back(m.metric_higher_is_better(columns.back()));
    }
    for (const std::vector<double>& row : m.values) {
        std::vector<double> selected;
        for (std::size_t j : columns) selected.push_back(row.at(j));
        out.values.push_back(std::move(selected));
    }
    return out;
}

// Decodes UTF-8 into Unicode scalar values. Malformed bytes decode to
// U+FFFD one byte at a time, so every input has a deterministic decoding.
inline std::u32string utf8_decode(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        const unsigned char c0 = static_cast<unsigned char>(s[i]);
        std::size_t len = 0;
        char32_t cp = 0;
        if (c0 < 0x80) {
            len = 1;
            cp = c0;
        } else if ((c0 & 0xE0) == 0xC0) {
            len = 2;
            cp = c0 & 0x1F;
        } else if ((c0 & 0xF0) == 0xE0) {
            len = 3;
            cp = c0 & 0x0F;
        } else if ((c0 & 0xF8) == 0xF0) {
            len = 4;
            cp = c0 & 0x07;
        }
        bool ok = len > 0 && i + len <= s.size();
        for (std::size_t k = 1; ok && k < len; ++k) {
            const unsigned char ck = static_cast<unsigned char>(s[i + k]);
            if ((ck & 0xC0) != 0x80) ok = false;
            cp = (cp << 6) | (ck & 0x3F);
        }
        if (ok && len == 2 && cp < 0x80) ok = false;
        if (ok && len == 3 && cp < 0x800) ok = false;
        if (ok && len == 4 && cp < 0x10000) ok = false;
        if (ok && (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))) ok = false;
        if (ok) {
            out.push_back(cp);
            i += len;
        } else {
            out.push_back(0xFFFD);
            i += 1;
        }
    }
    return out;
}

}  // namespace gecattack
