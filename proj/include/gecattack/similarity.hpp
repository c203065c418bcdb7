#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "gecattack/core.hpp"

namespace gecattack {

// Surface-similarity gate used by the Scribendi metric: character-level
// Levenshtein distance ratio (LDR) and token sort ratio (TSR). Everything
// here operates on Unicode scalar values, not bytes.

struct SimilarityReport {
    double ldr = 0.0;
    double tsr = 0.0;
    double max_sim = 0.0;
};

namespace detail {

inline std::size_t levenshtein_u32(const std::u32string& a, const std::u32string& b) {
    const std::size_t n = a.size(), m = b.size();
    if (n == 0) return m;
    if (m == 0) return n;
    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    std::iota(prev.begin(), prev.end(), std::size_t{0});
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

struct MatchBlock {
    std::size_t a_pos = 0, b_pos = 0, len = 0;
};

// Longest common block of a[alo,ahi) x b[blo,bhi); ties resolved to the
// leftmost start in a, then in b.
inline MatchBlock longest_block(const std::u32string& a, std::size_t alo, std::size_t ahi,
                                const std::u32string& b, std::size_t blo, std::size_t bhi) {
    MatchBlock best;
    if (alo >= ahi || blo >= bhi) return best;
    const std::size_t m = bhi - blo;
    std::vector<std::size_t> prev(m, 0), cur(m, 0);
    for (std::size_t i = alo; i < ahi; ++i) {
        for (std::size_t j = blo; j < bhi; ++j) {
            std::size_t run = 0;
            if (a[i] == b[j]) run = (j > blo ? prev[j - 1 - blo] : 0) + 1;
            cur[j - blo] = run;
            if (run > best.len) {
                best.len = run;
                best.a_pos = i - run + 1;
                best.b_pos = j - run + 1;
            }
        }
        std::swap(prev, cur);
    }
    return best;
}

// Total matched length under recursive longest-block decomposition.
inline std::size_t matched_total(const std::u32string& a, std::size_t alo, std::size_t ahi,
                                 const std::u32string& b, std::size_t blo, std::size_t bhi) {
    const MatchBlock blk = longest_block(a, alo, ahi, b, blo, bhi);
    if (blk.len == 0) return 0;
    return blk.len + matched_total(a, alo, blk.a_pos, b, blo, blk.b_pos) +
           matched_total(a, blk.a_pos + blk.len, ahi, b, blk.b_pos + blk.len, bhi);
}

inline double block_ratio(const std::u32string& a, const std::u32string& b) {
    const std::size_t total = a.size() + b.size();
    if (total == 0) return 1.0;
    const std::size_t m = matched_total(a, 0, a.size(), b, 0, b.size());
    return 2.0 * static_cast<double>(m) / static_cast<double>(total);
}

// Lowercase ASCII, keep alphanumerics (non-ASCII scalars count as word
// characters), map everything else to a space, then sort the tokens.
inline std::u32string token_sort_normalize(std::string_view s) {
    std::u32string u = utf8_decode(s);
    for (char32_t& c : u) {
        if (c >= U'A' && c <= U'Z') {
            c = c - U'A' + U'a';
        } else if (!((c >= U'a' && c <= U'z') || (c >= U'0' && c <= U'9') || c >= 0x80)) {
            c = U' ';
        }
    }
    std::vector<std::u32string> tokens;
    std::size_t i = 0;
    while (i < u.size()) {
        while (i < u.size() && u[i] == U' ') ++i;
        std::size_t start = i;
        while (i < u.size() && u[i] != U' ') ++i;
        if (i > start) tokens.emplace_back(u.substr(start, i - start));
    }
    std::sort(tokens.begin(), tokens.end());
    std::u32string out;
    for (std::size_t k = 0; k < tokens.size(); ++k) {
        if (k) out.push_back(U' ');
        out += tokens[k];
    }
    return out;
}

}  // namespace detail

inline std::size_t char_levenshtein(std::string_view a, std::string_view b) {
    return detail::levenshtein_u32(utf8_decode(a), utf8_decode(b));
}

// 1 - distance / max length; a pair of empty strings is identical by definition.
inline double ldr(std::string_view a, std::string_view b) {
    const std::u32string ua = utf8_decode(a), ub = utf8_decode(b);
    const std::size_t longest = std::max(ua.size(), ub.size());
    if (longest == 0) return 1.0;
    const std::size_t d = detail::levenshtein_u32(ua, ub);
    return 1.0 - static_cast<double>(d) / static_cast<double>(longest);
}

inline double tsr(std::string_view a, std::string_view b) {
    std::u32string na = detail::token_sort_normalize(a);
    std::u32string nb = detail::token_sort_normalize(b);
    // canonical argument order keeps the greedy decomposition's tie-breaks
    // from making the ratio order-dependent
    if (nb < na) na.swap(nb);
    return detail::block_ratio(na, nb);
}

inline SimilarityReport surface_similarity(std::string_view a, std::string_view b) {
    SimilarityReport r;
    r.ldr = ldr(a, b);
    r.tsr = tsr(a, b);
    r.max_sim = std::max(r.ldr, r.tsr);
    return r;
}

}  // namespace gecattack
