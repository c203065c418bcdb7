#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gecattack/core.hpp"

namespace gecattack {

// Model-scoring interfaces. Metrics and attacks only ever see these, so the
// whole pipeline runs against the deterministic mocks below or against real
// model integrations plugged in behind the same surface.

class PerplexityScorer {
public:
    virtual ~PerplexityScorer() = default;
    virtual double score(const std::string& text) const = 0;
};

class MaskedProposer {
public:
    virtual ~MaskedProposer() = default;
    // Up to n candidate tokens for `position`, in descending estimated probability.
    virtual std::vector<std::string> propose(const std::vector<std::string>& tokens,
                                             std::size_t position, std::size_t n) const = 0;
};

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<double> embed(const std::string& text) const = 0;
    virtual std::size_t dimension() const = 0;
};

class RegressionScorer {
public:
    virtual ~RegressionScorer() = default;
    virtual double score_g(const std::string& text) const = 0;
    virtual double score_f(const std::string& text) const = 0;
    virtual double score_m(const std::string& source, const std::string& hypothesis) const = 0;
    virtual double score_qe(const std::string& text) const = 0;
};

class ChatModel {
public:
    virtual ~ChatModel() = default;
    // May return malformed text; callers own parsing and retries.
    virtual std::string complete(const std::string& prompt) const = 0;
};

// ---------------------------------------------------------------------------
// Deterministic mock suite.

namespace detail {

// FNV-1a over (seed bytes, domain tag, NUL, text). Stable across runs and
// platforms, which is what makes mock outputs freezable in tests.
inline std::uint64_t stable_hash(std::uint64_t seed, std::string_view domain, std::string_view text) {
    std::uint64_t h = 1469598103934665603ULL;
    const auto mix = [&h](unsigned char c) {
        h ^= c;
        h *= 1099511628211ULL;
    };
    for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(seed >> (8 * i)));
    for (char c : domain) mix(static_cast<unsigned char>(c));
    mix(0);
    for (char c : text) mix(static_cast<unsigned char>(c));
    return h;
}

inline double unit_interval(std::uint64_t h) {
    return static_cast<double>(h % 1000000ULL) / 999999.0;
}

}  // namespace detail

class MockPerplexity final : public PerplexityScorer {
public:
    explicit MockPerplexity(std::uint64_t seed = 0) : seed_(seed) {}

    void set(const std::string& text, double ppl) { table_[text] = ppl; }

    double score(const std::string& text) const override {
        if (auto it = table_.find(text); it != table_.end()) return it->second;
        return 100.0 + static_cast<double>(detail::stable_hash(seed_, "ppl", text) % 1000ULL) / 10.0;
    }

private:
    std::uint64_t seed_;
    std::map<std::string, double> table_;
};

class MockEmbedder final : public Embedder {
public:
    explicit MockEmbedder(std::uint64_t seed = 0, std::size_t dim = 64) : seed_(seed), dim_(dim) {}

    void set(const std::string& text, std::vector<double> v) { table_[text] = std::move(v); }

    std::size_t dimension() const override { return dim_; }

    // L2-normalized bag of token hashes; an empty token list embeds to the
    // zero vector, which downstream code treats as degenerate.
    std::vector<double> embed(const std::string& text) const override {
        if (auto it = table_.find(text); it != table_.end()) return it->second;
        std::vector<double> v(dim_, 0.0);
        for (const std::string& tok : tokenize(text).tokens)
            v[detail::stable_hash(seed_, "emb", tok) % dim_] += 1.0;
        double norm2 = 0.0;
        for (double x : v) norm2 += x * x;
        if (norm2 > 0.0) {
            const double inv = 1.0 / std::sqrt(norm2);
            for (double& x : v) x *= inv;
        }
        return v;
    }

private:
    std::uint64_t seed_;
    std::size_t dim_;
    std::map<std::string, std::vector<double>> table_;
};

class MockRegression final : public RegressionScorer {
public:
    explicit MockRegression(std::uint64_t seed = 0) : seed_(seed) {}

    void set_g(const std::string& text, double v) { g_[text] = v; }
    void set_f(const std::string& text, double v) { f_[text] = v; }
    void set_qe(const std::string& text, double v) { qe_[text] = v; }
    void set_m(const std::string& source, const std::string& hypothesis, double v) {
        m_[pair_key(source, hypothesis)] = v;
    }

    double score_g(const std::string& text) const override {
        if (auto it = g_.find(text); it != g_.end()) return it->second;
        return detail::unit_interval(detail::stable_hash(seed_, "some_g", text));
    }
    double score_f(const std::string& text) const override {
        if (auto it = f_.find(text); it != f_.end()) return it->second;
        return detail::unit_interval(detail::stable_hash(seed_, "some_f", text));
    }
    double score_m(const std::string& source, const std::string& hypothesis) const override {
        if (auto it = m_.find(pair_key(source, hypothesis)); it != m_.end()) return it->second;
        return detail::unit_interval(detail::stable_hash(seed_, "some_m", pair_key(source, hypothesis)));
    }
    double score_qe(const std::string& text) const override {
        if (auto it = qe_.find(text); it != qe_.end()) return it->second;
        return detail::unit_interval(detail::stable_hash(seed_, "qe", text));
    }

private:
    static std::string pair_key(const std::string& a, const std::string& b) {
        return a + '\x1f' + b;
    }

    std::uint64_t seed_;
    std::map<std::string, double> g_, f_, qe_, m_;
};

class MockProposer final : public MaskedProposer {
public:
    explicit MockProposer(std::vector<std::string> vocabulary = default_vocabulary()) {
        std::set<std::string> uniq(vocabulary.begin(), vocabulary.end());
        sorted_vocab_.assign(uniq.begin(), uniq.end());
    }

    void set(const std::vector<std::string>& tokens, std::size_t position,
             std::vector<std::string> candidates) {
        table_[context_key(tokens, position)] = std::move(candidates);
    }

    // Default behaviour: the n lexicographically smallest distinct vocabulary
    // tokens, independent of the masked position.
    std::vector<std::string> propose(const std::vector<std::string>& tokens, std::size_t position,
                                     std::size_t n) const override {
        if (auto it = table_.find(context_key(tokens, position)); it != table_.end()) {
            auto out = it->second;
            if (out.size() > n) out.resize(n);
            return out;
        }
        std::vector<std::string> out(sorted_vocab_.begin(),
                                     sorted_vocab_.begin() + std::min(n, sorted_vocab_.size()));
        return out;
    }

    static std::vector<std::string> default_vocabulary() {
        return {"the", "a",  "an",  "and", "of",   "to",   "in",   "is",  "was", "it",
                "for", "on", "are", "as",  "with", "his",  "they", "at",  "be",  "this",
                "have", "from", "or", "one", "had", "by",  "word", "but", "not", "what",
                "all", "were", "we", "when", "your", "can", "said", "there", "use", "each"};
    }

private:
    static std::string context_key(const std::vector<std::string>& tokens, std::size_t position) {
        std::string key = std::to_string(position);
        key += '\x1f';
        for (const auto& t : tokens) {
            key += t;
            key += '\x1e';
        }
        return key;
    }

    std::vector<std::string> sorted_vocab_;
    std::map<std::string, std::vector<std::string>> table_;
};

class MockChat final : public ChatModel {
public:
    MockChat() = default;

    void set(const std::string& prompt, std::string response) { table_[prompt] = std::move(response); }

    // Default behaviour: read how many targetK_score keys the prompt asks for
    // and echo a well-formed block scoring 3 everywhere.
    std::string complete(const std::string& prompt) const override {
        if (auto it = table_.find(prompt); it != table_.end()) return it->second;
        static const std::regex key_re("target([0-9]+)_score");
        std::size_t n = 0;
        for (auto it = std::sregex_iterator(prompt.begin(), prompt.end(), key_re);
             it != std::sregex_iterator(); ++it) {
            n = std::max(n, static_cast<std::size_t>(std::stoul((*it)[1].str())));
        }
        if (n == 0) n = 1;
        std::string out = "```json\n{\n";
        for (std::size_t k = 1; k <= n; ++k) {
            out += "\"target" + std::to_string(k) + "_score\": 3";
            if (k != n) out += ",";
            out += "\n";
        }
        out += "}\n```\n";
        return out;
    }

private:
    std::map<std::string, std::string> table_;
};

// ---------------------------------------------------------------------------
// Suite handed to metrics/attacks. `embedder_id` identifies the embedding
// model for candidate-index manifests.

struct BackendSuite {
    std::shared_ptr<PerplexityScorer> ppl;
    std::shared_ptr<MaskedProposer> proposer;
    std::shared_ptr<Embedder> embedder;
    std::shared_ptr<RegressionScorer> regression;
    std::shared_ptr<ChatModel> chat;
    std::string embedder_id;
    int chat_retries = 3;
};

struct MockSuite {
    std::shared_ptr<MockPerplexity> ppl;
    std::shared_ptr<MockProposer> proposer;
    std::shared_ptr<MockEmbedder> embedder;
    std::shared_ptr<MockRegression> regression;
    std::shared_ptr<MockChat> chat;
    std::uint64_t seed = 0;

    BackendSuite backends() const {
        BackendSuite b;
        b.ppl = ppl;
        b.proposer = proposer;
        b.embedder = embedder;
        b.regression = regression;
        b.chat = chat;
        b.embedder_id = "mock:" + std::to_string(seed);
        return b;
    }
};

inline MockSuite make_mock_suite(std::uint64_t seed = 0) {
    MockSuite s;
    s.seed = seed;
    s.ppl = std::make_shared<MockPerplexity>(seed);
    s.proposer = std::make_shared<MockProposer>();
    s.embedder = std::make_shared<MockEmbedder>(seed);
    s.regression = std::make_shared<MockRegression>(seed);
    s.chat = std::make_shared<MockChat>();
    return s;
}

// Locking adapters for backends whose config declares single-threaded access.
// The framework wraps such backends so concurrent callers serialize here.

class SerializedChat final : public ChatModel {
public:
    explicit SerializedChat(std::shared_ptr<ChatModel> inner) : inner_(std::move(inner)) {}
    std::string complete(const std::string& prompt) const override {
        std::lock_guard<std::mutex> lock(mu_);
        return inner_->complete(prompt);
    }

private:
    std::shared_ptr<ChatModel> inner_;
    mutable std::mutex mu_;
};

class SerializedPerplexity final : public PerplexityScorer {
public:
    explicit SerializedPerplexity(std::shared_ptr<PerplexityScorer> inner) : inner_(std::move(inner)) {}
    double score(const std::string& text) const override {
        std::lock_guard<std::mutex> lock(mu_);
        return inner_->score(text);
    }

private:
    std::shared_ptr<PerplexityScorer> inner_;
    mutable std::mutex mu_;
};

class SerializedRegression final : public RegressionScorer {
public:
    explicit SerializedRegression(std::shared_ptr<RegressionScorer> inner) : inner_(std::move(inner)) {}
    double score_g(const std::string& t) const override { std::lock_guard<std::mutex> l(mu_); return inner_->score_g(t); }
    double score_f(const std::string& t) const override { std::lock_guard<std::mutex> l(mu_); return inner_->score_f(t); }
    double score_m(const std::string& s, const std::string& h) const override { std::lock_guard<std::mutex> l(mu_); return inner_->score_m(s, h); }
    double score_qe(const std::string& t) const override { std::lock_guard<std::mutex> l(mu_); return inner_->score_qe(t); }

private:
    std::shared_ptr<RegressionScorer> inner_;
    mutable std::mutex mu_;
};

class SerializedEmbedder final : public Embedder {
public:
    explicit SerializedEmbedder(std::shared_ptr<Embedder> inner) : inner_(std::move(inner)) {}
    std::vector<double> embed(const std::string& t) const override { std::lock_guard<std::mutex> l(mu_); return inner_->embed(t); }
    std::size_t dimension() const override { return inner_->dimension(); }

private:
    std::shared_ptr<Embedder> inner_;
    mutable std::mutex mu_;
};

}  // namespace gecattack
