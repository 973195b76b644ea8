#pragma once

// Whole-graph embeddings from WL feature bags: distributed bag of features
// (PV-DBOW) trained by SGD with negative sampling.
//
// Each graph g owns a vector v_g; each vocabulary feature f owns an output
// vector u_f. For every kept occurrence of f in g we ascend
//     log sigma(v_g . u_f) + sum_{f' ~ noise} log sigma(-v_g . u_f')
// with noise features drawn proportionally to count^0.75.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ammlens/error.hpp"
#include "ammlens/rng.hpp"
#include "ammlens/transaction_graph.hpp"

namespace ammlens {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct TrainConfig {
    int dim = 16;
    int epochs = 10;
    double initial_lr = 0.025;
    std::int64_t min_feature_count = 5;
    double downsample_rate = 1e-4;
    int wl_depth = 1;
    int negatives_per_positive = 5;
    std::uint64_t rng_seed = 1;
    // 1 is deterministic. More workers update shared feature vectors without
    // locking, so results then depend on thread scheduling.
    int workers = 1;

    void validate() const {
        if (dim <= 0 || epochs < 0 || !(initial_lr > 0.0) || min_feature_count <= 0 ||
            !(downsample_rate >= 0.0) || negatives_per_positive <= 0 || workers <= 0)
            throw ValidationError("training parameters must be positive");
        if (wl_depth != 1) throw ValidationError("wl_depth must be 1");
    }
};

struct Vocabulary {
    std::vector<std::string> tokens;  // by descending count, then token
    std::vector<std::int64_t> counts;
    std::map<std::string, std::uint32_t> index;
    std::int64_t total = 0;  // kept occurrences over the corpus

    std::size_t size() const noexcept { return tokens.size(); }
};

inline Vocabulary build_vocabulary(const std::vector<FeatureBag>& corpus,
                                   std::int64_t min_count) {
    std::map<std::string, std::int64_t> totals;
    for (const auto& bag : corpus)
        for (const auto& [tok, c] : bag) totals[tok] += c;
    std::vector<std::pair<std::string, std::int64_t>> kept;
    for (auto& [tok, c] : totals)
        if (c >= min_count) kept.emplace_back(tok, c);
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    Vocabulary v;
    for (auto& [tok, c] : kept) {
        v.index.emplace(tok, static_cast<std::uint32_t>(v.tokens.size()));
        v.tokens.push_back(tok);
        v.counts.push_back(c);
        v.total += c;
    }
    return v;
}

inline nlohmann::json to_json(const Vocabulary& v) {
    nlohmann::json features = nlohmann::json::array();
    for (std::size_t i = 0; i < v.size(); ++i)
        features.push_back({{"token", v.tokens[i]}, {"count", v.counts[i]}});
    return {{"total", v.total}, {"features", features}};
}

// Keep probability of one occurrence of a feature seen `count` times, using
// the word2vec frequency rule with threshold t = rate * total.
inline double keep_probability(std::int64_t count, std::int64_t total, double rate) {
    if (rate <= 0.0 || count <= 0) return 1.0;
    const double t = rate * static_cast<double>(total);
    const double c = static_cast<double>(count);
    return std::min(1.0, (std::sqrt(c / t) + 1.0) * t / c);
}

// Seed for the initial vector and per-epoch stream of one graph.
inline std::uint64_t graph_seed(std::uint64_t seed, const AgentId& id) {
    return mix_seed(seed ^ 0x5bd1e995ULL, fnv1a64(id));
}

// Uniform in (-0.5/dim, 0.5/dim), as in word2vec.
inline std::vector<double> initial_graph_vector(const AgentId& id, int dim, std::uint64_t seed) {
    Rng rng(graph_seed(seed, id));
    std::vector<double> v(static_cast<std::size_t>(dim));
    for (auto& x : v) x = (rng.uniform() - 0.5) / dim;
    return v;
}

struct EmbeddingMatrix {
    std::vector<AgentId> ids;  // row order
    RowMatrix vectors;         // ids.size() x dim
    RowMatrix feature_vectors; // vocab.size() x dim
    Vocabulary vocab;
    std::vector<double> epoch_loss;  // mean loss per trained pair
};

namespace detail {

inline double log_sigmoid(double x) {
    return -(std::max(-x, 0.0) + std::log1p(std::exp(-std::abs(x))));
}

inline double sigmoid(double x) {
    return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

template <bool Shared>
inline double load(double& x) {
    if constexpr (Shared) return std::atomic_ref<double>(x).load(std::memory_order_relaxed);
    else return x;
}

template <bool Shared>
inline void add(double& x, double d) {
    if constexpr (Shared) {
        std::atomic_ref<double> r(x);
        r.store(r.load(std::memory_order_relaxed) + d, std::memory_order_relaxed);
    } else {
        x += d;
    }
}

struct NoiseTable {
    std::vector<double> cumulative;

    explicit NoiseTable(const Vocabulary& v) {
        double acc = 0.0;
        for (auto c : v.counts) {
            acc += std::pow(static_cast<double>(c), 0.75);
            cumulative.push_back(acc);
        }
    }

    std::uint32_t draw(Rng& rng) const {
        const double u = rng.uniform() * cumulative.back();
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        if (it == cumulative.end()) --it;
        return static_cast<std::uint32_t>(it - cumulative.begin());
    }
};

struct Trainer {
    const TrainConfig& cfg;
    const Vocabulary& vocab;
    const std::vector<std::vector<std::uint32_t>>& docs;
    const std::vector<AgentId>& ids;
    RowMatrix& doc_vecs;
    RowMatrix& out_vecs;
    NoiseTable noise;
    std::vector<double> keep;

    // Trains doc `d` for one epoch; returns (loss sum, pairs).
    template <bool Shared>
    std::pair<double, std::int64_t> train_doc(std::size_t d, int epoch, double lr) {
        const int dim = cfg.dim;
        Rng rng(mix_seed(graph_seed(cfg.rng_seed, ids[d]), static_cast<std::uint64_t>(epoch) + 1));
        std::vector<std::uint32_t> order = docs[d];
        rng.shuffle(order);
        std::vector<double> grad(static_cast<std::size_t>(dim));
        double* v = doc_vecs.row(static_cast<Eigen::Index>(d)).data();
        double loss = 0.0;
        std::int64_t pairs = 0;
        for (auto word : order) {
            if (keep[word] < 1.0 && rng.uniform() >= keep[word]) continue;
            std::fill(grad.begin(), grad.end(), 0.0);
            for (int k = 0; k <= cfg.negatives_per_positive; ++k) {
                std::uint32_t target = word;
                double label = 1.0;
                if (k > 0) {
                    target = noise.draw(rng);
                    if (target == word) continue;
                    label = 0.0;
                }
                double* u = out_vecs.row(target).data();
                double f = 0.0;
                for (int c = 0; c < dim; ++c) f += v[c] * load<Shared>(u[c]);
                loss -= detail::log_sigmoid(label > 0.0 ? f : -f);
                const double g = (label - detail::sigmoid(f)) * lr;
                for (int c = 0; c < dim; ++c) grad[c] += g * load<Shared>(u[c]);
                for (int c = 0; c < dim; ++c) add<Shared>(u[c], g * v[c]);
            }
            for (int c = 0; c < dim; ++c) v[c] += grad[c];
            ++pairs;
        }
        return {loss, pairs};
    }
};

}  // namespace detail

// Trains one vector per bag. `ids` gives the row labels (and seeds), in the
// same order as `corpus`.
inline EmbeddingMatrix train_embeddings(const std::vector<AgentId>& ids,
                                        const std::vector<FeatureBag>& corpus,
                                        const TrainConfig& cfg) {
    cfg.validate();
    if (ids.size() != corpus.size()) throw ValidationError("ids and corpus differ in length");
    if (corpus.size() < 2) throw ValidationError("need at least 2 graphs to train embeddings");

    EmbeddingMatrix m;
    m.ids = ids;
    m.vocab = build_vocabulary(corpus, cfg.min_feature_count);
    if (m.vocab.size() == 0)
        throw ValidationError("vocabulary is empty after pruning features seen fewer than " +
                              std::to_string(cfg.min_feature_count) + " times");

    std::vector<std::vector<std::uint32_t>> docs(corpus.size());
    for (std::size_t d = 0; d < corpus.size(); ++d)
        for (const auto& [tok, c] : corpus[d]) {
            auto it = m.vocab.index.find(tok);
            if (it == m.vocab.index.end()) continue;
            docs[d].insert(docs[d].end(), static_cast<std::size_t>(c), it->second);
        }

    const auto n = static_cast<Eigen::Index>(corpus.size());
    m.vectors.resize(n, cfg.dim);
    for (Eigen::Index d = 0; d < n; ++d) {
        const auto init = initial_graph_vector(ids[static_cast<std::size_t>(d)], cfg.dim, cfg.rng_seed);
        for (int c = 0; c < cfg.dim; ++c) m.vectors(d, c) = init[static_cast<std::size_t>(c)];
    }
    m.feature_vectors = RowMatrix::Zero(static_cast<Eigen::Index>(m.vocab.size()), cfg.dim);

    detail::Trainer trainer{cfg, m.vocab, docs, m.ids, m.vectors, m.feature_vectors,
                            detail::NoiseTable(m.vocab), {}};
    for (auto c : m.vocab.counts)
        trainer.keep.push_back(keep_probability(c, m.vocab.total, cfg.downsample_rate));

    const double min_lr = cfg.initial_lr / 10.0;
    const double ndocs = static_cast<double>(docs.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto lr_at = [&](std::size_t d) {
            const double progress = (epoch + static_cast<double>(d) / ndocs) / cfg.epochs;
            return cfg.initial_lr - (cfg.initial_lr - min_lr) * progress;
        };
        double loss = 0.0;
        std::int64_t pairs = 0;
        if (cfg.workers == 1) {
            for (std::size_t d = 0; d < docs.size(); ++d) {
                auto [l, p] = trainer.train_doc<false>(d, epoch, lr_at(d));
                loss += l;
                pairs += p;
            }
        } else {
            const auto nw = static_cast<std::size_t>(cfg.workers);
            std::vector<double> wl(nw, 0.0);
            std::vector<std::int64_t> wp(nw, 0);
            std::vector<std::thread> pool;
            for (std::size_t w = 0; w < nw; ++w)
                pool.emplace_back([&, w] {
                    for (std::size_t d = w; d < docs.size(); d += nw) {
                        auto [l, p] = trainer.train_doc<true>(d, epoch, lr_at(d));
                        wl[w] += l;
                        wp[w] += p;
                    }
                });
            for (auto& t : pool) t.join();
            for (std::size_t w = 0; w < nw; ++w) {
                loss += wl[w];
                pairs += wp[w];
            }
        }
        const double mean = pairs ? loss / static_cast<double>(pairs) : 0.0;
        if (!std::isfinite(mean) || !m.vectors.allFinite())
            throw RuntimeError("embedding training diverged at epoch " + std::to_string(epoch) +
                               " (mean loss " + std::to_string(mean) + ", lr " +
                               std::to_string(lr_at(0)) + ")");
        m.epoch_loss.push_back(mean);
    }
    return m;
}

}  // namespace ammlens
