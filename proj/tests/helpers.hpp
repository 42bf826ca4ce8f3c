#pragma once

#include <random>
#include <string>
#include <vector>

#include "capsdec/model.hpp"
#include "oracles.hpp"

namespace testutil {

using capsdec::RealMatrix;
using capsdec::RealVector;

inline RealVector random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
    std::uniform_real_distribution<double> u(-scale, scale);
    RealVector v(n);
    for (double& x : v) x = u(rng);
    return v;
}

inline RealMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
    RealMatrix m(rows, cols);
    m.values = random_vector(rows * cols, rng, scale);
    return m;
}

inline oracle::Mat to_mat(std::size_t rows, std::size_t cols, const std::vector<double>& values) {
    oracle::Mat m(rows, oracle::Vec(cols));
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m[r][c] = values[r * cols + c];
    return m;
}

inline oracle::Mat to_mat(const RealMatrix& m) { return to_mat(m.rows, m.cols, m.values); }
inline oracle::Mat to_mat(const capsdec::Parameter& p) { return to_mat(p.rows, p.cols, p.value); }

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return 1e300;
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double max_abs_diff(const std::vector<RealVector>& a, const std::vector<RealVector>& b) {
    if (a.size() != b.size()) return 1e300;
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, max_abs_diff(a[i], b[i]));
    return m;
}

inline capsdec::Vocabulary vocab_of(const std::vector<std::string>& tokens) {
    capsdec::Vocabulary v;
    for (const auto& t : tokens) v.add(t);
    return v;
}

/// Small toy-encoder model over the given tokens.
inline capsdec::Model micro_model(std::size_t p, std::size_t layers, std::size_t iters, std::size_t d,
                                  const std::vector<std::string>& tokens, std::uint64_t seed, std::size_t window = 2) {
    capsdec::ModelConfig cfg;
    cfg.capsules = p;
    cfg.layers = layers;
    cfg.routing_iters = iters;
    cfg.embed_dim = d;
    cfg.window = window;
    cfg.seed = seed;
    return capsdec::Model(cfg, vocab_of(tokens));
}

/// Copies a toy-encoder model's parameters into the oracle's layout for one sentence.
inline oracle::MicroModel extract(const capsdec::Model& m, const capsdec::Sentence& s) {
    const auto& store = m.params();
    const auto& enc = m.encoder_params();
    const auto& dec = m.decomposer_params();
    const auto& cfg = m.config();
    oracle::MicroModel o;
    const auto table = to_mat(store.at(enc.embedding));
    for (const auto& t : s.tokens) o.token_embeddings.push_back(table[m.vocab().lookup(t)]);
    o.wq = to_mat(store.at(enc.query));
    o.wk = to_mat(store.at(enc.key));
    o.wv = to_mat(store.at(enc.value));
    for (std::size_t idx : dec.expansion) o.expansion.push_back(to_mat(store.at(idx)));
    const std::size_t p = cfg.capsules;
    for (const auto& layer : dec.routing) {
        std::vector<std::vector<oracle::Mat>> grid(p, std::vector<oracle::Mat>(p));
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) grid[i][j] = to_mat(store.at(layer[i * p + j]));
        o.layers.push_back(grid);
    }
    o.iters = static_cast<int>(cfg.routing_iters);
    o.window = cfg.window;
    o.use_global = !cfg.ablation.global;
    o.use_local = !cfg.ablation.local;
    o.capsules = !cfg.ablation.capsule;
    return o;
}

}  // namespace testutil
