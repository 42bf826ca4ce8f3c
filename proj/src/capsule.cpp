#include "capsdec/capsule.hpp"

#include <cmath>
#include <sstream>

namespace capsdec {

void DecomposerConfig::validate() const {
    if (capsules < 1) fail(Error::Kind::InvalidArgument, "capsule count p must be >= 1");
    if (layers < 1) fail(Error::Kind::InvalidArgument, "capsule layer count K must be >= 1");
    if (routing_iters < 1) fail(Error::Kind::InvalidArgument, "routing iterations r must be >= 1");
    if (embed_dim < 1 || capsule_dim < 1) fail(Error::Kind::InvalidArgument, "embedding and capsule dims must be >= 1");
}

DecomposerParams DecomposerParams::create(ParameterStore& store, const DecomposerConfig& cfg,
                                          const std::string& prefix) {
    cfg.validate();
    DecomposerParams out;
    for (std::size_t i = 0; i < cfg.capsules; ++i)
        out.expansion.push_back(store.add(prefix + ".expand." + std::to_string(i), cfg.embed_dim, cfg.capsule_dim));
    for (std::size_t k = 0; k < cfg.layers; ++k) {
        std::vector<std::size_t> grid;
        for (std::size_t i = 0; i < cfg.capsules; ++i)
            for (std::size_t j = 0; j < cfg.capsules; ++j)
                grid.push_back(store.add(prefix + ".route." + std::to_string(k) + "." + std::to_string(i) + "." +
                                             std::to_string(j),
                                         cfg.capsule_dim, cfg.capsule_dim));
        out.routing.push_back(std::move(grid));
    }
    return out;
}

void DecomposerParams::initialize(ParameterStore& store, std::mt19937_64& rng) const {
    for (std::size_t idx : expansion) init_uniform(store.at(idx), store.at(idx).rows, rng);
    for (const auto& grid : routing)
        for (std::size_t idx : grid) init_uniform(store.at(idx), store.at(idx).cols, rng);
}

std::vector<Var> expand(Graph& g, Var embedding, const ParameterStore& store, const DecomposerParams& params) {
    std::vector<Var> out;
    out.reserve(params.expansion.size());
    for (std::size_t idx : params.expansion) out.push_back(g.vecmat(embedding, g.parameter(store.at(idx))));
    return out;
}

std::vector<Var> route_layer(Graph& g, std::span<const Var> inputs, const ParameterStore& store,
                             std::span<const std::size_t> grid, std::size_t iters, RoutingTrace* trace) {
    const std::size_t p = inputs.size();
    if (iters == 0) fail(Error::Kind::InvalidArgument, "route_layer: routing iterations must be >= 1");
    if (p == 0) fail(Error::Kind::InvalidArgument, "route_layer: no input capsules");
    if (grid.size() != p * p) {
        std::ostringstream os;
        os << "route_layer: expected " << p * p << " routing matrices, got " << grid.size();
        fail(Error::Kind::ShapeMismatch, os.str());
    }

    // predictions[j][i] = W'_ij u_i, grouped by upper capsule j
    std::vector<std::vector<Var>> predictions(p, std::vector<Var>(p));
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j)
            predictions[j][i] = g.matvec(g.parameter(store.at(grid[i * p + j])), inputs[i]);

    std::vector<std::vector<Var>> logits(p, std::vector<Var>(p));
    const Var zero = g.constant({0.0});
    for (auto& row : logits) std::fill(row.begin(), row.end(), zero);

    std::vector<Var> outputs(p);
    std::vector<Var> scalars(p);
    for (std::size_t t = 0; t < iters; ++t) {
        // c_i. = softmax over upper capsules j of b_i.
        std::vector<Var> coupling_rows(p);
        for (std::size_t i = 0; i < p; ++i) coupling_rows[i] = g.softmax(g.stack(logits[i]));

        for (std::size_t j = 0; j < p; ++j) {
            for (std::size_t i = 0; i < p; ++i) scalars[i] = g.element(coupling_rows[i], j);
            outputs[j] = g.squash(g.weighted_sum(g.stack(scalars), predictions[j]));
        }

        if (!trace && t + 1 == iters) break;
        double agreement = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = 0; j < p; ++j) {
                const Var a = g.dot(outputs[j], predictions[j][i]);
                if (trace) agreement += g.value(coupling_rows[i])[j] * g.scalar(a);
                if (t + 1 < iters) logits[i][j] = g.add(logits[i][j], a);
            }
        }

        if (trace) {
            RealMatrix c(p, p);
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t j = 0; j < p; ++j) c(i, j) = g.value(coupling_rows[i])[j];
            trace->couplings.push_back(std::move(c));
            trace->agreement.push_back(agreement);
        }
    }
    return outputs;
}

std::vector<Var> decompose(Graph& g, Var embedding, const ParameterStore& store, const DecomposerParams& params,
                           const DecomposerConfig& cfg, std::vector<RoutingTrace>* traces) {
    cfg.validate();
    if (params.expansion.size() != cfg.capsules || params.routing.size() != cfg.layers)
        fail(Error::Kind::ShapeMismatch, "decompose: parameters do not match the decomposer configuration");
    if (g.dim(embedding) != cfg.embed_dim) {
        std::ostringstream os;
        os << "decompose: embedding has dimension " << g.dim(embedding) << ", expected " << cfg.embed_dim;
        fail(Error::Kind::ShapeMismatch, os.str());
    }
    std::vector<Var> caps = expand(g, embedding, store, params);
    for (std::size_t k = 0; k < cfg.layers; ++k) {
        RoutingTrace* tr = nullptr;
        if (traces) tr = &traces->emplace_back();
        caps = route_layer(g, caps, store, params.routing[k], cfg.routing_iters, tr);
    }
    return caps;
}

// --- value-level wrappers share the graph code path --------------------------

std::vector<RealVector> expand(std::span<const double> embedding, std::span<const RealMatrix> matrices) {
    require_finite(embedding, "expand");
    std::vector<RealVector> out;
    for (const auto& m : matrices) {
        if (m.rows != embedding.size()) {
            std::ostringstream os;
            os << "expand: embedding has dimension " << embedding.size() << ", matrix expects " << m.rows;
            fail(Error::Kind::ShapeMismatch, os.str());
        }
        out.push_back(vecmat(embedding, m));
    }
    return out;
}

std::vector<RealVector> route_layer(std::span<const RealVector> inputs, std::span<const RealMatrix> grid,
                                    std::size_t iters, RoutingTrace* trace) {
    ParameterStore store;
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        idx.push_back(store.add("w" + std::to_string(k), grid[k].rows, grid[k].cols));
        store.at(idx.back()).value = grid[k].values;
    }
    Graph g(false);
    std::vector<Var> in;
    for (const auto& u : inputs) in.push_back(g.constant(u));
    std::vector<Var> out = route_layer(g, in, store, idx, iters, trace);
    std::vector<RealVector> res;
    for (Var v : out) res.emplace_back(g.value(v).begin(), g.value(v).end());
    return res;
}

}  // namespace capsdec
