#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "capsdec/numerics.hpp"

namespace capsdec {

struct DecomposerConfig {
    std::size_t capsules = 10;       // p
    std::size_t layers = 3;          // K
    std::size_t routing_iters = 3;   // r
    std::size_t embed_dim = 64;      // d_e
    std::size_t capsule_dim = 64;    // d_c

    void validate() const;
};

/// Indices into a ParameterStore for the expansion matrices and the per-layer
/// p x p grid of routing matrices (entry i * p + j connects lower capsule i
/// to upper capsule j).
struct DecomposerParams {
    std::vector<std::size_t> expansion;             // p matrices, d_e x d_c
    std::vector<std::vector<std::size_t>> routing;  // K layers of p*p matrices, d_c x d_c

    static DecomposerParams create(ParameterStore& store, const DecomposerConfig& cfg,
                                   const std::string& prefix = "capsule");
    void initialize(ParameterStore& store, std::mt19937_64& rng) const;
};

/// Per-iteration record of one routing layer, filled on request.
struct RoutingTrace {
    // couplings[t] is the p x p matrix c used in iteration t
    std::vector<RealMatrix> couplings;
    // agreement[t] = sum_ij c_ij (v_j . u_hat_{j|i}) after iteration t
    std::vector<double> agreement;
};

// --- graph-level (differentiable) -------------------------------------------

std::vector<Var> expand(Graph& g, Var embedding, const ParameterStore& store, const DecomposerParams& params);

/// Dynamic routing between two capsule layers, unrolled for `iters` iterations.
/// `grid` holds the p*p routing parameter indices for this layer.
std::vector<Var> route_layer(Graph& g, std::span<const Var> inputs, const ParameterStore& store,
                             std::span<const std::size_t> grid, std::size_t iters, RoutingTrace* trace = nullptr);

/// expand followed by K routing layers; the outputs of one layer feed the next.
std::vector<Var> decompose(Graph& g, Var embedding, const ParameterStore& store, const DecomposerParams& params,
                           const DecomposerConfig& cfg, std::vector<RoutingTrace>* traces = nullptr);

// --- value-level ------------------------------------------------------------

std::vector<RealVector> expand(std::span<const double> embedding, std::span<const RealMatrix> matrices);

/// `grid` is row-major over (i, j), p*p matrices.
std::vector<RealVector> route_layer(std::span<const RealVector> inputs, std::span<const RealMatrix> grid,
                                    std::size_t iters, RoutingTrace* trace = nullptr);

}  // namespace capsdec
