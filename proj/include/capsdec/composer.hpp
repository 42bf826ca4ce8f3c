#pragma once

#include <span>
#include <vector>

#include "capsdec/context.hpp"
#include "capsdec/numerics.hpp"

namespace capsdec {

/// Row k holds capsule k's weights over context positions.
struct AttentionWeights {
    std::vector<RealVector> global;  // p x n
    std::vector<RealVector> local;   // p x |L_c|
};

struct SenseRepresentation {
    RealVector q;                                 // Q_S
    RealVector weights;                           // b-hat, composition weights
    std::vector<RealVector> context_specific;     // S*
    std::vector<RealVector> capsules;             // S (decomposer output)
    AttentionWeights attention;
    WindowRange window;
};

struct CompositionFlags {
    bool use_global = true;
    bool use_local = true;
    bool scaled_logits = false;  // divide dot products by sqrt(d)
};

// --- graph-level -----------------------------------------------------------

/// softmax over positions j of (capsule . ctx_j)
Var context_attention(Graph& g, Var capsule, std::span<const Var> ctx, bool scaled = false);

/// S*_k = S_k + sum_i aG_{k,i} G_i + sum_i aL_{k,i} L_i; either context term is
/// dropped when its flag is off (the matching weight span may then be empty).
std::vector<Var> compose_context_specific(Graph& g, std::span<const Var> capsules, std::span<const Var> global_ctx,
                                          std::span<const Var> local_ctx, std::span<const Var> global_weights,
                                          std::span<const Var> local_weights, const CompositionFlags& flags = {});

struct Composition {
    Var weights;  // b-hat
    Var q;
};

/// b-hat = softmax(|S*_k|^2), Q_S = sum_k b-hat_k S*_k
Composition l2norm_composition(Graph& g, std::span<const Var> context_specific);

// --- value-level -----------------------------------------------------------

RealVector context_attention(std::span<const double> capsule, std::span<const RealVector> ctx, bool scaled = false);

std::vector<RealVector> compose_context_specific(std::span<const RealVector> capsules,
                                                 std::span<const RealVector> global_ctx,
                                                 std::span<const RealVector> local_ctx,
                                                 const AttentionWeights& weights);  // an empty weight set drops that term

/// Fills q, weights and context_specific.
SenseRepresentation l2norm_composition(std::vector<RealVector> context_specific);

}  // namespace capsdec
