#include "capsdec/composer.hpp"

#include <cmath>
#include <sstream>

namespace capsdec {

Var context_attention(Graph& g, Var capsule, std::span<const Var> ctx, bool scaled) {
    if (ctx.empty()) fail(Error::Kind::InvalidArgument, "context_attention: empty context");
    std::vector<Var> logits;
    logits.reserve(ctx.size());
    for (Var c : ctx) {
        if (g.dim(c) != g.dim(capsule)) {
            std::ostringstream os;
            os << "context_attention: capsule dim " << g.dim(capsule) << " differs from context dim " << g.dim(c);
            fail(Error::Kind::ShapeMismatch, os.str());
        }
        logits.push_back(g.dot(capsule, c));
    }
    Var l = g.stack(logits);
    if (scaled) l = g.scale_const(l, 1.0 / std::sqrt(static_cast<double>(g.dim(capsule))));
    return g.softmax(l);
}

std::vector<Var> compose_context_specific(Graph& g, std::span<const Var> capsules, std::span<const Var> global_ctx,
                                          std::span<const Var> local_ctx, std::span<const Var> global_weights,
                                          std::span<const Var> local_weights, const CompositionFlags& flags) {
    std::vector<Var> out;
    out.reserve(capsules.size());
    for (std::size_t k = 0; k < capsules.size(); ++k) {
        std::vector<Var> terms{capsules[k]};
        if (flags.use_global) {
            if (global_weights.size() != capsules.size() || g.dim(global_weights[k]) != global_ctx.size())
                fail(Error::Kind::ShapeMismatch, "compose_context_specific: global weights do not align with G_c");
            terms.push_back(g.weighted_sum(global_weights[k], global_ctx));
        }
        if (flags.use_local) {
            if (local_weights.size() != capsules.size() || g.dim(local_weights[k]) != local_ctx.size())
                fail(Error::Kind::ShapeMismatch, "compose_context_specific: local weights do not align with L_c");
            terms.push_back(g.weighted_sum(local_weights[k], local_ctx));
        }
        out.push_back(terms.size() == 1 ? terms.front() : g.add_n(terms));
    }
    return out;
}

Composition l2norm_composition(Graph& g, std::span<const Var> context_specific) {
    if (context_specific.empty()) fail(Error::Kind::InvalidArgument, "l2norm_composition: no capsules");
    std::vector<Var> norms;
    norms.reserve(context_specific.size());
    for (Var s : context_specific) norms.push_back(g.squared_norm(s));
    Composition c;
    c.weights = g.softmax(g.stack(norms));
    c.q = g.weighted_sum(c.weights, context_specific);
    return c;
}

// ---------------------------------------------------------------------------

RealVector context_attention(std::span<const double> capsule, std::span<const RealVector> ctx, bool scaled) {
    Graph g(false);
    const Var s = g.constant(RealVector(capsule.begin(), capsule.end()));
    std::vector<Var> c;
    for (const auto& v : ctx) c.push_back(g.constant(v));
    const Var a = context_attention(g, s, c, scaled);
    return {g.value(a).begin(), g.value(a).end()};
}

std::vector<RealVector> compose_context_specific(std::span<const RealVector> capsules,
                                                 std::span<const RealVector> global_ctx,
                                                 std::span<const RealVector> local_ctx,
                                                 const AttentionWeights& weights) {
    Graph g(false);
    auto consts = [&g](std::span<const RealVector> vs) {
        std::vector<Var> out;
        for (const auto& v : vs) out.push_back(g.constant(v));
        return out;
    };
    const auto s = consts(capsules);
    const auto gc = consts(global_ctx);
    const auto lc = consts(local_ctx);
    const auto gw = consts(weights.global);
    const auto lw = consts(weights.local);
    for (Var v : gc)
        if (!s.empty() && g.dim(v) != g.dim(s[0])) fail(Error::Kind::ShapeMismatch, "compose_context_specific: dimension mismatch");
    for (Var v : lc)
        if (!s.empty() && g.dim(v) != g.dim(s[0])) fail(Error::Kind::ShapeMismatch, "compose_context_specific: dimension mismatch");
    CompositionFlags flags;
    flags.use_global = !weights.global.empty();
    flags.use_local = !weights.local.empty();
    const auto out = compose_context_specific(g, s, gc, lc, gw, lw, flags);
    std::vector<RealVector> res;
    for (Var v : out) res.emplace_back(g.value(v).begin(), g.value(v).end());
    return res;
}

SenseRepresentation l2norm_composition(std::vector<RealVector> context_specific) {
    Graph g(false);
    std::vector<Var> s;
    for (const auto& v : context_specific) s.push_back(g.constant(v));
    const Composition c = l2norm_composition(g, s);
    SenseRepresentation rep;
    rep.q.assign(g.value(c.q).begin(), g.value(c.q).end());
    rep.weights.assign(g.value(c.weights).begin(), g.value(c.weights).end());
    rep.context_specific = std::move(context_specific);
    return rep;
}

}  // namespace capsdec
