#pragma once
// Straight-line reference implementations used to cross-check the library.
// Nothing here includes library headers; matrices are nested row vectors.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // m[row][col]

inline Vec softmax(const Vec& x) {
    double hi = x[0];
    for (double v : x) hi = v > hi ? v : hi;
    Vec e(x.size());
    double z = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        e[i] = std::exp(x[i] - hi);
        z += e[i];
    }
    for (double& v : e) v /= z;
    return e;
}

inline Vec squash(const Vec& x) {
    double n2 = 0.0;
    for (double v : x) n2 += v * v;
    Vec out(x.size(), 0.0);
    if (n2 == 0.0) return out;
    const double s = (n2 / (1.0 + n2)) / std::sqrt(n2);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = s * x[i];
    return out;
}

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// y_r = sum_c m[r][c] x_c
inline Vec mat_times_vec(const Mat& m, const Vec& x) {
    Vec y(m.size(), 0.0);
    for (std::size_t r = 0; r < m.size(); ++r)
        for (std::size_t c = 0; c < x.size(); ++c) y[r] += m[r][c] * x[c];
    return y;
}

// y_c = sum_r x_r m[r][c]
inline Vec vec_times_mat(const Vec& x, const Mat& m) {
    Vec y(m[0].size(), 0.0);
    for (std::size_t c = 0; c < m[0].size(); ++c)
        for (std::size_t r = 0; r < x.size(); ++r) y[c] += x[r] * m[r][c];
    return y;
}

inline std::vector<Vec> expand(const Vec& e, const std::vector<Mat>& w) {
    std::vector<Vec> out;
    for (const Mat& m : w) out.push_back(vec_times_mat(e, m));
    return out;
}

// One layer of routing by agreement, written step by step.
// grid[i][j] maps lower capsule i to upper capsule j.
inline std::vector<Vec> route(const std::vector<Vec>& u, const std::vector<std::vector<Mat>>& grid, int iters) {
    const std::size_t p = u.size();
    std::vector<std::vector<Vec>> uhat(p, std::vector<Vec>(p));
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) uhat[i][j] = mat_times_vec(grid[i][j], u[i]);

    Mat b(p, Vec(p, 0.0));
    std::vector<Vec> v(p);
    for (int t = 0; t < iters; ++t) {
        Mat c(p);
        for (std::size_t i = 0; i < p; ++i) c[i] = softmax(b[i]);
        for (std::size_t j = 0; j < p; ++j) {
            Vec x(u[0].size() == 0 ? 0 : uhat[0][j].size(), 0.0);
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t d = 0; d < x.size(); ++d) x[d] += c[i][j] * uhat[i][j][d];
            v[j] = squash(x);
        }
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) b[i][j] += dot(v[j], uhat[i][j]);
    }
    return v;
}

inline std::vector<Vec> decompose(const Vec& e, const std::vector<Mat>& expansion,
                                  const std::vector<std::vector<std::vector<Mat>>>& layers, int iters) {
    std::vector<Vec> caps = expand(e, expansion);
    for (const auto& grid : layers) caps = route(caps, grid, iters);
    return caps;
}

inline Vec attention(const Vec& s, const std::vector<Vec>& ctx, bool scaled = false) {
    Vec logits(ctx.size());
    for (std::size_t j = 0; j < ctx.size(); ++j) {
        logits[j] = dot(s, ctx[j]);
        if (scaled) logits[j] /= std::sqrt(static_cast<double>(s.size()));
    }
    return softmax(logits);
}

inline std::vector<Vec> context_specific(const std::vector<Vec>& S, const std::vector<Vec>& G, const std::vector<Vec>& L,
                                         const std::vector<Vec>& aG, const std::vector<Vec>& aL) {
    std::vector<Vec> out;
    for (std::size_t k = 0; k < S.size(); ++k) {
        Vec s = S[k];
        if (!aG.empty())
            for (std::size_t i = 0; i < G.size(); ++i)
                for (std::size_t d = 0; d < s.size(); ++d) s[d] += aG[k][i] * G[i][d];
        if (!aL.empty())
            for (std::size_t i = 0; i < L.size(); ++i)
                for (std::size_t d = 0; d < s.size(); ++d) s[d] += aL[k][i] * L[i][d];
        out.push_back(s);
    }
    return out;
}

struct Composed {
    Vec weights;
    Vec q;
};

inline Composed compose(const std::vector<Vec>& sstar) {
    Vec norms;
    for (const Vec& s : sstar) norms.push_back(dot(s, s));
    Composed c;
    c.weights = softmax(norms);
    c.q.assign(sstar[0].size(), 0.0);
    for (std::size_t k = 0; k < sstar.size(); ++k)
        for (std::size_t d = 0; d < c.q.size(); ++d) c.q[d] += c.weights[k] * sstar[k][d];
    return c;
}

struct Window {
    std::size_t first;
    std::size_t last;
};

inline Window window(std::size_t n, std::size_t h, std::size_t m) {
    const long e = static_cast<long>(h) - static_cast<long>(m / 2);
    const std::size_t z = h + m / 2;
    return {e < 0 ? 0 : static_cast<std::size_t>(e), z > n - 1 ? n - 1 : z};
}

// Embeddings plus one single-head scaled-dot self-attention layer with a residual.
inline std::vector<Vec> encode(const std::vector<Vec>& emb, const Mat& wq, const Mat& wk, const Mat& wv) {
    const std::size_t n = emb.size();
    std::vector<Vec> q, k, v;
    for (const Vec& e : emb) {
        q.push_back(mat_times_vec(wq, e));
        k.push_back(mat_times_vec(wk, e));
        v.push_back(mat_times_vec(wv, e));
    }
    std::vector<Vec> out;
    for (std::size_t i = 0; i < n; ++i) {
        Vec logits(n);
        for (std::size_t j = 0; j < n; ++j) logits[j] = dot(q[i], k[j]) / std::sqrt(static_cast<double>(wq.size()));
        const Vec a = softmax(logits);
        Vec o = emb[i];
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t d = 0; d < o.size(); ++d) o[d] += a[j] * v[j][d];
        out.push_back(o);
    }
    return out;
}

struct MicroModel {
    std::vector<Vec> token_embeddings;  // one per sentence position
    Mat wq, wk, wv;
    std::vector<Mat> expansion;
    std::vector<std::vector<std::vector<Mat>>> layers;  // [layer][i][j]
    int iters = 1;
    std::size_t window = 2;
    bool use_global = true;
    bool use_local = true;
    bool capsules = true;
};

struct SenseOut {
    std::vector<Vec> S;
    std::vector<Vec> Sstar;
    Vec weights;
    Vec q;
};

inline SenseOut sense(const MicroModel& m, std::size_t h) {
    const std::vector<Vec> G = encode(m.token_embeddings, m.wq, m.wk, m.wv);
    SenseOut o;
    o.S = m.capsules ? decompose(m.token_embeddings[h], m.expansion, m.layers, m.iters)
                     : expand(m.token_embeddings[h], m.expansion);
    const Window w = window(G.size(), h, m.window);
    std::vector<Vec> L(G.begin() + static_cast<long>(w.first), G.begin() + static_cast<long>(w.last) + 1);
    std::vector<Vec> aG, aL;
    for (const Vec& s : o.S) {
        if (m.use_global) aG.push_back(attention(s, G));
        if (m.use_local) aL.push_back(attention(s, L));
    }
    o.Sstar = context_specific(o.S, G, L, aG, aL);
    const Composed c = compose(o.Sstar);
    o.weights = c.weights;
    o.q = c.q;
    return o;
}

// P(match) from [a; b; a*b] (or [a; b] when product is false) through W f + bias.
inline double match_probability(const Vec& a, const Vec& b, const Mat& w, const Vec& bias, bool product) {
    Vec f = a;
    f.insert(f.end(), b.begin(), b.end());
    if (product)
        for (std::size_t d = 0; d < a.size(); ++d) f.push_back(a[d] * b[d]);
    Vec logits = mat_times_vec(w, f);
    logits[0] += bias[0];
    logits[1] += bias[1];
    return softmax(logits)[1];
}

inline double cross_entropy(double p, int y) { return -(y * std::log(p) + (1 - y) * std::log(1.0 - p)); }

}  // namespace oracle
