#include "capsdec/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace capsdec {

namespace {

constexpr double kNormGuard = 1e-12;

void require_same_dim(std::size_t a, std::size_t b, const char* op) {
    if (a != b) {
        std::ostringstream os;
        os << op << ": dimension mismatch (" << a << " vs " << b << ")";
        fail(Error::Kind::ShapeMismatch, os.str());
    }
}

}  // namespace

RealMatrix RealMatrix::identity(std::size_t n) {
    RealMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

void require_finite(std::span<const double> v, const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) {
            std::ostringstream os;
            os << what << ": non-finite entry at index " << i;
            fail(Error::Kind::NonFinite, os.str());
        }
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a.size(), b.size(), "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double squared_norm(std::span<const double> v) { return dot(v, v); }

RealVector softmax(std::span<const double> v) {
    if (v.empty()) fail(Error::Kind::InvalidArgument, "softmax: empty input");
    require_finite(v, "softmax");
    const double mx = *std::max_element(v.begin(), v.end());
    RealVector out(v.size());
    double z = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - mx);
        z += out[i];
    }
    for (double& x : out) x /= z;
    return out;
}

RealVector squash(std::span<const double> x) {
    if (x.empty()) fail(Error::Kind::InvalidArgument, "squash: empty input");
    const double n2 = squared_norm(x);
    const double n = std::sqrt(n2);
    const double f = n / (1.0 + n2);
    RealVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = f * x[i];
    return out;
}

RealVector matvec(const RealMatrix& m, std::span<const double> x) {
    require_same_dim(m.cols, x.size(), "matvec");
    RealVector y(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* row = &m.values[r * m.cols];
        double s = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) s += row[c] * x[c];
        y[r] = s;
    }
    return y;
}

RealVector vecmat(std::span<const double> x, const RealMatrix& m) {
    require_same_dim(m.rows, x.size(), "vecmat");
    RealVector y(m.cols, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* row = &m.values[r * m.cols];
        for (std::size_t c = 0; c < m.cols; ++c) y[c] += x[r] * row[c];
    }
    return y;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    const double na = std::sqrt(squared_norm(a));
    const double nb = std::sqrt(squared_norm(b));
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// ParameterStore

std::size_t ParameterStore::add(const std::string& name, std::size_t rows, std::size_t cols) {
    if (index_.count(name)) fail(Error::Kind::InvalidArgument, "duplicate parameter name: " + name);
    if (rows == 0 || cols == 0) fail(Error::Kind::InvalidArgument, "parameter " + name + " has an empty shape");
    Parameter p;
    p.name = name;
    p.rows = rows;
    p.cols = cols;
    p.value.assign(rows * cols, 0.0);
    p.grad.assign(rows * cols, 0.0);
    params_.push_back(std::move(p));
    index_[name] = params_.size() - 1;
    return params_.size() - 1;
}

std::size_t ParameterStore::index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) fail(Error::Kind::NotFound, "unknown parameter: " + name);
    return it->second;
}

Parameter& ParameterStore::at(const std::string& name) { return params_[index_of(name)]; }
const Parameter& ParameterStore::at(const std::string& name) const { return params_[index_of(name)]; }

std::size_t ParameterStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
}

void ParameterStore::zero_grad() {
    for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

void ParameterStore::scale_grad(double factor) {
    for (auto& p : params_)
        for (double& g : p.grad) g *= factor;
}

std::vector<std::vector<double>> ParameterStore::snapshot() const {
    std::vector<std::vector<double>> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.value);
    return out;
}

void ParameterStore::restore(const std::vector<std::vector<double>>& values) {
    require_same_dim(values.size(), params_.size(), "ParameterStore::restore");
    for (std::size_t i = 0; i < values.size(); ++i) {
        require_same_dim(values[i].size(), params_[i].size(), "ParameterStore::restore");
        params_[i].value = values[i];
    }
}

void init_uniform(Parameter& p, std::size_t fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (double& v : p.value) v = dist(rng);
}

// ---------------------------------------------------------------------------
// Graph

Var Graph::push(std::vector<double> value, std::size_t rows, std::size_t cols, bool needs_grad,
                std::function<void(Graph&, std::uint32_t)> back) {
    Node n;
    n.value = std::move(value);
    n.rows = rows;
    n.cols = cols;
    n.needs_grad = needs_grad;
    if (needs_grad) n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

std::vector<double>& Graph::grad_buf(std::uint32_t id) {
    auto& n = nodes_[id];
    if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
    return n.grad;
}

std::span<const double> Graph::value(Var v) const { return nodes_.at(v.id).value; }

double Graph::scalar(Var v) const {
    const auto& n = nodes_.at(v.id);
    if (n.value.size() != 1) fail(Error::Kind::ShapeMismatch, "scalar(): node is not a scalar");
    return n.value[0];
}

std::span<const double> Graph::grad(Var v) const { return nodes_.at(v.id).grad; }

Var Graph::constant(RealVector v) {
    const std::size_t n = v.size();
    return push(std::move(v), n, 1, false, {});
}

Var Graph::constant_matrix(const RealMatrix& m) { return push(m.values, m.rows, m.cols, false, {}); }

Var Graph::parameter(const Parameter& p) {
    if (p.frozen || !track_) return push(p.value, p.rows, p.cols, false, {});
    Var v = push(p.value, p.rows, p.cols, true, [](Graph& g, std::uint32_t self) {
        auto& n = g.nodes_[self];
        for (std::size_t i = 0; i < n.grad.size(); ++i) n.param->grad[i] += n.grad[i];
    });
    nodes_[v.id].param = const_cast<Parameter*>(&p);
    return v;
}

Var Graph::matvec(Var m, Var x) {
    const std::size_t r = nodes_[m.id].rows, c = nodes_[m.id].cols;
    require_same_dim(c, dim(x), "matvec");
    std::vector<double> y(r, 0.0);
    {
        const auto& mv = nodes_[m.id].value;
        const auto& xv = nodes_[x.id].value;
        for (std::size_t i = 0; i < r; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < c; ++j) s += mv[i * c + j] * xv[j];
            y[i] = s;
        }
    }
    return push(std::move(y), r, 1, needs(m) || needs(x), [m, x, r, c](Graph& g, std::uint32_t self) {
        const auto& go = g.nodes_[self].grad;
        if (g.needs(m)) {
            auto& gm = g.grad_buf(m.id);
            const auto& xv = g.nodes_[x.id].value;
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) gm[i * c + j] += go[i] * xv[j];
        }
        if (g.needs(x)) {
            auto& gx = g.grad_buf(x.id);
            const auto& mv = g.nodes_[m.id].value;
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) gx[j] += go[i] * mv[i * c + j];
        }
    });
}

Var Graph::vecmat(Var x, Var m) {
    const std::size_t r = nodes_[m.id].rows, c = nodes_[m.id].cols;
    require_same_dim(r, dim(x), "vecmat");
    std::vector<double> y(c, 0.0);
    {
        const auto& mv = nodes_[m.id].value;
        const auto& xv = nodes_[x.id].value;
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) y[j] += xv[i] * mv[i * c + j];
    }
    return push(std::move(y), c, 1, needs(m) || needs(x), [m, x, r, c](Graph& g, std::uint32_t self) {
        const auto& go = g.nodes_[self].grad;
        if (g.needs(m)) {
            auto& gm = g.grad_buf(m.id);
            const auto& xv = g.nodes_[x.id].value;
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < c; ++j) gm[i * c + j] += xv[i] * go[j];
        }
        if (g.needs(x)) {
            auto& gx = g.grad_buf(x.id);
            const auto& mv = g.nodes_[m.id].value;
            for (std::size_t i = 0; i < r; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < c; ++j) s += mv[i * c + j] * go[j];
                gx[i] += s;
            }
        }
    });
}

Var Graph::row(Var m, std::size_t r) {
    const std::size_t rows = nodes_[m.id].rows, c = nodes_[m.id].cols;
    if (r >= rows) fail(Error::Kind::InvalidArgument, "row(): index out of range");
    const auto& mv = nodes_[m.id].value;
    std::vector<double> y(mv.begin() + static_cast<std::ptrdiff_t>(r * c),
                          mv.begin() + static_cast<std::ptrdiff_t>((r + 1) * c));
    return push(std::move(y), c, 1, needs(m), [m, r, c](Graph& g, std::uint32_t self) {
        const auto& go = g.nodes_[self].grad;
        auto& gm = g.grad_buf(m.id);
        for (std::size_t j = 0; j < c; ++j) gm[r * c + j] += go[j];
    });
}

Var Graph::add(Var a, Var b) {
    require_same_dim(dim(a), dim(b), "add");
    std::vector<double> y = nodes_[a.id].value;
    const auto& bv = nodes_[b.id].value;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
    const std::size_t n = y.size();
    return push(std::move(y), n, 1, needs(a) || needs(b), [a, b](Graph& g, std::uint32_t self) {
        for (Var in : {a, b}) {
            if (!g.needs(in)) continue;
            const auto& go = g.nodes_[self].grad;
            auto& gi = g.grad_buf(in.id);
            for (std::size_t i = 0; i < go.size(); ++i) gi[i] += go[i];
        }
    });
}

Var Graph::add_n(std::span<const Var> xs) {
    if (xs.empty()) fail(Error::Kind::InvalidArgument, "add_n: no operands");
    const std::size_t n = dim(xs[0]);
    std::vector<double> y(n, 0.0);
    bool ng = false;
    for (Var v : xs) {
        require_same_dim(n, dim(v), "add_n");
        const auto& vv = nodes_[v.id].value;
        for (std::size_t i = 0; i < n; ++i) y[i] += vv[i];
        ng = ng || needs(v);
    }
    std::vector<Var> ins(xs.begin(), xs.end());
    return push(std::move(y), n, 1, ng, [ins](Graph& g, std::uint32_t self) {
        for (Var in : ins) {
            if (!g.needs(in)) continue;
            const auto& go = g.nodes_[self].grad;
            auto& gi = g.grad_buf(in.id);
            for (std::size_t i = 0; i < go.size(); ++i) gi[i] += go[i];
        }
    });
}

Var Graph::mul(Var a, Var b) {
    require_same_dim(dim(a), dim(b), "mul");
    std::vector<double> y = nodes_[a.id].value;
    const auto& bv = nodes_[b.id].value;
    for (std::size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
    const std::size_t n = y.size();
    return push(std::move(y), n, 1, needs(a) || needs(b), [a, b](Graph& g, std::uint32_t self) {
        const auto& go = g.nodes_[self].grad;
        if (g.needs(a)) {
            auto& ga = g.grad_buf(a.id);
            const auto& bv = g.nodes_[b.id].value;
            for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bv[i];
        }
        if (g.needs(b)) {
            auto& gb = g.grad_buf(b.id);
            const auto& av = g.nodes_[a.id].value;
            for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * av[i];
        }
    });
}

Var Graph::scale(Var s, Var v) {
    if (dim(s) != 1) fail(Error::Kind::ShapeMismatch, "scale: first operand must be a scalar");
    const double sv = nodes_[s.id].value[0];
    std::vector<double> y = nodes_[v.id].value;
    for (double& e : y) e *= sv;
    const std::size_t n = y.size();
    return push(std::move(y), n, 1, needs(s) || needs(v), [s, v](Graph& g, std::uint32_t self) {
        const auto& go = g.nodes_[self].grad;
        const auto& vv = g.nodes_[v.id].value;
        if (g.needs(s)) {
            double acc = 0.0;
            for (std::size_t i = 0; i < go.size(); ++i) acc += go[i] * vv[i];
            g.grad_buf(s.id)[0] += acc;
        }
        if (g.needs(v)) {
            const double sv = g.nodes_[s.id].value[0];
            auto& gv = g.grad_buf(v.id);
            for (std::size_t i = 0; i < go.size(); ++i) gv[i] += go[i] * sv;
        }
    });
}

Var Graph::scale_const(Var v, double c) {
    std::vector<double> y = nodes_[v.id].value;
    for (double& e : y) e *= c;
    const std::size_t n = y.size();
    return push(std::move(y), n, 1, needs(v), [v, c](Graph& g, std::uint32_t self) {
        const auto& go = g.nodes_[self].grad;
        auto& gv = g.grad_buf(v.id);
        for (std::size_t i = 0; i < go.size(); ++i) gv[i] += go[i] * c;
    });
}

Var Graph::dot(Var a, Var b) {
    const double s = capsdec::dot(nodes_[a.id].value, nodes_[b.id].value);
    return push({s}, 1, 1, needs(a) || needs(b), [a, b](Graph& g, std::uint32_t self) {
        const double go = g.nodes_[self].grad[0];
        if (g.needs(a)) {
            auto& ga = g.grad_buf(a.id);
            const auto& bv = g.nodes_[b.id].value;
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go * bv[i];
        }
        if (g.needs(b)) {
            auto& gb = g.grad_buf(b.id);
            const auto& av = g.nodes_[a.id].value;
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += go * av[i];
        }
    });
}

Var Graph::squared_norm(Var v) {
    const double s = capsdec::squared_norm(nodes_[v.id].value);
    return push({s}, 1, 1, needs(v), [v](Graph& g, std::uint32_t self) {
        const double go = g.nodes_[self].grad[0];
        auto& gv = g.grad_buf(v.id);
        const auto& vv = g.nodes_[v.id].value;
        for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += 2.0 * go * vv[i];
    });
}

Var Graph::stack(std::span<const Var> scalars) {
    std::vector<double> y;
    y.reserve(scalars.size());
    bool ng = false;
    for (Var s : scalars) {
        if (dim(s) != 1) fail(Error::Kind::ShapeMismatch, "stack: operands must be scalars");
        y.push_back(nodes_[s.id].value[0]);
        ng = ng || needs(s);
    }
    std::vector<Var> ins(scalars.begin(), scalars.end());
    const std::size_t n = y.size();
    return push(std::move(y), n, 1, ng, [ins](Graph& g, std::uint32_t self) {
        for (std::size_t i = 0; i < ins.size(); ++i) {
            if (!g.needs(ins[i])) continue;
            const double go = g.nodes_[self].grad[i];
            g.grad_buf(ins[i].id)[0] += go;
        }
    });
}

Var Graph::concat(std::span<const Var> parts) {
    std::vector<double> y;
    bool ng = false;
    std::vector<std::pair<Var, std::size_t>> ins;
    for (Var p : parts) {
        ins.emplace_back(p, y.size());
        const auto& pv = nodes_[p.id].value;
        y.insert(y.end(), pv.begin(), pv.end());
        ng = ng || needs(p);
    }
    const std::size_t n = y.size();
    return push(std::move(y), n, 1, ng, [ins](Graph& g, std::uint32_t self) {
        for (const auto& [in, off] : ins) {
            if (!g.needs(in)) continue;
            const auto& go = g.nodes_[self].grad;
            auto& gi = g.grad_buf(in.id);
            for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += go[off + i];
        }
    });
}

Var Graph::element(Var v, std::size_t i) {
    if (i >= dim(v)) fail(Error::Kind::InvalidArgument, "element(): index out of range");
    return push({nodes_[v.id].value[i]}, 1, 1, needs(v), [v, i](Graph& g, std::uint32_t self) {
        g.grad_buf(v.id)[i] += g.nodes_[self].grad[0];
    });
}

Var Graph::softmax(Var v) {
    std::vector<double> y = capsdec::softmax(nodes_[v.id].value);
    const std::size_t n = y.size();
    return push(std::move(y), n, 1, needs(v), [v](Graph& g, std::uint32_t self) {
        const auto& go = g.nodes_[self].grad;
        const auto& yv = g.nodes_[self].value;
        double s = 0.0;
        for (std::size_t i = 0; i < yv.size(); ++i) s += go[i] * yv[i];
        auto& gv = g.grad_buf(v.id);
        for (std::size_t i = 0; i < yv.size(); ++i) gv[i] += yv[i] * (go[i] - s);
    });
}

Var Graph::log_softmax(Var v) {
    const auto& in = nodes_[v.id].value;
    if (in.empty()) fail(Error::Kind::InvalidArgument, "log_softmax: empty input");
    require_finite(in, "log_softmax");
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (double x : in) z += std::exp(x - mx);
    const double lse = mx + std::log(z);
    std::vector<double> y(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) y[i] = in[i] - lse;
    const std::size_t n = y.size();
    return push(std::move(y), n, 1, needs(v), [v](Graph& g, std::uint32_t self) {
        const auto& go = g.nodes_[self].grad;
        const auto& yv = g.nodes_[self].value;
        double s = 0.0;
        for (double x : go) s += x;
        auto& gv = g.grad_buf(v.id);
        for (std::size_t i = 0; i < yv.size(); ++i) gv[i] += go[i] - std::exp(yv[i]) * s;
    });
}

Var Graph::squash(Var v) {
    std::vector<double> y = capsdec::squash(nodes_[v.id].value);
    const std::size_t n = y.size();
    return push(std::move(y), n, 1, needs(v), [v](Graph& g, std::uint32_t self) {
        // y = f(r) x with f(r) = r / (1 + r^2), r = |x|
        // dy/dx = f(r) I + (f'(r) / r) x x^T,  f'(r) = (1 - r^2) / (1 + r^2)^2
        const auto& go = g.nodes_[self].grad;
        const auto& xv = g.nodes_[v.id].value;
        const double r2 = capsdec::squared_norm(xv);
        const double r = std::sqrt(r2);
        const double f = r / (1.0 + r2);
        const double fp = (1.0 - r2) / ((1.0 + r2) * (1.0 + r2));
        const double coef = fp / (r + kNormGuard);
        const double xg = capsdec::dot(xv, go);
        auto& gv = g.grad_buf(v.id);
        for (std::size_t i = 0; i < xv.size(); ++i) gv[i] += f * go[i] + coef * xv[i] * xg;
    });
}

Var Graph::weighted_sum(Var weights, std::span<const Var> vecs) {
    require_same_dim(dim(weights), vecs.size(), "weighted_sum");
    if (vecs.empty()) fail(Error::Kind::InvalidArgument, "weighted_sum: no operands");
    const std::size_t n = dim(vecs[0]);
    std::vector<double> y(n, 0.0);
    bool ng = needs(weights);
    const auto& w = nodes_[weights.id].value;
    for (std::size_t k = 0; k < vecs.size(); ++k) {
        require_same_dim(n, dim(vecs[k]), "weighted_sum");
        const auto& vv = nodes_[vecs[k].id].value;
        for (std::size_t i = 0; i < n; ++i) y[i] += w[k] * vv[i];
        ng = ng || needs(vecs[k]);
    }
    std::vector<Var> ins(vecs.begin(), vecs.end());
    return push(std::move(y), n, 1, ng, [weights, ins](Graph& g, std::uint32_t self) {
        const auto& go = g.nodes_[self].grad;
        const auto& w = g.nodes_[weights.id].value;
        const bool gw_needed = g.needs(weights);
        for (std::size_t k = 0; k < ins.size(); ++k) {
            const auto& vv = g.nodes_[ins[k].id].value;
            if (gw_needed) g.grad_buf(weights.id)[k] += capsdec::dot(go, vv);
            if (g.needs(ins[k])) {
                auto& gk = g.grad_buf(ins[k].id);
                for (std::size_t i = 0; i < go.size(); ++i) gk[i] += w[k] * go[i];
            }
        }
    });
}

void Graph::backward(Var loss) {
    if (dim(loss) != 1) fail(Error::Kind::ShapeMismatch, "backward: loss must be a scalar");
    if (!needs(loss)) return;
    grad_buf(loss.id)[0] += 1.0;
    for (std::uint32_t id = loss.id + 1; id-- > 0;) {
        auto& n = nodes_[id];
        if (!n.needs_grad || n.grad.empty() || !n.back) continue;
        n.back(*this, id);
    }
}

// ---------------------------------------------------------------------------
// Optimisation

void check_gradients_finite(const ParameterStore& params) {
    for (const auto& p : params) {
        for (std::size_t i = 0; i < p.grad.size(); ++i) {
            if (!std::isfinite(p.grad[i])) {
                std::ostringstream os;
                os << "non-finite gradient in parameter '" << p.name << "' at entry " << i;
                fail(Error::Kind::NonFinite, os.str());
            }
        }
    }
}

void sgd_step(ParameterStore& params, double lr) {
    check_gradients_finite(params);
    for (auto& p : params) {
        if (p.frozen) continue;
        for (std::size_t i = 0; i < p.size(); ++i) p.value[i] -= lr * p.grad[i];
    }
    params.zero_grad();
}

void Adam::step(ParameterStore& params) {
    check_gradients_finite(params);
    if (m_.size() != params.size()) {
        m_.clear();
        v_.clear();
        for (const auto& p : params) {
            m_.emplace_back(p.size(), 0.0);
            v_.emplace_back(p.size(), 0.0);
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(s_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(s_.beta2, static_cast<double>(t_));
    std::size_t k = 0;
    for (auto& p : params) {
        auto& m = m_[k];
        auto& v = v_[k];
        ++k;
        if (p.frozen) continue;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double g = p.grad[i];
            m[i] = s_.beta1 * m[i] + (1.0 - s_.beta1) * g;
            v[i] = s_.beta2 * v[i] + (1.0 - s_.beta2) * g * g;
            const double mh = m[i] / bc1;
            const double vh = v[i] / bc2;
            p.value[i] -= s_.lr * mh / (std::sqrt(vh) + s_.eps);
        }
    }
    params.zero_grad();
}

// ---------------------------------------------------------------------------
// Gradient checking

GradCheckResult grad_check(const LossFn& loss_fn, ParameterStore& params, double epsilon, double abs_floor) {
    if (!(epsilon > 0.0 && epsilon <= 1e-2)) fail(Error::Kind::InvalidArgument, "grad_check: epsilon must lie in (0, 1e-2]");

    auto eval = [&] {
        Graph g;
        return g.scalar(loss_fn(g));
    };

    params.zero_grad();
    double base = 0.0;
    {
        Graph g;
        Var loss = loss_fn(g);
        base = g.scalar(loss);
        g.backward(loss);
    }
    if (eval() != base) fail(Error::Kind::InvalidArgument, "grad_check: loss function is not deterministic");

    GradCheckResult res;
    for (auto& p : params) {
        if (p.frozen) continue;
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double analytic = p.grad[i];
            const double saved = p.value[i];
            p.value[i] = saved + epsilon;
            const double up = eval();
            p.value[i] = saved - epsilon;
            const double down = eval();
            p.value[i] = saved;
            const double numeric = (up - down) / (2.0 * epsilon);
            const double denom = std::max({std::abs(analytic), std::abs(numeric), abs_floor});
            const double rel = std::abs(analytic - numeric) / denom;
            ++res.entries_checked;
            if (rel > res.max_relative_error) {
                res.max_relative_error = rel;
                res.worst_parameter = p.name;
                res.worst_index = i;
            }
        }
    }
    params.zero_grad();
    return res;
}

}  // namespace capsdec
