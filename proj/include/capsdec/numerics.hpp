#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "capsdec/error.hpp"

namespace capsdec {

using RealVector = std::vector<double>;

struct RealMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // row-major

    RealMatrix() = default;
    RealMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

    static RealMatrix identity(std::size_t n);
};

// ---------------------------------------------------------------------------
// Plain (graph-free) kernels. The graph ops below reuse these for forward
// values so that library callers and the trainer see identical arithmetic.
// ---------------------------------------------------------------------------

void require_finite(std::span<const double> v, const char* what);

double dot(std::span<const double> a, std::span<const double> b);
double squared_norm(std::span<const double> v);

/// Max-subtracted softmax. Rejects empty or non-finite input.
RealVector softmax(std::span<const double> v);

/// v = x * |x| / (1 + |x|^2), which equals the squashing nonlinearity
/// (|x|^2/(1+|x|^2)) * x/|x| for x != 0 and extends it continuously to 0.
RealVector squash(std::span<const double> x);

/// y = M x  (M is rows x cols, x has cols entries)
RealVector matvec(const RealMatrix& m, std::span<const double> x);
/// y = x M  (x has rows entries)
RealVector vecmat(std::span<const double> x, const RealMatrix& m);

double cosine(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

struct Parameter {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> value;
    std::vector<double> grad;
    bool frozen = false;

    std::size_t size() const { return value.size(); }
};

class ParameterStore {
public:
    /// Adds a zero-initialised parameter; names must be unique.
    std::size_t add(const std::string& name, std::size_t rows, std::size_t cols);

    Parameter& at(std::size_t index) { return params_.at(index); }
    const Parameter& at(std::size_t index) const { return params_.at(index); }
    Parameter& at(const std::string& name);
    const Parameter& at(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) != 0; }
    std::size_t index_of(const std::string& name) const;

    std::size_t size() const { return params_.size(); }
    std::size_t scalar_count() const;
    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    void zero_grad();
    void scale_grad(double factor);

    std::vector<std::vector<double>> snapshot() const;
    void restore(const std::vector<std::vector<double>>& values);

private:
    std::vector<Parameter> params_;
    std::unordered_map<std::string, std::size_t> index_;
};

/// Zero-mean uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
void init_uniform(Parameter& p, std::size_t fan_in, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Reverse-mode compute graph
//
// Nodes are appended in evaluation order, so walking them backwards is a
// reverse topological order and each node's backward runs exactly once.
// Gradients for parameter leaves are accumulated into Parameter::grad.
// ---------------------------------------------------------------------------

class Graph {
public:
    struct Var {
        std::uint32_t id = 0;
    };

    /// An untracked graph treats every parameter as a constant, so forward
    /// passes over a shared model never write to it.
    explicit Graph(bool track_gradients = true) : track_(track_gradients) {}

    bool tracking() const { return track_; }

    Var constant(RealVector v);
    Var constant_matrix(const RealMatrix& m);
    /// Leaf bound to a parameter. Frozen parameters enter as constants. In a
    /// tracking graph, backward() accumulates into p.grad.
    Var parameter(const Parameter& p);

    std::span<const double> value(Var v) const;
    double scalar(Var v) const;
    std::size_t dim(Var v) const { return nodes_[v.id].value.size(); }
    std::size_t rows(Var v) const { return nodes_[v.id].rows; }
    std::size_t cols(Var v) const { return nodes_[v.id].cols; }
    std::span<const double> grad(Var v) const;
    std::size_t size() const { return nodes_.size(); }

    Var matvec(Var m, Var x);
    Var vecmat(Var x, Var m);
    Var row(Var m, std::size_t r);
    Var add(Var a, Var b);
    Var add_n(std::span<const Var> xs);
    Var mul(Var a, Var b);
    Var scale(Var s, Var v);
    Var scale_const(Var v, double c);
    Var dot(Var a, Var b);
    Var squared_norm(Var v);
    Var stack(std::span<const Var> scalars);
    Var concat(std::span<const Var> parts);
    Var element(Var v, std::size_t i);
    Var softmax(Var v);
    Var log_softmax(Var v);
    Var squash(Var v);
    Var weighted_sum(Var weights, std::span<const Var> vecs);

    /// Seeds d(loss)/d(loss) = 1 and propagates to every reachable leaf.
    void backward(Var loss);

private:
    struct Node {
        std::vector<double> value;
        std::vector<double> grad;
        std::size_t rows = 0;
        std::size_t cols = 1;
        Parameter* param = nullptr;
        bool needs_grad = false;
        std::function<void(Graph&, std::uint32_t)> back;
    };

    Var push(std::vector<double> value, std::size_t rows, std::size_t cols, bool needs_grad,
             std::function<void(Graph&, std::uint32_t)> back);
    std::vector<double>& grad_buf(std::uint32_t id);
    bool needs(Var v) const { return nodes_[v.id].needs_grad; }

    std::vector<Node> nodes_;
    bool track_ = true;
};

using Var = Graph::Var;

// ---------------------------------------------------------------------------
// Optimisation
// ---------------------------------------------------------------------------

/// Throws naming the first parameter whose gradient is non-finite.
void check_gradients_finite(const ParameterStore& params);

/// p -= lr * g, then zero gradients.
void sgd_step(ParameterStore& params, double lr);

struct AdamSettings {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    explicit Adam(AdamSettings settings = {}) : s_(settings) {}

    void step(ParameterStore& params);
    long steps() const { return t_; }
    const AdamSettings& settings() const { return s_; }

private:
    AdamSettings s_;
    long t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

// ---------------------------------------------------------------------------
// Gradient checking
// ---------------------------------------------------------------------------

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::string worst_parameter;
    std::size_t worst_index = 0;
    std::size_t entries_checked = 0;
};

using LossFn = std::function<Var(Graph&)>;

/// Compares analytic gradients against central finite differences for every
/// entry of every non-frozen parameter. The relative error of one entry is
/// |a - n| / max(|a|, |n|, abs_floor).
GradCheckResult grad_check(const LossFn& loss_fn, ParameterStore& params, double epsilon = 1e-6,
                           double abs_floor = 1e-6);

}  // namespace capsdec
