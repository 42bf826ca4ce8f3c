#include <cmath>
#include <random>

#include "capsdec/numerics.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace capsdec;
using testutil::random_vector;

TEST_SUITE("numerics") {

TEST_CASE("softmax examples") {
    const auto u = softmax(RealVector{0, 0, 0});
    for (double x : u) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(softmax(RealVector{42.0})[0] == 1.0);
    const auto s = softmax(RealVector{1, 2});
    CHECK(std::abs(s[0] - 0.268941) < 1e-5);
    CHECK(std::abs(s[1] - 0.731059) < 1e-5);
}

TEST_CASE("softmax stays on the simplex and ignores shifts") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 500; ++t) {
        const std::size_t n = 1 + rng() % 9;
        RealVector x = random_vector(n, rng, 30.0);
        const auto s = softmax(x);
        double sum = 0.0;
        for (double v : s) {
            CHECK(v > 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
        for (double& v : x) v += 500.0;
        CHECK(testutil::max_abs_diff(softmax(x), s) < 1e-12);
    }
    const auto big = softmax(RealVector{1000.0, 1000.0});
    CHECK(big[0] == doctest::Approx(0.5));
}

TEST_CASE("softmax rejects bad input") {
    CHECK_THROWS_AS(softmax(RealVector{}), Error);
    CHECK_THROWS_AS(softmax(RealVector{1.0, NAN}), Error);
    CHECK_THROWS_AS(softmax(RealVector{INFINITY}), Error);
}

TEST_CASE("squash examples") {
    CHECK(squash(RealVector{0, 0, 0}) == RealVector{0, 0, 0});
    const auto s = squash(RealVector{3, 4});
    CHECK(std::abs(s[0] - 0.576923) < 1e-5);
    CHECK(std::abs(s[1] - 0.769231) < 1e-5);
    const auto unit = squash(RealVector{0.6, 0.8});
    CHECK(std::abs(std::sqrt(squared_norm(unit)) - 0.5) < 1e-12);
    CHECK(std::abs(unit[0] / unit[1] - 0.75) < 1e-12);
}

TEST_CASE("squash is norm-monotone and bounded") {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 1000; ++t) {
        RealVector x = random_vector(4, rng, 10.0);
        RealVector y = x;
        for (double& v : y) v *= 1.5;
        const double nx = std::sqrt(squared_norm(squash(x)));
        const double ny = std::sqrt(squared_norm(squash(y)));
        CHECK(nx < 1.0);
        CHECK(ny < 1.0);
        CHECK(nx < ny);
        CHECK(cosine(squash(x), x) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("matvec and vecmat agree with loops") {
    std::mt19937_64 rng(9);
    const auto m = testutil::random_matrix(3, 4, rng);
    const auto x4 = random_vector(4, rng);
    const auto x3 = random_vector(3, rng);
    CHECK(testutil::max_abs_diff(matvec(m, x4), oracle::mat_times_vec(testutil::to_mat(m), x4)) < 1e-12);
    CHECK(testutil::max_abs_diff(vecmat(x3, m), oracle::vec_times_mat(x3, testutil::to_mat(m))) < 1e-12);
    CHECK_THROWS_AS(matvec(m, x3), Error);
    CHECK_THROWS_AS(vecmat(x4, m), Error);
}

TEST_CASE("grad_check on a quadratic") {
    ParameterStore store;
    const auto idx = store.add("p", 1, 5);
    store.at(idx).value = {0.3, -1.2, 2.0, 0.0, 5.5};
    auto loss = [&](Graph& g) { return g.scale_const(g.squared_norm(g.parameter(store.at(idx))), 0.5); };
    {
        Graph g;
        g.backward(loss(g));
        CHECK(store.at(idx).grad == store.at(idx).value);
    }
    store.zero_grad();
    CHECK(grad_check(loss, store).max_relative_error < 1e-7);
}

TEST_CASE("grad_check on softmax cross-entropy") {
    ParameterStore store;
    const auto idx = store.add("logits", 1, 4);
    store.at(idx).value = {0.1, -0.4, 1.3, 0.7};
    auto loss = [&](Graph& g) {
        return g.scale_const(g.element(g.log_softmax(g.parameter(store.at(idx))), 2), -1.0);
    };
    CHECK(grad_check(loss, store).max_relative_error < 1e-5);
}

TEST_CASE("frozen parameters get no gradient") {
    ParameterStore store;
    const auto a = store.add("a", 1, 3);
    const auto b = store.add("b", 1, 3);
    store.at(a).value = {1, 2, 3};
    store.at(b).value = {4, 5, 6};
    store.at(b).frozen = true;
    Graph g;
    g.backward(g.dot(g.parameter(store.at(a)), g.parameter(store.at(b))));
    CHECK(store.at(b).grad == RealVector{0, 0, 0});
    CHECK(store.at(a).grad == RealVector{4, 5, 6});
}

TEST_CASE("grad_check validates its inputs") {
    ParameterStore store;
    const auto idx = store.add("p", 1, 2);
    store.at(idx).value = {1, 2};
    auto loss = [&](Graph& g) { return g.squared_norm(g.parameter(store.at(idx))); };
    CHECK_THROWS_AS(grad_check(loss, store, 0.0), Error);
    CHECK_THROWS_AS(grad_check(loss, store, 0.1), Error);
    int calls = 0;
    auto flaky = [&](Graph& g) {
        ++calls;
        return g.scale_const(g.squared_norm(g.parameter(store.at(idx))), 1.0 + calls);
    };
    CHECK_THROWS_AS(grad_check(flaky, store), Error);
}

TEST_CASE("every graph op passes grad_check") {
    std::mt19937_64 rng(21);
    ParameterStore store;
    const auto M = store.add("M", 3, 4);
    const auto x = store.add("x", 1, 4);
    const auto y = store.add("y", 1, 3);
    const auto z = store.add("z", 1, 3);
    const auto s = store.add("s", 1, 1);
    for (auto& p : store) p.value = random_vector(p.size(), rng);
    auto P = [&](Graph& g, std::size_t i) { return g.parameter(store.at(i)); };
    // each op is followed by a fixed random projection so every output entry matters
    const RealVector w3 = random_vector(3, rng), w4 = random_vector(4, rng), w7 = random_vector(7, rng);
    auto proj = [&](Graph& g, Var v) {
        const std::size_t n = g.dim(v);
        const RealVector& w = n == 3 ? w3 : n == 4 ? w4 : w7;
        return g.dot(v, g.constant(RealVector(w.begin(), w.begin() + static_cast<long>(n))));
    };
    std::vector<std::pair<const char*, LossFn>> ops{
        {"matvec", [&](Graph& g) { return proj(g, g.matvec(P(g, M), P(g, x))); }},
        {"vecmat", [&](Graph& g) { return proj(g, g.vecmat(P(g, y), P(g, M))); }},
        {"row", [&](Graph& g) { return proj(g, g.row(P(g, M), 1)); }},
        {"add", [&](Graph& g) { return proj(g, g.add(P(g, y), P(g, z))); }},
        {"add_n", [&](Graph& g) {
             std::vector<Var> v{P(g, y), P(g, z), P(g, y)};
             return proj(g, g.add_n(v));
         }},
        {"mul", [&](Graph& g) { return proj(g, g.mul(P(g, y), P(g, z))); }},
        {"scale", [&](Graph& g) { return proj(g, g.scale(P(g, s), P(g, y))); }},
        {"scale_const", [&](Graph& g) { return proj(g, g.scale_const(P(g, y), -2.5)); }},
        {"dot", [&](Graph& g) { return g.dot(P(g, y), P(g, z)); }},
        {"squared_norm", [&](Graph& g) { return g.squared_norm(P(g, x)); }},
        {"stack", [&](Graph& g) {
             std::vector<Var> v{g.element(P(g, y), 0), P(g, s), g.element(P(g, z), 2)};
             return proj(g, g.stack(v));
         }},
        {"concat", [&](Graph& g) {
             std::vector<Var> v{P(g, y), P(g, x)};
             return proj(g, g.concat(v));
         }},
        {"element", [&](Graph& g) { return g.element(P(g, x), 2); }},
        {"softmax", [&](Graph& g) { return proj(g, g.softmax(P(g, y))); }},
        {"log_softmax", [&](Graph& g) { return proj(g, g.log_softmax(P(g, x))); }},
        {"squash", [&](Graph& g) { return proj(g, g.squash(P(g, x))); }},
        {"weighted_sum", [&](Graph& g) {
             std::vector<Var> v{P(g, y), P(g, z)};
             return proj(g, g.weighted_sum(g.concat(std::vector<Var>{P(g, s), g.element(P(g, x), 0)}), v));
         }},
    };
    for (auto& [name, fn] : ops) {
        CAPTURE(name);
        CHECK(grad_check(fn, store).max_relative_error <= 1e-4);
    }
}

TEST_CASE("backward is linear in the loss") {
    std::mt19937_64 rng(4);
    ParameterStore store;
    const auto a = store.add("a", 1, 3);
    const auto M = store.add("M", 3, 3);
    for (auto& p : store) p.value = random_vector(p.size(), rng);
    auto l1 = [&](Graph& g) { return g.squared_norm(g.squash(g.matvec(g.parameter(store.at(M)), g.parameter(store.at(a))))); };
    auto l2 = [&](Graph& g) { return g.element(g.softmax(g.parameter(store.at(a))), 1); };
    auto collect = [&]() {
        std::vector<RealVector> out;
        for (const auto& p : store) out.push_back(p.grad);
        return out;
    };
    store.zero_grad();
    { Graph g; g.backward(l1(g)); }
    const auto g1 = collect();
    store.zero_grad();
    { Graph g; g.backward(l2(g)); }
    const auto g2 = collect();
    store.zero_grad();
    { Graph g; g.backward(g.add(l1(g), l2(g))); }
    const auto g12 = collect();
    for (std::size_t i = 0; i < g12.size(); ++i)
        for (std::size_t j = 0; j < g12[i].size(); ++j) CHECK(std::abs(g12[i][j] - g1[i][j] - g2[i][j]) < 1e-12);
}

TEST_CASE("sgd step") {
    ParameterStore store;
    const auto p = store.add("p", 1, 1);
    store.at(p).value = {1.0};
    sgd_step(store, 0.1);
    CHECK(store.at(p).value[0] == 1.0);
    store.at(p).grad = {2.0};
    sgd_step(store, 0.1);
    CHECK(store.at(p).value[0] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(store.at(p).grad[0] == 0.0);
}

TEST_CASE("adam first step moves each entry by about lr") {
    for (double scale : {1.0, 1e-3, 1e3}) {
        ParameterStore store;
        const auto p = store.add("p", 1, 3);
        store.at(p).value = {0.0, 1.0, -1.0};
        store.at(p).grad = {scale, scale, scale};
        Adam opt;
        opt.step(store);
        for (std::size_t i = 0; i < 3; ++i) {
            const double moved = RealVector{0.0, 1.0, -1.0}[i] - store.at(p).value[i];
            CHECK(std::abs(moved - 1e-3) < 1e-7);
        }
        CHECK(store.at(p).grad == RealVector{0, 0, 0});
        CHECK(opt.steps() == 1);
    }
}

TEST_CASE("non-finite gradients abort the step") {
    ParameterStore store;
    const auto a = store.add("enc.weight", 1, 2);
    const auto b = store.add("clf.bias", 1, 2);
    store.at(a).value = {1, 1};
    store.at(b).value = {2, 2};
    store.at(a).grad = {0.5, 0.5};
    store.at(b).grad = {NAN, 0.0};
    try {
        sgd_step(store, 0.1);
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("clf.bias") != std::string::npos);
    }
    CHECK(store.at(a).value == RealVector{1, 1});
    Adam opt;
    CHECK_THROWS_AS(opt.step(store), Error);
    CHECK(store.at(a).value == RealVector{1, 1});
}

TEST_CASE("parameter store bookkeeping") {
    ParameterStore store;
    store.add("a", 2, 3);
    CHECK_THROWS_AS(store.add("a", 1, 1), Error);
    CHECK(store.scalar_count() == 6);
    CHECK(store.index_of("a") == 0);
    CHECK_THROWS_AS(store.at("missing"), Error);
    store.at("a").value[4] = 7.0;
    const auto snap = store.snapshot();
    store.at("a").value[4] = 1.0;
    store.restore(snap);
    CHECK(store.at("a").value[4] == 7.0);
}

}  // TEST_SUITE
