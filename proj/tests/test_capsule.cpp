#include <cmath>
#include <random>

#include "capsdec/capsule.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace capsdec;
using testutil::max_abs_diff;
using testutil::random_matrix;
using testutil::random_vector;

namespace {

std::vector<std::vector<oracle::Mat>> oracle_grid(const std::vector<RealMatrix>& grid, std::size_t p) {
    std::vector<std::vector<oracle::Mat>> out(p, std::vector<oracle::Mat>(p));
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) out[i][j] = testutil::to_mat(grid[i * p + j]);
    return out;
}

std::vector<RealMatrix> random_grid(std::size_t p, std::size_t d, std::mt19937_64& rng, double scale = 1.0) {
    std::vector<RealMatrix> grid;
    for (std::size_t k = 0; k < p * p; ++k) grid.push_back(random_matrix(d, d, rng, scale));
    return grid;
}

}  // namespace

TEST_SUITE("capsule") {

TEST_CASE("expand examples") {
    std::vector<RealMatrix> zeros(3, RealMatrix(4, 2));
    for (const auto& v : expand(RealVector{1, 2, 3, 4}, zeros)) CHECK(v == RealVector{0, 0});
    const std::vector<RealMatrix> id{RealMatrix::identity(3)};
    const auto one = expand(RealVector{0.5, -1, 2}, id);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == RealVector{0.5, -1, 2});

    std::mt19937_64 rng(11);
    std::vector<RealMatrix> w;
    std::vector<oracle::Mat> wo;
    for (int i = 0; i < 5; ++i) {
        w.push_back(random_matrix(4, 3, rng));
        wo.push_back(testutil::to_mat(w.back()));
    }
    const auto e = random_vector(4, rng);
    CHECK(max_abs_diff(expand(e, w), oracle::expand(e, wo)) < 1e-12);
    CHECK_THROWS_AS(expand(RealVector{1, 2}, w), Error);
    CHECK_THROWS_AS(expand(RealVector{1, NAN, 0, 0}, w), Error);
}

TEST_CASE("routing with zero predictions stays uniform") {
    const std::size_t p = 3;
    std::vector<RealMatrix> grid(p * p, RealMatrix(2, 2));
    RoutingTrace trace;
    const auto v = route_layer(std::vector<RealVector>(p, RealVector{1, 1}), grid, 3, &trace);
    for (const auto& x : v) CHECK(x == RealVector{0, 0});
    for (const auto& c : trace.couplings)
        for (double x : c.values) CHECK(x == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("single capsule with identity routing is a squash") {
    const RealVector u{0.3, -2.0, 1.1};
    const auto v = route_layer(std::vector<RealVector>{u}, std::vector<RealMatrix>{RealMatrix::identity(3)}, 1);
    CHECK(max_abs_diff(v[0], squash(u)) < 1e-15);
}

TEST_CASE("hand-set two-capsule routing matches the scripted oracle") {
    std::vector<RealMatrix> grid(4, RealMatrix(2, 2));
    grid[0].values = {1.0, 0.5, -0.3, 0.8};   // W'_00
    grid[1].values = {0.2, -1.0, 0.7, 0.1};   // W'_01
    grid[2].values = {-0.6, 0.4, 0.9, 1.2};   // W'_10
    grid[3].values = {1.5, 0.0, 0.25, -0.75}; // W'_11
    const std::vector<RealVector> u{{0.9, -0.4}, {0.3, 1.7}};
    const auto v = route_layer(u, grid, 2);
    CHECK(max_abs_diff(v, oracle::route(u, oracle_grid(grid, 2), 2)) < 1e-10);
}

TEST_CASE("routing rejects bad arguments") {
    std::vector<RealMatrix> grid(4, RealMatrix::identity(2));
    const std::vector<RealVector> u{{1, 0}, {0, 1}};
    CHECK_THROWS_AS(route_layer(u, grid, 0), Error);
    grid.pop_back();
    CHECK_THROWS_AS(route_layer(u, grid, 1), Error);
}

TEST_CASE("random routing matches the oracle") {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 200; ++t) {
        const std::size_t p = 1 + rng() % 3, d = 1 + rng() % 4;
        const std::size_t iters = 1 + rng() % 4;
        const auto grid = random_grid(p, d, rng);
        std::vector<RealVector> u;
        for (std::size_t i = 0; i < p; ++i) u.push_back(random_vector(d, rng, 2.0));
        CHECK(max_abs_diff(route_layer(u, grid, iters), oracle::route(u, oracle_grid(grid, p), static_cast<int>(iters))) <
              1e-10);
    }
}

TEST_CASE("coupling rows stay on the simplex and outputs stay short") {
    std::mt19937_64 rng(23);
    for (int t = 0; t < 300; ++t) {
        const std::size_t p = 1 + rng() % 5, d = 1 + rng() % 4;
        std::vector<RealVector> u;
        for (std::size_t i = 0; i < p; ++i) u.push_back(random_vector(d, rng, 3.0));
        RoutingTrace trace;
        const auto v = route_layer(u, random_grid(p, d, rng, 2.0), 3, &trace);
        CHECK(trace.couplings.size() == 3);
        for (const auto& c : trace.couplings)
            for (std::size_t i = 0; i < p; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < p; ++j) s += c(i, j);
                CHECK(std::abs(s - 1.0) < 1e-9);
            }
        for (const auto& x : v) CHECK(squared_norm(x) < 1.0);
    }
}

TEST_CASE("agreement is usually non-decreasing across iterations") {
    std::mt19937_64 rng(29);
    int monotone = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        const std::size_t p = 2 + rng() % 3, d = 2 + rng() % 3;
        std::vector<RealVector> u;
        for (std::size_t i = 0; i < p; ++i) u.push_back(random_vector(d, rng));
        RoutingTrace trace;
        route_layer(u, random_grid(p, d, rng), 3, &trace);
        bool ok = true;
        for (std::size_t k = 1; k < trace.agreement.size(); ++k)
            if (trace.agreement[k] < trace.agreement[k - 1]) ok = false;
        monotone += ok;
    }
    CHECK(monotone >= 950);
}

TEST_CASE("decompose composes expand and routing layers") {
    DecomposerConfig cfg{2, 2, 3, 4, 3};
    ParameterStore store;
    const auto params = DecomposerParams::create(store, cfg);
    std::mt19937_64 rng(31);
    params.initialize(store, rng);
    CHECK(store.size() == 2 + 2 * 4);
    CHECK(store.contains("capsule.route.1.0.1"));
    const RealVector e = random_vector(4, rng);

    Graph g(false);
    const auto out = decompose(g, g.constant(e), store, params, cfg);
    std::vector<RealVector> got;
    for (Var v : out) got.emplace_back(g.value(v).begin(), g.value(v).end());

    std::vector<oracle::Mat> ex;
    for (std::size_t idx : params.expansion) ex.push_back(testutil::to_mat(store.at(idx)));
    std::vector<std::vector<std::vector<oracle::Mat>>> layers;
    for (const auto& layer : params.routing) {
        std::vector<RealMatrix> grid;
        for (std::size_t idx : layer) {
            RealMatrix m(store.at(idx).rows, store.at(idx).cols);
            m.values = store.at(idx).value;
            grid.push_back(m);
        }
        layers.push_back(oracle_grid(grid, 2));
    }
    CHECK(max_abs_diff(got, oracle::decompose(e, ex, layers, 3)) < 1e-10);

    // K = 1 is route_layer after expand
    DecomposerConfig one{2, 1, 3, 4, 3};
    DecomposerParams first = params;
    first.routing.resize(1);
    Graph g1(false);
    const auto out1 = decompose(g1, g1.constant(e), store, first, one);
    const auto caps = oracle::route(oracle::expand(e, ex), layers[0], 3);
    for (std::size_t k = 0; k < 2; ++k) CHECK(max_abs_diff(RealVector(g1.value(out1[k]).begin(), g1.value(out1[k]).end()), caps[k]) < 1e-10);

    CHECK_THROWS_AS(decompose(g1, g1.constant(RealVector{1, 2}), store, params, cfg), Error);
    CHECK_THROWS_AS(decompose(g1, g1.constant(e), store, first, cfg), Error);
}

TEST_CASE("default decomposer returns ten short capsules deterministically") {
    DecomposerConfig cfg;
    cfg.embed_dim = cfg.capsule_dim = 16;
    auto run = [&] {
        ParameterStore store;
        const auto params = DecomposerParams::create(store, cfg);
        std::mt19937_64 rng(5);
        params.initialize(store, rng);
        Graph g(false);
        std::mt19937_64 erng(6);
        const auto out = decompose(g, g.constant(random_vector(16, erng)), store, params, cfg);
        std::vector<RealVector> v;
        for (Var x : out) v.emplace_back(g.value(x).begin(), g.value(x).end());
        return v;
    };
    const auto a = run();
    CHECK(a.size() == 10);
    for (const auto& v : a) CHECK(std::sqrt(squared_norm(v)) < 1.0);
    CHECK(a == run());
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS((DecomposerConfig{0, 1, 1, 2, 2}.validate()), Error);
    CHECK_THROWS_AS((DecomposerConfig{1, 0, 1, 2, 2}.validate()), Error);
    CHECK_THROWS_AS((DecomposerConfig{1, 1, 0, 2, 2}.validate()), Error);
    CHECK_NOTHROW((DecomposerConfig{1, 1, 1, 2, 3}.validate()));
}

TEST_CASE("gradients through decompose") {
    DecomposerConfig cfg{2, 2, 3, 4, 4};
    ParameterStore store;
    const auto params = DecomposerParams::create(store, cfg);
    const auto emb = store.add("embedding", 1, 4);
    std::mt19937_64 rng(37);
    params.initialize(store, rng);
    store.at(emb).value = random_vector(4, rng);
    const RealVector w = random_vector(8, rng);
    auto loss = [&](Graph& g) {
        const auto caps = decompose(g, g.parameter(store.at(emb)), store, params, cfg);
        return g.dot(g.concat(caps), g.constant(w));
    };
    const auto res = grad_check(loss, store);
    CAPTURE(res.worst_parameter);
    CHECK(res.max_relative_error <= 1e-4);
    CHECK(res.entries_checked == store.scalar_count());
}

}  // TEST_SUITE
