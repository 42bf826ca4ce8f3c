#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "capsdec/context.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace capsdec;
using testutil::max_abs_diff;
using testutil::random_vector;

namespace {

struct Toy {
    Vocabulary vocab;
    ParameterStore store;
    EncoderParams params;

    Toy(const std::vector<std::string>& tokens, std::size_t d, std::uint64_t seed) : vocab(testutil::vocab_of(tokens)) {
        params = EncoderParams::create(store, vocab.size(), d);
        std::mt19937_64 rng(seed);
        params.initialize(store, rng);
    }

    std::vector<RealVector> encode(const Sentence& s) const {
        Graph g(false);
        const auto emb = embed_lookup(g, s, vocab, store, params);
        std::vector<RealVector> out;
        for (Var v : encode_toy(g, emb, store, params)) out.emplace_back(g.value(v).begin(), g.value(v).end());
        return out;
    }
};

std::vector<RealVector> values(const Graph& g, const std::vector<Var>& vs) {
    std::vector<RealVector> out;
    for (Var v : vs) out.emplace_back(g.value(v).begin(), g.value(v).end());
    return out;
}

}  // namespace

TEST_SUITE("context") {

TEST_CASE("tokenize lowercases and splits on whitespace") {
    CHECK(tokenize("  The  Bank\tof\nRIVERS ") == std::vector<std::string>{"the", "bank", "of", "rivers"});
    CHECK(tokenize("").empty());
}

TEST_CASE("sentence validation") {
    const auto s = Sentence::parse("a b c", 1);
    CHECK(s.target_token() == "b");
    CHECK(s.text() == "a b c");
    CHECK_THROWS_AS(Sentence::parse("a b c", 3), Error);
    CHECK_THROWS_AS(Sentence({}, 0).validate(), Error);
}

TEST_CASE("vocabulary maps unknown tokens to the reserved id") {
    Vocabulary v;
    CHECK(v.size() == 1);
    const auto id = v.add("bank");
    CHECK(v.add("bank") == id);
    CHECK(v.lookup("bank") == id);
    CHECK(v.lookup("river") == Vocabulary::kUnknown);
    CHECK(v.token(Vocabulary::kUnknown) == "<unk>");
}

TEST_CASE("embedding lookup") {
    Toy toy({"the", "bank"}, 3, 1);
    const auto& table = toy.store.at(toy.params.embedding);
    Graph g(false);
    const auto out = values(g, embed_lookup(g, Sentence({"bank", "zzz", "bank"}, 0), toy.vocab, toy.store, toy.params));
    const std::size_t bank = toy.vocab.lookup("bank");
    CHECK(out[0] == RealVector(table.value.begin() + 3 * bank, table.value.begin() + 3 * bank + 3));
    CHECK(out[1] == RealVector(table.value.begin(), table.value.begin() + 3));
    CHECK(out[0] == out[2]);
}

TEST_CASE("toy encoder shapes and degenerate case") {
    Toy toy({"a", "b", "c"}, 4, 2);
    CHECK(toy.encode(Sentence({"a"}, 0)).size() == 1);
    const auto out = toy.encode(Sentence({"a", "b", "c", "a"}, 1));
    CHECK(out.size() == 4);
    CHECK(out[0] == out[3]);

    for (auto& p : toy.store) std::fill(p.value.begin(), p.value.end(), 0.0);
    const auto zero = toy.encode(Sentence({"a", "b", "c"}, 0));
    CHECK(zero[0] == zero[1]);
    CHECK(zero[1] == zero[2]);
}

TEST_CASE("toy encoder matches the oracle") {
    std::mt19937_64 rng(41);
    for (int t = 0; t < 50; ++t) {
        const std::size_t d = 1 + rng() % 4;
        Toy toy({"a", "b", "c", "d"}, d, rng());
        std::vector<std::string> toks;
        const std::size_t n = 1 + rng() % 5;
        for (std::size_t i = 0; i < n; ++i) toks.push_back(std::string(1, static_cast<char>('a' + rng() % 5)));
        const Sentence s(toks, 0);
        const auto table = testutil::to_mat(toy.store.at(toy.params.embedding));
        std::vector<oracle::Vec> emb;
        for (const auto& tok : toks) emb.push_back(table[toy.vocab.lookup(tok)]);
        const auto expect = oracle::encode(emb, testutil::to_mat(toy.store.at(toy.params.query)),
                                           testutil::to_mat(toy.store.at(toy.params.key)),
                                           testutil::to_mat(toy.store.at(toy.params.value)));
        CHECK(max_abs_diff(toy.encode(s), expect) < 1e-12);
    }
}

TEST_CASE("gradients reach the encoder") {
    Toy toy({"x", "y", "z"}, 3, 7);
    const Sentence s({"x", "y", "z"}, 1);
    std::mt19937_64 rng(8);
    const RealVector w = random_vector(9, rng);
    auto loss = [&](Graph& g) {
        const auto emb = embed_lookup(g, s, toy.vocab, toy.store, toy.params);
        return g.dot(g.concat(encode_toy(g, emb, toy.store, toy.params)), g.constant(w));
    };
    const auto res = grad_check(loss, toy.store);
    CHECK(res.max_relative_error <= 1e-4);
    toy.store.zero_grad();
    Graph g;
    g.backward(loss(g));
    double total = 0.0;
    for (double x : toy.store.at(toy.params.query).grad) total += std::abs(x);
    CHECK(total > 0.0);
}

TEST_CASE("precomputed vectors round-trip bit-exactly") {
    std::mt19937_64 rng(43);
    std::vector<RealVector> vecs;
    for (int i = 0; i < 5; ++i) vecs.push_back(random_vector(3, rng, 1e3));
    vecs.push_back({0.1, 1e-300, -std::numeric_limits<double>::max()});
    vecs.push_back({std::numeric_limits<double>::denorm_min(), -0.0, 1.0 / 3.0});
    std::stringstream ss;
    write_precomputed(ss, vecs);
    const auto back = read_precomputed(ss);
    REQUIRE(back.size() == vecs.size());
    for (std::size_t i = 0; i < vecs.size(); ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(std::memcmp(&back[i][j], &vecs[i][j], sizeof(double)) == 0);
}

TEST_CASE("precomputed parsing rejects malformed input") {
    std::stringstream bad_header("2\n1 2\n");
    CHECK_THROWS_AS(read_precomputed(bad_header), Error);
    std::stringstream short_rows("2 2\n1 2\n");
    CHECK_THROWS_AS(read_precomputed(short_rows), Error);
    std::stringstream short_cols("1 3\n1 2\n");
    CHECK_THROWS_AS(read_precomputed(short_cols), Error);
    std::stringstream junk("1 2\n1 x\n");
    CHECK_THROWS_AS(read_precomputed(junk), Error);
}

TEST_CASE("precomputed store lookup and token-count check") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "capsdec_precomputed_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_precomputed_file((dir / "s0.txt").string(), std::vector<RealVector>{{1, 2}, {3, 4}});
    write_precomputed_file((dir / "s1.txt").string(), std::vector<RealVector>{{5, 6}});
    {
        std::ofstream idx(dir / "index.tsv");
        idx << "s0.txt\tthe bank\ns1.txt\tshort sentence\n";
    }
    const auto store = PrecomputedStore::load_dir(dir.string());
    CHECK(store.dim() == 2);
    CHECK(store.find(Sentence({"the", "bank"}, 1))[1] == RealVector{3, 4});
    CHECK_THROWS_AS(store.find(Sentence({"unknown"}, 0)), Error);

    Graph g(false);
    const auto ctx = values(g, encode_precomputed(g, Sentence({"the", "bank"}, 0), store));
    CHECK(ctx == std::vector<RealVector>{{1, 2}, {3, 4}});
    CHECK_THROWS_AS(encode_precomputed(g, Sentence({"short", "sentence"}, 0), store), Error);
    fs::remove_all(dir);
}

TEST_CASE("local window examples") {
    auto w = local_window(20, 5, 4);
    CHECK(w.first == 3);
    CHECK(w.last == 7);
    CHECK(w.size() == 5);
    w = local_window(20, 0, 4);
    CHECK(w.first == 0);
    CHECK(w.last == 2);
    w = local_window(6, 3, 12);
    CHECK(w.first == 0);
    CHECK(w.last == 5);
    w = local_window(20, 19, 4);
    CHECK(w.first == 17);
    CHECK(w.last == 19);
    CHECK(local_window(20, 5, 0).size() == 1);
    CHECK_THROWS_AS(local_window(20, 5, 3), Error);
    CHECK_THROWS_AS(local_window(5, 5, 2), Error);

    ContextRepr ctx{{0}, {1}, {2}, {3}};
    const auto full = local_window(ctx, 2, 8);
    CHECK(full.vectors == ctx);
}

TEST_CASE("local window is contiguous, contains h and matches the oracle") {
    for (std::size_t n = 1; n <= 12; ++n)
        for (std::size_t h = 0; h < n; ++h)
            for (std::size_t m = 0; m <= 2 * n + 2; m += 2) {
                const auto w = local_window(n, h, m);
                const auto o = oracle::window(n, h, m);
                CHECK(w.first == o.first);
                CHECK(w.last == o.last);
                CHECK(w.contains(h));
                CHECK(w.last < n);
                CHECK(w.size() <= m + 1);
            }
}

}  // TEST_SUITE
