#include "capsdec/context.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace capsdec {

namespace {

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

double parse_double(std::string_view tok, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
        std::ostringstream os;
        os << "precomputed vectors: bad number '" << tok << "' on line " << line;
        fail(Error::Kind::Parse, os.str());
    }
    return v;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

Sentence Sentence::parse(std::string_view text, std::size_t target) {
    Sentence s(tokenize(text), target);
    s.validate();
    return s;
}

std::string Sentence::text() const { return join(tokens); }

void Sentence::validate() const {
    if (tokens.empty()) fail(Error::Kind::InvalidArgument, "sentence has no tokens");
    if (target >= tokens.size()) {
        std::ostringstream os;
        os << "target index " << target << " out of range for a " << tokens.size() << "-token sentence";
        fail(Error::Kind::InvalidArgument, os.str());
    }
}

Vocabulary::Vocabulary() { add(kUnknownToken); }

std::size_t Vocabulary::add(const std::string& token) {
    auto it = ids_.find(token);
    if (it != ids_.end()) return it->second;
    tokens_.push_back(token);
    ids_.emplace(token, tokens_.size() - 1);
    return tokens_.size() - 1;
}

std::size_t Vocabulary::lookup(const std::string& token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? kUnknown : it->second;
}

EncoderParams EncoderParams::create(ParameterStore& store, std::size_t vocab_size, std::size_t dim) {
    EncoderParams p;
    p.embedding = store.add("encoder.embedding", vocab_size, dim);
    p.query = store.add("encoder.query", dim, dim);
    p.key = store.add("encoder.key", dim, dim);
    p.value = store.add("encoder.value", dim, dim);
    return p;
}

void EncoderParams::initialize(ParameterStore& store, std::mt19937_64& rng) const {
    std::normal_distribution<double> nd(0.0, 1.0 / std::sqrt(static_cast<double>(store.at(embedding).cols)));
    for (double& v : store.at(embedding).value) v = nd(rng);
    for (std::size_t idx : {query, key, value}) init_uniform(store.at(idx), store.at(idx).cols, rng);
}

// ---------------------------------------------------------------------------

void write_precomputed(std::ostream& os, std::span<const RealVector> vectors) {
    const std::size_t d = vectors.empty() ? 0 : vectors.front().size();
    os << vectors.size() << ' ' << d << '\n';
    char buf[64];
    for (const auto& v : vectors) {
        if (v.size() != d) fail(Error::Kind::ShapeMismatch, "precomputed vectors must share one dimension");
        for (std::size_t i = 0; i < v.size(); ++i) {
            auto res = std::to_chars(buf, buf + sizeof buf, v[i]);
            if (i) os << ' ';
            os.write(buf, res.ptr - buf);
        }
        os << '\n';
    }
}

std::vector<RealVector> read_precomputed(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) fail(Error::Kind::Parse, "precomputed vectors: missing header line");
    std::istringstream hs(line);
    long long n = -1, d = -1;
    if (!(hs >> n >> d) || n < 0 || d < 0) fail(Error::Kind::Parse, "precomputed vectors: header must be 'n d'");
    std::vector<RealVector> out;
    out.reserve(static_cast<std::size_t>(n));
    for (long long r = 0; r < n; ++r) {
        if (!std::getline(is, line)) fail(Error::Kind::Parse, "precomputed vectors: fewer rows than the header states");
        RealVector v;
        std::size_t pos = 0;
        while (pos < line.size()) {
            while (pos < line.size() && line[pos] == ' ') ++pos;
            if (pos >= line.size()) break;
            std::size_t end = line.find(' ', pos);
            if (end == std::string::npos) end = line.size();
            v.push_back(parse_double(std::string_view(line).substr(pos, end - pos), static_cast<std::size_t>(r) + 2));
            pos = end;
        }
        if (v.size() != static_cast<std::size_t>(d)) {
            std::ostringstream os;
            os << "precomputed vectors: line " << r + 2 << " has " << v.size() << " values, expected " << d;
            fail(Error::Kind::Parse, os.str());
        }
        out.push_back(std::move(v));
    }
    return out;
}

void write_precomputed_file(const std::string& path, std::span<const RealVector> vectors) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(Error::Kind::Io, "cannot write " + path);
    write_precomputed(os, vectors);
}

std::vector<RealVector> read_precomputed_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(Error::Kind::Io, "cannot read " + path);
    return read_precomputed(is);
}

PrecomputedStore PrecomputedStore::load_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path index = fs::path(dir) / "index.tsv";
    std::ifstream is(index);
    if (!is) fail(Error::Kind::Io, "cannot read " + index.string());
    PrecomputedStore store;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            fail(Error::Kind::Parse, index.string() + ":" + std::to_string(lineno) + ": expected 'file<TAB>sentence'");
        store.add(tokenize(line.substr(tab + 1)), read_precomputed_file((fs::path(dir) / line.substr(0, tab)).string()));
    }
    return store;
}

void PrecomputedStore::add(const std::vector<std::string>& tokens, std::vector<RealVector> vectors) {
    if (!vectors.empty()) {
        if (dim_ == 0) dim_ = vectors.front().size();
        for (const auto& v : vectors)
            if (v.size() != dim_) fail(Error::Kind::ShapeMismatch, "precomputed store: inconsistent vector dimension");
    }
    entries_[join(tokens)] = std::move(vectors);
}

const std::vector<RealVector>& PrecomputedStore::find(const Sentence& s) const {
    auto it = entries_.find(s.text());
    if (it == entries_.end()) fail(Error::Kind::NotFound, "no precomputed vectors for sentence: " + s.text());
    return it->second;
}

// ---------------------------------------------------------------------------

std::vector<Var> embed_lookup(Graph& g, const Sentence& s, const Vocabulary& vocab, const ParameterStore& store,
                              const EncoderParams& params) {
    const Var table = g.parameter(store.at(params.embedding));
    std::vector<Var> out;
    out.reserve(s.size());
    for (const auto& tok : s.tokens) out.push_back(g.row(table, vocab.lookup(tok)));
    return out;
}

std::vector<Var> encode_toy(Graph& g, std::span<const Var> embeddings, const ParameterStore& store,
                            const EncoderParams& params) {
    const Var wq = g.parameter(store.at(params.query));
    const Var wk = g.parameter(store.at(params.key));
    const Var wv = g.parameter(store.at(params.value));
    const std::size_t n = embeddings.size();
    const double scale = 1.0 / std::sqrt(static_cast<double>(store.at(params.query).rows));

    std::vector<Var> q(n), k(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
        q[i] = g.matvec(wq, embeddings[i]);
        k[i] = g.matvec(wk, embeddings[i]);
        v[i] = g.matvec(wv, embeddings[i]);
    }
    std::vector<Var> out(n), logits(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) logits[j] = g.dot(q[i], k[j]);
        const Var attn = g.softmax(g.scale_const(g.stack(logits), scale));
        out[i] = g.add(embeddings[i], g.weighted_sum(attn, v));
    }
    return out;
}

std::vector<Var> encode_precomputed(Graph& g, const Sentence& s, const PrecomputedStore& store) {
    const auto& vecs = store.find(s);
    if (vecs.size() != s.size()) {
        std::ostringstream os;
        os << "precomputed vectors hold " << vecs.size() << " tokens but the sentence has " << s.size();
        fail(Error::Kind::ShapeMismatch, os.str());
    }
    std::vector<Var> out;
    for (const auto& v : vecs) out.push_back(g.constant(v));
    return out;
}

// ---------------------------------------------------------------------------

WindowRange local_window(std::size_t n, std::size_t h, std::size_t window) {
    if (n == 0 || h >= n) fail(Error::Kind::InvalidArgument, "local_window: target index out of range");
    if (window % 2 != 0) fail(Error::Kind::InvalidArgument, "local_window: window size must be even");
    const std::size_t half = window / 2;
    WindowRange r;
    r.first = h > half ? h - half : 0;
    r.last = std::min(h + half, n - 1);
    return r;
}

LocalContext local_window(const ContextRepr& ctx, std::size_t h, std::size_t window) {
    LocalContext lc;
    lc.range = local_window(ctx.size(), h, window);
    lc.vectors.assign(ctx.begin() + static_cast<std::ptrdiff_t>(lc.range.first),
                      ctx.begin() + static_cast<std::ptrdiff_t>(lc.range.last + 1));
    return lc;
}

}  // namespace capsdec
