#pragma once

#include <cstddef>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "capsdec/numerics.hpp"

namespace capsdec {

/// Lowercased whitespace tokenisation used by the toy encoder path.
std::vector<std::string> tokenize(std::string_view text);

struct Sentence {
    std::vector<std::string> tokens;
    std::size_t target = 0;  // h

    Sentence() = default;
    Sentence(std::vector<std::string> toks, std::size_t h) : tokens(std::move(toks)), target(h) {}

    static Sentence parse(std::string_view text, std::size_t target);

    std::size_t size() const { return tokens.size(); }
    const std::string& target_token() const { return tokens.at(target); }
    std::string text() const;
    void validate() const;
};

class Vocabulary {
public:
    static constexpr std::size_t kUnknown = 0;
    static constexpr const char* kUnknownToken = "<unk>";

    Vocabulary();

    std::size_t add(const std::string& token);
    std::size_t lookup(const std::string& token) const;
    bool contains(const std::string& token) const { return ids_.count(token) != 0; }
    const std::string& token(std::size_t id) const { return tokens_.at(id); }
    std::size_t size() const { return tokens_.size(); }
    const std::vector<std::string>& tokens() const { return tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, std::size_t> ids_;
};

using ContextRepr = std::vector<RealVector>;  // G_c, one vector per token

enum class EncoderKind { Toy, Precomputed };

/// Embedding table plus one single-head self-attention layer with a residual
/// connection. The embedding table also serves the static target embedding.
struct EncoderParams {
    std::size_t embedding = 0;  // vocab x d
    std::size_t query = 0;      // d x d
    std::size_t key = 0;
    std::size_t value = 0;

    static EncoderParams create(ParameterStore& store, std::size_t vocab_size, std::size_t dim);
    void initialize(ParameterStore& store, std::mt19937_64& rng) const;
};

// --- precomputed context vectors -----------------------------------------------

/// Text format: a header line "n d", then n lines of d space-separated numbers
/// written in shortest round-trip form.
void write_precomputed(std::ostream& os, std::span<const RealVector> vectors);
std::vector<RealVector> read_precomputed(std::istream& is);
void write_precomputed_file(const std::string& path, std::span<const RealVector> vectors);
std::vector<RealVector> read_precomputed_file(const std::string& path);

/// Sentence-keyed collection of precomputed context vectors. On disk it is a
/// directory holding `index.tsv` (file name, TAB, space-joined tokens) and one
/// precomputed file per sentence.
class PrecomputedStore {
public:
    static PrecomputedStore load_dir(const std::string& dir);

    void add(const std::vector<std::string>& tokens, std::vector<RealVector> vectors);
    const std::vector<RealVector>& find(const Sentence& s) const;
    bool empty() const { return entries_.empty(); }
    std::size_t dim() const { return dim_; }

private:
    std::unordered_map<std::string, std::vector<RealVector>> entries_;
    std::size_t dim_ = 0;
};

// --- graph-level encoding ------------------------------------------------------

std::vector<Var> embed_lookup(Graph& g, const Sentence& s, const Vocabulary& vocab, const ParameterStore& store,
                              const EncoderParams& params);

std::vector<Var> encode_toy(Graph& g, std::span<const Var> embeddings, const ParameterStore& store,
                            const EncoderParams& params);

/// Rejects a sentence whose stored vector count differs from its token count.
std::vector<Var> encode_precomputed(Graph& g, const Sentence& s, const PrecomputedStore& store);

// --- local window --------------------------------------------------------------

struct WindowRange {
    std::size_t first = 0;  // e
    std::size_t last = 0;   // z, inclusive

    std::size_t size() const { return last - first + 1; }
    bool contains(std::size_t j) const { return j >= first && j <= last; }
};

/// e = max(h - m/2, 0), z = min(h + m/2, n - 1). `window` must be even.
WindowRange local_window(std::size_t n, std::size_t h, std::size_t window);

struct LocalContext {
    WindowRange range;
    std::vector<RealVector> vectors;
};

LocalContext local_window(const ContextRepr& ctx, std::size_t h, std::size_t window);

}  // namespace capsdec
