#include "capsdec/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "util.hpp"

namespace capsdec {

namespace {

constexpr char kMagic[8] = {'C', 'A', 'P', 'S', 'D', 'E', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void write_le(std::ostream& os, T value) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const std::string& path) {
    unsigned char buf[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) fail(Error::Kind::Parse, path + ": truncated checkpoint");
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
}

}  // namespace

std::string to_string(EncoderKind k) { return k == EncoderKind::Toy ? "toy" : "precomputed"; }

std::string to_string(ClassifierFeatures f) { return f == ClassifierFeatures::Concat ? "concat" : "concat_product"; }

DecomposerConfig ModelConfig::decomposer() const {
    DecomposerConfig d;
    d.capsules = capsules;
    d.layers = layers;
    d.routing_iters = routing_iters;
    d.embed_dim = embed_dim;
    d.capsule_dim = resolved_capsule_dim();
    return d;
}

void ModelConfig::validate() const {
    decomposer().validate();
    if (window % 2 != 0) fail(Error::Kind::InvalidArgument, "window must be an even number");
    if (encoder == EncoderKind::Toy && resolved_capsule_dim() != embed_dim)
        fail(Error::Kind::InvalidArgument,
             "the toy encoder emits embed_dim vectors, so capsule_dim must equal embed_dim");
    if (contextual_target && resolved_capsule_dim() != embed_dim)
        fail(Error::Kind::InvalidArgument, "contextual_target requires capsule_dim == embed_dim");
}

bool ModelConfig::set(const std::string& key, const std::string& value) {
    using namespace detail;
    if (key == "capsules") capsules = parse_u64(key, value);
    else if (key == "layers") layers = parse_u64(key, value);
    else if (key == "routing_iters") routing_iters = parse_u64(key, value);
    else if (key == "window") window = parse_u64(key, value);
    else if (key == "embed_dim") embed_dim = parse_u64(key, value);
    else if (key == "capsule_dim") capsule_dim = parse_u64(key, value);
    else if (key == "encoder") {
        if (value == "toy") encoder = EncoderKind::Toy;
        else if (value == "precomputed") encoder = EncoderKind::Precomputed;
        else fail(Error::Kind::InvalidArgument, "encoder must be 'toy' or 'precomputed', got '" + value + "'");
    } else if (key == "scaled_attention") scaled_attention = parse_bool(key, value);
    else if (key == "contextual_target") contextual_target = parse_bool(key, value);
    else if (key == "classifier_features") {
        if (value == "concat") features = ClassifierFeatures::Concat;
        else if (value == "concat_product") features = ClassifierFeatures::ConcatProduct;
        else fail(Error::Kind::InvalidArgument, "classifier_features must be 'concat' or 'concat_product'");
    } else if (key == "ablate_capsule") ablation.capsule = parse_bool(key, value);
    else if (key == "ablate_global") ablation.global = parse_bool(key, value);
    else if (key == "ablate_local") ablation.local = parse_bool(key, value);
    else if (key == "ablate_matching") ablation.matching = parse_bool(key, value);
    else if (key == "seed") seed = parse_u64(key, value);
    else return false;
    return true;
}

std::vector<std::pair<std::string, std::string>> ModelConfig::to_pairs() const {
    auto b = [](bool v) { return std::string(v ? "true" : "false"); };
    return {
        {"capsules", std::to_string(capsules)},
        {"layers", std::to_string(layers)},
        {"routing_iters", std::to_string(routing_iters)},
        {"window", std::to_string(window)},
        {"embed_dim", std::to_string(embed_dim)},
        {"capsule_dim", std::to_string(capsule_dim)},
        {"encoder", to_string(encoder)},
        {"scaled_attention", b(scaled_attention)},
        {"contextual_target", b(contextual_target)},
        {"classifier_features", to_string(features)},
        {"ablate_capsule", b(ablation.capsule)},
        {"ablate_global", b(ablation.global)},
        {"ablate_local", b(ablation.local)},
        {"ablate_matching", b(ablation.matching)},
        {"seed", std::to_string(seed)},
    };
}

// ---------------------------------------------------------------------------

Model::Model(ModelConfig cfg, Vocabulary vocab, std::vector<std::string> sense_labels)
    : cfg_(std::move(cfg)), vocab_(std::move(vocab)), sense_labels_(std::move(sense_labels)) {
    cfg_.validate();
    if (cfg_.ablation.matching && sense_labels_.empty())
        fail(Error::Kind::InvalidArgument, "the classification-head ablation needs a non-empty sense label set");
    build();
    std::mt19937_64 rng(cfg_.seed);
    encoder_.initialize(store_, rng);
    decomposer_.initialize(store_, rng);
    init_uniform(store_.at(clf_weight_), store_.at(clf_weight_).cols, rng);
    if (cfg_.ablation.matching) init_uniform(store_.at(head_weight_), store_.at(head_weight_).cols, rng);
}

void Model::build() {
    const std::size_t dc = cfg_.resolved_capsule_dim();
    encoder_ = EncoderParams::create(store_, vocab_.size(), cfg_.embed_dim);
    decomposer_ = DecomposerParams::create(store_, cfg_.decomposer());
    clf_weight_ = store_.add("classifier.weight", 2, feature_dim());
    clf_bias_ = store_.add("classifier.bias", 2, 1);
    if (cfg_.ablation.matching) {
        head_weight_ = store_.add("sense_head.weight", sense_labels_.size(), dc);
        head_bias_ = store_.add("sense_head.bias", sense_labels_.size(), 1);
    }
    // the encoder's attention projections are unused when context vectors are precomputed
    if (cfg_.encoder == EncoderKind::Precomputed)
        for (std::size_t idx : {encoder_.query, encoder_.key, encoder_.value}) store_.at(idx).frozen = true;
}

std::size_t Model::feature_dim() const {
    const std::size_t dc = cfg_.resolved_capsule_dim();
    return cfg_.features == ClassifierFeatures::Concat ? 2 * dc : 3 * dc;
}

void Model::set_precomputed(std::shared_ptr<const PrecomputedStore> store) {
    if (store && !store->empty() && store->dim() != cfg_.resolved_capsule_dim()) {
        std::ostringstream os;
        os << "precomputed vectors have dimension " << store->dim() << " but capsule_dim is "
           << cfg_.resolved_capsule_dim();
        fail(Error::Kind::ShapeMismatch, os.str());
    }
    precomputed_ = std::move(store);
}

Model::Forward Model::forward(Graph& g, const Sentence& s, std::vector<RoutingTrace>* traces) const {
    s.validate();
    Forward f;
    std::vector<Var> embeddings;
    if (cfg_.encoder == EncoderKind::Toy) {
        embeddings = embed_lookup(g, s, vocab_, store_, encoder_);
        f.context = encode_toy(g, embeddings, store_, encoder_);
    } else {
        if (!precomputed_) fail(Error::Kind::InvalidArgument, "model uses precomputed context vectors but none were supplied");
        f.context = encode_precomputed(g, s, *precomputed_);
    }

    if (cfg_.contextual_target) {
        f.target_embedding = f.context[s.target];
    } else if (!embeddings.empty()) {
        f.target_embedding = embeddings[s.target];
    } else {
        f.target_embedding = g.row(g.parameter(store_.at(encoder_.embedding)), vocab_.lookup(s.target_token()));
    }

    if (cfg_.ablation.capsule)
        f.capsules = expand(g, f.target_embedding, store_, decomposer_);
    else
        f.capsules = decompose(g, f.target_embedding, store_, decomposer_, cfg_.decomposer(), traces);

    f.window = local_window(s.size(), s.target, cfg_.window);
    f.local.assign(f.context.begin() + static_cast<std::ptrdiff_t>(f.window.first),
                   f.context.begin() + static_cast<std::ptrdiff_t>(f.window.last + 1));

    CompositionFlags flags;
    flags.use_global = !cfg_.ablation.global;
    flags.use_local = !cfg_.ablation.local;
    flags.scaled_logits = cfg_.scaled_attention;
    for (Var cap : f.capsules) {
        if (flags.use_global) f.global_weights.push_back(context_attention(g, cap, f.context, flags.scaled_logits));
        if (flags.use_local) f.local_weights.push_back(context_attention(g, cap, f.local, flags.scaled_logits));
    }
    f.context_specific =
        compose_context_specific(g, f.capsules, f.context, f.local, f.global_weights, f.local_weights, flags);
    const Composition c = l2norm_composition(g, f.context_specific);
    f.weights = c.weights;
    f.q = c.q;
    return f;
}

SenseRepresentation Model::sense_representation(const Sentence& s) const {
    Graph g(false);
    const Forward f = forward(g, s);
    auto vec = [&g](Var v) { return RealVector(g.value(v).begin(), g.value(v).end()); };
    SenseRepresentation rep;
    rep.q = vec(f.q);
    rep.weights = vec(f.weights);
    for (Var v : f.context_specific) rep.context_specific.push_back(vec(v));
    for (Var v : f.capsules) rep.capsules.push_back(vec(v));
    for (Var v : f.global_weights) rep.attention.global.push_back(vec(v));
    for (Var v : f.local_weights) rep.attention.local.push_back(vec(v));
    rep.window = f.window;
    return rep;
}

Var Model::match_logits(Graph& g, Var q_left, Var q_right) const {
    const std::size_t dc = cfg_.resolved_capsule_dim();
    if (g.dim(q_left) != dc || g.dim(q_right) != dc) {
        std::ostringstream os;
        os << "match_logits: sense vectors must have dimension " << dc;
        fail(Error::Kind::ShapeMismatch, os.str());
    }
    std::vector<Var> parts{q_left, q_right};
    if (cfg_.features == ClassifierFeatures::ConcatProduct) parts.push_back(g.mul(q_left, q_right));
    const Var features = g.concat(parts);
    return g.add(g.matvec(g.parameter(store_.at(clf_weight_)), features), g.parameter(store_.at(clf_bias_)));
}

double Model::match_probability(std::span<const double> q_left, std::span<const double> q_right) const {
    Graph g(false);
    const Var logits = match_logits(g, g.constant(RealVector(q_left.begin(), q_left.end())),
                                    g.constant(RealVector(q_right.begin(), q_right.end())));
    return softmax(g.value(logits))[1];
}

double Model::match_probability(const Sentence& left, const Sentence& right) const {
    Graph g(false);
    const Var a = forward(g, left).q;
    const Var b = forward(g, right).q;
    return softmax(g.value(match_logits(g, a, b)))[1];
}

std::size_t Model::sense_label_index(const std::string& lemma, const std::string& sense) const {
    const std::string label = sense_label(lemma, sense);
    for (std::size_t i = 0; i < sense_labels_.size(); ++i)
        if (sense_labels_[i] == label) return i;
    fail(Error::Kind::NotFound, "sense '" + sense + "' of lemma '" + lemma + "' is not in the classification head");
}

Var Model::sense_logits(Graph& g, Var q, std::span<const std::size_t> label_ids) const {
    if (!cfg_.ablation.matching) fail(Error::Kind::InvalidArgument, "model has no classification head");
    if (label_ids.empty()) fail(Error::Kind::InvalidArgument, "sense_logits: no candidate labels");
    const Var w = g.parameter(store_.at(head_weight_));
    const Var b = g.parameter(store_.at(head_bias_));
    std::vector<Var> logits;
    for (std::size_t id : label_ids) logits.push_back(g.add(g.dot(g.row(w, id), q), g.element(b, id)));
    return g.stack(logits);
}

// ---------------------------------------------------------------------------
// Checkpoint: magic, u32 version, u64 manifest length, JSON manifest, then the
// parameters in manifest order as little-endian float64.

void Model::save(const std::string& path) const {
    nlohmann::ordered_json manifest;
    manifest["format"] = "capsdec-checkpoint";
    manifest["version"] = kCheckpointVersion;
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [k, v] : cfg_.to_pairs()) cfg[k] = v;
    manifest["config"] = cfg;
    manifest["seed"] = cfg_.seed;
    manifest["vocabulary"] = vocab_.tokens();
    manifest["sense_labels"] = sense_labels_;
    nlohmann::ordered_json params = nlohmann::ordered_json::array();
    for (const auto& p : store_) params.push_back({{"name", p.name}, {"rows", p.rows}, {"cols", p.cols}});
    manifest["parameters"] = params;
    const std::string text = manifest.dump();

    std::ofstream os(path, std::ios::binary);
    if (!os) fail(Error::Kind::Io, "cannot write checkpoint " + path);
    os.write(kMagic, sizeof kMagic);
    write_le<std::uint32_t>(os, kCheckpointVersion);
    write_le<std::uint64_t>(os, text.size());
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& p : store_)
        for (double v : p.value) write_le<double>(os, v);
    if (!os) fail(Error::Kind::Io, "failed while writing checkpoint " + path);
}

Model Model::load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(Error::Kind::Io, "cannot read checkpoint " + path);
    char magic[8];
    if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
        fail(Error::Kind::Parse, path + ": not a capsdec checkpoint");
    const auto version = read_le<std::uint32_t>(is, path);
    if (version != kCheckpointVersion)
        fail(Error::Kind::Parse, path + ": unsupported checkpoint version " + std::to_string(version));
    const auto len = read_le<std::uint64_t>(is, path);
    std::string text(len, '\0');
    if (!is.read(text.data(), static_cast<std::streamsize>(len))) fail(Error::Kind::Parse, path + ": truncated manifest");

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(Error::Kind::Parse, path + ": bad manifest: " + e.what());
    }
    try {
        ModelConfig cfg;
        for (const auto& [k, v] : manifest.at("config").items())
            if (!cfg.set(k, v.get<std::string>())) fail(Error::Kind::Parse, path + ": unknown config key '" + k + "'");
        Vocabulary vocab;
        const auto tokens = manifest.at("vocabulary").get<std::vector<std::string>>();
        if (tokens.empty() || tokens.front() != Vocabulary::kUnknownToken)
            fail(Error::Kind::Parse, path + ": vocabulary must start with the unknown token");
        for (const auto& t : tokens) vocab.add(t);
        if (vocab.size() != tokens.size()) fail(Error::Kind::Parse, path + ": duplicate vocabulary entries");

        Model model(cfg, std::move(vocab), manifest.at("sense_labels").get<std::vector<std::string>>());
        const auto& params = manifest.at("parameters");
        if (params.size() != model.store_.size())
            fail(Error::Kind::ShapeMismatch, path + ": parameter count does not match the configuration");
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& p = model.store_.at(i);
            if (params[i].at("name").get<std::string>() != p.name || params[i].at("rows").get<std::size_t>() != p.rows ||
                params[i].at("cols").get<std::size_t>() != p.cols)
                fail(Error::Kind::ShapeMismatch, path + ": parameter '" + p.name + "' does not match the configuration");
            for (double& v : p.value) v = read_le<double>(is, path);
        }
        if (is.peek() != std::char_traits<char>::eof()) fail(Error::Kind::Parse, path + ": trailing bytes after payload");
        return model;
    } catch (const nlohmann::json::exception& e) {
        fail(Error::Kind::Parse, path + ": bad manifest: " + e.what());
    }
}

}  // namespace capsdec
