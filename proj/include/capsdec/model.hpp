#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "capsdec/capsule.hpp"
#include "capsdec/composer.hpp"
#include "capsdec/context.hpp"
#include "capsdec/numerics.hpp"

namespace capsdec {

enum class ClassifierFeatures {
    Concat,         // [q1; q2]
    ConcatProduct,  // [q1; q2; q1 * q2]
};

struct Ablation {
    bool capsule = false;   // feed the expanded embeddings straight to composition
    bool global = false;    // drop the global context term
    bool local = false;     // drop the local context term
    bool matching = false;  // train a per-sense classification head instead of matching

    bool any() const { return capsule || global || local || matching; }
};

struct ModelConfig {
    std::size_t capsules = 10;
    std::size_t layers = 3;
    std::size_t routing_iters = 3;
    std::size_t window = 10;
    std::size_t embed_dim = 64;
    std::size_t capsule_dim = 0;  // 0 means "same as embed_dim"
    EncoderKind encoder = EncoderKind::Toy;
    bool scaled_attention = false;
    bool contextual_target = false;
    ClassifierFeatures features = ClassifierFeatures::ConcatProduct;
    Ablation ablation;
    std::uint64_t seed = 1;

    std::size_t resolved_capsule_dim() const { return capsule_dim == 0 ? embed_dim : capsule_dim; }
    DecomposerConfig decomposer() const;
    void validate() const;

    /// Returns false for keys this struct does not own; throws on bad values.
    bool set(const std::string& key, const std::string& value);
    std::vector<std::pair<std::string, std::string>> to_pairs() const;
};

std::string to_string(EncoderKind k);
std::string to_string(ClassifierFeatures f);

class Model {
public:
    /// Builds and initialises every parameter from cfg.seed. `sense_labels`
    /// is only used by the classification-head ablation.
    Model(ModelConfig cfg, Vocabulary vocab, std::vector<std::string> sense_labels = {});

    const ModelConfig& config() const { return cfg_; }
    const Vocabulary& vocab() const { return vocab_; }
    ParameterStore& params() { return store_; }
    const ParameterStore& params() const { return store_; }
    const DecomposerParams& decomposer_params() const { return decomposer_; }
    const EncoderParams& encoder_params() const { return encoder_; }
    std::size_t feature_dim() const;

    void set_precomputed(std::shared_ptr<const PrecomputedStore> store);

    struct Forward {
        Var target_embedding;
        std::vector<Var> capsules;
        std::vector<Var> context;
        std::vector<Var> local;
        std::vector<Var> global_weights;
        std::vector<Var> local_weights;
        std::vector<Var> context_specific;
        WindowRange window;
        Var weights;
        Var q;
    };

    Forward forward(Graph& g, const Sentence& s, std::vector<RoutingTrace>* traces = nullptr) const;
    SenseRepresentation sense_representation(const Sentence& s) const;

    /// Two logits; index 1 is the "match" class.
    Var match_logits(Graph& g, Var q_left, Var q_right) const;
    double match_probability(std::span<const double> q_left, std::span<const double> q_right) const;
    double match_probability(const Sentence& left, const Sentence& right) const;

    // classification-head ablation
    const std::vector<std::string>& sense_labels() const { return sense_labels_; }
    std::size_t sense_label_index(const std::string& lemma, const std::string& sense) const;
    static std::string sense_label(const std::string& lemma, const std::string& sense) { return lemma + "\t" + sense; }
    Var sense_logits(Graph& g, Var q, std::span<const std::size_t> label_ids) const;

    void save(const std::string& path) const;
    static Model load(const std::string& path);

private:
    void build();

    ModelConfig cfg_;
    Vocabulary vocab_;
    std::vector<std::string> sense_labels_;
    ParameterStore store_;
    EncoderParams encoder_;
    DecomposerParams decomposer_;
    std::size_t clf_weight_ = 0;
    std::size_t clf_bias_ = 0;
    std::size_t head_weight_ = 0;
    std::size_t head_bias_ = 0;
    std::shared_ptr<const PrecomputedStore> precomputed_;
};

}  // namespace capsdec
