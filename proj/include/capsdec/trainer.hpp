#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "capsdec/data.hpp"
#include "capsdec/model.hpp"

namespace capsdec {

/// 1 iff the two occurrences carry the same sense.
int match_state(const std::string& sense_a, const std::string& sense_b);

/// -[y log p + (1 - y) log(1 - p)]; p must lie strictly inside (0, 1).
double matching_loss(double probability, int label);

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    AdamSettings adam;
    std::size_t neg_ratio = 1;
    double sentence_pair_ratio = 1.0;
    std::uint64_t seed = 1;
    bool keep_best = true;
    std::size_t patience = 0;  // stop after this many epochs without dev improvement; 0 disables

    void validate() const;
    bool set(const std::string& key, const std::string& value);
    std::vector<std::pair<std::string, std::string>> to_pairs() const;
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double dev_accuracy = 0.0;
};

/// "epoch<TAB>train_loss<TAB>dev_acc" with fixed formatting.
std::string format_metrics_line(const EpochMetrics& m);

struct TrainResult {
    std::vector<EpochMetrics> log;
    std::size_t best_epoch = 0;
    double best_dev = 0.0;
};

/// Matching mode consumes `pairs`; the classification-head ablation consumes `labeled`.
struct TrainingData {
    std::vector<MatchingPair> pairs;
    std::vector<WSDInstance> labeled;
};

using DevMetric = std::function<double(const Model&)>;

/// Graph for the matching loss of one pair (both branches share parameters).
Var pair_loss(Graph& g, const Model& model, const MatchingPair& pair);

/// Graph for the classification-head loss of one labelled occurrence.
Var classification_loss(Graph& g, const Model& model, const WSDInstance& inst, const SenseInventory& inv);

/// Mini-batch Adam over the mean loss. When keep_best is set the parameters
/// of the best dev epoch are restored at the end.
TrainResult train(Model& model, const TrainingData& data, const TrainConfig& cfg, const DevMetric& dev = {},
                  const SenseInventory* inventory = nullptr);

/// Label set for the classification-head ablation, in inventory order.
std::vector<std::string> sense_labels_for(const SenseInventory& inv);

/// Index of the highest score; ties go to the lexicographically lowest id.
std::size_t argmax_sense(std::span<const SenseEntry> candidates, std::span<const double> scores);

/// Scores each candidate gloss against a sentence and returns the argmax.
/// Gloss sense vectors are cached per lemma; the model must stay unchanged
/// for the predictor's lifetime.
class SensePredictor {
public:
    SensePredictor(const Model& model, const SenseInventory& inventory) : model_(model), inv_(inventory) {}

    /// Match probabilities (or classification-head probabilities) per candidate.
    std::vector<double> candidate_scores(const Sentence& s, const std::string& lemma);
    std::string predict(const Sentence& s, const std::string& lemma);

private:
    const std::vector<RealVector>& gloss_vectors(const std::string& lemma);

    const Model& model_;
    const SenseInventory& inv_;
    std::map<std::string, std::vector<RealVector>> gloss_cache_;
};

std::string predict_sense(const Model& model, const Sentence& s, const std::string& lemma, const SenseInventory& inv);

/// Sense-prediction accuracy over WSD instances.
double wsd_accuracy(const Model& model, std::span<const WSDInstance> instances, const SenseInventory& inv);
/// Match accuracy (probability > 0.5 means "same sense") over labelled pairs.
double pair_accuracy(const Model& model, std::span<const MatchingPair> pairs);

/// Predicts each lemma's most frequent training sense, ignoring context.
class ContextBlindBaseline {
public:
    ContextBlindBaseline(std::span<const WSDInstance> train, const SenseInventory& inv);
    std::string predict(const std::string& lemma) const;

private:
    const SenseInventory& inv_;
    std::map<std::string, std::map<std::string, std::size_t>> counts_;
};

}  // namespace capsdec
