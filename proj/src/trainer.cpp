#include "capsdec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "util.hpp"

namespace capsdec {

int match_state(const std::string& sense_a, const std::string& sense_b) { return sense_a == sense_b ? 1 : 0; }

double matching_loss(double probability, int label) {
    if (!(probability > 0.0 && probability < 1.0))
        fail(Error::Kind::InvalidArgument, "matching_loss: probability must lie strictly inside (0, 1)");
    if (label != 0 && label != 1) fail(Error::Kind::InvalidArgument, "matching_loss: label must be 0 or 1");
    return -(label * std::log(probability) + (1 - label) * std::log(1.0 - probability));
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
    if (epochs == 0) fail(Error::Kind::InvalidArgument, "epochs must be positive");
    if (batch_size == 0) fail(Error::Kind::InvalidArgument, "batch_size must be positive");
    if (neg_ratio < 1) fail(Error::Kind::InvalidArgument, "neg_ratio must be >= 1");
    if (sentence_pair_ratio < 0.0) fail(Error::Kind::InvalidArgument, "sentence_pair_ratio must be >= 0");
    if (!(adam.lr >= 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
        !(adam.eps > 0.0))
        fail(Error::Kind::InvalidArgument, "optimizer settings out of range");
}

bool TrainConfig::set(const std::string& key, const std::string& value) {
    using namespace detail;
    if (key == "epochs") epochs = parse_u64(key, value);
    else if (key == "batch_size") batch_size = parse_u64(key, value);
    else if (key == "lr") adam.lr = parse_real(key, value);
    else if (key == "beta1") adam.beta1 = parse_real(key, value);
    else if (key == "beta2") adam.beta2 = parse_real(key, value);
    else if (key == "adam_eps") adam.eps = parse_real(key, value);
    else if (key == "neg_ratio") neg_ratio = parse_u64(key, value);
    else if (key == "sentence_pair_ratio") sentence_pair_ratio = parse_real(key, value);
    else if (key == "keep_best") keep_best = parse_bool(key, value);
    else if (key == "patience") patience = parse_u64(key, value);
    else return false;
    return true;
}

std::vector<std::pair<std::string, std::string>> TrainConfig::to_pairs() const {
    using detail::format_real;
    return {
        {"epochs", std::to_string(epochs)},
        {"batch_size", std::to_string(batch_size)},
        {"lr", format_real(adam.lr)},
        {"beta1", format_real(adam.beta1)},
        {"beta2", format_real(adam.beta2)},
        {"adam_eps", format_real(adam.eps)},
        {"neg_ratio", std::to_string(neg_ratio)},
        {"sentence_pair_ratio", format_real(sentence_pair_ratio)},
        {"keep_best", keep_best ? "true" : "false"},
        {"patience", std::to_string(patience)},
    };
}

std::string format_metrics_line(const EpochMetrics& m) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu\t%.6f\t%.6f", m.epoch, m.train_loss, m.dev_accuracy);
    return buf;
}

// ---------------------------------------------------------------------------

Var pair_loss(Graph& g, const Model& model, const MatchingPair& pair) {
    if (pair.gold != 0 && pair.gold != 1) fail(Error::Kind::InvalidArgument, "pair label must be 0 or 1");
    const Var a = model.forward(g, pair.left).q;
    const Var b = model.forward(g, pair.right).q;
    const Var logp = g.log_softmax(model.match_logits(g, a, b));
    return g.scale_const(g.element(logp, static_cast<std::size_t>(pair.gold)), -1.0);
}

namespace {

std::vector<std::size_t> candidate_labels(const Model& model, const std::string& lemma, const SenseInventory& inv) {
    std::vector<std::size_t> ids;
    for (const auto& e : inv.at(lemma)) ids.push_back(model.sense_label_index(lemma, e.id));
    return ids;
}

}  // namespace

Var classification_loss(Graph& g, const Model& model, const WSDInstance& inst, const SenseInventory& inv) {
    const auto& senses = inv.at(inst.lemma);
    const auto gold = std::find_if(senses.begin(), senses.end(), [&](const SenseEntry& e) { return e.id == inst.sense; });
    if (gold == senses.end()) fail(Error::Kind::NotFound, "gold sense '" + inst.sense + "' missing from the inventory");
    const auto ids = candidate_labels(model, inst.lemma, inv);
    const Var q = model.forward(g, inst.sentence).q;
    const Var logp = g.log_softmax(model.sense_logits(g, q, ids));
    return g.scale_const(g.element(logp, static_cast<std::size_t>(gold - senses.begin())), -1.0);
}

std::vector<std::string> sense_labels_for(const SenseInventory& inv) {
    std::vector<std::string> labels;
    for (const auto& lemma : inv.lemmas())
        for (const auto& e : inv.at(lemma)) labels.push_back(Model::sense_label(lemma, e.id));
    return labels;
}

namespace {

std::string parameter_norms(const ParameterStore& store) {
    std::map<std::string, double> groups;
    for (const auto& p : store) {
        const auto first = p.name.find('.');
        const auto second = p.name.find('.', first + 1);
        const std::string group = p.name.substr(0, second);
        double s = 0.0;
        for (double v : p.value) s += v * v;
        groups[group] += s;
    }
    std::ostringstream os;
    bool firstg = true;
    for (const auto& [name, sq] : groups) {
        os << (firstg ? "" : ", ") << name << "=" << std::sqrt(sq);
        firstg = false;
    }
    return os.str();
}

}  // namespace

TrainResult train(Model& model, const TrainingData& data, const TrainConfig& cfg, const DevMetric& dev,
                  const SenseInventory* inventory) {
    cfg.validate();
    const bool classify = model.config().ablation.matching;
    if (classify && !inventory) fail(Error::Kind::InvalidArgument, "classification-head training needs a sense inventory");
    const std::size_t n = classify ? data.labeled.size() : data.pairs.size();
    if (n == 0) fail(Error::Kind::InvalidArgument, "training set is empty");

    std::mt19937_64 rng(cfg.seed);
    Adam opt(cfg.adam);
    ParameterStore& params = model.params();
    params.zero_grad();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    result.best_dev = -std::numeric_limits<double>::infinity();
    auto best = params.snapshot();

    std::size_t batch_id = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_id) {
            const std::size_t end = std::min(n, start + cfg.batch_size);
            auto abort = [&](const std::string& detail) {
                std::ostringstream os;
                os << "non-finite loss in batch " << batch_id << " (epoch " << epoch << ")";
                if (!detail.empty()) os << ": " << detail;
                os << "; parameter norms: " << parameter_norms(params);
                fail(Error::Kind::NonFinite, os.str());
            };
            for (std::size_t k = start; k < end; ++k) {
                Graph g;
                Var loss;
                try {
                    loss = classify ? classification_loss(g, model, data.labeled[order[k]], *inventory)
                                    : pair_loss(g, model, data.pairs[order[k]]);
                } catch (const Error& e) {
                    if (e.kind() != Error::Kind::NonFinite) throw;
                    abort(e.what());
                }
                const double value = g.scalar(loss);
                if (!std::isfinite(value)) abort("");
                total += value;
                g.backward(loss);
            }
            params.scale_grad(1.0 / static_cast<double>(end - start));
            opt.step(params);
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = total / static_cast<double>(n);
        m.dev_accuracy = dev ? dev(model) : std::numeric_limits<double>::quiet_NaN();
        result.log.push_back(m);
        if (dev && m.dev_accuracy > result.best_dev) {
            result.best_dev = m.dev_accuracy;
            result.best_epoch = epoch;
            best = params.snapshot();
        }
        if (dev && cfg.patience > 0 && epoch - result.best_epoch >= cfg.patience) break;
    }
    if (cfg.keep_best && dev && result.best_epoch > 0) params.restore(best);
    return result;
}

// ---------------------------------------------------------------------------

std::size_t argmax_sense(std::span<const SenseEntry> candidates, std::span<const double> scores) {
    if (candidates.empty() || candidates.size() != scores.size())
        fail(Error::Kind::InvalidArgument, "argmax_sense: candidates and scores must be non-empty and aligned");
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        if (scores[i] > scores[best] || (scores[i] == scores[best] && candidates[i].id < candidates[best].id)) best = i;
    }
    return best;
}

const std::vector<RealVector>& SensePredictor::gloss_vectors(const std::string& lemma) {
    auto it = gloss_cache_.find(lemma);
    if (it != gloss_cache_.end()) return it->second;
    std::vector<RealVector> qs;
    for (const auto& e : inv_.at(lemma)) qs.push_back(model_.sense_representation(gloss_sentence(lemma, e)).q);
    return gloss_cache_.emplace(lemma, std::move(qs)).first->second;
}

std::vector<double> SensePredictor::candidate_scores(const Sentence& s, const std::string& lemma) {
    const auto& senses = inv_.at(lemma);
    if (senses.empty()) fail(Error::Kind::NotFound, "lemma '" + lemma + "' has no candidate senses");
    if (model_.config().ablation.matching) {
        Graph g(false);
        const Var q = model_.forward(g, s).q;
        const auto ids = candidate_labels(model_, lemma, inv_);
        return softmax(g.value(model_.sense_logits(g, q, ids)));
    }
    const RealVector q = model_.sense_representation(s).q;
    const auto& glosses = gloss_vectors(lemma);
    std::vector<double> scores;
    for (const auto& gq : glosses) scores.push_back(model_.match_probability(q, gq));
    return scores;
}

std::string SensePredictor::predict(const Sentence& s, const std::string& lemma) {
    const auto& senses = inv_.at(lemma);
    const auto scores = candidate_scores(s, lemma);
    return senses[argmax_sense(senses, scores)].id;
}

std::string predict_sense(const Model& model, const Sentence& s, const std::string& lemma, const SenseInventory& inv) {
    SensePredictor p(model, inv);
    return p.predict(s, lemma);
}

double wsd_accuracy(const Model& model, std::span<const WSDInstance> instances, const SenseInventory& inv) {
    if (instances.empty()) fail(Error::Kind::InvalidArgument, "evaluation set is empty");
    SensePredictor p(model, inv);
    std::size_t correct = 0;
    for (const auto& inst : instances)
        if (p.predict(inst.sentence, inst.lemma) == inst.sense) ++correct;
    return static_cast<double>(correct) / static_cast<double>(instances.size());
}

double pair_accuracy(const Model& model, std::span<const MatchingPair> pairs) {
    if (pairs.empty()) fail(Error::Kind::InvalidArgument, "evaluation set is empty");
    std::size_t correct = 0;
    for (const auto& pr : pairs) {
        const int predicted = model.match_probability(pr.left, pr.right) > 0.5 ? 1 : 0;
        if (predicted == pr.gold) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

ContextBlindBaseline::ContextBlindBaseline(std::span<const WSDInstance> train, const SenseInventory& inv) : inv_(inv) {
    for (const auto& inst : train) ++counts_[inst.lemma][inst.sense];
}

std::string ContextBlindBaseline::predict(const std::string& lemma) const {
    const auto& senses = inv_.at(lemma);
    std::vector<double> scores;
    auto it = counts_.find(lemma);
    for (const auto& e : senses) {
        double c = 0.0;
        if (it != counts_.end()) {
            auto jt = it->second.find(e.id);
            if (jt != it->second.end()) c = static_cast<double>(jt->second);
        }
        scores.push_back(c);
    }
    return senses[argmax_sense(senses, scores)].id;
}

}  // namespace capsdec
