#include "capsdec/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "util.hpp"

namespace capsdec {

namespace fs = std::filesystem;
using detail::format_real;
using detail::parse_bool;
using detail::parse_u64;

std::string to_string(Task t) { return t == Task::Wic ? "wic" : "wsd"; }

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"train", "eval", "decompose", "attn-dump", "sense-sim", "synth"};
    return names;
}

// ---------------------------------------------------------------------------
// RunConfig

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "seed") {
        model.seed = parse_u64(key, value);
        train.seed = model.seed;
        return;
    }
    if (model.set(key, value)) {
        explicit_model_keys.insert(key);
        return;
    }
    if (train.set(key, value)) return;

    if (key == "task") {
        if (value == "wic") task = Task::Wic;
        else if (value == "wsd") task = Task::Wsd;
        else fail(Error::Kind::InvalidArgument, "task must be 'wic' or 'wsd', got '" + value + "'");
    } else if (key == "model") model_path = value;
    else if (key == "data") data = value;
    else if (key == "gold") gold = value;
    else if (key == "dev") dev = value;
    else if (key == "dev_gold") dev_gold = value;
    else if (key == "inventory") inventory = value;
    else if (key == "precomputed") precomputed = value;
    else if (key == "out") out = value;
    else if (key == "sentence") sentence = value;
    else if (key == "index") index = parse_u64(key, value);
    else if (key == "samples") samples = parse_u64(key, value);
    else if (key == "repeats") repeats = parse_u64(key, value);
    else if (key == "max_sentences") max_sentences = parse_u64(key, value);
    else if (key == "workers") workers = parse_u64(key, value);
    else if (key == "strict") strict = parse_bool(key, value);
    else if (key == "synth_seed") synth.seed = parse_u64(key, value);
    else if (key == "pseudo_words") synth.pseudo_words = parse_u64(key, value);
    else if (key == "contexts_per_sense") synth.contexts_per_sense = parse_u64(key, value);
    else if (key == "vocab_size") synth.vocab_size = parse_u64(key, value);
    else fail(Error::Kind::InvalidArgument, "unknown config key '" + key + "'");
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(Error::Kind::Io, "cannot read config file " + path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            fail(Error::Kind::Parse, path + ":" + std::to_string(lineno) + ": expected key=value");
        const std::string key = detail::trim(t.substr(0, eq));
        const std::string value = detail::trim(t.substr(eq + 1));
        if (key.empty()) fail(Error::Kind::Parse, path + ":" + std::to_string(lineno) + ": empty key");
        try {
            set(key, value);
        } catch (const Error& e) {
            fail(e.kind(), path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

namespace {

void require(const std::string& value, const std::string& key, const std::string& command) {
    if (value.empty()) fail(Error::Kind::InvalidArgument, command + " needs '" + key + "'");
}

void require_file(const std::string& path, const std::string& what) {
    if (!fs::is_regular_file(path)) fail(Error::Kind::NotFound, what + " not found: " + path);
}

}  // namespace

void RunConfig::validate(const std::string& command) const {
    const auto& names = command_names();
    if (std::find(names.begin(), names.end(), command) == names.end())
        fail(Error::Kind::InvalidArgument, "unknown command '" + command + "'");
    if (workers == 0) fail(Error::Kind::InvalidArgument, "workers must be positive");

    if (command == "synth") {
        require(out, "out", command);
        synth.validate();
        return;
    }
    if (command == "train") {
        model.validate();
        train.validate();
        require(out, "out", command);
        require(data, "data", command);
        require_file(data, "training data");
        if (task == Task::Wsd) {
            require(inventory, "inventory", command);
            require_file(inventory, "sense inventory");
        } else {
            require(gold, "gold", command);
            require_file(gold, "gold labels");
            if (model.ablation.matching)
                fail(Error::Kind::InvalidArgument, "ablate_matching trains a per-sense head and needs task=wsd");
            if (!dev.empty()) require(dev_gold, "dev_gold", command);
        }
        if (!dev.empty()) require_file(dev, "dev data");
        if (model.encoder == EncoderKind::Precomputed) require(precomputed, "precomputed", command);
        return;
    }

    require(model_path, "model", command);
    require_file(model_path, "checkpoint");
    if (command == "eval") {
        require(data, "data", command);
        require_file(data, "evaluation data");
        if (task == Task::Wsd) {
            require(inventory, "inventory", command);
            require_file(inventory, "sense inventory");
        } else {
            require(gold, "gold", command);
            require_file(gold, "gold labels");
        }
    } else if (command == "decompose" || command == "attn-dump") {
        require(sentence, "sentence", command);
        if (!index) fail(Error::Kind::InvalidArgument, command + " needs 'index'");
    } else if (command == "sense-sim") {
        require(data, "data", command);
        require_file(data, "sense-sim data");
        if (samples == 0 || repeats == 0 || max_sentences < 2)
            fail(Error::Kind::InvalidArgument, "sense-sim needs samples >= 1, repeats >= 1 and max_sentences >= 2");
    }
}

std::vector<std::pair<std::string, std::string>> RunConfig::to_pairs() const {
    auto out_pairs = model.to_pairs();
    for (auto& kv : train.to_pairs()) out_pairs.push_back(std::move(kv));
    out_pairs.emplace_back("task", to_string(task));
    return out_pairs;
}

// ---------------------------------------------------------------------------
// helpers

namespace {

struct Report {
    std::ostringstream os;
    template <typename T>
    Report& operator<<(const T& v) {
        os << v;
        return *this;
    }
};

fs::path out_file(const RunConfig& cfg, const std::string& name) {
    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) fail(Error::Kind::Io, "cannot create output directory " + cfg.out + ": " + ec.message());
    return fs::path(cfg.out) / name;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream os(p);
    if (!os) fail(Error::Kind::Io, "cannot write " + p.string());
    return os;
}

void add_sentence(Vocabulary& v, const Sentence& s) {
    for (const auto& t : s.tokens) v.add(t);
}

std::shared_ptr<const PrecomputedStore> load_precomputed(const RunConfig& cfg) {
    if (cfg.precomputed.empty())
        fail(Error::Kind::InvalidArgument, "the precomputed encoder needs 'precomputed' (a vector directory)");
    return std::make_shared<const PrecomputedStore>(PrecomputedStore::load_dir(cfg.precomputed));
}

Model load_model(const RunConfig& cfg) {
    Model m = Model::load(cfg.model_path);
    const auto stored = m.config().to_pairs();
    const auto wanted = cfg.model.to_pairs();
    for (const auto& key : cfg.explicit_model_keys) {
        if (key == "seed") continue;
        auto find = [&key](const auto& pairs) {
            for (const auto& [k, v] : pairs)
                if (k == key) return v;
            return std::string();
        };
        const std::string have = find(stored);
        const std::string want = find(wanted);
        if (have != want)
            fail(Error::Kind::ShapeMismatch, "checkpoint " + cfg.model_path + " has " + key + "=" + have +
                                                 " but the configuration asks for " + want);
    }
    if (m.config().encoder == EncoderKind::Precomputed) m.set_precomputed(load_precomputed(cfg));
    return m;
}

void check_nonempty(std::size_t n, const std::string& path) {
    if (n == 0) fail(Error::Kind::InvalidArgument, "no instances in " + path);
}

void note_load(Report& r, const std::string& path, const LoadReport& rep) {
    if (!rep.rejections.empty())
        r << path << ": skipped " << rep.rejections.size() << " of " << rep.lines_read << " lines\n";
    for (const auto& w : rep.warnings) r << path << ": " << w << "\n";
}

/// Runs fn(i, worker) for i in [0, n) over `workers` threads in contiguous shards.
template <typename Fn>
void parallel_shards(std::size_t n, std::size_t workers, Fn fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i, std::size_t{0});
        return;
    }
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (std::size_t i = w * chunk; i < std::min(n, (w + 1) * chunk); ++i) fn(i, w);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

Sentence sentence_input(const RunConfig& cfg) {
    auto toks = tokenize(cfg.sentence);
    if (toks.empty()) fail(Error::Kind::InvalidArgument, "sentence is empty");
    if (*cfg.index >= toks.size())
        fail(Error::Kind::InvalidArgument, "index " + std::to_string(*cfg.index) + " is out of range for a " +
                                               std::to_string(toks.size()) + "-token sentence");
    return Sentence(std::move(toks), *cfg.index);
}

void write_row(std::ostream& os, const std::string& kind, std::size_t k, std::span<const double> values) {
    os << kind << '\t' << k;
    for (double v : values) os << '\t' << format_real(v);
    os << '\n';
}

// ---------------------------------------------------------------------------
// train

std::string cmd_train(const RunConfig& cfg) {
    Report r;
    TrainingData data;
    Vocabulary vocab;
    SenseInventory inventory;
    std::vector<std::string> labels;
    DevMetric dev;
    std::vector<WSDInstance> dev_wsd;
    std::vector<MatchingPair> dev_pairs;

    if (cfg.task == Task::Wsd) {
        LoadReport rep;
        data.labeled = load_wsd_jsonl(cfg.data, &rep, cfg.strict);
        note_load(r, cfg.data, rep);
        check_nonempty(data.labeled.size(), cfg.data);
        inventory = load_sense_inventory(cfg.inventory);
        validate_against(data.labeled, inventory);
        for (const auto& inst : data.labeled) add_sentence(vocab, inst.sentence);
        for (const auto& lemma : inventory.lemmas())
            for (const auto& e : inventory.at(lemma)) add_sentence(vocab, gloss_sentence(lemma, e));
        PairConfig pc;
        pc.neg_ratio = cfg.train.neg_ratio;
        pc.sentence_pair_ratio = cfg.train.sentence_pair_ratio;
        pc.seed = cfg.train.seed;
        PairReport prep;
        data.pairs = generate_pairs(data.labeled, inventory, pc, &prep);
        r << "pairs: " << prep.gloss_pairs << " sentence-gloss, " << prep.sentence_pairs << " sentence-sentence\n";
        if (cfg.model.ablation.matching) labels = sense_labels_for(inventory);
        if (!cfg.dev.empty()) {
            LoadReport drep;
            dev_wsd = load_wsd_jsonl(cfg.dev, &drep, cfg.strict);
            note_load(r, cfg.dev, drep);
            check_nonempty(dev_wsd.size(), cfg.dev);
            dev = [&](const Model& m) { return wsd_accuracy(m, dev_wsd, inventory); };
        }
    } else {
        LoadReport rep;
        const auto wic = load_wic(cfg.data, cfg.gold, &rep, cfg.strict);
        note_load(r, cfg.data, rep);
        check_nonempty(wic.size(), cfg.data);
        data.pairs = pairs_from_wic(wic);
        for (const auto& p : data.pairs) {
            add_sentence(vocab, p.left);
            add_sentence(vocab, p.right);
        }
        if (!cfg.dev.empty()) {
            const auto dwic = load_wic(cfg.dev, cfg.dev_gold, nullptr, cfg.strict);
            check_nonempty(dwic.size(), cfg.dev);
            dev_pairs = pairs_from_wic(dwic);
            dev = [&](const Model& m) { return pair_accuracy(m, dev_pairs); };
        }
    }

    Model model(cfg.model, std::move(vocab), labels);
    if (cfg.model.encoder == EncoderKind::Precomputed) model.set_precomputed(load_precomputed(cfg));
    const TrainResult res = train(model, data, cfg.train, dev, cfg.task == Task::Wsd ? &inventory : nullptr);

    const auto ckpt = out_file(cfg, "model.ckpt");
    model.save(ckpt.string());
    {
        auto os = open_out(out_file(cfg, "metrics.tsv"));
        os << "epoch\ttrain_loss\tdev_acc\n";
        for (const auto& m : res.log) os << format_metrics_line(m) << '\n';
    }
    {
        auto os = open_out(out_file(cfg, "config.txt"));
        for (const auto& [k, v] : cfg.to_pairs()) os << k << '=' << v << '\n';
    }
    r << "epochs run: " << res.log.size() << "\n";
    if (!res.log.empty()) r << "final train loss: " << format_real(res.log.back().train_loss) << "\n";
    if (dev) r << "best dev accuracy: " << format_real(res.best_dev) << " (epoch " << res.best_epoch << ")\n";
    r << "checkpoint: " << ckpt.string() << "\n";
    return r.os.str();
}

// ---------------------------------------------------------------------------
// eval

struct LemmaTally {
    std::size_t total = 0;
    std::size_t correct = 0;
};

void write_per_lemma(const RunConfig& cfg, const std::map<std::string, LemmaTally>& tally) {
    auto os = open_out(out_file(cfg, "per_lemma.tsv"));
    os << "lemma\ttotal\tcorrect\taccuracy\n";
    for (const auto& [lemma, t] : tally) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", static_cast<double>(t.correct) / static_cast<double>(t.total));
        os << lemma << '\t' << t.total << '\t' << t.correct << '\t' << buf << '\n';
    }
}

std::string fmt6(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

std::string cmd_eval(const RunConfig& cfg) {
    Report r;
    const Model model = load_model(cfg);
    std::vector<std::optional<std::string>> predictions;
    std::vector<std::string> golds;
    std::vector<std::string> lemmas;

    if (cfg.task == Task::Wsd) {
        LoadReport rep;
        const auto instances = load_wsd_jsonl(cfg.data, &rep, cfg.strict);
        note_load(r, cfg.data, rep);
        check_nonempty(instances.size(), cfg.data);
        const SenseInventory inv = load_sense_inventory(cfg.inventory);
        predictions.resize(instances.size());
        std::vector<SensePredictor> predictors;
        for (std::size_t w = 0; w < cfg.workers; ++w) predictors.emplace_back(model, inv);
        parallel_shards(instances.size(), cfg.workers, [&](std::size_t i, std::size_t w) {
            const auto& inst = instances[i];
            if (inv.find(inst.lemma)) predictions[i] = predictors[w].predict(inst.sentence, inst.lemma);
        });
        for (const auto& inst : instances) {
            golds.push_back(inst.sense);
            lemmas.push_back(inst.lemma);
        }
    } else {
        LoadReport rep;
        const auto wic = load_wic(cfg.data, cfg.gold, &rep, cfg.strict);
        note_load(r, cfg.data, rep);
        check_nonempty(wic.size(), cfg.data);
        predictions.resize(wic.size());
        parallel_shards(wic.size(), cfg.workers, [&](std::size_t i, std::size_t) {
            predictions[i] = model.match_probability(wic[i].left, wic[i].right) > 0.5 ? "T" : "F";
        });
        for (const auto& w : wic) {
            golds.push_back(*w.gold ? "T" : "F");
            lemmas.push_back(w.lemma);
        }
    }

    const Metrics m = score(predictions, golds);
    std::map<std::string, LemmaTally> tally;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        auto& t = tally[lemmas[i]];
        ++t.total;
        if (predictions[i] && *predictions[i] == golds[i]) ++t.correct;
    }
    if (!cfg.out.empty()) write_per_lemma(cfg, tally);

    if (cfg.task == Task::Wic) {
        r << "wic-accuracy\t" << fmt6(m.accuracy) << "\n";
    } else {
        r << "wsd-f1\t" << fmt6(m.f1) << "\n";
        r << "precision\t" << fmt6(m.precision) << "\n";
        r << "recall\t" << fmt6(m.recall) << "\n";
    }
    r << "instances\t" << m.total << "\n";
    r << "attempted\t" << m.attempted << "\n";
    r << "correct\t" << m.correct << "\n";
    return r.os.str();
}

// ---------------------------------------------------------------------------
// decompose / attn-dump

std::string emit(const RunConfig& cfg, const std::string& file, const std::string& body, const std::string& what) {
    if (cfg.out.empty()) return body;
    const auto path = out_file(cfg, file);
    auto os = open_out(path);
    os << body;
    return what + " written to " + path.string() + "\n";
}

std::string cmd_decompose(const RunConfig& cfg) {
    const Model model = load_model(cfg);
    const Sentence s = sentence_input(cfg);
    const SenseRepresentation rep = model.sense_representation(s);
    std::ostringstream os;
    os << "# target\t" << s.target << '\t' << s.target_token() << '\n';
    for (std::size_t k = 0; k < rep.capsules.size(); ++k) write_row(os, "S", k, rep.capsules[k]);
    for (std::size_t k = 0; k < rep.context_specific.size(); ++k) write_row(os, "S*", k, rep.context_specific[k]);
    for (std::size_t k = 0; k < rep.weights.size(); ++k) write_row(os, "b", k, std::span<const double>(&rep.weights[k], 1));
    write_row(os, "Q", 0, rep.q);
    return emit(cfg, "decompose.tsv", os.str(), "decomposition");
}

std::string cmd_attn_dump(const RunConfig& cfg) {
    const Model model = load_model(cfg);
    const Sentence s = sentence_input(cfg);
    const SenseRepresentation rep = model.sense_representation(s);
    std::ostringstream os;
    os << "k\tj\ttoken\tglobal\tlocal\n";
    const std::size_t p = rep.capsules.size();
    for (std::size_t k = 0; k < p; ++k) {
        for (std::size_t j = 0; j < s.size(); ++j) {
            os << k << '\t' << j << '\t' << s.tokens[j] << '\t';
            if (k < rep.attention.global.size()) os << format_real(rep.attention.global[k][j]);
            os << '\t';
            if (k < rep.attention.local.size() && rep.window.contains(j))
                os << format_real(rep.attention.local[k][j - rep.window.first]);
            os << '\n';
        }
    }
    return emit(cfg, "attention.tsv", os.str(), "attention weights");
}

// ---------------------------------------------------------------------------
// sense-sim

std::string cmd_sense_sim(const RunConfig& cfg) {
    const Model model = load_model(cfg);
    LoadReport lrep;
    const auto instances = load_wsd_jsonl(cfg.data, &lrep, cfg.strict);
    check_nonempty(instances.size(), cfg.data);
    SenseSimConfig sc;
    sc.samples = cfg.samples;
    sc.repeats = cfg.repeats;
    sc.max_sentences = cfg.max_sentences;
    sc.seed = cfg.model.seed;
    const SenseSimResult res = sense_similarity(model, instances, sc);

    std::ostringstream table;
    table << "repeat\tlemma\tsense\tsentences\tmean_cosine\n";
    for (const auto& row : res.rows)
        table << row.repeat << '\t' << row.lemma << '\t' << row.sense << '\t' << row.sentences << '\t'
              << fmt6(row.same_sense) << '\n';

    Report r;
    note_load(r, cfg.data, lrep);
    for (const auto& w : res.warnings) r << "warning: " << w << "\n";
    if (cfg.out.empty()) {
        r << table.str();
    } else {
        auto os = open_out(out_file(cfg, "sense_sim.tsv"));
        os << table.str();
    }
    r << "same_sense\t" << fmt6(res.same_sense) << "\t" << res.same_pairs << " pairs\n";
    r << "cross_sense\t" << fmt6(res.cross_sense) << "\t" << res.cross_pairs << " pairs\n";
    r << "gap\t" << fmt6(res.same_sense - res.cross_sense) << "\n";
    return r.os.str();
}

// ---------------------------------------------------------------------------
// synth

std::string cmd_synth(const RunConfig& cfg) {
    const SyntheticCorpus c = build_synthetic(cfg.synth);
    write_wsd_jsonl(out_file(cfg, "train.jsonl").string(), c.train);
    write_wsd_jsonl(out_file(cfg, "dev.jsonl").string(), c.dev);
    write_wsd_jsonl(out_file(cfg, "test.jsonl").string(), c.test);
    write_sense_inventory(out_file(cfg, "inventory.tsv").string(), c.inventory);
    Report r;
    r << "train\t" << c.train.size() << "\ndev\t" << c.dev.size() << "\ntest\t" << c.test.size() << "\n";
    r << "written to " << cfg.out << "\n";
    return r.os.str();
}

}  // namespace

SenseSimResult sense_similarity(const Model& model, std::span<const WSDInstance> instances, const SenseSimConfig& cfg) {
    if (cfg.samples == 0 || cfg.repeats == 0 || cfg.max_sentences < 2)
        fail(Error::Kind::InvalidArgument, "sense_similarity: samples, repeats must be >= 1 and max_sentences >= 2");
    std::map<std::string, std::map<std::string, std::vector<std::size_t>>> groups;
    for (std::size_t i = 0; i < instances.size(); ++i) groups[instances[i].lemma][instances[i].sense].push_back(i);

    std::vector<std::string> lemmas;
    for (const auto& [lemma, senses] : groups) lemmas.push_back(lemma);

    std::map<std::size_t, RealVector> cache;
    auto vec = [&](std::size_t i) -> const RealVector& {
        auto it = cache.find(i);
        if (it == cache.end()) it = cache.emplace(i, model.sense_representation(instances[i].sentence).q).first;
        return it->second;
    };

    SenseSimResult res;
    double same_sum = 0.0, cross_sum = 0.0;
    std::mt19937_64 rng(cfg.seed);
    for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
        std::shuffle(lemmas.begin(), lemmas.end(), rng);
        const std::size_t take = std::min(cfg.samples, lemmas.size());
        for (std::size_t li = 0; li < take; ++li) {
            const auto& lemma = lemmas[li];
            std::vector<std::vector<std::size_t>> kept;
            for (const auto& [sense, members] : groups[lemma]) {
                if (members.size() < 2) {
                    res.warnings.push_back("repeat " + std::to_string(rep) + ": " + lemma + "/" + sense + " has " +
                                           std::to_string(members.size()) + " sentence; skipped");
                    continue;
                }
                auto pick = members;
                std::shuffle(pick.begin(), pick.end(), rng);
                pick.resize(std::min(pick.size(), cfg.max_sentences));
                double sum = 0.0;
                std::size_t count = 0;
                for (std::size_t a = 0; a < pick.size(); ++a)
                    for (std::size_t b = a + 1; b < pick.size(); ++b, ++count) sum += cosine(vec(pick[a]), vec(pick[b]));
                same_sum += sum;
                res.same_pairs += count;
                res.rows.push_back({rep, lemma, sense, pick.size(), sum / static_cast<double>(count)});
                kept.push_back(std::move(pick));
            }
            for (std::size_t x = 0; x < kept.size(); ++x)
                for (std::size_t y = x + 1; y < kept.size(); ++y)
                    for (std::size_t a : kept[x])
                        for (std::size_t b : kept[y]) {
                            cross_sum += cosine(vec(a), vec(b));
                            ++res.cross_pairs;
                        }
        }
    }
    if (res.same_pairs == 0) fail(Error::Kind::InvalidArgument, "no sense has at least two sentences");
    res.same_sense = same_sum / static_cast<double>(res.same_pairs);
    res.cross_sense = res.cross_pairs ? cross_sum / static_cast<double>(res.cross_pairs) : 0.0;
    return res;
}

std::string run_command(const std::string& command, const RunConfig& cfg) {
    cfg.validate(command);
    if (command == "train") return cmd_train(cfg);
    if (command == "eval") return cmd_eval(cfg);
    if (command == "decompose") return cmd_decompose(cfg);
    if (command == "attn-dump") return cmd_attn_dump(cfg);
    if (command == "sense-sim") return cmd_sense_sim(cfg);
    return cmd_synth(cfg);
}

}  // namespace capsdec
