#include "capsdec/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "util.hpp"

namespace capsdec {

namespace {

std::ifstream open_in(const std::string& path) {
    std::ifstream is(path);
    if (!is) fail(Error::Kind::Io, "cannot read " + path);
    return is;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) fail(Error::Kind::Io, "cannot write " + path);
    return os;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

// In strict mode rethrows; otherwise records the rejection.
template <typename Fn>
bool guarded(bool strict, LoadReport& report, std::size_t lineno, Fn&& fn) {
    try {
        fn();
        return true;
    } catch (const Error& e) {
        const std::string msg = "line " + std::to_string(lineno) + ": " + e.what();
        if (strict) fail(Error::Kind::Parse, msg);
        report.rejections.push_back(msg);
        return false;
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// WiC

std::vector<WiCInstance> parse_wic(std::istream& data, std::istream* gold, LoadReport* report, bool strict) {
    LoadReport local;
    LoadReport& rep = report ? *report : local;
    std::vector<WiCInstance> out;
    std::vector<std::size_t> parsed_ordinals;  // position of each accepted instance among non-empty lines
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(data, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) continue;
        ++rep.lines_read;
        WiCInstance inst;
        const bool ok = guarded(strict, rep, lineno, [&] {
            const auto f = detail::split(line, '\t');
            if (f.size() != 5) fail(Error::Kind::Parse, "expected 5 tab-separated fields, found " + std::to_string(f.size()));
            inst.lemma = f[0];
            if (f[1] == "N") inst.pos = PartOfSpeech::Noun;
            else if (f[1] == "V") inst.pos = PartOfSpeech::Verb;
            else fail(Error::Kind::Parse, "part of speech must be N or V, got '" + f[1] + "'");
            const auto idx = detail::split(f[2], '-');
            if (idx.size() != 2) fail(Error::Kind::Parse, "index field must look like 'i-j', got '" + f[2] + "'");
            inst.left = Sentence(tokenize(f[3]), detail::parse_u64("index", idx[0]));
            inst.right = Sentence(tokenize(f[4]), detail::parse_u64("index", idx[1]));
            inst.left.validate();
            inst.right.validate();
        });
        if (ok) {
            out.push_back(std::move(inst));
            parsed_ordinals.push_back(rep.lines_read - 1);
            ++rep.parsed;
        }
    }
    if (rep.lines_read == 0) rep.warnings.push_back("WiC data is empty");

    if (gold) {
        std::vector<bool> labels;
        std::size_t glineno = 0;
        while (std::getline(*gold, line)) {
            ++glineno;
            strip_cr(line);
            if (line.empty()) continue;
            if (line == "T") labels.push_back(true);
            else if (line == "F") labels.push_back(false);
            else fail(Error::Kind::Parse, "gold line " + std::to_string(glineno) + ": expected T or F, got '" + line + "'");
        }
        if (labels.size() != rep.lines_read) {
            std::ostringstream os;
            os << "gold file has " << labels.size() << " labels but the data has " << rep.lines_read << " instances";
            fail(Error::Kind::Parse, os.str());
        }
        for (std::size_t i = 0; i < out.size(); ++i) out[i].gold = labels[parsed_ordinals[i]];
    }
    return out;
}

std::vector<WiCInstance> load_wic(const std::string& data_path, const std::optional<std::string>& gold_path,
                                  LoadReport* report, bool strict) {
    auto data = open_in(data_path);
    if (gold_path) {
        auto gold = open_in(*gold_path);
        return parse_wic(data, &gold, report, strict);
    }
    return parse_wic(data, nullptr, report, strict);
}

// ---------------------------------------------------------------------------
// Sense inventory

void SenseInventory::add(const std::string& lemma, const std::string& sense_id, std::vector<std::string> gloss) {
    if (lemma.empty() || sense_id.empty()) fail(Error::Kind::InvalidArgument, "lemma and sense id must be non-empty");
    if (gloss.empty()) fail(Error::Kind::InvalidArgument, "empty gloss for " + lemma + "/" + sense_id);
    auto [it, inserted] = entries_.try_emplace(lemma);
    if (inserted) order_.push_back(lemma);
    for (const auto& e : it->second)
        if (e.id == sense_id) fail(Error::Kind::InvalidArgument, "duplicate sense '" + sense_id + "' for lemma '" + lemma + "'");
    it->second.push_back({sense_id, std::move(gloss)});
}

const std::vector<SenseEntry>* SenseInventory::find(const std::string& lemma) const {
    auto it = entries_.find(lemma);
    return it == entries_.end() ? nullptr : &it->second;
}

const std::vector<SenseEntry>& SenseInventory::at(const std::string& lemma) const {
    const auto* e = find(lemma);
    if (!e) fail(Error::Kind::NotFound, "lemma '" + lemma + "' is not in the sense inventory");
    return *e;
}

bool SenseInventory::contains(const std::string& lemma, const std::string& sense_id) const {
    const auto* e = find(lemma);
    if (!e) return false;
    return std::any_of(e->begin(), e->end(), [&](const SenseEntry& s) { return s.id == sense_id; });
}

std::size_t SenseInventory::sense_count() const {
    std::size_t n = 0;
    for (const auto& [_, v] : entries_) n += v.size();
    return n;
}

bool SenseInventory::operator==(const SenseInventory& other) const {
    if (order_ != other.order_) return false;
    for (const auto& lemma : order_) {
        const auto& a = entries_.at(lemma);
        const auto& b = other.entries_.at(lemma);
        if (a.size() != b.size()) return false;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (a[i].id != b[i].id || a[i].gloss != b[i].gloss) return false;
    }
    return true;
}

SenseInventory parse_sense_inventory(std::istream& is) {
    SenseInventory inv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        strip_cr(line);
        if (line.empty()) continue;
        const auto f = detail::split(line, '\t');
        if (f.size() != 3)
            fail(Error::Kind::Parse, "inventory line " + std::to_string(lineno) + ": expected lemma<TAB>sense_id<TAB>gloss");
        try {
            inv.add(f[0], f[1], tokenize(f[2]));
        } catch (const Error& e) {
            fail(Error::Kind::Parse, "inventory line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return inv;
}

SenseInventory load_sense_inventory(const std::string& path) {
    auto is = open_in(path);
    return parse_sense_inventory(is);
}

void write_sense_inventory(std::ostream& os, const SenseInventory& inv) {
    for (const auto& lemma : inv.lemmas()) {
        for (const auto& e : inv.at(lemma)) {
            os << lemma << '\t' << e.id << '\t';
            for (std::size_t i = 0; i < e.gloss.size(); ++i) os << (i ? " " : "") << e.gloss[i];
            os << '\n';
        }
    }
}

void write_sense_inventory(const std::string& path, const SenseInventory& inv) {
    auto os = open_out(path);
    write_sense_inventory(os, inv);
}

Sentence gloss_sentence(const std::string& lemma, const SenseEntry& entry) {
    std::vector<std::string> toks = tokenize(lemma);
    if (toks.size() != 1) fail(Error::Kind::InvalidArgument, "lemma must be a single token: '" + lemma + "'");
    toks.push_back(":");
    toks.insert(toks.end(), entry.gloss.begin(), entry.gloss.end());
    return Sentence(std::move(toks), 0);
}

// ---------------------------------------------------------------------------
// WSD JSON lines

std::vector<WSDInstance> parse_wsd_jsonl(std::istream& is, LoadReport* report, bool strict) {
    LoadReport local;
    LoadReport& rep = report ? *report : local;
    std::vector<WSDInstance> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        strip_cr(line);
        if (detail::trim(line).empty()) continue;
        ++rep.lines_read;
        WSDInstance inst;
        const bool ok = guarded(strict, rep, lineno, [&] {
            try {
                const auto j = nlohmann::json::parse(line);
                auto toks = j.at("tokens").get<std::vector<std::string>>();
                for (auto& t : toks) {
                    auto lowered = tokenize(t);
                    if (lowered.size() != 1) fail(Error::Kind::Parse, "tokens must be non-empty and whitespace-free");
                    t = std::move(lowered.front());
                }
                inst.sentence = Sentence(std::move(toks), j.at("index").get<std::size_t>());
                inst.lemma = j.at("lemma").get<std::string>();
                inst.sense = j.at("sense").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                fail(Error::Kind::Parse, e.what());
            }
            inst.sentence.validate();
            if (inst.lemma.empty() || inst.sense.empty()) fail(Error::Kind::Parse, "lemma and sense must be non-empty");
        });
        if (ok) {
            out.push_back(std::move(inst));
            ++rep.parsed;
        }
    }
    if (rep.lines_read == 0) rep.warnings.push_back("WSD data is empty");
    return out;
}

std::vector<WSDInstance> load_wsd_jsonl(const std::string& path, LoadReport* report, bool strict) {
    auto is = open_in(path);
    return parse_wsd_jsonl(is, report, strict);
}

void write_wsd_jsonl(std::ostream& os, std::span<const WSDInstance> instances) {
    for (const auto& inst : instances) {
        nlohmann::ordered_json j;
        j["tokens"] = inst.sentence.tokens;
        j["index"] = inst.sentence.target;
        j["lemma"] = inst.lemma;
        j["sense"] = inst.sense;
        os << j.dump() << '\n';
    }
}

void write_wsd_jsonl(const std::string& path, std::span<const WSDInstance> instances) {
    auto os = open_out(path);
    write_wsd_jsonl(os, instances);
}

void validate_against(std::span<const WSDInstance> instances, const SenseInventory& inv) {
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (!inv.contains(instances[i].lemma, instances[i].sense))
            fail(Error::Kind::NotFound, "instance " + std::to_string(i) + ": sense '" + instances[i].sense +
                                            "' of lemma '" + instances[i].lemma + "' is not in the inventory");
    }
}

// ---------------------------------------------------------------------------
// Pairs

std::vector<MatchingPair> pairs_from_wic(std::span<const WiCInstance> instances) {
    std::vector<MatchingPair> out;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const auto& w = instances[i];
        if (!w.gold) fail(Error::Kind::InvalidArgument, "WiC instance " + std::to_string(i) + " has no gold label");
        out.push_back({w.left, w.right, w.lemma, *w.gold ? 1 : 0});
    }
    return out;
}

std::vector<MatchingPair> generate_pairs(std::span<const WSDInstance> instances, const SenseInventory& inv,
                                         const PairConfig& cfg, PairReport* report) {
    if (cfg.sentence_pair_ratio < 0.0) fail(Error::Kind::InvalidArgument, "sentence_pair_ratio must be >= 0");
    PairReport local;
    PairReport& rep = report ? *report : local;
    std::mt19937_64 rng(cfg.seed);

    // (lemma, sense) -> instance indices, and lemma -> instance indices
    std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> by_sense;
    std::map<std::string, std::vector<std::size_t>> by_lemma;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        by_sense[{instances[i].lemma, instances[i].sense}].push_back(i);
        by_lemma[instances[i].lemma].push_back(i);
    }
    auto pick = [&rng](const std::vector<std::size_t>& v) {
        std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
        return v[d(rng)];
    };

    std::vector<MatchingPair> out;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const auto& inst = instances[i];
        std::size_t gloss_count = 1 + cfg.neg_ratio;
        if (cfg.gloss_pairs) {
            const auto* senses = inv.find(inst.lemma);
            if (!senses) {
                ++rep.skipped_missing_lemma;
            } else {
                auto gold = std::find_if(senses->begin(), senses->end(), [&](const SenseEntry& e) { return e.id == inst.sense; });
                if (gold == senses->end())
                    fail(Error::Kind::NotFound, "gold sense '" + inst.sense + "' missing for lemma '" + inst.lemma + "'");
                out.push_back({inst.sentence, gloss_sentence(inst.lemma, *gold), inst.lemma, 1});
                std::vector<const SenseEntry*> others;
                for (const auto& e : *senses)
                    if (e.id != inst.sense) others.push_back(&e);
                std::shuffle(others.begin(), others.end(), rng);
                const std::size_t nneg = std::min(cfg.neg_ratio, others.size());
                for (std::size_t k = 0; k < nneg; ++k)
                    out.push_back({inst.sentence, gloss_sentence(inst.lemma, *others[k]), inst.lemma, 0});
                rep.gloss_pairs += 1 + nneg;
                gloss_count = 1 + nneg;
            }
        }

        const auto n_sentence = static_cast<std::size_t>(std::llround(cfg.sentence_pair_ratio * static_cast<double>(gloss_count)));
        std::vector<std::size_t> same, diff;
        for (std::size_t j : by_sense[{inst.lemma, inst.sense}])
            if (j != i) same.push_back(j);
        for (std::size_t j : by_lemma[inst.lemma])
            if (instances[j].sense != inst.sense) diff.push_back(j);
        for (std::size_t m = 0; m < n_sentence; ++m) {
            const bool want_positive = m % (1 + cfg.neg_ratio) == 0;
            const auto& pool = want_positive ? same : diff;
            if (pool.empty()) continue;
            const std::size_t j = pick(pool);
            out.push_back({inst.sentence, instances[j].sentence, inst.lemma, want_positive ? 1 : 0});
            ++rep.sentence_pairs;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

void SyntheticSpec::validate() const {
    if (pseudo_words == 0 || senses_per_word < 2 || contexts_per_sense == 0 || vocab_size == 0 || min_length == 0 ||
        collocates_per_sense == 0 || collocates_per_sentence == 0 || gloss_length == 0)
        fail(Error::Kind::InvalidArgument, "synthetic spec: counts must be positive and senses_per_word >= 2");
    if (max_length < min_length) fail(Error::Kind::InvalidArgument, "synthetic spec: max_length < min_length");
    if (collocates_per_sentence + 1 > min_length)
        fail(Error::Kind::InvalidArgument, "synthetic spec: sentences too short for the requested collocates");
    if (collocates_per_sentence > collocates_per_sense || gloss_length > collocates_per_sense)
        fail(Error::Kind::InvalidArgument, "synthetic spec: not enough collocates per sense");
    if (!(train_fraction > 0.0 && dev_fraction >= 0.0 && train_fraction + dev_fraction < 1.0))
        fail(Error::Kind::InvalidArgument, "synthetic spec: split fractions must leave a non-empty test split");
    const std::size_t needed = pseudo_words * senses_per_word * collocates_per_sense;
    if (needed >= vocab_size) {
        std::ostringstream os;
        os << "synthetic spec: vocabulary of " << vocab_size << " cannot hold " << needed
           << " disjoint collocates plus filler tokens";
        fail(Error::Kind::InvalidArgument, os.str());
    }
}

SyntheticCorpus build_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    SyntheticCorpus corpus;

    std::vector<std::string> vocab;
    for (std::size_t i = 0; i < spec.vocab_size; ++i) vocab.push_back("v" + std::to_string(i));
    std::shuffle(vocab.begin(), vocab.end(), rng);
    std::size_t next = 0;

    struct SenseInfo {
        std::string lemma;
        std::string id;
        std::vector<std::string> collocates;
    };
    std::vector<SenseInfo> senses;
    for (std::size_t w = 0; w < spec.pseudo_words; ++w) {
        std::string lemma;
        std::vector<std::string> ids;
        for (std::size_t s = 0; s < spec.senses_per_word; ++s) {
            ids.push_back("t" + std::to_string(w * spec.senses_per_word + s));
            lemma += (s ? "_" : "") + ids.back();
        }
        for (const auto& id : ids) {
            SenseInfo info{lemma, id, {}};
            for (std::size_t c = 0; c < spec.collocates_per_sense; ++c) info.collocates.push_back(vocab[next++]);
            senses.push_back(std::move(info));
        }
    }
    const std::vector<std::string> fillers(vocab.begin() + static_cast<std::ptrdiff_t>(next), vocab.end());

    for (auto& info : senses) {
        std::vector<std::string> pool = info.collocates;
        std::shuffle(pool.begin(), pool.end(), rng);
        corpus.inventory.add(info.lemma, info.id, {pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(spec.gloss_length)});
        corpus.collocates[{info.lemma, info.id}] = {info.collocates.begin(), info.collocates.end()};
    }

    std::unordered_set<std::string> seen;
    std::uniform_int_distribution<std::size_t> len_dist(spec.min_length, spec.max_length);
    std::uniform_int_distribution<std::size_t> filler_dist(0, fillers.size() - 1);
    const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(spec.contexts_per_sense)));
    const auto n_dev = static_cast<std::size_t>(std::llround(spec.dev_fraction * static_cast<double>(spec.contexts_per_sense)));

    for (const auto& info : senses) {
        std::vector<WSDInstance> made;
        while (made.size() < spec.contexts_per_sense) {
            const std::size_t n = len_dist(rng);
            std::vector<std::string> toks(n);
            for (auto& t : toks) t = fillers[filler_dist(rng)];
            std::vector<std::size_t> positions(n);
            for (std::size_t i = 0; i < n; ++i) positions[i] = i;
            std::shuffle(positions.begin(), positions.end(), rng);
            const std::size_t h = positions[0];
            toks[h] = info.lemma;
            std::vector<std::string> cols = info.collocates;
            std::shuffle(cols.begin(), cols.end(), rng);
            for (std::size_t c = 0; c < spec.collocates_per_sentence; ++c) toks[positions[c + 1]] = cols[c];
            Sentence s(std::move(toks), h);
            if (!seen.insert(s.text()).second) continue;
            made.push_back({std::move(s), info.lemma, info.id});
        }
        for (std::size_t i = 0; i < made.size(); ++i) {
            auto& dst = i < n_train ? corpus.train : (i < n_train + n_dev ? corpus.dev : corpus.test);
            dst.push_back(std::move(made[i]));
        }
    }
    std::shuffle(corpus.train.begin(), corpus.train.end(), rng);
    return corpus;
}

// ---------------------------------------------------------------------------

Metrics score(std::span<const std::optional<std::string>> predictions, std::span<const std::string> golds) {
    if (predictions.size() != golds.size()) {
        std::ostringstream os;
        os << "score: " << predictions.size() << " predictions for " << golds.size() << " gold labels";
        fail(Error::Kind::InvalidArgument, os.str());
    }
    Metrics m;
    m.total = golds.size();
    for (std::size_t i = 0; i < golds.size(); ++i) {
        if (!predictions[i]) continue;
        ++m.attempted;
        if (*predictions[i] == golds[i]) ++m.correct;
    }
    const auto c = static_cast<double>(m.correct);
    m.accuracy = m.total ? c / static_cast<double>(m.total) : 0.0;
    m.precision = m.attempted ? c / static_cast<double>(m.attempted) : 0.0;
    m.recall = m.accuracy;
    m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

}  // namespace capsdec
