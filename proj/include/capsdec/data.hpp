#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "capsdec/context.hpp"

namespace capsdec {

// ---------------------------------------------------------------------------
// Word-in-Context
// ---------------------------------------------------------------------------

enum class PartOfSpeech { Noun, Verb };

struct WiCInstance {
    std::string lemma;
    PartOfSpeech pos = PartOfSpeech::Noun;
    Sentence left;
    Sentence right;
    std::optional<bool> gold;
};

/// lines_read == parsed + rejections.size() always holds.
struct LoadReport {
    std::size_t lines_read = 0;
    std::size_t parsed = 0;
    std::vector<std::string> rejections;
    std::vector<std::string> warnings;
};

/// Tab-separated: lemma, POS (N|V), "i-j", sentence1, sentence2. The gold file
/// carries one T/F per line. In strict mode the first malformed line throws;
/// otherwise it is recorded in the report and skipped.
std::vector<WiCInstance> parse_wic(std::istream& data, std::istream* gold, LoadReport* report = nullptr,
                                   bool strict = true);
std::vector<WiCInstance> load_wic(const std::string& data_path, const std::optional<std::string>& gold_path,
                                  LoadReport* report = nullptr, bool strict = true);

// ---------------------------------------------------------------------------
// Sense inventory
// ---------------------------------------------------------------------------

struct SenseEntry {
    std::string id;
    std::vector<std::string> gloss;
};

class SenseInventory {
public:
    /// Rejects a duplicate (lemma, sense_id) and an empty gloss.
    void add(const std::string& lemma, const std::string& sense_id, std::vector<std::string> gloss);

    const std::vector<SenseEntry>* find(const std::string& lemma) const;
    /// Throws NotFound naming the lemma.
    const std::vector<SenseEntry>& at(const std::string& lemma) const;
    bool contains(const std::string& lemma, const std::string& sense_id) const;
    const std::vector<std::string>& lemmas() const { return order_; }
    std::size_t sense_count() const;

    bool operator==(const SenseInventory& other) const;

private:
    std::map<std::string, std::vector<SenseEntry>> entries_;
    std::vector<std::string> order_;
};

/// Lines "lemma<TAB>sense_id<TAB>gloss"; lemma order follows first appearance.
SenseInventory parse_sense_inventory(std::istream& is);
SenseInventory load_sense_inventory(const std::string& path);
void write_sense_inventory(std::ostream& os, const SenseInventory& inv);
void write_sense_inventory(const std::string& path, const SenseInventory& inv);

/// "lemma : gloss tokens" with the lemma token as target.
Sentence gloss_sentence(const std::string& lemma, const SenseEntry& entry);

// ---------------------------------------------------------------------------
// WSD instances (JSON lines: {"tokens": [...], "index": h, "lemma": ..., "sense": ...})
// ---------------------------------------------------------------------------

struct WSDInstance {
    Sentence sentence;
    std::string lemma;
    std::string sense;
};

std::vector<WSDInstance> parse_wsd_jsonl(std::istream& is, LoadReport* report = nullptr, bool strict = true);
std::vector<WSDInstance> load_wsd_jsonl(const std::string& path, LoadReport* report = nullptr, bool strict = true);
void write_wsd_jsonl(std::ostream& os, std::span<const WSDInstance> instances);
void write_wsd_jsonl(const std::string& path, std::span<const WSDInstance> instances);

/// Throws when an instance's gold sense is missing from the inventory.
void validate_against(std::span<const WSDInstance> instances, const SenseInventory& inv);

// ---------------------------------------------------------------------------
// Matching pairs
// ---------------------------------------------------------------------------

struct MatchingPair {
    Sentence left;
    Sentence right;
    std::string lemma;
    int gold = 0;  // 1 = same sense
};

struct PairConfig {
    std::size_t neg_ratio = 1;
    double sentence_pair_ratio = 1.0;  // sentence-sentence pairs per sentence-gloss pair
    bool gloss_pairs = true;
    std::uint64_t seed = 1;
};

struct PairReport {
    std::size_t skipped_missing_lemma = 0;
    std::size_t gloss_pairs = 0;
    std::size_t sentence_pairs = 0;
};

std::vector<MatchingPair> pairs_from_wic(std::span<const WiCInstance> instances);

/// Per instance: one gold-gloss positive plus up to neg_ratio negatives drawn
/// from the lemma's other senses, and round(ratio * that count) sentence pairs
/// (same lemma) cycling one positive then neg_ratio negatives.
std::vector<MatchingPair> generate_pairs(std::span<const WSDInstance> instances, const SenseInventory& inv,
                                         const PairConfig& cfg, PairReport* report = nullptr);

// ---------------------------------------------------------------------------
// Synthetic pseudo-ambiguous corpus
// ---------------------------------------------------------------------------

struct SyntheticSpec {
    std::uint64_t seed = 7;
    std::size_t pseudo_words = 20;
    std::size_t senses_per_word = 2;
    std::size_t contexts_per_sense = 50;
    std::size_t vocab_size = 1000;
    std::size_t min_length = 8;
    std::size_t max_length = 14;
    std::size_t collocates_per_sense = 8;
    std::size_t collocates_per_sentence = 3;
    std::size_t gloss_length = 4;
    double train_fraction = 0.6;
    double dev_fraction = 0.2;

    void validate() const;
};

struct SyntheticCorpus {
    std::vector<WSDInstance> train;
    std::vector<WSDInstance> dev;
    std::vector<WSDInstance> test;
    SenseInventory inventory;
    std::map<std::pair<std::string, std::string>, std::set<std::string>> collocates;  // (lemma, sense) -> tokens
};

SyntheticCorpus build_synthetic(const SyntheticSpec& spec);

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

enum class Task { Wic, Wsd };

struct Metrics {
    std::size_t total = 0;
    std::size_t attempted = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;   // correct / total
    double precision = 0.0;  // correct / attempted
    double recall = 0.0;     // correct / total
    double f1 = 0.0;

    double headline(Task t) const { return t == Task::Wic ? accuracy : f1; }
};

/// std::nullopt marks an unattempted instance.
Metrics score(std::span<const std::optional<std::string>> predictions, std::span<const std::string> golds);

}  // namespace capsdec
