#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "capsdec/data.hpp"
#include "capsdec/model.hpp"
#include "capsdec/trainer.hpp"

namespace capsdec {

/// Everything a command needs. Built from a flat key=value file and/or
/// individual overrides; later assignments win, so apply the file first.
struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    SyntheticSpec synth;
    Task task = Task::Wsd;

    std::string model_path;
    std::string data;
    std::string gold;
    std::string dev;
    std::string dev_gold;
    std::string inventory;
    std::string precomputed;
    std::string out;
    std::string sentence;
    std::optional<std::size_t> index;

    std::size_t samples = 20;       // sense-sim: lemmas drawn per repeat
    std::size_t repeats = 3;        // sense-sim
    std::size_t max_sentences = 5;  // sense-sim: per sense
    std::size_t workers = 1;        // eval sharding
    bool strict = true;             // loaders throw on the first malformed line

    /// Model keys assigned explicitly; eval-style commands require them to
    /// agree with the checkpoint.
    std::set<std::string> explicit_model_keys;

    /// Throws InvalidArgument for an unknown key or a bad value.
    void set(const std::string& key, const std::string& value);
    /// `key = value` lines; blank lines and lines starting with '#' are ignored.
    void load_file(const std::string& path);
    /// Checks the inputs `command` needs before any work starts.
    void validate(const std::string& command) const;

    std::vector<std::pair<std::string, std::string>> to_pairs() const;
};

std::string to_string(Task t);

const std::vector<std::string>& command_names();

/// Runs one command and returns its human-readable report. Files go under
/// cfg.out when it is set.
std::string run_command(const std::string& command, const RunConfig& cfg);

// --- sense similarity ------------------------------------------------------------

struct SenseSimConfig {
    std::size_t samples = 20;
    std::size_t repeats = 3;
    std::size_t max_sentences = 5;
    std::uint64_t seed = 1;
};

struct SenseSimRow {
    std::size_t repeat = 0;
    std::string lemma;
    std::string sense;
    std::size_t sentences = 0;
    double same_sense = 0.0;  // mean pairwise cosine inside the sense
};

struct SenseSimResult {
    std::vector<SenseSimRow> rows;
    std::vector<std::string> warnings;
    double same_sense = 0.0;   // mean over all same-sense pairs
    double cross_sense = 0.0;  // mean over pairs of one lemma with different senses
    std::size_t same_pairs = 0;
    std::size_t cross_pairs = 0;
};

/// Per repeat, draws up to `samples` lemmas and up to `max_sentences`
/// sentences per sense, then compares sense vectors by cosine. Senses with
/// fewer than two sentences are skipped with a warning.
SenseSimResult sense_similarity(const Model& model, std::span<const WSDInstance> instances, const SenseSimConfig& cfg);

}  // namespace capsdec
