// Command-line front end. Talks to the library only through the C API.
#include <cstdio>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "capsdec/capsdec.h"

namespace {

struct Options {
    std::string config;
    std::vector<std::pair<std::string, std::string>> values;  // flag-supplied keys, in order
    std::vector<std::string> sets;
};

void add_value(CLI::App* sub, Options& o, const std::string& flag, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(flag, [&o, key](const std::string& v) { o.values.emplace_back(key, v); },
                                          help);
}

void add_switch(CLI::App* sub, Options& o, const std::string& flag, const std::string& key, const std::string& help) {
    sub->add_flag_callback(flag, [&o, key] { o.values.emplace_back(key, "true"); }, help);
}

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config, "flat key=value configuration file");
    add_value(sub, o, "--model", "model", "checkpoint path");
    add_value(sub, o, "--data", "data", "input data file");
    add_value(sub, o, "--inventory", "inventory", "sense inventory (TSV)");
    sub->add_option_function<std::string>(
           "--task", [&o](const std::string& v) { o.values.emplace_back("task", v); }, "task")
        ->check(CLI::IsMember({"wic", "wsd"}));
    add_value(sub, o, "--seed", "seed", "random seed");
    add_value(sub, o, "--out", "out", "output directory");
    add_value(sub, o, "--gold", "gold", "WiC gold labels");
    add_value(sub, o, "--dev", "dev", "dev data file");
    add_value(sub, o, "--dev-gold", "dev_gold", "WiC dev gold labels");
    add_value(sub, o, "--sentence", "sentence", "sentence text");
    add_value(sub, o, "--index", "index", "target token index");
    add_value(sub, o, "--precomputed", "precomputed", "directory of precomputed context vectors");
    add_value(sub, o, "--workers", "workers", "evaluation threads");
    add_switch(sub, o, "--ablate-capsule", "ablate_capsule", "skip capsule routing");
    add_switch(sub, o, "--ablate-global", "ablate_global", "drop global context attention");
    add_switch(sub, o, "--ablate-local", "ablate_local", "drop local context attention");
    add_switch(sub, o, "--ablate-matching", "ablate_matching", "train a per-sense classifier instead");
    sub->add_option("--set", o.sets, "extra key=value assignments");
}

int report_failure(capsdec_status st) {
    std::fprintf(stderr, "error (%s): %s\n", capsdec_status_name(st), capsdec_last_error());
    return static_cast<int>(st);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"capsule-based sense decomposition and matching"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(capsdec_version()));

    Options opts;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"train", "train a model and write model.ckpt and metrics.tsv"},
        {"eval", "score a checkpoint on WiC or WSD data"},
        {"decompose", "print capsule, context-specific and composed vectors"},
        {"attn-dump", "print global and local attention weights"},
        {"sense-sim", "compare sense vectors within and across senses"},
        {"synth", "write the synthetic pseudo-word corpus"},
    };
    for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), opts);

    CLI11_PARSE(app, argc, argv);
    const std::string command = app.get_subcommands().front()->get_name();

    capsdec_config* cfg = nullptr;
    capsdec_status st = capsdec_config_new(&cfg);
    if (st != CAPSDEC_OK) return report_failure(st);
    auto done = [&](int code) {
        capsdec_config_free(cfg);
        return code;
    };

    if (!opts.config.empty() && (st = capsdec_config_load(cfg, opts.config.c_str())) != CAPSDEC_OK)
        return done(report_failure(st));
    for (const auto& [k, v] : opts.values)
        if ((st = capsdec_config_set(cfg, k.c_str(), v.c_str())) != CAPSDEC_OK) return done(report_failure(st));
    for (const auto& kv : opts.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
            return done(static_cast<int>(CAPSDEC_INVALID_ARGUMENT));
        }
        st = capsdec_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
        if (st != CAPSDEC_OK) return done(report_failure(st));
    }

    char* report = nullptr;
    st = capsdec_run(cfg, command.c_str(), &report);
    if (st != CAPSDEC_OK) return done(report_failure(st));
    std::fputs(report, stdout);
    capsdec_string_free(report);
    return done(0);
}
