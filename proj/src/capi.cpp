#include "capsdec/capsdec.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "capsdec/commands.hpp"

struct capsdec_config {
    capsdec::RunConfig cfg;
};

struct capsdec_model {
    explicit capsdec_model(capsdec::Model m) : model(std::move(m)) {}
    capsdec::Model model;
};

struct capsdec_inventory {
    capsdec::SenseInventory inv;
};

namespace {

thread_local std::string last_error;

capsdec_status status_of(capsdec::Error::Kind k) {
    using K = capsdec::Error::Kind;
    switch (k) {
        case K::InvalidArgument: return CAPSDEC_INVALID_ARGUMENT;
        case K::ShapeMismatch: return CAPSDEC_SHAPE_MISMATCH;
        case K::NonFinite: return CAPSDEC_NON_FINITE;
        case K::Io: return CAPSDEC_IO_ERROR;
        case K::Parse: return CAPSDEC_PARSE_ERROR;
        case K::NotFound: return CAPSDEC_NOT_FOUND;
    }
    return CAPSDEC_INTERNAL_ERROR;
}

template <typename Fn>
capsdec_status guarded(Fn&& fn) {
    try {
        fn();
        last_error.clear();
        return CAPSDEC_OK;
    } catch (const capsdec::Error& e) {
        last_error = e.what();
        return status_of(e.kind());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return CAPSDEC_INTERNAL_ERROR;
    } catch (const std::exception& e) {
        last_error = e.what();
        return CAPSDEC_INTERNAL_ERROR;
    } catch (...) {
        last_error = "unknown error";
        return CAPSDEC_INTERNAL_ERROR;
    }
}

void need(const void* p, const char* what) {
    if (!p) capsdec::fail(capsdec::Error::Kind::InvalidArgument, std::string(what) + " is NULL");
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

capsdec::Sentence make_sentence(const char* text, std::size_t index) {
    need(text, "sentence");
    auto toks = capsdec::tokenize(text);
    if (index >= toks.size())
        capsdec::fail(capsdec::Error::Kind::InvalidArgument,
                      "index " + std::to_string(index) + " is out of range for a " + std::to_string(toks.size()) +
                          "-token sentence");
    return capsdec::Sentence(std::move(toks), index);
}

}  // namespace

extern "C" {

const char* capsdec_version(void) { return "0.1.0"; }

const char* capsdec_status_name(capsdec_status status) {
    switch (status) {
        case CAPSDEC_OK: return "ok";
        case CAPSDEC_INVALID_ARGUMENT: return "invalid argument";
        case CAPSDEC_SHAPE_MISMATCH: return "shape mismatch";
        case CAPSDEC_NON_FINITE: return "non-finite value";
        case CAPSDEC_IO_ERROR: return "i/o error";
        case CAPSDEC_PARSE_ERROR: return "parse error";
        case CAPSDEC_NOT_FOUND: return "not found";
        case CAPSDEC_INTERNAL_ERROR: return "internal error";
    }
    return "unknown status";
}

const char* capsdec_last_error(void) { return last_error.c_str(); }

void capsdec_string_free(char* s) { std::free(s); }

capsdec_status capsdec_config_new(capsdec_config** out) {
    return guarded([&] {
        need(out, "out");
        *out = new capsdec_config();
    });
}

void capsdec_config_free(capsdec_config* cfg) { delete cfg; }

capsdec_status capsdec_config_set(capsdec_config* cfg, const char* key, const char* value) {
    return guarded([&] {
        need(cfg, "cfg");
        need(key, "key");
        need(value, "value");
        cfg->cfg.set(key, value);
    });
}

capsdec_status capsdec_config_load(capsdec_config* cfg, const char* path) {
    return guarded([&] {
        need(cfg, "cfg");
        need(path, "path");
        cfg->cfg.load_file(path);
    });
}

capsdec_status capsdec_run(const capsdec_config* cfg, const char* command, char** report) {
    if (report) *report = nullptr;
    return guarded([&] {
        need(cfg, "cfg");
        need(command, "command");
        const std::string text = capsdec::run_command(command, cfg->cfg);
        if (report) *report = dup(text);
    });
}

capsdec_status capsdec_model_load(const char* path, capsdec_model** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = nullptr;
        *out = new capsdec_model(capsdec::Model::load(path));
    });
}

capsdec_status capsdec_model_save(const capsdec_model* model, const char* path) {
    return guarded([&] {
        need(model, "model");
        need(path, "path");
        model->model.save(path);
    });
}

void capsdec_model_free(capsdec_model* model) { delete model; }

capsdec_status capsdec_model_attach_precomputed(capsdec_model* model, const char* dir) {
    return guarded([&] {
        need(model, "model");
        need(dir, "dir");
        model->model.set_precomputed(
            std::make_shared<const capsdec::PrecomputedStore>(capsdec::PrecomputedStore::load_dir(dir)));
    });
}

capsdec_status capsdec_model_dims(const capsdec_model* model, size_t* capsules, size_t* capsule_dim) {
    return guarded([&] {
        need(model, "model");
        if (capsules) *capsules = model->model.config().capsules;
        if (capsule_dim) *capsule_dim = model->model.config().resolved_capsule_dim();
    });
}

capsdec_status capsdec_sense_vector(const capsdec_model* model, const char* sentence, size_t index, double* out,
                                    size_t out_len) {
    return guarded([&] {
        need(model, "model");
        need(out, "out");
        const std::size_t d = model->model.config().resolved_capsule_dim();
        if (out_len < d)
            capsdec::fail(capsdec::Error::Kind::ShapeMismatch,
                          "output buffer holds " + std::to_string(out_len) + " values, need " + std::to_string(d));
        const auto q = model->model.sense_representation(make_sentence(sentence, index)).q;
        std::memcpy(out, q.data(), d * sizeof(double));
    });
}

capsdec_status capsdec_match_probability(const capsdec_model* model, const char* sentence_a, size_t index_a,
                                         const char* sentence_b, size_t index_b, double* probability) {
    return guarded([&] {
        need(model, "model");
        need(probability, "probability");
        *probability = model->model.match_probability(make_sentence(sentence_a, index_a),
                                                      make_sentence(sentence_b, index_b));
    });
}

capsdec_status capsdec_inventory_load(const char* path, capsdec_inventory** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = nullptr;
        *out = new capsdec_inventory{capsdec::load_sense_inventory(path)};
    });
}

void capsdec_inventory_free(capsdec_inventory* inventory) { delete inventory; }

capsdec_status capsdec_predict_sense(const capsdec_model* model, const capsdec_inventory* inventory,
                                     const char* sentence, size_t index, const char* lemma, char** sense) {
    if (sense) *sense = nullptr;
    return guarded([&] {
        need(model, "model");
        need(inventory, "inventory");
        need(lemma, "lemma");
        need(sense, "sense");
        const auto id = capsdec::predict_sense(model->model, make_sentence(sentence, index), lemma, inventory->inv);
        *sense = dup(id);
    });
}

}  // extern "C"
