// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpnet/dataset.hpp"
#include "hpnet/model.hpp"
#include "hpnet/model_io.hpp"
#include "hpnet/synthgen.hpp"
#include "hpnet/train.hpp"

namespace hpnet {

// One JSON document drives every command. Sections map onto the module
// configs; unknown keys are rejected everywhere so typos fail loudly before
// any work starts.
struct RunConfig {
    SynthConfig synth;
    PoolConfig pool;

    // model section
    std::vector<std::size_t> gcn_channels = {96, 96, 128, 128};
    std::size_t text_dim = 64;
    std::string kind = "full";   // "full" | "single"
    std::string modality = "j";  // single-stream input: j|b|jm|bm|pose
    std::array<bool, 3> streams = {true, true, true};
    std::uint64_t label_seed = 42;

    TrainConfig train;
    LossWeights loss;
    double tau = 0.1;

    std::string data_path;
    std::string out_path;

    void validate() const {
        synth.validate();
        pool.validate();
        train.validate();
        loss.validate();
        if (kind != "full" && kind != "single")
            throw validation_error("model.kind must be 'full' or 'single'");
        modality_from_string(modality);
        if (gcn_channels.empty()) throw validation_error("model.gcn_channels must be non-empty");
        if (text_dim == 0) throw validation_error("model.text_dim must be positive");
        if (!(tau > 0)) throw validation_error("fusion.tau must be positive");
    }

    ModelConfig model_config(std::size_t num_classes, std::size_t video_dim) const {
        ModelConfig cfg;
        cfg.gcn_channels = gcn_channels;
        cfg.num_classes = num_classes;
        cfg.text_dim = text_dim;
        cfg.video_dim = video_dim;
        cfg.streams = streams;
        cfg.tau = tau;
        return cfg;
    }

    std::vector<std::string> default_labels() const {
        std::vector<std::string> labels;
        for (int i = 0; i < synth.num_classes; ++i) labels.push_back("class_" + std::to_string(i));
        return labels;
    }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::string& section,
                           const std::set<std::string>& known) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw validation_error("config: unknown key '" +
                                   (section.empty() ? it.key() : section + "." + it.key()) + "'");
}

template <class T>
void get_if(const nlohmann::json& j, const char* key, T& out, const std::string& section) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw validation_error("config: bad value type for '" + section + "." + key + "'");
    }
}

} // namespace detail

inline RunConfig runconfig_from_json(const nlohmann::json& j) {
    RunConfig cfg;
    detail::reject_unknown(j, "", {"synth", "pool", "model", "train", "loss", "fusion", "paths"});

    if (j.contains("synth")) {
        const auto& s = j.at("synth");
        detail::reject_unknown(s, "synth",
                               {"num_classes", "samples_per_class", "frames", "joints", "scales",
                                "gaussian_sigma", "noise_std", "video_dim", "seed"});
        detail::get_if(s, "num_classes", cfg.synth.num_classes, "synth");
        detail::get_if(s, "samples_per_class", cfg.synth.samples_per_class, "synth");
        detail::get_if(s, "frames", cfg.synth.frames, "synth");
        detail::get_if(s, "joints", cfg.synth.joints, "synth");
        detail::get_if(s, "gaussian_sigma", cfg.synth.gaussian_sigma, "synth");
        detail::get_if(s, "noise_std", cfg.synth.noise_std, "synth");
        detail::get_if(s, "video_dim", cfg.synth.video_dim, "synth");
        detail::get_if(s, "seed", cfg.synth.seed, "synth");
        if (s.contains("scales")) {
            cfg.synth.scales.clear();
            for (const auto& sc : s.at("scales")) {
                if (!sc.is_array() || sc.size() != 3)
                    throw validation_error("config: synth.scales entries must be [h,w,c]");
                cfg.synth.scales.push_back({sc[0].get<std::size_t>(), sc[1].get<std::size_t>(),
                                            sc[2].get<std::size_t>()});
            }
        }
    }
    if (j.contains("pool")) {
        const auto& p = j.at("pool");
        detail::reject_unknown(p, "pool", {"region", "reducer", "reference_scale", "pool_scale"});
        detail::get_if(p, "region", cfg.pool.region, "pool");
        if (p.contains("reducer"))
            cfg.pool.reducer = reducer_from_string(p.at("reducer").get<std::string>());
        detail::get_if(p, "reference_scale", cfg.pool.reference_scale_index, "pool");
        detail::get_if(p, "pool_scale", cfg.pool.pool_scale_index, "pool");
    }
    if (j.contains("model")) {
        const auto& m = j.at("model");
        detail::reject_unknown(
            m, "model", {"gcn_channels", "text_dim", "kind", "modality", "streams", "label_seed"});
        detail::get_if(m, "gcn_channels", cfg.gcn_channels, "model");
        detail::get_if(m, "text_dim", cfg.text_dim, "model");
        detail::get_if(m, "kind", cfg.kind, "model");
        detail::get_if(m, "modality", cfg.modality, "model");
        detail::get_if(m, "label_seed", cfg.label_seed, "model");
        if (m.contains("streams"))
            cfg.streams = streams_from_string(m.at("streams").get<std::string>());
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        detail::reject_unknown(t, "train",
                               {"epochs", "batch_size", "lr", "weight_decay", "beta1", "beta2",
                                "seed", "threads"});
        detail::get_if(t, "epochs", cfg.train.epochs, "train");
        detail::get_if(t, "batch_size", cfg.train.batch_size, "train");
        detail::get_if(t, "lr", cfg.train.lr, "train");
        detail::get_if(t, "weight_decay", cfg.train.weight_decay, "train");
        detail::get_if(t, "beta1", cfg.train.beta1, "train");
        detail::get_if(t, "beta2", cfg.train.beta2, "train");
        detail::get_if(t, "seed", cfg.train.seed, "train");
        detail::get_if(t, "threads", cfg.train.threads, "train");
    }
    if (j.contains("loss")) {
        const auto& l = j.at("loss");
        detail::reject_unknown(l, "loss", {"lambda_p", "lambda_s", "lambda_m"});
        detail::get_if(l, "lambda_p", cfg.loss.lambda_p, "loss");
        detail::get_if(l, "lambda_s", cfg.loss.lambda_s, "loss");
        detail::get_if(l, "lambda_m", cfg.loss.lambda_m, "loss");
    }
    if (j.contains("fusion")) {
        const auto& f = j.at("fusion");
        detail::reject_unknown(f, "fusion", {"tau"});
        detail::get_if(f, "tau", cfg.tau, "fusion");
    }
    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        detail::reject_unknown(p, "paths", {"data", "out"});
        detail::get_if(p, "data", cfg.data_path, "paths");
        detail::get_if(p, "out", cfg.out_path, "paths");
    }
    cfg.validate();
    return cfg;
}

// `--set section.key=value` override; the value parses as JSON when it can
// (numbers, lists, booleans) and falls back to a plain string.
inline void apply_override(nlohmann::json& doc, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw validation_error("--set expects section.key=value, got '" + assignment + "'");
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    const std::size_t dot = path.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 >= path.size())
        throw validation_error("--set expects section.key=value, got '" + assignment + "'");
    nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
    if (parsed.is_discarded()) parsed = value;
    doc[path.substr(0, dot)][path.substr(dot + 1)] = parsed;
}

} // namespace hpnet
