// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpnet/dataset.hpp"
#include "hpnet/model.hpp"
#include "hpnet/tensor_io.hpp"
#include "hpnet/train.hpp"

namespace hpnet {

inline std::string streams_to_string(const std::array<bool, 3>& s) {
    std::string out;
    const char* names[3] = {"p", "s", "m"};
    for (int i = 0; i < 3; ++i) {
        if (!s[i]) continue;
        if (!out.empty()) out += ",";
        out += names[i];
    }
    return out;
}

inline std::array<bool, 3> streams_from_string(const std::string& s) {
    std::array<bool, 3> out = {false, false, false};
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t end = s.find(',', start);
        if (end == std::string::npos) end = s.size();
        const std::string tok = s.substr(start, end - start);
        if (tok == "p")
            out[0] = true;
        else if (tok == "s")
            out[1] = true;
        else if (tok == "m")
            out[2] = true;
        else if (!tok.empty())
            throw validation_error("model.streams: unknown stream '" + tok + "' (use p,s,m)");
        start = end + 1;
    }
    if (!out[0] && !out[1] && !out[2])
        throw validation_error("model.streams must select at least one of p,s,m");
    return out;
}

// Directory layout: model.json + label_embeddings.hpt (full models) +
// params/<path>.hpt per named parameter.
struct SavedFullModel {
    HpNet model;
    std::vector<std::string> labels;
    Tensor f_text;
};

struct SavedSingleModel {
    GcnStackT<float> gcn;
    Modality modality = Modality::J;
    std::vector<std::size_t> channels;
    std::size_t num_classes = 0;
};

namespace detail {

template <class Refs>
void save_params(const std::filesystem::path& dir, const Refs& refs) {
    for (const auto& r : refs) save_hpt(dir / "params" / (r.path + ".hpt"), *r.tensor);
}

template <class Refs>
void load_params(const std::filesystem::path& dir, Refs& refs) {
    for (auto& r : refs) {
        Tensor t = load_hpt(dir / "params" / (r.path + ".hpt"));
        if (t.shape != r.tensor->shape)
            throw validation_error("model load: shape mismatch for parameter " + r.path);
        *r.tensor = std::move(t);
    }
}

} // namespace detail

inline void save_full_model(const std::filesystem::path& dir, HpNet& model,
                            const std::vector<std::string>& labels, const Tensor& f_text) {
    nlohmann::ordered_json j;
    j["kind"] = "full";
    j["gcn_channels"] = model.cfg.gcn_channels;
    j["num_classes"] = model.cfg.num_classes;
    j["text_dim"] = model.cfg.text_dim;
    j["video_dim"] = model.cfg.video_dim;
    j["streams"] = streams_to_string(model.cfg.streams);
    j["tau"] = model.cfg.tau;
    j["labels"] = labels;
    write_file_atomic(dir / "model.json", j.dump(2) + "\n");
    save_hpt(dir / "label_embeddings.hpt", f_text);
    detail::save_params(dir, model.collect_params());
}

inline void save_single_model(const std::filesystem::path& dir, GcnStackT<float>& gcn,
                              Modality modality, const std::vector<std::size_t>& channels,
                              std::size_t num_classes) {
    nlohmann::ordered_json j;
    j["kind"] = "single";
    j["modality"] = to_string(modality);
    j["gcn_channels"] = channels;
    j["num_classes"] = num_classes;
    write_file_atomic(dir / "model.json", j.dump(2) + "\n");
    auto refs = collect_stack(gcn);
    detail::save_params(dir, refs);
}

inline std::string model_kind(const std::filesystem::path& dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(dir / "model.json"));
        return j.at("kind").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw io_error("model.json parse failed: " + std::string(e.what()));
    }
}

inline SavedFullModel load_full_model(const std::filesystem::path& dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(dir / "model.json"));
    } catch (const nlohmann::json::exception& e) {
        throw io_error("model.json parse failed: " + std::string(e.what()));
    }
    SavedFullModel out;
    try {
        if (j.at("kind").get<std::string>() != "full")
            throw validation_error("model load: expected a full model");
        ModelConfig cfg;
        cfg.gcn_channels = j.at("gcn_channels").get<std::vector<std::size_t>>();
        cfg.num_classes = j.at("num_classes").get<std::size_t>();
        cfg.text_dim = j.at("text_dim").get<std::size_t>();
        cfg.video_dim = j.at("video_dim").get<std::size_t>();
        cfg.streams = streams_from_string(j.at("streams").get<std::string>());
        cfg.tau = j.at("tau").get<double>();
        out.model = HpNet(cfg);
        out.labels = j.at("labels").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw validation_error("model.json schema error: " + std::string(e.what()));
    }
    out.f_text = load_hpt(dir / "label_embeddings.hpt");
    if (out.f_text.ndim() != 2 || out.f_text.shape[0] != out.model.cfg.num_classes ||
        out.f_text.shape[1] != out.model.cfg.text_dim)
        throw validation_error("model load: label embedding shape mismatch");
    auto refs = out.model.collect_params();
    detail::load_params(dir, refs);
    return out;
}

inline SavedSingleModel load_single_model(const std::filesystem::path& dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(dir / "model.json"));
    } catch (const nlohmann::json::exception& e) {
        throw io_error("model.json parse failed: " + std::string(e.what()));
    }
    SavedSingleModel out;
    try {
        if (j.at("kind").get<std::string>() != "single")
            throw validation_error("model load: expected a single-stream model");
        out.modality = modality_from_string(j.at("modality").get<std::string>());
        out.channels = j.at("gcn_channels").get<std::vector<std::size_t>>();
        out.num_classes = j.at("num_classes").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw validation_error("model.json schema error: " + std::string(e.what()));
    }
    out.gcn = GcnStackT<float>(out.channels, out.num_classes);
    auto refs = collect_stack(out.gcn);
    detail::load_params(dir, refs);
    return out;
}

// Optional externally supplied label embeddings: .hpt [N x C] plus a JSON
// list fixing the label order. N must match the dataset's class count.
inline LabelEmbeddings load_label_embeddings(const std::filesystem::path& hpt_path,
                                             const std::filesystem::path& labels_path,
                                             std::size_t expected_classes) {
    LabelEmbeddings out;
    out.features = load_hpt(hpt_path);
    if (out.features.ndim() != 2)
        throw validation_error("label embeddings: expected [N,C] tensor");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(labels_path));
        out.labels = j.get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw validation_error("label order file: " + std::string(e.what()));
    }
    if (out.labels.size() != out.features.shape[0])
        throw validation_error("label embeddings: label count does not match rows");
    if (out.labels.size() != expected_classes)
        throw validation_error("label embeddings: row count " +
                               std::to_string(out.labels.size()) + " != dataset classes " +
                               std::to_string(expected_classes));
    ensure_finite(out.features, "label embeddings");
    return out;
}

// score dump JSONL: one {"id","label","scores"} object per line
inline std::string dumps_to_jsonl(const std::vector<ScoreDumpEntry>& dumps) {
    std::string out;
    for (const auto& e : dumps) {
        nlohmann::ordered_json j;
        j["id"] = e.id;
        j["label"] = e.label;
        j["scores"] = e.scores;
        out += j.dump();
        out += "\n";
    }
    return out;
}

inline std::vector<ScoreDumpEntry> dumps_from_jsonl(const std::string& text,
                                                    const std::string& origin = "<memory>") {
    std::vector<ScoreDumpEntry> out;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(start, end - start);
        start = end + 1;
        if (line.empty()) continue;
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            out.push_back({j.at("id").get<std::string>(), j.at("label").get<int>(),
                           j.at("scores").get<std::vector<float>>()});
        } catch (const nlohmann::json::exception& e) {
            throw io_error("score dump '" + origin + "': " + e.what());
        }
    }
    if (out.empty()) throw validation_error("score dump '" + origin + "' is empty");
    return out;
}

inline nlohmann::ordered_json metrics_to_json(const Metrics& m) {
    nlohmann::ordered_json j;
    j["top1"] = m.top1;
    j["mean_per_class"] = m.mean_per_class;
    nlohmann::ordered_json per;
    for (const auto& [label, acc] : m.per_class) per[std::to_string(label)] = acc;
    j["per_class"] = per;
    return j;
}

} // namespace hpnet
