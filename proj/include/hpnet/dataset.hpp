// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpnet/fpm.hpp"
#include "hpnet/parallel.hpp"
#include "hpnet/skeleton.hpp"
#include "hpnet/smclm.hpp"
#include "hpnet/synthgen.hpp"
#include "hpnet/tensor_io.hpp"

namespace hpnet {

struct ManifestEntry {
    std::string id;
    int label = 0;
    std::string split; // "train" | "test"
    std::vector<std::string> heatmaps; // frame-major, then scale
    std::string video_feature;
    std::string gt_poses;
};

struct Manifest {
    SynthConfig config;
    std::vector<std::vector<int>> joint_channels; // per scale
    std::vector<ManifestEntry> samples;
    std::filesystem::path root; // directory holding the manifest
};

// Deterministic per-class split: samples of each class are ranked by the
// 64-bit hash of their id and the first two thirds go to train. This keeps
// the 2:1 ratio within one sample per class while staying a pure function
// of the ids.
inline std::vector<std::string> class_splits(const SynthConfig& cfg, int class_id) {
    std::vector<std::pair<std::uint64_t, int>> ranked;
    ranked.reserve(static_cast<std::size_t>(cfg.samples_per_class));
    for (int i = 0; i < cfg.samples_per_class; ++i)
        ranked.emplace_back(hash64(sample_id(class_id, i)), i);
    std::sort(ranked.begin(), ranked.end());
    const int train_count = (2 * cfg.samples_per_class + 1) / 3;
    std::vector<std::string> out(static_cast<std::size_t>(cfg.samples_per_class), "test");
    for (int r = 0; r < train_count; ++r)
        out[static_cast<std::size_t>(ranked[static_cast<std::size_t>(r)].second)] = "train";
    return out;
}

// Write the full dataset: one .hpt per tensor plus a JSON manifest. Every
// byte is a pure function of cfg.
inline std::filesystem::path generate_dataset(const SynthConfig& cfg,
                                              const std::filesystem::path& out_dir,
                                              int threads = 1) {
    namespace fs = std::filesystem;
    cfg.validate();
    const MixingSet mix = make_mixing(cfg);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw io_error("cannot create output directory: " + out_dir.string());

    const int total = cfg.num_classes * cfg.samples_per_class;
    std::vector<ManifestEntry> entries(static_cast<std::size_t>(total));
    std::vector<std::vector<std::string>> splits;
    for (int c = 0; c < cfg.num_classes; ++c) splits.push_back(class_splits(cfg, c));

    parallel_for(static_cast<std::size_t>(total), threads, [&](std::size_t idx) {
        const int c = static_cast<int>(idx) / cfg.samples_per_class;
        const int i = static_cast<int>(idx) % cfg.samples_per_class;
        SynthSample sample = make_sample(cfg, mix, c, i);
        ManifestEntry e;
        e.id = sample.id;
        e.label = sample.label;
        e.split = splits[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)];
        const std::string dir = "samples/" + sample.id;
        for (std::size_t t = 0; t < sample.heatmaps.size(); ++t)
            for (std::size_t s = 0; s < sample.heatmaps[t].size(); ++s) {
                char name[64];
                std::snprintf(name, sizeof(name), "%s/hm_t%03zu_s%zu.hpt", dir.c_str(), t, s);
                save_hpt(out_dir / name, sample.heatmaps[t][s]);
                e.heatmaps.push_back(name);
            }
        e.video_feature = dir + "/video.hpt";
        save_hpt(out_dir / e.video_feature, sample.video_feature);
        e.gt_poses = dir + "/gt_poses.hpt";
        save_hpt(out_dir / e.gt_poses, sample.gt_poses);
        entries[idx] = std::move(e);
    });

    nlohmann::ordered_json manifest;
    manifest["config"] = cfg.to_json();
    auto jc = nlohmann::ordered_json::array();
    for (const auto& dom : mix.dominant) jc.push_back(dom);
    manifest["joint_channels"] = jc;
    auto samples = nlohmann::ordered_json::array();
    for (const auto& e : entries) {
        nlohmann::ordered_json je;
        je["id"] = e.id;
        je["label"] = e.label;
        je["split"] = e.split;
        je["heatmaps"] = e.heatmaps;
        je["video_feature"] = e.video_feature;
        je["gt_poses"] = e.gt_poses;
        samples.push_back(je);
    }
    manifest["samples"] = samples;
    const fs::path manifest_path = out_dir / "manifest.json";
    write_file_atomic(manifest_path, manifest.dump(2) + "\n");
    return manifest_path;
}

inline Manifest load_manifest(const std::filesystem::path& manifest_path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw io_error("manifest parse failed: " + std::string(e.what()));
    }
    Manifest m;
    m.root = manifest_path.parent_path();
    try {
        m.config = SynthConfig::from_json(j.at("config"));
        for (const auto& dom : j.at("joint_channels")) m.joint_channels.push_back(dom.get<std::vector<int>>());
        for (const auto& je : j.at("samples")) {
            ManifestEntry e;
            e.id = je.at("id").get<std::string>();
            e.label = je.at("label").get<int>();
            e.split = je.at("split").get<std::string>();
            e.heatmaps = je.at("heatmaps").get<std::vector<std::string>>();
            e.video_feature = je.at("video_feature").get<std::string>();
            e.gt_poses = je.at("gt_poses").get<std::string>();
            if (e.split != "train" && e.split != "test")
                throw validation_error("manifest: split must be train|test");
            m.samples.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw validation_error("manifest schema error: " + std::string(e.what()));
    }
    return m;
}

// One sample after feedback pooling, the unit the trainer consumes. Sequences
// are single-body; a multi-person extension would add a body axis ahead of
// the joint axis.
struct PooledSample {
    std::string id;
    int label = 0;
    std::string split;
    Tensor pooled; // [T, n, c]
    Tensor poses;  // [T, n, 2] decoded integer coordinates (reference scale)
    Tensor video;  // [C_u]
    std::size_t ref_h = 0, ref_w = 0; // reference-scale grid for pose normalization
};

inline std::vector<HeatmapStack> load_heatmap_frames(const Manifest& m, const ManifestEntry& e) {
    const std::size_t num_scales = m.config.scales.size();
    if (e.heatmaps.size() != static_cast<std::size_t>(m.config.frames) * num_scales)
        throw validation_error("manifest: heatmap path count mismatch for sample " + e.id);
    std::vector<HeatmapStack> frames(static_cast<std::size_t>(m.config.frames));
    for (std::size_t t = 0; t < frames.size(); ++t)
        for (std::size_t s = 0; s < num_scales; ++s)
            frames[t].push_back(load_hpt(m.root / e.heatmaps[t * num_scales + s]));
    return frames;
}

// Pool every sample of an on-disk dataset.
inline std::vector<PooledSample> pool_dataset(const Manifest& m, const PoolConfig& pool_cfg,
                                              int threads = 1) {
    pool_cfg.validate();
    std::vector<PooledSample> out(m.samples.size());
    parallel_for(m.samples.size(), threads, [&](std::size_t i) {
        const auto& e = m.samples[i];
        const auto frames = load_heatmap_frames(m, e);
        PoolSequenceResult r = pool_sequence(frames, pool_cfg, m.joint_channels);
        const auto& ref = m.config.scales[static_cast<std::size_t>(pool_cfg.reference_scale_index)];
        out[i] = PooledSample{e.id,
                              e.label,
                              e.split,
                              std::move(r.pooled),
                              std::move(r.poses),
                              load_hpt(m.root / e.video_feature),
                              ref.h,
                              ref.w};
    });
    return out;
}

// Generate + pool without touching the filesystem; byte-for-byte the same
// tensors the disk path produces.
inline std::vector<PooledSample> pool_dataset_in_memory(const SynthConfig& cfg,
                                                        const PoolConfig& pool_cfg,
                                                        int threads = 1) {
    cfg.validate();
    pool_cfg.validate();
    const MixingSet mix = make_mixing(cfg);
    const int total = cfg.num_classes * cfg.samples_per_class;
    std::vector<std::vector<std::string>> splits;
    for (int c = 0; c < cfg.num_classes; ++c) splits.push_back(class_splits(cfg, c));
    std::vector<PooledSample> out(static_cast<std::size_t>(total));
    parallel_for(static_cast<std::size_t>(total), threads, [&](std::size_t idx) {
        const int c = static_cast<int>(idx) / cfg.samples_per_class;
        const int i = static_cast<int>(idx) % cfg.samples_per_class;
        SynthSample sample = make_sample(cfg, mix, c, i);
        PoolSequenceResult r = pool_sequence(sample.heatmaps, pool_cfg, mix.dominant);
        const auto& ref = cfg.scales[static_cast<std::size_t>(pool_cfg.reference_scale_index)];
        out[idx] = PooledSample{sample.id,
                                sample.label,
                                splits[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)],
                                std::move(r.pooled),
                                std::move(r.poses),
                                std::move(sample.video_feature),
                                ref.h,
                                ref.w};
    });
    return out;
}

// The four single-stream modalities plus the raw decoded-pose baseline.
enum class Modality { J, B, JM, BM, RawPose };

inline Modality modality_from_string(const std::string& s) {
    if (s == "j") return Modality::J;
    if (s == "b") return Modality::B;
    if (s == "jm") return Modality::JM;
    if (s == "bm") return Modality::BM;
    if (s == "pose") return Modality::RawPose;
    throw validation_error("modality must be one of j|b|jm|bm|pose, got '" + s + "'");
}

inline const char* to_string(Modality m) {
    switch (m) {
        case Modality::J: return "j";
        case Modality::B: return "b";
        case Modality::JM: return "jm";
        case Modality::BM: return "bm";
        case Modality::RawPose: return "pose";
    }
    return "?";
}

inline Tensor modality_input(const PooledSample& sample, Modality m, const SkeletonGraph& g) {
    switch (m) {
        case Modality::J: return sample.pooled;
        case Modality::B: return spatial_transform(sample.pooled, g);
        case Modality::JM: return motion_transform(sample.pooled);
        case Modality::BM: return motion_transform(spatial_transform(sample.pooled, g));
        case Modality::RawPose: {
            // centered normalized coordinates; keeps the pose stream on the
            // same numeric scale as the pooled features
            if (sample.ref_h < 2 || sample.ref_w < 2)
                throw validation_error("modality_input: missing reference grid dims");
            Tensor out = sample.poses;
            const std::size_t t_len = out.shape[0], n = out.shape[1];
            for (std::size_t t = 0; t < t_len; ++t)
                for (std::size_t j = 0; j < n; ++j) {
                    out.at(t, j, 0) = out.at(t, j, 0) / static_cast<float>(sample.ref_w - 1) - 0.5f;
                    out.at(t, j, 1) = out.at(t, j, 1) / static_cast<float>(sample.ref_h - 1) - 0.5f;
                }
            return out;
        }
    }
    throw validation_error("unknown modality");
}

} // namespace hpnet
