// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpnet/fpm.hpp"
#include "hpnet/rng.hpp"
#include "hpnet/tensor.hpp"

namespace hpnet {

struct ScaleSpec {
    std::size_t h = 0, w = 0, c = 0;
};

// Seeded synthetic benchmark configuration. Scale 0 is the reference frame
// for ground-truth coordinates and must be the largest; the default set
// halves resolution and grows channels per scale, with the middle scale at
// [96, 32, 24].
struct SynthConfig {
    int num_classes = 5;
    int samples_per_class = 30;
    int frames = 12;
    int joints = 17;
    std::vector<ScaleSpec> scales = {{64, 48, 32}, {32, 24, 96}, {16, 12, 192}};
    double gaussian_sigma = 1.5; // in pixels of the largest scale
    double noise_std = 0.05;
    int video_dim = 64; // C_u
    std::uint64_t seed = 1234;

    void validate() const {
        if (num_classes < 2) throw validation_error("synth.num_classes must be >= 2");
        if (samples_per_class < 1) throw validation_error("synth.samples_per_class must be >= 1");
        if (frames < 2) throw validation_error("synth.frames must be >= 2");
        if (joints < 2) throw validation_error("synth.joints must be >= 2");
        if (scales.empty()) throw validation_error("synth.scales must be non-empty");
        for (const auto& s : scales) {
            if (s.h == 0 || s.w == 0 || s.c == 0)
                throw validation_error("synth.scales entries must be positive [h,w,c]");
            if (s.h > scales[0].h || s.w > scales[0].w)
                throw validation_error("synth.scales[0] must be the largest scale");
            if (s.c < static_cast<std::size_t>(joints))
                throw validation_error(
                    "synth.scales channel count must be >= joints (mixture channels need a "
                    "dominant channel per joint)");
        }
        if (!(gaussian_sigma > 0)) throw validation_error("synth.gaussian_sigma must be positive");
        if (noise_std < 0) throw validation_error("synth.noise_std must be non-negative");
        if (video_dim < 1) throw validation_error("synth.video_dim must be >= 1");
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["num_classes"] = num_classes;
        j["samples_per_class"] = samples_per_class;
        j["frames"] = frames;
        j["joints"] = joints;
        auto arr = nlohmann::ordered_json::array();
        for (const auto& s : scales) arr.push_back({s.h, s.w, s.c});
        j["scales"] = arr;
        j["gaussian_sigma"] = gaussian_sigma;
        j["noise_std"] = noise_std;
        j["video_dim"] = video_dim;
        j["seed"] = seed;
        return j;
    }

    static SynthConfig from_json(const nlohmann::json& j) {
        SynthConfig cfg;
        cfg.num_classes = j.at("num_classes").get<int>();
        cfg.samples_per_class = j.at("samples_per_class").get<int>();
        cfg.frames = j.at("frames").get<int>();
        cfg.joints = j.at("joints").get<int>();
        cfg.scales.clear();
        for (const auto& s : j.at("scales")) {
            if (!s.is_array() || s.size() != 3)
                throw validation_error("synth.scales entries must be [h,w,c]");
            cfg.scales.push_back(
                {s[0].get<std::size_t>(), s[1].get<std::size_t>(), s[2].get<std::size_t>()});
        }
        cfg.gaussian_sigma = j.at("gaussian_sigma").get<double>();
        cfg.noise_std = j.at("noise_std").get<double>();
        cfg.video_dim = j.at("video_dim").get<int>();
        cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.validate();
        return cfg;
    }
};

// continuous joint trajectories, [T x n x 2] storing (x, y) in the
// largest-scale frame
using PoseSequence = Tensor;

namespace synth_detail {

// COCO-17 rest pose in the default 64x48 reference frame, (x, y)
inline const float kCoco17Rest[17][2] = {
    {24.0f, 10.0f}, {26.0f, 8.5f},  {22.0f, 8.5f},  {28.0f, 9.5f},  {20.0f, 9.5f},
    {30.0f, 18.0f}, {18.0f, 18.0f}, {33.0f, 27.0f}, {15.0f, 27.0f}, {35.0f, 35.0f},
    {13.0f, 35.0f}, {28.0f, 36.0f}, {20.0f, 36.0f}, {28.0f, 47.0f}, {20.0f, 47.0f},
    {28.0f, 57.0f}, {20.0f, 57.0f}};

inline void rest_pose(const SynthConfig& cfg, std::vector<float>& xs, std::vector<float>& ys) {
    const std::size_t n = static_cast<std::size_t>(cfg.joints);
    const double w0 = static_cast<double>(cfg.scales[0].w);
    const double h0 = static_cast<double>(cfg.scales[0].h);
    xs.resize(n);
    ys.resize(n);
    if (n == 17) {
        const double sx = w0 / 48.0, sy = h0 / 64.0;
        for (std::size_t j = 0; j < n; ++j) {
            xs[j] = static_cast<float>(kCoco17Rest[j][0] * sx);
            ys[j] = static_cast<float>(kCoco17Rest[j][1] * sy);
        }
    } else {
        // generic joint layout on an ellipse around the grid center
        for (std::size_t j = 0; j < n; ++j) {
            const double a = 6.283185307179586 * static_cast<double>(j) / static_cast<double>(n);
            xs[j] = static_cast<float>(w0 * (0.5 + 0.3 * std::cos(a + 0.5)));
            ys[j] = static_cast<float>(h0 * (0.5 + 0.35 * std::sin(a + 0.5)));
        }
    }
}

// per-class motion pattern: which joints move, at what frequency (whole
// cycles per sequence), amplitude, phase, and a small postural offset that
// stays sub-pixel at the halved scales (integer pose decoding quantizes it
// away; pooled heatmap values keep it)
struct MotionPattern {
    int freq = 1;
    double amplitude = 2.0;
    double base_phase = 0.0;
    double posture = 1.5;
};

inline MotionPattern class_pattern(int class_id, const SynthConfig& cfg) {
    MotionPattern p;
    const int max_freq = std::max(1, cfg.frames / 2 - 1);
    p.freq = 1 + class_id % max_freq;
    p.amplitude = 2.0 + 0.5 * static_cast<double>(class_id % 3);
    p.base_phase = 0.9 * static_cast<double>(class_id);
    return p;
}

inline bool joint_postured(int class_id, int joint) { return (joint * 3 + class_id) % 4 != 0; }

inline bool joint_moves(int class_id, int joint, int n) {
    if (n == 17) {
        // curated COCO subsets: arms, legs, head, left side, right side
        static const std::vector<int> subsets[5] = {{7, 8, 9, 10},
                                                    {13, 14, 15, 16},
                                                    {0, 1, 2, 3, 4},
                                                    {5, 7, 9, 11, 13, 15},
                                                    {6, 8, 10, 12, 14, 16}};
        const auto& sub = subsets[class_id % 5];
        for (int j : sub)
            if (j == joint) return true;
        return false;
    }
    return (joint + class_id) % 3 != 0;
}

} // namespace synth_detail

// Deterministic class-separable trajectory: a per-class sinusoidal pattern
// over a joint subset on the rest pose, plus small seeded jitter. The same
// (cfg, class, rng seed) always reproduces the same sequence.
inline PoseSequence generate_motion(int class_id, const SynthConfig& cfg, Rng& rng) {
    cfg.validate();
    if (class_id < 0 || class_id >= cfg.num_classes)
        throw validation_error("generate_motion: class_id out of range");
    const std::size_t t_len = static_cast<std::size_t>(cfg.frames);
    const std::size_t n = static_cast<std::size_t>(cfg.joints);
    std::vector<float> rx, ry;
    synth_detail::rest_pose(cfg, rx, ry);
    const auto pat = synth_detail::class_pattern(class_id, cfg);
    const double phase_jitter = rng.uniform(-0.3, 0.3);

    const double xmin = 1.0, xmax = static_cast<double>(cfg.scales[0].w) - 2.0;
    const double ymin = 1.0, ymax = static_cast<double>(cfg.scales[0].h) - 2.0;
    PoseSequence poses({t_len, n, 2});
    for (std::size_t t = 0; t < t_len; ++t) {
        const double phase = 6.283185307179586 * pat.freq * static_cast<double>(t) /
                             static_cast<double>(t_len);
        for (std::size_t j = 0; j < n; ++j) {
            double x = rx[j], y = ry[j];
            if (synth_detail::joint_moves(class_id, static_cast<int>(j), cfg.joints)) {
                const double theta = 2.399963229728653 * static_cast<double>(j) + pat.base_phase;
                const double s = std::sin(phase + 0.7 * static_cast<double>(j) + pat.base_phase +
                                          phase_jitter);
                x += pat.amplitude * std::cos(theta) * s;
                y += pat.amplitude * std::sin(theta) * s;
            }
            if (synth_detail::joint_postured(class_id, static_cast<int>(j))) {
                const double tp = 1.7 * static_cast<double>(j) + 2.1 * class_id;
                x += pat.posture * std::cos(tp);
                y += pat.posture * std::sin(tp);
            }
            x += 0.25 * rng.normal();
            y += 0.25 * rng.normal();
            poses.at(t, j, 0) = static_cast<float>(std::min(std::max(x, xmin), xmax));
            poses.at(t, j, 1) = static_cast<float>(std::min(std::max(y, ymin), ymax));
        }
    }
    return poses;
}

// Per-scale channel mixing. Row k of `weights[s]` holds the non-negative,
// row-normalized joint weights of channel k; `dominant[s][j]` is the channel
// where joint j carries the largest weight.
struct MixingSet {
    std::vector<Tensor> weights;            // per scale, [c_s x n]
    std::vector<std::vector<int>> dominant; // per scale, n channel indices
};

// Fixed per run: a pure function of cfg (seeded from cfg.seed), shared by
// every sample so channels mean the same thing across the dataset.
inline MixingSet make_mixing(const SynthConfig& cfg) {
    cfg.validate();
    const std::size_t n = static_cast<std::size_t>(cfg.joints);
    MixingSet mix;
    for (std::size_t s = 0; s < cfg.scales.size(); ++s) {
        const std::size_t c = cfg.scales[s].c;
        Rng rng(derive_seed(cfg.seed, "mixing:" + std::to_string(s)));
        // choose n distinct dominant channels via partial Fisher-Yates
        std::vector<int> perm(c);
        for (std::size_t i = 0; i < c; ++i) perm[i] = static_cast<int>(i);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k = i + static_cast<std::size_t>(rng.below(c - i));
            std::swap(perm[i], perm[k]);
        }
        std::vector<int> owner(c, -1); // joint owning channel k, if any
        std::vector<int> dom(n);
        for (std::size_t j = 0; j < n; ++j) {
            dom[j] = perm[j];
            owner[static_cast<std::size_t>(perm[j])] = static_cast<int>(j);
        }
        // Owner rows put a 3.0 pre-normalization weight on their joint against
        // <= 0.05 elsewhere; rows without an owner are broad mixtures in
        // [0.2, 1.0]. After row normalization the owner entry always exceeds
        // every other weight in its column, so argmax over channels recovers
        // the dominant channel for any joint count.
        Tensor w({c, n});
        for (std::size_t k = 0; k < c; ++k) {
            float row_sum = 0.0f;
            for (std::size_t j = 0; j < n; ++j) {
                float v;
                if (owner[k] == static_cast<int>(j))
                    v = 3.0f;
                else if (owner[k] >= 0)
                    v = static_cast<float>(0.01 + 0.04 * rng.uniform());
                else
                    v = static_cast<float>(0.2 + 0.8 * rng.uniform());
                w.at(k, j) = v;
                row_sum += v;
            }
            for (std::size_t j = 0; j < n; ++j) w.at(k, j) /= row_sum;
        }
        mix.weights.push_back(std::move(w));
        mix.dominant.push_back(std::move(dom));
    }
    return mix;
}

// Render one frame's multi-scale stacks. Each channel is the mixing-weighted
// sum of per-joint Gaussians (sigma scales with the width ratio), plus
// uniform noise in [0, noise_std]; values stay within [0, 1 + noise_std].
inline std::vector<HeatmapStack> render_heatmaps(const PoseSequence& poses,
                                                 const SynthConfig& cfg, const MixingSet& mix,
                                                 Rng& rng) {
    cfg.validate();
    if (poses.ndim() != 3 || poses.shape[2] != 2)
        throw validation_error("render_heatmaps: poses must be [T,n,2]");
    const std::size_t t_len = poses.shape[0], n = poses.shape[1];
    if (n != static_cast<std::size_t>(cfg.joints))
        throw validation_error("render_heatmaps: joint count mismatch");
    const double w0 = static_cast<double>(cfg.scales[0].w);
    const double h0 = static_cast<double>(cfg.scales[0].h);

    std::vector<HeatmapStack> frames(t_len);
    std::vector<float> gauss; // per-joint Gaussian values within its support box
    for (std::size_t t = 0; t < t_len; ++t) {
        for (std::size_t s = 0; s < cfg.scales.size(); ++s) {
            const auto& sc = cfg.scales[s];
            const int h = static_cast<int>(sc.h), w = static_cast<int>(sc.w);
            const double ratio_x = static_cast<double>(sc.w) / w0;
            const double ratio_y = static_cast<double>(sc.h) / h0;
            const double sigma = cfg.gaussian_sigma * ratio_x;
            const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
            const int rad = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
            Tensor map({sc.c, sc.h, sc.w});
            for (std::size_t j = 0; j < n; ++j) {
                const double cx = static_cast<double>(poses.at(t, j, 0)) * ratio_x;
                const double cy = static_cast<double>(poses.at(t, j, 1)) * ratio_y;
                const int x0 = std::max(0, static_cast<int>(std::floor(cx)) - rad);
                const int x1 = std::min(w - 1, static_cast<int>(std::floor(cx)) + rad);
                const int y0 = std::max(0, static_cast<int>(std::floor(cy)) - rad);
                const int y1 = std::min(h - 1, static_cast<int>(std::floor(cy)) + rad);
                gauss.assign(static_cast<std::size_t>((y1 - y0 + 1) * (x1 - x0 + 1)), 0.0f);
                std::size_t gi = 0;
                for (int yy = y0; yy <= y1; ++yy)
                    for (int xx = x0; xx <= x1; ++xx, ++gi) {
                        const double dx = static_cast<double>(xx) - cx;
                        const double dy = static_cast<double>(yy) - cy;
                        gauss[gi] =
                            static_cast<float>(std::exp(-(dx * dx + dy * dy) * inv_two_sigma_sq));
                    }
                for (std::size_t k = 0; k < sc.c; ++k) {
                    const float wkj = mix.weights[s].at(k, j);
                    float* plane = &map.data[k * sc.h * sc.w];
                    gi = 0;
                    for (int yy = y0; yy <= y1; ++yy)
                        for (int xx = x0; xx <= x1; ++xx, ++gi)
                            plane[yy * w + xx] += wkj * gauss[gi];
                }
            }
            if (cfg.noise_std > 0) {
                for (auto& v : map.data)
                    v += static_cast<float>(cfg.noise_std * rng.uniform());
            }
            frames[t].push_back(std::move(map));
        }
    }
    return frames;
}

// Stand-in video feature: a class-keyed direction plus a projection of
// per-joint motion statistics plus seeded noise. The class signal is
// deliberately weaker than what the pooled features carry.
inline Tensor make_video_feature(const PoseSequence& poses, int label, const SynthConfig& cfg,
                                 Rng& rng) {
    cfg.validate();
    const std::size_t t_len = poses.shape[0], n = poses.shape[1];
    const std::size_t cu = static_cast<std::size_t>(cfg.video_dim);

    Rng dir_rng(derive_seed(cfg.seed, "video_dir:" + std::to_string(label)));
    Tensor feature({cu});
    double norm_sq = 0.0;
    for (std::size_t k = 0; k < cu; ++k) {
        feature[k] = static_cast<float>(dir_rng.normal());
        norm_sq += static_cast<double>(feature[k]) * feature[k];
    }
    const float inv_norm = static_cast<float>(1.0 / std::sqrt(norm_sq));
    for (auto& v : feature.data) v *= inv_norm;

    // mean per-joint speed, projected through a seeded map
    std::vector<double> speed(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t t = 0; t + 1 < t_len; ++t)
            speed[j] += std::abs(poses.at(t + 1, j, 0) - poses.at(t, j, 0)) +
                        std::abs(poses.at(t + 1, j, 1) - poses.at(t, j, 1));
        speed[j] /= static_cast<double>(t_len - 1);
    }
    Rng proj_rng(derive_seed(cfg.seed, "video_proj"));
    const double proj_scale = 0.3 / std::sqrt(static_cast<double>(n));
    for (std::size_t k = 0; k < cu; ++k) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += proj_rng.normal() * speed[j];
        feature[k] += static_cast<float>(proj_scale * acc);
    }
    if (cfg.noise_std > 0)
        for (auto& v : feature.data) v += static_cast<float>(cfg.noise_std * rng.normal());
    ensure_finite(feature, "make_video_feature");
    return feature;
}

struct SynthSample {
    std::string id;
    int label = 0;
    PoseSequence gt_poses;                 // [T, n, 2]
    std::vector<HeatmapStack> heatmaps;    // per frame, per scale
    Tensor video_feature;                  // [C_u]
};

inline std::string sample_id(int class_id, int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "c%d_s%03d", class_id, index);
    return buf;
}

// Fully deterministic per-sample generation: the sample draws its own rng
// from (cfg.seed, id), so generation order or parallelism cannot change it.
inline SynthSample make_sample(const SynthConfig& cfg, const MixingSet& mix, int class_id,
                               int index) {
    SynthSample sample;
    sample.id = sample_id(class_id, index);
    sample.label = class_id;
    Rng rng(derive_seed(cfg.seed, "sample:" + sample.id));
    sample.gt_poses = generate_motion(class_id, cfg, rng);
    sample.heatmaps = render_heatmaps(sample.gt_poses, cfg, mix, rng);
    sample.video_feature = make_video_feature(sample.gt_poses, class_id, cfg, rng);
    return sample;
}

} // namespace hpnet
