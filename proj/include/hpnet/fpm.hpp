// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hpnet/tensor.hpp"

namespace hpnet {

// Grid coordinates of n joints in one heatmap's frame; x is the column,
// y the row, origin top-left.
struct Pose2D {
    struct Joint {
        int x = 0;
        int y = 0;
    };
    std::vector<Joint> joints;

    std::size_t size() const { return joints.size(); }
};

enum class Reducer { Mean, Max };

inline Reducer reducer_from_string(const std::string& s) {
    if (s == "mean") return Reducer::Mean;
    if (s == "max") return Reducer::Max;
    throw validation_error("pool.reducer must be 'mean' or 'max', got '" + s + "'");
}

inline const char* to_string(Reducer r) { return r == Reducer::Mean ? "mean" : "max"; }

struct PoolConfig {
    int region = 1;                   // R, odd, window is R x R
    Reducer reducer = Reducer::Mean;
    int reference_scale_index = 1;    // scale used for argmax pose decoding
    int pool_scale_index = 1;         // scale whose heatmap is pooled

    void validate() const {
        if (region < 1 || region % 2 == 0)
            throw validation_error("pool.region must be a positive odd integer");
        if (reference_scale_index < 0 || pool_scale_index < 0)
            throw validation_error("pool scale indices must be non-negative");
    }
};

// channel indices 0..n-1, the mapping for direct per-joint heatmaps
inline std::vector<int> identity_channels(std::size_t n) {
    std::vector<int> ch(n);
    for (std::size_t i = 0; i < n; ++i) ch[i] = static_cast<int>(i);
    return ch;
}

// Argmax pose decoding: per joint, the (x, y) maximizing its assigned
// channel. Ties break toward the smallest row-major flat index.
template <class S>
Pose2D extract_pose(const TensorT<S>& heatmap, const std::vector<int>& joint_channels) {
    if (heatmap.ndim() != 3) throw validation_error("extract_pose: expects [c,h,w] heatmap");
    const std::size_t c = heatmap.shape[0], h = heatmap.shape[1], w = heatmap.shape[2];
    if (joint_channels.empty()) throw validation_error("extract_pose: no joint channels");
    Pose2D pose;
    pose.joints.reserve(joint_channels.size());
    for (int ch : joint_channels) {
        if (ch < 0 || static_cast<std::size_t>(ch) >= c)
            throw validation_error("extract_pose: channel index " + std::to_string(ch) +
                                   " out of range for " + heatmap.shape_str());
        const S* plane = &heatmap.data[static_cast<std::size_t>(ch) * h * w];
        std::size_t best = 0;
        for (std::size_t i = 1; i < h * w; ++i)
            if (plane[i] > plane[best]) best = i;
        pose.joints.push_back({static_cast<int>(best % w), static_cast<int>(best / w)});
    }
    return pose;
}

// Pool the full channel column around each joint over an R x R window
// centered at its coordinate. Windows are clamped at image borders (the mean
// divides by the surviving pixel count). An out-of-bounds center is an
// error, not clamped.
template <class S>
TensorT<S> feedback_pool(const TensorT<S>& heatmap, const Pose2D& pose, const PoolConfig& cfg) {
    cfg.validate();
    if (heatmap.ndim() != 3) throw validation_error("feedback_pool: expects [c,h,w] heatmap");
    const std::size_t c = heatmap.shape[0];
    const int h = static_cast<int>(heatmap.shape[1]);
    const int w = static_cast<int>(heatmap.shape[2]);
    const int r = cfg.region / 2;
    TensorT<S> pooled({pose.size(), c});
    for (std::size_t j = 0; j < pose.size(); ++j) {
        const auto [x, y] = pose.joints[j];
        if (x < 0 || x >= w || y < 0 || y >= h)
            throw validation_error("feedback_pool: joint " + std::to_string(j) +
                                   " center (" + std::to_string(x) + "," + std::to_string(y) +
                                   ") outside " + heatmap.shape_str());
        const int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
        const int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
        const S count = static_cast<S>((y1 - y0 + 1) * (x1 - x0 + 1));
        for (std::size_t k = 0; k < c; ++k) {
            const S* plane = &heatmap.data[k * static_cast<std::size_t>(h * w)];
            if (cfg.reducer == Reducer::Mean) {
                S acc = S(0);
                for (int yy = y0; yy <= y1; ++yy)
                    for (int xx = x0; xx <= x1; ++xx) acc += plane[yy * w + xx];
                pooled.at(j, k) = acc / count;
            } else {
                S best = plane[y0 * w + x0];
                for (int yy = y0; yy <= y1; ++yy)
                    for (int xx = x0; xx <= x1; ++xx) best = std::max(best, plane[yy * w + xx]);
                pooled.at(j, k) = best;
            }
        }
    }
    return pooled;
}

// Map integer pose coordinates between grids by the width/height ratio,
// round half up, clamped into the target grid.
inline Pose2D rescale_pose(const Pose2D& pose, std::size_t from_h, std::size_t from_w,
                           std::size_t to_h, std::size_t to_w) {
    if (to_h == 0 || to_w == 0) throw validation_error("rescale_pose: target dims must be positive");
    auto remap = [](int v, std::size_t from, std::size_t to) {
        const double scaled = static_cast<double>(v) * static_cast<double>(to) /
                              static_cast<double>(from);
        int r = static_cast<int>(std::floor(scaled + 0.5));
        r = std::max(0, std::min(static_cast<int>(to) - 1, r));
        return r;
    };
    Pose2D out;
    out.joints.reserve(pose.size());
    for (const auto& jt : pose.joints)
        out.joints.push_back({remap(jt.x, from_w, to_w), remap(jt.y, from_h, to_h)});
    return out;
}

// One frame's multi-scale heatmaps, each [c_s, h_s, w_s].
template <class S>
using HeatmapStackT = std::vector<TensorT<S>>;
using HeatmapStack = HeatmapStackT<float>;

struct PoolSequenceResult {
    Tensor pooled; // [T, n, c]
    Tensor poses;  // [T, n, 2] decoded at the reference scale, stored (x, y)
};

// Per frame: decode the pose on the reference scale, rescale it to the
// pooling scale, and pool there.
template <class S>
PoolSequenceResult pool_sequence(const std::vector<HeatmapStackT<S>>& frames,
                                 const PoolConfig& cfg,
                                 const std::vector<std::vector<int>>& joint_channels_per_scale) {
    cfg.validate();
    if (frames.empty()) throw validation_error("pool_sequence: no frames");
    const std::size_t num_scales = frames.front().size();
    if (static_cast<std::size_t>(cfg.reference_scale_index) >= num_scales ||
        static_cast<std::size_t>(cfg.pool_scale_index) >= num_scales)
        throw validation_error("pool_sequence: scale index out of range");
    if (joint_channels_per_scale.size() != num_scales)
        throw validation_error("pool_sequence: joint_channels must cover every scale");
    const auto& ref_shape = frames.front()[static_cast<std::size_t>(cfg.reference_scale_index)].shape;
    const auto& pool_shape = frames.front()[static_cast<std::size_t>(cfg.pool_scale_index)].shape;
    for (const auto& stack : frames) {
        if (stack.size() != num_scales)
            throw validation_error("pool_sequence: inconsistent scale count across frames");
        for (std::size_t s = 0; s < num_scales; ++s)
            if (stack[s].shape != frames.front()[s].shape)
                throw validation_error("pool_sequence: inconsistent heatmap shapes across frames");
    }

    const std::size_t t_len = frames.size();
    const std::size_t n = joint_channels_per_scale[static_cast<std::size_t>(
                                                       cfg.reference_scale_index)]
                              .size();
    const std::size_t c = pool_shape[0];
    PoolSequenceResult out;
    out.pooled = Tensor({t_len, n, c});
    out.poses = Tensor({t_len, n, 2});
    for (std::size_t t = 0; t < t_len; ++t) {
        const auto& ref_map = frames[t][static_cast<std::size_t>(cfg.reference_scale_index)];
        Pose2D pose = extract_pose(
            ref_map, joint_channels_per_scale[static_cast<std::size_t>(cfg.reference_scale_index)]);
        for (std::size_t j = 0; j < n; ++j) {
            out.poses.at(t, j, 0) = static_cast<float>(pose.joints[j].x);
            out.poses.at(t, j, 1) = static_cast<float>(pose.joints[j].y);
        }
        Pose2D pool_pose = rescale_pose(pose, ref_shape[1], ref_shape[2], pool_shape[1],
                                        pool_shape[2]);
        TensorT<S> pooled =
            feedback_pool(frames[t][static_cast<std::size_t>(cfg.pool_scale_index)], pool_pose, cfg);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < c; ++k)
                out.pooled.at(t, j, k) = static_cast<float>(pooled.at(j, k));
    }
    ensure_finite(out.pooled, "pool_sequence");
    return out;
}

} // namespace hpnet
