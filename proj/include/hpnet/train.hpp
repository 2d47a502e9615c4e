// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "hpnet/dataset.hpp"
#include "hpnet/gradcheck.hpp"
#include "hpnet/model.hpp"
#include "hpnet/parallel.hpp"

namespace hpnet {

struct TrainConfig {
    int epochs = 30;
    int batch_size = 4;
    double lr = 1e-3;
    double weight_decay = 1e-2;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 7;
    int threads = 1;

    void validate() const {
        if (epochs < 1) throw validation_error("train.epochs must be positive");
        if (batch_size < 1) throw validation_error("train.batch_size must be positive");
        if (lr < 0 || weight_decay < 0) throw validation_error("train.lr/weight_decay must be >= 0");
        if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1))
            throw validation_error("train.betas must lie in [0,1)");
        if (threads < 1) throw validation_error("train.threads must be >= 1");
    }
};

// Decoupled weight decay Adam. With zero gradient and zero decay a step is
// exactly a no-op (moments stay zero and the update term is 0/(0+eps)).
template <class S>
class AdamW {
public:
    AdamW(const std::vector<ParamRef<S>>& refs, const TrainConfig& cfg) : cfg_(cfg) {
        for (const auto& r : refs) {
            m_.emplace_back(r.tensor->shape);
            v_.emplace_back(r.tensor->shape);
        }
    }

    void step(std::vector<ParamRef<S>>& params, const std::vector<ParamRef<S>>& grads) {
        ++t_;
        const S lr = static_cast<S>(cfg_.lr);
        const S b1 = static_cast<S>(cfg_.beta1), b2 = static_cast<S>(cfg_.beta2);
        const S eps = static_cast<S>(cfg_.adam_eps);
        const S bc1 = S(1) - static_cast<S>(std::pow(cfg_.beta1, t_));
        const S bc2 = S(1) - static_cast<S>(std::pow(cfg_.beta2, t_));
        for (std::size_t r = 0; r < params.size(); ++r) {
            TensorT<S>& p = *params[r].tensor;
            const TensorT<S>& g = *grads[r].tensor;
            const S wd = params[r].decay ? static_cast<S>(cfg_.weight_decay) : S(0);
            for (std::size_t i = 0; i < p.numel(); ++i) {
                m_[r][i] = b1 * m_[r][i] + (S(1) - b1) * g[i];
                v_[r][i] = b2 * v_[r][i] + (S(1) - b2) * g[i] * g[i];
                const S mhat = m_[r][i] / bc1;
                const S vhat = v_[r][i] / bc2;
                p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * p[i]);
            }
        }
    }

private:
    TrainConfig cfg_;
    int t_ = 0;
    std::vector<TensorT<S>> m_, v_;
};

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
};

struct Metrics {
    double top1 = 0.0;
    double mean_per_class = 0.0;
    std::map<int, double> per_class;
    std::size_t count = 0;
};

struct ScoreDumpEntry {
    std::string id;
    int label = 0;
    std::vector<float> scores;
};

inline Metrics metrics_from_predictions(const std::vector<int>& predictions,
                                        const std::vector<int>& labels) {
    if (predictions.empty()) throw validation_error("metrics: empty split");
    std::map<int, std::size_t> total, correct;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        ++total[labels[i]];
        if (predictions[i] == labels[i]) {
            ++hits;
            ++correct[labels[i]];
        }
    }
    Metrics m;
    m.count = predictions.size();
    m.top1 = static_cast<double>(hits) / static_cast<double>(predictions.size());
    double sum = 0.0;
    for (const auto& [label, n] : total) {
        const double acc = static_cast<double>(correct[label]) / static_cast<double>(n);
        m.per_class[label] = acc;
        sum += acc;
    }
    m.mean_per_class = sum / static_cast<double>(total.size());
    return m;
}

namespace detail {

// portable Fisher-Yates (std::shuffle is implementation-defined)
inline std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

} // namespace detail

struct FullTrainResult {
    HpNet model;
    std::vector<EpochStats> epochs;
};

// Train the full network. Deterministic given (dataset, configs, seed):
// seeded init, seeded shuffles, per-member gradient buffers reduced in batch
// order, so the thread count never changes the result.
inline FullTrainResult train_full(const std::vector<PooledSample>& samples,
                                  const SkeletonGraph& graph, const ModelConfig& model_cfg,
                                  const TrainConfig& train_cfg, const LossWeights& lw,
                                  const Tensor& f_text) {
    model_cfg.validate();
    train_cfg.validate();
    lw.validate();
    if (f_text.ndim() != 2 || f_text.shape[0] != model_cfg.num_classes ||
        f_text.shape[1] != model_cfg.text_dim)
        throw validation_error("train_full: label embeddings must be [num_classes, text_dim]");

    std::vector<std::size_t> train_idx;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (samples[i].split == "train") train_idx.push_back(i);
    if (train_idx.empty()) throw validation_error("train_full: empty train split");

    const Tensor a_hat = normalized_adjacency<float>(graph);
    FullTrainResult result;
    result.model = HpNet(model_cfg);
    Rng init_rng(derive_seed(train_cfg.seed, "init"));
    result.model.init_random(init_rng);

    auto params = result.model.collect_params();
    AdamW<float> opt(params, train_cfg);

    const std::size_t batch = static_cast<std::size_t>(train_cfg.batch_size);
    std::vector<HpNet> member_grads(std::min(batch, train_idx.size()), HpNet(model_cfg));
    HpNet total_grads(model_cfg);
    auto total_grad_refs = total_grads.collect_params();

    for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(train_cfg.seed, "shuffle:" + std::to_string(epoch)));
        const auto order = detail::shuffled_indices(train_idx.size(), shuffle_rng);
        double loss_sum = 0.0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += batch) {
            const std::size_t members = std::min(batch, order.size() - b0);
            const float loss_scale = 1.0f / static_cast<float>(members);
            std::vector<float> member_loss(members, 0.0f);
            parallel_for(members, train_cfg.threads, [&](std::size_t k) {
                auto grad_refs = member_grads[k].collect_params();
                zero_all(grad_refs);
                const PooledSample& s = samples[train_idx[order[b0 + k]]];
                FullCacheT<float> cache;
                LossParts<float> parts = hpnet_forward(
                    result.model, a_hat, graph, f_text, s.pooled, s.video,
                    static_cast<std::size_t>(s.label), lw, &cache);
                member_loss[k] = parts.total;
                hpnet_backward(result.model, a_hat, graph, f_text, cache,
                               static_cast<std::size_t>(s.label), lw, loss_scale,
                               member_grads[k]);
            });
            zero_all(total_grad_refs);
            for (std::size_t k = 0; k < members; ++k) {
                auto refs = member_grads[k].collect_params();
                for (std::size_t r = 0; r < refs.size(); ++r)
                    add_inplace(*total_grad_refs[r].tensor, *refs[r].tensor);
                if (!std::isfinite(member_loss[k]))
                    throw numeric_error("train_full: non-finite loss at epoch " +
                                        std::to_string(epoch));
                loss_sum += member_loss[k];
            }
            opt.step(params, total_grad_refs);
        }
        result.epochs.push_back({epoch, loss_sum / static_cast<double>(order.size())});
    }
    return result;
}

struct EvalResult {
    Metrics metrics;
    std::vector<ScoreDumpEntry> dumps;
};

inline EvalResult evaluate_full(HpNet& model, const SkeletonGraph& graph, const Tensor& f_text,
                                const std::vector<PooledSample>& samples, const std::string& split,
                                int threads = 1) {
    const Tensor a_hat = normalized_adjacency<float>(graph);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (split == "all" || samples[i].split == split) idx.push_back(i);
    if (idx.empty()) throw validation_error("evaluate: empty split '" + split + "'");

    EvalResult out;
    out.dumps.resize(idx.size());
    parallel_for(idx.size(), threads, [&](std::size_t k) {
        const PooledSample& s = samples[idx[k]];
        FullCacheT<float> cache;
        StreamBundleT<float> bundle =
            co_learn<float>(s.pooled, graph, a_hat, model.stream[0], model.stream[1],
                            model.stream[2], model.cfg.streams, &cache.streams);
        Tensor refined = trmm_forward(bundle.concatenated, f_text, model.trmm, &cache.trmm);
        Tensor scores = fuse_scores(refined, s.video, model.fusion, &cache.fusion);
        out.dumps[k] = {s.id, s.label, scores.data};
    });
    std::vector<int> preds, labels;
    for (const auto& e : out.dumps) {
        Tensor scores({e.scores.size()}, e.scores);
        preds.push_back(static_cast<int>(argmax_flat(scores)));
        labels.push_back(e.label);
    }
    out.metrics = metrics_from_predictions(preds, labels);
    return out;
}

// --- single-modality stream models (the ensemble members) ---

struct SingleInput {
    std::string id;
    int label = 0;
    std::string split;
    Tensor input; // [T, n, c]
};

inline std::vector<SingleInput> make_single_inputs(const std::vector<PooledSample>& samples,
                                                   Modality modality, const SkeletonGraph& g) {
    std::vector<SingleInput> out;
    out.reserve(samples.size());
    for (const auto& s : samples)
        out.push_back({s.id, s.label, s.split, modality_input(s, modality, g)});
    return out;
}

struct SingleTrainResult {
    GcnStackT<float> gcn;
    std::vector<EpochStats> epochs;
};

inline std::vector<ParamRef<float>> collect_stack(GcnStackT<float>& stack) {
    std::vector<ParamRef<float>> refs;
    for (std::size_t l = 0; l < stack.layer_w.size(); ++l)
        refs.push_back({"gcn.layer" + std::to_string(l) + ".w", &stack.layer_w[l], true});
    collect(refs, "gcn.head", stack.head);
    return refs;
}

inline SingleTrainResult train_single(const std::vector<SingleInput>& samples,
                                      const SkeletonGraph& graph,
                                      const std::vector<std::size_t>& channels,
                                      std::size_t num_classes, const TrainConfig& train_cfg) {
    train_cfg.validate();
    if (channels.empty()) throw validation_error("train_single: empty channel chain");
    std::vector<std::size_t> train_idx;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (samples[i].split == "train") train_idx.push_back(i);
    if (train_idx.empty()) throw validation_error("train_single: empty train split");

    const Tensor a_hat = normalized_adjacency<float>(graph);
    SingleTrainResult result;
    result.gcn = GcnStackT<float>(channels, num_classes);
    Rng init_rng(derive_seed(train_cfg.seed, "init_single"));
    for (auto& w : result.gcn.layer_w) {
        const double std_dev = std::sqrt(2.0 / static_cast<double>(w.shape[0]));
        for (auto& v : w.data) v = static_cast<float>(init_rng.normal() * std_dev);
    }
    result.gcn.head.init_random(init_rng, 0.02);

    auto params = collect_stack(result.gcn);
    AdamW<float> opt(params, train_cfg);
    const std::size_t batch = static_cast<std::size_t>(train_cfg.batch_size);
    std::vector<GcnStackT<float>> member_grads(std::min(batch, train_idx.size()),
                                               GcnStackT<float>(channels, num_classes));
    GcnStackT<float> total_grads(channels, num_classes);
    auto total_refs = collect_stack(total_grads);

    for (int epoch = 0; epoch < train_cfg.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(train_cfg.seed, "shuffle:" + std::to_string(epoch)));
        const auto order = detail::shuffled_indices(train_idx.size(), shuffle_rng);
        double loss_sum = 0.0;
        for (std::size_t b0 = 0; b0 < order.size(); b0 += batch) {
            const std::size_t members = std::min(batch, order.size() - b0);
            const float loss_scale = 1.0f / static_cast<float>(members);
            std::vector<float> member_loss(members, 0.0f);
            parallel_for(members, train_cfg.threads, [&](std::size_t k) {
                auto grad_refs = collect_stack(member_grads[k]);
                zero_all(grad_refs);
                const SingleInput& s = samples[train_idx[order[b0 + k]]];
                GcnCacheT<float> cache;
                Tensor logits = gcn_forward(s.input, a_hat, result.gcn, &cache);
                const Tensor onehot = make_onehot<float>(num_classes,
                                                         static_cast<std::size_t>(s.label));
                member_loss[k] = cross_entropy(logits, onehot);
                Tensor dlogits = cross_entropy_grad(logits, onehot);
                for (auto& v : dlogits.data) v *= loss_scale;
                gcn_backward(result.gcn, a_hat, cache, dlogits, nullptr, member_grads[k]);
            });
            zero_all(total_refs);
            for (std::size_t k = 0; k < members; ++k) {
                auto refs = collect_stack(member_grads[k]);
                for (std::size_t r = 0; r < refs.size(); ++r)
                    add_inplace(*total_refs[r].tensor, *refs[r].tensor);
                if (!std::isfinite(member_loss[k]))
                    throw numeric_error("train_single: non-finite loss at epoch " +
                                        std::to_string(epoch));
                loss_sum += member_loss[k];
            }
            opt.step(params, total_refs);
        }
        result.epochs.push_back({epoch, loss_sum / static_cast<double>(order.size())});
    }
    return result;
}

inline EvalResult evaluate_single(const GcnStackT<float>& gcn, const SkeletonGraph& graph,
                                  const std::vector<SingleInput>& samples,
                                  const std::string& split, int threads = 1) {
    const Tensor a_hat = normalized_adjacency<float>(graph);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (split == "all" || samples[i].split == split) idx.push_back(i);
    if (idx.empty()) throw validation_error("evaluate: empty split '" + split + "'");
    EvalResult out;
    out.dumps.resize(idx.size());
    parallel_for(idx.size(), threads, [&](std::size_t k) {
        const SingleInput& s = samples[idx[k]];
        Tensor logits = gcn_forward(s.input, a_hat, gcn);
        out.dumps[k] = {s.id, s.label, logits.data};
    });
    std::vector<int> preds, labels;
    for (const auto& e : out.dumps) {
        Tensor scores({e.scores.size()}, e.scores);
        preds.push_back(static_cast<int>(argmax_flat(scores)));
        labels.push_back(e.label);
    }
    out.metrics = metrics_from_predictions(preds, labels);
    return out;
}

// Late fusion over per-stream score dumps: per sample, sum of
// weight * softmax(scores); metrics over the fused argmax predictions.
inline Metrics ensemble(const std::vector<std::vector<ScoreDumpEntry>>& dumps,
                        const std::vector<double>& weights) {
    if (dumps.empty()) throw validation_error("ensemble: no score dumps");
    if (weights.size() != dumps.size())
        throw validation_error("ensemble: weight count must match dump count");
    for (double w : weights)
        if (!std::isfinite(w)) throw validation_error("ensemble: weights must be finite");

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < dumps[0].size(); ++i) index[dumps[0][i].id] = i;
    if (index.size() != dumps[0].size()) throw validation_error("ensemble: duplicate sample ids");

    std::vector<std::vector<float>> fused(dumps[0].size());
    std::vector<int> labels(dumps[0].size());
    for (std::size_t i = 0; i < dumps[0].size(); ++i) {
        fused[i].assign(dumps[0][i].scores.size(), 0.0f);
        labels[i] = dumps[0][i].label;
    }
    for (std::size_t d = 0; d < dumps.size(); ++d) {
        if (dumps[d].size() != dumps[0].size())
            throw validation_error("ensemble: dumps cover different sample sets");
        std::vector<bool> seen(dumps[0].size(), false);
        for (const auto& e : dumps[d]) {
            auto it = index.find(e.id);
            if (it == index.end())
                throw validation_error("ensemble: sample id mismatch for '" + e.id + "'");
            if (seen[it->second])
                throw validation_error("ensemble: duplicate sample id '" + e.id + "'");
            seen[it->second] = true;
            const std::size_t i = it->second;
            if (e.label != labels[i])
                throw validation_error("ensemble: label mismatch for '" + e.id + "'");
            if (e.scores.size() != fused[i].size())
                throw validation_error("ensemble: score width mismatch for '" + e.id + "'");
            Tensor probs = softmax(Tensor({e.scores.size()}, e.scores));
            for (std::size_t k = 0; k < fused[i].size(); ++k)
                fused[i][k] += static_cast<float>(weights[d]) * probs[k];
        }
    }
    std::vector<int> preds(fused.size());
    for (std::size_t i = 0; i < fused.size(); ++i)
        preds[i] = static_cast<int>(argmax_flat(Tensor({fused[i].size()}, fused[i])));
    return metrics_from_predictions(preds, labels);
}

} // namespace hpnet
