// SPDX-License-Identifier: Apache-2.0
//
// Command-line surface for the heatmap-pooling pipeline: dataset synthesis,
// feedback pooling, training, evaluation, ensembling, Fisher analysis and
// gradient verification.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hpnet/dataset.hpp"
#include "hpnet/fisher.hpp"
#include "hpnet/model_io.hpp"
#include "hpnet/runconfig.hpp"
#include "hpnet/train.hpp"
#include "hpnet/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    int threads = 0; // 0 = take train.threads from the config
};

hpnet::RunConfig load_config(const CommonOpts& opts) {
    json doc = json::object();
    if (!opts.config_path.empty()) {
        try {
            doc = json::parse(hpnet::read_file(opts.config_path));
        } catch (const json::exception& e) {
            throw hpnet::validation_error("config parse failed: " + std::string(e.what()));
        }
    }
    for (const auto& assignment : opts.overrides) hpnet::apply_override(doc, assignment);
    hpnet::RunConfig cfg = hpnet::runconfig_from_json(doc);
    if (opts.threads > 0) cfg.train.threads = opts.threads;
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON run configuration");
    cmd->add_option("--set", opts.overrides, "override: section.key=value (repeatable)");
    cmd->add_option("--threads", opts.threads, "worker thread cap (never changes results)");
}

hpnet::SkeletonGraph load_skeleton(const std::string& path, std::size_t joints) {
    if (path.empty()) return hpnet::SkeletonGraph::default_for(joints);
    try {
        return hpnet::SkeletonGraph::from_json(json::parse(hpnet::read_file(path)));
    } catch (const json::exception& e) {
        throw hpnet::validation_error("skeleton file: " + std::string(e.what()));
    }
}

hpnet::LabelEmbeddings resolve_label_embeddings(const hpnet::RunConfig& cfg,
                                                const hpnet::Manifest& manifest,
                                                const std::string& embed_path,
                                                const std::string& order_path) {
    if (embed_path.empty())
        return hpnet::encode_labels(cfg.default_labels(), cfg.text_dim, cfg.label_seed);
    if (order_path.empty())
        throw hpnet::validation_error("--label-embeddings requires --label-order");
    return hpnet::load_label_embeddings(
        embed_path, order_path, static_cast<std::size_t>(manifest.config.num_classes));
}

void check_dataset_compat(const hpnet::RunConfig& cfg, const hpnet::Manifest& manifest) {
    if (manifest.config.num_classes < 2)
        throw hpnet::validation_error("dataset must have at least 2 classes");
    const std::size_t pooled_c =
        manifest.config.scales.at(static_cast<std::size_t>(cfg.pool.pool_scale_index)).c;
    const bool pose_input = cfg.kind == "single" && cfg.modality == "pose";
    const std::size_t want = pose_input ? 2 : pooled_c;
    if (cfg.gcn_channels.front() != want)
        throw hpnet::validation_error(
            "model.gcn_channels[0] = " + std::to_string(cfg.gcn_channels.front()) +
            " but the stream input width is " + std::to_string(want));
}

void write_metrics(const hpnet::Metrics& metrics, const std::string& path) {
    const std::string text = hpnet::metrics_to_json(metrics).dump(2) + "\n";
    if (!path.empty()) hpnet::write_file_atomic(path, text);
    std::fputs(text.c_str(), stdout);
}

int cmd_synth(const CommonOpts& common, const std::string& out_dir, std::uint64_t seed_flag,
              bool seed_set) {
    hpnet::RunConfig cfg = load_config(common);
    if (seed_set) cfg.synth.seed = seed_flag;
    const fs::path manifest = hpnet::generate_dataset(cfg.synth, out_dir, cfg.train.threads);
    std::printf("manifest: %s\n", manifest.string().c_str());
    std::printf("samples: %d\n", cfg.synth.num_classes * cfg.synth.samples_per_class);
    return 0;
}

int cmd_pool(const CommonOpts& common, const std::string& manifest_path,
             const std::string& out_dir, int region_flag, bool region_set) {
    hpnet::RunConfig cfg = load_config(common);
    if (region_set) {
        cfg.pool.region = region_flag;
        cfg.pool.validate();
    }
    hpnet::Manifest manifest = hpnet::load_manifest(manifest_path);
    auto pooled = hpnet::pool_dataset(manifest, cfg.pool, cfg.train.threads);

    ordered_json index;
    index["manifest"] = manifest_path;
    ordered_json pool_cfg;
    pool_cfg["region"] = cfg.pool.region;
    pool_cfg["reducer"] = hpnet::to_string(cfg.pool.reducer);
    pool_cfg["reference_scale"] = cfg.pool.reference_scale_index;
    pool_cfg["pool_scale"] = cfg.pool.pool_scale_index;
    index["pool"] = pool_cfg;
    ordered_json samples = ordered_json::array();
    for (const auto& s : pooled) {
        const std::string pooled_rel = "pooled/" + s.id + ".hpt";
        const std::string poses_rel = "poses/" + s.id + ".hpt";
        hpnet::save_hpt(fs::path(out_dir) / pooled_rel, s.pooled);
        hpnet::save_hpt(fs::path(out_dir) / poses_rel, s.poses);
        ordered_json e;
        e["id"] = s.id;
        e["label"] = s.label;
        e["split"] = s.split;
        e["pooled"] = pooled_rel;
        e["poses"] = poses_rel;
        samples.push_back(e);
    }
    index["samples"] = samples;
    hpnet::write_file_atomic(fs::path(out_dir) / "index.json", index.dump(2) + "\n");
    std::printf("pooled %zu samples -> %s\n", pooled.size(), out_dir.c_str());
    return 0;
}

int cmd_train(const CommonOpts& common, const std::string& manifest_path,
              const std::string& out_dir, const std::string& skeleton_path,
              const std::string& embed_path, const std::string& order_path) {
    hpnet::RunConfig cfg = load_config(common);
    hpnet::Manifest manifest = hpnet::load_manifest(manifest_path);
    check_dataset_compat(cfg, manifest);
    hpnet::SkeletonGraph graph =
        load_skeleton(skeleton_path, static_cast<std::size_t>(manifest.config.joints));
    auto pooled = hpnet::pool_dataset(manifest, cfg.pool, cfg.train.threads);

    std::vector<hpnet::EpochStats> epochs;
    if (cfg.kind == "full") {
        hpnet::LabelEmbeddings emb = resolve_label_embeddings(cfg, manifest, embed_path, order_path);
        if (emb.dim() != cfg.text_dim)
            throw hpnet::validation_error("label embedding width " + std::to_string(emb.dim()) +
                                          " != model.text_dim " + std::to_string(cfg.text_dim));
        hpnet::ModelConfig mcfg =
            cfg.model_config(static_cast<std::size_t>(manifest.config.num_classes),
                             static_cast<std::size_t>(manifest.config.video_dim));
        hpnet::FullTrainResult result =
            hpnet::train_full(pooled, graph, mcfg, cfg.train, cfg.loss, emb.features);
        hpnet::save_full_model(out_dir, result.model, emb.labels, emb.features);
        epochs = result.epochs;
    } else {
        hpnet::Modality modality = hpnet::modality_from_string(cfg.modality);
        auto inputs = hpnet::make_single_inputs(pooled, modality, graph);
        hpnet::SingleTrainResult result =
            hpnet::train_single(inputs, graph, cfg.gcn_channels,
                                static_cast<std::size_t>(manifest.config.num_classes), cfg.train);
        hpnet::save_single_model(out_dir, result.gcn, modality, cfg.gcn_channels,
                                 static_cast<std::size_t>(manifest.config.num_classes));
        epochs = result.epochs;
    }

    std::string log;
    for (const auto& e : epochs) {
        ordered_json j;
        j["epoch"] = e.epoch;
        j["mean_loss"] = e.mean_loss;
        log += j.dump() + "\n";
    }
    hpnet::write_file_atomic(fs::path(out_dir) / "epochs.jsonl", log);
    std::printf("model: %s (final mean loss %.6f)\n", out_dir.c_str(),
                epochs.empty() ? 0.0 : epochs.back().mean_loss);
    return 0;
}

int cmd_eval(const CommonOpts& common, const std::string& manifest_path,
             const std::string& model_dir, const std::string& split,
             const std::string& scores_path, const std::string& metrics_path,
             const std::string& skeleton_path) {
    hpnet::RunConfig cfg = load_config(common);
    hpnet::Manifest manifest = hpnet::load_manifest(manifest_path);
    hpnet::SkeletonGraph graph =
        load_skeleton(skeleton_path, static_cast<std::size_t>(manifest.config.joints));
    auto pooled = hpnet::pool_dataset(manifest, cfg.pool, cfg.train.threads);

    hpnet::EvalResult result;
    if (hpnet::model_kind(model_dir) == "full") {
        hpnet::SavedFullModel saved = hpnet::load_full_model(model_dir);
        result = hpnet::evaluate_full(saved.model, graph, saved.f_text, pooled, split,
                                      cfg.train.threads);
    } else {
        hpnet::SavedSingleModel saved = hpnet::load_single_model(model_dir);
        auto inputs = hpnet::make_single_inputs(pooled, saved.modality, graph);
        result = hpnet::evaluate_single(saved.gcn, graph, inputs, split, cfg.train.threads);
    }
    if (!scores_path.empty())
        hpnet::write_file_atomic(scores_path, hpnet::dumps_to_jsonl(result.dumps));
    write_metrics(result.metrics, metrics_path);
    return 0;
}

int cmd_ensemble(const std::vector<std::string>& dump_paths, std::vector<double> weights,
                 const std::string& metrics_path) {
    if (dump_paths.empty()) throw hpnet::validation_error("ensemble: no score dumps given");
    if (weights.empty()) weights.assign(dump_paths.size(), 1.0);
    std::vector<std::vector<hpnet::ScoreDumpEntry>> dumps;
    for (const auto& p : dump_paths)
        dumps.push_back(hpnet::dumps_from_jsonl(hpnet::read_file(p), p));
    hpnet::Metrics metrics = hpnet::ensemble(dumps, weights);
    write_metrics(metrics, metrics_path);
    return 0;
}

int cmd_fisher(const std::string& features_path, const std::string& labels_path,
               const std::string& out_path) {
    hpnet::Tensor features = hpnet::load_hpt(features_path);
    std::vector<int> labels;
    try {
        labels = json::parse(hpnet::read_file(labels_path)).get<std::vector<int>>();
    } catch (const json::exception& e) {
        throw hpnet::validation_error("labels file: " + std::string(e.what()));
    }
    hpnet::FisherResult r = hpnet::fisher_score(features, labels);
    ordered_json out;
    out["mean_finite"] = r.mean_finite;
    out["scores"] = r.scores.data;
    ordered_json inf_dims = ordered_json::array();
    ordered_json deg_dims = ordered_json::array();
    for (std::size_t k = 0; k < r.infinite.size(); ++k) {
        if (r.infinite[k]) inf_dims.push_back(k);
        if (r.degenerate[k]) deg_dims.push_back(k);
    }
    out["infinite_dims"] = inf_dims;
    out["degenerate_dims"] = deg_dims;
    const std::string text = out.dump(2) + "\n";
    if (!out_path.empty()) hpnet::write_file_atomic(out_path, text);
    std::fputs(text.c_str(), stdout);
    return 0;
}

int cmd_gradcheck(int instances, std::uint64_t seed, double eps) {
    hpnet::VerifyReport report = hpnet::run_model_gradcheck(instances, seed, eps);
    std::printf("gradcheck: %d instances, max relative error %.3e (worst: %s)\n",
                report.instances, report.max_rel_err, report.worst_path.c_str());
    if (report.max_rel_err > 1e-3) {
        std::fprintf(stderr, "gradcheck FAILED: %.3e > 1e-3\n", report.max_rel_err);
        return 2;
    }
    return 0;
}

int cmd_export_features(const CommonOpts& common, const std::string& manifest_path,
                        const std::string& model_dir, const std::string& out_dir,
                        const std::string& skeleton_path) {
    hpnet::RunConfig cfg = load_config(common);
    hpnet::Manifest manifest = hpnet::load_manifest(manifest_path);
    hpnet::SkeletonGraph graph =
        load_skeleton(skeleton_path, static_cast<std::size_t>(manifest.config.joints));
    hpnet::SavedFullModel saved = hpnet::load_full_model(model_dir);
    auto pooled = hpnet::pool_dataset(manifest, cfg.pool, cfg.train.threads);
    const hpnet::Tensor a_hat = hpnet::normalized_adjacency<float>(graph);

    const std::size_t fc_len = saved.model.cfg.fc_len();
    hpnet::Tensor features({pooled.size(), fc_len});
    std::vector<int> labels(pooled.size());
    std::vector<std::string> ids(pooled.size());
    hpnet::parallel_for(pooled.size(), cfg.train.threads, [&](std::size_t i) {
        hpnet::StreamBundleT<float> bundle = hpnet::co_learn<float>(
            pooled[i].pooled, graph, a_hat, saved.model.stream[0], saved.model.stream[1],
            saved.model.stream[2], saved.model.cfg.streams);
        for (std::size_t k = 0; k < fc_len; ++k) features.at(i, k) = bundle.concatenated[k];
        labels[i] = pooled[i].label;
        ids[i] = pooled[i].id;
    });
    hpnet::save_hpt(fs::path(out_dir) / "features.hpt", features);
    hpnet::write_file_atomic(fs::path(out_dir) / "labels.json", json(labels).dump() + "\n");
    hpnet::write_file_atomic(fs::path(out_dir) / "ids.json", json(ids).dump() + "\n");
    std::printf("exported %zu x %zu features -> %s\n", pooled.size(), fc_len, out_dir.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"heatmap pooling pipeline"};
    app.require_subcommand(1);

    CommonOpts synth_common, pool_common, train_common, eval_common, export_common;
    std::string synth_out;
    std::uint64_t synth_seed = 0;

    auto* synth = app.add_subcommand("synth", "generate a seeded synthetic dataset");
    add_common(synth, synth_common);
    synth->add_option("--out", synth_out, "output directory")->required();
    auto* seed_opt = synth->add_option("--seed", synth_seed, "override synth.seed");

    std::string pool_manifest, pool_out;
    int pool_region = 1;
    auto* pool = app.add_subcommand("pool", "feedback-pool a dataset into per-joint features");
    add_common(pool, pool_common);
    pool->add_option("--manifest", pool_manifest, "dataset manifest")->required();
    pool->add_option("--out", pool_out, "output directory")->required();
    auto* region_opt = pool->add_option("--region", pool_region, "override pool.region");

    std::string train_manifest, train_out, train_skeleton, train_embed, train_order;
    auto* train = app.add_subcommand("train", "train the full model or a single stream");
    add_common(train, train_common);
    train->add_option("--manifest", train_manifest, "dataset manifest")->required();
    train->add_option("--out", train_out, "model output directory")->required();
    train->add_option("--skeleton", train_skeleton, "skeleton JSON ([parent,child] pairs)");
    train->add_option("--label-embeddings", train_embed, "label embedding .hpt [N,C]");
    train->add_option("--label-order", train_order, "JSON list fixing label order");

    std::string eval_manifest, eval_model, eval_split = "test", eval_scores, eval_metrics,
                                                        eval_skeleton;
    auto* eval = app.add_subcommand("eval", "evaluate a trained model");
    add_common(eval, eval_common);
    eval->add_option("--manifest", eval_manifest, "dataset manifest")->required();
    eval->add_option("--model", eval_model, "model directory")->required();
    eval->add_option("--split", eval_split, "train|test|all");
    eval->add_option("--scores", eval_scores, "score dump output (jsonl)");
    eval->add_option("--metrics", eval_metrics, "metrics output (json)");
    eval->add_option("--skeleton", eval_skeleton, "skeleton JSON");

    std::vector<std::string> ens_dumps;
    std::vector<double> ens_weights;
    std::string ens_metrics;
    auto* ens = app.add_subcommand("ensemble", "late-fuse score dumps");
    ens->add_option("--dump", ens_dumps, "score dump files (repeatable)")->required();
    ens->add_option("--weights", ens_weights, "per-dump weights (default: all 1)");
    ens->add_option("--metrics", ens_metrics, "metrics output (json)");

    std::string fisher_features, fisher_labels, fisher_out;
    auto* fisher = app.add_subcommand("fisher", "per-dimension Fisher discriminant scores");
    fisher->add_option("--features", fisher_features, "feature matrix .hpt [M,d]")->required();
    fisher->add_option("--labels", fisher_labels, "JSON list of M labels")->required();
    fisher->add_option("--out", fisher_out, "report output (json)");

    int gc_instances = 50;
    std::uint64_t gc_seed = 20240901;
    double gc_eps = 1e-5;
    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    gradcheck->add_option("--instances", gc_instances, "random instances (default 50)");
    gradcheck->add_option("--seed", gc_seed, "rng seed");
    gradcheck->add_option("--eps", gc_eps, "central difference step");

    std::string exp_manifest, exp_model, exp_out, exp_skeleton;
    auto* exp = app.add_subcommand("export-features", "dump per-sample concatenated features");
    add_common(exp, export_common);
    exp->add_option("--manifest", exp_manifest, "dataset manifest")->required();
    exp->add_option("--model", exp_model, "full-model directory")->required();
    exp->add_option("--out", exp_out, "output directory")->required();
    exp->add_option("--skeleton", exp_skeleton, "skeleton JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed())
            return cmd_synth(synth_common, synth_out, synth_seed, seed_opt->count() > 0);
        if (pool->parsed())
            return cmd_pool(pool_common, pool_manifest, pool_out, pool_region,
                            region_opt->count() > 0);
        if (train->parsed())
            return cmd_train(train_common, train_manifest, train_out, train_skeleton, train_embed,
                             train_order);
        if (eval->parsed())
            return cmd_eval(eval_common, eval_manifest, eval_model, eval_split, eval_scores,
                            eval_metrics, eval_skeleton);
        if (ens->parsed()) return cmd_ensemble(ens_dumps, ens_weights, ens_metrics);
        if (fisher->parsed()) return cmd_fisher(fisher_features, fisher_labels, fisher_out);
        if (gradcheck->parsed()) return cmd_gradcheck(gc_instances, gc_seed, gc_eps);
        if (exp->parsed())
            return cmd_export_features(export_common, exp_manifest, exp_model, exp_out,
                                       exp_skeleton);
    } catch (const hpnet::validation_error& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 1;
    } catch (const hpnet::numeric_error& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 2;
    } catch (const hpnet::io_error& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 3;
    }
    return 1;
}
