#pragma once

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <CLI11.hpp>

#include "genlab/app/checkpoint.hpp"
#include "genlab/app/metrics_csv.hpp"
#include "genlab/app/pgm.hpp"
#include "genlab/app/run_config.hpp"
#include "genlab/data/batches.hpp"
#include "genlab/data/idx.hpp"
#include "genlab/data/rng.hpp"
#include "genlab/error.hpp"
#include "genlab/eval/classifier.hpp"
#include "genlab/eval/entropy.hpp"
#include "genlab/models/trainers.hpp"

namespace genlab {

inline constexpr std::string_view kCliUsage =
    "usage: genlab <command> [options]\n"
    "commands:\n"
    "  train       train a generative model (gan, wgan, vae, vaegan, cvaegan)\n"
    "  sample      write a PGM grid of samples from a checkpoint\n"
    "  eval        report mode entropy of a checkpoint under a classifier\n"
    "  classifier  train and save the reference digit classifier\n"
    "run 'genlab <command> --help' for the options of a command\n";

namespace detail {

struct CliOptions {
    RunConfig rc;
    std::string model = "gan";
    double lr = 0.0;
    std::vector<std::pair<std::string, CLI::Option*>> tracked;
};

inline void add_run_options(CLI::App& app, CliOptions& o) {
    auto& rc = o.rc;
    auto track = [&](CLI::Option* opt) { o.tracked.emplace_back(opt->get_name(), opt); };
    app.set_config("--config", "", "flat 'key = value' file; command-line flags take precedence");
    app.allow_config_extras(false);
    track(app.add_option("--model", o.model, "gan, wgan, vae, vaegan or cvaegan"));
    track(app.add_option("--data-dir", rc.data_dir, "directory holding the MNIST IDX files"));
    track(app.add_option("--iters", rc.iters, "training iterations"));
    track(app.add_option("--batch-size", rc.batch_size, "minibatch size"));
    track(app.add_option("--seed", rc.seed, "master seed"));
    track(app.add_option("--latent-dim", rc.latent_dim, "latent dimension"));
    track(app.add_option("--lr", o.lr, "learning rate (Adam, or RMSProp for wgan)"));
    track(app.add_option("--lambda", rc.lambda, "hinge weight for cvaegan"));
    track(app.add_option("--margin", rc.margin, "hinge margin for cvaegan"));
    track(app.add_option("--clip", rc.clip, "critic weight clip for wgan"));
    track(app.add_option("--n-critic", rc.n_critic, "critic updates per generator update for wgan"));
    track(app.add_option("--eval-every", rc.eval_every, "iterations between checkpoints and evaluations"));
    track(app.add_option("--checkpoint-out", rc.checkpoint_out, "checkpoint path to write"));
    track(app.add_option("--metrics-out", rc.metrics_out, "metrics CSV path to write"));
    track(app.add_option("--classifier-path", rc.classifier_path, "classifier checkpoint used for entropy"));
    track(app.add_option("--samples", rc.samples, "number of generated samples"));
    track(app.add_option("--cols", rc.cols, "tiles per row in sample grids"));
    track(app.add_option("--checkpoint", rc.checkpoint, "checkpoint to read (sample, eval)"));
    track(app.add_option("--output", rc.output, "output path (PGM for sample, CSV for eval)"));
    track(app.add_option("--epochs", rc.epochs, "classifier training epochs"));
}

inline void finish_options(CliOptions& o) {
    o.rc.model = parse_model_kind(o.model);
    for (const auto& [name, opt] : o.tracked) {
        if (name == "--lr" && opt->count() > 0) o.rc.lr = o.lr;
    }
    validate(o.rc);
}

inline std::vector<std::string> set_flags(const CliOptions& o) {
    std::vector<std::string> out;
    for (const auto& [name, opt] : o.tracked) {
        if (opt->count() > 0) out.push_back(name);
    }
    return out;
}

inline const std::string& require_path(const std::string& value, const char* flag, const char* command) {
    if (value.empty()) throw ConfigError(std::string(command) + " needs " + flag);
    return value;
}

inline int cmd_train(const CliOptions& o, std::ostream& out, std::ostream& err) {
    const RunConfig& rc = o.rc;
    if (rc.model == ModelKind::classifier) throw ConfigError("use the 'classifier' command to train the classifier");
    for (const auto& f : irrelevant_flags(rc.model, set_flags(o))) {
        err << "notice: " << f << " has no effect for model " << to_string(rc.model) << "\n";
    }
    const IdxDataset train = load_mnist(rc.data_dir, Split::train);
    std::optional<Mlp<float>> classifier;
    if (!rc.classifier_path.empty()) classifier = restore_classifier(load_checkpoint(rc.classifier_path));

    auto model = make_model(to_model_config(rc));
    BatchPlan plan(train, rc.batch_size, RngStream(rc.seed, "batches"), true);
    const BatchSource source = [&plan] { return plan.next().images; };
    RngStream rng(rc.seed, "train");
    const std::map<std::string, std::string> echo{{"batch_size", std::to_string(rc.batch_size)},
                                                  {"iters", std::to_string(rc.iters)}};

    std::vector<MetricsRow> rows;
    rows.reserve(rc.iters);
    for (std::uint64_t it = 1; it <= rc.iters; ++it) {
        MetricsRow row = metrics_row(rc.model, model->train_step(source, rng));
        const bool checkpoint_now = it % rc.eval_every == 0 || it == rc.iters;
        if (checkpoint_now && classifier) {
            RngStream eval_rng(rc.seed, "eval/" + std::to_string(it));
            row.mode_entropy = evaluate_checkpoint(model->sampler(), *classifier, rc.samples, eval_rng, it).report.mode_entropy;
        }
        rows.push_back(std::move(row));
        if (checkpoint_now) {
            if (!rc.checkpoint_out.empty()) save_checkpoint(make_checkpoint(*model, echo), rc.checkpoint_out);
            if (!rc.metrics_out.empty()) write_metrics_csv(rows, rc.metrics_out);
        }
    }
    const MetricsRow& last = rows.back();
    out << "trained " << to_string(rc.model) << " for " << rc.iters << " iterations";
    if (last.mode_entropy) out << ", mode_entropy " << detail::format_metric(last.mode_entropy);
    out << "\n";
    return 0;
}

inline int cmd_sample(const CliOptions& o, std::ostream& out) {
    const RunConfig& rc = o.rc;
    const auto model = restore_model(load_checkpoint(require_path(rc.checkpoint, "--checkpoint", "sample")));
    const auto& path = require_path(rc.output, "--output", "sample");
    RngStream rng(rc.seed, "sample");
    write_pgm_grid(model->sample(rc.samples, rng), rc.cols, path);
    out << "wrote " << rc.samples << " samples to " << path << "\n";
    return 0;
}

inline std::string format_entropy_csv(const CheckpointEvaluation& eval, ModelKind kind) {
    std::string s = "iteration,model,samples,mode_entropy,median_image_entropy";
    for (std::size_t i = 0; i < eval.report.histogram.size(); ++i) s += ",p" + std::to_string(i);
    s += "\n" + std::to_string(eval.report.iteration) + "," + std::string(to_string(kind)) + "," +
         std::to_string(eval.report.samples) + "," + format_metric(eval.report.mode_entropy) + "," +
         format_metric(median(eval.image_entropies()));
    for (double p : eval.report.histogram) s += "," + format_metric(p);
    return s + "\n";
}

inline int cmd_eval(const CliOptions& o, std::ostream& out) {
    const RunConfig& rc = o.rc;
    const Checkpoint ckpt = load_checkpoint(require_path(rc.checkpoint, "--checkpoint", "eval"));
    const auto model = restore_model(ckpt);
    const Mlp<float> classifier =
        restore_classifier(load_checkpoint(require_path(rc.classifier_path, "--classifier-path", "eval")));
    RngStream rng(rc.seed, "eval");
    const auto eval = evaluate_checkpoint(model->sampler(), classifier, rc.samples, rng, ckpt.iteration);
    const std::string csv = format_entropy_csv(eval, ckpt.kind);
    if (rc.output.empty()) {
        out << csv;
    } else {
        write_file_atomic(rc.output, csv);
    }
    return 0;
}

inline int cmd_classifier(const CliOptions& o, std::ostream& out) {
    const RunConfig& rc = o.rc;
    const auto& path = require_path(rc.checkpoint_out, "--checkpoint-out", "classifier");
    const IdxDataset train = load_mnist(rc.data_dir, Split::train);
    const IdxDataset test = load_mnist(rc.data_dir, Split::test);
    ClassifierConfig cfg;
    cfg.epochs = rc.epochs;
    cfg.seed = rc.seed;
    for (const auto& f : set_flags(o)) {
        if (f == "--batch-size") cfg.batch_size = rc.batch_size;
        if (f == "--lr") cfg.optimizer.lr = *rc.lr;
    }
    const ClassifierResult result = train_classifier(train, test, cfg);
    save_checkpoint(make_classifier_checkpoint(result.net, cfg, result.test_accuracy), path);
    out << "classifier test_accuracy " << format_metric(result.test_accuracy) << " saved to " << path << "\n";
    return 0;
}

}  // namespace detail

/// Runs one CLI command. Returns 0 on success; on failure writes a
/// single-line diagnostic (plus usage for malformed arguments) to `err`.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    if (args.empty() || args[0] == "--help" || args[0] == "-h") {
        (args.empty() ? err : out) << kCliUsage;
        return args.empty() ? 2 : 0;
    }
    const std::string& command = args[0];
    if (command != "train" && command != "sample" && command != "eval" && command != "classifier") {
        err << "error: unknown command '" << command << "'\n" << kCliUsage;
        return 2;
    }
    CLI::App app("genlab " + command, "genlab " + command);
    detail::CliOptions opts;
    detail::add_run_options(app, opts);
    try {
        std::vector<std::string> rest(args.rbegin(), args.rend() - 1);  // CLI11 consumes a reversed vector
        app.parse(rest);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return 2;
    }
    try {
        detail::finish_options(opts);
        if (command == "train") return detail::cmd_train(opts, out, err);
        if (command == "sample") return detail::cmd_sample(opts, out);
        if (command == "eval") return detail::cmd_eval(opts, out);
        return detail::cmd_classifier(opts, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return run_cli(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace genlab
