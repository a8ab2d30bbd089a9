// Command-line surface. cli_main parses argv, runs one subcommand and maps
// library errors to exit codes: 2 config/usage, 3 data, 4 numeric.
#pragma once

#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sept/llm.hpp"
#include "sept/sweep.hpp"
#include "sept/synthetic.hpp"

#ifndef SEPT_GIT_DESCRIBE
#define SEPT_GIT_DESCRIBE "unknown"
#endif

namespace sept {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitData = 3, kExitNumeric = 4 };

inline int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config:
        case ErrorKind::usage: return kExitConfig;
        case ErrorKind::numeric:
        case ErrorKind::domain: return kExitNumeric;
        default: return kExitData;
    }
}

/// Provenance attached to every artifact and printed result.
inline json run_metadata(const std::vector<std::string>& args, const json& seeds, const json& config, const json& hashes) {
    return json{{"tool", "sept"},
                {"git_describe", SEPT_GIT_DESCRIBE},
                {"rng", SeededRng::kAlgorithm},
                {"argv", args},
                {"seeds", seeds},
                {"config", config},
                {"hashes", hashes}};
}

namespace detail {

struct TrainOptions {
    TrainConfig config;
    bool no_intra = false, no_inter = false, no_intra_margin = false, no_inter_margin = false;
    std::string margin_mode = "ensemble", kg_mode = "single", reduction = "mean", scope = "base";

    void add_to(CLI::App& app) {
        app.add_option("--lr", config.lr, "learning rate")->capture_default_str();
        app.add_option("--momentum", config.momentum, "heavy-ball momentum")->capture_default_str();
        app.add_option("--epochs", config.epochs)->capture_default_str();
        app.add_option("--batch-size", config.batch_size, "0 = full batch")->capture_default_str();
        app.add_option("--shots", config.shots)->capture_default_str();
        app.add_option("--lambda", config.lambda, "semantic-expansion weight")->capture_default_str();
        app.add_option("--mu", config.mu, "knowledge-guided regulariser weight")->capture_default_str();
        app.add_option("--tau", config.tau, "softmax temperature")->capture_default_str();
        app.add_option("--context-len", config.context_len, "M")->capture_default_str();
        app.add_option("--num-neighbors", config.neighbors, "first N neighbors per class, 0 = all")->capture_default_str();
        app.add_option("--num-templates", config.templates, "first T templates, 0 = whole pool")->capture_default_str();
        app.add_option("--seed", config.seed)->capture_default_str();
        app.add_option("--fold", config.fold)->capture_default_str();
        app.add_flag("--no-intra", no_intra, "drop the intra-class term");
        app.add_flag("--no-inter", no_inter, "drop the inter-class term");
        app.add_flag("--no-intra-margin", no_intra_margin, "intra term without margins");
        app.add_flag("--no-inter-margin", no_inter_margin, "inter term with the constant target 2");
        app.add_option("--margin-mode", margin_mode, "ensemble | fixed-prefix")->capture_default_str();
        app.add_option("--kg-mode", kg_mode, "single | ensemble")->capture_default_str();
        app.add_option("--reduction", reduction, "cross-entropy reduction: mean | sum")->capture_default_str();
        app.add_option("--scope", scope, "training classes: base | all")->capture_default_str();
    }

    TrainConfig resolve() const {
        TrainConfig c = config;
        c.flags.use_intra = !no_intra;
        c.flags.use_inter = !no_inter;
        c.flags.intra_margin = c.flags.use_intra && !no_intra_margin;
        c.flags.inter_margin = c.flags.use_inter && !no_inter_margin;
        c.flags.margin_mode = margin_mode_from_string(margin_mode);
        c.kg_mode = kg_mode_from_string(kg_mode);
        c.reduction = reduction_from_string(reduction);
        c.scope = train_scope_from_string(scope);
        c.validate();
        return c;
    }
};

inline TemplatePool load_pool(const std::string& path) {
    return path.empty() ? TemplatePool() : TemplatePool::from_json(read_json_file(path));
}

inline NeighborSet load_neighbors(const std::string& path, const ClassSet& classes) {
    return NeighborSet::from_json(read_json_file(path), classes);
}

inline std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            require(normalize_name(item.substr(used)).empty(), ErrorKind::config, "bad number '" + item + "'");
        } catch (const std::logic_error&) {
            fail(ErrorKind::config, "bad number '" + item + "'");
        }
    }
    require(!out.empty(), ErrorKind::config, "empty value list");
    return out;
}

inline std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> out;
    for (double v : parse_list(text)) {
        require(v >= 0.0 && v == std::floor(v), ErrorKind::config, "seeds must be non-negative integers");
        out.push_back(static_cast<std::uint64_t>(v));
    }
    return out;
}

inline void emit(const std::string& path, const json& doc) {
    if (!path.empty()) write_json_file(path, doc);
}

}  // namespace detail

/// Runs the tool. `transport` is used by `neighbors generate` in online mode.
inline int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                    const Transport& transport = nullptr) {
    CLI::App app{"Semantically expanded prompt tuning on a frozen toy text encoder", "sept"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "expand every subcommand");

    std::string manifest_path, neighbors_path, templates_path, output_path, trained_path, csv_path;
    detail::TrainOptions topts;

    // synth
    SyntheticSpec spec;
    std::string synth_neighbors_out;
    bool sidecar = false;
    auto* synth = app.add_subcommand("synth", "generate a synthetic manifest (and neighbor file)");
    synth->add_option("--k", spec.classes, "number of classes")->capture_default_str();
    synth->add_option("--samples", spec.samples_per_class, "samples per class")->capture_default_str();
    synth->add_option("--folds", spec.folds)->capture_default_str();
    synth->add_option("--dim", spec.dim)->capture_default_str();
    synth->add_option("--sigma", spec.sigma, "per-coordinate noise standard deviation")->capture_default_str();
    synth->add_option("--seed", spec.seed)->capture_default_str();
    synth->add_option("--num-neighbors", spec.neighbors)->capture_default_str();
    synth->add_option("--neighbor-noise", spec.neighbor_noise)->capture_default_str();
    synth->add_option("--task", spec.task, "sound-event | emotion | instrument")->capture_default_str();
    synth->add_option("--name", spec.name)->capture_default_str();
    synth->add_option("--names", spec.names, "explicit class names (overrides --k and --task)")->delimiter(',');
    synth->add_option("-o,--output", output_path, "manifest path")->required();
    synth->add_option("--neighbors-out", synth_neighbors_out, "neighbor file path");
    synth->add_flag("--sidecar", sidecar, "store embeddings in a binary sidecar");

    // zero-shot
    std::size_t fold = 0;
    double tau = 0.01;
    auto* zero = app.add_subcommand("zero-shot", "accuracy of hand-crafted template embeddings");
    zero->add_option("-m,--manifest", manifest_path)->required();
    zero->add_option("--templates", templates_path, "template pool JSON (default: single default template)");
    zero->add_option("--fold", fold)->capture_default_str();
    zero->add_option("--tau", tau)->capture_default_str();

    // margins
    auto* margins = app.add_subcommand("margins", "build and save a margin table");
    margins->add_option("-m,--manifest", manifest_path)->required();
    margins->add_option("-n,--neighbor-file", neighbors_path)->required();
    margins->add_option("--templates", templates_path);
    margins->add_option("-o,--output", output_path)->required();
    margins->add_option("--margin-mode", topts.margin_mode)->capture_default_str();
    margins->add_option("--scope", topts.scope)->capture_default_str();
    margins->add_option("--num-neighbors", topts.config.neighbors)->capture_default_str();
    margins->add_option("--num-templates", topts.config.templates)->capture_default_str();

    // train
    std::string margins_path;
    bool filter_overlap = false;
    auto* train_cmd = app.add_subcommand("train", "optimise a context matrix");
    train_cmd->add_option("-m,--manifest", manifest_path)->required();
    train_cmd->add_option("-n,--neighbor-file", neighbors_path);
    train_cmd->add_option("--templates", templates_path);
    train_cmd->add_option("--margins", margins_path, "precomputed margin table");
    train_cmd->add_option("-o,--output", output_path)->required();
    train_cmd->add_flag("--filter-new-overlap", filter_overlap, "drop neighbors equal to a NEW class name first");
    topts.add_to(*train_cmd);

    // eval b2n / eval cross
    auto* eval = app.add_subcommand("eval", "evaluate a trained prompt");
    eval->require_subcommand(1);
    std::optional<std::size_t> eval_fold;
    auto* b2n = eval->add_subcommand("b2n", "base-to-new accuracies and harmonic mean");
    b2n->add_option("--trained", trained_path)->required();
    b2n->add_option("-m,--manifest", manifest_path)->required();
    b2n->add_option("--fold", eval_fold);
    b2n->add_option("-o,--output", output_path);
    b2n->add_option("--csv", csv_path);
    std::string source_path, target_path;
    auto* cross = eval->add_subcommand("cross", "source and target accuracy of one context");
    cross->add_option("--trained", trained_path)->required();
    cross->add_option("--source", source_path)->required();
    cross->add_option("--target", target_path)->required();
    cross->add_option("-o,--output", output_path);

    // run (train + evaluate over seeds and folds)
    std::string seeds_text = "0,1,2";
    auto* run = app.add_subcommand("run", "train and evaluate base-to-new over seeds and folds");
    run->add_option("-m,--manifest", manifest_path)->required();
    run->add_option("-n,--neighbor-file", neighbors_path);
    run->add_option("--templates", templates_path);
    run->add_option("--seeds", seeds_text)->capture_default_str();
    run->add_option("-o,--output", output_path);
    run->add_option("--csv", csv_path);
    run->add_flag("--filter-new-overlap", filter_overlap);
    topts.add_to(*run);

    // sweep
    std::string axis_text = "lambda", values_text;
    auto* sweep = app.add_subcommand("sweep", "one multi-seed run per setting of an axis");
    sweep->add_option("-m,--manifest", manifest_path)->required();
    sweep->add_option("-n,--neighbor-file", neighbors_path);
    sweep->add_option("--templates", templates_path);
    sweep->add_option("--axis", axis_text, "lambda | neighbors | flags | margin-mode")->capture_default_str();
    sweep->add_option("--values", values_text, "comma-separated values for lambda / neighbors");
    sweep->add_option("--seeds", seeds_text)->capture_default_str();
    sweep->add_option("-o,--output", output_path);
    sweep->add_option("--csv", csv_path);
    topts.add_to(*sweep);

    // neighbors stats | filter | generate
    auto* nb = app.add_subcommand("neighbors", "neighbor analytics and generation");
    nb->require_subcommand(1);
    std::string tmpl(kDefaultTemplate);
    auto* nb_stats = nb->add_subcommand("stats", "diversity and class/neighbor similarity statistics");
    nb_stats->add_option("-m,--manifest", manifest_path)->required();
    nb_stats->add_option("-n,--neighbor-file", neighbors_path)->required();
    nb_stats->add_option("--template", tmpl)->capture_default_str();
    nb_stats->add_option("-o,--output", output_path);
    auto* nb_filter = nb->add_subcommand("filter", "drop neighbors equal to a NEW class name");
    nb_filter->add_option("-m,--manifest", manifest_path)->required();
    nb_filter->add_option("-n,--neighbor-file", neighbors_path)->required();
    nb_filter->add_option("-o,--output", output_path)->required();
    LlmClientConfig llm;
    bool online = false;
    std::size_t per_class = 10;
    auto* nb_gen = nb->add_subcommand("generate", "ask a language model (or read a fixture) for neighbors");
    nb_gen->add_option("-m,--manifest", manifest_path)->required();
    nb_gen->add_option("-o,--output", output_path)->required();
    nb_gen->add_option("--num-neighbors", per_class)->capture_default_str();
    nb_gen->add_option("--fixture", llm.fixture_path, "offline source file");
    nb_gen->add_flag("--online", online, "call the endpoint instead of reading a fixture");
    nb_gen->add_option("--endpoint", llm.endpoint);
    nb_gen->add_option("--model", llm.model)->capture_default_str();
    nb_gen->add_option("--token-env", llm.token_env)->capture_default_str();
    nb_gen->add_option("--timeout", llm.timeout_seconds)->capture_default_str();
    nb_gen->add_option("--cache-dir", llm.cache_dir);
    nb_gen->add_option("--retries", llm.retries)->capture_default_str();

    // dump-embeddings
    auto* dump = app.add_subcommand("dump-embeddings", "JSON-lines class (and neighbor) embeddings");
    dump->add_option("-m,--manifest", manifest_path)->required();
    dump->add_option("--trained", trained_path, "use the learned context instead of templates");
    dump->add_option("-n,--neighbor-file", neighbors_path);
    dump->add_option("--templates", templates_path);
    dump->add_option("-o,--output", output_path)->required();

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitConfig;
    }

    const json no_seeds = json::object();
    try {
        if (*synth) {
            const DatasetManifest m = generate_synthetic(spec);
            save_manifest(output_path, m, sidecar);
            json hashes{{"classes", hex64(m.classes.hash())}, {"encoder", hex64(m.make_encoder().weight_hash())}};
            if (!synth_neighbors_out.empty()) {
                const NeighborSet n = generate_synthetic_neighbors(m, spec);
                write_json_file(synth_neighbors_out, n.to_json(m.classes));
                hashes["neighbors"] = hex64(neighbors_hash(n, m.classes.all_indices()));
            }
            out << json{{"manifest", output_path},
                        {"classes", m.classes.size()},
                        {"samples", m.samples.size()},
                        {"metadata", run_metadata(args, json{{"data", spec.seed}}, to_json(spec), hashes)}}
                       .dump(2)
                << "\n";
            return kExitOk;
        }

        if (*zero) {
            const DatasetManifest m = load_manifest(manifest_path);
            const TemplatePool pool = detail::load_pool(templates_path);
            const RunRecord split = zero_shot_base_to_new(m, pool, fold, tau);
            const double acc = zero_shot_accuracy(m, pool, fold, tau);
            out << json{{"accuracy", acc},
                        {"base", split.base},
                        {"new", split.novel},
                        {"h", split.h},
                        {"metadata", run_metadata(args, no_seeds, json{{"fold", fold}, {"tau", tau}},
                                                  json{{"pool", hex64(pool.hash())}})}}
                       .dump(2)
                << "\n";
            return kExitOk;
        }

        if (*margins) {
            const DatasetManifest m = load_manifest(manifest_path);
            TrainConfig c = topts.config;
            c.flags.margin_mode = margin_mode_from_string(topts.margin_mode);
            c.scope = train_scope_from_string(topts.scope);
            const FrozenEncoder enc = m.make_encoder();
            const NeighborSet all = detail::load_neighbors(neighbors_path, m.classes);
            const MarginTable table =
                margins_for(enc, m.classes, neighbors_for(all, c), pool_for(detail::load_pool(templates_path), c), c);
            json doc = table.to_json();
            doc["metadata"] = run_metadata(args, json{{"encoder", enc.config().seed}}, to_json(c),
                                           json{{"margin_table", hex64(table.hash())}});
            write_json_file(output_path, doc);
            out << json{{"margins", output_path}, {"hash", hex64(table.hash())}}.dump(2) << "\n";
            return kExitOk;
        }

        auto prepare_neighbors = [&](const DatasetManifest& m, std::optional<NeighborSet>& holder,
                                     json& hashes) -> const NeighborSet* {
            if (neighbors_path.empty()) return nullptr;
            holder = detail::load_neighbors(neighbors_path, m.classes);
            if (filter_overlap) {
                std::vector<std::string> new_names;
                for (std::size_t i : m.classes.new_indices()) new_names.push_back(m.classes.name(i));
                FilterResult f = filter_overlapping_neighbors(*holder, new_names);
                hashes["filtered_neighbors"] = f.removed;
                hashes["filtered_fraction"] = f.fraction;
                holder = std::move(f.neighbors);
            }
            return &*holder;
        };

        if (*train_cmd) {
            const TrainConfig c = topts.resolve();
            const DatasetManifest m = load_manifest(manifest_path);
            const TemplatePool pool = detail::load_pool(templates_path);
            std::optional<NeighborSet> holder;
            json extra = json::object();
            const NeighborSet* n = prepare_neighbors(m, holder, extra);
            std::optional<MarginTable> table;
            if (!margins_path.empty()) table = MarginTable::from_json(read_json_file(margins_path));
            const TrainedPrompt t = train(m, n, pool, c, table ? &*table : nullptr);
            json hashes{{"state", hex64(t.state_hash())},
                        {"encoder", hex64(t.encoder_hash)},
                        {"margin_table", hex64(t.margin_hash)},
                        {"pool", hex64(t.pool_hash)}};
            hashes.update(extra);
            json doc = to_json(t);
            doc["metadata"] = run_metadata(args, doc["seeds"], to_json(c), hashes);
            write_json_file(output_path, doc);
            out << json{{"trained", output_path},
                        {"state_hash", hex64(t.state_hash())},
                        {"final_loss", t.final_loss},
                        {"epochs", t.loss_history.size()}}
                       .dump(2)
                << "\n";
            return kExitOk;
        }

        if (*b2n) {
            const TrainedPrompt t = trained_prompt_from_json(read_json_file(trained_path));
            const DatasetManifest m = load_manifest(manifest_path);
            const RunRecord r = evaluate_base_to_new(t, m, eval_fold);
            const EvalReport report = EvalReport::aggregate({r}, config_hash(t.config));
            json doc = to_json(report);
            doc["metadata"] = run_metadata(args, json{{"train", t.config.seed}}, to_json(t.config),
                                           json{{"state", hex64(t.state_hash())}});
            detail::emit(output_path, doc);
            if (!csv_path.empty()) write_text_file(csv_path, to_csv(report));
            out << doc.dump(2) << "\n";
            return kExitOk;
        }

        if (*cross) {
            const TrainedPrompt t = trained_prompt_from_json(read_json_file(trained_path));
            const CrossResult r = evaluate_cross_dataset(t, load_manifest(source_path), load_manifest(target_path));
            json doc{{"source", r.source},
                     {"target", r.target},
                     {"metadata", run_metadata(args, json{{"train", t.config.seed}}, to_json(t.config),
                                               json{{"state", hex64(t.state_hash())}})}};
            detail::emit(output_path, doc);
            out << doc.dump(2) << "\n";
            return kExitOk;
        }

        if (*run) {
            const TrainConfig c = topts.resolve();
            const DatasetManifest m = load_manifest(manifest_path);
            const TemplatePool pool = detail::load_pool(templates_path);
            std::optional<NeighborSet> holder;
            json hashes = json::object();
            const NeighborSet* n = prepare_neighbors(m, holder, hashes);
            const auto seeds = detail::parse_seeds(seeds_text);
            const EvalReport report = run_base_to_new(m, n, pool, c, seeds);
            json doc = to_json(report);
            doc["metadata"] = run_metadata(args, json{{"train", seeds}}, to_json(c), hashes);
            detail::emit(output_path, doc);
            if (!csv_path.empty()) write_text_file(csv_path, to_csv(report));
            out << doc.dump(2) << "\n";
            return kExitOk;
        }

        if (*sweep) {
            const TrainConfig c = topts.resolve();
            const SweepAxis axis = sweep_axis_from_string(axis_text);
            const bool needs_values = axis == SweepAxis::lambda || axis == SweepAxis::neighbors;
            require(!needs_values || !values_text.empty(), ErrorKind::config, "--values is required for this axis");
            const DatasetManifest m = load_manifest(manifest_path);
            const TemplatePool pool = detail::load_pool(templates_path);
            std::optional<NeighborSet> holder;
            json hashes = json::object();
            const NeighborSet* n = prepare_neighbors(m, holder, hashes);
            const auto seeds = detail::parse_seeds(seeds_text);
            const SweepTable table = run_sweep(m, n, pool, axis,
                                               sweep_settings(axis, c, needs_values ? detail::parse_list(values_text)
                                                                                    : std::vector<double>{}),
                                               seeds);
            json doc = to_json(table);
            doc["metadata"] = run_metadata(args, json{{"train", seeds}}, to_json(c), hashes);
            detail::emit(output_path, doc);
            if (!csv_path.empty()) write_text_file(csv_path, to_csv(table));
            out << doc.dump(2) << "\n";
            return kExitOk;
        }

        if (*nb_stats) {
            const DatasetManifest m = load_manifest(manifest_path);
            const FrozenEncoder enc = m.make_encoder();
            const NeighborSet n = detail::load_neighbors(neighbors_path, m.classes);
            json per_class = json::array();
            if (n.per_class() >= 2)
                for (std::size_t i = 0; i < m.classes.size(); ++i)
                    per_class.push_back(json{{"class", m.classes.name(i)}, {"diversity", diversity_score(enc, n, i, tmpl)}});
            json doc{{"diversity", n.per_class() >= 2 ? json(dataset_diversity(enc, n, tmpl)) : json(nullptr)},
                     {"per_class", per_class},
                     {"similarity", to_json(neighbor_similarity_stats(enc, m.classes, n, tmpl))},
                     {"metadata", run_metadata(args, no_seeds, json{{"template", tmpl}},
                                               json{{"neighbors", hex64(neighbors_hash(n, m.classes.all_indices()))}})}};
            detail::emit(output_path, doc);
            out << doc.dump(2) << "\n";
            return kExitOk;
        }

        if (*nb_filter) {
            const DatasetManifest m = load_manifest(manifest_path);
            const NeighborSet n = detail::load_neighbors(neighbors_path, m.classes);
            std::vector<std::string> new_names;
            for (std::size_t i : m.classes.new_indices()) new_names.push_back(m.classes.name(i));
            const FilterResult f = filter_overlapping_neighbors(n, new_names);
            write_json_file(output_path, f.neighbors.to_json(m.classes));
            out << json{{"neighbors", output_path},
                        {"removed", f.removed},
                        {"total", f.total},
                        {"fraction", f.fraction},
                        {"metadata", run_metadata(args, no_seeds, json::object(),
                                                  json{{"neighbors", hex64(neighbors_hash(f.neighbors, m.classes.all_indices()))}})}}
                       .dump(2)
                << "\n";
            return kExitOk;
        }

        if (*nb_gen) {
            const DatasetManifest m = load_manifest(manifest_path);
            llm.offline = !online;
            const NeighborSet n = generate_neighbors(m.classes, llm, per_class, transport);
            for (const auto& v : neighbor_violations(n, m.classes, per_class)) log_warning(v);
            write_json_file(output_path, n.to_json(m.classes));
            out << json{{"neighbors", output_path},
                        {"per_class", n.per_class()},
                        {"violations", neighbor_violations(n, m.classes, per_class)},
                        {"metadata", run_metadata(args, no_seeds, json{{"model", llm.model}, {"offline", llm.offline}},
                                                  json{{"classes", hex64(m.classes.hash())}})}}
                       .dump(2)
                << "\n";
            return kExitOk;
        }

        if (*dump) {
            const DatasetManifest m = load_manifest(manifest_path);
            const FrozenEncoder enc = m.make_encoder();
            std::optional<TrainedPrompt> t;
            if (!trained_path.empty()) {
                t = trained_prompt_from_json(read_json_file(trained_path));
                check_compatible(*t, m, enc);
            }
            std::optional<NeighborSet> n;
            if (!neighbors_path.empty()) n = detail::load_neighbors(neighbors_path, m.classes);
            write_text_file(output_path, dump_embeddings(enc, m.classes, t ? &t->context : nullptr,
                                                         detail::load_pool(templates_path), n ? &*n : nullptr));
            out << json{{"embeddings", output_path}}.dump(2) << "\n";
            return kExitOk;
        }
    } catch (const Error& e) {
        err << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const json::exception& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    }
    err << app.help();
    return kExitConfig;
}

inline int cli_main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return cli_main(args, std::cout, std::cerr);
}

}  // namespace sept
