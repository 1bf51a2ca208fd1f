// hgda: generate shifted graph pairs, train the three-channel adaptation
// model, and inspect runs.

#include "manifest.hpp"

#include "hgda/hgda.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>

namespace fs = std::filesystem;
using namespace hgda;
using hgda::cli::RunManifest;
using hgda::cli::read_json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

void write_text(const fs::path& p, const std::string& s) { io_detail::write_file(p, s); }

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << '\n'; }

struct GenArgs {
    std::string spec;
    std::string out;
    std::optional<std::uint64_t> seed;
};

// A spec file holds either one GenSpec or {"source": ..., "target": ...};
// the pair form shares class centers between the two graphs.
int cmd_gen(const GenArgs& a, bool quiet) {
    const auto t0 = Clock::now();
    const auto j = read_json(a.spec);
    const fs::path out = a.out;
    fs::create_directories(out);
    RunManifest manifest("gen", j);
    manifest.add_input("spec", a.spec);

    const auto with_seed = [&](GenSpec s) {
        if (a.seed) s.seed = *a.seed;
        return s;
    };
    if (j.contains("source") && j.contains("target")) {
        const GenSpec s = with_seed(gen_spec_from_json(j.at("source")));
        GenSpec t = gen_spec_from_json(j.at("target"));
        if (a.seed) t.seed = *a.seed + 1;
        const auto [gs, gt] = generate_pair(s, t);
        save_graph(gs, out / "source");
        save_graph(gt, out / "target");
        for (const char* sub : {"source", "target"})
            for (const auto& f : cli::input_files(out / sub))
                manifest.add_output(f, (fs::path(sub) / f.filename()).string());
        if (!quiet)
            std::cerr << "wrote " << (out / "source").string() << " and " << (out / "target").string() << '\n';
    } else {
        const Graph g = generate(with_seed(gen_spec_from_json(j)));
        save_graph(g, out);
        for (const auto& f : cli::input_files(out)) manifest.add_output(f);
        if (!quiet) std::cerr << "wrote " << g.num_nodes << " nodes, " << g.num_edges() << " edges to " << out.string() << '\n';
    }
    manifest.write(out, seconds_since(t0));
    return 0;
}

struct TrainArgs {
    std::string source, target, config, out;
    std::optional<int> epochs;
    std::optional<double> alpha, beta;
    std::optional<std::uint64_t> seed;
    int eval_every = 1;
};

HgdaConfig resolve_config(const std::string& path, const TrainArgs& a) {
    HgdaConfig cfg = path.empty() ? HgdaConfig{} : config_from_json(read_json(path));
    if (a.epochs) cfg.epochs = *a.epochs;
    if (a.alpha) cfg.alpha = *a.alpha;
    if (a.beta) cfg.beta = *a.beta;
    if (a.seed) cfg.seed = *a.seed;
    cfg.validate();
    return cfg;
}

int cmd_train(const TrainArgs& a, bool quiet) {
    const auto t0 = Clock::now();
    const HgdaConfig cfg = resolve_config(a.config, a);
    const Graph source = load_graph(a.source);
    const Graph target = load_graph(a.target);
    const fs::path out = a.out;
    fs::create_directories(out);

    TrainOptions opts;
    opts.eval_every = a.eval_every;
    if (!quiet)
        opts.on_epoch = [&](const EpochRecord& e) {
            if (!e.tgt_acc && e.epoch + 1 != cfg.epochs) return;
            std::fprintf(stderr, "epoch %4d  loss %.5f  L_H %.5f  L_S %.5f  L_T %.5f", e.epoch, e.loss_total, e.loss_h,
                         e.loss_s, e.loss_t);
            if (e.src_acc) std::fprintf(stderr, "  src %.4f", *e.src_acc);
            if (e.tgt_acc) std::fprintf(stderr, "  tgt %.4f", *e.tgt_acc);
            std::fputc('\n', stderr);
        };
    const auto result = train(source, target, cfg, opts);

    write_text(out / "checkpoint.json", checkpoint_json(result.model, cfg, result.optimizer, cfg.epochs).dump() + "\n");
    write_text(out / "report.json", to_json(result.report).dump(2) + "\n");
    write_text(out / "metrics.csv", metrics_csv(result.report));

    RunManifest manifest("train", to_json(cfg));
    manifest.add_input("source", a.source);
    manifest.add_input("target", a.target);
    if (!a.config.empty()) manifest.add_input("config", a.config);
    for (const char* f : {"checkpoint.json", "report.json", "metrics.csv"}) manifest.add_output(out / f);
    manifest.write(out, seconds_since(t0));
    if (!quiet && result.report.final_target_accuracy)
        std::fprintf(stderr, "final target accuracy %.4f\n", *result.report.final_target_accuracy);
    return 0;
}

// Inputs for the read-only commands: a finished run, or explicit graphs.
struct Inputs {
    std::string run, source, target, checkpoint;
};

struct Resolved {
    std::optional<Graph> source;
    Graph target;
    std::optional<Checkpoint> model;
};

Resolved resolve(const Inputs& in, bool need_model) {
    Resolved r;
    std::string source = in.source, target = in.target, checkpoint = in.checkpoint;
    if (!in.run.empty()) {
        const auto manifest = cli::verify_manifest(in.run);
        const auto& inputs = manifest.at("inputs");
        if (source.empty()) source = inputs.at("source").at("path").get<std::string>();
        if (target.empty()) target = inputs.at("target").at("path").get<std::string>();
        if (checkpoint.empty()) checkpoint = (fs::path(in.run) / "checkpoint.json").string();
    }
    if (target.empty()) throw std::invalid_argument("need --run or --target");
    if (need_model && checkpoint.empty()) throw std::invalid_argument("need --run or --checkpoint");
    if (!source.empty()) r.source = load_graph(source);
    r.target = load_graph(target);
    if (!checkpoint.empty()) r.model = checkpoint_from_json(read_json(checkpoint));
    return r;
}

nlohmann::json optional_json(const std::optional<double>& x) { return x ? nlohmann::json(*x) : nlohmann::json(nullptr); }

std::optional<double> accuracy_of(const HgdaModel& m, const Graph& g) {
    if (!g.labels) return std::nullopt;
    try {
        return evaluate(m, g).accuracy;
    } catch (const std::invalid_argument&) {
        return std::nullopt;  // no labeled nodes
    }
}

int cmd_eval(const Inputs& in) {
    const auto r = resolve(in, true);
    const auto& model = r.model->model;
    print_json({{"source_accuracy", r.source ? optional_json(accuracy_of(model, *r.source)) : nlohmann::json(nullptr)},
                {"target_accuracy", optional_json(accuracy_of(model, r.target))},
                {"seed", r.model->config.seed}});
    return 0;
}

int cmd_subgroup(const Inputs& in, int bins) {
    if (bins != kHistogramBins)
        throw std::invalid_argument("--bins must be " + std::to_string(kHistogramBins) + " (fixed binning)");
    const auto r = resolve(in, false);
    if (!r.source) throw std::invalid_argument("subgroup needs a source graph");
    if (r.model) {
        const auto preds = evaluate(r.model->model, r.target).predictions;
        print_json(to_json(subgroup_profile(*r.source, r.target, &preds)));
    } else {
        print_json(to_json(subgroup_profile(*r.source, r.target)));
    }
    return 0;
}

int cmd_diagnose(const Inputs& in) {
    const auto r = resolve(in, false);
    if (!r.source) throw std::invalid_argument("diagnose needs a source graph");
    auto j = to_json(bound_diagnostics(*r.source, r.target));
    const auto hs = heterophily_histogram(*r.source);
    const auto ht = heterophily_histogram(r.target);
    j["wasserstein1_heterophily_hist"] = wasserstein1_histogram(hs, ht);
    j["source_heterophily_hist"] = to_json(hs);
    j["target_heterophily_hist"] = to_json(ht);
    print_json(j);
    return 0;
}

std::string csv_number(std::optional<double> x) {
    if (!x) return "";
    std::string s;
    io_detail::append_double(s, *x);
    return s;
}

std::string csv_escape(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '"') c = ' ';
    return s;
}

/// grid.json: {"source": dir, "target": dir, "alpha": [..], "beta": [..],
/// "seeds": [..], "config": {...}}. Relative paths resolve against the grid file.
int cmd_sweep(const std::string& grid_path, const std::string& out_dir, bool quiet) {
    const auto t0 = Clock::now();
    const auto grid = read_json(grid_path);
    const fs::path base = fs::path(grid_path).parent_path();
    const auto resolve_path = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    const fs::path source_dir = resolve_path(grid.at("source").get<std::string>());
    const fs::path target_dir = resolve_path(grid.at("target").get<std::string>());
    const auto alphas = grid.at("alpha").get<std::vector<double>>();
    const auto betas = grid.at("beta").get<std::vector<double>>();
    const auto seeds = grid.at("seeds").get<std::vector<std::uint64_t>>();
    const HgdaConfig base_cfg = config_from_json(grid.value("config", nlohmann::json::object()));
    const Graph source = load_graph(source_dir);
    const Graph target = load_graph(target_dir);
    const fs::path out = out_dir;
    fs::create_directories(out);

    std::string rows = "alpha,beta,seed,status,source_accuracy,target_accuracy,message\n";
    std::string agg = "alpha,beta,runs,ok,mean_source_accuracy,mean_target_accuracy\n";
    TrainOptions opts;
    opts.eval_every = 0;
    opts.analyze = false;
    for (double alpha : alphas) {
        for (double beta : betas) {
            double sum_src = 0.0, sum_tgt = 0.0;
            int ok = 0, tgt_count = 0;
            for (std::uint64_t seed : seeds) {
                HgdaConfig cfg = base_cfg;
                cfg.alpha = alpha;
                cfg.beta = beta;
                cfg.seed = seed;
                std::string status = "ok", message;
                std::optional<double> src_acc, tgt_acc;
                try {
                    const auto r = train(source, target, cfg, opts);
                    src_acc = r.report.final_source_accuracy;
                    tgt_acc = r.report.final_target_accuracy;
                    ++ok;
                    sum_src += src_acc.value_or(0.0);
                    if (tgt_acc) {
                        sum_tgt += *tgt_acc;
                        ++tgt_count;
                    }
                } catch (const std::exception& e) {
                    status = "failed";
                    message = csv_escape(e.what());
                }
                rows += csv_number(alpha) + ',' + csv_number(beta) + ',' + std::to_string(seed) + ',' + status + ',' +
                        csv_number(src_acc) + ',' + csv_number(tgt_acc) + ',' + message + '\n';
                if (!quiet)
                    std::fprintf(stderr, "alpha=%g beta=%g seed=%llu %s\n", alpha, beta,
                                 static_cast<unsigned long long>(seed), status.c_str());
            }
            agg += csv_number(alpha) + ',' + csv_number(beta) + ',' + std::to_string(seeds.size()) + ',' +
                   std::to_string(ok) + ',' + csv_number(ok ? std::optional(sum_src / ok) : std::nullopt) + ',' +
                   csv_number(tgt_count ? std::optional(sum_tgt / tgt_count) : std::nullopt) + '\n';
        }
    }
    write_text(out / "sweep.csv", rows);
    write_text(out / "aggregate.csv", agg);
    RunManifest manifest("sweep", grid);
    manifest.add_input("grid", grid_path);
    manifest.add_input("source", source_dir);
    manifest.add_input("target", target_dir);
    manifest.add_output(out / "sweep.csv");
    manifest.add_output(out / "aggregate.csv");
    manifest.write(out, seconds_since(t0));
    return 0;
}

void add_inputs(CLI::App* cmd, Inputs& in) {
    cmd->add_option("--run", in.run, "run directory written by `train`");
    cmd->add_option("--source", in.source, "source dataset directory");
    cmd->add_option("--target", in.target, "target dataset directory");
    cmd->add_option("--checkpoint", in.checkpoint, "checkpoint.json to use instead of the run's");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Homophily-aware graph domain adaptation"};
    app.require_subcommand(1);
    bool quiet = false;
    app.add_flag("--quiet,-q", quiet, "no progress output")->configurable(false);

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic graph or source/target pair");
    gen_cmd->add_option("spec", gen.spec, "generator spec JSON")->required()->check(CLI::ExistingFile);
    gen_cmd->add_option("--out", gen.out, "output directory")->required();
    gen_cmd->add_option("--seed", gen.seed, "override the spec seed");
    gen_cmd->add_flag("--quiet", quiet);

    TrainArgs tr;
    auto* train_cmd = app.add_subcommand("train", "train on a labeled source and an unlabeled target");
    train_cmd->add_option("--source", tr.source)->required();
    train_cmd->add_option("--target", tr.target)->required();
    train_cmd->add_option("--config", tr.config, "model/training config JSON")->check(CLI::ExistingFile);
    train_cmd->add_option("--out", tr.out)->required();
    train_cmd->add_option("--epochs", tr.epochs);
    train_cmd->add_option("--alpha", tr.alpha);
    train_cmd->add_option("--beta", tr.beta);
    train_cmd->add_option("--seed", tr.seed);
    train_cmd->add_option("--eval-every", tr.eval_every, "evaluate every N epochs (0 = only at the end)");
    train_cmd->add_flag("--quiet", quiet);

    Inputs eval_in, sub_in, diag_in;
    auto* eval_cmd = app.add_subcommand("eval", "accuracy of a trained model");
    add_inputs(eval_cmd, eval_in);
    int bins = kHistogramBins;
    auto* sub_cmd = app.add_subcommand("subgroup", "per-homophily-bin proportions and accuracy");
    add_inputs(sub_cmd, sub_in);
    sub_cmd->add_option("--bins", bins);
    auto* diag_cmd = app.add_subcommand("diagnose", "distribution-shift terms between two graphs");
    add_inputs(diag_cmd, diag_in);

    std::string grid, sweep_out;
    auto* sweep_cmd = app.add_subcommand("sweep", "alpha/beta/seed grid");
    sweep_cmd->add_option("--grid", grid)->required()->check(CLI::ExistingFile);
    sweep_cmd->add_option("--out", sweep_out)->required();
    sweep_cmd->add_flag("--quiet", quiet);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen_cmd) return cmd_gen(gen, quiet);
        if (*train_cmd) return cmd_train(tr, quiet);
        if (*eval_cmd) return cmd_eval(eval_in);
        if (*sub_cmd) return cmd_subgroup(sub_in, bins);
        if (*diag_cmd) return cmd_diagnose(diag_in);
        if (*sweep_cmd) return cmd_sweep(grid, sweep_out, quiet);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
