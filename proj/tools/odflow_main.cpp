// Command-line front end for the whole pipeline:
//   solve -> generate -> train -> eval -> analyze -> export-plots
//
// Options resolve in two layers: an optional JSON config file (--config)
// supplies defaults, explicit flags win. Every command that writes an
// output directory drops an effective_config.json there that reproduces
// the run exactly.
//
// Exit codes: 0 success, 1 usage/input error, 2 non-convergence,
// 3 numeric failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "odflow/odflow.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace odflow;

namespace {

struct ConfigLayer {
    json values = json::object();
    std::set<std::string> consumed;
    std::vector<std::string> errors;

    void load(const std::string& path) {
        if (path.empty()) return;
        try {
            values = json::parse(read_file(path));
        } catch (const json::exception& e) {
            throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
        }
        if (!values.is_object()) throw ConfigError("config file " + path + " must hold a JSON object");
    }

    template <typename T>
    void merge(const CLI::Option* opt, const std::string& key, T& target) {
        consumed.insert(key);
        if (opt && opt->count() > 0) return;  // flags win
        if (!values.contains(key)) return;
        try {
            target = values.at(key).get<T>();
        } catch (const json::exception&) {
            errors.push_back("config key '" + key + "' has the wrong type");
        }
    }

    void finish(const std::string& command) {
        for (const auto& [key, value] : values.items())
            if (!consumed.count(key))
                errors.push_back("config key '" + key + "' is not recognized by '" + command + "'");
        if (!errors.empty()) {
            std::string msg = "invalid configuration:";
            for (const auto& e : errors) msg += "\n  - " + e;
            throw ConfigError(msg);
        }
    }
};

// Removes an output directory created by a failed command, but never a
// directory that existed before the command started.
class OutputDir {
  public:
    explicit OutputDir(const fs::path& dir) : dir_(dir), existed_(fs::exists(dir)) {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (!fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
    }
    void keep() { committed_ = true; }
    ~OutputDir() {
        if (!committed_ && !existed_) {
            std::error_code ec;
            fs::remove_all(dir_, ec);
        }
    }
    const fs::path& path() const { return dir_; }

  private:
    fs::path dir_;
    bool existed_;
    bool committed_ = false;
};

Network load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open network file: " + path);
    try {
        return parse_tntp_network(in);
    } catch (const Error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

DemandMatrix load_trips(const std::string& path, const Network& net) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trips file: " + path);
    try {
        return parse_tntp_trips(in, net.node_count);
    } catch (const Error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::string network_digest(const Network& net) {
    return digest_string(fnv1a64(serialize_tntp_network(net)));
}

void write_effective_config(const fs::path& dir, const json& cfg) {
    write_file(dir / "effective_config.json", cfg.dump(2) + "\n");
}

std::vector<ScenarioKind> parse_scenarios(const std::string& value) {
    if (value.empty() || value == "all") return all_scenarios();
    return {scenario_from_string(value)};
}

// ---------------------------------------------------------------- solve

struct SolveArgs {
    std::string net, trips, out = "solve_out", config;
    double gap = 1e-4, demand_scale = 1.0, line_search_tol = 1e-8;
    int max_iters = 500;
    bool no_first_thru = false;
};

int cmd_solve(const SolveArgs& a) {
    if (!(a.demand_scale > 0)) throw DomainError("--demand-scale must be > 0");
    Network net = load_network(a.net);
    DemandMatrix demand = load_trips(a.trips, net);
    if (a.demand_scale != 1.0) demand = scale_demand(demand, a.demand_scale);

    FwConfig cfg;
    cfg.max_iterations = a.max_iters;
    cfg.relative_gap_tol = a.gap;
    cfg.line_search_tol = a.line_search_tol;
    cfg.honor_first_thru = !a.no_first_thru;

    OutputDir out(a.out);
    const FwResult result = frank_wolfe_solve(net, demand, cfg);
    const auto residual = node_balance_residual(net, demand, result.flows);
    double max_residual = 0.0;
    for (double r : residual) max_residual = std::max(max_residual, std::abs(r));

    json summary = fw_result_to_json(result);
    summary["max_node_balance_residual"] = max_residual;
    summary["network"] = a.net;
    summary["trips"] = a.trips;
    summary["demand_scale"] = a.demand_scale;
    write_file(out.path() / "summary.json", summary.dump(2) + "\n");
    write_file(out.path() / "flows.csv", flows_to_csv(net, result.flows, result.travel_times));
    write_effective_config(out.path(), json{{"command", "solve"},
                                            {"net", a.net},
                                            {"trips", a.trips},
                                            {"out", a.out},
                                            {"gap", a.gap},
                                            {"max_iters", a.max_iters},
                                            {"line_search_tol", a.line_search_tol},
                                            {"demand_scale", a.demand_scale},
                                            {"no_first_thru", a.no_first_thru}});
    out.keep();
    std::cout << "solve: gap=" << format_double(result.relative_gap)
              << " iterations=" << result.iterations_used
              << " beckmann=" << format_double(result.beckmann_value)
              << " converged=" << (result.converged ? "yes" : "no") << "\n";
    return result.converged ? 0 : 2;
}

// -------------------------------------------------------------- generate

struct GenerateArgs {
    std::string net, trips, out, scenario = "all", config;
    int n = 50, workers = 1, max_iters = 4000, redraw_budget = 8;
    double gap = 1e-4;
    std::uint64_t seed = 42;
};

int cmd_generate(const GenerateArgs& a) {
    Network net = load_network(a.net);
    DemandMatrix base = load_trips(a.trips, net);

    GenerateOptions opt;
    opt.n_per_scenario = a.n;
    opt.seed = a.seed;
    opt.fw.max_iterations = a.max_iters;
    opt.fw.relative_gap_tol = a.gap;
    opt.scenarios = parse_scenarios(a.scenario);
    opt.workers = a.workers;
    opt.redraw_budget = a.redraw_budget;

    OutputDir out(a.out);
    ScenarioDataset ds = generate_dataset(net, base, opt);
    const DatasetManifest manifest = write_dataset(ds, out.path());
    write_effective_config(out.path(), json{{"command", "generate"},
                                            {"net", a.net},
                                            {"trips", a.trips},
                                            {"out", a.out},
                                            {"n", a.n},
                                            {"scenario", a.scenario},
                                            {"seed", a.seed},
                                            {"workers", a.workers},
                                            {"gap", a.gap},
                                            {"max_iters", a.max_iters},
                                            {"redraw_budget", a.redraw_budget}});
    out.keep();
    std::cout << "generate: " << ds.samples.size() << " samples, content digest "
              << manifest.content_digest << "\n";
    for (const auto& w : manifest.warnings) std::cout << "warning: " << w << "\n";
    return 0;
}

// ----------------------------------------------------------------- train

struct TrainArgs {
    std::string net, dataset, out = "train_out", scenario = "all", config;
    std::string filter = "random_walk", combine = "hadamard", optimizer = "adam";
    double lr = 1e-3, input_scale = 1.0;
    double split_train = 0.7, split_val = 0.2, split_test = 0.1;
    int iters = 10000, eval_every = 50, patience = 0, batch_size = 0;
    std::uint64_t seed = 42, split_seed = 7;
};

std::vector<const SampleRecord*> select_samples(const ScenarioDataset& ds,
                                                const std::string& scenario) {
    std::vector<const SampleRecord*> out;
    const auto kinds = parse_scenarios(scenario);
    for (const auto& s : ds.samples)
        if (std::find(kinds.begin(), kinds.end(), s.scenario) != kinds.end()) out.push_back(&s);
    if (out.empty()) throw ConfigError("no samples in dataset for scenario '" + scenario + "'");
    return out;
}

int cmd_train(const TrainArgs& a) {
    Network net = load_network(a.net);
    ScenarioDataset ds = read_dataset(a.dataset);
    if (network_digest(net) != ds.manifest.network_digest)
        throw ValidationError("network file " + a.net + " (digest " + network_digest(net) +
                              ") is not the network this dataset was generated from (digest " +
                              ds.manifest.network_digest + ")");

    const GraphMatrices g = build_graph_matrices(net);
    ModelConfig mc;
    mc.filter = filter_from_string(a.filter);
    mc.theta_combine = combine_from_string(a.combine);
    mc.input_scale = a.input_scale;
    mc.seed = a.seed;

    SplitSpec spec;
    spec.train = a.split_train;
    spec.val = a.split_val;
    spec.test = a.split_test;
    spec.seed = a.split_seed;
    const Split split = split_dataset(select_samples(ds, a.scenario), spec);

    TrainConfig tc;
    tc.optimizer = ad::optimizer_from_string(a.optimizer);
    tc.learning_rate = a.lr;
    tc.max_iterations = a.iters;
    tc.eval_every = a.eval_every;
    tc.early_stop_patience = a.patience;
    tc.batch_size = a.batch_size;
    tc.seed = a.seed;

    OutputDir out(a.out);
    GcnnModel model = make_model(net, mc);
    ad::OptimizerState opt_state;
    const TrainReport report = train(model, g, split.train, split.val, tc, &opt_state);
    const Metrics test_metrics = evaluate(model, g, split.test);

    Checkpoint ck;
    ck.model = std::move(model);
    ck.optimizer = std::move(opt_state);
    ck.rng_seed = a.seed;
    ck.iterations = report.curve.empty() ? 0 : report.curve.back().iteration;
    ck.network_digest = ds.manifest.network_digest;
    ck.dataset_digest = ds.manifest.content_digest;
    ck.scenario = a.scenario;
    ck.split_train = spec.train;
    ck.split_val = spec.val;
    ck.split_test = spec.test;
    ck.split_seed = spec.seed;
    save_checkpoint(ck, out.path() / "checkpoint.json");

    json report_json = {{"curve_points", report.curve.size()},
                        {"best_iteration", report.best_iteration},
                        {"best_val_mse", report.best_val_mse},
                        {"wall_seconds", report.wall_seconds},
                        {"train_metrics", metrics_to_json(report.train_metrics)},
                        {"val_metrics", metrics_to_json(report.val_metrics)},
                        {"test_metrics", metrics_to_json(test_metrics)},
                        {"config", report.config_echo}};
    write_file(out.path() / "report.json", report_json.dump(2) + "\n");
    write_file(out.path() / "loss_curve.csv", export_loss_curve(report));
    write_effective_config(out.path(), json{{"command", "train"},
                                            {"net", a.net},
                                            {"dataset", a.dataset},
                                            {"out", a.out},
                                            {"scenario", a.scenario},
                                            {"filter", a.filter},
                                            {"theta_combine", a.combine},
                                            {"optimizer", a.optimizer},
                                            {"lr", a.lr},
                                            {"input_scale", a.input_scale},
                                            {"iters", a.iters},
                                            {"eval_every", a.eval_every},
                                            {"patience", a.patience},
                                            {"batch_size", a.batch_size},
                                            {"seed", a.seed},
                                            {"split_seed", a.split_seed},
                                            {"split_train", a.split_train},
                                            {"split_val", a.split_val},
                                            {"split_test", a.split_test}});
    out.keep();
    std::cout << "train: best val mse " << format_double(report.best_val_mse) << " at iteration "
              << report.best_iteration << ", test pct_error "
              << format_double(test_metrics.pct_error_over_mean) << ", test r2 "
              << format_double(test_metrics.r2) << "\n";
    return 0;
}

// ------------------------------------------------------------------ eval

struct EvalArgs {
    std::string checkpoint, net, dataset, split = "test", out, config;
};

int cmd_eval(const EvalArgs& a) {
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    Network net = load_network(a.net);
    if (net.node_count != ck.model.n_nodes || net.link_count() != ck.model.n_links)
        throw ShapeError("checkpoint was trained on a network with " +
                         std::to_string(ck.model.n_nodes) + " nodes / " +
                         std::to_string(ck.model.n_links) + " links (digest " +
                         ck.network_digest + "), but " + a.net + " has " +
                         std::to_string(net.node_count) + " nodes / " +
                         std::to_string(net.link_count()) + " links");
    if (network_digest(net) != ck.network_digest)
        throw ValidationError("network file digest does not match the checkpoint's network");

    ScenarioDataset ds = read_dataset(a.dataset);
    if (ds.manifest.content_digest != ck.dataset_digest)
        std::cout << "note: dataset digest differs from the one used in training\n";
    if (!ds.samples.empty() && (ds.samples.front().demand.rows() != ck.model.n_nodes ||
                                static_cast<int>(ds.samples.front().flows.size()) != ck.model.n_links))
        throw ShapeError("dataset dimensions (" + std::to_string(ds.samples.front().demand.rows()) +
                         " nodes / " + std::to_string(ds.samples.front().flows.size()) +
                         " links) do not match the checkpoint's network (" +
                         std::to_string(ck.model.n_nodes) + " / " +
                         std::to_string(ck.model.n_links) + ")");

    SplitSpec spec;
    spec.train = ck.split_train;
    spec.val = ck.split_val;
    spec.test = ck.split_test;
    spec.seed = ck.split_seed;
    const auto samples = select_samples(ds, ck.scenario.empty() ? "all" : ck.scenario);

    std::vector<const SampleRecord*> chosen;
    if (a.split == "all") {
        chosen = samples;
    } else {
        const Split split = split_dataset(samples, spec);
        if (a.split == "train") chosen = split.train;
        else if (a.split == "val") chosen = split.val;
        else if (a.split == "test") chosen = split.test;
        else throw ConfigError("--split must be train, val, test or all");
    }

    const GraphMatrices g = build_graph_matrices(net);
    const Metrics m = evaluate(ck.model, g, chosen);
    json out_json = metrics_to_json(m);
    out_json["split"] = a.split;
    out_json["samples"] = chosen.size();
    std::cout << out_json.dump(2) << "\n";
    if (!a.out.empty()) {
        OutputDir out(a.out);
        write_file(out.path() / "metrics.json", out_json.dump(2) + "\n");
        write_effective_config(out.path(), json{{"command", "eval"},
                                                {"checkpoint", a.checkpoint},
                                                {"net", a.net},
                                                {"dataset", a.dataset},
                                                {"split", a.split},
                                                {"out", a.out}});
        out.keep();
    }
    return 0;
}

// --------------------------------------------------------------- analyze

struct AnalyzeArgs {
    std::string net, dataset, checkpoint, scenario = "all", out = "analysis_out", config;
};

int cmd_analyze(const AnalyzeArgs& a) {
    Network net = load_network(a.net);
    ScenarioDataset ds = read_dataset(a.dataset);
    if (network_digest(net) != ds.manifest.network_digest)
        throw ValidationError("network file does not match the dataset's network digest");

    OutputDir out(a.out);
    const CentralityReport report = centrality_study(net, ds, parse_scenarios(a.scenario));
    write_file(out.path() / "centrality_summary.csv", centrality_summary_csv(report));
    write_file(out.path() / "centrality_values.csv", centrality_values_csv(report));

    json audit;
    const ClassSeparation sep = class_separation_audit(net, ds);
    audit["class_separation"] = {{"uncongested_mean_max_ratio", sep.uncongested_mean_max_ratio},
                                 {"moderate_mean_q95", sep.moderate_mean_q95},
                                 {"separated", sep.separated}};

    if (!a.checkpoint.empty()) {
        const Checkpoint ck = load_checkpoint(a.checkpoint);
        if (ck.model.n_nodes != net.node_count)
            throw ShapeError("checkpoint network (" + std::to_string(ck.model.n_nodes) +
                             " nodes) does not match " + a.net + " (" +
                             std::to_string(net.node_count) + " nodes)");
        const WeightDistribution wd = weight_distribution(ck.model, ck.scenario);
        write_file(out.path() / "weight_distribution.csv", weight_distribution_csv(wd));

        // Rank correlation between mean node loading weight and mean
        // betweenness, reported for interpretation, not asserted.
        std::vector<double> mean_weight, mean_centrality(net.node_count, 0.0);
        for (const auto& row : wd.rows) mean_weight.push_back(row.mean);
        if (!report.values.empty()) {
            for (const auto& sample : report.values)
                for (int v = 0; v < net.node_count; ++v) mean_centrality[v] += sample[v];
            for (auto& c : mean_centrality) c /= static_cast<double>(report.values.size());
            audit["weight_centrality_spearman"] =
                spearman_rank_correlation(mean_weight, mean_centrality);
        }
    }
    write_file(out.path() / "audit.json", audit.dump(2) + "\n");
    write_effective_config(out.path(), json{{"command", "analyze"},
                                            {"net", a.net},
                                            {"dataset", a.dataset},
                                            {"checkpoint", a.checkpoint},
                                            {"scenario", a.scenario},
                                            {"out", a.out}});
    out.keep();
    std::cout << "analyze: " << report.values.size() << " samples summarized\n";
    return 0;
}

// ----------------------------------------------------------- export-plots

struct ExportArgs {
    std::string report, checkpoint, net, dataset, split = "test", out = "plots_out", config;
};

int cmd_export_plots(const ExportArgs& a) {
    if (a.report.empty() && a.checkpoint.empty())
        throw ConfigError("export-plots needs --report and/or --checkpoint");
    OutputDir out(a.out);
    if (!a.report.empty()) {
        json rj;
        try {
            rj = json::parse(read_file(a.report));
        } catch (const json::exception& e) {
            throw IntegrityError("report " + a.report + " is not valid JSON: " + e.what());
        }
        // loss_curve.csv may sit next to the report already; regenerate from
        // the report when it embeds the curve, otherwise copy the sibling.
        const fs::path sibling = fs::path(a.report).parent_path() / "loss_curve.csv";
        if (fs::exists(sibling)) {
            write_file(out.path() / "loss_curve.csv", read_file(sibling));
        } else {
            throw IoError("loss_curve.csv not found next to " + a.report);
        }
    }
    if (!a.checkpoint.empty()) {
        if (a.net.empty() || a.dataset.empty())
            throw ConfigError("scatter export needs --net and --dataset");
        const Checkpoint ck = load_checkpoint(a.checkpoint);
        Network net = load_network(a.net);
        if (net.node_count != ck.model.n_nodes || net.link_count() != ck.model.n_links)
            throw ShapeError("checkpoint/network dimension mismatch");
        ScenarioDataset ds = read_dataset(a.dataset);
        SplitSpec spec;
        spec.train = ck.split_train;
        spec.val = ck.split_val;
        spec.test = ck.split_test;
        spec.seed = ck.split_seed;
        const auto samples = select_samples(ds, ck.scenario.empty() ? "all" : ck.scenario);
        std::vector<const SampleRecord*> chosen;
        if (a.split == "all") {
            chosen = samples;
        } else {
            const Split split = split_dataset(samples, spec);
            chosen = a.split == "train" ? split.train : a.split == "val" ? split.val : split.test;
        }
        const GraphMatrices g = build_graph_matrices(net);
        write_file(out.path() / "scatter.csv", export_scatter(ck.model, g, chosen));
    }
    write_effective_config(out.path(), json{{"command", "export-plots"},
                                            {"report", a.report},
                                            {"checkpoint", a.checkpoint},
                                            {"net", a.net},
                                            {"dataset", a.dataset},
                                            {"split", a.split},
                                            {"out", a.out}});
    out.keep();
    std::cout << "export-plots: wrote " << out.path().string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"User-equilibrium dataset generation and graph-convolutional "
                 "link-flow surrogate toolkit"};
    app.require_subcommand(1);

    SolveArgs solve_args;
    auto* solve = app.add_subcommand("solve", "Solve one user-equilibrium assignment");
    auto* so_net = solve->add_option("--net", solve_args.net, "TNTP network file");
    auto* so_trips = solve->add_option("--trips", solve_args.trips, "TNTP trips file");
    auto* so_out = solve->add_option("--out", solve_args.out, "output directory");
    auto* so_gap = solve->add_option("--gap", solve_args.gap, "relative gap tolerance");
    auto* so_iters = solve->add_option("--max-iters", solve_args.max_iters, "iteration budget");
    auto* so_ls = solve->add_option("--line-search-tol", solve_args.line_search_tol, "");
    auto* so_scale = solve->add_option("--demand-scale", solve_args.demand_scale,
                                       "multiply the trip table by this factor");
    auto* so_nft = solve->add_flag("--no-first-thru", solve_args.no_first_thru,
                                   "allow paths through zone nodes");
    solve->add_option("--config", solve_args.config, "JSON config file");

    GenerateArgs gen_args;
    auto* gen = app.add_subcommand("generate", "Generate a demand/flow scenario dataset");
    auto* ge_net = gen->add_option("--net", gen_args.net, "TNTP network file");
    auto* ge_trips = gen->add_option("--trips", gen_args.trips, "TNTP trips file");
    auto* ge_out = gen->add_option("--out", gen_args.out, "dataset directory");
    auto* ge_n = gen->add_option("--n", gen_args.n, "samples per scenario");
    auto* ge_scenario = gen->add_option("--scenario", gen_args.scenario,
                                        "uncongested|moderate|congested|all");
    auto* ge_seed = gen->add_option("--seed", gen_args.seed, "rng seed");
    auto* ge_workers = gen->add_option("--workers", gen_args.workers, "parallel solver workers");
    auto* ge_gap = gen->add_option("--gap", gen_args.gap, "solver gap tolerance");
    auto* ge_iters = gen->add_option("--max-iters", gen_args.max_iters, "solver iteration budget");
    auto* ge_redraw = gen->add_option("--redraw-budget", gen_args.redraw_budget, "");
    gen->add_option("--config", gen_args.config, "JSON config file");

    TrainArgs train_args;
    auto* tr = app.add_subcommand("train", "Train the link-flow surrogate");
    auto* tr_net = tr->add_option("--net", train_args.net, "TNTP network file");
    auto* tr_ds = tr->add_option("--dataset", train_args.dataset, "dataset directory");
    auto* tr_out = tr->add_option("--out", train_args.out, "output directory");
    auto* tr_scenario = tr->add_option("--scenario", train_args.scenario, "scenario filter");
    auto* tr_filter = tr->add_option("--filter", train_args.filter,
                                     "random_walk|laplacian|spectral");
    auto* tr_combine = tr->add_option("--theta-combine", train_args.combine, "hadamard|matmul");
    auto* tr_opt = tr->add_option("--optimizer", train_args.optimizer, "adam|rmsprop");
    auto* tr_lr = tr->add_option("--lr", train_args.lr, "learning rate");
    auto* tr_input_scale = tr->add_option("--input-scale", train_args.input_scale, "");
    auto* tr_iters = tr->add_option("--iters", train_args.iters, "training iterations");
    auto* tr_eval = tr->add_option("--eval-every", train_args.eval_every, "");
    auto* tr_patience = tr->add_option("--patience", train_args.patience, "early stop patience");
    auto* tr_batch = tr->add_option("--batch-size", train_args.batch_size, "0 = full batch");
    auto* tr_seed = tr->add_option("--seed", train_args.seed, "model init seed");
    auto* tr_split_seed = tr->add_option("--split-seed", train_args.split_seed, "");
    auto* tr_st = tr->add_option("--split-train", train_args.split_train, "");
    auto* tr_sv = tr->add_option("--split-val", train_args.split_val, "");
    auto* tr_ss = tr->add_option("--split-test", train_args.split_test, "");
    tr->add_option("--config", train_args.config, "JSON config file");

    EvalArgs eval_args;
    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
    auto* ev_ck = ev->add_option("--checkpoint", eval_args.checkpoint, "checkpoint file");
    auto* ev_net = ev->add_option("--net", eval_args.net, "TNTP network file");
    auto* ev_ds = ev->add_option("--dataset", eval_args.dataset, "dataset directory");
    auto* ev_split = ev->add_option("--split", eval_args.split, "train|val|test|all");
    auto* ev_out = ev->add_option("--out", eval_args.out, "optional output directory");
    ev->add_option("--config", eval_args.config, "JSON config file");

    AnalyzeArgs an_args;
    auto* an = app.add_subcommand("analyze", "Centrality and weight-distribution study");
    auto* an_net = an->add_option("--net", an_args.net, "TNTP network file");
    auto* an_ds = an->add_option("--dataset", an_args.dataset, "dataset directory");
    auto* an_ck = an->add_option("--checkpoint", an_args.checkpoint, "optional checkpoint");
    auto* an_scenario = an->add_option("--scenario", an_args.scenario, "scenario filter");
    auto* an_out = an->add_option("--out", an_args.out, "output directory");
    an->add_option("--config", an_args.config, "JSON config file");

    ExportArgs ex_args;
    auto* ex = app.add_subcommand("export-plots", "Export plot-ready CSV files");
    auto* ex_report = ex->add_option("--report", ex_args.report, "training report.json");
    auto* ex_ck = ex->add_option("--checkpoint", ex_args.checkpoint, "checkpoint file");
    auto* ex_net = ex->add_option("--net", ex_args.net, "TNTP network file");
    auto* ex_ds = ex->add_option("--dataset", ex_args.dataset, "dataset directory");
    auto* ex_split = ex->add_option("--split", ex_args.split, "train|val|test|all");
    auto* ex_out = ex->add_option("--out", ex_args.out, "output directory");
    ex->add_option("--config", ex_args.config, "JSON config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help or the error message
        return code == 0 ? 0 : 1;
    }

    try {
        if (solve->parsed()) {
            ConfigLayer cfg;
            cfg.load(solve_args.config);
            cfg.merge(so_net, "net", solve_args.net);
            cfg.merge(so_trips, "trips", solve_args.trips);
            cfg.merge(so_out, "out", solve_args.out);
            cfg.merge(so_gap, "gap", solve_args.gap);
            cfg.merge(so_iters, "max_iters", solve_args.max_iters);
            cfg.merge(so_ls, "line_search_tol", solve_args.line_search_tol);
            cfg.merge(so_scale, "demand_scale", solve_args.demand_scale);
            cfg.merge(so_nft, "no_first_thru", solve_args.no_first_thru);
            cfg.finish("solve");
            if (solve_args.net.empty() || solve_args.trips.empty())
                throw ConfigError("solve requires --net and --trips");
            return cmd_solve(solve_args);
        }
        if (gen->parsed()) {
            ConfigLayer cfg;
            cfg.load(gen_args.config);
            cfg.merge(ge_net, "net", gen_args.net);
            cfg.merge(ge_trips, "trips", gen_args.trips);
            cfg.merge(ge_out, "out", gen_args.out);
            cfg.merge(ge_n, "n", gen_args.n);
            cfg.merge(ge_scenario, "scenario", gen_args.scenario);
            cfg.merge(ge_seed, "seed", gen_args.seed);
            cfg.merge(ge_workers, "workers", gen_args.workers);
            cfg.merge(ge_gap, "gap", gen_args.gap);
            cfg.merge(ge_iters, "max_iters", gen_args.max_iters);
            cfg.merge(ge_redraw, "redraw_budget", gen_args.redraw_budget);
            cfg.finish("generate");
            if (gen_args.net.empty() || gen_args.trips.empty() || gen_args.out.empty())
                throw ConfigError("generate requires --net, --trips and --out");
            return cmd_generate(gen_args);
        }
        if (tr->parsed()) {
            ConfigLayer cfg;
            cfg.load(train_args.config);
            cfg.merge(tr_net, "net", train_args.net);
            cfg.merge(tr_ds, "dataset", train_args.dataset);
            cfg.merge(tr_out, "out", train_args.out);
            cfg.merge(tr_scenario, "scenario", train_args.scenario);
            cfg.merge(tr_filter, "filter", train_args.filter);
            cfg.merge(tr_combine, "theta_combine", train_args.combine);
            cfg.merge(tr_opt, "optimizer", train_args.optimizer);
            cfg.merge(tr_lr, "lr", train_args.lr);
            cfg.merge(tr_input_scale, "input_scale", train_args.input_scale);
            cfg.merge(tr_iters, "iters", train_args.iters);
            cfg.merge(tr_eval, "eval_every", train_args.eval_every);
            cfg.merge(tr_patience, "patience", train_args.patience);
            cfg.merge(tr_batch, "batch_size", train_args.batch_size);
            cfg.merge(tr_seed, "seed", train_args.seed);
            cfg.merge(tr_split_seed, "split_seed", train_args.split_seed);
            cfg.merge(tr_st, "split_train", train_args.split_train);
            cfg.merge(tr_sv, "split_val", train_args.split_val);
            cfg.merge(tr_ss, "split_test", train_args.split_test);
            cfg.finish("train");
            if (train_args.net.empty() || train_args.dataset.empty())
                throw ConfigError("train requires --net and --dataset");
            return cmd_train(train_args);
        }
        if (ev->parsed()) {
            ConfigLayer cfg;
            cfg.load(eval_args.config);
            cfg.merge(ev_ck, "checkpoint", eval_args.checkpoint);
            cfg.merge(ev_net, "net", eval_args.net);
            cfg.merge(ev_ds, "dataset", eval_args.dataset);
            cfg.merge(ev_split, "split", eval_args.split);
            cfg.merge(ev_out, "out", eval_args.out);
            cfg.finish("eval");
            if (eval_args.checkpoint.empty() || eval_args.net.empty() || eval_args.dataset.empty())
                throw ConfigError("eval requires --checkpoint, --net and --dataset");
            return cmd_eval(eval_args);
        }
        if (an->parsed()) {
            ConfigLayer cfg;
            cfg.load(an_args.config);
            cfg.merge(an_net, "net", an_args.net);
            cfg.merge(an_ds, "dataset", an_args.dataset);
            cfg.merge(an_ck, "checkpoint", an_args.checkpoint);
            cfg.merge(an_scenario, "scenario", an_args.scenario);
            cfg.merge(an_out, "out", an_args.out);
            cfg.finish("analyze");
            if (an_args.net.empty() || an_args.dataset.empty())
                throw ConfigError("analyze requires --net and --dataset");
            return cmd_analyze(an_args);
        }
        if (ex->parsed()) {
            ConfigLayer cfg;
            cfg.load(ex_args.config);
            cfg.merge(ex_report, "report", ex_args.report);
            cfg.merge(ex_ck, "checkpoint", ex_args.checkpoint);
            cfg.merge(ex_net, "net", ex_args.net);
            cfg.merge(ex_ds, "dataset", ex_args.dataset);
            cfg.merge(ex_split, "split", ex_args.split);
            cfg.merge(ex_out, "out", ex_args.out);
            cfg.finish("export-plots");
            return cmd_export_plots(ex_args);
        }
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
