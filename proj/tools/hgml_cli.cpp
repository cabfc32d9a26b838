// hgml: command-line driver for the human-guided feature pipeline.
//
//   synth -> ingest -> pairs -> (serve | auto-annotate) -> featurize -> train | compare -> report

#include <csignal>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hgml/hgml.hpp"

namespace fs = std::filesystem;
using namespace hgml;

namespace {

struct Common {
    std::string run;
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;

    std::uint64_t seed_or(std::uint64_t fallback) const { return seed_opt && seed_opt->count() ? seed : fallback; }
};

PairSelectMode parse_mode(const std::string& s) {
    if (s == "rank") return PairSelectMode::rank;
    if (s == "sample") return PairSelectMode::sample;
    throw Error("--mode must be rank or sample");
}

SplitSizes parse_sizes(const std::string& text) {
    const auto parts = detail::split_commas(text);
    if (parts.size() != 4) throw Error("--sizes needs a_train,a_valid,a_test,m_prime");
    std::size_t v[4];
    for (std::size_t k = 0; k < 4; ++k) {
        double x = 0.0;
        if (!detail::parse_integer(parts[k], x) || x < 0) throw Error("--sizes values must be non-negative integers");
        v[k] = static_cast<std::size_t>(x);
    }
    return {v[0], v[1], v[2], v[3]};
}

fs::path models_path(const Run& run, const std::string& override_path) {
    return override_path.empty() ? run.dir / "models.jsonl" : fs::path(override_path);
}

std::vector<PolygonModel> load_run_models(const Run& run, const std::string& override_path) {
    const auto models = models_for_dataset(load_model_store(models_path(run, override_path)), run.info.dataset_hash);
    if (models.empty()) throw Error("model store holds no models");
    return models;
}

std::string provenance_comment(const Run& run, std::uint64_t seed, FeatureMode mode) {
    return "hgml dataset_hash=" + run.info.dataset_hash + " seed=" + std::to_string(seed) + " mode=" +
           std::string(to_string(mode));
}

FeatureMatrix load_feature_file(const Run& run, const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string() + " (run `featurize` first)");
    std::vector<std::string> comments;
    auto fm = read_feature_csv(in, &comments);
    const std::string want = "dataset_hash=" + run.info.dataset_hash;
    bool ok = false;
    for (const auto& c : comments) ok = ok || c.find(want) != std::string::npos;
    if (!ok) throw Error(path.string() + " was not produced from this run's dataset");
    return fm;
}

nlohmann::json params_json(const GbdtParams& p) {
    return {{"learning_rate", p.learning_rate}, {"max_depth", p.max_depth}, {"rounds", p.rounds}};
}

void write_cv_csv(const CvReport& cv, const fs::path& path) {
    std::ostringstream out;
    out << "learning_rate,max_depth,rounds,mean_accuracy,chosen\n";
    for (std::size_t k = 0; k < cv.points.size(); ++k) {
        const auto& p = cv.points[k];
        out << detail::format_double(p.params.learning_rate) << ',' << p.params.max_depth << ',' << p.params.rounds << ','
            << detail::format_double(p.mean_accuracy) << ',' << (k == cv.chosen_index ? 1 : 0) << '\n';
    }
    write_text_file(path, out.str());
}

int cmd_synth(std::size_t d, std::size_t informative, std::size_t n, double spread, std::uint64_t seed,
              const std::string& out, std::string schema_out) {
    const auto ds = synth_clusters(d, informative, n, spread, seed);
    if (schema_out.empty()) schema_out = fs::path(out).replace_extension(".schema").string();
    std::ostringstream csv, schema;
    write_csv(ds, csv);
    write_schema(ds.columns, schema);
    write_text_file(out, csv.str());
    write_text_file(schema_out, schema.str());
    std::cout << out << '\n';
    return 0;
}

int cmd_ingest(const std::string& csv, const std::string& schema, const std::string& label, std::uint64_t seed,
               const std::string& sizes, bool no_balance, const std::string& root) {
    auto ds = load_csv(csv, load_schema(schema), label);
    const auto run = create_run(ds, parse_sizes(sizes), seed, !no_balance, root);
    const auto counts = run.ds.label_counts();
    std::cerr << "M=" << run.ds.rows() << " D=" << run.ds.dims() << " labels " << counts[0] << '/' << counts[1]
              << " learner_train=" << run.split.learner_train.size() << " learner_test=" << run.split.learner_test.size()
              << '\n';
    std::cout << run.dir.string() << '\n';
    return 0;
}

int cmd_pairs(const Common& c, std::size_t k, const std::string& mode) {
    const auto run = load_run(c.run);
    const auto seed = c.seed_or(run.info.seed);
    const auto table = correlation_table(run.ds, run.split);
    const auto pairs = select_pairs(table, k, parse_mode(mode), seed);
    nlohmann::json out = {{"dataset_hash", run.info.dataset_hash}, {"seed", seed}, {"mode", mode}};
    out["pairs"] = nlohmann::json::array();
    for (const auto& p : pairs) {
        double rho = 0.0;
        for (const auto& e : table.entries)
            if (e.pair == p) rho = e.rho;
        std::cout << p.dim_a << ',' << p.dim_b << ',' << run.ds.columns[p.dim_a].name << ','
                  << run.ds.columns[p.dim_b].name << ',' << detail::fixed(rho, 6) << '\n';
        out["pairs"].push_back({{"dim_a", p.dim_a}, {"dim_b", p.dim_b}, {"rho", rho}});
    }
    write_text_file(run.dir / "pairs.json", out.dump(2) + "\n");
    return 0;
}

httplib::Server* g_server = nullptr;

int cmd_serve(const std::string& config_path) {
    const auto cfg = load_service_config(config_path);
    auto service = AnnotationService::from_config(cfg);
    httplib::Server server;
    service.install_routes(server, cfg.ui_dir);
    g_server = &server;
    std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_server) g_server->stop();
    });
    std::cerr << "serving dataset " << service.dataset().name << " (" << service.hash() << ") on " << cfg.host << ':'
              << cfg.port << ", store " << service.store_path() << '\n';
    if (!server.listen(cfg.host, cfg.port)) throw Error("cannot listen on " + cfg.host + ":" + std::to_string(cfg.port));
    return 0;
}

int cmd_auto_annotate(const Common& c, std::size_t pair_count, std::size_t per_pair, const std::string& mode,
                      const AnnotatorBudget& budget, const AcceptanceGate& gate, const std::string& store) {
    const auto run = load_run(c.run);
    const auto seed = c.seed_or(run.info.seed);
    const auto pairs = select_pairs(correlation_table(run.ds, run.split), pair_count, parse_mode(mode), seed);
    auto result = auto_annotate(run.ds, run.split, pairs, per_pair, budget, gate, seed, run.info.dataset_hash);

    const auto path = models_path(run, store);
    std::set<std::string> existing;
    if (fs::exists(path))
        for (const auto& r : load_model_store(path)) existing.insert(r.model.id);
    ModelStore out(path);
    std::size_t written = 0;
    for (const auto& r : result.accepted) {
        if (existing.count(r.model.id)) continue;
        out.append(r);
        ++written;
    }
    std::cout << "proposed " << result.proposed << " accepted " << result.accepted.size() << " written " << written
              << " -> " << path.string() << '\n';
    return 0;
}

int cmd_featurize(const Common& c, const std::string& models, const std::string& mode_text) {
    const auto run = load_run(c.run);
    const auto seed = c.seed_or(run.info.seed);
    const auto mode = parse_feature_mode(mode_text);
    const auto list = load_run_models(run, models);
    const auto comment = provenance_comment(run, seed, mode);
    for (const auto& [name, rows] : {std::pair{"features_train.csv", &run.split.learner_train},
                                     std::pair{"features_test.csv", &run.split.learner_test}}) {
        std::ostringstream out;
        write_feature_csv(build_feature_matrix(run.ds, *rows, list, mode), out, comment);
        write_text_file(run.dir / name, out.str());
    }
    std::cout << "features: " << run.split.learner_train.size() << " + " << run.split.learner_test.size() << " rows x "
              << list.size() << " models (" << to_string(mode) << ")\n";
    return 0;
}

int cmd_train(const Common& c, const std::string& arm, const std::string& models, const std::string& grid_text,
              std::size_t folds, std::size_t threads) {
    const auto run = load_run(c.run);
    const auto seed = c.seed_or(run.info.seed);
    const auto grid = parse_grid(grid_text);
    Matrix train_x, test_x;
    Labels train_y, test_y;
    if (arm == "raw") {
        const auto dims = used_dimensions(load_run_models(run, models));
        train_x = gather(run.ds, run.split.learner_train, dims);
        test_x = gather(run.ds, run.split.learner_test, dims);
        train_y = gather_labels(run.ds, run.split.learner_train);
        test_y = gather_labels(run.ds, run.split.learner_test);
    } else if (arm == "features") {
        auto tr = load_feature_file(run, run.dir / "features_train.csv");
        auto te = load_feature_file(run, run.dir / "features_test.csv");
        if (tr.column_ids != te.column_ids) throw Error("train and test feature files have different columns");
        train_x = std::move(tr.values);
        train_y = std::move(tr.labels);
        test_x = std::move(te.values);
        test_y = std::move(te.labels);
    } else {
        throw Error("--arm must be raw or features");
    }
    const ComparisonOptions opt{folds, seed, threads};
    const auto result = run_arm(train_x, train_y, test_x, test_y, grid, opt, "arm-" + arm);
    write_cv_csv(result.cv, run.dir / ("cv_" + arm + ".csv"));
    const auto& p = result.cv.chosen;
    std::cout << arm << ": chosen lr=" << p.learning_rate << " depth=" << p.max_depth << " rounds=" << p.rounds
              << " cv=" << detail::fixed(result.cv.points[result.cv.chosen_index].mean_accuracy, 4)
              << " test=" << detail::fixed(result.test_accuracy, 4) << '\n';
    return 0;
}

int cmd_compare(const Common& c, const std::string& models, const std::string& mode_text,
                const std::string& grid_text, std::size_t folds, std::size_t threads) {
    const auto run = load_run(c.run);
    const auto seed = c.seed_or(run.info.seed);
    const auto mode = parse_feature_mode(mode_text);
    const auto list = load_run_models(run, models);
    const auto grid = parse_grid(grid_text);
    const auto result = run_comparison(run.ds, run.split, list, mode, grid, {folds, seed, threads});

    nlohmann::json j = {{"v", 1},
                        {"dataset_hash", run.info.dataset_hash},
                        {"seed", seed},
                        {"mode", std::string(to_string(mode))},
                        {"grid_points", grid.size()},
                        {"folds", folds},
                        {"raw_chosen", params_json(result.raw.cv.chosen)},
                        {"feature_chosen", params_json(result.features.cv.chosen)},
                        {"rows", {to_json(result.row)}}};
    const ComparisonReport report{{result.row}};
    std::ostringstream text, csv, loss;
    write_report_text(report, text);
    write_report_csv(report, csv);
    write_loss_curve_csv(result, loss);
    write_text_file(run.dir / "report.json", j.dump(2) + "\n");
    write_text_file(run.dir / "report.txt", text.str());
    write_text_file(run.dir / "report.csv", csv.str());
    write_text_file(run.dir / "loss_curve.csv", loss.str());
    std::cout << text.str();
    return 0;
}

int cmd_report(const std::vector<std::string>& runs, const std::string& format) {
    ComparisonReport report;
    for (const auto& r : runs) {
        const auto j = read_json_file(fs::path(r) / "report.json");
        for (const auto& row : j.at("rows")) report.rows.push_back(comparison_row_from_json(row));
    }
    if (format == "text") write_report_text(report, std::cout);
    else if (format == "csv") write_report_csv(report, std::cout);
    else throw Error("--format must be text or csv");
    return 0;
}

void add_seed(CLI::App* sub, Common& c, const char* help = "Seed (defaults to the run's seed)") {
    c.seed_opt = sub->add_option("--seed", c.seed, help);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Human-guided feature engineering pipeline"};
    app.require_subcommand(1);

    // synth
    std::size_t s_d = 10, s_inf = 2, s_n = 1000;
    double s_spread = 0.5;
    std::uint64_t s_seed = 0;
    std::string s_out = "synth.csv", s_schema;
    auto* synth = app.add_subcommand("synth", "Generate a two-class Gaussian cluster dataset");
    synth->add_option("--d", s_d, "Total dimensions")->required();
    synth->add_option("--informative", s_inf, "Informative dimensions")->capture_default_str();
    synth->add_option("--n", s_n, "Samples per class")->capture_default_str();
    synth->add_option("--spread", s_spread, "Cluster standard deviation")->capture_default_str();
    synth->add_option("--seed", s_seed, "Seed")->capture_default_str();
    synth->add_option("--out", s_out, "CSV output path")->capture_default_str();
    synth->add_option("--schema-out", s_schema, "Schema output path (default: CSV path with .schema)");

    // ingest
    std::string i_csv, i_schema, i_label = "label", i_sizes = "100,100,200,2000", i_root = "runs";
    std::uint64_t i_seed = 0;
    bool i_no_balance = false;
    auto* ingest = app.add_subcommand("ingest", "Load, balance and split a CSV dataset into a new run directory");
    ingest->add_option("--csv", i_csv, "Dataset CSV")->required()->check(CLI::ExistingFile);
    ingest->add_option("--schema", i_schema, "Schema sidecar (column_name,kind lines)")->required()->check(CLI::ExistingFile);
    ingest->add_option("--label", i_label, "Label column")->capture_default_str();
    ingest->add_option("--seed", i_seed, "Seed")->capture_default_str();
    ingest->add_option("--sizes", i_sizes, "a_train,a_valid,a_test,m_prime")->capture_default_str();
    ingest->add_flag("--no-balance", i_no_balance, "Keep the original class ratio");
    ingest->add_option("--runs-root", i_root, "Directory holding run directories")->capture_default_str();

    // pairs
    Common p_c;
    std::size_t p_k = 5;
    std::string p_mode = "rank";
    auto* pairs = app.add_subcommand("pairs", "Rank dimension pairs by |correlation| on annotation_train");
    pairs->add_option("--run", p_c.run, "Run directory")->required()->check(CLI::ExistingDirectory);
    pairs->add_option("--k", p_k, "Number of pairs")->capture_default_str();
    pairs->add_option("--mode", p_mode, "rank | sample")->capture_default_str();
    add_seed(pairs, p_c);

    // serve
    std::string v_config;
    auto* serve = app.add_subcommand("serve", "Run the annotation task web service");
    serve->add_option("--config", v_config, "key = value configuration file")->required()->check(CLI::ExistingFile);

    // auto-annotate
    Common a_c;
    std::size_t a_pairs = 10, a_per = 1;
    std::string a_mode = "rank", a_store;
    AnnotatorBudget a_budget;
    AcceptanceGate a_gate;
    auto* annotate = app.add_subcommand("auto-annotate", "Draw models with the synthetic annotator");
    annotate->add_option("--run", a_c.run, "Run directory")->required()->check(CLI::ExistingDirectory);
    annotate->add_option("--pairs", a_pairs, "Number of dimension pairs")->capture_default_str();
    annotate->add_option("--per-pair", a_per, "Proposals per pair")->capture_default_str();
    annotate->add_option("--mode", a_mode, "Pair selection: rank | sample")->capture_default_str();
    annotate->add_option("--max-rectangles", a_budget.max_rectangles)->capture_default_str();
    annotate->add_option("--grid-resolution", a_budget.grid_resolution)->capture_default_str();
    annotate->add_option("--target-accuracy", a_budget.target_accuracy)->capture_default_str();
    annotate->add_option("--min-evidence", a_budget.min_evidence)->capture_default_str();
    annotate->add_option("--threshold", a_gate.threshold, "Acceptance threshold (strict)")->capture_default_str();
    annotate->add_option("--min-coverage", a_gate.min_coverage)->capture_default_str();
    annotate->add_option("--store", a_store, "Model store (default: <run>/models.jsonl)");
    add_seed(annotate, a_c);

    // featurize
    Common f_c;
    std::string f_models, f_mode = "literal";
    auto* featurize = app.add_subcommand("featurize", "Write model-feature matrices for learner_train/learner_test");
    featurize->add_option("--run", f_c.run, "Run directory")->required()->check(CLI::ExistingDirectory);
    featurize->add_option("--models", f_models, "Model store (default: <run>/models.jsonl)");
    featurize->add_option("--mode", f_mode, "literal | signed")->capture_default_str();
    add_seed(featurize, f_c);

    // train
    Common t_c;
    std::string t_arm = "features", t_models, t_grid = "default";
    std::size_t t_folds = 5, t_threads = 1;
    auto* train = app.add_subcommand("train", "Grid-search and fit one arm, report test accuracy");
    train->add_option("--run", t_c.run, "Run directory")->required()->check(CLI::ExistingDirectory);
    train->add_option("--arm", t_arm, "raw | features")->capture_default_str();
    train->add_option("--models", t_models, "Model store (default: <run>/models.jsonl)");
    train->add_option("--grid", t_grid, "default | reduced | lr=..;depth=..;rounds=..")->capture_default_str();
    train->add_option("--folds", t_folds)->capture_default_str();
    train->add_option("--threads", t_threads)->capture_default_str();
    add_seed(train, t_c);

    // compare
    Common c_c;
    std::string c_models, c_mode = "literal", c_grid = "default";
    std::size_t c_folds = 5, c_threads = 1;
    auto* compare = app.add_subcommand("compare", "Raw-dimension arm versus model-feature arm");
    compare->add_option("--run", c_c.run, "Run directory")->required()->check(CLI::ExistingDirectory);
    compare->add_option("--models", c_models, "Model store (default: <run>/models.jsonl)");
    compare->add_option("--mode", c_mode, "literal | signed")->capture_default_str();
    compare->add_option("--grid", c_grid, "default | reduced | lr=..;depth=..;rounds=..")->capture_default_str();
    compare->add_option("--folds", c_folds)->capture_default_str();
    compare->add_option("--threads", c_threads)->capture_default_str();
    add_seed(compare, c_c);

    // report
    std::vector<std::string> r_runs;
    std::string r_format = "text";
    auto* report = app.add_subcommand("report", "Render stored comparison results as a table");
    report->add_option("--run", r_runs, "Run directory (repeatable)")->required()->check(CLI::ExistingDirectory);
    report->add_option("--format", r_format, "text | csv")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) return cmd_synth(s_d, s_inf, s_n, s_spread, s_seed, s_out, s_schema);
        if (*ingest) return cmd_ingest(i_csv, i_schema, i_label, i_seed, i_sizes, i_no_balance, i_root);
        if (*pairs) return cmd_pairs(p_c, p_k, p_mode);
        if (*serve) return cmd_serve(v_config);
        if (*annotate) return cmd_auto_annotate(a_c, a_pairs, a_per, a_mode, a_budget, a_gate, a_store);
        if (*featurize) return cmd_featurize(f_c, f_models, f_mode);
        if (*train) return cmd_train(t_c, t_arm, t_models, t_grid, t_folds, t_threads);
        if (*compare) return cmd_compare(c_c, c_models, c_mode, c_grid, c_folds, c_threads);
        if (*report) return cmd_report(r_runs, r_format);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
