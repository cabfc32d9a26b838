#pragma once

// Run directories and the automated annotation loop.
//
// A run directory holds every artifact derived from one dataset and seed:
//
//   run.json         name, dataset_hash, seed, split sizes
//   dataset.csv      balanced dataset (label column `label`)
//   dataset.schema   column kinds
//   splits.json      the five index lists
//   pairs.json       selected dimension pairs
//   models.jsonl     accepted models (see model_store.hpp)
//   features_*.csv   model-feature matrices
//   report.*         comparison table (json, txt, csv) and loss curves
//
// Every artifact records the dataset hash and seed; loaders reject artifacts
// whose hash differs from the run's.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgml/annotator.hpp"
#include "hgml/cv.hpp"
#include "hgml/dataset.hpp"
#include "hgml/error.hpp"
#include "hgml/model_store.hpp"
#include "hgml/pairing.hpp"
#include "hgml/polygon_model.hpp"

namespace hgml {

struct RunInfo {
    std::string name;
    std::string dataset_hash;
    std::uint64_t seed = 0;
    SplitSizes sizes;
};

struct Run {
    std::filesystem::path dir;
    RunInfo info;
    Dataset ds;
    SplitSet split;
};

inline nlohmann::json to_json(const SplitSet& s) {
    return {{"annotation_train", s.annotation_train}, {"annotation_valid", s.annotation_valid},
            {"annotation_test", s.annotation_test},   {"learner_train", s.learner_train},
            {"learner_test", s.learner_test}};
}

inline SplitSet split_set_from_json(const nlohmann::json& j) {
    SplitSet s;
    s.annotation_train = j.at("annotation_train").get<IndexList>();
    s.annotation_valid = j.at("annotation_valid").get<IndexList>();
    s.annotation_test = j.at("annotation_test").get<IndexList>();
    s.learner_train = j.at("learner_train").get<IndexList>();
    s.learner_test = j.at("learner_test").get<IndexList>();
    return s;
}

// Throws unless the five lists are pairwise disjoint and index into `rows`.
inline void check_split(const SplitSet& s, std::size_t rows) {
    std::set<std::size_t> seen;
    for (const auto* list :
         {&s.annotation_train, &s.annotation_valid, &s.annotation_test, &s.learner_train, &s.learner_test})
        for (auto i : *list) {
            if (i >= rows) throw Error("split index " + std::to_string(i) + " out of range");
            if (!seen.insert(i).second) throw Error("split index " + std::to_string(i) + " appears twice");
        }
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

inline std::string run_dir_name(std::uint64_t seed, const std::string& hash) {
    return "run-" + std::to_string(seed) + "-" + hash;
}

// Balances `raw` (unless told not to), writes it into a fresh run directory
// under `root`, reloads it, and splits the reloaded copy. The reloaded
// dataset is the run's canonical content.
inline Run create_run(const Dataset& raw, const SplitSizes& sizes, std::uint64_t seed, bool balance,
                      const std::filesystem::path& root) {
    const Dataset balanced = balance ? balance_classes(raw, seed) : raw;
    std::filesystem::create_directories(root);
    const auto staging = root / ("staging-" + std::to_string(seed) + "-" + dataset_hash(balanced));
    std::filesystem::create_directories(staging);
    {
        std::ostringstream csv, schema;
        write_csv(balanced, csv);
        write_schema(balanced.columns, schema);
        write_text_file(staging / "dataset.csv", csv.str());
        write_text_file(staging / "dataset.schema", schema.str());
    }

    Run run;
    run.ds = load_csv(staging / "dataset.csv", load_schema(staging / "dataset.schema"), "label");
    run.ds.name = raw.name;
    run.info = {raw.name, dataset_hash(run.ds), seed, sizes};
    run.split = make_splits(run.ds, sizes, seed);
    run.dir = root / run_dir_name(seed, run.info.dataset_hash);

    nlohmann::json info = {{"name", run.info.name},
                           {"dataset_hash", run.info.dataset_hash},
                           {"seed", seed},
                           {"split_sizes",
                            {sizes.annotation_train, sizes.annotation_valid, sizes.annotation_test, sizes.m_prime}}};
    nlohmann::json splits = to_json(run.split);
    splits["dataset_hash"] = run.info.dataset_hash;
    splits["seed"] = seed;
    write_text_file(staging / "run.json", info.dump(2) + "\n");
    write_text_file(staging / "splits.json", splits.dump() + "\n");

    std::filesystem::remove_all(run.dir);
    std::filesystem::rename(staging, run.dir);
    return run;
}

inline Run load_run(const std::filesystem::path& dir) {
    Run run;
    run.dir = dir;
    const auto info = read_json_file(dir / "run.json");
    run.info.name = info.at("name").get<std::string>();
    run.info.dataset_hash = info.at("dataset_hash").get<std::string>();
    run.info.seed = info.at("seed").get<std::uint64_t>();
    const auto sizes = info.at("split_sizes").get<std::vector<std::size_t>>();
    if (sizes.size() != 4) throw Error("run.json: split_sizes needs 4 values");
    run.info.sizes = {sizes[0], sizes[1], sizes[2], sizes[3]};

    run.ds = load_csv(dir / "dataset.csv", load_schema(dir / "dataset.schema"), "label");
    run.ds.name = run.info.name;
    const auto actual = dataset_hash(run.ds);
    if (actual != run.info.dataset_hash)
        throw Error("dataset.csv hash " + actual + " does not match run.json hash " + run.info.dataset_hash);

    const auto splits = read_json_file(dir / "splits.json");
    if (splits.at("dataset_hash").get<std::string>() != run.info.dataset_hash)
        throw Error("splits.json was produced from a different dataset");
    run.split = split_set_from_json(splits);
    check_split(run.split, run.ds.rows());
    return run;
}

// Throws when any record was produced from a dataset other than `hash`.
inline std::vector<PolygonModel> models_for_dataset(const std::vector<StoredModel>& records, const std::string& hash) {
    std::vector<PolygonModel> out;
    for (const auto& r : records) {
        if (r.dataset_hash != hash)
            throw Error("model '" + r.model.id + "' was built on dataset " + r.dataset_hash + ", not " + hash);
        out.push_back(r.model);
    }
    return out;
}

struct AutoAnnotateResult {
    std::size_t proposed = 0;
    std::vector<StoredModel> accepted;
};

// For each pair, `per_pair` proposals with distinct derived seeds; each
// proposal that clears the gate is scored and returned.
inline AutoAnnotateResult auto_annotate(const Dataset& ds, const SplitSet& split, std::span<const DimensionPair> pairs,
                                        std::size_t per_pair, const AnnotatorBudget& budget,
                                        const AcceptanceGate& gate, std::uint64_t seed, const std::string& hash) {
    AutoAnnotateResult result;
    for (const auto& pair : pairs) {
        for (std::size_t j = 0; j < per_pair; ++j) {
            const auto proposal_seed =
                derive_seed(seed, "propose", (static_cast<std::uint64_t>(pair.dim_a) << 40) ^
                                                 (static_cast<std::uint64_t>(pair.dim_b) << 16) ^ j);
            auto model = propose_model(ds, split, pair, budget, proposal_seed);
            ++result.proposed;
            if (!accept_model(model, ds, split, gate)) continue;
            model.id = "auto-" + std::to_string(seed) + "-" + std::to_string(pair.dim_a) + "-" +
                       std::to_string(pair.dim_b) + "-" + std::to_string(j);
            result.accepted.push_back({std::move(model), hash, seed});
        }
    }
    return result;
}

// "default" (80 points), "reduced" (lr {0.1,0.3} x depth {2,5} x rounds
// {50,100}), or "lr=a,b;depth=c,d;rounds=e,f".
inline std::vector<GbdtParams> parse_grid(const std::string& text) {
    if (text == "default") return default_grid();
    if (text == "reduced") {
        const double lr[] = {0.1, 0.3};
        const std::size_t depth[] = {2, 5};
        const std::size_t rounds[] = {50, 100};
        return make_grid(lr, depth, rounds);
    }
    std::vector<double> lr;
    std::vector<std::size_t> depth, rounds;
    std::string_view rest(text);
    while (!rest.empty()) {
        const auto semi = rest.find(';');
        const auto part = detail::trim(rest.substr(0, semi));
        rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
        const auto eq = part.find('=');
        if (eq == std::string_view::npos) throw Error("grid description part '" + std::string(part) + "' lacks '='");
        const auto key = detail::trim(part.substr(0, eq));
        for (auto v : detail::split_commas(part.substr(eq + 1))) {
            double x = 0.0;
            if (key == "lr" && detail::parse_real(v, x)) lr.push_back(x);
            else if (key == "depth" && detail::parse_integer(v, x) && x >= 1) depth.push_back(static_cast<std::size_t>(x));
            else if (key == "rounds" && detail::parse_integer(v, x) && x >= 1) rounds.push_back(static_cast<std::size_t>(x));
            else throw Error("bad grid value '" + std::string(v) + "' for '" + std::string(key) + "'");
        }
    }
    if (lr.empty() || depth.empty() || rounds.empty()) throw Error("grid description needs lr, depth and rounds");
    auto grid = make_grid(lr, depth, rounds);
    for (const auto& p : grid) p.validate();
    return grid;
}

}  // namespace hgml
