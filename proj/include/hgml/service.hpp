#pragma once

// Annotation task service.
//
//   GET  /task                      -> task descriptor (training points of one pair)
//   POST /task/{session}/rectangles -> live validation accuracy for a rectangle list
//   POST /task/{session}/submit     -> completion code, or rejection
//   GET  /codes/verify?code=...     -> whether a code is valid (single use)
//
// Only annotation_train rows ever leave the server. Sessions live in memory;
// accepted models go to the append-only model store.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "hgml/dataset.hpp"
#include "hgml/error.hpp"
#include "hgml/model_store.hpp"
#include "hgml/pairing.hpp"
#include "hgml/polygon_model.hpp"
#include "hgml/tokens.hpp"

namespace hgml {

struct ServiceConfig {
    std::filesystem::path dataset;
    std::filesystem::path schema;
    std::string label_column = "label";
    std::uint64_t seed = 0;
    bool balance = true;
    SplitSizes sizes;
    AcceptanceGate gate;
    std::size_t pair_pool = 10;
    std::size_t tasks_per_pair = 0;  // 0 = unlimited
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path store = "models.jsonl";
    std::filesystem::path ui_dir;
    std::chrono::minutes idle_timeout{30};
};

// `key = value` lines; '#' starts a comment. Relative paths are resolved
// against `base_dir`.
inline ServiceConfig parse_service_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
    ServiceConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    auto path = [&](std::string_view v) {
        std::filesystem::path p{std::string(v)};
        return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    };
    auto number = [&](std::string_view key, std::string_view v) {
        double x = 0.0;
        if (!detail::parse_real(v, x)) throw Error("config line " + std::to_string(lineno) + ": " + std::string(key) + " must be a number");
        return x;
    };
    auto count = [&](std::string_view key, std::string_view v) {
        double x = 0.0;
        if (!detail::parse_integer(v, x) || x < 0)
            throw Error("config line " + std::to_string(lineno) + ": " + std::string(key) + " must be a non-negative integer");
        return static_cast<std::size_t>(x);
    };
    while (std::getline(in, line)) {
        ++lineno;
        line.erase(std::min(line.size(), line.find('#')));
        const auto text = detail::trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string_view::npos) throw Error("config line " + std::to_string(lineno) + ": expected key = value");
        const auto key = detail::trim(text.substr(0, eq));
        const auto value = detail::trim(text.substr(eq + 1));
        if (key == "dataset") cfg.dataset = path(value);
        else if (key == "schema") cfg.schema = path(value);
        else if (key == "label") cfg.label_column = std::string(value);
        else if (key == "seed") cfg.seed = count(key, value);
        else if (key == "balance") {
            if (value != "true" && value != "false") throw Error("config line " + std::to_string(lineno) + ": balance must be true or false");
            cfg.balance = value == "true";
        } else if (key == "split_sizes") {
            const auto parts = detail::split_commas(value);
            if (parts.size() != 4) throw Error("config line " + std::to_string(lineno) + ": split_sizes needs 4 values");
            cfg.sizes = {count(key, parts[0]), count(key, parts[1]), count(key, parts[2]), count(key, parts[3])};
        } else if (key == "threshold") cfg.gate.threshold = number(key, value);
        else if (key == "min_coverage") cfg.gate.min_coverage = number(key, value);
        else if (key == "pair_pool") cfg.pair_pool = count(key, value);
        else if (key == "tasks_per_pair") cfg.tasks_per_pair = count(key, value);
        else if (key == "listen") {
            const auto colon = value.rfind(':');
            if (colon == std::string_view::npos) throw Error("config line " + std::to_string(lineno) + ": listen must be host:port");
            cfg.host = std::string(value.substr(0, colon));
            cfg.port = static_cast<int>(count(key, value.substr(colon + 1)));
        } else if (key == "store") cfg.store = path(value);
        else if (key == "ui_dir") cfg.ui_dir = path(value);
        else if (key == "session_timeout_minutes") cfg.idle_timeout = std::chrono::minutes(count(key, value));
        else throw Error("config line " + std::to_string(lineno) + ": unknown key '" + std::string(key) + "'");
    }
    if (cfg.dataset.empty() || cfg.schema.empty()) throw Error("config must set dataset and schema");
    return cfg;
}

inline ServiceConfig load_service_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file " + path.string());
    return parse_service_config(in, path.parent_path());
}

class AnnotationService {
public:
    using Clock = std::chrono::steady_clock;

    struct Options {
        AcceptanceGate gate;
        std::size_t pair_pool = 10;
        std::size_t tasks_per_pair = 0;
        std::uint64_t seed = 0;
        std::chrono::minutes idle_timeout{30};
    };

    struct Response {
        int status = 200;
        nlohmann::json body;
    };

    AnnotationService(Dataset ds, SplitSet split, const std::filesystem::path& store_path, Options opt)
        : ds_(std::move(ds)), split_(std::move(split)), hash_(dataset_hash(ds_)), opt_(opt), store_(store_path) {
        const auto table = correlation_table(ds_, split_);
        for (const auto& pair : select_pairs(table, std::max<std::size_t>(1, opt_.pair_pool), PairSelectMode::sample,
                                             derive_seed(opt_.seed, "service-pairs")))
            pool_.push_back({pair, fit_norm_stats(ds_, split_.annotation_train, pair), 0});
    }

    static AnnotationService from_config(const ServiceConfig& cfg) {
        auto ds = load_csv(cfg.dataset, load_schema(cfg.schema), cfg.label_column);
        if (cfg.balance) ds = balance_classes(ds, cfg.seed);
        auto split = make_splits(ds, cfg.sizes, cfg.seed);
        Options opt;
        opt.gate = cfg.gate;
        opt.pair_pool = cfg.pair_pool;
        opt.tasks_per_pair = cfg.tasks_per_pair;
        opt.seed = cfg.seed;
        opt.idle_timeout = cfg.idle_timeout;
        return AnnotationService(std::move(ds), std::move(split), cfg.store, opt);
    }

    // Replaces the time source; used to exercise idle expiry.
    void set_clock(std::function<Clock::time_point()> now) { now_ = std::move(now); }

    const Dataset& dataset() const { return ds_; }
    const SplitSet& split() const { return split_; }
    const std::string& hash() const { return hash_; }
    std::size_t stored_models() const { return store_.appended(); }
    const std::filesystem::path& store_path() const { return store_.path(); }

    Response create_task() {
        std::lock_guard lock(mutex_);
        expire_sessions();
        auto slot = next_pool_slot();
        if (!slot) return error(503, "pair pool exhausted");
        auto& entry = pool_[*slot];
        ++entry.served;

        Session s;
        s.pool_index = *slot;
        s.last_seen = now_();
        std::string id = random_token();
        while (sessions_.count(id)) id = random_token();
        sessions_.emplace(id, s);

        nlohmann::json points = nlohmann::json::array();
        for (const auto& p : project(ds_, split_.annotation_train, entry.stats))
            points.push_back({{"u", p.u}, {"v", p.v}, {"label", p.label}});
        return {200,
                {{"session_id", id},
                 {"dataset", ds_.name},
                 {"pair",
                  {{"dim_a", entry.pair.dim_a},
                   {"dim_b", entry.pair.dim_b},
                   {"name_a", ds_.columns[entry.pair.dim_a].name},
                   {"name_b", ds_.columns[entry.pair.dim_b].name}}},
                 {"threshold", opt_.gate.threshold},
                 {"points", std::move(points)}}};
    }

    Response score(const std::string& session, const std::string& body) {
        NormStats stats;
        {
            std::lock_guard lock(mutex_);
            expire_sessions();
            auto* s = find_session(session);
            if (!s) return error(404, "unknown session");
            s->last_seen = now_();
            stats = pool_[s->pool_index].stats;
        }
        PolygonModel model;
        model.stats = stats;
        try {
            model.rectangles = parse_rectangles(body);
        } catch (const FieldError& e) {
            return field_error(e);
        }
        const auto valid = coverage_on_validation(model);
        return {200, {{"validation_accuracy", accuracy_json(valid)}, {"covered_fraction", valid.covered_fraction()}}};
    }

    Response submit(const std::string& session, const std::string& body) {
        PolygonModel model;
        std::string worker_id;
        try {
            model.rectangles = parse_rectangles(body);
            worker_id = parse_worker_id(body);
        } catch (const FieldError& e) {
            return field_error(e);
        }
        {
            std::lock_guard lock(mutex_);
            expire_sessions();
            auto* s = find_session(session);
            if (!s) return error(404, "unknown session");
            if (s->consumed || s->submitting) return error(409, "session already submitted");
            s->submitting = true;
            s->last_seen = now_();
            model.stats = pool_[s->pool_index].stats;
        }

        const auto valid = coverage_on_validation(model);
        bool accepted = false;
        if (!model.rectangles.empty()) accepted = accept_model(model, ds_, split_, opt_.gate);

        std::lock_guard lock(mutex_);
        auto* s = find_session(session);
        if (!accepted) {
            if (s) s->submitting = false;
            std::string reason = "below-threshold";
            if (!valid.has_coverage()) reason = "no-coverage";
            else if (valid.accuracy() > opt_.gate.threshold && valid.covered_fraction() < opt_.gate.min_coverage)
                reason = "insufficient-coverage";
            else if (valid.accuracy() > opt_.gate.threshold) reason = "no-test-coverage";
            return {200,
                    {{"accepted", false},
                     {"reason", reason},
                     {"validation_accuracy", accuracy_json(valid)},
                     {"covered_fraction", valid.covered_fraction()},
                     {"threshold", opt_.gate.threshold}}};
        }

        model.id = "m-" + random_token();
        if (worker_id.empty()) worker_id = session;
        model.provenance = {Provenance::Kind::human, worker_id};
        store_.append({model, hash_, opt_.seed});
        if (s) {
            s->consumed = true;
            s->submitting = false;
        }
        IssuedCode code{random_token(), session, model.id, std::chrono::system_clock::now(), false};
        codes_.push_back(code);
        return {200,
                {{"accepted", true},
                 {"completion_code", code.code},
                 {"model_id", model.id},
                 {"validation_accuracy", *model.validation_accuracy}}};
    }

    Response verify(const std::string& code) {
        std::lock_guard lock(mutex_);
        IssuedCode* match = nullptr;
        // Compare against every code without early exit.
        for (auto& c : codes_)
            if (constant_time_equal(c.code, code) && !match) match = &c;
        if (!match) return {200, {{"valid", false}}};
        if (match->used) return {200, {{"valid", false}, {"already_used", true}, {"model_id", match->model_id}}};
        match->used = true;
        return {200, {{"valid", true}, {"model_id", match->model_id}}};
    }

    void install_routes(httplib::Server& server, const std::filesystem::path& ui_dir = {}) {
        auto reply = [](httplib::Response& res, const Response& r) {
            res.status = r.status;
            res.set_content(r.body.dump(), "application/json");
        };
        server.Get("/task", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, create_task()); });
        server.Post(R"(/task/([0-9a-f]+)/rectangles)", [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, score(req.matches[1], req.body));
        });
        server.Post(R"(/task/([0-9a-f]+)/submit)", [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, submit(req.matches[1], req.body));
        });
        server.Get("/codes/verify", [this, reply](const httplib::Request& req, httplib::Response& res) {
            reply(res, verify(req.get_param_value("code")));
        });
        if (!ui_dir.empty() && !server.set_mount_point("/", ui_dir.string()))
            throw Error("cannot serve UI directory " + ui_dir.string());
    }

private:
    struct PoolEntry {
        DimensionPair pair;
        NormStats stats;
        std::size_t served = 0;
    };
    struct Session {
        std::size_t pool_index = 0;
        Clock::time_point last_seen;
        bool consumed = false;
        bool submitting = false;
    };
    struct IssuedCode {
        std::string code;
        std::string session;
        std::string model_id;
        std::chrono::system_clock::time_point issued;
        bool used = false;
    };

    static Response error(int status, const std::string& message) { return {status, {{"error", message}}}; }

    static Response field_error(const FieldError& e) {
        return {400, {{"error", e.what()}, {"field", e.field()}}};
    }

    static nlohmann::json accuracy_json(const CoverageScore& s) {
        return s.has_coverage() ? nlohmann::json(s.accuracy()) : nlohmann::json("no-coverage");
    }

    static nlohmann::json parse_body(const std::string& body) {
        auto j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded() || !j.is_object()) throw FieldError("body", "must be a JSON object");
        return j;
    }

    // Draw order is the list position; any draw_order sent by the client is
    // ignored.
    static std::vector<Rectangle> parse_rectangles(const std::string& body) {
        const auto j = parse_body(body);
        const auto it = j.find("rectangles");
        if (it == j.end() || !it->is_array()) throw FieldError("rectangles", "must be an array");
        std::vector<Rectangle> out;
        for (std::size_t k = 0; k < it->size(); ++k) {
            auto r = rectangle_from_json((*it)[k], "rectangles[" + std::to_string(k) + "]", static_cast<int>(k));
            r.draw_order = static_cast<int>(k);
            out.push_back(r);
        }
        return out;
    }

    static std::string parse_worker_id(const std::string& body) {
        const auto j = parse_body(body);
        const auto it = j.find("worker_id");
        if (it == j.end()) return {};
        if (!it->is_string()) throw FieldError("worker_id", "must be a string");
        return it->get<std::string>();
    }

    CoverageScore coverage_on_validation(const PolygonModel& model) const {
        return score_coverage(model, ds_, split_.annotation_valid);
    }

    Session* find_session(const std::string& id) {
        const auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : &it->second;
    }

    void expire_sessions() {
        const auto now = now_();
        std::erase_if(sessions_, [&](const auto& kv) {
            return !kv.second.submitting && now - kv.second.last_seen > opt_.idle_timeout;
        });
    }

    std::optional<std::size_t> next_pool_slot() {
        for (std::size_t k = 0; k < pool_.size(); ++k) {
            const std::size_t slot = (cursor_ + k) % pool_.size();
            if (opt_.tasks_per_pair == 0 || pool_[slot].served < opt_.tasks_per_pair) {
                cursor_ = slot + 1;
                return slot;
            }
        }
        return std::nullopt;
    }

    Dataset ds_;
    SplitSet split_;
    std::string hash_;
    Options opt_;
    ModelStore store_;
    std::vector<PoolEntry> pool_;
    std::size_t cursor_ = 0;
    std::unordered_map<std::string, Session> sessions_;
    std::vector<IssuedCode> codes_;
    std::function<Clock::time_point()> now_ = [] { return Clock::now(); };
    mutable std::mutex mutex_;
};

}  // namespace hgml
