#pragma once

// Append-only store of accepted models, one JSON object per line.
//
//   {"v":1,"id":"...","dataset_hash":"...","seed":7,
//    "provenance":{"kind":"synthetic"} | {"kind":"human","worker_id":"..."},
//    "pair":[a,b],"stats":{"mean":[..,..],"stddev":[..,..]},
//    "rectangles":[{"u_min":..,"u_max":..,"v_min":..,"v_max":..,"label":0|1,"draw_order":k}, ...],
//    "validation_accuracy":..,"m_acc":..}

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "hgml/error.hpp"
#include "hgml/polygon_model.hpp"

namespace hgml {

inline constexpr int kModelRecordVersion = 1;

struct StoredModel {
    PolygonModel model;
    std::string dataset_hash;
    std::uint64_t seed = 0;

    friend bool operator==(const StoredModel&, const StoredModel&) = default;
};

inline nlohmann::json rectangle_to_json(const Rectangle& r) {
    return {{"u_min", r.u_min}, {"u_max", r.u_max}, {"v_min", r.v_min}, {"v_max", r.v_max},
            {"label", r.predicted_label}, {"draw_order", r.draw_order}};
}

// Field-checked parse of a rectangle object. `draw_order` is optional and
// defaults to `default_order`.
inline Rectangle rectangle_from_json(const nlohmann::json& j, const std::string& where, int default_order) {
    if (!j.is_object()) throw FieldError(where, "must be an object");
    auto number = [&](const char* key) {
        const auto it = j.find(key);
        if (it == j.end() || !it->is_number()) throw FieldError(where + "." + key, "missing or not a number");
        return it->get<double>();
    };
    Rectangle r;
    r.u_min = number("u_min");
    r.u_max = number("u_max");
    r.v_min = number("v_min");
    r.v_max = number("v_max");
    const auto label = j.find("label");
    if (label == j.end() || !label->is_number_integer()) throw FieldError(where + ".label", "missing or not 0/1");
    r.predicted_label = label->get<int>();
    r.draw_order = default_order;
    if (const auto order = j.find("draw_order"); order != j.end()) {
        if (!order->is_number_integer()) throw FieldError(where + ".draw_order", "not an integer");
        r.draw_order = order->get<int>();
    }
    validate_rectangle(r, where);
    return r;
}

inline nlohmann::json to_json(const StoredModel& s) {
    const auto& m = s.model;
    nlohmann::json prov = {{"kind", m.provenance.kind == Provenance::Kind::human ? "human" : "synthetic"}};
    if (m.provenance.kind == Provenance::Kind::human) prov["worker_id"] = m.provenance.worker_id;
    nlohmann::json rects = nlohmann::json::array();
    for (const auto& r : m.rectangles) rects.push_back(rectangle_to_json(r));
    nlohmann::json j = {
        {"v", kModelRecordVersion},
        {"id", m.id},
        {"dataset_hash", s.dataset_hash},
        {"seed", s.seed},
        {"provenance", prov},
        {"pair", {m.stats.pair.dim_a, m.stats.pair.dim_b}},
        {"stats", {{"mean", m.stats.mean}, {"stddev", m.stats.stddev}}},
        {"rectangles", rects},
    };
    j["validation_accuracy"] = m.validation_accuracy ? nlohmann::json(*m.validation_accuracy) : nlohmann::json();
    j["m_acc"] = m.accuracy ? nlohmann::json(*m.accuracy) : nlohmann::json();
    return j;
}

inline StoredModel stored_model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("v").get<int>() != kModelRecordVersion)
            throw Error("unsupported model record version " + j.at("v").dump());
        StoredModel s;
        auto& m = s.model;
        m.id = j.at("id").get<std::string>();
        s.dataset_hash = j.at("dataset_hash").get<std::string>();
        s.seed = j.at("seed").get<std::uint64_t>();
        const auto& prov = j.at("provenance");
        const auto kind = prov.at("kind").get<std::string>();
        if (kind == "human") {
            m.provenance.kind = Provenance::Kind::human;
            m.provenance.worker_id = prov.value("worker_id", "");
        } else if (kind == "synthetic") {
            m.provenance.kind = Provenance::Kind::synthetic;
        } else {
            throw Error("unknown provenance kind '" + kind + "'");
        }
        const auto pair = j.at("pair").get<std::vector<std::size_t>>();
        if (pair.size() != 2 || pair[0] >= pair[1]) throw Error("model pair must be [dim_a, dim_b] with dim_a < dim_b");
        m.stats.pair = {pair[0], pair[1]};
        m.stats.mean = j.at("stats").at("mean").get<std::array<double, 2>>();
        m.stats.stddev = j.at("stats").at("stddev").get<std::array<double, 2>>();
        const auto& rects = j.at("rectangles");
        for (std::size_t k = 0; k < rects.size(); ++k)
            m.rectangles.push_back(
                rectangle_from_json(rects[k], "rectangles[" + std::to_string(k) + "]", static_cast<int>(k)));
        if (!j.at("validation_accuracy").is_null()) m.validation_accuracy = j.at("validation_accuracy").get<double>();
        if (!j.at("m_acc").is_null()) m.accuracy = j.at("m_acc").get<double>();
        m.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed model record: ") + e.what());
    }
}

inline std::vector<StoredModel> load_model_store(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model store " + path.string());
    std::vector<StoredModel> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(stored_model_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

// Appends records to a file opened with O_APPEND. Each record is one write(2)
// of a complete line, serialized by a mutex within the process.
class ModelStore {
public:
    explicit ModelStore(std::filesystem::path path) : path_(std::move(path)) {
        fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
        if (fd_ < 0) throw Error("cannot open model store " + path_.string() + ": " + std::strerror(errno));
    }
    ~ModelStore() {
        if (fd_ >= 0) ::close(fd_);
    }
    ModelStore(const ModelStore&) = delete;
    ModelStore& operator=(const ModelStore&) = delete;

    void append(const StoredModel& record) {
        const std::string line = to_json(record).dump() + "\n";
        std::lock_guard lock(mutex_);
        std::size_t written = 0;
        while (written < line.size()) {
            const auto n = ::write(fd_, line.data() + written, line.size() - written);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw Error("model store write failed: " + std::string(std::strerror(errno)));
            }
            written += static_cast<std::size_t>(n);
        }
        ::fsync(fd_);
        ++appended_;
    }

    std::size_t appended() const {
        std::lock_guard lock(mutex_);
        return appended_;
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
    int fd_ = -1;
    mutable std::mutex mutex_;
    std::size_t appended_ = 0;
};

}  // namespace hgml
