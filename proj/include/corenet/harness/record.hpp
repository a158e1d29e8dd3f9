#ifndef CORENET_HARNESS_RECORD_HPP
#define CORENET_HARNESS_RECORD_HPP

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "corenet/error.hpp"
#include "corenet/format.hpp"

namespace corenet::harness {

inline constexpr const char* kToolVersion = "0.1.0";

struct MetricsRow {
    int epoch = 0;
    std::string phase;        // "init" | "train" | "linearize"
    double lr = 0.0;
    double train_loss = 0.0;  // mean task (cross-entropy) loss
    double train_acc = 0.0;
    double test_acc = 0.0;
    double active_fraction = 1.0;
    double enw = 0.0;
    double apl = 0.0;
    double napl = 0.0;
    double omega = 0.0;
};

struct RunManifest {
    std::string config_digest;
    uint64_t seed = 0;
    std::string tool_version = kToolVersion;
    double wall_seconds = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "epoch,phase,lr,train_loss,train_acc,test_acc,active_fraction,enw,apl,napl,omega";

struct ExperimentRecord {
    std::vector<MetricsRow> rows;
    RunManifest manifest;

    void validate() const {
        for (size_t i = 1; i < rows.size(); ++i)
            if (rows[i].epoch <= rows[i - 1].epoch)
                throw InvalidSpec("record epochs must be strictly increasing");
    }
};

inline std::string metrics_row_csv(const MetricsRow& r) {
    std::string line = std::to_string(r.epoch) + "," + r.phase;
    for (double v : {r.lr, r.train_loss, r.train_acc, r.test_acc, r.active_fraction, r.enw,
                     r.apl, r.napl, r.omega})
        line += "," + format_double(v);
    return line;
}

inline std::string metrics_csv(const ExperimentRecord& record) {
    std::string out = std::string(kMetricsHeader) + "\n";
    for (const auto& row : record.rows) out += metrics_row_csv(row) + "\n";
    return out;
}

inline ExperimentRecord metrics_from_csv(const std::string& csv) {
    ExperimentRecord record;
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader)
        throw InvalidSpec("metrics CSV header mismatch");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != 11) throw InvalidSpec("metrics CSV row with wrong field count");
        MetricsRow row;
        try {
            row.epoch = std::stoi(fields[0]);
            row.phase = fields[1];
            row.lr = std::stod(fields[2]);
            row.train_loss = std::stod(fields[3]);
            row.train_acc = std::stod(fields[4]);
            row.test_acc = std::stod(fields[5]);
            row.active_fraction = std::stod(fields[6]);
            row.enw = std::stod(fields[7]);
            row.apl = std::stod(fields[8]);
            row.napl = std::stod(fields[9]);
            row.omega = std::stod(fields[10]);
        } catch (const std::exception& e) {
            throw InvalidSpec(std::string("bad metrics CSV row: ") + e.what());
        }
        record.rows.push_back(std::move(row));
    }
    record.validate();
    return record;
}

inline nlohmann::ordered_json manifest_to_json(const RunManifest& m) {
    return {{"schema_version", 1},
            {"config_digest", m.config_digest},
            {"seed", m.seed},
            {"tool_version", m.tool_version},
            {"wall_seconds", m.wall_seconds}};
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
    try {
        RunManifest m;
        m.config_digest = j.at("config_digest").get<std::string>();
        m.seed = j.at("seed").get<uint64_t>();
        m.tool_version = j.at("tool_version").get<std::string>();
        m.wall_seconds = j.at("wall_seconds").get<double>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec(std::string("malformed manifest: ") + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw IoError("write to '" + path + "' failed");
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace corenet::harness

#endif  // CORENET_HARNESS_RECORD_HPP
