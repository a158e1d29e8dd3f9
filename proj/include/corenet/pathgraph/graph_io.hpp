#ifndef CORENET_PATHGRAPH_GRAPH_IO_HPP
#define CORENET_PATHGRAPH_GRAPH_IO_HPP

#include <fstream>
#include <string>

#include <json.hpp>

#include "corenet/pathgraph/dag.hpp"
#include "corenet/pathgraph/histogram.hpp"

namespace corenet::pathgraph {

inline nlohmann::ordered_json dag_to_json(const ComputationDag& dag) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    auto& nodes = j["nodes"] = nlohmann::ordered_json::array();
    for (const auto& node : dag.nodes) {
        nlohmann::ordered_json n;
        n["id"] = node.id;
        n["kind"] = node.kind == NodeKind::activation ? "activation" : "passthrough";
        n["active"] = node.active;
        if (node.layer) n["layer"] = *node.layer;
        nodes.push_back(std::move(n));
    }
    auto& edges = j["edges"] = nlohmann::ordered_json::array();
    for (const auto& [src, dst] : dag.edges) edges.push_back({{"src", src}, {"dst", dst}});
    j["source"] = dag.source;
    j["sink"] = dag.sink;
    auto& merges = j["merges"] = nlohmann::ordered_json::array();
    for (const auto& merge : dag.merges)
        merges.push_back({{"node", merge.node}, {"branches", merge.branches}});
    return j;
}

inline ComputationDag dag_from_json(const nlohmann::json& j) {
    try {
        ComputationDag dag;
        for (const auto& n : j.at("nodes")) {
            DagNode node;
            node.id = n.at("id").get<std::string>();
            const auto kind = n.at("kind").get<std::string>();
            if (kind == "activation")
                node.kind = NodeKind::activation;
            else if (kind == "passthrough")
                node.kind = NodeKind::passthrough;
            else
                throw InvalidSpec("unknown node kind '" + kind + "'");
            node.active = n.value("active", false);
            if (n.contains("layer") && !n.at("layer").is_null()) {
                const int layer = n.at("layer").get<int>();
                if (layer < 0) throw InvalidSpec("negative layer index");
                node.layer = layer;
            }
            dag.nodes.push_back(std::move(node));
        }
        for (const auto& e : j.at("edges"))
            dag.edges.emplace_back(e.at("src").get<std::string>(), e.at("dst").get<std::string>());
        dag.source = j.at("source").get<std::string>();
        dag.sink = j.at("sink").get<std::string>();
        if (j.contains("merges")) {
            for (const auto& m : j.at("merges")) {
                MergeAnnotation merge;
                merge.node = m.at("node").get<std::string>();
                for (const auto& branch : m.at("branches"))
                    merge.branches.push_back(branch.get<std::vector<std::string>>());
                dag.merges.push_back(std::move(merge));
            }
        }
        return dag;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec(std::string("malformed graph file: ") + e.what());
    }
}

inline void save_dag(const ComputationDag& dag, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << dag_to_json(dag).dump(2) << "\n";
    if (!out) throw IoError("write to '" + path + "' failed");
}

inline ComputationDag load_dag(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidSpec("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec("graph file '" + path + "' is not valid JSON: " + e.what());
    }
    return dag_from_json(j);
}

// Histograms serialize as a list of {length, count} with exact counts:
// decimal strings for integers, "p/q" otherwise.
inline nlohmann::ordered_json histogram_to_json(const PathHistogram& hist) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [length, mass] : hist.counts())
        arr.push_back({{"length", length}, {"count", exact_to_string(mass)}});
    return arr;
}

inline PathHistogram histogram_from_json(const nlohmann::json& j, HistogramMode mode) {
    PathHistogram hist(mode);
    for (const auto& entry : j)
        hist.add(entry.at("length").get<int>(),
                 exact_from_string(entry.at("count").get<std::string>()));
    return hist;
}

}  // namespace corenet::pathgraph

#endif  // CORENET_PATHGRAPH_GRAPH_IO_HPP
