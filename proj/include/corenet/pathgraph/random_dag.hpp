#ifndef CORENET_PATHGRAPH_RANDOM_DAG_HPP
#define CORENET_PATHGRAPH_RANDOM_DAG_HPP

#include <cstdio>
#include <string>
#include <vector>

#include "corenet/pathgraph/dag.hpp"
#include "corenet/rng.hpp"

namespace corenet::pathgraph {

namespace detail {

inline std::string small_id(size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "v%03llu", static_cast<unsigned long long>(i));
    return buf;
}

}  // namespace detail

// Random connected DAG on up to max_nodes nodes (source and sink included),
// random activation flags, no merge annotations. Every node is kept
// reachable from the source and co-reachable from the sink by construction:
// nodes are laid out in index order and every interior node gets at least
// one earlier predecessor and one later successor.
inline ComputationDag random_dag(SeededRng& rng, size_t max_nodes) {
    const size_t n = 3 + rng.bounded(max_nodes > 3 ? max_nodes - 2 : 1);
    ComputationDag dag;
    dag.nodes.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        DagNode node;
        node.id = detail::small_id(i);
        if (i == 0 || i + 1 == n) {
            node.kind = NodeKind::passthrough;
        } else {
            node.kind = rng.uniform() < 0.8 ? NodeKind::activation : NodeKind::passthrough;
            node.active = node.kind == NodeKind::activation && rng.coin();
        }
        dag.nodes.push_back(std::move(node));
    }
    dag.source = dag.nodes.front().id;
    dag.sink = dag.nodes.back().id;

    std::vector<std::vector<char>> has(n, std::vector<char>(n, 0));
    const auto add_edge = [&](size_t a, size_t b) {
        if (has[a][b]) return;
        has[a][b] = 1;
        dag.edges.emplace_back(dag.nodes[a].id, dag.nodes[b].id);
    };

    for (size_t j = 1; j < n; ++j)
        for (size_t i = (j > 4 ? j - 4 : 0); i < j; ++i)
            if (rng.uniform() < 0.35) add_edge(i, j);

    // Patch connectivity: an earlier predecessor for everyone but the
    // source, a later successor for everyone but the sink.
    for (size_t j = 1; j < n; ++j) {
        bool any = false;
        for (size_t i = 0; i < j; ++i) any |= has[i][j] != 0;
        if (!any) add_edge(rng.bounded(j), j);
    }
    for (size_t i = 0; i + 1 < n; ++i) {
        bool any = false;
        for (size_t j = i + 1; j < n; ++j) any |= has[i][j] != 0;
        if (!any) add_edge(i, i + 1 + rng.bounded(n - i - 1));
    }
    return dag;
}

namespace detail {

struct SpBuilder {
    ComputationDag dag;
    SeededRng* rng = nullptr;
    size_t next_id = 0;
    size_t budget = 0;  // remaining node allowance

    std::string fresh_node(NodeKind kind, bool active) {
        DagNode node;
        node.id = small_id(next_id++);
        node.kind = kind;
        node.active = kind == NodeKind::activation && active;
        dag.nodes.push_back(node);
        return dag.nodes.back().id;
    }

    std::string unit() {
        --budget;
        const bool activation = rng->uniform() < 0.8;
        return fresh_node(activation ? NodeKind::activation : NodeKind::passthrough,
                          activation && rng->coin());
    }

    // Builds a component, returns {entry, exit}. Depth limits nesting.
    std::pair<std::string, std::string> component(int depth) {
        if (budget < 4 || depth > 3 || rng->uniform() < 0.3) {
            const auto id = unit();
            return {id, id};
        }
        if (rng->coin()) {  // series chain
            const size_t len = 2 + rng->bounded(3);
            auto [entry, exit] = component(depth + 1);
            for (size_t i = 1; i < len && budget >= 2; ++i) {
                auto [e2, x2] = component(depth + 1);
                dag.edges.emplace_back(exit, e2);
                exit = x2;
            }
            return {entry, exit};
        }
        // parallel composition with its own fork/join; annotated (balanced
        // merge) or plain with equal probability
        budget -= 2;
        const std::string fork = fresh_node(NodeKind::passthrough, false);
        const std::string join = fresh_node(NodeKind::passthrough, false);
        const bool annotate = rng->coin();
        const size_t want = 2 + rng->bounded(2);
        bool used_empty = false;  // at most one direct fork->join edge
        MergeAnnotation merge;
        merge.node = join;
        for (size_t b = 0; b < want; ++b) {
            const bool can_component = budget >= 1;
            if (!can_component && used_empty) break;
            if (!used_empty && (!can_component || rng->uniform() < 0.2)) {
                used_empty = true;
                dag.edges.emplace_back(fork, join);
                merge.branches.push_back({fork});
            } else {
                auto [entry, exit] = component(depth + 1);
                dag.edges.emplace_back(fork, entry);
                dag.edges.emplace_back(exit, join);
                merge.branches.push_back({exit});
            }
        }
        if (merge.branches.size() < 2 && !used_empty) {
            dag.edges.emplace_back(fork, join);
            merge.branches.push_back({fork});
        }
        if (merge.branches.size() >= 2 && annotate) dag.merges.push_back(merge);
        return {fork, join};
    }
};

}  // namespace detail

// Random series-parallel DAG with merge annotations on a subset of joins;
// suitable input for the normalized-mode oracle.
inline ComputationDag random_series_parallel_dag(SeededRng& rng, size_t max_nodes) {
    detail::SpBuilder builder;
    builder.rng = &rng;
    builder.budget = max_nodes > 4 ? max_nodes - 2 : 2;

    const auto [entry, exit] = builder.component(0);
    const std::string source = builder.fresh_node(NodeKind::passthrough, false);
    const std::string sink = builder.fresh_node(NodeKind::passthrough, false);
    builder.dag.edges.emplace_back(source, entry);
    builder.dag.edges.emplace_back(exit, sink);
    builder.dag.source = source;
    builder.dag.sink = sink;
    return builder.dag;
}

}  // namespace corenet::pathgraph

#endif  // CORENET_PATHGRAPH_RANDOM_DAG_HPP
