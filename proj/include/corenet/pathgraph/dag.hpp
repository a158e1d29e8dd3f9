#ifndef CORENET_PATHGRAPH_DAG_HPP
#define CORENET_PATHGRAPH_DAG_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "corenet/error.hpp"

namespace corenet::pathgraph {

enum class NodeKind { activation, passthrough };

struct DagNode {
    std::string id;
    NodeKind kind = NodeKind::passthrough;
    bool active = false;              // meaningful only for kind == activation
    std::optional<int> layer;         // activation-layer index, when known
};

// Declares that `node` sums contributions from distinct branches; its
// incoming edges are partitioned (by source id) into >= 2 non-empty groups.
// Normalized-mode propagation balances the groups against each other.
struct MergeAnnotation {
    std::string node;
    std::vector<std::vector<std::string>> branches;
};

// The nonlinear skeleton of a network: one node per activation unit plus
// passthrough plumbing, edges along structural connectivity.
struct ComputationDag {
    std::vector<DagNode> nodes;
    std::vector<std::pair<std::string, std::string>> edges;
    std::string source;
    std::string sink;
    std::vector<MergeAnnotation> merges;
};

// Indexed view over a ComputationDag, built after validation. Keeps the
// topological order (ties broken by ascending id) and adjacency by index.
class DagIndex {
public:
    explicit DagIndex(const ComputationDag& dag) : dag_(&dag) {
        for (size_t i = 0; i < dag.nodes.size(); ++i) {
            const auto& node = dag.nodes[i];
            if (node.id.empty()) throw InvalidSpec("node with empty id");
            if (!by_id_.emplace(node.id, i).second)
                throw InvalidSpec("duplicate node id '" + node.id + "'");
        }
        if (!by_id_.count(dag.source)) throw InvalidSpec("source '" + dag.source + "' is not a node");
        if (!by_id_.count(dag.sink)) throw InvalidSpec("sink '" + dag.sink + "' is not a node");

        in_.resize(dag.nodes.size());
        out_.resize(dag.nodes.size());
        std::set<std::pair<size_t, size_t>> seen;
        for (const auto& [src, dst] : dag.edges) {
            const size_t s = index_of(src);
            const size_t d = index_of(dst);
            if (!seen.emplace(s, d).second)
                throw InvalidSpec("duplicate edge " + src + " -> " + dst);
            out_[s].push_back(d);
            in_[d].push_back(s);
        }

        source_ = index_of(dag.source);
        sink_ = index_of(dag.sink);
        validate();
    }

    const ComputationDag& dag() const { return *dag_; }
    size_t size() const { return dag_->nodes.size(); }
    size_t source() const { return source_; }
    size_t sink() const { return sink_; }

    size_t index_of(const std::string& id) const {
        const auto it = by_id_.find(id);
        if (it == by_id_.end()) throw InvalidSpec("unknown node id '" + id + "'");
        return it->second;
    }

    const DagNode& node(size_t i) const { return dag_->nodes[i]; }
    const std::vector<size_t>& predecessors(size_t i) const { return in_[i]; }
    const std::vector<size_t>& successors(size_t i) const { return out_[i]; }

    // Indices in topological order.
    const std::vector<size_t>& topo() const { return topo_; }

    std::vector<std::string> topo_ids() const {
        std::vector<std::string> ids;
        ids.reserve(topo_.size());
        for (size_t i : topo_) ids.push_back(dag_->nodes[i].id);
        return ids;
    }

    // Merge branch groups per node index (empty if unannotated): each group
    // is a sorted list of predecessor indices.
    const std::vector<std::vector<std::vector<size_t>>>& merge_groups() const {
        return merge_groups_;
    }

    bool counts_toward_length(size_t i) const {
        return i != source_ && dag_->nodes[i].kind == NodeKind::activation && dag_->nodes[i].active;
    }

private:
    void validate() {
        topo_order();  // cycles first: degree violations on cyclic input are secondary
        if (!in_[source_].empty())
            throw ConnectivityError("source '" + dag_->source + "' has incoming edges");
        if (!out_[sink_].empty())
            throw ConnectivityError("sink '" + dag_->sink + "' has outgoing edges");
        check_reachability();
        index_merges();
    }

    // Kahn's algorithm; the ready set is ordered by node id so the result
    // is deterministic.
    void topo_order() {
        std::vector<size_t> in_degree(size());
        for (size_t i = 0; i < size(); ++i) in_degree[i] = in_[i].size();

        auto id_less = [this](size_t a, size_t b) {
            const auto& ia = dag_->nodes[a].id;
            const auto& ib = dag_->nodes[b].id;
            return ia != ib ? ia < ib : a < b;
        };
        std::set<size_t, decltype(id_less)> ready(id_less);
        for (size_t i = 0; i < size(); ++i)
            if (in_degree[i] == 0) ready.insert(i);

        topo_.reserve(size());
        while (!ready.empty()) {
            const size_t n = *ready.begin();
            ready.erase(ready.begin());
            topo_.push_back(n);
            for (size_t next : out_[n]) {
                if (--in_degree[next] == 0) ready.insert(next);
            }
        }
        if (topo_.size() != size()) throw CycleError("graph contains a cycle");
    }

    void check_reachability() const {
        const auto reach = [this](size_t start, const std::vector<std::vector<size_t>>& adj) {
            std::vector<char> seen(size(), 0);
            std::vector<size_t> stack{start};
            seen[start] = 1;
            while (!stack.empty()) {
                const size_t n = stack.back();
                stack.pop_back();
                for (size_t next : adj[n]) {
                    if (!seen[next]) {
                        seen[next] = 1;
                        stack.push_back(next);
                    }
                }
            }
            return seen;
        };
        const auto from_source = reach(source_, out_);
        const auto to_sink = reach(sink_, in_);
        for (size_t i = 0; i < size(); ++i) {
            if (!from_source[i])
                throw ConnectivityError("node '" + dag_->nodes[i].id + "' unreachable from source");
            if (!to_sink[i])
                throw ConnectivityError("node '" + dag_->nodes[i].id + "' does not reach sink");
        }
    }

    void index_merges() {
        merge_groups_.assign(size(), {});
        for (const auto& merge : dag_->merges) {
            const size_t n = index_of(merge.node);
            if (!merge_groups_[n].empty())
                throw MergeError("node '" + merge.node + "' has more than one merge annotation");
            if (merge.branches.size() < 2)
                throw MergeError("merge at '" + merge.node + "' needs >= 2 branches");

            std::set<size_t> incoming(in_[n].begin(), in_[n].end());
            std::set<size_t> claimed;
            std::vector<std::vector<size_t>> groups;
            for (const auto& branch : merge.branches) {
                if (branch.empty())
                    throw MergeError("merge at '" + merge.node + "' has an empty branch");
                std::vector<size_t> group;
                for (const auto& src : branch) {
                    const size_t s = index_of(src);
                    if (!incoming.count(s))
                        throw MergeError("merge at '" + merge.node + "': '" + src +
                                         "' is not an incoming edge source");
                    if (!claimed.insert(s).second)
                        throw MergeError("merge at '" + merge.node + "': '" + src +
                                         "' listed in two branches");
                    group.push_back(s);
                }
                std::sort(group.begin(), group.end());
                groups.push_back(std::move(group));
            }
            if (claimed.size() != incoming.size())
                throw MergeError("merge at '" + merge.node +
                                 "' does not cover all incoming edges");
            merge_groups_[n] = std::move(groups);
        }
    }

    const ComputationDag* dag_;
    std::map<std::string, size_t> by_id_;
    std::vector<std::vector<size_t>> in_, out_;
    std::vector<size_t> topo_;
    std::vector<std::vector<std::vector<size_t>>> merge_groups_;
    size_t source_ = 0, sink_ = 0;
};

// Full structural validation; returns node ids in topological order.
inline std::vector<std::string> validate_dag(const ComputationDag& dag) {
    return DagIndex(dag).topo_ids();
}

}  // namespace corenet::pathgraph

#endif  // CORENET_PATHGRAPH_DAG_HPP
