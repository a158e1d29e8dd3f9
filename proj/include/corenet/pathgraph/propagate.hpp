#ifndef CORENET_PATHGRAPH_PROPAGATE_HPP
#define CORENET_PATHGRAPH_PROPAGATE_HPP

#include <map>
#include <string>
#include <vector>

#include "corenet/pathgraph/dag.hpp"
#include "corenet/pathgraph/histogram.hpp"

namespace corenet::pathgraph {

namespace detail {

inline std::vector<PathHistogram> propagate_indexed(const DagIndex& idx, HistogramMode mode) {
    std::vector<PathHistogram> hists(idx.size(), PathHistogram(mode));
    for (size_t n : idx.topo()) {
        PathHistogram h(mode);
        if (n == idx.source()) {
            // The source seeds a single empty path; its own active flag is
            // ignored.
            h.add(0, 1);
        } else {
            const auto& groups = idx.merge_groups()[n];
            if (mode == HistogramMode::normalized && !groups.empty()) {
                // Balance the branches: each group's summed histogram is
                // scaled to total mass 1, then the groups are averaged.
                const BigRat branch_weight(1, static_cast<unsigned>(groups.size()));
                for (const auto& group : groups) {
                    PathHistogram branch(mode);
                    for (size_t pred : group) branch.add(hists[pred]);
                    const BigRat mass = branch.total_mass();
                    if (mass == 0)
                        throw ZeroMassBranch("merge at '" + idx.node(n).id +
                                             "': branch with total mass 0");
                    branch.scale(branch_weight / mass);
                    h.add(branch);
                }
            } else {
                for (size_t pred : idx.predecessors(n)) h.add(hists[pred]);
            }
        }
        if (idx.counts_toward_length(n)) h.shift(1);
        hists[n] = std::move(h);
    }
    return hists;
}

}  // namespace detail

// The path-histogram recursion, run over the whole graph in topological
// order. Returns the histogram of every node keyed by id.
inline std::map<std::string, PathHistogram> propagate_histograms(const ComputationDag& dag,
                                                                 HistogramMode mode) {
    const DagIndex idx(dag);
    auto hists = detail::propagate_indexed(idx, mode);
    std::map<std::string, PathHistogram> out;
    for (size_t i = 0; i < idx.size(); ++i) out.emplace(idx.node(i).id, std::move(hists[i]));
    return out;
}

inline PathHistogram sink_histogram(const ComputationDag& dag, HistogramMode mode) {
    const DagIndex idx(dag);
    auto hists = detail::propagate_indexed(idx, mode);
    return hists[idx.sink()];
}

// Max-plus variant of the recursion: the most active units any single
// source->sink path traverses (the network's conventional depth notion).
inline int max_effective_depth(const ComputationDag& dag) {
    const DagIndex idx(dag);
    std::vector<int> best(idx.size(), 0);
    for (size_t n : idx.topo()) {
        int incoming = 0;
        for (size_t pred : idx.predecessors(n)) incoming = std::max(incoming, best[pred]);
        best[n] = incoming + (idx.counts_toward_length(n) ? 1 : 0);
    }
    return best[idx.sink()];
}

}  // namespace corenet::pathgraph

#endif  // CORENET_PATHGRAPH_PROPAGATE_HPP
