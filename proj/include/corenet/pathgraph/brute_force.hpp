#ifndef CORENET_PATHGRAPH_BRUTE_FORCE_HPP
#define CORENET_PATHGRAPH_BRUTE_FORCE_HPP

#include <algorithm>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "corenet/pathgraph/dag.hpp"
#include "corenet/pathgraph/histogram.hpp"

namespace corenet::pathgraph {

struct WeightedPath {
    std::vector<std::string> nodes;  // source ... sink
    int effective_length = 0;        // active activation nodes traversed (source excluded)
    BigRat weight;                   // 1 in unnormalized mode
};

inline constexpr size_t kDefaultEnumerationCap = 1'000'000;

namespace detail {

// Scalar total path mass per node under normalized semantics: sums at plain
// nodes, exactly 1 after a balanced merge. Used to resolve per-branch masses
// when weighting enumerated paths.
inline std::vector<BigRat> scalar_masses(const DagIndex& idx) {
    std::vector<BigRat> mass(idx.size(), BigRat(0));
    for (size_t n : idx.topo()) {
        if (n == idx.source()) {
            mass[n] = 1;
        } else if (!idx.merge_groups()[n].empty()) {
            mass[n] = 1;
        } else {
            for (size_t pred : idx.predecessors(n)) mass[n] += mass[pred];
        }
    }
    return mass;
}

// Normalized weighting is only meaningful when annotated merges are
// well-nested: the branches of a merge may not share internal nodes.
// Verified via dominator sets and backward closures.
inline void check_merge_nesting(const DagIndex& idx) {
    const size_t n = idx.size();

    // dom(v) = {v} U intersection of dom(pred) over predecessors, iterated
    // in topological order (one pass suffices on a DAG).
    std::vector<std::set<size_t>> dom(n);
    for (size_t v : idx.topo()) {
        const auto& preds = idx.predecessors(v);
        std::set<size_t> d;
        if (!preds.empty()) {
            d = dom[preds[0]];
            for (size_t i = 1; i < preds.size(); ++i) {
                std::set<size_t> next;
                std::set_intersection(d.begin(), d.end(), dom[preds[i]].begin(),
                                      dom[preds[i]].end(), std::inserter(next, next.begin()));
                d = std::move(next);
            }
        }
        d.insert(v);
        dom[v] = std::move(d);
    }

    // A branch's region is what the backward walk reaches before hitting a
    // dominator of the merge (the fork and everything above act as walls).
    const auto branch_region = [&](const std::vector<size_t>& starts,
                                   const std::set<size_t>& walls) {
        std::vector<char> seen(n, 0);
        std::vector<size_t> stack;
        for (size_t s : starts) {
            if (walls.count(s)) continue;
            if (!seen[s]) {
                seen[s] = 1;
                stack.push_back(s);
            }
        }
        while (!stack.empty()) {
            const size_t v = stack.back();
            stack.pop_back();
            for (size_t pred : idx.predecessors(v)) {
                if (seen[pred] || walls.count(pred)) continue;
                seen[pred] = 1;
                stack.push_back(pred);
            }
        }
        return seen;
    };

    for (size_t j = 0; j < n; ++j) {
        const auto& groups = idx.merge_groups()[j];
        if (groups.empty()) continue;
        std::vector<char> claimed(n, 0);
        for (const auto& group : groups) {
            const auto region = branch_region(group, dom[j]);
            for (size_t v = 0; v < n; ++v) {
                if (!region[v]) continue;
                if (claimed[v])
                    throw NotSeriesParallel("merge at '" + idx.node(j).id +
                                            "': branches share node '" + idx.node(v).id + "'");
                claimed[v] = 1;
            }
        }
    }
}

}  // namespace detail

// Every source->sink path by depth-first search. In normalized mode each
// path carries the exact rational weight implied by the branch structure:
// entering a merge via a branch costs 1/B and divides out the branch's
// total mass; elsewhere the weight is untouched.
inline std::vector<WeightedPath> enumerate_weighted_paths(
    const ComputationDag& dag, HistogramMode mode, size_t cap = kDefaultEnumerationCap) {
    const DagIndex idx(dag);

    std::vector<BigRat> masses;
    if (mode == HistogramMode::normalized) {
        detail::check_merge_nesting(idx);
        masses = detail::scalar_masses(idx);
    }

    std::vector<WeightedPath> paths;
    std::vector<size_t> current;

    const auto weight_step = [&](size_t from, size_t to, const BigRat& w) -> BigRat {
        if (mode != HistogramMode::normalized) return w;
        const auto& groups = idx.merge_groups()[to];
        if (groups.empty()) return w;
        for (const auto& group : groups) {
            if (std::find(group.begin(), group.end(), from) == group.end()) continue;
            BigRat branch_mass = 0;
            for (size_t u : group) branch_mass += masses[u];
            if (branch_mass == 0)
                throw ZeroMassBranch("merge at '" + idx.node(to).id + "': branch with mass 0");
            return w / (BigRat(static_cast<unsigned>(groups.size())) * branch_mass);
        }
        throw MergeError("merge at '" + idx.node(to).id + "': edge not covered by any branch");
    };

    const std::function<void(size_t, int, BigRat)> dfs = [&](size_t v, int length, BigRat w) {
        if (v == idx.sink()) {
            if (paths.size() >= cap)
                throw TooLarge("path enumeration exceeds cap of " + std::to_string(cap));
            WeightedPath p;
            p.nodes.reserve(current.size());
            for (size_t i : current) p.nodes.push_back(idx.node(i).id);
            p.effective_length = length;
            p.weight = std::move(w);
            paths.push_back(std::move(p));
            return;
        }
        for (size_t next : idx.successors(v)) {
            current.push_back(next);
            const int next_length = length + (idx.counts_toward_length(next) ? 1 : 0);
            dfs(next, next_length, weight_step(v, next, w));
            current.pop_back();
        }
    };

    current.push_back(idx.source());
    dfs(idx.source(), 0, BigRat(1));
    return paths;
}

// Enumeration-based histogram at the sink; the independent check for the
// propagation recursion.
inline PathHistogram brute_force_histogram(const ComputationDag& dag, HistogramMode mode,
                                           size_t cap = kDefaultEnumerationCap) {
    PathHistogram hist(mode);
    for (const auto& path : enumerate_weighted_paths(dag, mode, cap))
        hist.add(path.effective_length, path.weight);
    return hist;
}

inline size_t count_paths(const ComputationDag& dag, size_t cap = kDefaultEnumerationCap) {
    return enumerate_weighted_paths(dag, HistogramMode::unnormalized, cap).size();
}

}  // namespace corenet::pathgraph

#endif  // CORENET_PATHGRAPH_BRUTE_FORCE_HPP
