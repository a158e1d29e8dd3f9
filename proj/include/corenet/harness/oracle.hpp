#ifndef CORENET_HARNESS_ORACLE_HPP
#define CORENET_HARNESS_ORACLE_HPP

#include <string>

#include "corenet/pathgraph/brute_force.hpp"
#include "corenet/pathgraph/graph_io.hpp"
#include "corenet/pathgraph/propagate.hpp"
#include "corenet/pathgraph/random_dag.hpp"

namespace corenet::harness {

struct OracleReport {
    int trials = 0;
    int unnormalized_checked = 0;
    int normalized_checked = 0;
};

// Randomized equivalence check: the propagation recursion against plain
// path enumeration (unnormalized) and against weighted enumeration on
// series-parallel graphs (normalized). Exact equality required; the first
// disagreement aborts with the offending graph serialized for replay.
inline OracleReport oracle_check(int trials, size_t max_nodes, uint64_t seed) {
    if (trials < 1) throw InvalidSpec("oracle check needs >= 1 trial");
    OracleReport report;
    report.trials = trials;

    auto rng = SeededRng::derive(seed, "oracle");
    for (int t = 0; t < trials; ++t) {
        {
            const auto dag = pathgraph::random_dag(rng, max_nodes);
            const auto dp =
                pathgraph::sink_histogram(dag, pathgraph::HistogramMode::unnormalized);
            const auto bf =
                pathgraph::brute_force_histogram(dag, pathgraph::HistogramMode::unnormalized);
            if (!(dp == bf))
                throw OracleMismatch("unnormalized DP != enumeration on trial " +
                                         std::to_string(t),
                                     pathgraph::dag_to_json(dag).dump(2));
            ++report.unnormalized_checked;
        }
        {
            const auto dag = pathgraph::random_series_parallel_dag(rng, max_nodes);
            const auto dp = pathgraph::sink_histogram(dag, pathgraph::HistogramMode::normalized);
            const auto bf =
                pathgraph::brute_force_histogram(dag, pathgraph::HistogramMode::normalized);
            if (!(dp == bf))
                throw OracleMismatch("normalized DP != weighted enumeration on trial " +
                                         std::to_string(t),
                                     pathgraph::dag_to_json(dag).dump(2));
            ++report.normalized_checked;
        }
    }
    return report;
}

}  // namespace corenet::harness

#endif  // CORENET_HARNESS_ORACLE_HPP
