#ifndef CORENET_TENSORNET_STATS_HPP
#define CORENET_TENSORNET_STATS_HPP

#include "corenet/pathgraph/propagate.hpp"
#include "corenet/tensornet/export_dag.hpp"

namespace corenet::tensornet {

struct NonlinearityStats {
    double active_fraction = 1.0;
    double enw = 0.0;
    double apl = 0.0;
    double napl = 0.0;
    int max_depth = 0;
};

// Channel-granularity snapshot of the network's nonlinear structure.
inline NonlinearityStats nonlinearity_stats(Network& net,
                                            const pathgraph::ActivationMask& mask) {
    NonlinearityStats stats;
    stats.active_fraction = pathgraph::active_fraction(mask);
    stats.enw = pathgraph::enw(mask);
    const auto dag = network_to_dag(net, mask, DagGranularity::channel);
    stats.apl = pathgraph::apl(pathgraph::sink_histogram(dag, pathgraph::HistogramMode::unnormalized));
    stats.napl = pathgraph::apl(pathgraph::sink_histogram(dag, pathgraph::HistogramMode::normalized));
    stats.max_depth = pathgraph::max_effective_depth(dag);
    return stats;
}

}  // namespace corenet::tensornet

#endif  // CORENET_TENSORNET_STATS_HPP
