#ifndef CORENET_TESTS_FIXTURES_HPP
#define CORENET_TESTS_FIXTURES_HPP

#include <string>
#include <vector>

#include "corenet/exact.hpp"
#include "corenet/pathgraph/dag.hpp"

namespace corenet::test {

using pathgraph::ComputationDag;
using pathgraph::DagNode;
using pathgraph::NodeKind;

inline DagNode act(std::string id, bool active, int layer = -1) {
    DagNode n;
    n.id = std::move(id);
    n.kind = NodeKind::activation;
    n.active = active;
    if (layer >= 0) n.layer = layer;
    return n;
}

inline DagNode pass(std::string id) {
    DagNode n;
    n.id = std::move(id);
    n.kind = NodeKind::passthrough;
    return n;
}

// Four-rank feedforward graph with a mix of active and inactive units.
// Known sink histogram: {1 -> 5, 2 -> 4}.
inline ComputationDag small_mixed_example() {
    ComputationDag dag;
    dag.nodes = {pass("i"),
                 act("l11", false, 0), act("l12", true, 0), act("l13", false, 0),
                 act("l21", true, 1),  act("l22", false, 1), act("l23", true, 1),
                 act("l31", true, 2),  act("l32", false, 2), act("l33", false, 2),
                 pass("l41")};
    dag.edges = {{"i", "l11"},  {"i", "l12"},  {"i", "l13"},  {"l11", "l21"}, {"l11", "l22"},
                 {"l11", "l23"}, {"l12", "l22"}, {"l13", "l22"}, {"l13", "l23"}, {"l21", "l31"},
                 {"l21", "l32"}, {"l22", "l31"}, {"l23", "l31"}, {"l23", "l33"}, {"l31", "l41"},
                 {"l32", "l41"}, {"l33", "l41"}};
    dag.source = "i";
    dag.sink = "l41";
    return dag;
}

struct DenseSkipExample {
    ComputationDag dag;
    std::vector<std::string> merge_nodes;  // the annotated third-rank nodes
};

// Three fully-connected ranks of width 3, all units active, plus one skip
// edge per third-rank node; every third-rank node is a balanced two-branch
// merge (main rank vs. skip). The source carries an active flag that must
// be ignored. Each merge node's normalized histogram: {2 -> 1/2, 3 -> 1/2}.
inline DenseSkipExample dense_skip_merge_example() {
    DenseSkipExample ex;
    ComputationDag& dag = ex.dag;
    dag.nodes = {act("i", true),
                 act("l11", true, 0), act("l12", true, 0), act("l13", true, 0),
                 act("l21", true, 1), act("l22", true, 1), act("l23", true, 1),
                 act("l31", true, 2), act("l32", true, 2), act("l33", true, 2),
                 pass("out")};
    const std::vector<std::string> r1 = {"l11", "l12", "l13"};
    const std::vector<std::string> r2 = {"l21", "l22", "l23"};
    const std::vector<std::string> r3 = {"l31", "l32", "l33"};
    for (const auto& a : r1) dag.edges.emplace_back("i", a);
    for (const auto& a : r1)
        for (const auto& b : r2) dag.edges.emplace_back(a, b);
    for (const auto& b : r2)
        for (const auto& c : r3) dag.edges.emplace_back(b, c);
    for (size_t k = 0; k < 3; ++k) dag.edges.emplace_back(r1[k], r3[k]);  // skips
    for (const auto& c : r3) dag.edges.emplace_back(c, "out");
    for (size_t k = 0; k < 3; ++k) dag.merges.push_back({r3[k], {r2, {r1[k]}}});
    dag.source = "i";
    dag.sink = "out";
    ex.merge_nodes = r3;
    return ex;
}

// A long skip over four fully-connected ranks of width 4, all active:
// 257 source-to-sink paths; the sink is a balanced merge of the dense part
// against the bare skip edge.
inline ComputationDag long_skip_fork_example() {
    ComputationDag dag;
    dag.nodes.push_back(pass("fork"));
    std::vector<std::vector<std::string>> ranks(4);
    for (size_t l = 0; l < 4; ++l)
        for (size_t c = 0; c < 4; ++c) {
            const std::string id = "n" + std::to_string(l + 1) + std::to_string(c + 1);
            ranks[l].push_back(id);
            dag.nodes.push_back(act(id, true, static_cast<int>(l)));
        }
    dag.nodes.push_back(pass("join"));
    for (const auto& a : ranks[0]) dag.edges.emplace_back("fork", a);
    for (size_t l = 0; l + 1 < 4; ++l)
        for (const auto& a : ranks[l])
            for (const auto& b : ranks[l + 1]) dag.edges.emplace_back(a, b);
    for (const auto& a : ranks[3]) dag.edges.emplace_back(a, "join");
    dag.edges.emplace_back("fork", "join");  // the skip
    dag.merges.push_back({"join", {ranks[3], {"fork"}}});
    dag.source = "fork";
    dag.sink = "join";
    return dag;
}

// Chain of k idealized residual blocks: main branch of two active units,
// bare passthrough skip, balanced merge per block.
inline ComputationDag ideal_block_chain(size_t k) {
    ComputationDag dag;
    dag.nodes.push_back(pass("p"));
    std::string prev = "p";
    for (size_t b = 0; b < k; ++b) {
        const std::string tag = std::to_string(b);
        const std::string a1 = "a" + tag + "x", a2 = "a" + tag + "y";
        const std::string skip = "s" + tag, join = "j" + tag;
        dag.nodes.push_back(act(a1, true, static_cast<int>(2 * b)));
        dag.nodes.push_back(act(a2, true, static_cast<int>(2 * b + 1)));
        dag.nodes.push_back(pass(skip));
        dag.nodes.push_back(pass(join));
        dag.edges.emplace_back(prev, a1);
        dag.edges.emplace_back(a1, a2);
        dag.edges.emplace_back(a2, join);
        dag.edges.emplace_back(prev, skip);
        dag.edges.emplace_back(skip, join);
        dag.merges.push_back({join, {{a2}, {skip}}});
        prev = join;
    }
    dag.source = "p";
    dag.sink = prev;
    return dag;
}

// Plain chain of n activation nodes between a source and a sink.
inline ComputationDag plain_chain(size_t n, bool active) {
    ComputationDag dag;
    dag.nodes.push_back(pass("p0"));
    std::string prev = "p0";
    for (size_t i = 0; i < n; ++i) {
        const std::string id = "c" + std::to_string(i + 1);
        dag.nodes.push_back(act(id, active, static_cast<int>(i)));
        dag.edges.emplace_back(prev, id);
        prev = id;
    }
    dag.nodes.push_back(pass("pz"));
    dag.edges.emplace_back(prev, "pz");
    dag.source = "p0";
    dag.sink = "pz";
    return dag;
}

inline BigInt binomial(unsigned n, unsigned k) {
    BigInt result = 1;
    for (unsigned i = 0; i < k; ++i) {
        result *= n - i;
        result /= i + 1;
    }
    return result;
}

}  // namespace corenet::test

#endif  // CORENET_TESTS_FIXTURES_HPP
