/*=============================================================================
 * Maximum flow / minimum s-t cut over networks with nonnegative, possibly
 * infinite capacities, using the augmenting path algorithm of Boykov and
 * Kolmogorov (search trees grown from both terminals and reused between
 * augmentations).
 *===========================================================================*/
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cutpursuit/graph.hpp"

namespace cutpursuit {

class FlowNetwork {
public:
    struct Arc {
        index_t from;
        index_t to;
        double capacity;         // from -> to
        double reverse_capacity; // to -> from
    };

    FlowNetwork(std::size_t node_count, index_t source, index_t sink);

    /* capacities must be >= 0 (+inf allowed) */
    void add_arc(index_t from, index_t to, double capacity,
        double reverse_capacity = 0.0);

    std::size_t node_count() const { return node_count_; }
    index_t source() const { return source_; }
    index_t sink() const { return sink_; }
    std::span<const Arc> arcs() const { return arcs_; }

    /* total capacity of arcs from source side to sink side */
    double cut_value(std::span<const char> source_side) const;

private:
    std::size_t node_count_;
    index_t source_;
    index_t sink_;
    std::vector<Arc> arcs_;
};

struct MinCut {
    double value = 0.0;             // maximum flow value
    std::vector<char> source_side;  // per node, 1 on the source side
};

/* throws ContractViolation if the maximum flow is infinite (every s-t cut
 * crosses an infinite arc); the returned cut is the set of nodes reachable
 * from the source in the final residual network */
MinCut max_flow_min_cut(const FlowNetwork& network);

/* pseudo-boolean energy with at most pairwise terms, minimized by one cut;
 * label 0 is the source side, label 1 the sink side */
class BinaryEnergy {
public:
    explicit BinaryEnergy(std::size_t variables);

    /* costs in ]-inf, +inf], not both infinite */
    void add_unary(index_t v, double cost0, double cost1);
    /* finite costs with e01 + e10 >= e00 + e11 (up to rounding), otherwise
     * ContractViolation */
    void add_pairwise(index_t u, index_t v, double e00, double e01, double e10,
        double e11);

    std::size_t size() const { return unary0_.size(); }
    double energy(std::span<const char> labels) const;
    std::vector<char> minimize() const;

    static bool is_submodular(double e00, double e01, double e10, double e11);

private:
    struct Pair {
        index_t u;
        index_t v;
        double e00, e01, e10, e11;
    };
    std::vector<double> unary0_;
    std::vector<double> unary1_;
    std::vector<Pair> pairs_;
};

} // namespace cutpursuit
