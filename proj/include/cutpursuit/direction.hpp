/*=============================================================================
 * Steepest descent directions of F at x:
 *
 *   ternary   min F'(x, d) over d in {-1, 0, +1}^V, by one minimum cut in a
 *             two-stage network (nodes v1, v2 per vertex), or by two
 *             single-stage cuts over {0, +1}^V and {-1, 0}^V;
 *   binary    min over {-1, +1}^V when F is differentiable along each
 *             coordinate (delta+ = delta-).
 *
 * The network decomposes along the connected components of E=; each block
 * is cut independently.
 *===========================================================================*/
#pragma once

#include <span>
#include <vector>

#include "cutpursuit/functional.hpp"
#include "cutpursuit/maxflow.hpp"

namespace cutpursuit {

struct TernaryDirection {
    std::vector<double> d;
    ExtendedReal value; // F'(x, d)
};

enum class DirectionMethod { two_stage, two_cuts };

/* vertical capacities of one column of the two-stage network */
struct ColumnCapacities {
    double source; // s -> v1, -delta- + m
    double middle; // v1 -> v2, m
    double sink;   // v2 -> t, delta+ + m
    double offset; // m = max(0, delta-, -delta+)
};
ColumnCapacities column_capacities(const VertexDeltas& delta);

/* nodes 2v (v1) and 2v + 1 (v2) per vertex, source 2|V|, sink 2|V| + 1;
 * horizontal arcs of capacity w both ways in each stage for edges in E= */
FlowNetwork build_ternary_network(std::span<const VertexDeltas> deltas,
    const WeightedGraph& graph, std::span<const char> equal);

/* decoding of a cut of the network above: SS -> +1, ST -> 0, TT -> -1;
 * TS columns are decoded as SS (switch v1 to the source side) */
std::vector<double> decode_ternary_cut(std::span<const char> source_side,
    std::size_t vertex_count);

/* steepest ternary direction from precomputed slopes */
TernaryDirection ternary_direction_from_deltas(const WeightedGraph& graph,
    std::span<const VertexDeltas> deltas, std::span<const char> equal,
    DirectionMethod method = DirectionMethod::two_cuts,
    kernels::Exec exec = kernels::Exec::parallel);

TernaryDirection steepest_ternary_direction(const ProblemSpec& spec,
    std::span<const double> x, double eps_eq,
    kernels::Exec exec = kernels::Exec::parallel);

TernaryDirection steepest_ternary_two_cuts(const ProblemSpec& spec,
    std::span<const double> x, double eps_eq,
    kernels::Exec exec = kernels::Exec::parallel);

/* throws ContractViolation if some vertex has delta+ != delta- (relative
 * tolerance 1e-9) */
TernaryDirection steepest_binary_direction(const ProblemSpec& spec,
    std::span<const double> x, double eps_eq);

/* argmin of F'(x, .) over alphabet^V by enumeration; first minimizer in
 * lexicographic order of alphabet indices; |alphabet|^|V| <= 1e7 */
TernaryDirection exhaustive_direction_oracle(const ProblemSpec& spec,
    std::span<const double> x, std::span<const double> alphabet, double eps_eq);

/* every edge whose endpoints share a sign has |d_u - d_v| <= eps */
bool is_sign_segregated(const WeightedGraph& graph, std::span<const double> d,
    double eps);

/* connected components of the subgraph of E= edges, singletons included */
std::vector<std::vector<index_t>> equality_blocks(const WeightedGraph& graph,
    std::span<const char> equal);

} // namespace cutpursuit
