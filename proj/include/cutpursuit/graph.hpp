/*=============================================================================
 * Weighted undirected graphs, vertex partitions into connected components,
 * and reduced graphs over the components.
 *===========================================================================*/
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace cutpursuit {

using index_t = std::uint32_t;

struct Edge {
    index_t u;
    index_t v;
    double w;
};

/* undirected graph with strictly positive edge weights, no self-loops and
 * at most one edge per unordered pair; adjacency is stored as a forward star
 * over both orientations */
class WeightedGraph {
public:
    WeightedGraph() = default;

    /* zero-weight edges are dropped; self-loops, negative or non-finite
     * weights, out-of-range indices and duplicate pairs throw
     * ContractViolation */
    WeightedGraph(std::size_t vertex_count, std::vector<Edge> edges);

    std::size_t vertex_count() const { return vertex_count_; }
    std::size_t edge_count() const { return edges_.size(); }
    std::span<const Edge> edges() const { return edges_; }
    const Edge& edge(std::size_t e) const { return edges_[e]; }

    struct Incidence {
        index_t neighbor;
        index_t edge;
    };
    std::span<const Incidence> neighbors(index_t v) const
    {
        return {adjacency_.data() + first_[v], adjacency_.data() + first_[v + 1]};
    }

    /* same graph with every weight multiplied by scale > 0 */
    WeightedGraph scaled(double scale) const;

private:
    std::size_t vertex_count_ = 0;
    std::vector<Edge> edges_;
    std::vector<std::size_t> first_ = {0};
    std::vector<Incidence> adjacency_;
};

/* maximal subsets of `subset` connected through edges with both endpoints in
 * `subset` and satisfying `same`; each result is sorted, results ordered by
 * their first vertex in `subset` order */
using SamePredicate = std::function<bool(index_t, index_t)>;
std::vector<std::vector<index_t>> connected_components(
    const WeightedGraph& graph, std::span<const index_t> subset,
    const SamePredicate& same);

/* partition of the vertices; component ids are 0..size()-1 */
class Partition {
public:
    Partition() = default;

    /* from a label per vertex (arbitrary integers); components are numbered
     * by first occurrence */
    static Partition from_labels(std::span<const index_t> labels);
    static Partition from_components(std::size_t vertex_count,
        std::vector<std::vector<index_t>> components);
    static Partition single(std::size_t vertex_count);
    static Partition singletons(std::size_t vertex_count);

    std::size_t size() const { return components_.size(); }
    std::size_t vertex_count() const { return component_of_.size(); }
    index_t component_of(index_t v) const { return component_of_[v]; }
    std::span<const index_t> labels() const { return component_of_; }
    std::span<const index_t> component(std::size_t c) const { return components_[c]; }
    const std::vector<std::vector<index_t>>& components() const { return components_; }

    /* disjoint cover, consistent labels, every component connected */
    bool is_valid(const WeightedGraph& graph) const;

    friend bool operator==(const Partition&, const Partition&) = default;

private:
    std::vector<index_t> component_of_;
    std::vector<std::vector<index_t>> components_;
};

struct ReducedEdge {
    index_t a; // a < b
    index_t b;
    double omega;
};

struct ReducedGraph {
    Partition partition;
    std::vector<ReducedEdge> edges; // sorted by (a, b)

    /* weighted degree of each component, sum of incident omegas */
    std::vector<double> weighted_degrees() const;
};

ReducedGraph build_reduced_graph(const WeightedGraph& graph,
    const Partition& partition);

/* split every component into the constant connected components of d (dim
 * values per vertex, equality within eps in l-infinity distance) */
Partition refine_partition(const WeightedGraph& graph, const Partition& partition,
    std::span<const double> d, std::size_t dim, double eps);

/* merge adjacent components whose values (dim per component) differ by at
 * most merge_eps in l-infinity distance, transitively and until no adjacent
 * pair qualifies; merged value is the size-weighted mean */
std::pair<Partition, std::vector<double>> merge_close_components(
    const WeightedGraph& graph, const Partition& partition,
    std::span<const double> values, std::size_t dim, double merge_eps);

} // namespace cutpursuit
