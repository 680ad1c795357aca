#include "cutpursuit/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "cutpursuit/errors.hpp"

namespace cutpursuit {

WeightedGraph::WeightedGraph(std::size_t vertex_count, std::vector<Edge> edges)
    : vertex_count_(vertex_count)
{
    edges_.reserve(edges.size());
    std::vector<std::pair<index_t, index_t>> pairs;
    pairs.reserve(edges.size());
    for (const Edge& e : edges) {
        if (e.u >= vertex_count || e.v >= vertex_count) {
            throw ContractViolation("graph: edge (" + std::to_string(e.u) + ", "
                + std::to_string(e.v) + ") has a vertex index out of range");
        }
        if (e.u == e.v) {
            throw ContractViolation("graph: self-loop on vertex "
                + std::to_string(e.u));
        }
        if (!std::isfinite(e.w) || e.w < 0.0) {
            throw ContractViolation("graph: edge weights must be finite and "
                "nonnegative");
        }
        if (e.w == 0.0) { continue; }
        pairs.emplace_back(std::min(e.u, e.v), std::max(e.u, e.v));
        edges_.push_back(e);
    }
    std::sort(pairs.begin(), pairs.end());
    if (std::adjacent_find(pairs.begin(), pairs.end()) != pairs.end()) {
        throw ContractViolation("graph: duplicate edge between the same pair");
    }

    first_.assign(vertex_count + 1, 0);
    for (const Edge& e : edges_) { first_[e.u + 1]++; first_[e.v + 1]++; }
    std::partial_sum(first_.begin(), first_.end(), first_.begin());
    adjacency_.resize(2 * edges_.size());
    std::vector<std::size_t> fill(first_.begin(), first_.end() - 1);
    for (index_t i = 0; i < edges_.size(); i++) {
        const Edge& e = edges_[i];
        adjacency_[fill[e.u]++] = {e.v, i};
        adjacency_[fill[e.v]++] = {e.u, i};
    }
}

WeightedGraph WeightedGraph::scaled(double scale) const
{
    if (!(scale > 0.0) || !std::isfinite(scale)) {
        throw ContractViolation("graph: weight scale must be positive");
    }
    std::vector<Edge> edges(edges_.begin(), edges_.end());
    for (Edge& e : edges) { e.w *= scale; }
    return WeightedGraph(vertex_count_, std::move(edges));
}

std::vector<std::vector<index_t>> connected_components(
    const WeightedGraph& graph, std::span<const index_t> subset,
    const SamePredicate& same)
{
    std::vector<char> in_subset(graph.vertex_count(), 0);
    for (index_t v : subset) { in_subset[v] = 1; }
    std::vector<char> visited(graph.vertex_count(), 0);

    std::vector<std::vector<index_t>> result;
    std::vector<index_t> stack;
    for (index_t root : subset) {
        if (visited[root]) { continue; }
        std::vector<index_t> comp;
        visited[root] = 1;
        stack.push_back(root);
        while (!stack.empty()) {
            index_t u = stack.back();
            stack.pop_back();
            comp.push_back(u);
            for (const auto& inc : graph.neighbors(u)) {
                index_t v = inc.neighbor;
                if (in_subset[v] && !visited[v] && same(u, v)) {
                    visited[v] = 1;
                    stack.push_back(v);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        result.push_back(std::move(comp));
    }
    return result;
}

Partition Partition::from_labels(std::span<const index_t> labels)
{
    Partition p;
    p.component_of_.resize(labels.size());
    std::map<index_t, index_t> relabel;
    for (std::size_t v = 0; v < labels.size(); v++) {
        auto [it, inserted] = relabel.try_emplace(labels[v],
            static_cast<index_t>(relabel.size()));
        if (inserted) { p.components_.emplace_back(); }
        p.component_of_[v] = it->second;
        p.components_[it->second].push_back(static_cast<index_t>(v));
    }
    return p;
}

Partition Partition::from_components(std::size_t vertex_count,
    std::vector<std::vector<index_t>> components)
{
    Partition p;
    constexpr index_t unassigned = static_cast<index_t>(-1);
    p.component_of_.assign(vertex_count, unassigned);
    for (index_t c = 0; c < components.size(); c++) {
        if (components[c].empty()) {
            throw ContractViolation("partition: empty component");
        }
        std::sort(components[c].begin(), components[c].end());
        for (index_t v : components[c]) {
            if (v >= vertex_count || p.component_of_[v] != unassigned) {
                throw ContractViolation("partition: components must be "
                    "disjoint subsets of the vertices");
            }
            p.component_of_[v] = c;
        }
    }
    if (std::find(p.component_of_.begin(), p.component_of_.end(), unassigned)
        != p.component_of_.end()) {
        throw ContractViolation("partition: components must cover all vertices");
    }
    p.components_ = std::move(components);
    return p;
}

Partition Partition::single(std::size_t vertex_count)
{
    if (vertex_count == 0) { return Partition(); }
    std::vector<index_t> all(vertex_count);
    std::iota(all.begin(), all.end(), index_t{0});
    return from_components(vertex_count, {std::move(all)});
}

Partition Partition::singletons(std::size_t vertex_count)
{
    std::vector<index_t> labels(vertex_count);
    std::iota(labels.begin(), labels.end(), index_t{0});
    return from_labels(labels);
}

bool Partition::is_valid(const WeightedGraph& graph) const
{
    if (component_of_.size() != graph.vertex_count()) { return false; }
    std::vector<char> seen(graph.vertex_count(), 0);
    for (std::size_t c = 0; c < components_.size(); c++) {
        if (components_[c].empty()) { return false; }
        for (index_t v : components_[c]) {
            if (v >= graph.vertex_count() || seen[v] || component_of_[v] != c) {
                return false;
            }
            seen[v] = 1;
        }
        auto parts = connected_components(graph, components_[c],
            [](index_t, index_t) { return true; });
        if (parts.size() != 1) { return false; }
    }
    return std::all_of(seen.begin(), seen.end(), [](char s) { return s != 0; });
}

std::vector<double> ReducedGraph::weighted_degrees() const
{
    std::vector<double> deg(partition.size(), 0.0);
    for (const ReducedEdge& e : edges) {
        deg[e.a] += e.omega;
        deg[e.b] += e.omega;
    }
    return deg;
}

ReducedGraph build_reduced_graph(const WeightedGraph& graph,
    const Partition& partition)
{
    std::map<std::pair<index_t, index_t>, double> weights;
    for (const Edge& e : graph.edges()) {
        index_t a = partition.component_of(e.u);
        index_t b = partition.component_of(e.v);
        if (a == b) { continue; }
        weights[{std::min(a, b), std::max(a, b)}] += e.w;
    }
    ReducedGraph reduced{partition, {}};
    reduced.edges.reserve(weights.size());
    for (const auto& [key, w] : weights) {
        reduced.edges.push_back({key.first, key.second, w});
    }
    return reduced;
}

namespace {

bool linf_close(std::span<const double> d, std::size_t dim, index_t u,
    index_t v, double eps)
{
    for (std::size_t k = 0; k < dim; k++) {
        if (!(std::abs(d[u * dim + k] - d[v * dim + k]) <= eps)) { return false; }
    }
    return true;
}

} // namespace

Partition refine_partition(const WeightedGraph& graph, const Partition& partition,
    std::span<const double> d, std::size_t dim, double eps)
{
    if (d.size() != graph.vertex_count() * dim) {
        throw ContractViolation("refine_partition: direction size mismatch");
    }
    std::vector<index_t> all(graph.vertex_count());
    std::iota(all.begin(), all.end(), index_t{0});
    auto same = [&](index_t u, index_t v) {
        return partition.component_of(u) == partition.component_of(v)
            && linf_close(d, dim, u, v, eps);
    };
    return Partition::from_components(graph.vertex_count(),
        connected_components(graph, all, same));
}

namespace {

struct UnionFind {
    std::vector<index_t> parent;
    explicit UnionFind(std::size_t n) : parent(n)
    { std::iota(parent.begin(), parent.end(), index_t{0}); }
    index_t find(index_t i)
    {
        while (parent[i] != i) { i = parent[i] = parent[parent[i]]; }
        return i;
    }
    bool unite(index_t a, index_t b)
    {
        a = find(a); b = find(b);
        if (a == b) { return false; }
        if (b < a) { std::swap(a, b); }
        parent[b] = a;
        return true;
    }
};

} // namespace

std::pair<Partition, std::vector<double>> merge_close_components(
    const WeightedGraph& graph, const Partition& partition,
    std::span<const double> values, std::size_t dim, double merge_eps)
{
    if (values.size() != partition.size() * dim) {
        throw ContractViolation("merge_close_components: values size mismatch");
    }
    Partition current = partition;
    std::vector<double> current_values(values.begin(), values.end());

    /* one pass merges along reduced edges within threshold; averaging can
     * bring new neighbors within threshold, hence the fixed point */
    while (true) {
        ReducedGraph reduced = build_reduced_graph(graph, current);
        UnionFind uf(current.size());
        bool merged = false;
        for (const ReducedEdge& e : reduced.edges) {
            if (linf_close(current_values, dim, e.a, e.b, merge_eps)) {
                merged |= uf.unite(e.a, e.b);
            }
        }
        if (!merged) { break; }

        std::vector<index_t> comp_labels(current.size());
        for (index_t c = 0; c < current.size(); c++) { comp_labels[c] = uf.find(c); }
        std::vector<index_t> vertex_labels(graph.vertex_count());
        for (index_t v = 0; v < graph.vertex_count(); v++) {
            vertex_labels[v] = comp_labels[current.component_of(v)];
        }
        Partition next = Partition::from_labels(vertex_labels);

        std::vector<double> sums(next.size() * dim, 0.0);
        std::vector<double> sizes(next.size(), 0.0);
        for (index_t c = 0; c < current.size(); c++) {
            index_t nc = next.component_of(current.component(c).front());
            double sz = static_cast<double>(current.component(c).size());
            sizes[nc] += sz;
            for (std::size_t k = 0; k < dim; k++) {
                sums[nc * dim + k] += sz * current_values[c * dim + k];
            }
        }
        for (index_t nc = 0; nc < next.size(); nc++) {
            for (std::size_t k = 0; k < dim; k++) { sums[nc * dim + k] /= sizes[nc]; }
        }
        /* unmerged components keep their exact value */
        for (index_t c = 0; c < current.size(); c++) {
            index_t nc = next.component_of(current.component(c).front());
            if (next.component(nc).size() == current.component(c).size()) {
                for (std::size_t k = 0; k < dim; k++) {
                    sums[nc * dim + k] = current_values[c * dim + k];
                }
            }
        }
        current = std::move(next);
        current_values = std::move(sums);
    }
    return {std::move(current), std::move(current_values)};
}

} // namespace cutpursuit
