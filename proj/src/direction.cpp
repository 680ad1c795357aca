#include "cutpursuit/direction.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

#include "cutpursuit/errors.hpp"

namespace cutpursuit {

ColumnCapacities column_capacities(const VertexDeltas& delta)
{
    const double dp = delta.plus.value();
    const double dm = delta.minus.value();
    const double m = std::max({0.0, dm, -dp});
    ColumnCapacities c{-dm + m, m, dp + m, m};
    if (!(c.source >= 0.0) || !(c.sink >= 0.0)) {
        throw ContractViolation("ternary network: negative capacity");
    }
    return c;
}

namespace {

/* two-stage network over one block; local_of maps a vertex to its rank in
 * the block */
FlowNetwork block_network(std::span<const index_t> block,
    std::span<const index_t> local_of, std::span<const VertexDeltas> deltas,
    const WeightedGraph& graph, std::span<const char> equal)
{
    const std::size_t n = block.size();
    const index_t s = static_cast<index_t>(2 * n);
    const index_t t = s + 1;
    FlowNetwork net(2 * n + 2, s, t);
    for (std::size_t i = 0; i < n; i++) {
        const index_t v1 = static_cast<index_t>(2 * i), v2 = v1 + 1;
        const ColumnCapacities c = column_capacities(deltas[block[i]]);
        if (c.source > 0.0) { net.add_arc(s, v1, c.source); }
        if (c.middle > 0.0) { net.add_arc(v1, v2, c.middle); }
        if (c.sink > 0.0) { net.add_arc(v2, t, c.sink); }
        for (const auto& inc : graph.neighbors(block[i])) {
            if (!equal[inc.edge] || inc.neighbor < block[i]) { continue; }
            const index_t j = local_of[inc.neighbor];
            const double w = graph.edge(inc.edge).w;
            net.add_arc(v1, static_cast<index_t>(2 * j), w, w);
            net.add_arc(v2, static_cast<index_t>(2 * j + 1), w, w);
        }
    }
    return net;
}

/* minimum cut of one block, decoded into d */
void solve_two_stage(std::span<const index_t> block,
    std::span<const index_t> local_of, std::span<const VertexDeltas> deltas,
    const WeightedGraph& graph, std::span<const char> equal, std::span<double> d)
{
    const FlowNetwork net = block_network(block, local_of, deltas, graph, equal);
    MinCut cut = max_flow_min_cut(net);
    bool switched = false;
    for (std::size_t i = 0; i < block.size(); i++) {
        if (!cut.source_side[2 * i] && cut.source_side[2 * i + 1]) {
            cut.source_side[2 * i] = 1;
            switched = true;
        }
    }
    if (switched) {
        const double after = net.cut_value(cut.source_side);
        if (after > cut.value + 1e-9 * (1.0 + std::abs(cut.value))) {
            throw ContractViolation("ternary cut: TS switch increased the cut from "
                + std::to_string(cut.value) + " to " + std::to_string(after));
        }
    }
    const std::vector<double> local = decode_ternary_cut(cut.source_side, block.size());
    for (std::size_t i = 0; i < block.size(); i++) { d[block[i]] = local[i]; }
}

/* one single-stage cut: label 1 means d_v = sign, with unary cost
 * sign * delta^sign */
std::vector<char> solve_one_sided(std::span<const index_t> block,
    std::span<const index_t> local_of, std::span<const VertexDeltas> deltas,
    const WeightedGraph& graph, std::span<const char> equal, bool positive)
{
    BinaryEnergy energy(block.size());
    for (std::size_t i = 0; i < block.size(); i++) {
        const VertexDeltas& dl = deltas[block[i]];
        const double cost = positive ? dl.plus.value() : -dl.minus.value();
        energy.add_unary(static_cast<index_t>(i), 0.0, cost);
        for (const auto& inc : graph.neighbors(block[i])) {
            if (!equal[inc.edge] || inc.neighbor < block[i]) { continue; }
            const double w = graph.edge(inc.edge).w;
            energy.add_pairwise(static_cast<index_t>(i), local_of[inc.neighbor],
                0.0, w, w, 0.0);
        }
    }
    return energy.minimize();
}

void solve_two_cuts(std::span<const index_t> block,
    std::span<const index_t> local_of, std::span<const VertexDeltas> deltas,
    const WeightedGraph& graph, std::span<const char> equal, std::span<double> d)
{
    const auto up = solve_one_sided(block, local_of, deltas, graph, equal, true);
    const auto down = solve_one_sided(block, local_of, deltas, graph, equal, false);
    /* a vertex chosen by both cuts goes to 0; this cannot increase the sum of
     * the two cut values when delta+ >= delta-, otherwise fall back */
    for (std::size_t i = 0; i < block.size(); i++) {
        if (up[i] && down[i]) {
            const VertexDeltas& dl = deltas[block[i]];
            if (dl.plus < dl.minus) {
                solve_two_stage(block, local_of, deltas, graph, equal, d);
                return;
            }
        }
    }
    for (std::size_t i = 0; i < block.size(); i++) {
        d[block[i]] = (up[i] && !down[i]) ? 1.0 : ((down[i] && !up[i]) ? -1.0 : 0.0);
    }
}

/* closed form for an isolated vertex: argmin {0, delta+, -delta-}, 0 first */
double isolated_direction(const VertexDeltas& dl)
{
    const ExtendedReal up = dl.plus;
    const ExtendedReal down = -dl.minus;
    if (up < 0.0 && up <= down) { return 1.0; }
    if (down < 0.0) { return -1.0; }
    return 0.0;
}

} // namespace

FlowNetwork build_ternary_network(std::span<const VertexDeltas> deltas,
    const WeightedGraph& graph, std::span<const char> equal)
{
    const std::size_t n = deltas.size();
    std::vector<index_t> all(n);
    for (std::size_t v = 0; v < n; v++) { all[v] = static_cast<index_t>(v); }
    return block_network(all, all, deltas, graph, equal);
}

std::vector<double> decode_ternary_cut(std::span<const char> source_side,
    std::size_t vertex_count)
{
    std::vector<double> d(vertex_count);
    for (std::size_t v = 0; v < vertex_count; v++) {
        const bool s1 = source_side[2 * v] != 0;
        const bool s2 = source_side[2 * v + 1] != 0;
        d[v] = s2 ? 1.0 : (s1 ? 0.0 : -1.0);
    }
    return d;
}

std::vector<std::vector<index_t>> equality_blocks(const WeightedGraph& graph,
    std::span<const char> equal)
{
    const std::size_t n = graph.vertex_count();
    std::vector<char> seen(n, 0);
    std::vector<std::vector<index_t>> blocks;
    std::vector<index_t> stack;
    for (std::size_t r = 0; r < n; r++) {
        if (seen[r]) { continue; }
        std::vector<index_t> block;
        seen[r] = 1;
        stack.push_back(static_cast<index_t>(r));
        while (!stack.empty()) {
            const index_t v = stack.back();
            stack.pop_back();
            block.push_back(v);
            for (const auto& inc : graph.neighbors(v)) {
                if (equal[inc.edge] && !seen[inc.neighbor]) {
                    seen[inc.neighbor] = 1;
                    stack.push_back(inc.neighbor);
                }
            }
        }
        std::sort(block.begin(), block.end());
        blocks.push_back(std::move(block));
    }
    return blocks;
}

TernaryDirection ternary_direction_from_deltas(const WeightedGraph& graph,
    std::span<const VertexDeltas> deltas, std::span<const char> equal,
    DirectionMethod method, kernels::Exec exec)
{
    const std::size_t n = graph.vertex_count();
    TernaryDirection out;
    out.d.assign(n, 0.0);

    const auto blocks = equality_blocks(graph, equal);
    std::vector<index_t> local_of(n, 0);
    std::vector<std::size_t> large;
    std::size_t large_size = 0;
    for (std::size_t b = 0; b < blocks.size(); b++) {
        const auto& block = blocks[b];
        if (block.size() == 1) {
            out.d[block[0]] = isolated_direction(deltas[block[0]]);
            continue;
        }
        for (std::size_t i = 0; i < block.size(); i++) {
            local_of[block[i]] = static_cast<index_t>(i);
        }
        large.push_back(b);
        large_size += block.size();
    }

    auto solve = [&](std::size_t b) {
        if (method == DirectionMethod::two_stage) {
            solve_two_stage(blocks[b], local_of, deltas, graph, equal, out.d);
        } else {
            solve_two_cuts(blocks[b], local_of, deltas, graph, equal, out.d);
        }
    };
    const bool parallel = exec == kernels::Exec::parallel && large.size() > 1
        && large_size >= kernels::kParallelThreshold && kernels::max_threads() > 1;
    if (parallel) {
        std::exception_ptr error;
        const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(large.size());
        #pragma omp parallel for schedule(dynamic, 1)
        for (std::ptrdiff_t i = 0; i < count; i++) {
            try {
                solve(large[static_cast<std::size_t>(i)]);
            } catch (...) {
                #pragma omp critical
                if (!error) { error = std::current_exception(); }
            }
        }
        if (error) { std::rethrow_exception(error); }
    } else {
        for (std::size_t b : large) { solve(b); }
    }

    out.value = dir_deriv_from_deltas(graph, deltas, equal, out.d);
    return out;
}

TernaryDirection steepest_ternary_direction(const ProblemSpec& spec,
    std::span<const double> x, double eps_eq, kernels::Exec exec)
{
    const auto deltas = vertex_deltas(spec, x, eps_eq);
    const auto eq = equal_edges(spec.graph, x, eps_eq);
    return ternary_direction_from_deltas(spec.graph, deltas, eq,
        DirectionMethod::two_stage, exec);
}

TernaryDirection steepest_ternary_two_cuts(const ProblemSpec& spec,
    std::span<const double> x, double eps_eq, kernels::Exec exec)
{
    const auto deltas = vertex_deltas(spec, x, eps_eq);
    const auto eq = equal_edges(spec.graph, x, eps_eq);
    return ternary_direction_from_deltas(spec.graph, deltas, eq,
        DirectionMethod::two_cuts, exec);
}

TernaryDirection steepest_binary_direction(const ProblemSpec& spec,
    std::span<const double> x, double eps_eq)
{
    const auto deltas = vertex_deltas(spec, x, eps_eq);
    const auto eq = equal_edges(spec.graph, x, eps_eq);
    const std::size_t n = spec.vertex_count();

    BinaryEnergy energy(n);
    for (std::size_t v = 0; v < n; v++) {
        const double dp = deltas[v].plus.value(), dm = deltas[v].minus.value();
        if (!std::isfinite(dp) || !std::isfinite(dm)
            || std::abs(dp - dm) > 1e-9 * (1.0 + std::abs(dp))) {
            throw ContractViolation("binary direction: F is not differentiable "
                "along vertex " + std::to_string(v) + " (use the ternary direction)");
        }
        /* label 0: d = -1, label 1: d = +1 */
        energy.add_unary(static_cast<index_t>(v), -dm, dp);
    }
    for (std::size_t e = 0; e < spec.graph.edge_count(); e++) {
        if (!eq[e]) { continue; }
        const Edge& ed = spec.graph.edge(e);
        energy.add_pairwise(ed.u, ed.v, 0.0, 2.0 * ed.w, 2.0 * ed.w, 0.0);
    }
    const auto labels = energy.minimize();
    TernaryDirection out;
    out.d.resize(n);
    for (std::size_t v = 0; v < n; v++) { out.d[v] = labels[v] ? 1.0 : -1.0; }
    out.value = dir_deriv_from_deltas(spec.graph, deltas, eq, out.d);
    return out;
}

TernaryDirection exhaustive_direction_oracle(const ProblemSpec& spec,
    std::span<const double> x, std::span<const double> alphabet, double eps_eq)
{
    const std::size_t n = spec.vertex_count();
    const std::size_t k = alphabet.size();
    if (k == 0) { throw ContractViolation("exhaustive oracle: empty alphabet"); }
    double total = 1.0;
    for (std::size_t v = 0; v < n; v++) { total *= static_cast<double>(k); }
    if (total > 1e7) {
        throw ContractViolation("exhaustive oracle: more than 1e7 directions");
    }

    const auto deltas = vertex_deltas(spec, x, eps_eq);
    const auto eq = equal_edges(spec.graph, x, eps_eq);
    std::vector<std::size_t> digits(n, 0);
    std::vector<double> d(n, alphabet[0]);
    TernaryDirection best{d, dir_deriv_from_deltas(spec.graph, deltas, eq, d)};
    while (true) {
        std::size_t v = 0;
        while (v < n && digits[v] + 1 == k) {
            digits[v] = 0;
            d[v] = alphabet[0];
            v++;
        }
        if (v == n) { break; }
        digits[v]++;
        d[v] = alphabet[digits[v]];
        const ExtendedReal value = dir_deriv_from_deltas(spec.graph, deltas, eq, d);
        if (value < best.value) { best = {d, value}; }
    }
    return best;
}

bool is_sign_segregated(const WeightedGraph& graph, std::span<const double> d,
    double eps)
{
    auto sign = [](double t) { return (t > 0.0) - (t < 0.0); };
    for (const Edge& e : graph.edges()) {
        if (sign(d[e.u]) == sign(d[e.v]) && std::abs(d[e.u] - d[e.v]) > eps) {
            return false;
        }
    }
    return true;
}

} // namespace cutpursuit
