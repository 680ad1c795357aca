/* random and canonical problem instances shared by the test binaries */
#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <random>
#include <vector>

#include "cutpursuit/functional.hpp"
#include "cutpursuit/maxflow.hpp"

namespace cptest {

using namespace cutpursuit;

inline double uniform(std::mt19937_64& rng, double a, double b)
{
    return std::uniform_real_distribution<double>(a, b)(rng);
}

inline bool coin(std::mt19937_64& rng, double p)
{
    return std::bernoulli_distribution(p)(rng);
}

/* with shared_domain, every domain contains 0 */
inline TermPtr random_term(std::mt19937_64& rng, bool shared_domain = false)
{
    switch (std::uniform_int_distribution<int>(0, 4)(rng)) {
    case 0: return zero_term();
    case 1: return weighted_abs(uniform(rng, 0.1, 2.0));
    case 2: return nonneg_indicator();
    case 3: return weighted_abs_nonneg(uniform(rng, 0.1, 2.0));
    default: {
        if (shared_domain) {
            return box_indicator(uniform(rng, -2.0, -0.1), uniform(rng, 0.1, 2.0));
        }
        const double a = uniform(rng, -2.0, 0.5);
        return box_indicator(a, a + uniform(rng, 0.5, 3.0));
    }
    }
}

inline WeightedGraph random_graph(std::mt19937_64& rng, std::size_t n, double p)
{
    std::vector<Edge> edges;
    for (std::size_t u = 0; u < n; u++) {
        for (std::size_t v = u + 1; v < n; v++) {
            if (coin(rng, p)) {
                edges.push_back({static_cast<index_t>(u), static_cast<index_t>(v),
                    uniform(rng, 0.1, 2.0)});
            }
        }
    }
    return WeightedGraph(n, std::move(edges));
}

struct Instance {
    ProblemSpec spec;
    std::vector<double> x;
};

/* quadratic fidelity (identity or dense), mixed built-in terms, and a point
 * in the domain that sits on kinks and on neighbor values with nonzero
 * probability */
inline Instance random_instance(std::mt19937_64& rng, std::size_t n,
    bool shared_domain = false)
{
    Instance inst;
    inst.spec.graph = random_graph(rng, n, 0.35);
    std::vector<double> y(n);
    for (double& t : y) { t = uniform(rng, -3.0, 3.0); }
    if (coin(rng, 0.5)) {
        inst.spec.smooth = std::make_shared<QuadraticFidelity>(
            QuadraticFidelity::identity(y));
    } else {
        const std::size_t rows = n;
        std::vector<double> phi(rows * n);
        for (double& t : phi) { t = uniform(rng, -1.0, 1.0); }
        inst.spec.smooth = std::make_shared<QuadraticFidelity>(
            QuadraticFidelity::dense(y, phi, n));
    }
    for (std::size_t v = 0; v < n; v++) { inst.spec.nonsmooth.push_back(random_term(rng, shared_domain)); }

    inst.x.assign(n, 0.0);
    for (std::size_t v = 0; v < n; v++) {
        const NonsmoothTerm& g = *inst.spec.nonsmooth[v];
        const Interval dom = g.domain();
        const auto kinks = g.kinks();
        double t = 0.0;
        if (!kinks.empty() && coin(rng, 0.4)) {
            t = kinks[std::uniform_int_distribution<std::size_t>(0, kinks.size() - 1)(rng)];
        } else {
            const double lo = std::isfinite(dom.lo) ? dom.lo : -3.0;
            const double hi = std::isfinite(dom.hi) ? dom.hi : lo + 6.0;
            t = uniform(rng, lo, hi);
            for (const auto& inc : inst.spec.graph.neighbors(static_cast<index_t>(v))) {
                if (inc.neighbor < v && dom.contains(inst.x[inc.neighbor])
                    && coin(rng, 0.4)) {
                    t = inst.x[inc.neighbor];
                    break;
                }
            }
        }
        inst.x[v] = t;
    }
    return inst;
}

inline WeightedGraph chain(std::size_t n, double w)
{
    std::vector<Edge> edges;
    for (std::size_t v = 0; v + 1 < n; v++) {
        edges.push_back({static_cast<index_t>(v), static_cast<index_t>(v + 1), w});
    }
    return WeightedGraph(n, std::move(edges));
}

/* y = (0,0,0,5,5,5) on a unit chain, identity fidelity, no nonsmooth term */
inline ProblemSpec fused6()
{
    ProblemSpec spec;
    spec.graph = chain(6, 1.0);
    spec.smooth = std::make_shared<QuadraticFidelity>(
        QuadraticFidelity::identity({0, 0, 0, 5, 5, 5}));
    spec.nonsmooth.assign(6, zero_term());
    return spec;
}

/* two vertices, unit edge, y = (10, 10) */
inline ProblemSpec pull_example()
{
    ProblemSpec spec;
    spec.graph = chain(2, 1.0);
    spec.smooth = std::make_shared<QuadraticFidelity>(
        QuadraticFidelity::identity({10, 10}));
    spec.nonsmooth.assign(2, zero_term());
    return spec;
}

/* minimum over all s-t cuts by enumeration of the inner nodes' sides */
inline double brute_force_min_cut(const FlowNetwork& net)
{
    std::vector<index_t> inner;
    for (index_t v = 0; v < net.node_count(); v++) {
        if (v != net.source() && v != net.sink()) { inner.push_back(v); }
    }
    double best = kInf;
    std::vector<char> side(net.node_count(), 0);
    side[net.source()] = 1;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << inner.size()); mask++) {
        for (std::size_t i = 0; i < inner.size(); i++) { side[inner[i]] = (mask >> i) & 1; }
        best = std::min(best, net.cut_value(side));
    }
    return best;
}

} // namespace cptest
