#include <algorithm>
#include <cmath>
#include <deque>

#include "cutpursuit/errors.hpp"
#include "cutpursuit/io.hpp"

namespace cutpursuit::io {

namespace {

std::vector<Edge> grid_edges(std::size_t rows, std::size_t cols, double w)
{
    std::vector<Edge> edges;
    for (std::size_t r = 0; r < rows; r++) {
        for (std::size_t c = 0; c < cols; c++) {
            const auto v = static_cast<index_t>(r * cols + c);
            if (c + 1 < cols) { edges.push_back({v, v + 1, w}); }
            if (r + 1 < rows) { edges.push_back({v, static_cast<index_t>(v + cols), w}); }
        }
    }
    return edges;
}

ProblemData fused1d(const GeneratorSpec& g, Rng& rng)
{
    ProblemData d;
    d.vertex_count = g.size;
    for (std::size_t v = 0; v + 1 < g.size; v++) {
        d.edges.push_back({static_cast<index_t>(v), static_cast<index_t>(v + 1), g.tv});
    }
    d.y.resize(g.size);
    for (std::size_t v = 0; v < g.size; v++) {
        d.y[v] = (v < g.size / 2 ? 0.0 : 5.0) + (g.noise > 0.0 ? g.noise * rng.normal() : 0.0);
    }
    d.nonsmooth = {{"zero"}};
    return d;
}

ProblemData fused2d(const GeneratorSpec& g, Rng& rng)
{
    ProblemData d;
    d.vertex_count = g.rows * g.cols;
    d.edges = grid_edges(g.rows, g.cols, g.tv);
    d.y.resize(d.vertex_count);
    for (std::size_t r = 0; r < g.rows; r++) {
        for (std::size_t c = 0; c < g.cols; c++) {
            const bool inside = 4 * r >= g.rows && 4 * r < 3 * g.rows
                && 4 * c >= g.cols && 4 * c < 3 * g.cols;
            d.y[r * g.cols + c] = (inside ? 5.0 : 0.0)
                + (g.noise > 0.0 ? g.noise * rng.normal() : 0.0);
        }
    }
    d.nonsmooth = {{"zero"}};
    return d;
}

/* two blobs grown breadth-first from random centers, constant positive
 * amplitude on each */
std::vector<double> sparse_blobs(const GeneratorSpec& g, const std::vector<Edge>& edges,
    std::size_t n, Rng& rng)
{
    std::vector<std::vector<index_t>> adj(n);
    for (const Edge& e : edges) {
        adj[e.u].push_back(e.v);
        adj[e.v].push_back(e.u);
    }
    const std::size_t active = std::max<std::size_t>(1,
        static_cast<std::size_t>(std::lround(g.sparsity * static_cast<double>(n))));
    const std::size_t blobs = active >= 2 ? 2 : 1;
    std::vector<double> x(n, 0.0);
    std::size_t placed = 0;
    for (std::size_t b = 0; b < blobs; b++) {
        const std::size_t target = b + 1 == blobs ? active - placed : active / blobs;
        const double amplitude = rng.uniform(1.0, 3.0);
        std::size_t center = rng.index(n);
        for (std::size_t tries = 0; x[center] != 0.0 && tries < n; tries++) {
            center = (center + 1) % n;
        }
        std::deque<index_t> queue{static_cast<index_t>(center)};
        std::vector<char> seen(n, 0);
        seen[center] = 1;
        std::size_t grown = 0;
        while (!queue.empty() && grown < target) {
            const index_t v = queue.front();
            queue.pop_front();
            if (x[v] == 0.0) {
                x[v] = amplitude;
                grown++;
            }
            for (index_t u : adj[v]) {
                if (!seen[u]) {
                    seen[u] = 1;
                    queue.push_back(u);
                }
            }
        }
        placed += grown;
    }
    return x;
}

ProblemData eeg_like(const GeneratorSpec& g, Rng& rng)
{
    ProblemData d;
    const std::size_t n = g.rows * g.cols;
    const std::size_t m = g.observations;
    d.vertex_count = n;
    d.edges = grid_edges(g.rows, g.cols, g.tv);
    d.op = ProblemData::Operator::dense;
    d.rows = m;
    d.phi.resize(m * n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    for (double& t : d.phi) { t = scale * rng.normal(); }
    const std::vector<double> truth = sparse_blobs(g, d.edges, n, rng);
    d.y.assign(m, 0.0);
    for (std::size_t i = 0; i < m; i++) {
        double s = 0.0;
        for (std::size_t v = 0; v < n; v++) { s += d.phi[i * n + v] * truth[v]; }
        d.y[i] = s + (g.noise > 0.0 ? g.noise * rng.normal() : 0.0);
    }
    d.nonsmooth = {{"weighted_abs_nonneg", g.l1}};
    d.truth = truth;
    return d;
}

/* left and right halves dominated by labels 0 and 1 */
ProblemData multilabel_grid(const GeneratorSpec& g, Rng& rng)
{
    ProblemData d;
    const std::size_t n = g.rows * g.cols;
    const std::size_t K = g.classes;
    d.vertex_count = n;
    d.edges = grid_edges(g.rows, g.cols, g.tv);
    MultidimData md;
    md.K = K;
    md.beta = g.beta;
    md.q.resize(n * K);
    std::vector<double> truth(n);
    const double high = 0.6;
    const double low = K > 1 ? (1.0 - high) / static_cast<double>(K - 1) : 0.0;
    for (std::size_t r = 0; r < g.rows; r++) {
        for (std::size_t c = 0; c < g.cols; c++) {
            const std::size_t v = r * g.cols + c;
            const std::size_t label = 2 * c < g.cols || K == 1 ? 0 : 1;
            truth[v] = static_cast<double>(label);
            double sum = 0.0;
            for (std::size_t k = 0; k < K; k++) {
                double t = (k == label ? high : low) + g.noise * rng.uniform();
                if (K == 1) { t = 1.0; }
                md.q[v * K + k] = t;
                sum += t;
            }
            for (std::size_t k = 0; k < K; k++) { md.q[v * K + k] /= sum; }
        }
    }
    d.multidim = std::move(md);
    d.nonsmooth = {{"simplex"}};
    d.truth = truth;
    return d;
}

} // namespace

void GeneratorSpec::check() const
{
    auto fail = [](const std::string& what) { throw InputError("generator: " + what); };
    if (kind == "fused1d") {
        if (size < 1) { fail("size must be at least 1"); }
    } else if (kind == "fused2d" || kind == "eeg_like" || kind == "multilabel_grid") {
        if (rows < 1 || cols < 1) { fail("rows and cols must be at least 1"); }
    } else {
        fail("unknown kind '" + kind + "' (fused1d, fused2d, eeg_like, multilabel_grid)");
    }
    if (kind == "eeg_like") {
        if (observations < 1) { fail("observations must be at least 1"); }
        if (!(sparsity > 0.0 && sparsity <= 1.0)) { fail("sparsity must lie in ]0, 1]"); }
        if (!(l1 >= 0.0)) { fail("l1 must be nonnegative"); }
    }
    if (kind == "multilabel_grid") {
        if (classes < 2) { fail("classes must be at least 2"); }
        if (!(beta > 0.0 && beta < 1.0)) { fail("beta must lie in ]0, 1["); }
    }
    if (!(noise >= 0.0) || !std::isfinite(noise)) { fail("noise must be nonnegative"); }
    if (!(tv > 0.0) || !std::isfinite(tv)) { fail("tv must be positive"); }
}

GeneratorSpec default_generator(const std::string& kind)
{
    GeneratorSpec g;
    g.kind = kind;
    g.seed = 1;
    if (kind == "fused1d") {
        g.size = 6;
        g.noise = 0.0;
        g.tv = 1.0;
    } else if (kind == "fused2d") {
        g.rows = 16;
        g.cols = 16;
        g.noise = 0.5;
        g.tv = 1.0;
    } else if (kind == "eeg_like") {
        g.rows = 10;
        g.cols = 20;
        g.observations = 20;
        g.sparsity = 0.05;
        g.noise = 0.01;
        g.tv = 0.1;
        g.l1 = 0.05;
    } else if (kind == "multilabel_grid") {
        g.rows = 8;
        g.cols = 8;
        g.classes = 3;
        g.noise = 0.1;
        g.tv = 0.1;
        g.beta = 0.1;
    }
    return g;
}

ProblemData generate(const GeneratorSpec& spec)
{
    spec.check();
    Rng rng(spec.seed);
    if (spec.kind == "fused1d") { return fused1d(spec, rng); }
    if (spec.kind == "fused2d") { return fused2d(spec, rng); }
    if (spec.kind == "eeg_like") { return eeg_like(spec, rng); }
    return multilabel_grid(spec, rng);
}

} // namespace cutpursuit::io
