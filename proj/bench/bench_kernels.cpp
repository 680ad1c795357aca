/* serial reference against OpenMP kernels; the benchmark argument selects
 * the path (0 serial, 1 parallel) */
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "cutpursuit/direction.hpp"
#include "cutpursuit/driver.hpp"
#include "cutpursuit/io.hpp"
#include "cutpursuit/kernels.hpp"
#include "cutpursuit/reduced.hpp"

using namespace cutpursuit;
using kernels::Exec;

namespace {

Exec exec_of(const benchmark::State& state)
{
    return state.range(0) == 0 ? Exec::serial : Exec::parallel;
}

std::vector<double> random_vector(std::size_t n, std::uint64_t seed)
{
    io::Rng rng(seed);
    std::vector<double> v(n);
    for (double& t : v) { t = rng.uniform(-1.0, 1.0); }
    return v;
}

/* grid graph with components of 4 x 4 blocks */
struct GridFixture {
    std::size_t side;
    WeightedGraph graph;
    Partition partition;
    ReducedGraph reduced;

    explicit GridFixture(std::size_t s) : side(s)
    {
        std::vector<Edge> edges;
        std::vector<index_t> labels(s * s);
        for (std::size_t r = 0; r < s; r++) {
            for (std::size_t c = 0; c < s; c++) {
                const auto v = static_cast<index_t>(r * s + c);
                if (c + 1 < s) { edges.push_back({v, v + 1, 1.0}); }
                if (r + 1 < s) { edges.push_back({v, static_cast<index_t>(v + s), 1.0}); }
                labels[v] = static_cast<index_t>((r / 4) * s + c / 4);
            }
        }
        graph = WeightedGraph(s * s, std::move(edges));
        partition = Partition::from_labels(labels);
        reduced = build_reduced_graph(graph, partition);
    }
};

const GridFixture& grid()
{
    static const GridFixture fixture(512);
    return fixture;
}

void BM_gemv(benchmark::State& state)
{
    const std::size_t rows = 256, cols = 8192;
    const auto a = random_vector(rows * cols, 1);
    const auto x = random_vector(cols, 2);
    std::vector<double> y(rows);
    for (auto _ : state) {
        kernels::gemv(exec_of(state), a, rows, cols, x, y);
        benchmark::DoNotOptimize(y.data());
    }
}

void BM_gemv_t(benchmark::State& state)
{
    const std::size_t rows = 256, cols = 8192;
    const auto a = random_vector(rows * cols, 1);
    const auto x = random_vector(rows, 2);
    std::vector<double> y(cols);
    for (auto _ : state) {
        kernels::gemv_t(exec_of(state), a, rows, cols, x, y);
        benchmark::DoNotOptimize(y.data());
    }
}

void BM_component_sums(benchmark::State& state)
{
    const auto& g = grid();
    const auto v = random_vector(g.graph.vertex_count(), 3);
    std::vector<double> out(g.partition.size());
    for (auto _ : state) {
        kernels::component_sums(exec_of(state), g.partition, v, 1, out);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_lift(benchmark::State& state)
{
    const auto& g = grid();
    const auto xi = random_vector(g.partition.size(), 4);
    std::vector<double> out(g.graph.vertex_count());
    for (auto _ : state) {
        kernels::lift(exec_of(state), g.partition, xi, 1, out);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_splitting_step(benchmark::State& state)
{
    const auto& g = grid();
    const std::size_t nc = g.partition.size();
    const auto& edges = g.reduced.edges;
    const auto inc = kernels::Incidence::build(nc, edges);
    const auto xi = random_vector(nc, 5);
    const auto grad = random_vector(nc, 6);
    std::vector<double> dual = random_vector(edges.size(), 7);
    const std::vector<double> tau(nc, 0.1), sigma(edges.size(), 0.5);
    std::vector<double> next(nc);
    for (auto _ : state) {
        kernels::primal_forward(exec_of(state), inc, edges, dual, xi, grad, tau, 1, next);
        kernels::dual_ascent(exec_of(state), edges, sigma, next, xi, 1, dual);
        benchmark::DoNotOptimize(dual.data());
    }
}

void BM_ternary_direction(benchmark::State& state)
{
    const auto& g = grid();
    const std::size_t n = g.graph.vertex_count();
    ProblemSpec spec;
    spec.graph = g.graph;
    spec.smooth = std::make_shared<QuadraticFidelity>(QuadraticFidelity::identity(random_vector(n, 8)));
    spec.nonsmooth.assign(n, weighted_abs(0.2));
    std::vector<double> x(n);
    for (std::size_t v = 0; v < n; v++) { x[v] = static_cast<double>(g.partition.component_of(static_cast<index_t>(v)) % 5); }
    for (auto _ : state) {
        auto d = steepest_ternary_direction(spec, x, 1e-12, exec_of(state));
        benchmark::DoNotOptimize(d.d.data());
    }
}

void BM_cut_pursuit_fused2d(benchmark::State& state)
{
    auto gen = io::default_generator("fused2d");
    gen.rows = 128;
    gen.cols = 128;
    const ProblemSpec spec = io::generate(gen).to_spec();
    SolveOptions o;
    o.exec = exec_of(state);
    o.tol_x = 1e-4;
    for (auto _ : state) {
        auto sol = cut_pursuit(spec, o);
        benchmark::DoNotOptimize(sol.x.data());
    }
}

} // namespace

BENCHMARK(BM_gemv)->Arg(0)->Arg(1);
BENCHMARK(BM_gemv_t)->Arg(0)->Arg(1);
BENCHMARK(BM_component_sums)->Arg(0)->Arg(1);
BENCHMARK(BM_lift)->Arg(0)->Arg(1);
BENCHMARK(BM_splitting_step)->Arg(0)->Arg(1);
BENCHMARK(BM_ternary_direction)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_cut_pursuit_fused2d)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
