#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "cutpursuit/direction.hpp"
#include "cutpursuit/errors.hpp"
#include "cutpursuit/reduced.hpp"
#include "instances.hpp"

using namespace cutpursuit;

namespace {

SplittingOptions tight(double tol = 1e-12, std::size_t max_iter = 200000)
{
    SplittingOptions o;
    o.tol = tol;
    o.max_iter = max_iter;
    return o;
}

double soft(double t, double thr) { return t > thr ? t - thr : (t < -thr ? t + thr : 0.0); }

} // namespace

TEST_CASE("lift")
{
    const Partition single = Partition::single(3);
    CHECK(lift(single, std::vector<double>{2.5}) == std::vector<double>{2.5, 2.5, 2.5});
    const Partition sing = Partition::singletons(3);
    CHECK(lift(sing, std::vector<double>{1, 2, 3}) == std::vector<double>{1, 2, 3});
    const Partition p = Partition::from_components(3, {{0, 1}, {2}});
    CHECK(lift(p, std::vector<double>{4, 7}) == std::vector<double>{4, 4, 7});
    CHECK_THROWS_AS(lift(p, std::vector<double>{1}), ContractViolation);
}

TEST_CASE("reduced objective")
{
    const ProblemSpec spec = cptest::fused6();
    const Partition p = Partition::from_components(6, {{0, 1, 2}, {3, 4, 5}});
    const double a = 1.0 / 3, b = 14.0 / 3;
    const double f = reduced_objective(spec, p, std::vector<double>{a, b}).value();
    /* 3/2 a^2 + 3/2 (5 - b)^2 + (b - a) */
    CHECK(f == doctest::Approx(1.5 * a * a + 1.5 * (5 - b) * (5 - b) + (b - a)).epsilon(1e-14));
    CHECK(f == doctest::Approx(14.0 / 3).epsilon(1e-14));

    /* constant values: TV vanishes */
    const double fc = reduced_objective(spec, Partition::single(6), std::vector<double>{1.0}).value();
    CHECK(fc == doctest::Approx(0.5 * (3 * 1.0 + 3 * 16.0)));

    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 50; trial++) {
        const std::size_t n = 8;
        const auto inst = cptest::random_instance(rng, n);
        std::vector<index_t> labels(n);
        for (auto& l : labels) { l = std::uniform_int_distribution<index_t>(0, 2)(rng); }
        const Partition raw = Partition::from_labels(labels);
        const Partition part = refine_partition(inst.spec.graph, raw,
            std::vector<double>(n, 0.0), 1, 0.0);
        std::vector<double> xi(part.size());
        for (auto& t : xi) { t = cptest::uniform(rng, 0.0, 1.0); }
        CHECK(reduced_objective(inst.spec, part, xi) == objective(inst.spec, lift(part, xi)));

        const ReducedGraph rg = build_reduced_graph(inst.spec.graph, part);
        double tv = 0.0;
        for (const auto& e : rg.edges) { tv += e.omega * std::abs(xi[e.a] - xi[e.b]); }
        CHECK(tv == doctest::Approx(total_variation(inst.spec.graph, lift(part, xi))).epsilon(1e-12));
    }
}

TEST_CASE("solve reduced closed forms")
{
    SUBCASE("single component with weighted abs")
    {
        const std::vector<double> y{1.0, 3.0, 2.0, 4.0};
        ProblemSpec spec;
        spec.graph = cptest::chain(4, 1.0);
        spec.smooth = std::make_shared<QuadraticFidelity>(QuadraticFidelity::identity(y));
        const double lambda = 0.8;
        spec.nonsmooth.assign(4, weighted_abs(lambda));
        const auto res = solve_reduced(spec, Partition::single(4), std::vector<double>{0.0}, tight());
        CHECK(res.converged);
        /* 4/2 (xi - mean)^2 + 4 lambda |xi| */
        CHECK(res.xi[0] == doctest::Approx(soft(2.5, lambda)).epsilon(1e-10));
    }
    SUBCASE("least squares mean")
    {
        ProblemSpec spec;
        spec.graph = WeightedGraph(3, {});
        spec.smooth = std::make_shared<QuadraticFidelity>(QuadraticFidelity::identity({1, 2, 6}));
        spec.nonsmooth.assign(3, zero_term());
        const auto res = solve_reduced(spec, Partition::single(3), std::vector<double>{0.0}, tight());
        CHECK(res.xi[0] == doctest::Approx(3.0).epsilon(1e-10));
    }
    SUBCASE("fused-6 two pieces")
    {
        const ProblemSpec spec = cptest::fused6();
        const Partition p = Partition::from_components(6, {{0, 1, 2}, {3, 4, 5}});
        const auto res = solve_reduced(spec, p, std::vector<double>{0.0, 0.0}, tight());
        CHECK(res.xi[0] == doctest::Approx(1.0 / 3).epsilon(1e-6));
        CHECK(res.xi[1] == doctest::Approx(14.0 / 3).epsilon(1e-6));
    }
    SUBCASE("start projected onto the domain")
    {
        ProblemSpec spec;
        spec.graph = cptest::chain(2, 1.0);
        spec.smooth = std::make_shared<QuadraticFidelity>(QuadraticFidelity::identity({-1, -2}));
        spec.nonsmooth.assign(2, nonneg_indicator());
        const auto res = solve_reduced(spec, Partition::single(2), std::vector<double>{-5.0}, tight());
        CHECK(res.xi[0] == 0.0);
    }
}

TEST_CASE("feasible start")
{
    ProblemSpec spec;
    spec.graph = cptest::chain(2, 1.0);
    spec.smooth = std::make_shared<ZeroSmooth>(2);
    spec.nonsmooth = {box_indicator(1.0, 2.0), box_indicator(-3.0, -1.0)};
    CHECK_THROWS_AS(feasible_start(spec, Partition::single(2)), InfeasibleProblem);
    CHECK(feasible_start(spec, Partition::singletons(2)) == std::vector<double>{1.0, -1.0});
}

TEST_CASE("baseline")
{
    SUBCASE("fused-6")
    {
        BaselineOptions o;
        o.tol = 1e-12;
        const auto res = baseline_solve(cptest::fused6(), o);
        const std::vector<double> expected{1.0 / 3, 1.0 / 3, 1.0 / 3, 14.0 / 3, 14.0 / 3, 14.0 / 3};
        for (std::size_t v = 0; v < 6; v++) {
            CHECK(res.x[v] == doctest::Approx(expected[v]).epsilon(1e-7));
        }
        CHECK(res.trace.records.back().components == 2);
        CHECK(res.trace.stop == StopReason::evolution);
    }
    SUBCASE("pure quadratic")
    {
        ProblemSpec spec;
        spec.graph = WeightedGraph(3, {});
        spec.smooth = std::make_shared<QuadraticFidelity>(QuadraticFidelity::identity({1, -2, 3}));
        spec.nonsmooth.assign(3, zero_term());
        const auto res = baseline_solve(spec);
        CHECK(res.x[0] == doctest::Approx(1.0));
        CHECK(res.x[1] == doctest::Approx(-2.0));
        CHECK(res.x[2] == doctest::Approx(3.0));
    }
    SUBCASE("stationary on random convex instances")
    {
        std::mt19937_64 rng(8);
        for (int trial = 0; trial < 20; trial++) {
            const auto inst = cptest::random_instance(rng, 7);
            BaselineOptions o;
            o.tol = 1e-13;
            o.checkpoint_every = 1000;
            const auto res = baseline_solve(inst.spec, o);
            const auto snapped = snap_nonsmooth(inst.spec, res.x, 1e-7);
            const auto dir = steepest_ternary_direction(inst.spec, snapped, 1e-7);
            CHECK(dir.value.value() >= -1e-4);
            const double fb = objective(inst.spec, res.x).value();
            for (int k = 0; k < 20; k++) {
                std::vector<double> z(res.x);
                for (std::size_t v = 0; v < z.size(); v++) {
                    z[v] = inst.spec.nonsmooth[v]->domain().clamp(z[v] + cptest::uniform(rng, -0.1, 0.1));
                }
                CHECK(fb <= objective(inst.spec, z).value() + 1e-8);
            }
        }
    }
    SUBCASE("looser tolerance gives higher objective")
    {
        std::mt19937_64 rng(12);
        const auto inst = cptest::random_instance(rng, 10);
        BaselineOptions loose, strict;
        loose.tol = 1e-4;
        strict.tol = 1e-8;
        const double fl = objective(inst.spec, baseline_solve(inst.spec, loose).x).value();
        const double fs = objective(inst.spec, baseline_solve(inst.spec, strict).x).value();
        CHECK(fs <= fl + 1e-12);
    }
    SUBCASE("target objective stops early")
    {
        BaselineOptions o;
        o.tol = 1e-14;
        o.checkpoint_every = 1;
        o.target_objective = 5.0 + 1e-3;
        const auto res = baseline_solve(cptest::fused6(), o);
        CHECK(res.trace.stop == StopReason::target_objective);
        CHECK(res.trace.records.back().objective <= 5.0 + 1e-3);
    }
}

TEST_CASE("serial and parallel reduced solves agree")
{
    kernels::set_threads(4);
    std::mt19937_64 rng(21);
    const std::size_t n = 3000;
    ProblemSpec spec;
    spec.graph = cptest::chain(n, 0.5);
    std::vector<double> y(n);
    for (auto& t : y) { t = cptest::uniform(rng, -2, 2); }
    spec.smooth = std::make_shared<QuadraticFidelity>(QuadraticFidelity::identity(y));
    spec.nonsmooth.assign(n, weighted_abs(0.2));
    std::vector<index_t> labels(n);
    for (std::size_t v = 0; v < n; v++) { labels[v] = static_cast<index_t>(v / 3); }
    const Partition p = Partition::from_labels(labels);
    const std::vector<double> start(p.size(), 0.0);
    SplittingOptions serial = tight(1e-8, 500), parallel = tight(1e-8, 500);
    serial.exec = kernels::Exec::serial;
    const auto a = solve_reduced(spec, p, start, serial);
    const auto b = solve_reduced(spec, p, start, parallel);
    CHECK(a.iterations == b.iterations);
    double diff = 0.0;
    for (std::size_t c = 0; c < a.xi.size(); c++) { diff = std::max(diff, std::abs(a.xi[c] - b.xi[c])); }
    CHECK(diff <= 1e-12);
}
