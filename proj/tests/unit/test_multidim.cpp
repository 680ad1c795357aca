#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "cutpursuit/errors.hpp"
#include "cutpursuit/io.hpp"
#include "cutpursuit/multidim.hpp"
#include "instances.hpp"

using namespace cutpursuit;

namespace {

/* f(p) = <c, p> */
class LinearSmooth final : public SmoothTerm {
public:
    LinearSmooth(std::vector<double> c, std::size_t dim) : c_(std::move(c)), dim_(dim) {}
    std::size_t vertex_count() const override { return c_.size() / dim_; }
    std::size_t dimension() const override { return dim_; }
    double value(std::span<const double> p) const override
    {
        return std::inner_product(c_.begin(), c_.end(), p.begin(), 0.0);
    }
    void gradient(std::span<const double>, std::span<double> grad) const override
    {
        std::copy(c_.begin(), c_.end(), grad.begin());
    }
    std::vector<double> curvature_bound(const Partition& partition) const override
    {
        return std::vector<double>(partition.size(), 0.0);
    }

private:
    std::vector<double> c_;
    std::size_t dim_;
};

std::vector<double> random_simplex_point(std::mt19937_64& rng, std::size_t dim)
{
    std::vector<double> p(dim);
    double s = 0.0;
    for (double& t : p) {
        t = cptest::coin(rng, 0.2) ? 0.0 : cptest::uniform(rng, 0.0, 1.0);
        s += t;
    }
    if (s == 0.0) {
        p[0] = 1.0;
        return p;
    }
    for (double& t : p) { t /= s; }
    return p;
}

/* random KL problem on a random graph, with a point where neighbors share
 * values with nonzero probability */
struct MultiInstance {
    MultiProblemSpec spec;
    std::vector<double> p;
};

MultiInstance random_multi(std::mt19937_64& rng, std::size_t n, std::size_t dim)
{
    MultiInstance inst;
    inst.spec.graph = cptest::random_graph(rng, n, 0.4);
    inst.spec.dim = dim;
    std::vector<double> q;
    for (std::size_t v = 0; v < n; v++) {
        const auto row = random_simplex_point(rng, dim);
        q.insert(q.end(), row.begin(), row.end());
    }
    inst.spec.smooth = std::make_shared<KLFidelity>(q, dim, 0.2);
    inst.spec.nonsmooth.assign(n, simplex_indicator());
    inst.p.resize(n * dim);
    for (std::size_t v = 0; v < n; v++) {
        std::vector<double> row = random_simplex_point(rng, dim);
        if (v > 0 && cptest::coin(rng, 0.4)) {
            const std::size_t u = std::uniform_int_distribution<std::size_t>(0, v - 1)(rng);
            row.assign(inst.p.begin() + u * dim, inst.p.begin() + (u + 1) * dim);
        }
        std::copy(row.begin(), row.end(), inst.p.begin() + v * dim);
    }
    return inst;
}

double brute_force_binary(const MultiProblemSpec& spec, std::span<const double> p,
    std::span<const double> dbar, double eps)
{
    const std::size_t n = spec.vertex_count();
    const std::size_t K = spec.dim;
    double best = kInf;
    std::vector<double> d(n * K);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); mask++) {
        for (std::size_t v = 0; v < n; v++) {
            for (std::size_t k = 0; k < K; k++) {
                d[v * K + k] = (mask >> v) & 1 ? dbar[v * K + k] : 0.0;
            }
        }
        best = std::min(best, multi_dir_deriv(spec, p, d, eps).value());
    }
    return best;
}

bool in_simplex(std::span<const double> p, std::size_t dim, double tol)
{
    for (std::size_t v = 0; v < p.size() / dim; v++) {
        double s = 0.0;
        for (std::size_t k = 0; k < dim; k++) {
            if (p[v * dim + k] < -tol) { return false; }
            s += p[v * dim + k];
        }
        if (std::abs(s - 1.0) > tol) { return false; }
    }
    return true;
}

} // namespace

TEST_CASE("candidate directions")
{
    const std::vector<double> p{0.7, 0.2, 0.1};
    const auto c = candidate_directions(p, 3);
    CHECK(c.top[0] == 0);
    CHECK(c.size(0) == 3);
    CHECK(c.direction(0, 0) == std::vector<double>{0, 0, 0});
    CHECK(c.direction(0, 1) == std::vector<double>{-1, 1, 0});
    CHECK(c.direction(0, 2) == std::vector<double>{-1, 0, 1});

    const auto tie = candidate_directions(std::vector<double>{0.5, 0.5}, 2);
    CHECK(tie.top[0] == 0);
    CHECK(tie.direction(0, 1) == std::vector<double>{-1, 1});

    const auto mid = candidate_directions(std::vector<double>{0.1, 0.2, 0.7}, 3);
    CHECK(mid.top[0] == 2);
    CHECK(mid.direction(0, 1) == std::vector<double>{1, 0, -1});
    CHECK(mid.direction(0, 2) == std::vector<double>{0, 1, -1});
}

TEST_CASE("candidates are feasible simplex directions")
{
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 200; trial++) {
        const std::size_t K = std::uniform_int_distribution<std::size_t>(2, 5)(rng);
        const auto p = random_simplex_point(rng, K);
        const auto c = candidate_directions(p, K);
        for (std::size_t j = 0; j < K; j++) {
            const auto d = c.direction(0, j);
            CHECK(std::accumulate(d.begin(), d.end(), 0.0) == 0.0);
            CHECK(simplex_indicator()->dir_deriv(p, d) == 0.0);
        }
    }
}

TEST_CASE("two equal vertices pulled together")
{
    MultiProblemSpec spec;
    spec.graph = cptest::chain(2, 1.0);
    spec.dim = 2;
    spec.smooth = std::make_shared<LinearSmooth>(std::vector<double>{0, -5, 0, -5}, 2);
    spec.nonsmooth.assign(2, simplex_indicator());
    const std::vector<double> p{0.5, 0.5, 0.5, 0.5};
    const std::vector<double> dbar{-1, 1, -1, 1};
    const auto move = binary_move_cut(spec, p, dbar, 1e-12);
    CHECK(move.moved == std::vector<char>{1, 1});
    CHECK(move.value == -10.0);
    CHECK(brute_force_binary(spec, p, dbar, 1e-12) == -10.0);
}

TEST_CASE("unprofitable moves stay at zero")
{
    MultiProblemSpec spec;
    spec.graph = cptest::chain(3, 1.0);
    spec.dim = 2;
    spec.smooth = std::make_shared<LinearSmooth>(std::vector<double>{0, 1, 0, 2, 0, 3}, 2);
    spec.nonsmooth.assign(3, simplex_indicator());
    const std::vector<double> p{0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
    const std::vector<double> dbar{-1, 1, -1, 1, -1, 1};
    const auto move = binary_move_cut(spec, p, dbar, 1e-12);
    CHECK(move.value == 0.0);
    CHECK(move.d == std::vector<double>(6, 0.0));
}

TEST_CASE("binary moves match enumeration")
{
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 100; trial++) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 12)(rng);
        const std::size_t K = std::uniform_int_distribution<std::size_t>(2, 4)(rng);
        const auto inst = random_multi(rng, n, K);
        const auto cand = candidate_directions(inst.p, K);
        std::vector<double> dbar(n * K);
        for (std::size_t v = 0; v < n; v++) {
            const std::size_t j = std::uniform_int_distribution<std::size_t>(0, K - 1)(rng);
            const auto d = cand.direction(static_cast<index_t>(v), j);
            std::copy(d.begin(), d.end(), dbar.begin() + v * K);
        }
        const auto move = binary_move_cut(inst.spec, inst.p, dbar, 1e-12);
        const double brute = brute_force_binary(inst.spec, inst.p, dbar, 1e-12);
        CHECK(move.value.value() == doctest::Approx(brute).epsilon(1e-9));
        CHECK(move.value <= 0.0);
        CHECK(multi_dir_deriv(inst.spec, inst.p, move.d, 1e-12).value()
            == doctest::Approx(move.value.value()).epsilon(1e-12));
    }
}

TEST_CASE("expansion with two labels is one binary cut")
{
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 50; trial++) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 10)(rng);
        const auto inst = random_multi(rng, n, 2);
        const auto cand = candidate_directions(inst.p, 2);
        std::vector<double> dbar(n * 2);
        for (std::size_t v = 0; v < n; v++) {
            const auto d = cand.direction(static_cast<index_t>(v), 1);
            std::copy(d.begin(), d.end(), dbar.begin() + v * 2);
        }
        const auto move = binary_move_cut(inst.spec, inst.p, dbar, 1e-12);
        const auto exp = alpha_expansion_direction(inst.spec, inst.p, cand, 1e-12);
        CHECK(exp.moves.size() == 1);
        CHECK(exp.value.value() == doctest::Approx(move.value.value()).epsilon(1e-12));
    }
}

TEST_CASE("expansion moves never increase the direction energy")
{
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 100; trial++) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 12)(rng);
        const std::size_t K = std::uniform_int_distribution<std::size_t>(2, 5)(rng);
        const auto inst = random_multi(rng, n, K);
        const auto cand = candidate_directions(inst.p, K);
        const auto exp = alpha_expansion_direction(inst.spec, inst.p, cand, 1e-12);
        CHECK(exp.moves.size() == K - 1);
        double prev = 0.0;
        for (const auto& m : exp.moves) {
            CHECK(m.energy_before == doctest::Approx(prev).epsilon(1e-12));
            CHECK(m.energy_after <= m.energy_before + 1e-12);
            prev = m.energy_after;
        }
        CHECK(exp.value <= 0.0);
        CHECK(multi_dir_deriv(inst.spec, inst.p, exp.d, 1e-12).value()
            == doctest::Approx(exp.value.value()).epsilon(1e-12));
        for (std::size_t v = 0; v < n; v++) {
            const auto d = cand.direction(static_cast<index_t>(v), exp.choice[v]);
            for (std::size_t k = 0; k < K; k++) { CHECK(exp.d[v * K + k] == d[k]); }
        }
    }
}

TEST_CASE("simplex projection")
{
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 300; trial++) {
        const std::size_t K = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
        std::vector<double> t(K);
        for (double& a : t) { a = cptest::uniform(rng, -2.0, 2.0); }
        std::vector<double> p = t;
        project_simplex(p);
        CHECK(in_simplex(p, K, 1e-12));
        /* <t - p, s - p> <= 0 for every s in the simplex */
        for (int s_trial = 0; s_trial < 20; s_trial++) {
            const auto s = random_simplex_point(rng, K);
            double ip = 0.0;
            for (std::size_t k = 0; k < K; k++) { ip += (t[k] - p[k]) * (s[k] - p[k]); }
            CHECK(ip <= 1e-12);
        }
    }
    std::vector<double> inside{0.2, 0.3, 0.5};
    project_simplex(inside);
    CHECK(inside[0] == doctest::Approx(0.2));
    CHECK(inside[2] == doctest::Approx(0.5));
}

TEST_CASE("simplex indicator")
{
    const auto g = simplex_indicator();
    CHECK(g->value(std::vector<double>{0.5, 0.5}) == 0.0);
    CHECK(g->value(std::vector<double>{0.6, 0.5}).is_plus_infinity());
    CHECK(g->value(std::vector<double>{-0.1, 1.1}).is_plus_infinity());
    const std::vector<double> corner{1.0, 0.0};
    CHECK(g->dir_deriv(corner, std::vector<double>{-1, 1}) == 0.0);
    CHECK(g->dir_deriv(corner, std::vector<double>{1, -1}).is_plus_infinity());
    CHECK(g->dir_deriv(corner, std::vector<double>{0, 1}).is_plus_infinity());
    std::vector<double> p{1e-9, 0.5, 0.5 - 1e-9};
    g->snap(p, 1e-6);
    CHECK(p[0] == 0.0);
    CHECK(p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g->feasible_point(4) == std::vector<double>(4, 0.25));
}

TEST_CASE("KL fidelity")
{
    std::mt19937_64 rng(6);
    const std::size_t n = 5, K = 3;
    std::vector<double> q;
    for (std::size_t v = 0; v < n; v++) {
        const auto row = random_simplex_point(rng, K);
        q.insert(q.end(), row.begin(), row.end());
    }
    const KLFidelity f(q, K, 0.1);
    CHECK(f.value(q) == doctest::Approx(0.0));
    std::vector<double> grad(n * K);
    f.gradient(q, grad);
    for (double t : grad) { CHECK(t == doctest::Approx(-0.9)); }

    for (int trial = 0; trial < 50; trial++) {
        std::vector<double> p;
        for (std::size_t v = 0; v < n; v++) {
            const auto row = random_simplex_point(rng, K);
            p.insert(p.end(), row.begin(), row.end());
        }
        CHECK(f.value(p) >= 0.0);
        f.gradient(p, grad);
        for (std::size_t i = 0; i < p.size(); i++) {
            const double h = 1e-6;
            std::vector<double> a = p, b = p;
            a[i] += h;
            b[i] -= h;
            const double fd = (f.value(a) - f.value(b)) / (2 * h);
            CHECK(fd == doctest::Approx(grad[i]).epsilon(1e-6).scale(1.0));
        }
    }

    CHECK_THROWS_AS(KLFidelity(q, K, 0.0), ContractViolation);
    CHECK_THROWS_AS(KLFidelity(q, K, 1.0), ContractViolation);
    std::vector<double> bad = q;
    bad[0] += 0.5;
    CHECK_THROWS_AS(KLFidelity(bad, K, 0.1), ContractViolation);
}

TEST_CASE("KL curvature bound majorizes the reduced Hessian")
{
    std::mt19937_64 rng(15);
    const std::size_t n = 6, K = 3;
    const auto inst = random_multi(rng, n, K);
    const Partition part = Partition::from_labels(std::vector<index_t>{0, 0, 1, 1, 1, 2});
    const auto bound = inst.spec.smooth->curvature_bound(part);
    /* along random directions of the reduced variable, second differences
     * stay below the bound */
    for (int trial = 0; trial < 50; trial++) {
        std::vector<double> xi, dir(part.size() * K);
        for (std::size_t c = 0; c < part.size(); c++) {
            const auto row = random_simplex_point(rng, K);
            xi.insert(xi.end(), row.begin(), row.end());
        }
        for (double& t : dir) { t = cptest::uniform(rng, -1.0, 1.0); }
        const double h = 1e-4;
        auto lifted = [&](double s) {
            std::vector<double> p(n * K);
            for (std::size_t v = 0; v < n; v++) {
                for (std::size_t k = 0; k < K; k++) {
                    const std::size_t c = part.component_of(static_cast<index_t>(v));
                    p[v * K + k] = xi[c * K + k] + s * dir[c * K + k];
                }
            }
            return inst.spec.smooth->value(p);
        };
        const double second = (lifted(h) - 2 * lifted(0.0) + lifted(-h)) / (h * h);
        double quad = 0.0;
        for (std::size_t c = 0; c < part.size(); c++) {
            for (std::size_t k = 0; k < K; k++) { quad += bound[c] * dir[c * K + k] * dir[c * K + k]; }
        }
        CHECK(second <= quad * (1 + 1e-6) + 1e-6);
    }
}

TEST_CASE("identical references give one component")
{
    const std::size_t n = 12, K = 3;
    MultiProblemSpec spec;
    spec.graph = cptest::chain(n, 0.5);
    spec.dim = K;
    std::vector<double> q;
    for (std::size_t v = 0; v < n; v++) { q.insert(q.end(), {0.5, 0.3, 0.2}); }
    spec.smooth = std::make_shared<KLFidelity>(q, K, 0.1);
    spec.nonsmooth.assign(n, simplex_indicator());
    const Solution sol = cut_pursuit_multidim(spec);
    CHECK(sol.partition.size() == 1);
    for (std::size_t i = 0; i < q.size(); i++) { CHECK(sol.x[i] == doctest::Approx(q[i]).epsilon(1e-6)); }
}

TEST_CASE("multilabel grid against the baseline")
{
    auto g = io::default_generator("multilabel_grid");
    const io::ProblemData data = io::generate(g);
    const MultiProblemSpec spec = data.to_multi_spec();

    std::vector<double> previous;
    bool feasible = true;
    MultiObserver observer;
    observer.on_iterate = [&](std::span<const double> p, const Partition&) {
        feasible = feasible && in_simplex(p, spec.dim, 1e-8);
    };
    bool monotone_moves = true;
    observer.on_direction = [&](const ExpansionResult& r) {
        for (const auto& m : r.moves) { monotone_moves = monotone_moves && m.energy_after <= m.energy_before; }
    };
    const Solution sol = cut_pursuit_multidim(spec, {}, observer);
    CHECK(feasible);
    CHECK(monotone_moves);
    CHECK(sol.partition.size() <= 8);
    for (std::size_t i = 1; i < sol.trace.records.size(); i++) {
        CHECK(sol.trace.records[i].objective <= sol.trace.records[i - 1].objective + 1e-8);
    }
    BaselineOptions bo;
    bo.tol = 1e-9;
    const BaselineResult base = multi_baseline_solve(spec, bo);
    const double cp = multi_objective(spec, sol.x).value();
    const double ref = multi_objective(spec, base.x).value();
    CHECK(std::abs(cp - ref) <= 0.05 * std::abs(ref));
}

TEST_CASE("noisy multilabel grid keeps monotone traces")
{
    auto g = io::default_generator("multilabel_grid");
    g.noise = 0.2;
    g.tv = 0.05;
    const MultiProblemSpec spec = io::generate(g).to_multi_spec();
    bool feasible = true;
    std::size_t moves = 0;
    MultiObserver observer;
    observer.on_iterate = [&](std::span<const double> p, const Partition&) {
        feasible = feasible && in_simplex(p, spec.dim, 1e-8);
    };
    observer.on_direction = [&](const ExpansionResult& r) {
        for (const auto& m : r.moves) {
            CHECK(m.energy_after <= m.energy_before);
            moves++;
        }
    };
    const Solution sol = cut_pursuit_multidim(spec, {}, observer);
    CHECK(feasible);
    CHECK(moves >= 2);
    CHECK(sol.partition.size() > 2);
    for (std::size_t i = 1; i < sol.trace.records.size(); i++) {
        CHECK(sol.trace.records[i].objective <= sol.trace.records[i - 1].objective + 1e-8);
    }
}

TEST_CASE("invalid multidim problems")
{
    MultiProblemSpec spec;
    spec.graph = cptest::chain(2, 1.0);
    spec.dim = 2;
    spec.smooth = std::make_shared<KLFidelity>(std::vector<double>{0.5, 0.5, 1.0, 0.0}, 2, 0.1);
    spec.nonsmooth.assign(1, simplex_indicator());
    CHECK_THROWS_AS(spec.validate(), ContractViolation);
    spec.nonsmooth.assign(2, simplex_indicator());
    CHECK_NOTHROW(spec.validate());
    spec.dim = 3;
    CHECK_THROWS_AS(spec.validate(), ContractViolation);
}
