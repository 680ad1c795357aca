#include "cutpursuit/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "cutpursuit/errors.hpp"

namespace cutpursuit {

double SolveOptions::reduced_tol() const
{
    return tol_x > 0.0 ? tol_x * reduced_tol_factor : 1e-9;
}

double relative_evolution(std::span<const double> a, std::span<const double> b)
{
    double d2 = 0.0, r2 = 0.0;
    for (std::size_t i = 0; i < a.size(); i++) {
        d2 += (a[i] - b[i]) * (a[i] - b[i]);
        r2 += a[i] * a[i];
    }
    if (d2 == 0.0) { return 0.0; }
    return std::sqrt(d2 / r2);
}

namespace {

void check_options(const SolveOptions& o)
{
    auto bad = [](std::optional<double> v) { return v && !(*v >= 0.0); };
    if (!(o.tol_dir >= 0.0) || !(o.tol_x >= 0.0) || bad(o.eps_eq) || bad(o.eps_snap)
        || bad(o.merge_eps) || !(o.reduced_tol_factor > 0.0)) {
        throw ContractViolation("cut pursuit: tolerances must be nonnegative");
    }
    if (o.max_iter < 1 || o.reduced_max_iter < 1) {
        throw ContractViolation("cut pursuit: iteration limits must be at least 1");
    }
}

/* move each component value onto the nearest kink of its members within
 * eps, when that kink is feasible for the whole component */
void snap_components(const ProblemSpec& spec, const Partition& partition,
    std::span<double> xi, double eps)
{
    for (std::size_t c = 0; c < partition.size(); c++) {
        const auto members = spec.members(partition.component(c));
        const Interval dom = aggregate_domain(members);
        double best = eps;
        double target = xi[c];
        for (const NonsmoothTerm* g : members) {
            for (double k : g->kinks()) {
                const double dist = std::abs(xi[c] - k);
                if (dist <= best && dom.contains(k)) { best = dist; target = k; }
            }
        }
        xi[c] = target;
    }
}

double max_abs(std::span<const double> v)
{
    double m = 0.0;
    for (double t : v) { m = std::max(m, std::abs(t)); }
    return m;
}

} // namespace

Solution cut_pursuit(const ProblemSpec& spec, const SolveOptions& options)
{
    spec.validate();
    check_options(options);
    const std::size_t n = spec.vertex_count();
    if (n == 0) { throw ContractViolation("cut pursuit: empty graph"); }
    const auto t0 = std::chrono::steady_clock::now();
    const double reduced_tol = options.reduced_tol();

    Solution sol;
    /* default: {V}, or the connected components of a disconnected graph */
    sol.partition = options.initial_partition ? *options.initial_partition
        : refine_partition(spec.graph, Partition::single(n),
              std::vector<double>(n, 0.0), 1, 0.0);
    if (sol.partition.vertex_count() != n || !sol.partition.is_valid(spec.graph)) {
        throw ContractViolation("cut pursuit: initial partition is not a partition "
            "of the graph into connected components");
    }
    sol.xi = feasible_start(spec, sol.partition);

    SplittingOptions sopt;
    sopt.tol = reduced_tol;
    sopt.max_iter = options.reduced_max_iter;
    sopt.exec = options.exec;

    std::vector<double> previous;
    for (std::size_t it = 1; ; it++) {
        SplittingResult res = solve_reduced(spec, sol.partition, sol.xi, sopt);
        sol.xi = std::move(res.xi);
        if (!res.converged) {
            sol.trace.warnings.push_back("iteration " + std::to_string(it)
                + ": reduced solve stopped at max_iter with relative evolution "
                + std::to_string(res.evolution));
        }

        const double adaptive = 10.0 * reduced_tol * max_abs(sol.xi);
        snap_components(spec, sol.partition, sol.xi, options.eps_snap.value_or(adaptive));
        const double merge_eps = options.merge_eps.value_or(adaptive);
        if (merge_eps > 0.0) {
            auto [merged, values] = merge_close_components(spec.graph, sol.partition,
                sol.xi, 1, merge_eps);
            if (merged.size() != sol.partition.size()) {
                sol.partition = std::move(merged);
                sol.xi = std::move(values);
                project_onto_domains(spec, sol.partition, sol.xi);
            }
        }

        sol.x = lift(sol.partition, sol.xi, 1, options.exec);
        const double eps_eq = options.eps_eq.value_or(adaptive);
        const auto deltas = vertex_deltas(spec, sol.x, eps_eq);
        const auto equal = equal_edges(spec.graph, sol.x, eps_eq);
        const TernaryDirection dir = ternary_direction_from_deltas(spec.graph, deltas,
            equal, options.direction_method, options.exec);

        TraceRecord rec;
        rec.iter = it;
        rec.objective = objective(spec, sol.x).value();
        rec.components = sol.partition.size();
        rec.dir_deriv = dir.value.value();
        rec.elapsed = std::chrono::duration<double>(
            std::chrono::steady_clock::now() - t0).count();
        sol.trace.records.push_back(rec);
        sol.iterations = it;

        if (-dir.value.value() <= options.tol_dir) {
            sol.trace.stop = StopReason::direction;
            break;
        }
        if (!previous.empty() && relative_evolution(sol.x, previous) <= options.tol_x) {
            sol.trace.stop = StopReason::evolution;
            break;
        }
        if (it >= options.max_iter) {
            sol.trace.stop = StopReason::max_iter;
            break;
        }
        previous = sol.x;

        Partition refined = refine_partition(spec.graph, sol.partition, dir.d, 1, 0.0);
        std::vector<double> inherited(refined.size());
        for (std::size_t c = 0; c < refined.size(); c++) {
            inherited[c] = sol.xi[sol.partition.component_of(refined.component(c)[0])];
        }
        sol.partition = std::move(refined);
        sol.xi = std::move(inherited);
    }
    return sol;
}

} // namespace cutpursuit
