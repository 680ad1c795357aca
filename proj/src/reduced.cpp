#include "cutpursuit/reduced.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "cutpursuit/direction.hpp"
#include "cutpursuit/errors.hpp"

namespace cutpursuit {

std::string to_string(StopReason reason)
{
    switch (reason) {
    case StopReason::none: return "none";
    case StopReason::direction: return "direction";
    case StopReason::evolution: return "evolution";
    case StopReason::max_iter: return "max_iter";
    case StopReason::target_objective: return "target_objective";
    }
    return "unknown";
}

std::vector<double> lift(const Partition& partition, std::span<const double> xi,
    std::size_t dim, kernels::Exec exec)
{
    if (xi.size() != partition.size() * dim) {
        throw ContractViolation("lift: expected " + std::to_string(partition.size() * dim)
            + " reduced values, got " + std::to_string(xi.size()));
    }
    std::vector<double> x(partition.vertex_count() * dim);
    kernels::lift(exec, partition, xi, dim, x);
    return x;
}

ExtendedReal reduced_objective(const ProblemSpec& spec, const Partition& partition,
    std::span<const double> xi)
{
    return objective(spec, lift(partition, xi));
}

std::vector<double> feasible_start(const ProblemSpec& spec, const Partition& partition)
{
    std::vector<double> xi(partition.size());
    for (std::size_t c = 0; c < partition.size(); c++) {
        const auto members = spec.members(partition.component(c));
        const Interval dom = aggregate_domain(members);
        if (dom.empty()) {
            throw InfeasibleProblem("the domains of the nonsmooth terms do not "
                "intersect on a component of " + std::to_string(partition.component(c).size())
                + " vertices (starting at vertex "
                + std::to_string(partition.component(c)[0])
                + "); supply an initial partition whose components have feasible "
                "common values");
        }
        xi[c] = dom.clamp(0.0);
    }
    return xi;
}

void project_onto_domains(const ProblemSpec& spec, const Partition& partition,
    std::span<double> xi)
{
    for (std::size_t c = 0; c < partition.size(); c++) {
        const Interval dom = aggregate_domain(spec.members(partition.component(c)));
        if (dom.empty()) {
            throw InfeasibleProblem("empty aggregate domain on a component");
        }
        xi[c] = dom.clamp(xi[c]);
    }
}

namespace {

/* aggregate prox data of one component */
struct ComponentProx {
    bool closed_form = true;
    double weight = 0.0;
    Interval domain;
    std::vector<const NonsmoothTerm*> members;

    double operator()(double t, double step) const
    {
        if (closed_form) { return AbsBoxTerm::closed_form_prox(t, step, weight, domain); }
        return bisection_aggregate_prox(t, step, members);
    }
};

std::vector<ComponentProx> component_proxes(const ProblemSpec& spec,
    const Partition& partition)
{
    std::vector<ComponentProx> out(partition.size());
    for (std::size_t c = 0; c < partition.size(); c++) {
        ComponentProx& p = out[c];
        p.members = spec.members(partition.component(c));
        p.domain = aggregate_domain(p.members);
        if (p.domain.empty()) {
            throw InfeasibleProblem("empty aggregate domain on a component");
        }
        for (const NonsmoothTerm* g : p.members) {
            const auto* builtin = dynamic_cast<const AbsBoxTerm*>(g);
            if (!builtin) { p.closed_form = false; break; }
            p.weight += builtin->weight();
        }
    }
    return out;
}

} // namespace

SplittingResult solve_reduced(const ProblemSpec& spec, const Partition& partition,
    std::span<const double> xi_init, const SplittingOptions& options)
{
    spec.validate();
    const ReducedGraph reduced = build_reduced_graph(spec.graph, partition);
    const auto proxes = component_proxes(spec, partition);
    const std::size_t n = partition.size();

    std::vector<double> start(xi_init.begin(), xi_init.end());
    if (start.size() != n) {
        throw ContractViolation("solve_reduced: expected " + std::to_string(n)
            + " initial values");
    }
    for (std::size_t c = 0; c < n; c++) { start[c] = proxes[c].domain.clamp(start[c]); }

    SplittingModel model;
    model.component_count = n;
    model.dim = 1;
    model.edges = reduced.edges;
    model.curvature = spec.smooth->curvature_bound(partition);

    const auto reduced_smooth = spec.smooth->reduce(partition, options.exec);
    model.gradient = [&](std::span<const double> xi, std::span<double> grad) {
        reduced_smooth->gradient(xi, grad);
    };
    const bool parallel = options.exec == kernels::Exec::parallel
        && n >= kernels::kParallelThreshold && kernels::max_threads() > 1;
    model.prox = [&](std::span<double> xi, std::span<const double> tau) {
        const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(n);
        #pragma omp parallel for schedule(static) if(parallel)
        for (std::ptrdiff_t c = 0; c < count; c++) {
            xi[c] = proxes[c](xi[c], tau[c]);
        }
    };
    return primal_dual_splitting(model, start, options);
}

std::size_t count_constant_components(const WeightedGraph& graph,
    std::span<const double> x, double eps)
{
    return equality_blocks(graph, equal_edges(graph, x, eps)).size();
}

BaselineResult baseline_solve(const ProblemSpec& spec, const BaselineOptions& options)
{
    spec.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const Partition singletons = Partition::singletons(spec.vertex_count());
    const std::vector<double> start = feasible_start(spec, singletons);

    BaselineResult out;
    auto record = [&](std::size_t iter, std::span<const double> x) {
        TraceRecord r;
        r.iter = iter;
        r.objective = objective(spec, x).value();
        double scale = 0.0;
        for (double t : x) { scale = std::max(scale, std::abs(t)); }
        r.components = count_constant_components(spec.graph, x,
            options.component_eps * scale);
        r.elapsed = std::chrono::duration<double>(
            std::chrono::steady_clock::now() - t0).count();
        out.trace.records.push_back(r);
        return r.objective;
    };

    SplittingOptions sopt;
    sopt.tol = options.tol;
    sopt.max_iter = options.max_iter;
    sopt.exec = options.exec;
    sopt.checkpoint_every = options.checkpoint_every;
    sopt.checkpoint = [&](std::size_t iter, std::span<const double> xi) {
        const double f = record(iter, xi);
        return options.target_objective && f <= *options.target_objective;
    };
    SplittingResult res = solve_reduced(spec, singletons, start, sopt);

    out.x = std::move(res.xi);
    out.iterations = res.iterations;
    out.converged = res.converged;
    if (out.trace.records.empty() || out.trace.records.back().iter != res.iterations) {
        record(res.iterations, out.x);
    }
    if (res.stopped_by_checkpoint) {
        out.trace.stop = StopReason::target_objective;
    } else if (res.converged) {
        out.trace.stop = StopReason::evolution;
    } else {
        out.trace.stop = StopReason::max_iter;
        out.trace.warnings.push_back("splitting reached max_iter before tolerance "
            + std::to_string(options.tol));
    }
    return out;
}

} // namespace cutpursuit
