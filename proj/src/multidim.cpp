#include "cutpursuit/multidim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "cutpursuit/errors.hpp"
#include "cutpursuit/maxflow.hpp"

namespace cutpursuit {

namespace {

constexpr double kSimplexTol = 1e-8;

} // namespace

void project_simplex(std::span<double> p)
{
    std::vector<double> sorted(p.begin(), p.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t k = 0; k < sorted.size(); k++) {
        cumulative += sorted[k];
        const double t = (cumulative - 1.0) / static_cast<double>(k + 1);
        if (sorted[k] - t > 0.0) { theta = t; }
    }
    for (double& t : p) { t = std::max(t - theta, 0.0); }
}

ExtendedReal SimplexIndicator::value(std::span<const double> p) const
{
    double sum = 0.0;
    for (double t : p) {
        if (!(t >= -kSimplexTol)) { return kInf; }
        sum += t;
    }
    return std::abs(sum - 1.0) <= kSimplexTol ? 0.0 : kInf;
}

ExtendedReal SimplexIndicator::dir_deriv(std::span<const double> p,
    std::span<const double> d) const
{
    double sum = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < p.size(); k++) {
        if (d[k] < 0.0 && p[k] <= 1e-12) { return kInf; }
        if (d[k] > 0.0 && p[k] >= 1.0 - 1e-12) { return kInf; }
        sum += d[k];
        scale += std::abs(d[k]);
    }
    return std::abs(sum) <= 1e-12 * (1.0 + scale) ? 0.0 : kInf;
}

void SimplexIndicator::prox(std::span<double> p, double) const
{
    project_simplex(p);
}

void SimplexIndicator::snap(std::span<double> p, double eps) const
{
    double sum = 0.0;
    for (double& t : p) {
        if (t <= eps) { t = 0.0; }
        sum += t;
    }
    if (sum <= 0.0) { return; }
    for (double& t : p) { t /= sum; }
}

std::vector<double> SimplexIndicator::feasible_point(std::size_t dim) const
{
    return std::vector<double>(dim, 1.0 / static_cast<double>(dim));
}

VectorTermPtr simplex_indicator()
{
    static const auto term = std::make_shared<const SimplexIndicator>();
    return term;
}

KLFidelity::KLFidelity(std::vector<double> q, std::size_t dim, double beta)
    : q_(std::move(q)), dim_(dim), beta_(beta)
{
    if (dim_ == 0 || q_.size() % dim_ != 0) {
        throw ContractViolation("KL fidelity: reference size is not a multiple of K");
    }
    if (!(beta_ > 0.0 && beta_ < 1.0)) {
        throw ContractViolation("KL fidelity: beta must lie in ]0, 1[");
    }
    const SimplexIndicator simplex;
    for (std::size_t v = 0; v < vertex_count(); v++) {
        if (!simplex.value(std::span<const double>(q_).subspan(v * dim_, dim_)).is_finite()) {
            throw ContractViolation("KL fidelity: reference row " + std::to_string(v)
                + " is not in the simplex");
        }
    }
    r_.resize(q_.size());
    const double u = beta_ / static_cast<double>(dim_);
    for (std::size_t i = 0; i < q_.size(); i++) { r_[i] = u + (1.0 - beta_) * q_[i]; }
}

double KLFidelity::value(std::span<const double> p) const
{
    const double u = beta_ / static_cast<double>(dim_);
    double sum = 0.0;
    for (std::size_t i = 0; i < r_.size(); i++) {
        sum += r_[i] * std::log(r_[i] / (u + (1.0 - beta_) * p[i]));
    }
    return sum;
}

void KLFidelity::gradient(std::span<const double> p, std::span<double> grad) const
{
    const double u = beta_ / static_cast<double>(dim_);
    for (std::size_t i = 0; i < r_.size(); i++) {
        grad[i] = -(1.0 - beta_) * r_[i] / (u + (1.0 - beta_) * p[i]);
    }
}

std::vector<double> KLFidelity::curvature_bound(const Partition& partition) const
{
    const double k_over_beta = static_cast<double>(dim_) / beta_;
    const double factor = (1.0 - beta_) * (1.0 - beta_) * k_over_beta * k_over_beta;
    std::vector<double> out(partition.size());
    std::vector<double> sums(dim_);
    for (std::size_t c = 0; c < partition.size(); c++) {
        std::fill(sums.begin(), sums.end(), 0.0);
        for (index_t v : partition.component(c)) {
            for (std::size_t k = 0; k < dim_; k++) { sums[k] += r_[v * dim_ + k]; }
        }
        out[c] = factor * *std::max_element(sums.begin(), sums.end());
    }
    return out;
}

void MultiProblemSpec::validate() const
{
    const std::size_t n = vertex_count();
    if (dim == 0) { throw ContractViolation("multidim problem: K must be positive"); }
    if (!smooth) { throw ContractViolation("multidim problem: missing smooth term"); }
    if (smooth->vertex_count() != n || smooth->dimension() != dim) {
        throw ContractViolation("multidim problem: smooth term dimensions do not match "
            "the graph and K");
    }
    if (nonsmooth.size() != n) {
        throw ContractViolation("multidim problem: expected one nonsmooth term per vertex");
    }
    for (const auto& g : nonsmooth) {
        if (!g) { throw ContractViolation("multidim problem: missing nonsmooth term"); }
    }
}

double multi_total_variation(const WeightedGraph& graph, std::span<const double> p,
    std::size_t dim)
{
    double tv = 0.0;
    for (const Edge& e : graph.edges()) {
        double norm = 0.0;
        for (std::size_t k = 0; k < dim; k++) {
            norm += std::abs(p[e.u * dim + k] - p[e.v * dim + k]);
        }
        tv += e.w * norm;
    }
    return tv;
}

ExtendedReal multi_objective(const MultiProblemSpec& spec, std::span<const double> p)
{
    const std::size_t dim = spec.dim;
    if (p.size() != spec.vertex_count() * dim) {
        throw ContractViolation("multidim objective: wrong point size");
    }
    ExtendedReal sum = 0.0;
    for (std::size_t v = 0; v < spec.vertex_count(); v++) {
        sum += spec.nonsmooth[v]->value(p.subspan(v * dim, dim));
    }
    if (!sum.is_finite()) { return sum; }
    return sum + spec.smooth->value(p) + multi_total_variation(spec.graph, p, dim);
}

MultiSlopes multi_slopes(const MultiProblemSpec& spec, std::span<const double> p,
    double eps_eq)
{
    const std::size_t dim = spec.dim;
    MultiSlopes s;
    s.dim = dim;
    s.slope.resize(p.size());
    spec.smooth->gradient(p, s.slope);
    s.equal.assign(spec.graph.edge_count() * dim, 0);
    for (std::size_t e = 0; e < spec.graph.edge_count(); e++) {
        const Edge& edge = spec.graph.edge(e);
        for (std::size_t k = 0; k < dim; k++) {
            const double diff = p[edge.u * dim + k] - p[edge.v * dim + k];
            if (std::abs(diff) <= eps_eq) {
                s.equal[e * dim + k] = 1;
            } else {
                const double sg = diff > 0.0 ? edge.w : -edge.w;
                s.slope[edge.u * dim + k] += sg;
                s.slope[edge.v * dim + k] -= sg;
            }
        }
    }
    return s;
}

ExtendedReal vertex_delta(const MultiProblemSpec& spec, const MultiSlopes& slopes,
    std::span<const double> p, index_t v, std::span<const double> d_v)
{
    const std::size_t dim = slopes.dim;
    bool zero = true;
    double lin = 0.0;
    for (std::size_t k = 0; k < dim; k++) {
        lin += slopes.slope[v * dim + k] * d_v[k];
        zero = zero && d_v[k] == 0.0;
    }
    if (zero) { return 0.0; }
    return spec.nonsmooth[v]->dir_deriv(p.subspan(v * dim, dim), d_v) + lin;
}

double edge_energy(const MultiSlopes& slopes, const Edge& edge, std::size_t e,
    std::span<const double> a, std::span<const double> b)
{
    double sum = 0.0;
    for (std::size_t k = 0; k < slopes.dim; k++) {
        if (slopes.equal[e * slopes.dim + k]) { sum += std::abs(a[k] - b[k]); }
    }
    return edge.w * sum;
}

ExtendedReal multi_dir_deriv_from_slopes(const MultiProblemSpec& spec,
    const MultiSlopes& slopes, std::span<const double> p, std::span<const double> d)
{
    const std::size_t dim = slopes.dim;
    ExtendedReal sum = 0.0;
    for (std::size_t v = 0; v < spec.vertex_count(); v++) {
        sum += vertex_delta(spec, slopes, p, static_cast<index_t>(v), d.subspan(v * dim, dim));
    }
    for (std::size_t e = 0; e < spec.graph.edge_count(); e++) {
        const Edge& edge = spec.graph.edge(e);
        sum += edge_energy(slopes, edge, e, d.subspan(edge.u * dim, dim),
            d.subspan(edge.v * dim, dim));
    }
    return sum;
}

ExtendedReal multi_dir_deriv(const MultiProblemSpec& spec, std::span<const double> p,
    std::span<const double> d, double eps_eq)
{
    return multi_dir_deriv_from_slopes(spec, multi_slopes(spec, p, eps_eq), p, d);
}

std::vector<double> CandidateDirections::direction(index_t v, std::size_t j) const
{
    std::vector<double> d(dim, 0.0);
    if (j == 0) { return d; }
    const std::size_t k = (top[v] + j) % dim;
    d[k] = 1.0;
    d[top[v]] = -1.0;
    return d;
}

CandidateDirections candidate_directions(std::span<const double> p, std::size_t dim)
{
    CandidateDirections c;
    c.dim = dim;
    c.top.resize(p.size() / dim);
    for (std::size_t v = 0; v < c.top.size(); v++) {
        const auto row = p.subspan(v * dim, dim);
        c.top[v] = static_cast<index_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return c;
}

BinaryMove binary_move_cut(const MultiProblemSpec& spec, std::span<const double> p,
    std::span<const double> dbar, double eps_eq)
{
    spec.validate();
    const std::size_t n = spec.vertex_count();
    const std::size_t dim = spec.dim;
    if (p.size() != n * dim || dbar.size() != n * dim) {
        throw ContractViolation("binary move: wrong point or direction size");
    }
    const MultiSlopes slopes = multi_slopes(spec, p, eps_eq);
    const std::vector<double> zero(dim, 0.0);

    BinaryEnergy energy(n);
    for (std::size_t v = 0; v < n; v++) {
        const auto dv = dbar.subspan(v * dim, dim);
        const ExtendedReal delta = vertex_delta(spec, slopes, p, static_cast<index_t>(v), dv);
        energy.add_unary(static_cast<index_t>(v), 0.0, delta.value());
    }
    for (std::size_t e = 0; e < spec.graph.edge_count(); e++) {
        const Edge& edge = spec.graph.edge(e);
        const auto du = dbar.subspan(edge.u * dim, dim);
        const auto dv = dbar.subspan(edge.v * dim, dim);
        energy.add_pairwise(edge.u, edge.v, 0.0, edge_energy(slopes, edge, e, zero, dv),
            edge_energy(slopes, edge, e, du, zero), edge_energy(slopes, edge, e, du, dv));
    }
    const auto labels = energy.minimize();

    BinaryMove out;
    out.d.assign(n * dim, 0.0);
    out.moved.assign(labels.begin(), labels.end());
    for (std::size_t v = 0; v < n; v++) {
        if (labels[v]) {
            std::copy_n(dbar.begin() + static_cast<std::ptrdiff_t>(v * dim), dim,
                out.d.begin() + static_cast<std::ptrdiff_t>(v * dim));
        }
    }
    out.value = multi_dir_deriv_from_slopes(spec, slopes, p, out.d);
    return out;
}

ExpansionResult alpha_expansion_direction(const MultiProblemSpec& spec,
    std::span<const double> p, const CandidateDirections& candidates, double eps_eq)
{
    spec.validate();
    const std::size_t n = spec.vertex_count();
    const std::size_t dim = spec.dim;
    if (p.size() != n * dim || candidates.top.size() != n || candidates.dim != dim) {
        throw ContractViolation("expansion: wrong point or candidate size");
    }
    const MultiSlopes slopes = multi_slopes(spec, p, eps_eq);

    ExpansionResult res;
    res.d.assign(n * dim, 0.0);
    res.choice.assign(n, 0);
    std::vector<double> current_delta(n, 0.0);
    double current = 0.0;
    std::vector<double> proposal(n * dim), proposal_delta(n), next(n * dim);
    auto row = [dim](std::span<const double> a, std::size_t v) { return a.subspan(v * dim, dim); };

    for (std::size_t j = 1; j < dim; j++) {
        for (std::size_t v = 0; v < n; v++) {
            const auto dv = candidates.direction(static_cast<index_t>(v), j);
            std::copy(dv.begin(), dv.end(), proposal.begin() + static_cast<std::ptrdiff_t>(v * dim));
            proposal_delta[v] = vertex_delta(spec, slopes, p, static_cast<index_t>(v), dv).value();
        }
        BinaryEnergy energy(n);
        for (std::size_t v = 0; v < n; v++) {
            energy.add_unary(static_cast<index_t>(v), current_delta[v], proposal_delta[v]);
        }
        ExpansionMove move{j, current, current, false, 0};
        for (std::size_t e = 0; e < spec.graph.edge_count(); e++) {
            const Edge& edge = spec.graph.edge(e);
            const auto cu = row(res.d, edge.u), cv = row(res.d, edge.v);
            const auto au = row(proposal, edge.u), av = row(proposal, edge.v);
            const double e00 = edge_energy(slopes, edge, e, cu, cv);
            double e01 = edge_energy(slopes, edge, e, cu, av);
            const double e10 = edge_energy(slopes, edge, e, au, cv);
            const double e11 = edge_energy(slopes, edge, e, au, av);
            if (!BinaryEnergy::is_submodular(e00, e01, e10, e11)) {
                e01 = e00 + e11 - e10;
                move.truncated_pairs++;
            }
            energy.add_pairwise(edge.u, edge.v, e00, e01, e10, e11);
        }
        const auto labels = energy.minimize();
        next = res.d;
        for (std::size_t v = 0; v < n; v++) {
            if (labels[v]) {
                std::copy_n(proposal.begin() + static_cast<std::ptrdiff_t>(v * dim), dim,
                    next.begin() + static_cast<std::ptrdiff_t>(v * dim));
            }
        }
        const ExtendedReal after = multi_dir_deriv_from_slopes(spec, slopes, p, next);
        move.energy_after = after.value();
        if (after.is_finite() && after.value() <= current) {
            move.accepted = true;
            res.d.swap(next);
            current = after.value();
            for (std::size_t v = 0; v < n; v++) {
                if (labels[v]) {
                    res.choice[v] = static_cast<index_t>(j);
                    current_delta[v] = proposal_delta[v];
                }
            }
        }
        res.moves.push_back(move);
    }
    res.value = current;
    return res;
}

namespace {

struct MultiComponentProx {
    const VectorTerm* term = nullptr;
    double count = 1.0;
};

std::vector<MultiComponentProx> multi_proxes(const MultiProblemSpec& spec,
    const Partition& partition)
{
    std::vector<MultiComponentProx> out(partition.size());
    for (std::size_t c = 0; c < partition.size(); c++) {
        const auto comp = partition.component(c);
        const VectorTerm* first = spec.nonsmooth[comp[0]].get();
        for (index_t v : comp) {
            const VectorTerm* g = spec.nonsmooth[v].get();
            if (g != first && g->kind() != first->kind()) {
                throw ContractViolation("multidim reduced problem: the vertices of a "
                    "component must share the same nonsmooth term");
            }
        }
        out[c] = {first, static_cast<double>(comp.size())};
    }
    return out;
}

std::vector<double> multi_feasible_start(const MultiProblemSpec& spec,
    const Partition& partition)
{
    std::vector<double> xi;
    xi.reserve(partition.size() * spec.dim);
    for (const auto& comp : partition.components()) {
        const auto point = spec.nonsmooth[comp[0]]->feasible_point(spec.dim);
        xi.insert(xi.end(), point.begin(), point.end());
    }
    return xi;
}

SplittingResult solve_multi_reduced(const MultiProblemSpec& spec,
    const Partition& partition, std::span<const double> xi_init,
    const SplittingOptions& options)
{
    const ReducedGraph reduced = build_reduced_graph(spec.graph, partition);
    const auto proxes = multi_proxes(spec, partition);
    const std::size_t n = partition.size();
    const std::size_t dim = spec.dim;

    std::vector<double> start(xi_init.begin(), xi_init.end());
    for (std::size_t c = 0; c < n; c++) {
        proxes[c].term->prox(std::span<double>(start).subspan(c * dim, dim), 0.0);
    }

    SplittingModel model;
    model.component_count = n;
    model.dim = dim;
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
            const auto& px = proxes[static_cast<std::size_t>(c)];
            px.term->prox(xi.subspan(static_cast<std::size_t>(c) * dim, dim),
                px.count * tau[static_cast<std::size_t>(c)]);
        }
    };
    return primal_dual_splitting(model, start, options);
}

double max_abs(std::span<const double> v)
{
    double m = 0.0;
    for (double t : v) { m = std::max(m, std::abs(t)); }
    return m;
}

std::size_t count_multi_components(const WeightedGraph& graph, std::span<const double> p,
    std::size_t dim, double eps)
{
    std::vector<index_t> all(graph.vertex_count());
    std::iota(all.begin(), all.end(), index_t{0});
    return connected_components(graph, all, [&](index_t u, index_t v) {
        for (std::size_t k = 0; k < dim; k++) {
            if (std::abs(p[u * dim + k] - p[v * dim + k]) > eps) { return false; }
        }
        return true;
    }).size();
}

} // namespace

Solution cut_pursuit_multidim(const MultiProblemSpec& spec, const SolveOptions& options,
    const MultiObserver& observer)
{
    spec.validate();
    const std::size_t n = spec.vertex_count();
    const std::size_t dim = spec.dim;
    if (n == 0) { throw ContractViolation("cut pursuit: empty graph"); }
    if (!(options.tol_dir >= 0.0) || !(options.tol_x >= 0.0) || options.max_iter < 1
        || options.reduced_max_iter < 1 || !(options.reduced_tol_factor > 0.0)) {
        throw ContractViolation("cut pursuit: invalid options");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const double reduced_tol = options.reduced_tol();

    Solution sol;
    sol.partition = options.initial_partition ? *options.initial_partition
        : refine_partition(spec.graph, Partition::single(n),
              std::vector<double>(n, 0.0), 1, 0.0);
    if (sol.partition.vertex_count() != n || !sol.partition.is_valid(spec.graph)) {
        throw ContractViolation("cut pursuit: initial partition is not a partition "
            "of the graph into connected components");
    }
    sol.xi = multi_feasible_start(spec, sol.partition);

    SplittingOptions sopt;
    sopt.tol = reduced_tol;
    sopt.max_iter = options.reduced_max_iter;
    sopt.exec = options.exec;

    std::vector<double> previous;
    for (std::size_t it = 1; ; it++) {
        SplittingResult res = solve_multi_reduced(spec, sol.partition, sol.xi, sopt);
        sol.xi = std::move(res.xi);
        if (!res.converged) {
            sol.trace.warnings.push_back("iteration " + std::to_string(it)
                + ": reduced solve stopped at max_iter with relative evolution "
                + std::to_string(res.evolution));
        }

        const double adaptive = 10.0 * reduced_tol * max_abs(sol.xi);
        const double eps_snap = options.eps_snap.value_or(adaptive);
        for (std::size_t c = 0; c < sol.partition.size(); c++) {
            spec.nonsmooth[sol.partition.component(c)[0]]->snap(
                std::span<double>(sol.xi).subspan(c * dim, dim), eps_snap);
        }
        const double merge_eps = options.merge_eps.value_or(adaptive);
        if (merge_eps > 0.0) {
            auto [merged, values] = merge_close_components(spec.graph, sol.partition,
                sol.xi, dim, merge_eps);
            if (merged.size() != sol.partition.size()) {
                sol.partition = std::move(merged);
                sol.xi = std::move(values);
            }
        }

        sol.x = lift(sol.partition, sol.xi, dim, options.exec);
        if (observer.on_iterate) { observer.on_iterate(sol.x, sol.partition); }
        const double eps_eq = options.eps_eq.value_or(adaptive);
        const ExpansionResult dir = alpha_expansion_direction(spec, sol.x,
            candidate_directions(sol.x, dim), eps_eq);
        if (observer.on_direction) { observer.on_direction(dir); }

        TraceRecord rec;
        rec.iter = it;
        rec.objective = multi_objective(spec, sol.x).value();
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

        Partition refined = refine_partition(spec.graph, sol.partition, dir.d, dim, 0.0);
        std::vector<double> inherited(refined.size() * dim);
        for (std::size_t c = 0; c < refined.size(); c++) {
            const std::size_t parent = sol.partition.component_of(refined.component(c)[0]);
            std::copy_n(sol.xi.begin() + static_cast<std::ptrdiff_t>(parent * dim), dim,
                inherited.begin() + static_cast<std::ptrdiff_t>(c * dim));
        }
        sol.partition = std::move(refined);
        sol.xi = std::move(inherited);
    }
    return sol;
}

BaselineResult multi_baseline_solve(const MultiProblemSpec& spec,
    const BaselineOptions& options)
{
    spec.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const Partition singletons = Partition::singletons(spec.vertex_count());
    const std::vector<double> start = multi_feasible_start(spec, singletons);

    BaselineResult out;
    auto record = [&](std::size_t iter, std::span<const double> x) {
        TraceRecord r;
        r.iter = iter;
        r.objective = multi_objective(spec, x).value();
        r.components = count_multi_components(spec.graph, x, spec.dim,
            options.component_eps * max_abs(x));
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
    SplittingResult res = solve_multi_reduced(spec, singletons, start, sopt);

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
