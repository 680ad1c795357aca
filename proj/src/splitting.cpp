#include "cutpursuit/splitting.hpp"

#include <algorithm>
#include <cmath>

#include "cutpursuit/errors.hpp"

namespace cutpursuit {

SplittingResult primal_dual_splitting(const SplittingModel& model,
    std::span<const double> xi_init, const SplittingOptions& options)
{
    const std::size_t n = model.component_count;
    const std::size_t dim = model.dim;
    if (xi_init.size() != n * dim || model.curvature.size() != n) {
        throw ContractViolation("splitting: inconsistent dimensions");
    }

    std::vector<double> degree(n, 0.0);
    std::vector<double> sigma(model.edges.size());
    for (std::size_t e = 0; e < model.edges.size(); e++) {
        const ReducedEdge& re = model.edges[e];
        degree[re.a] += re.omega;
        degree[re.b] += re.omega;
        sigma[e] = 0.5 / re.omega;
    }
    std::vector<double> tau(n);
    for (std::size_t c = 0; c < n; c++) {
        tau[c] = 1.0 / std::max(1.02 * (degree[c] + 0.5 * model.curvature[c]), 1e-12);
    }
    const auto incidence = kernels::Incidence::build(n, model.edges);

    SplittingResult res;
    res.xi.assign(xi_init.begin(), xi_init.end());
    std::vector<double> next(n * dim), grad(n * dim);
    std::vector<double> dual(model.edges.size() * dim, 0.0);
    std::vector<double> dual_prev(dual.size());

    for (std::size_t it = 1; it <= options.max_iter; it++) {
        model.gradient(res.xi, grad);
        kernels::primal_forward(options.exec, incidence, model.edges, dual, res.xi,
            grad, tau, dim, next);
        model.prox(next, tau);
        dual_prev = dual;
        kernels::dual_ascent(options.exec, model.edges, sigma, next, res.xi, dim, dual);
        /* a prox can pin the primal iterate while the dual still moves, so
         * both evolutions must be small */
        const auto primal = kernels::diff_norms(options.exec, next, res.xi);
        const auto dualn = kernels::diff_norms(options.exec, dual, dual_prev);
        const double primal_evo = primal.diff_sq == 0.0 ? 0.0
            : std::sqrt(primal.diff_sq / primal.ref_sq);
        const double dual_evo = std::sqrt(dualn.diff_sq / std::max(dualn.ref_sq, 1.0));
        res.evolution = std::max(primal_evo, dual_evo);
        res.xi.swap(next);
        res.iterations = it;

        if (options.checkpoint && it % std::max<std::size_t>(options.checkpoint_every, 1) == 0
            && options.checkpoint(it, res.xi)) {
            res.stopped_by_checkpoint = true;
            break;
        }
        if (res.evolution <= options.tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

} // namespace cutpursuit
