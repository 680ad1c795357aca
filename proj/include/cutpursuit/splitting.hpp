/*=============================================================================
 * Diagonally preconditioned primal-dual splitting for
 *
 *     min_xi  h(xi) + sum_c gamma_c(xi_c) + sum_e omega_e ||xi_a - xi_b||_1
 *
 * over dim values per component of a reduced graph. The TV term is handled
 * through one dual variable per reduced edge and coordinate, K_e = omega_e
 * (e_a - e_b), |y| <= 1:
 *
 *     xi+ = prox_{tau gamma}(xi - tau (grad h(xi) + K^T y))
 *     y   = clip(y + sigma K (2 xi+ - xi), -1, 1)
 *
 * with sigma_e = 1 / (2 omega_e) and 1 / tau_c = 1.02 (W_c + L_c / 2), W_c
 * the weighted degree and L_c a bound on the curvature of h along xi_c.
 * Iterations stop when the relative primal evolution and the dual evolution
 * (relative to max(1, ||y||)) are both below tol.
 *===========================================================================*/
#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "cutpursuit/graph.hpp"
#include "cutpursuit/kernels.hpp"

namespace cutpursuit {

struct SplittingModel {
    std::size_t component_count = 0;
    std::size_t dim = 1;
    std::span<const ReducedEdge> edges;
    /* per component */
    std::vector<double> curvature;
    std::function<void(std::span<const double> xi, std::span<double> grad)> gradient;
    /* in place, component c with step tau[c] */
    std::function<void(std::span<double> xi, std::span<const double> tau)> prox;
};

struct SplittingOptions {
    double tol = 1e-9;
    std::size_t max_iter = 10000;
    kernels::Exec exec = kernels::Exec::parallel;
    /* called every checkpoint_every iterations; returning true stops */
    std::function<bool(std::size_t iter, std::span<const double> xi)> checkpoint;
    std::size_t checkpoint_every = 1;
};

struct SplittingResult {
    std::vector<double> xi;
    std::size_t iterations = 0;
    bool converged = false;
    bool stopped_by_checkpoint = false;
    double evolution = 0.0; // last evolution measure
};

SplittingResult primal_dual_splitting(const SplittingModel& model,
    std::span<const double> xi_init, const SplittingOptions& options);

} // namespace cutpursuit
