/*=============================================================================
 * Cut pursuit: alternate between solving the problem reduced to the current
 * partition and refining the partition along a steepest ternary direction,
 * until no ternary direction decreases F or the iterate stops moving.
 *===========================================================================*/
#pragma once

#include <optional>
#include <vector>

#include "cutpursuit/direction.hpp"
#include "cutpursuit/reduced.hpp"
#include "cutpursuit/trace.hpp"

namespace cutpursuit {

struct SolveOptions {
    double tol_dir = 1e-6;   // stop when -F'(x, d) <= tol_dir
    double tol_x = 1e-6;     // stop when ||x_k - x_{k-1}|| <= tol_x ||x_k||
    /* unset: 10 * reduced tolerance * max |x| */
    std::optional<double> eps_eq;
    std::optional<double> eps_snap;
    std::optional<double> merge_eps;
    std::size_t max_iter = 50;
    double reduced_tol_factor = 1e-3; // reduced tolerance = tol_x * factor
    std::size_t reduced_max_iter = 10000;
    std::optional<Partition> initial_partition;
    DirectionMethod direction_method = DirectionMethod::two_cuts;
    kernels::Exec exec = kernels::Exec::parallel;

    /* tol_x * reduced_tol_factor, or 1e-9 when tol_x is 0 */
    double reduced_tol() const;
};

struct Solution {
    std::vector<double> x;   // dim values per vertex
    Partition partition;
    std::vector<double> xi;  // dim values per component
    SolveTrace trace;
    std::size_t iterations = 0;
};

/* InfeasibleProblem when the initial components have no common feasible
 * value; ContractViolation on an empty graph or inconsistent problem */
Solution cut_pursuit(const ProblemSpec& spec, const SolveOptions& options = {});

/* relative l2 evolution ||a - b|| / ||a|| (0 when a = b) */
double relative_evolution(std::span<const double> a, std::span<const double> b);

} // namespace cutpursuit
