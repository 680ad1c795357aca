/*=============================================================================
 * The reduced problem over a partition V = U_1 u ... u U_n:
 *
 *     min_xi  f(sum_c xi_c 1_{U_c}) + sum_c gamma_c(xi_c)
 *             + sum_{(c,c')} omega_{cc'} |xi_c - xi_c'|
 *
 * with gamma_c = sum_{v in U_c} g_v and omega the summed crossing weights,
 * and the full-graph reference solver (singleton partition).
 *===========================================================================*/
#pragma once

#include <optional>
#include <span>
#include <vector>

#include "cutpursuit/functional.hpp"
#include "cutpursuit/splitting.hpp"
#include "cutpursuit/trace.hpp"

namespace cutpursuit {

/* x_v = xi_{component(v)}, dim values per vertex */
std::vector<double> lift(const Partition& partition, std::span<const double> xi,
    std::size_t dim = 1, kernels::Exec exec = kernels::Exec::parallel);

ExtendedReal reduced_objective(const ProblemSpec& spec, const Partition& partition,
    std::span<const double> xi);

/* per component, the projection of 0 onto the intersection of the members'
 * domains; InfeasibleProblem when an intersection is empty */
std::vector<double> feasible_start(const ProblemSpec& spec, const Partition& partition);

/* clamp each xi_c onto the intersection of its members' domains */
void project_onto_domains(const ProblemSpec& spec, const Partition& partition,
    std::span<double> xi);

SplittingResult solve_reduced(const ProblemSpec& spec, const Partition& partition,
    std::span<const double> xi_init, const SplittingOptions& options);

struct BaselineOptions {
    double tol = 1e-10;
    std::size_t max_iter = 1000000;
    kernels::Exec exec = kernels::Exec::parallel;
    std::size_t checkpoint_every = 10;
    /* stop as soon as the objective at a checkpoint is <= this value */
    std::optional<double> target_objective;
    /* equality tolerance, relative to max |x|, for counting constant
     * components in the trace */
    double component_eps = 1e-6;
};

struct BaselineResult {
    std::vector<double> x;
    SolveTrace trace;
    std::size_t iterations = 0;
    bool converged = false;
};

BaselineResult baseline_solve(const ProblemSpec& spec, const BaselineOptions& options = {});

/* number of constant connected components of x (equality within eps) */
std::size_t count_constant_components(const WeightedGraph& graph,
    std::span<const double> x, double eps);

} // namespace cutpursuit
