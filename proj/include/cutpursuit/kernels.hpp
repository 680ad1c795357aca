/*=============================================================================
 * Data-parallel inner loops of the solvers. Every kernel has a serial
 * reference path and an OpenMP path selected by Exec; both compute the same
 * quantities (reductions may differ in summation order only).
 *===========================================================================*/
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cutpursuit/graph.hpp"

namespace cutpursuit::kernels {

enum class Exec { serial, parallel };

/* loops shorter than this stay serial even under Exec::parallel */
inline constexpr std::size_t kParallelThreshold = 512;

int max_threads();
void set_threads(int n);

/* y = A x, A dense row-major rows x cols */
void gemv(Exec exec, std::span<const double> a, std::size_t rows,
    std::size_t cols, std::span<const double> x, std::span<double> y);

/* y = A^T x */
void gemv_t(Exec exec, std::span<const double> a, std::size_t rows,
    std::size_t cols, std::span<const double> x, std::span<double> y);

/* out[c] = sum of v[u] over u in component c, per coordinate (chain rule of
 * the lifting operator) */
void component_sums(Exec exec, const Partition& partition,
    std::span<const double> v, std::size_t dim, std::span<double> out);

/* out[u] = xi[component(u)], per coordinate */
void lift(Exec exec, const Partition& partition, std::span<const double> xi,
    std::size_t dim, std::span<double> out);

/* sum_e omega_e ||xi_a - xi_b||_1 */
double reduced_tv(Exec exec, std::span<const ReducedEdge> edges,
    std::span<const double> xi, std::size_t dim);

/* signed incidence of reduced edges, by component */
struct Incidence {
    std::vector<std::size_t> first; // size n + 1
    struct Entry {
        index_t edge;
        double sign; // +1 if component is edge.a, -1 if edge.b
    };
    std::vector<Entry> entries;

    static Incidence build(std::size_t n, std::span<const ReducedEdge> edges);
};

/* out_c = xi_c - tau_c (grad_c + sum_e sign omega_e y_e) */
void primal_forward(Exec exec, const Incidence& incidence,
    std::span<const ReducedEdge> edges, std::span<const double> dual,
    std::span<const double> xi, std::span<const double> grad,
    std::span<const double> tau, std::size_t dim, std::span<double> out);

/* y_e <- clip(y_e + sigma_e omega_e ((2 xi_new - xi_old)_a - (...)_b), -1, 1) */
void dual_ascent(Exec exec, std::span<const ReducedEdge> edges,
    std::span<const double> sigma, std::span<const double> xi_new,
    std::span<const double> xi_old, std::size_t dim, std::span<double> dual);

struct DiffNorms {
    double diff_sq; // ||a - b||^2
    double ref_sq;  // ||a||^2
};
DiffNorms diff_norms(Exec exec, std::span<const double> a,
    std::span<const double> b);

} // namespace cutpursuit::kernels
