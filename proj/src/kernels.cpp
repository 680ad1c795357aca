#include "cutpursuit/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cutpursuit::kernels {

namespace {

bool go_parallel(Exec exec, std::size_t n)
{
#ifdef _OPENMP
    return exec == Exec::parallel && n >= kParallelThreshold
        && omp_get_max_threads() > 1;
#else
    (void) exec; (void) n;
    return false;
#endif
}

using sidx = std::ptrdiff_t; // OpenMP loop index

} // namespace

int max_threads()
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_threads(int n)
{
#ifdef _OPENMP
    if (n > 0) { omp_set_num_threads(n); }
#else
    (void) n;
#endif
}

void gemv(Exec exec, std::span<const double> a, std::size_t rows,
    std::size_t cols, std::span<const double> x, std::span<double> y)
{
    const sidx n = static_cast<sidx>(rows);
    auto row = [&](sidx i) {
        const double* ai = a.data() + static_cast<std::size_t>(i) * cols;
        double s = 0.0;
        for (std::size_t j = 0; j < cols; j++) { s += ai[j] * x[j]; }
        y[i] = s;
    };
    if (go_parallel(exec, rows * cols)) {
        #pragma omp parallel for schedule(static)
        for (sidx i = 0; i < n; i++) { row(i); }
    } else {
        for (sidx i = 0; i < n; i++) { row(i); }
    }
}

void gemv_t(Exec exec, std::span<const double> a, std::size_t rows,
    std::size_t cols, std::span<const double> x, std::span<double> y)
{
    const sidx n = static_cast<sidx>(cols);
    if (go_parallel(exec, rows * cols)) {
        /* column blocks keep the row-major reads contiguous per thread */
        #pragma omp parallel for schedule(static)
        for (sidx j = 0; j < n; j++) {
            double s = 0.0;
            for (std::size_t i = 0; i < rows; i++) { s += a[i * cols + j] * x[i]; }
            y[j] = s;
        }
    } else {
        std::fill(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(cols), 0.0);
        for (std::size_t i = 0; i < rows; i++) {
            const double* ai = a.data() + i * cols;
            const double xi = x[i];
            for (std::size_t j = 0; j < cols; j++) { y[j] += ai[j] * xi; }
        }
    }
}

void component_sums(Exec exec, const Partition& partition,
    std::span<const double> v, std::size_t dim, std::span<double> out)
{
    const sidx n = static_cast<sidx>(partition.size());
    auto comp = [&](sidx c) {
        for (std::size_t k = 0; k < dim; k++) {
            double s = 0.0;
            for (index_t u : partition.component(c)) { s += v[u * dim + k]; }
            out[c * dim + k] = s;
        }
    };
    if (go_parallel(exec, partition.vertex_count() * dim)
        && partition.size() > 1) {
        #pragma omp parallel for schedule(dynamic, 16)
        for (sidx c = 0; c < n; c++) { comp(c); }
    } else {
        for (sidx c = 0; c < n; c++) { comp(c); }
    }
}

void lift(Exec exec, const Partition& partition, std::span<const double> xi,
    std::size_t dim, std::span<double> out)
{
    const sidx n = static_cast<sidx>(partition.vertex_count());
    auto lift_one = [&](sidx u) {
        const std::size_t c = partition.component_of(static_cast<index_t>(u));
        for (std::size_t k = 0; k < dim; k++) { out[u * dim + k] = xi[c * dim + k]; }
    };
    if (go_parallel(exec, partition.vertex_count() * dim)) {
        #pragma omp parallel for schedule(static)
        for (sidx u = 0; u < n; u++) { lift_one(u); }
    } else {
        for (sidx u = 0; u < n; u++) { lift_one(u); }
    }
}

double reduced_tv(Exec exec, std::span<const ReducedEdge> edges,
    std::span<const double> xi, std::size_t dim)
{
    const sidx n = static_cast<sidx>(edges.size());
    auto term = [&](sidx e) {
        const ReducedEdge& re = edges[e];
        double s = 0.0;
        for (std::size_t k = 0; k < dim; k++) {
            s += std::abs(xi[re.a * dim + k] - xi[re.b * dim + k]);
        }
        return re.omega * s;
    };
    double total = 0.0;
    if (go_parallel(exec, edges.size() * dim)) {
        #pragma omp parallel for schedule(static) reduction(+:total)
        for (sidx e = 0; e < n; e++) { total += term(e); }
    } else {
        for (sidx e = 0; e < n; e++) { total += term(e); }
    }
    return total;
}

Incidence Incidence::build(std::size_t n, std::span<const ReducedEdge> edges)
{
    Incidence inc;
    inc.first.assign(n + 1, 0);
    for (const ReducedEdge& e : edges) { inc.first[e.a + 1]++; inc.first[e.b + 1]++; }
    for (std::size_t c = 0; c < n; c++) { inc.first[c + 1] += inc.first[c]; }
    inc.entries.resize(2 * edges.size());
    std::vector<std::size_t> fill(inc.first.begin(), inc.first.end() - 1);
    for (index_t e = 0; e < edges.size(); e++) {
        inc.entries[fill[edges[e].a]++] = {e, 1.0};
        inc.entries[fill[edges[e].b]++] = {e, -1.0};
    }
    return inc;
}

void primal_forward(Exec exec, const Incidence& incidence,
    std::span<const ReducedEdge> edges, std::span<const double> dual,
    std::span<const double> xi, std::span<const double> grad,
    std::span<const double> tau, std::size_t dim, std::span<double> out)
{
    const sidx n = static_cast<sidx>(incidence.first.size() - 1);
    auto comp = [&](sidx c) {
        for (std::size_t k = 0; k < dim; k++) {
            double kty = 0.0;
            for (std::size_t i = incidence.first[c]; i < incidence.first[c + 1]; i++) {
                const auto& en = incidence.entries[i];
                kty += en.sign * edges[en.edge].omega * dual[en.edge * dim + k];
            }
            out[c * dim + k] = xi[c * dim + k] - tau[c] * (grad[c * dim + k] + kty);
        }
    };
    if (go_parallel(exec, (incidence.entries.size() + static_cast<std::size_t>(n)) * dim)) {
        #pragma omp parallel for schedule(static)
        for (sidx c = 0; c < n; c++) { comp(c); }
    } else {
        for (sidx c = 0; c < n; c++) { comp(c); }
    }
}

void dual_ascent(Exec exec, std::span<const ReducedEdge> edges,
    std::span<const double> sigma, std::span<const double> xi_new,
    std::span<const double> xi_old, std::size_t dim, std::span<double> dual)
{
    const sidx n = static_cast<sidx>(edges.size());
    auto edge = [&](sidx e) {
        const ReducedEdge& re = edges[e];
        for (std::size_t k = 0; k < dim; k++) {
            const double za = 2.0 * xi_new[re.a * dim + k] - xi_old[re.a * dim + k];
            const double zb = 2.0 * xi_new[re.b * dim + k] - xi_old[re.b * dim + k];
            double& y = dual[e * dim + k];
            y = std::clamp(y + sigma[e] * re.omega * (za - zb), -1.0, 1.0);
        }
    };
    if (go_parallel(exec, edges.size() * dim)) {
        #pragma omp parallel for schedule(static)
        for (sidx e = 0; e < n; e++) { edge(e); }
    } else {
        for (sidx e = 0; e < n; e++) { edge(e); }
    }
}

DiffNorms diff_norms(Exec exec, std::span<const double> a,
    std::span<const double> b)
{
    const sidx n = static_cast<sidx>(a.size());
    double d2 = 0.0, r2 = 0.0;
    if (go_parallel(exec, a.size())) {
        #pragma omp parallel for schedule(static) reduction(+:d2, r2)
        for (sidx i = 0; i < n; i++) {
            const double d = a[i] - b[i];
            d2 += d * d;
            r2 += a[i] * a[i];
        }
    } else {
        for (sidx i = 0; i < n; i++) {
            const double d = a[i] - b[i];
            d2 += d * d;
            r2 += a[i] * a[i];
        }
    }
    return {d2, r2};
}

} // namespace cutpursuit::kernels
