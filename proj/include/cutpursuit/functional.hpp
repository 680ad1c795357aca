/*=============================================================================
 * Oracles for the objective
 *
 *     F(x) = f(x) + sum_v g_v(x_v) + sum_{(u,v) in E} w_uv |x_u - x_v|
 *
 * with f differentiable and each g_v directionally differentiable with
 * values in ]-inf, +inf], together with the one-sided slopes
 *
 *     delta+_v = grad_v f + g'_v(x_v, +1) + sum_{uv not in E=} w sign(x_v - x_u)
 *     delta-_v = grad_v f - g'_v(x_v, -1) + sum_{uv not in E=} w sign(x_v - x_u)
 *
 * from which the directional derivative of F is assembled.
 *===========================================================================*/
#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cutpursuit/extended_real.hpp"
#include "cutpursuit/graph.hpp"
#include "cutpursuit/kernels.hpp"

namespace cutpursuit {

struct Interval {
    double lo = -kInf;
    double hi = kInf;
    bool empty() const { return lo > hi; }
    bool contains(double t) const { return lo <= t && t <= hi; }
    double clamp(double t) const { return t < lo ? lo : (t > hi ? hi : t); }
};

/* scalar term g: R -> ]-inf, +inf]; user terms may be nonconvex, in which
 * case prox exactness is their own business */
class NonsmoothTerm {
public:
    virtual ~NonsmoothTerm() = default;

    virtual ExtendedReal value(double t) const = 0;
    /* g'(t, +1) and g'(t, -1), both in ]-inf, +inf] for t in dom g */
    virtual ExtendedReal dd_plus(double t) const = 0;
    virtual ExtendedReal dd_minus(double t) const = 0;
    /* argmin_s g(s) + (s - t)^2 / (2 step); the default bisects on the
     * one-sided optimality condition (convex g) */
    virtual double prox(double t, double step) const;
    /* points of nondifferentiability, used for snapping */
    virtual std::vector<double> kinks() const { return {}; }
    virtual Interval domain() const { return {}; }
    virtual std::string kind() const = 0;
};

using TermPtr = std::shared_ptr<const NonsmoothTerm>;

/* weight |t| + indicator of [lo, hi]; every built-in is of this form */
class AbsBoxTerm final : public NonsmoothTerm {
public:
    AbsBoxTerm(std::string kind, double weight, double lo, double hi);

    ExtendedReal value(double t) const override;
    ExtendedReal dd_plus(double t) const override;
    ExtendedReal dd_minus(double t) const override;
    double prox(double t, double step) const override;
    std::vector<double> kinks() const override;
    Interval domain() const override { return {lo_, hi_}; }
    std::string kind() const override { return kind_; }

    double weight() const { return weight_; }

    /* soft-threshold by step * weight, then clamp to [lo, hi] */
    static double closed_form_prox(double t, double step, double weight,
        Interval box);

private:
    std::string kind_;
    double weight_;
    double lo_;
    double hi_;
};

TermPtr zero_term();
TermPtr weighted_abs(double lambda);
TermPtr nonneg_indicator();
TermPtr weighted_abs_nonneg(double lambda);
TermPtr box_indicator(double lo, double hi);

/* intersection of the members' domains */
Interval aggregate_domain(std::span<const NonsmoothTerm* const> members);

/* prox of s -> sum_i g_i(s) at t; closed form when all members are built-ins,
 * bisection otherwise */
double aggregate_prox(double t, double step,
    std::span<const NonsmoothTerm* const> members);

/* generic route used by aggregate_prox for user terms; tolerance 1e-12 */
double bisection_aggregate_prox(double t, double step,
    std::span<const NonsmoothTerm* const> members);

/* xi -> f(lift(xi)) on a fixed partition, dim values per component */
class ReducedSmooth {
public:
    virtual ~ReducedSmooth() = default;
    virtual void gradient(std::span<const double> xi, std::span<double> grad) = 0;
};

/* smooth term over V x dim values stored vertex-major */
class SmoothTerm {
public:
    virtual ~SmoothTerm() = default;

    virtual std::size_t vertex_count() const = 0;
    virtual std::size_t dimension() const { return 1; }
    virtual double value(std::span<const double> x) const = 0;
    virtual void gradient(std::span<const double> x, std::span<double> grad) const = 0;
    /* per component, a diagonal majorizer D of the Hessian H of
     * xi -> f(lift(xi)), H <= diag(D) (max over coordinates) */
    virtual std::vector<double> curvature_bound(const Partition& partition) const = 0;
    /* the default lifts, takes the full gradient and sums it per component */
    virtual std::unique_ptr<ReducedSmooth> reduce(const Partition& partition,
        kernels::Exec exec) const;
};

class ZeroSmooth final : public SmoothTerm {
public:
    explicit ZeroSmooth(std::size_t vertex_count, std::size_t dim = 1)
        : vertex_count_(vertex_count), dim_(dim) {}
    std::size_t vertex_count() const override { return vertex_count_; }
    std::size_t dimension() const override { return dim_; }
    double value(std::span<const double>) const override { return 0.0; }
    void gradient(std::span<const double>, std::span<double> grad) const override;
    std::vector<double> curvature_bound(const Partition& partition) const override
    { return std::vector<double>(partition.size(), 0.0); }

private:
    std::size_t vertex_count_;
    std::size_t dim_;
};

/* sparse matrix in compressed rows */
struct SparseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_start; // rows + 1
    std::vector<index_t> col;
    std::vector<double> val;

    struct Triplet {
        std::size_t i;
        std::size_t j;
        double value;
    };
    static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
        std::vector<Triplet> triplets);
};

/* 1/2 ||y - Phi x||^2 with Phi the identity, a dense row-major matrix or a
 * sparse matrix */
class QuadraticFidelity final : public SmoothTerm {
public:
    enum class Operator { identity, dense, sparse };

    static QuadraticFidelity identity(std::vector<double> y);
    static QuadraticFidelity dense(std::vector<double> y, std::vector<double> phi,
        std::size_t cols);
    static QuadraticFidelity sparse(std::vector<double> y, SparseMatrix phi);

    std::size_t vertex_count() const override { return cols_; }
    double value(std::span<const double> x) const override;
    void gradient(std::span<const double> x, std::span<double> grad) const override;
    std::vector<double> curvature_bound(const Partition& partition) const override;
    /* identity: per-component sizes and sums of y; dense: Phi P precomputed */
    std::unique_ptr<ReducedSmooth> reduce(const Partition& partition,
        kernels::Exec exec) const override;

    Operator op() const { return op_; }
    std::span<const double> observations() const { return y_; }
    std::span<const double> dense_matrix() const { return phi_; }
    const SparseMatrix& sparse_matrix() const { return sparse_; }
    /* Phi x */
    void apply(std::span<const double> x, std::span<double> out) const;

    kernels::Exec exec = kernels::Exec::parallel;

private:
    QuadraticFidelity() = default;

    Operator op_ = Operator::identity;
    std::vector<double> y_;
    std::vector<double> phi_;
    SparseMatrix sparse_;
    std::size_t cols_ = 0;
};

/* the problem: graph (TV weights are the edge weights), smooth term and one
 * nonsmooth term per vertex. Initializing with the single component {V}
 * assumes the g_v domains intersect. */
struct ProblemSpec {
    WeightedGraph graph;
    std::shared_ptr<const SmoothTerm> smooth;
    std::vector<TermPtr> nonsmooth;

    std::size_t vertex_count() const { return graph.vertex_count(); }
    /* raw pointers of the terms of a vertex subset */
    std::vector<const NonsmoothTerm*> members(std::span<const index_t> vertices) const;
    /* throws ContractViolation on size mismatches or missing oracles */
    void validate() const;
};

ExtendedReal objective(const ProblemSpec& spec, std::span<const double> x);

/* graph total variation sum w |x_u - x_v| */
double total_variation(const WeightedGraph& graph, std::span<const double> x);

std::vector<double> snap_nonsmooth(const ProblemSpec& spec,
    std::span<const double> x, double eps_snap);

/* membership of each edge in E= (|x_u - x_v| <= eps_eq) */
std::vector<char> equal_edges(const WeightedGraph& graph,
    std::span<const double> x, double eps_eq);

struct VertexDeltas {
    ExtendedReal plus;
    ExtendedReal minus;
};

/* throws ContractViolation("point not in domain") when F(x) = +inf */
std::vector<VertexDeltas> vertex_deltas(const ProblemSpec& spec,
    std::span<const double> x, double eps_eq);

/* directional derivative assembled from precomputed slopes; coordinates
 * with d_v = 0 contribute nothing whatever the slope */
ExtendedReal dir_deriv_from_deltas(const WeightedGraph& graph,
    std::span<const VertexDeltas> deltas, std::span<const char> equal,
    std::span<const double> d);

ExtendedReal dir_deriv(const ProblemSpec& spec, std::span<const double> x,
    std::span<const double> d, double eps_eq);

} // namespace cutpursuit
