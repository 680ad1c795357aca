/*=============================================================================
 * Vector-valued cut pursuit: K values per vertex, l1 total variation
 *
 *     F(p) = f(p) + sum_v g_v(p_v) + sum_{(u,v) in E} w_uv ||p_u - p_v||_1
 *
 * with descent directions restricted to a finite candidate set per vertex.
 * On an edge, coordinates with |p_uk - p_vk| <= eps_eq contribute
 * w |d_uk - d_vk| to F'(p, d), the others w sign(p_uk - p_vk)(d_uk - d_vk).
 *===========================================================================*/
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cutpursuit/driver.hpp"
#include "cutpursuit/functional.hpp"

namespace cutpursuit {

/* g: R^K -> ]-inf, +inf] */
class VectorTerm {
public:
    virtual ~VectorTerm() = default;

    virtual ExtendedReal value(std::span<const double> p) const = 0;
    /* g'(p, d) */
    virtual ExtendedReal dir_deriv(std::span<const double> p,
        std::span<const double> d) const = 0;
    /* in place, argmin_s g(s) + ||s - p||^2 / (2 step) */
    virtual void prox(std::span<double> p, double step) const = 0;
    /* pull p onto nearby nonsmooth points */
    virtual void snap(std::span<double>, double) const {}
    /* a feasible point, used to initialize components */
    virtual std::vector<double> feasible_point(std::size_t dim) const = 0;
    virtual std::string kind() const = 0;
};

using VectorTermPtr = std::shared_ptr<const VectorTerm>;

/* indicator of the simplex; membership within 1e-8 */
class SimplexIndicator final : public VectorTerm {
public:
    ExtendedReal value(std::span<const double> p) const override;
    ExtendedReal dir_deriv(std::span<const double> p,
        std::span<const double> d) const override;
    void prox(std::span<double> p, double step) const override;
    /* coordinates <= eps set to 0, then renormalized */
    void snap(std::span<double> p, double eps) const override;
    std::vector<double> feasible_point(std::size_t dim) const override;
    std::string kind() const override { return "simplex"; }
};

VectorTermPtr simplex_indicator();

/* Euclidean projection onto the simplex, in place */
void project_simplex(std::span<double> p);

/* sum_v KL(beta u + (1 - beta) q_v, beta u + (1 - beta) p_v) */
class KLFidelity final : public SmoothTerm {
public:
    /* q vertex-major, vertex_count x dim, each row in the simplex */
    KLFidelity(std::vector<double> q, std::size_t dim, double beta);

    std::size_t vertex_count() const override { return q_.size() / dim_; }
    std::size_t dimension() const override { return dim_; }
    double value(std::span<const double> p) const override;
    void gradient(std::span<const double> p, std::span<double> grad) const override;
    /* (1 - beta)^2 (K / beta)^2 max_k sum_{v in C} r_vk, using
     * beta u + (1 - beta) p >= beta / K on the simplex */
    std::vector<double> curvature_bound(const Partition& partition) const override;

    std::span<const double> reference() const { return q_; }
    double beta() const { return beta_; }

private:
    std::vector<double> q_;
    std::vector<double> r_;
    std::size_t dim_;
    double beta_;
};

struct MultiProblemSpec {
    WeightedGraph graph;
    std::size_t dim = 1;
    std::shared_ptr<const SmoothTerm> smooth;
    std::vector<VectorTermPtr> nonsmooth;

    std::size_t vertex_count() const { return graph.vertex_count(); }
    void validate() const;
};

ExtendedReal multi_objective(const MultiProblemSpec& spec, std::span<const double> p);

/* sum_e w_e ||p_u - p_v||_1 */
double multi_total_variation(const WeightedGraph& graph, std::span<const double> p,
    std::size_t dim);

/* per-vertex linear slopes s_v = grad_v f + sum over unequal edge
 * coordinates of w sign(p_vk - p_uk) e_k, and per edge and coordinate the
 * equality mask */
struct MultiSlopes {
    std::size_t dim = 1;
    std::vector<double> slope;  // vertex_count x dim
    std::vector<char> equal;    // edge_count x dim
};

MultiSlopes multi_slopes(const MultiProblemSpec& spec, std::span<const double> p,
    double eps_eq);

/* delta(p, d_v) = <s_v, d_v> + g_v'(p_v, d_v) */
ExtendedReal vertex_delta(const MultiProblemSpec& spec, const MultiSlopes& slopes,
    std::span<const double> p, index_t v, std::span<const double> d_v);

/* w sum over equal coordinates of |a_k - b_k| */
double edge_energy(const MultiSlopes& slopes, const Edge& edge, std::size_t e,
    std::span<const double> a, std::span<const double> b);

ExtendedReal multi_dir_deriv_from_slopes(const MultiProblemSpec& spec,
    const MultiSlopes& slopes, std::span<const double> p, std::span<const double> d);

ExtendedReal multi_dir_deriv(const MultiProblemSpec& spec, std::span<const double> p,
    std::span<const double> d, double eps_eq);

/* D_v = {0} u {1_k - 1_{k_v} : k != k_v}, k_v the first maximizing label */
struct CandidateDirections {
    std::size_t dim = 1;
    std::vector<index_t> top; // k_v

    std::size_t size(index_t) const { return dim; }
    /* candidate j of vertex v: j = 0 is the zero direction, j >= 1 moves
     * mass from k_v to label (k_v + j) mod K */
    std::vector<double> direction(index_t v, std::size_t j) const;
};

CandidateDirections candidate_directions(std::span<const double> p, std::size_t dim);

struct BinaryMove {
    std::vector<double> d;       // vertex_count x dim
    std::vector<char> moved;     // per vertex, 1 when d_v = dbar_v
    ExtendedReal value;          // F'(p, d)
};

/* minimizer of F'(p, .) over prod_v {0, dbar_v} by one cut; a vertex whose
 * delta is +inf stays at 0 */
BinaryMove binary_move_cut(const MultiProblemSpec& spec, std::span<const double> p,
    std::span<const double> dbar, double eps_eq);

struct ExpansionMove {
    std::size_t offset;
    double energy_before;
    double energy_after;
    bool accepted;
    std::size_t truncated_pairs;
};

struct ExpansionResult {
    std::vector<double> d;
    std::vector<index_t> choice; // per vertex, candidate index
    ExtendedReal value;
    std::vector<ExpansionMove> moves;
};

/* one cycle of K - 1 expansion moves from d = 0; move j offers every vertex
 * the candidate j, keeps the move only if F'(p, d) does not increase;
 * non-submodular pairs are truncated by raising E(0, 1) */
ExpansionResult alpha_expansion_direction(const MultiProblemSpec& spec,
    std::span<const double> p, const CandidateDirections& candidates, double eps_eq);

/* called after every lift (values, current partition) and every direction */
struct MultiObserver {
    std::function<void(std::span<const double> p, const Partition&)> on_iterate;
    std::function<void(const ExpansionResult&)> on_direction;
};

/* options.direction_method is ignored */
Solution cut_pursuit_multidim(const MultiProblemSpec& spec,
    const SolveOptions& options = {}, const MultiObserver& observer = {});

/* splitting on the singleton partition */
BaselineResult multi_baseline_solve(const MultiProblemSpec& spec,
    const BaselineOptions& options = {});

} // namespace cutpursuit
