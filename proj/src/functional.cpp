#include "cutpursuit/functional.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cutpursuit/errors.hpp"

namespace cutpursuit {

/* -------------------------------------------------------------------------
 * Nonsmooth terms
 * ---------------------------------------------------------------------- */

double NonsmoothTerm::prox(double t, double step) const
{
    const NonsmoothTerm* self = this;
    return bisection_aggregate_prox(t, step, {&self, 1});
}

AbsBoxTerm::AbsBoxTerm(std::string kind, double weight, double lo, double hi)
    : kind_(std::move(kind)), weight_(weight), lo_(lo), hi_(hi)
{
    if (!(weight >= 0.0) || !std::isfinite(weight)) {
        throw ContractViolation(kind_ + ": weight must be finite and nonnegative");
    }
    if (std::isnan(lo) || std::isnan(hi) || lo > hi) {
        throw ContractViolation(kind_ + ": empty interval");
    }
}

ExtendedReal AbsBoxTerm::value(double t) const
{
    if (t < lo_ || t > hi_) { return ExtendedReal::plus_infinity(); }
    return weight_ * std::abs(t);
}

ExtendedReal AbsBoxTerm::dd_plus(double t) const
{
    if (t >= hi_) { return ExtendedReal::plus_infinity(); }
    return t >= 0.0 ? weight_ : -weight_;
}

ExtendedReal AbsBoxTerm::dd_minus(double t) const
{
    if (t <= lo_) { return ExtendedReal::plus_infinity(); }
    return t <= 0.0 ? weight_ : -weight_;
}

double AbsBoxTerm::closed_form_prox(double t, double step, double weight,
    Interval box)
{
    const double thr = step * weight;
    double s = t > thr ? t - thr : (t < -thr ? t + thr : 0.0);
    return box.clamp(s);
}

double AbsBoxTerm::prox(double t, double step) const
{
    return closed_form_prox(t, step, weight_, {lo_, hi_});
}

std::vector<double> AbsBoxTerm::kinks() const
{
    std::vector<double> k;
    if (weight_ > 0.0 && lo_ <= 0.0 && 0.0 <= hi_) { k.push_back(0.0); }
    if (std::isfinite(lo_)) { k.push_back(lo_); }
    if (std::isfinite(hi_) && hi_ != lo_) { k.push_back(hi_); }
    return k;
}

TermPtr zero_term()
{
    static const TermPtr zero = std::make_shared<AbsBoxTerm>("zero", 0.0, -kInf, kInf);
    return zero;
}

TermPtr weighted_abs(double lambda)
{
    return std::make_shared<AbsBoxTerm>("weighted_abs", lambda, -kInf, kInf);
}

TermPtr nonneg_indicator()
{
    static const TermPtr nonneg = std::make_shared<AbsBoxTerm>("nonneg", 0.0, 0.0, kInf);
    return nonneg;
}

TermPtr weighted_abs_nonneg(double lambda)
{
    return std::make_shared<AbsBoxTerm>("weighted_abs_nonneg", lambda, 0.0, kInf);
}

TermPtr box_indicator(double lo, double hi)
{
    return std::make_shared<AbsBoxTerm>("box", 0.0, lo, hi);
}

Interval aggregate_domain(std::span<const NonsmoothTerm* const> members)
{
    Interval dom;
    for (const NonsmoothTerm* g : members) {
        Interval d = g->domain();
        dom.lo = std::max(dom.lo, d.lo);
        dom.hi = std::min(dom.hi, d.hi);
    }
    return dom;
}

double aggregate_prox(double t, double step,
    std::span<const NonsmoothTerm* const> members)
{
    double weight = 0.0;
    for (const NonsmoothTerm* g : members) {
        const auto* builtin = dynamic_cast<const AbsBoxTerm*>(g);
        if (!builtin) { return bisection_aggregate_prox(t, step, members); }
        weight += builtin->weight();
    }
    Interval dom = aggregate_domain(members);
    if (dom.empty()) {
        throw InfeasibleProblem("aggregate prox: member domains do not intersect");
    }
    return AbsBoxTerm::closed_form_prox(t, step, weight, dom);
}

double bisection_aggregate_prox(double t, double step,
    std::span<const NonsmoothTerm* const> members)
{
    const Interval dom = aggregate_domain(members);
    if (dom.empty()) {
        throw InfeasibleProblem("aggregate prox: member domains do not intersect");
    }
    /* right derivative of s -> sum g(s) + (s - t)^2 / (2 step), nondecreasing
     * for convex members; the prox is the leftmost point where it is >= 0 */
    auto slope = [&](double s) {
        ExtendedReal r = (s - t) / step;
        for (const NonsmoothTerm* g : members) { r += g->dd_plus(s); }
        return r.value();
    };

    double lo, hi;
    if (std::isfinite(dom.lo)) {
        if (slope(dom.lo) >= 0.0) { return dom.lo; }
        lo = dom.lo;
    } else {
        double span = 1.0;
        lo = std::min(t, dom.hi) - span;
        while (slope(lo) >= 0.0) { span *= 2.0; lo = std::min(t, dom.hi) - span; }
    }
    if (std::isfinite(dom.hi)) {
        if (slope(dom.hi) < 0.0) { return dom.hi; }
        hi = dom.hi;
    } else {
        double span = 1.0;
        hi = std::max(t, lo) + span;
        while (slope(hi) < 0.0) { span *= 2.0; hi = std::max(t, lo) + span; }
    }
    for (int it = 0; it < 400; it++) {
        if (hi - lo <= 1e-12 * std::max({1.0, std::abs(lo), std::abs(hi)})) { break; }
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) { break; }
        if (slope(mid) >= 0.0) { hi = mid; } else { lo = mid; }
    }
    return hi;
}

/* -------------------------------------------------------------------------
 * Smooth terms
 * ---------------------------------------------------------------------- */

void ZeroSmooth::gradient(std::span<const double>, std::span<double> grad) const
{
    std::fill(grad.begin(), grad.end(), 0.0);
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
    std::vector<Triplet> triplets)
{
    for (const Triplet& t : triplets) {
        if (t.i >= rows || t.j >= cols) {
            throw ContractViolation("sparse matrix: triplet index out of range");
        }
    }
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    SparseMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.row_start.assign(rows + 1, 0);
    for (std::size_t p = 0; p < triplets.size(); p++) {
        const Triplet& t = triplets[p];
        if (p > 0 && triplets[p - 1].i == t.i && triplets[p - 1].j == t.j) {
            m.val.back() += t.value; // duplicates accumulate
            continue;
        }
        m.col.push_back(static_cast<index_t>(t.j));
        m.val.push_back(t.value);
        m.row_start[t.i + 1]++;
    }
    for (std::size_t r = 0; r < rows; r++) { m.row_start[r + 1] += m.row_start[r]; }
    return m;
}

QuadraticFidelity QuadraticFidelity::identity(std::vector<double> y)
{
    QuadraticFidelity q;
    q.op_ = Operator::identity;
    q.cols_ = y.size();
    q.y_ = std::move(y);
    return q;
}

QuadraticFidelity QuadraticFidelity::dense(std::vector<double> y,
    std::vector<double> phi, std::size_t cols)
{
    if (phi.size() != y.size() * cols) {
        throw ContractViolation("quadratic fidelity: operator is not "
            + std::to_string(y.size()) + " x " + std::to_string(cols));
    }
    QuadraticFidelity q;
    q.op_ = Operator::dense;
    q.cols_ = cols;
    q.y_ = std::move(y);
    q.phi_ = std::move(phi);
    return q;
}

QuadraticFidelity QuadraticFidelity::sparse(std::vector<double> y, SparseMatrix phi)
{
    if (phi.rows != y.size()) {
        throw ContractViolation("quadratic fidelity: operator rows do not match "
            "observations");
    }
    QuadraticFidelity q;
    q.op_ = Operator::sparse;
    q.cols_ = phi.cols;
    q.y_ = std::move(y);
    q.sparse_ = std::move(phi);
    return q;
}

void QuadraticFidelity::apply(std::span<const double> x, std::span<double> out) const
{
    switch (op_) {
    case Operator::identity:
        std::copy(x.begin(), x.end(), out.begin());
        break;
    case Operator::dense:
        kernels::gemv(exec, phi_, y_.size(), cols_, x, out);
        break;
    case Operator::sparse:
        for (std::size_t i = 0; i < sparse_.rows; i++) {
            double s = 0.0;
            for (std::size_t p = sparse_.row_start[i]; p < sparse_.row_start[i + 1]; p++) {
                s += sparse_.val[p] * x[sparse_.col[p]];
            }
            out[i] = s;
        }
        break;
    }
}

double QuadraticFidelity::value(std::span<const double> x) const
{
    std::vector<double> r(y_.size());
    apply(x, r);
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); i++) {
        const double d = y_[i] - r[i];
        s += d * d;
    }
    return 0.5 * s;
}

void QuadraticFidelity::gradient(std::span<const double> x, std::span<double> grad) const
{
    std::vector<double> r(y_.size());
    apply(x, r);
    for (std::size_t i = 0; i < r.size(); i++) { r[i] -= y_[i]; }
    switch (op_) {
    case Operator::identity:
        std::copy(r.begin(), r.end(), grad.begin());
        break;
    case Operator::dense:
        kernels::gemv_t(exec, phi_, y_.size(), cols_, r, grad);
        break;
    case Operator::sparse:
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < sparse_.rows; i++) {
            for (std::size_t p = sparse_.row_start[i]; p < sparse_.row_start[i + 1]; p++) {
                grad[sparse_.col[p]] += sparse_.val[p] * r[i];
            }
        }
        break;
    }
}

std::vector<double> QuadraticFidelity::curvature_bound(const Partition& partition) const
{
    const std::size_t nc = partition.size();
    std::vector<double> bound(nc, 0.0);
    if (op_ == Operator::identity) {
        for (std::size_t c = 0; c < nc; c++) {
            bound[c] = static_cast<double>(partition.component(c).size());
        }
        return bound;
    }
    /* A = Phi P (rows x components), H = A^T A */
    const std::size_t rows = y_.size();
    std::vector<double> a(rows * nc, 0.0);
    if (op_ == Operator::dense) {
        for (std::size_t i = 0; i < rows; i++) {
            const double* phii = phi_.data() + i * cols_;
            double* ai = a.data() + i * nc;
            for (std::size_t v = 0; v < cols_; v++) {
                ai[partition.component_of(static_cast<index_t>(v))] += phii[v];
            }
        }
    } else {
        for (std::size_t i = 0; i < rows; i++) {
            for (std::size_t p = sparse_.row_start[i]; p < sparse_.row_start[i + 1]; p++) {
                a[i * nc + partition.component_of(sparse_.col[p])] += sparse_.val[p];
            }
        }
    }
    std::vector<double> h(nc * nc, 0.0);
    for (std::size_t i = 0; i < rows; i++) {
        const double* ai = a.data() + i * nc;
        for (std::size_t c = 0; c < nc; c++) {
            if (ai[c] == 0.0) { continue; }
            for (std::size_t c2 = 0; c2 < nc; c2++) { h[c * nc + c2] += ai[c] * ai[c2]; }
        }
    }
    /* scaled Gershgorin: H <= diag(sum_c' |H_cc'| sqrt(H_cc / H_c'c')) */
    for (std::size_t c = 0; c < nc; c++) {
        const double hcc = h[c * nc + c];
        if (hcc == 0.0) { continue; }
        double s = 0.0;
        for (std::size_t c2 = 0; c2 < nc; c2++) {
            const double hc2 = h[c2 * nc + c2];
            if (hc2 > 0.0) { s += std::abs(h[c * nc + c2]) * std::sqrt(hcc / hc2); }
        }
        bound[c] = s;
    }
    return bound;
}

namespace {

class LiftedSmooth final : public ReducedSmooth {
public:
    LiftedSmooth(const SmoothTerm& f, const Partition& partition, kernels::Exec exec)
        : f_(f), partition_(partition), exec_(exec),
          x_(partition.vertex_count() * f.dimension()), grad_(x_.size()) {}

    void gradient(std::span<const double> xi, std::span<double> grad) override
    {
        const std::size_t dim = f_.dimension();
        kernels::lift(exec_, partition_, xi, dim, x_);
        f_.gradient(x_, grad_);
        kernels::component_sums(exec_, partition_, grad_, dim, grad);
    }

private:
    const SmoothTerm& f_;
    Partition partition_;
    kernels::Exec exec_;
    std::vector<double> x_;
    std::vector<double> grad_;
};

/* grad_c = |U_c| xi_c - sum_{v in U_c} y_v */
class IdentityReduced final : public ReducedSmooth {
public:
    IdentityReduced(std::span<const double> y, const Partition& partition)
        : size_(partition.size()), ysum_(partition.size(), 0.0)
    {
        for (std::size_t c = 0; c < partition.size(); c++) {
            size_[c] = static_cast<double>(partition.component(c).size());
            for (index_t v : partition.component(c)) { ysum_[c] += y[v]; }
        }
    }

    void gradient(std::span<const double> xi, std::span<double> grad) override
    {
        for (std::size_t c = 0; c < size_.size(); c++) { grad[c] = size_[c] * xi[c] - ysum_[c]; }
    }

private:
    std::vector<double> size_;
    std::vector<double> ysum_;
};

/* grad = A^T (A xi - y) with A = Phi P */
class DenseReduced final : public ReducedSmooth {
public:
    DenseReduced(std::span<const double> phi, std::span<const double> y, std::size_t cols,
        const Partition& partition, kernels::Exec exec)
        : rows_(y.size()), nc_(partition.size()), exec_(exec), y_(y.begin(), y.end()),
          a_(rows_ * nc_, 0.0), r_(rows_)
    {
        for (std::size_t i = 0; i < rows_; i++) {
            const double* phii = phi.data() + i * cols;
            double* ai = a_.data() + i * nc_;
            for (std::size_t v = 0; v < cols; v++) {
                ai[partition.component_of(static_cast<index_t>(v))] += phii[v];
            }
        }
    }

    void gradient(std::span<const double> xi, std::span<double> grad) override
    {
        kernels::gemv(exec_, a_, rows_, nc_, xi, r_);
        for (std::size_t i = 0; i < rows_; i++) { r_[i] -= y_[i]; }
        kernels::gemv_t(exec_, a_, rows_, nc_, r_, grad);
    }

private:
    std::size_t rows_;
    std::size_t nc_;
    kernels::Exec exec_;
    std::vector<double> y_;
    std::vector<double> a_;
    std::vector<double> r_;
};

} // namespace

std::unique_ptr<ReducedSmooth> SmoothTerm::reduce(const Partition& partition,
    kernels::Exec exec) const
{
    return std::make_unique<LiftedSmooth>(*this, partition, exec);
}

std::unique_ptr<ReducedSmooth> QuadraticFidelity::reduce(const Partition& partition,
    kernels::Exec exec) const
{
    switch (op_) {
    case Operator::identity: return std::make_unique<IdentityReduced>(y_, partition);
    case Operator::dense:
        return std::make_unique<DenseReduced>(phi_, y_, cols_, partition, exec);
    case Operator::sparse: break;
    }
    return SmoothTerm::reduce(partition, exec);
}

/* -------------------------------------------------------------------------
 * Problem-level oracles
 * ---------------------------------------------------------------------- */

std::vector<const NonsmoothTerm*> ProblemSpec::members(
    std::span<const index_t> vertices) const
{
    std::vector<const NonsmoothTerm*> m;
    m.reserve(vertices.size());
    for (index_t v : vertices) { m.push_back(nonsmooth[v].get()); }
    return m;
}

void ProblemSpec::validate() const
{
    if (!smooth) { throw ContractViolation("problem: missing smooth term"); }
    if (smooth->vertex_count() != graph.vertex_count()) {
        throw ContractViolation("problem: smooth term has "
            + std::to_string(smooth->vertex_count()) + " variables for "
            + std::to_string(graph.vertex_count()) + " vertices");
    }
    if (nonsmooth.size() != graph.vertex_count()) {
        throw ContractViolation("problem: need one nonsmooth term per vertex");
    }
    for (const TermPtr& g : nonsmooth) {
        if (!g) { throw ContractViolation("problem: null nonsmooth term"); }
    }
}

double total_variation(const WeightedGraph& graph, std::span<const double> x)
{
    double tv = 0.0;
    for (const Edge& e : graph.edges()) { tv += e.w * std::abs(x[e.u] - x[e.v]); }
    return tv;
}

ExtendedReal objective(const ProblemSpec& spec, std::span<const double> x)
{
    if (x.size() != spec.vertex_count()) {
        throw ContractViolation("objective: point has wrong dimension");
    }
    ExtendedReal total = spec.smooth->value(x);
    for (std::size_t v = 0; v < x.size(); v++) {
        total += spec.nonsmooth[v]->value(x[v]);
        if (total.is_plus_infinity()) { return total; }
    }
    return total + total_variation(spec.graph, x);
}

std::vector<double> snap_nonsmooth(const ProblemSpec& spec,
    std::span<const double> x, double eps_snap)
{
    std::vector<double> out(x.begin(), x.end());
    for (std::size_t v = 0; v < out.size(); v++) {
        double best = eps_snap;
        for (double k : spec.nonsmooth[v]->kinks()) {
            const double dist = std::abs(x[v] - k);
            if (dist <= best) { best = dist; out[v] = k; }
        }
    }
    return out;
}

std::vector<char> equal_edges(const WeightedGraph& graph,
    std::span<const double> x, double eps_eq)
{
    std::vector<char> eq(graph.edge_count());
    for (std::size_t e = 0; e < eq.size(); e++) {
        const Edge& ed = graph.edge(e);
        eq[e] = std::abs(x[ed.u] - x[ed.v]) <= eps_eq;
    }
    return eq;
}

std::vector<VertexDeltas> vertex_deltas(const ProblemSpec& spec,
    std::span<const double> x, double eps_eq)
{
    const std::size_t n = spec.vertex_count();
    if (x.size() != n) {
        throw ContractViolation("vertex_deltas: point has wrong dimension");
    }
    std::vector<double> grad(n);
    spec.smooth->gradient(x, grad);
    /* differentiable part of the total variation */
    for (const Edge& e : spec.graph.edges()) {
        const double diff = x[e.u] - x[e.v];
        if (std::abs(diff) <= eps_eq) { continue; }
        const double s = diff > 0.0 ? e.w : -e.w;
        grad[e.u] += s;
        grad[e.v] -= s;
    }
    std::vector<VertexDeltas> deltas(n);
    for (std::size_t v = 0; v < n; v++) {
        const NonsmoothTerm& g = *spec.nonsmooth[v];
        if (g.value(x[v]).is_plus_infinity()) {
            throw ContractViolation("point not in domain (vertex "
                + std::to_string(v) + ")");
        }
        const ExtendedReal gp = g.dd_plus(x[v]);
        const ExtendedReal gm = g.dd_minus(x[v]);
        if (gp.is_minus_infinity() || gm.is_minus_infinity()) {
            throw ContractViolation("vertex_deltas: one-sided derivative equal "
                "to -inf at vertex " + std::to_string(v));
        }
        deltas[v].plus = ExtendedReal(grad[v]) + gp;
        deltas[v].minus = ExtendedReal(grad[v]) - gm;
    }
    return deltas;
}

ExtendedReal dir_deriv_from_deltas(const WeightedGraph& graph,
    std::span<const VertexDeltas> deltas, std::span<const char> equal,
    std::span<const double> d)
{
    ExtendedReal total = 0.0;
    for (std::size_t v = 0; v < deltas.size(); v++) {
        if (d[v] > 0.0) {
            total += d[v] * deltas[v].plus;
        } else if (d[v] < 0.0) {
            total += d[v] * deltas[v].minus;
        }
    }
    double coupling = 0.0;
    for (std::size_t e = 0; e < graph.edge_count(); e++) {
        if (!equal[e]) { continue; }
        const Edge& ed = graph.edge(e);
        coupling += ed.w * std::abs(d[ed.u] - d[ed.v]);
    }
    return total + coupling;
}

ExtendedReal dir_deriv(const ProblemSpec& spec, std::span<const double> x,
    std::span<const double> d, double eps_eq)
{
    if (d.size() != spec.vertex_count()) {
        throw ContractViolation("dir_deriv: direction has wrong dimension");
    }
    const auto deltas = vertex_deltas(spec, x, eps_eq);
    const auto eq = equal_edges(spec.graph, x, eps_eq);
    return dir_deriv_from_deltas(spec.graph, deltas, eq, d);
}

} // namespace cutpursuit
