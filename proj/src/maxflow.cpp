#include "cutpursuit/maxflow.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "cutpursuit/errors.hpp"
#include "cutpursuit/extended_real.hpp"

namespace cutpursuit {

FlowNetwork::FlowNetwork(std::size_t node_count, index_t source, index_t sink)
    : node_count_(node_count), source_(source), sink_(sink)
{
    if (source >= node_count || sink >= node_count || source == sink) {
        throw ContractViolation("flow network: invalid terminals");
    }
}

void FlowNetwork::add_arc(index_t from, index_t to, double capacity,
    double reverse_capacity)
{
    if (from >= node_count_ || to >= node_count_ || from == to) {
        throw ContractViolation("flow network: invalid arc endpoints");
    }
    if (!(capacity >= 0.0) || !(reverse_capacity >= 0.0)) {
        throw ContractViolation("flow network: capacities must be nonnegative, got "
            + std::to_string(capacity) + " and " + std::to_string(reverse_capacity));
    }
    arcs_.push_back({from, to, capacity, reverse_capacity});
}

double FlowNetwork::cut_value(std::span<const char> source_side) const
{
    double total = 0.0;
    for (const Arc& a : arcs_) {
        if (source_side[a.from] && !source_side[a.to]) { total += a.capacity; }
        if (source_side[a.to] && !source_side[a.from]) { total += a.reverse_capacity; }
    }
    return total;
}

namespace {

class BoykovKolmogorov {
public:
    explicit BoykovKolmogorov(std::size_t n)
        : first_(n, kNone), parent_(n, kNone), ts_(n, 0), dist_(n, 0),
          is_sink_(n, 0), in_queue_(n, 0), tr_cap_(n, 0.0)
    {}

    void add_terminal(int i, double to_source_side, double to_sink_side)
    {
        /* only the difference matters; the common part flows straight
         * through */
        const double common = std::min(to_source_side, to_sink_side);
        if (std::isinf(common)) {
            throw ContractViolation("max flow: infinite flow through a node");
        }
        flow_ += common;
        tr_cap_[i] += to_source_side - common;
        tr_cap_[i] -= to_sink_side - common;
    }

    void add_edge(int i, int j, double cap, double rev_cap)
    {
        const int a = static_cast<int>(head_.size());
        head_.push_back(j); next_.push_back(first_[i]); sister_.push_back(a + 1);
        r_cap_.push_back(cap);
        first_[i] = a;
        head_.push_back(i); next_.push_back(first_[j]); sister_.push_back(a);
        r_cap_.push_back(rev_cap);
        first_[j] = a + 1;
    }

    void add_constant_flow(double f)
    {
        if (std::isinf(f)) { throw ContractViolation("max flow: infinite source-sink arc"); }
        flow_ += f;
    }

    double run();
    bool source_side(int i) const { return parent_[i] != kNone && !is_sink_[i]; }

private:
    static constexpr int kNone = -1;
    static constexpr int kTerminal = -2;
    static constexpr int kOrphan = -3;
    static constexpr int kInfDist = std::numeric_limits<int>::max();

    void set_active(int i)
    {
        if (!in_queue_[i]) { in_queue_[i] = 1; active_.push_back(i); }
    }
    int next_active()
    {
        while (!active_.empty()) {
            const int i = active_.front();
            active_.pop_front();
            in_queue_[i] = 0;
            if (parent_[i] != kNone) { return i; }
        }
        return kNone;
    }
    void set_orphan_front(int i) { parent_[i] = kOrphan; orphans_.push_front(i); }
    void set_orphan_rear(int i) { parent_[i] = kOrphan; orphans_.push_back(i); }

    void augment(int middle);
    void process_orphan(int i, bool sink_tree);

    std::vector<int> first_, parent_, ts_, dist_;
    std::vector<char> is_sink_, in_queue_;
    std::vector<double> tr_cap_;
    std::vector<int> head_, next_, sister_;
    std::vector<double> r_cap_;
    std::deque<int> active_, orphans_;
    int time_ = 0;
    double flow_ = 0.0;
};

double BoykovKolmogorov::run()
{
    const int n = static_cast<int>(first_.size());
    for (int i = 0; i < n; i++) {
        if (tr_cap_[i] > 0.0) {
            is_sink_[i] = 0; parent_[i] = kTerminal; dist_[i] = 1; set_active(i);
        } else if (tr_cap_[i] < 0.0) {
            is_sink_[i] = 1; parent_[i] = kTerminal; dist_[i] = 1; set_active(i);
        }
    }

    int current = kNone;
    while (true) {
        int i = current;
        if (i != kNone && parent_[i] == kNone) { i = kNone; }
        if (i == kNone) {
            i = next_active();
            if (i == kNone) { break; }
        }

        /* growth */
        int found = kNone;
        if (!is_sink_[i]) {
            for (int a = first_[i]; a != kNone; a = next_[a]) {
                if (r_cap_[a] <= 0.0) { continue; }
                const int j = head_[a];
                if (parent_[j] == kNone) {
                    is_sink_[j] = 0; parent_[j] = sister_[a];
                    ts_[j] = ts_[i]; dist_[j] = dist_[i] + 1;
                    set_active(j);
                } else if (is_sink_[j]) {
                    found = a;
                    break;
                } else if (ts_[j] <= ts_[i] && dist_[j] > dist_[i]) {
                    parent_[j] = sister_[a]; ts_[j] = ts_[i]; dist_[j] = dist_[i] + 1;
                }
            }
        } else {
            for (int a = first_[i]; a != kNone; a = next_[a]) {
                if (r_cap_[sister_[a]] <= 0.0) { continue; }
                const int j = head_[a];
                if (parent_[j] == kNone) {
                    is_sink_[j] = 1; parent_[j] = sister_[a];
                    ts_[j] = ts_[i]; dist_[j] = dist_[i] + 1;
                    set_active(j);
                } else if (!is_sink_[j]) {
                    found = sister_[a];
                    break;
                } else if (ts_[j] <= ts_[i] && dist_[j] > dist_[i]) {
                    parent_[j] = sister_[a]; ts_[j] = ts_[i]; dist_[j] = dist_[i] + 1;
                }
            }
        }

        time_++;
        if (found == kNone) {
            current = kNone;
            continue;
        }
        current = i;
        augment(found);
        while (!orphans_.empty()) {
            const int o = orphans_.front();
            orphans_.pop_front();
            process_orphan(o, is_sink_[o] != 0);
        }
    }
    return flow_;
}

void BoykovKolmogorov::augment(int middle)
{
    double bottleneck = r_cap_[middle];
    int i = head_[sister_[middle]];
    while (parent_[i] != kTerminal) {
        const int a = parent_[i];
        bottleneck = std::min(bottleneck, r_cap_[sister_[a]]);
        i = head_[a];
    }
    bottleneck = std::min(bottleneck, tr_cap_[i]);
    i = head_[middle];
    while (parent_[i] != kTerminal) {
        const int a = parent_[i];
        bottleneck = std::min(bottleneck, r_cap_[a]);
        i = head_[a];
    }
    bottleneck = std::min(bottleneck, -tr_cap_[i]);
    if (std::isinf(bottleneck)) {
        throw ContractViolation("max flow: infinite augmenting path");
    }

    r_cap_[sister_[middle]] += bottleneck;
    r_cap_[middle] -= bottleneck;
    i = head_[sister_[middle]];
    while (true) {
        const int a = parent_[i];
        if (a == kTerminal) { break; }
        r_cap_[a] += bottleneck;
        r_cap_[sister_[a]] -= bottleneck;
        if (r_cap_[sister_[a]] <= 0.0) { set_orphan_front(i); }
        i = head_[a];
    }
    tr_cap_[i] -= bottleneck;
    if (tr_cap_[i] <= 0.0) { set_orphan_front(i); }

    i = head_[middle];
    while (true) {
        const int a = parent_[i];
        if (a == kTerminal) { break; }
        r_cap_[sister_[a]] += bottleneck;
        r_cap_[a] -= bottleneck;
        if (r_cap_[a] <= 0.0) { set_orphan_front(i); }
        i = head_[a];
    }
    tr_cap_[i] += bottleneck;
    if (tr_cap_[i] >= 0.0) { set_orphan_front(i); }

    flow_ += bottleneck;
}

void BoykovKolmogorov::process_orphan(int i, bool sink_tree)
{
    auto usable = [&](int a) {
        return sink_tree ? r_cap_[a] > 0.0 : r_cap_[sister_[a]] > 0.0;
    };

    int best_arc = kNone;
    int best_dist = kInfDist;
    for (int a0 = first_[i]; a0 != kNone; a0 = next_[a0]) {
        if (!usable(a0)) { continue; }
        int j = head_[a0];
        if ((is_sink_[j] != 0) != sink_tree || parent_[j] == kNone) { continue; }
        /* is j rooted at a terminal? */
        int d = 0;
        while (true) {
            if (ts_[j] == time_) { d += dist_[j]; break; }
            const int a = parent_[j];
            d++;
            if (a == kTerminal) { ts_[j] = time_; dist_[j] = 1; break; }
            if (a == kOrphan) { d = kInfDist; break; }
            j = head_[a];
        }
        if (d == kInfDist) { continue; }
        if (d < best_dist) { best_arc = a0; best_dist = d; }
        for (j = head_[a0]; ts_[j] != time_; j = head_[parent_[j]]) {
            ts_[j] = time_;
            dist_[j] = d--;
        }
    }

    parent_[i] = best_arc;
    if (best_arc != kNone) {
        ts_[i] = time_;
        dist_[i] = best_dist + 1;
        return;
    }
    for (int a0 = first_[i]; a0 != kNone; a0 = next_[a0]) {
        const int j = head_[a0];
        const int a = parent_[j];
        if ((is_sink_[j] != 0) != sink_tree || a == kNone) { continue; }
        if (usable(a0)) { set_active(j); }
        if (a != kTerminal && a != kOrphan && head_[a] == i) { set_orphan_rear(j); }
    }
}

} // namespace

MinCut max_flow_min_cut(const FlowNetwork& network)
{
    const std::size_t n = network.node_count();
    const index_t s = network.source();
    const index_t t = network.sink();

    /* inner nodes are renumbered without the terminals */
    std::vector<int> inner(n, -1);
    int count = 0;
    for (std::size_t v = 0; v < n; v++) {
        if (v != s && v != t) { inner[v] = count++; }
    }

    BoykovKolmogorov bk(static_cast<std::size_t>(count));
    std::vector<double> from_source(static_cast<std::size_t>(count), 0.0);
    std::vector<double> to_sink(static_cast<std::size_t>(count), 0.0);
    for (const FlowNetwork::Arc& arc : network.arcs()) {
        /* orient so that arcs leaving s or entering t carry `capacity` */
        index_t from = arc.from, to = arc.to;
        double cap = arc.capacity, rev = arc.reverse_capacity;
        if (to == s || from == t) { std::swap(from, to); std::swap(cap, rev); }
        if (from == s && to == t) {
            bk.add_constant_flow(cap);
        } else if (from == s) {
            from_source[static_cast<std::size_t>(inner[to])] += cap;
        } else if (to == t) {
            to_sink[static_cast<std::size_t>(inner[from])] += cap;
        } else {
            bk.add_edge(inner[from], inner[to], cap, rev);
        }
    }
    for (int i = 0; i < count; i++) {
        bk.add_terminal(i, from_source[static_cast<std::size_t>(i)],
            to_sink[static_cast<std::size_t>(i)]);
    }

    MinCut cut;
    cut.value = bk.run();
    cut.source_side.assign(n, 0);
    cut.source_side[s] = 1;
    for (std::size_t v = 0; v < n; v++) {
        if (inner[v] >= 0 && bk.source_side(inner[v])) { cut.source_side[v] = 1; }
    }
    return cut;
}

BinaryEnergy::BinaryEnergy(std::size_t variables)
    : unary0_(variables, 0.0), unary1_(variables, 0.0)
{}

void BinaryEnergy::add_unary(index_t v, double cost0, double cost1)
{
    if (v >= size()) { throw ContractViolation("binary energy: variable out of range"); }
    if (std::isnan(cost0) || std::isnan(cost1) || cost0 == -kInf || cost1 == -kInf
        || (std::isinf(cost0) && std::isinf(cost1))) {
        throw ContractViolation("binary energy: invalid unary costs");
    }
    unary0_[v] += cost0;
    unary1_[v] += cost1;
    if (std::isinf(unary0_[v]) && std::isinf(unary1_[v])) {
        throw ContractViolation("binary energy: both labels infeasible");
    }
}

bool BinaryEnergy::is_submodular(double e00, double e01, double e10, double e11)
{
    const double scale = std::abs(e00) + std::abs(e01) + std::abs(e10) + std::abs(e11);
    return e01 + e10 - e00 - e11 >= -1e-12 * scale;
}

void BinaryEnergy::add_pairwise(index_t u, index_t v, double e00, double e01,
    double e10, double e11)
{
    if (u >= size() || v >= size() || u == v) {
        throw ContractViolation("binary energy: invalid pair");
    }
    if (!std::isfinite(e00) || !std::isfinite(e01) || !std::isfinite(e10)
        || !std::isfinite(e11)) {
        throw ContractViolation("binary energy: pairwise costs must be finite");
    }
    if (!is_submodular(e00, e01, e10, e11)) {
        throw ContractViolation("binary energy: pairwise term is not submodular");
    }
    pairs_.push_back({u, v, e00, e01, e10, e11});
}

double BinaryEnergy::energy(std::span<const char> labels) const
{
    double total = 0.0;
    for (std::size_t v = 0; v < size(); v++) {
        total += labels[v] ? unary1_[v] : unary0_[v];
    }
    for (const Pair& p : pairs_) {
        const bool lu = labels[p.u] != 0, lv = labels[p.v] != 0;
        total += lu ? (lv ? p.e11 : p.e10) : (lv ? p.e01 : p.e00);
    }
    return total;
}

std::vector<char> BinaryEnergy::minimize() const
{
    const std::size_t n = size();
    const index_t s = static_cast<index_t>(n);
    const index_t t = static_cast<index_t>(n + 1);
    /* cost of label 1 relative to label 0, per variable */
    std::vector<double> diff(n);
    for (std::size_t v = 0; v < n; v++) { diff[v] = unary1_[v] - unary0_[v]; }

    FlowNetwork net(n + 2, s, t);
    for (const Pair& p : pairs_) {
        /* e00 + (e10 - e00) l_u + (e11 - e10) l_v
         *     + (e01 + e10 - e00 - e11) (1 - l_u) l_v */
        diff[p.u] += p.e10 - p.e00;
        diff[p.v] += p.e11 - p.e10;
        const double c = std::max(0.0, p.e01 + p.e10 - p.e00 - p.e11);
        if (c > 0.0) { net.add_arc(p.u, p.v, c); }
    }
    for (std::size_t v = 0; v < n; v++) {
        const index_t vi = static_cast<index_t>(v);
        if (diff[v] > 0.0) {
            net.add_arc(s, vi, diff[v]);
        } else if (diff[v] < 0.0) {
            net.add_arc(vi, t, -diff[v]);
        }
    }
    const MinCut cut = max_flow_min_cut(net);
    std::vector<char> labels(n);
    for (std::size_t v = 0; v < n; v++) { labels[v] = cut.source_side[v] ? 0 : 1; }
    return labels;
}

} // namespace cutpursuit
