#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cutpursuit/direction.hpp"
#include "cutpursuit/driver.hpp"
#include "cutpursuit/errors.hpp"
#include "cutpursuit/io.hpp"
#include "cutpursuit/multidim.hpp"

using namespace cutpursuit;

namespace {

struct SolverFlags {
    std::optional<double> tol_dir;
    std::optional<double> tol_x;
    std::optional<double> eps_eq;
    std::optional<double> eps_snap;
    std::optional<double> merge_eps;
    std::optional<std::size_t> max_iter;
    std::optional<double> reduced_tol_factor;
    std::optional<std::size_t> reduced_max_iter;

    void add(CLI::App* app)
    {
        app->add_option("--tol-dir", tol_dir, "stop when -F'(x, d) <= tol (default 1e-6)");
        app->add_option("--tol-x", tol_x, "stop on relative iterate evolution (default 1e-6)");
        app->add_option("--eps-eq", eps_eq, "equality tolerance (default adaptive)");
        app->add_option("--eps-snap", eps_snap, "snapping tolerance (default adaptive)");
        app->add_option("--merge-eps", merge_eps, "merge tolerance, 0 disables merging");
        app->add_option("--max-iter", max_iter, "outer iterations (default 50)");
        app->add_option("--reduced-tol-factor", reduced_tol_factor,
            "reduced tolerance relative to tol-x (default 1e-3)");
        app->add_option("--reduced-max-iter", reduced_max_iter,
            "iterations per reduced solve (default 10000)");
    }

    SolveOptions options() const
    {
        SolveOptions o;
        if (tol_dir) { o.tol_dir = *tol_dir; }
        if (tol_x) { o.tol_x = *tol_x; }
        o.eps_eq = eps_eq;
        o.eps_snap = eps_snap;
        o.merge_eps = merge_eps;
        if (max_iter) { o.max_iter = *max_iter; }
        if (reduced_tol_factor) { o.reduced_tol_factor = *reduced_tol_factor; }
        if (reduced_max_iter) { o.reduced_max_iter = *reduced_max_iter; }
        return o;
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_values(const std::string& out, std::span<const double> x, std::size_t dim)
{
    if (out.empty()) {
        std::cout << (dim == 1 ? "vertex,value\n" : "vertex,k,value\n");
        for (std::size_t i = 0; i < x.size(); i++) {
            if (dim == 1) {
                std::cout << i << "," << io::format_double(x[i]) << "\n";
            } else {
                std::cout << i / dim << "," << i % dim << "," << io::format_double(x[i]) << "\n";
            }
        }
    } else if (dim == 1) {
        io::write_vector(out, x);
    } else {
        io::write_multi_values(out, x, dim);
    }
}

void report(const SolveTrace& trace, std::size_t iterations, std::size_t components)
{
    std::cerr << "iterations " << iterations << " components " << components
              << " objective " << io::format_double(trace.records.back().objective)
              << " stop " << to_string(trace.stop) << "\n";
    for (const auto& w : trace.warnings) { std::cerr << "warning: " << w << "\n"; }
}

int cmd_solve(const std::string& problem, const SolverFlags& flags, const std::string& out,
    const std::string& trace_path)
{
    const io::ProblemData data = io::load_problem(problem);
    const SolveOptions options = flags.options();
    Solution sol;
    std::size_t dim = 1;
    if (data.is_multidim()) {
        const MultiProblemSpec spec = data.to_multi_spec();
        dim = spec.dim;
        sol = cut_pursuit_multidim(spec, options);
    } else {
        sol = cut_pursuit(data.to_spec(), options);
    }
    write_values(out, sol.x, dim);
    if (!trace_path.empty()) { io::write_trace(trace_path, sol.trace); }
    report(sol.trace, sol.iterations, sol.partition.size());
    return 0;
}

BaselineResult run_baseline(const io::ProblemData& data, const BaselineOptions& options)
{
    if (data.is_multidim()) { return multi_baseline_solve(data.to_multi_spec(), options); }
    return baseline_solve(data.to_spec(), options);
}

int cmd_baseline(const std::string& problem, double tol, std::size_t max_iter,
    std::size_t every, const std::string& out, const std::string& trace_path)
{
    const io::ProblemData data = io::load_problem(problem);
    BaselineOptions o;
    o.tol = tol;
    o.max_iter = max_iter;
    o.checkpoint_every = every;
    const BaselineResult res = run_baseline(data, o);
    write_values(out, res.x, data.is_multidim() ? data.multidim->K : 1);
    if (!trace_path.empty()) { io::write_trace(trace_path, res.trace); }
    report(res.trace, res.iterations, res.trace.records.back().components);
    return 0;
}

std::vector<double> parse_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size() || !(v > 0.0)) {
            throw InputError("--tols: '" + item + "' is not a positive number");
        }
        out.push_back(v);
    }
    if (out.empty()) { throw InputError("--tols: empty list"); }
    return out;
}

int cmd_compare(const std::string& problem, const std::string& tols_text,
    const SolverFlags& flags, double dice_eps, const std::string& out)
{
    const io::ProblemData data = io::load_problem(problem);
    const auto tols = parse_list(tols_text);
    const bool dice = data.truth.has_value() && !data.is_multidim();
    std::string text = "solver,tol,objective,time_s,iterations,components";
    text += dice ? ",dice\n" : "\n";

    auto row = [&](const std::string& solver, double tol, const SolveTrace& trace,
                   double time, std::size_t iterations, std::size_t components,
                   std::span<const double> x) {
        text += solver + "," + io::format_double(tol) + ","
            + io::format_double(trace.records.back().objective) + ","
            + io::format_double(time) + "," + std::to_string(iterations) + ","
            + std::to_string(components);
        if (dice) { text += "," + io::format_double(io::dice_score(x, *data.truth, dice_eps)); }
        text += "\n";
    };

    for (double tol : tols) {
        SolveOptions o = flags.options();
        o.tol_x = tol;
        auto t0 = std::chrono::steady_clock::now();
        Solution sol = data.is_multidim() ? cut_pursuit_multidim(data.to_multi_spec(), o)
                                          : cut_pursuit(data.to_spec(), o);
        row("cp", tol, sol.trace, seconds_since(t0), sol.iterations, sol.partition.size(), sol.x);

        BaselineOptions bo;
        bo.tol = tol;
        bo.checkpoint_every = 100;
        t0 = std::chrono::steady_clock::now();
        const BaselineResult res = run_baseline(data, bo);
        row("baseline", tol, res.trace, seconds_since(t0), res.iterations,
            res.trace.records.back().components, res.x);
    }
    if (out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(out, std::ios::binary);
        if (!(f << text)) { throw InputError(out + ": cannot write"); }
    }
    return 0;
}

int cmd_direction(const std::string& problem, const std::string& point_path,
    std::optional<double> eps_eq, std::optional<double> eps_snap, const std::string& out)
{
    const io::ProblemData data = io::load_problem(problem);
    if (data.is_multidim()) {
        throw InputError("direction: only scalar problems are supported");
    }
    const ProblemSpec spec = data.to_spec();
    const std::vector<double> x = io::read_vector(point_path);
    if (x.size() != spec.vertex_count()) {
        throw InputError("direction: point has " + std::to_string(x.size())
            + " values, the problem has " + std::to_string(spec.vertex_count()) + " vertices");
    }
    double scale = 1.0;
    for (double t : x) { scale = std::max(scale, std::abs(t)); }
    const std::vector<double> snapped = snap_nonsmooth(spec, x, eps_snap.value_or(1e-7 * scale));
    const TernaryDirection dir = steepest_ternary_direction(spec, snapped,
        eps_eq.value_or(1e-7 * scale));
    std::size_t counts[3] = {0, 0, 0};
    for (double d : dir.d) { counts[static_cast<int>(d) + 1]++; }
    std::cout << "dir_deriv " << io::format_double(dir.value.value()) << "\n"
              << "counts -1:" << counts[0] << " 0:" << counts[1] << " +1:" << counts[2] << "\n";
    if (!out.empty()) { io::write_vector(out, dir.d); }
    return 0;
}

int cmd_gen(io::GeneratorSpec spec, const std::string& out)
{
    io::save_problem(io::generate(spec), out);
    std::cerr << "wrote " << out << "\n";
    return 0;
}

int cmd_dice(const std::string& solution, const std::string& truth, double eps)
{
    std::cout << "dice " << io::format_double(io::dice_score(io::read_vector(solution),
        io::read_vector(truth), eps)) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"cut pursuit for graph total variation regularized problems"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "OpenMP threads (default: runtime setting)");

    SolverFlags solve_flags, compare_flags;
    std::string problem, out, trace_path;

    auto* solve = app.add_subcommand("solve", "run cut pursuit on a problem file");
    solve->add_option("problem", problem, "problem JSON")->required();
    solve_flags.add(solve);
    solve->add_option("--out", out, "solution CSV (default: stdout)");
    solve->add_option("--trace", trace_path, "trace CSV");

    double tol = 1e-10;
    std::size_t baseline_max_iter = 1000000, every = 10;
    auto* baseline = app.add_subcommand("baseline", "run the full-graph splitting solver");
    baseline->add_option("problem", problem, "problem JSON")->required();
    baseline->add_option("--tol", tol, "relative evolution tolerance (default 1e-10)");
    baseline->add_option("--max-iter", baseline_max_iter, "iterations (default 1e6)");
    baseline->add_option("--checkpoint-every", every, "iterations between trace records");
    baseline->add_option("--out", out, "solution CSV (default: stdout)");
    baseline->add_option("--trace", trace_path, "trace CSV");

    std::string tols = "1e-4,1e-6";
    double dice_eps = 1e-6;
    auto* compare = app.add_subcommand("compare", "cut pursuit against the baseline per tolerance");
    compare->add_option("problem", problem, "problem JSON")->required();
    compare->add_option("--tols", tols, "comma-separated tolerances (default 1e-4,1e-6)");
    compare_flags.add(compare);
    compare->add_option("--dice-eps", dice_eps, "support threshold for the Dice score");
    compare->add_option("--out", out, "comparison CSV (default: stdout)");

    std::string kind;
    std::uint64_t seed = 1;
    io::GeneratorSpec gen_spec;
    auto* gen = app.add_subcommand("gen", "write a synthetic problem");
    gen->add_option("--kind", kind, "fused1d, fused2d, eeg_like or multilabel_grid")->required();
    auto* o_size = gen->add_option("--size", gen_spec.size, "fused1d length");
    auto* o_rows = gen->add_option("--rows", gen_spec.rows, "grid rows");
    auto* o_cols = gen->add_option("--cols", gen_spec.cols, "grid columns");
    auto* o_obs = gen->add_option("--observations", gen_spec.observations, "eeg_like N");
    auto* o_sparsity = gen->add_option("--sparsity", gen_spec.sparsity, "eeg_like active fraction");
    auto* o_classes = gen->add_option("--classes", gen_spec.classes, "multilabel_grid K");
    auto* o_noise = gen->add_option("--noise", gen_spec.noise, "noise level");
    auto* o_tv = gen->add_option("--tv", gen_spec.tv, "TV weight");
    auto* o_l1 = gen->add_option("--l1", gen_spec.l1, "eeg_like l1 weight");
    auto* o_beta = gen->add_option("--beta", gen_spec.beta, "multilabel_grid smoothing");
    gen->add_option("--seed", seed, "random seed (default 1)");
    gen->add_option("--out", out, "problem JSON path")->required();

    std::string point;
    std::optional<double> eps_eq, eps_snap;
    auto* direction = app.add_subcommand("direction", "steepest ternary direction at a point");
    direction->add_option("problem", problem, "problem JSON")->required();
    direction->add_option("--point", point, "point CSV")->required();
    direction->add_option("--eps-eq", eps_eq, "equality tolerance (default 1e-7 max(1, |x|))");
    direction->add_option("--eps-snap", eps_snap, "snapping tolerance (default 1e-7 max(1, |x|))");
    direction->add_option("--out", out, "direction CSV");

    std::string solution, truth;
    double eps = 1e-6;
    auto* dice = app.add_subcommand("dice", "Dice score between supports");
    dice->add_option("--solution", solution, "solution CSV")->required();
    dice->add_option("--truth", truth, "ground truth CSV")->required();
    dice->add_option("--eps", eps, "support threshold (default 1e-6)");

    CLI11_PARSE(app, argc, argv);
    if (threads > 0) { kernels::set_threads(threads); }

    try {
        if (*solve) { return cmd_solve(problem, solve_flags, out, trace_path); }
        if (*baseline) { return cmd_baseline(problem, tol, baseline_max_iter, every, out, trace_path); }
        if (*compare) { return cmd_compare(problem, tols, compare_flags, dice_eps, out); }
        if (*direction) { return cmd_direction(problem, point, eps_eq, eps_snap, out); }
        if (*dice) { return cmd_dice(solution, truth, eps); }
        if (*gen) {
            io::GeneratorSpec g = io::default_generator(kind);
            auto take = [](CLI::Option* o, auto& dst, const auto& src) {
                if (o->count() > 0) { dst = src; }
            };
            take(o_size, g.size, gen_spec.size);
            take(o_rows, g.rows, gen_spec.rows);
            take(o_cols, g.cols, gen_spec.cols);
            take(o_obs, g.observations, gen_spec.observations);
            take(o_sparsity, g.sparsity, gen_spec.sparsity);
            take(o_classes, g.classes, gen_spec.classes);
            take(o_noise, g.noise, gen_spec.noise);
            take(o_tv, g.tv, gen_spec.tv);
            take(o_l1, g.l1, gen_spec.l1);
            take(o_beta, g.beta, gen_spec.beta);
            g.seed = seed;
            return cmd_gen(g, out);
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const InfeasibleProblem& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ContractViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
