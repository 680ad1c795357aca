#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cutpursuit/errors.hpp"
#include "cutpursuit/io.hpp"

using namespace cutpursuit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("cutpursuit_test_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text)
{
    std::ofstream f(p, std::ios::binary);
    f << text;
}

std::string load_error(const fs::path& p)
{
    try {
        io::load_problem(p);
    } catch (const InputError& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("number formatting round-trips")
{
    std::mt19937_64 rng(1);
    for (int i = 0; i < 1000; i++) {
        const double v = std::ldexp(std::uniform_real_distribution<double>(-1, 1)(rng),
            std::uniform_int_distribution<int>(-60, 60)(rng));
        CHECK(std::stod(io::format_double(v)) == v);
    }
    CHECK(io::format_double(0.5) == "0.5");
    CHECK(io::format_double(3.0) == "3");
}

TEST_CASE("rng is deterministic")
{
    io::Rng a(7), b(7), c(8);
    bool differs = false;
    for (int i = 0; i < 100; i++) {
        const double x = a.uniform();
        CHECK(x == b.uniform());
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
        differs = differs || x != c.uniform();
    }
    CHECK(differs);
    double sum = 0.0, sq = 0.0;
    io::Rng n(3);
    for (int i = 0; i < 20000; i++) {
        const double z = n.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / 20000) < 0.03);
    CHECK(std::abs(sq / 20000 - 1.0) < 0.05);
    for (int i = 0; i < 100; i++) { CHECK(n.index(5) < 5); }
}

TEST_CASE("generated instances")
{
    const auto f6 = io::generate(io::default_generator("fused1d"));
    CHECK(f6.vertex_count == 6);
    CHECK(f6.y == std::vector<double>{0, 0, 0, 5, 5, 5});
    CHECK(f6.edges.size() == 5);
    const ProblemSpec spec = f6.to_spec();
    CHECK(objective(spec, std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3, 14.0 / 3, 14.0 / 3, 14.0 / 3})
              .value() == doctest::Approx(14.0 / 3));

    const auto eeg = io::generate(io::default_generator("eeg_like"));
    CHECK(eeg.vertex_count == 200);
    CHECK(eeg.rows == 20);
    CHECK(eeg.phi.size() == 20 * 200);
    CHECK(eeg.y.size() == 20);
    REQUIRE(eeg.truth.has_value());
    std::size_t active = 0;
    for (double t : *eeg.truth) {
        CHECK(t >= 0.0);
        active += t > 0.0;
    }
    CHECK(active == 10);

    const auto ml = io::generate(io::default_generator("multilabel_grid"));
    REQUIRE(ml.multidim.has_value());
    CHECK(ml.multidim->q.size() == 64 * 3);
    const auto mspec = ml.to_multi_spec();
    CHECK(mspec.dim == 3);

    auto g = io::default_generator("fused2d");
    g.seed = 5;
    CHECK(io::generate(g).y == io::generate(g).y);
    g.seed = 6;
    CHECK(io::generate(g).y != io::generate(io::default_generator("fused2d")).y);

    auto bad = io::default_generator("eeg_like");
    bad.sparsity = 0.0;
    CHECK_THROWS_AS(io::generate(bad), InputError);
    CHECK_THROWS_AS(io::generate(io::default_generator("nope")), InputError);
}

TEST_CASE("problem files round-trip")
{
    const fs::path dir = scratch("roundtrip");
    for (const std::string kind : {"fused1d", "fused2d", "eeg_like", "multilabel_grid"}) {
        const auto data = io::generate(io::default_generator(kind));
        const fs::path json = dir / (kind + ".json");
        io::save_problem(data, json);
        const auto back = io::load_problem(json);
        CHECK(back.vertex_count == data.vertex_count);
        CHECK(back.edges.size() == data.edges.size());
        CHECK(back.truth.has_value() == data.truth.has_value());
        if (data.is_multidim()) {
            const auto a = data.to_multi_spec(), b = back.to_multi_spec();
            const auto p = simplex_indicator()->feasible_point(a.dim);
            std::vector<double> x;
            for (std::size_t v = 0; v < a.vertex_count(); v++) { x.insert(x.end(), p.begin(), p.end()); }
            CHECK(multi_objective(b, x).value()
                == doctest::Approx(multi_objective(a, x).value()).epsilon(1e-12));
        } else {
            const auto a = data.to_spec(), b = back.to_spec();
            std::vector<double> x(a.vertex_count());
            for (std::size_t v = 0; v < x.size(); v++) { x[v] = 0.01 * static_cast<double>(v % 7); }
            CHECK(objective(b, x).value() == doctest::Approx(objective(a, x).value()).epsilon(1e-12));
        }

        /* same seed, same bytes */
        const fs::path again = dir / (kind + "_again.json");
        io::save_problem(io::generate(io::default_generator(kind)), again);
        CHECK(slurp(dir / (kind + "_graph.csv")) == slurp(dir / (kind + "_again_graph.csv")));
    }
    fs::remove_all(dir);
}

TEST_CASE("inline problems and operators")
{
    const fs::path dir = scratch("inline");
    write_file(dir / "phi.csv", "1,0,0\n0,1,1\n");
    write_file(dir / "trip.csv", "i,j,value\n0,0,1\n1,1,1\n1,2,1\n");
    write_file(dir / "dense.json", R"({"vertex_count": 3, "graph": [[0, 1, 1], [1, 2, 1]],
        "smooth": {"type": "quadratic", "y": [1, 2],
                   "operator": {"format": "dense", "path": "phi.csv", "rows": 2}},
        "nonsmooth": [{"type": "zero"}, {"type": "box", "lo": -1, "hi": 1},
                      {"type": "weighted_abs", "weight": 0.5}]})");
    write_file(dir / "sparse.json", R"({"vertex_count": 3, "graph": [[0, 1, 1], [1, 2, 1]],
        "smooth": {"type": "quadratic", "y": [1, 2],
                   "operator": {"format": "triplets", "path": "trip.csv", "rows": 2}},
        "nonsmooth": [{"type": "zero"}, {"type": "box", "lo": -1, "hi": 1},
                      {"type": "weighted_abs", "weight": 0.5}]})");
    const auto a = io::load_problem(dir / "dense.json").to_spec();
    const auto b = io::load_problem(dir / "sparse.json").to_spec();
    const std::vector<double> x{0.5, -0.5, 2.0};
    /* 1/2 (0.5^2 + 0.5^2) + TV 1 + 2.5 + 0.5 * 2 */
    CHECK(objective(a, x).value() == doctest::Approx(0.25 + 3.5 + 1.0));
    CHECK(objective(b, x).value() == doctest::Approx(objective(a, x).value()));

    write_file(dir / "scaled.json", R"({"vertex_count": 2, "graph": [[0, 1, 2]], "tv_scale": 0.5,
        "smooth": {"type": "quadratic", "y": [0, 0], "operator": "identity"}})");
    const auto s = io::load_problem(dir / "scaled.json").to_spec();
    CHECK(objective(s, std::vector<double>{0, 1}).value() == doctest::Approx(1.5));
    fs::remove_all(dir);
}

TEST_CASE("schema errors name the field")
{
    const fs::path dir = scratch("errors");
    auto expect = [&](const std::string& text, const std::string& field) {
        write_file(dir / "p.json", text);
        const std::string msg = load_error(dir / "p.json");
        CAPTURE(msg);
        CHECK(msg.find(field) != std::string::npos);
    };
    expect("{", "JSON parse error");
    expect(R"({"graph": [], "smooth": {"type": "quadratic", "y": [], "operator": "identity"}})",
        "vertex_count");
    expect(R"({"vertex_count": 2, "graph": [[0, 5, 1]],
        "smooth": {"type": "quadratic", "y": [0, 0], "operator": "identity"}})", "graph");
    expect(R"({"vertex_count": 2, "graph": [[0, 1, 1]],
        "smooth": {"type": "quadratic", "y": [0], "operator": "identity"}})", "y");
    expect(R"({"vertex_count": 2, "graph": [[0, 1, 1]],
        "smooth": {"type": "cubic", "y": [0, 0], "operator": "identity"}})", "smooth");
    expect(R"({"vertex_count": 2, "graph": [[0, 1, 1]],
        "smooth": {"type": "quadratic", "y": [0, 0], "operator": "identity"},
        "nonsmooth": {"type": "wavy"}})", "nonsmooth");
    expect(R"({"vertex_count": 2, "graph": "missing.csv",
        "smooth": {"type": "quadratic", "y": [0, 0], "operator": "identity"}})", "missing.csv");
    expect(R"({"vertex_count": 2, "graph": [[0, 1, 1]],
        "multidim": {"K": 2, "q": [[0.5, 0.5], [0.9, 0.3]], "beta": 0.1},
        "nonsmooth": {"type": "simplex"}})", "q");
    expect(R"({"vertex_count": 2, "graph": [[0, 1, 1]],
        "multidim": {"K": 2, "q": [[0.5, 0.5], [0.5, 0.5]], "beta": 1.5},
        "nonsmooth": {"type": "simplex"}})", "beta");
    CHECK(load_error(dir / "absent.json").find("cannot open") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("tables")
{
    const fs::path dir = scratch("tables");
    const std::vector<double> v{0.1, -2.0, 1e-300};
    io::write_vector(dir / "v.csv", v);
    CHECK(slurp(dir / "v.csv").rfind("vertex,value\n", 0) == 0);
    CHECK(io::read_vector(dir / "v.csv") == v);
    write_file(dir / "plain.csv", "1.5\n2.5\n");
    CHECK(io::read_vector(dir / "plain.csv") == std::vector<double>{1.5, 2.5});
    write_file(dir / "bad.csv", "vertex,value\n0,abc\n");
    CHECK_THROWS_AS(io::read_vector(dir / "bad.csv"), InputError);

    io::write_multi_values(dir / "m.csv", std::vector<double>{0.25, 0.75}, 2);
    CHECK(slurp(dir / "m.csv") == "vertex,k,value\n0,0,0.25\n0,1,0.75\n");

    SolveTrace trace;
    trace.records.push_back({1, 0.5, 3.0, 1, -2.0});
    trace.records.push_back({2, 0.75, 2.0, 2, std::nullopt});
    trace.stop = StopReason::direction;
    const std::string csv = io::trace_csv(trace);
    CHECK(csv == "iter,elapsed_s,objective,n_components,dir_deriv,stop_reason\n"
                 "1,0.5,3,1,-2,\n2,0.75,2,2,,direction\n");
    fs::remove_all(dir);
}

TEST_CASE("dice score")
{
    const std::vector<double> truth{0, 1, 1, 0, 0};
    CHECK(io::dice_score(std::vector<double>{0, 2, 1, 0, 0}, truth, 1e-6) == 1.0);
    CHECK(io::dice_score(std::vector<double>{0, 1, 0, 1, 0}, truth, 1e-6) == 0.5);
    CHECK(io::dice_score(std::vector<double>(5, 1e-9), std::vector<double>(5, 0.0), 1e-6) == 1.0);
    CHECK_THROWS_AS(io::dice_score(std::vector<double>{1}, truth, 1e-6), InputError);
}
