#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cutpursuit/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "cutpursuit_test_cli";

struct Run {
    int status;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Run run(const std::string& args)
{
    const std::string cmd = "cd '" + kDir.string() + "' && '" CUTPURSUIT_CLI "' " + args
        + " > out.txt 2> err.txt";
    const int raw = std::system(cmd.c_str());
    return {raw, slurp(kDir / "out.txt"), slurp(kDir / "err.txt")};
}

struct DirGuard {
    DirGuard()
    {
        fs::remove_all(kDir);
        fs::create_directories(kDir);
    }
    ~DirGuard() { fs::remove_all(kDir); }
};

} // namespace

TEST_CASE("gen and solve the fused chain")
{
    DirGuard guard;
    REQUIRE(run("gen --kind fused1d --out f6.json").status == 0);
    const Run r = run("solve f6.json --out x.csv --trace trace.csv");
    REQUIRE(r.status == 0);
    const auto x = cutpursuit::io::read_vector(kDir / "x.csv");
    REQUIRE(x.size() == 6);
    for (int i = 0; i < 3; i++) {
        CHECK(x[i] == doctest::Approx(1.0 / 3).epsilon(1e-5));
        CHECK(x[i + 3] == doctest::Approx(14.0 / 3).epsilon(1e-5));
    }
    CHECK(r.err.find("components 2") != std::string::npos);
    const std::string trace = slurp(kDir / "trace.csv");
    CHECK(trace.rfind("iter,elapsed_s,objective,n_components,dir_deriv,stop_reason\n", 0) == 0);
    CHECK(trace.find(",direction") != std::string::npos);

    const Run to_stdout = run("solve f6.json");
    CHECK(to_stdout.out.rfind("vertex,value\n", 0) == 0);
}

TEST_CASE("baseline, direction and dice")
{
    DirGuard guard;
    REQUIRE(run("gen --kind fused1d --out f6.json").status == 0);
    REQUIRE(run("baseline f6.json --out b.csv").status == 0);
    const Run d = run("direction f6.json --point b.csv --out d.csv");
    REQUIRE(d.status == 0);
    std::istringstream lines(d.out);
    std::string key;
    double value = 0.0;
    lines >> key >> value;
    CHECK(key == "dir_deriv");
    CHECK(value >= -1e-5);
    CHECK(d.out.find("counts") != std::string::npos);

    std::ofstream(kDir / "a.csv") << "vertex,value\n0,1\n1,0\n2,1\n";
    std::ofstream(kDir / "t.csv") << "vertex,value\n0,1\n1,1\n2,0\n";
    const Run dice = run("dice --solution a.csv --truth t.csv");
    REQUIRE(dice.status == 0);
    CHECK(dice.out == "dice 0.5\n");
}

TEST_CASE("compare writes one row per solver and tolerance")
{
    DirGuard guard;
    REQUIRE(run("gen --kind eeg_like --rows 4 --cols 5 --observations 8 --sparsity 0.2 --out e.json").status == 0);
    const Run c = run("compare e.json --tols 1e-3,1e-5");
    REQUIRE(c.status == 0);
    std::istringstream lines(c.out);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "solver,tol,objective,time_s,iterations,components,dice");
    int rows = 0;
    while (std::getline(lines, line)) { rows++; }
    CHECK(rows == 4);
}

TEST_CASE("multidim problems")
{
    DirGuard guard;
    REQUIRE(run("gen --kind multilabel_grid --rows 4 --cols 4 --out m.json").status == 0);
    const Run r = run("solve m.json --out p.csv");
    REQUIRE(r.status == 0);
    const std::string p = slurp(kDir / "p.csv");
    CHECK(p.rfind("vertex,k,value\n", 0) == 0);
    std::size_t lines = 0;
    for (char ch : p) { lines += ch == '\n'; }
    CHECK(lines == 1 + 16 * 3);
}

TEST_CASE("errors exit nonzero with diagnostics")
{
    DirGuard guard;
    Run r = run("solve missing.json");
    CHECK(r.status != 0);
    CHECK(r.err.find("missing.json") != std::string::npos);

    std::ofstream(kDir / "empty.json") << R"({"vertex_count": 0, "graph": [],
        "smooth": {"type": "quadratic", "y": [], "operator": "identity"}})";
    r = run("solve empty.json");
    CHECK(r.status != 0);
    CHECK(r.err.find("empty graph") != std::string::npos);

    std::ofstream(kDir / "nn.json") << R"({"vertex_count": 2, "graph": [[0, 1, 1]],
        "smooth": {"type": "quadratic", "y": [1, 2], "operator": "identity"},
        "nonsmooth": {"type": "nonneg"}})";
    std::ofstream(kDir / "pt.csv") << "vertex,value\n0,-1\n1,2\n";
    r = run("direction nn.json --point pt.csv");
    CHECK(r.status != 0);
    CHECK(r.err.find("point not in domain") != std::string::npos);

    std::ofstream(kDir / "bad.json") << "{oops";
    r = run("solve bad.json");
    CHECK(r.status != 0);
    CHECK(r.err.find("JSON parse error") != std::string::npos);

    r = run("gen --kind spiral --out s.json");
    CHECK(r.status != 0);
    CHECK(r.err.find("spiral") != std::string::npos);

    CHECK(run("").status != 0);
    CHECK(run("solve").status != 0);
}
