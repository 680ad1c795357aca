/*=============================================================================
 * Problem files, CSV tables and generated instances.
 *
 * A problem is a JSON document whose file references are relative to the
 * document itself:
 *
 *   {
 *     "vertex_count": 200,
 *     "graph": "graph.csv" | [[u, v, w], ...],
 *     "tv_scale": 1.0,
 *     "smooth": {
 *       "type": "quadratic",
 *       "y": "y.csv" | [...],
 *       "operator": "identity"
 *                 | {"format": "dense", "path": "phi.csv", "rows": 20}
 *                 | {"format": "triplets", "path": "phi.csv", "rows": 20}
 *     },
 *     "nonsmooth": {"type": "weighted_abs_nonneg", "weight": 0.1} | [...],
 *     "multidim": {"K": 3, "q": "q.csv", "beta": 0.1},
 *     "truth": "truth.csv"
 *   }
 *
 * Nonsmooth types: zero, weighted_abs (weight), nonneg, weighted_abs_nonneg
 * (weight), box (lo, hi), simplex (multidim only). With a multidim block the
 * smooth term is the KL fidelity to q and "smooth" is omitted.
 *
 * Tables carry a header row: edges "u,v,w", vectors "vertex,value",
 * triplets "i,j,value", multidim values "vertex,k,value". Dense matrices
 * (Phi, q) are headerless rows.
 *===========================================================================*/
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cutpursuit/functional.hpp"
#include "cutpursuit/multidim.hpp"
#include "cutpursuit/trace.hpp"

namespace cutpursuit::io {

struct NonsmoothSpec {
    std::string type = "zero";
    double weight = 0.0;
    double lo = -kInf;
    double hi = kInf;
};

struct MultidimData {
    std::size_t K = 0;
    std::vector<double> q; // vertex_count x K
    double beta = 0.1;
};

/* plain data of a problem, shared by files, generators and solvers */
struct ProblemData {
    std::size_t vertex_count = 0;
    std::vector<Edge> edges;
    double tv_scale = 1.0;

    enum class Operator { identity, dense, triplets };
    Operator op = Operator::identity;
    std::vector<double> y;
    std::size_t rows = 0; // rows of Phi (dense, triplets)
    std::vector<double> phi; // dense, row-major
    std::vector<SparseMatrix::Triplet> triplets;

    /* one shared term or one per vertex */
    std::vector<NonsmoothSpec> nonsmooth;

    std::optional<MultidimData> multidim;
    std::optional<std::vector<double>> truth;

    bool is_multidim() const { return multidim.has_value(); }
    /* InputError naming the offending field */
    void check() const;
    ProblemSpec to_spec() const;
    MultiProblemSpec to_multi_spec() const;
};

/* InputError on unreadable files, malformed JSON or schema violations */
ProblemData load_problem(const std::filesystem::path& json_path);

/* writes json_path and its companion CSV files next to it, named after the
 * JSON stem */
void save_problem(const ProblemData& data, const std::filesystem::path& json_path);

/* numeric rows of a CSV file; a first line that does not parse is taken as
 * a header and skipped */
std::vector<std::vector<double>> read_csv(const std::filesystem::path& path);

/* shortest round-trip decimal form, locale independent */
std::string format_double(double v);

std::vector<double> read_vector(const std::filesystem::path& path);
void write_vector(const std::filesystem::path& path, std::span<const double> values);
void write_multi_values(const std::filesystem::path& path, std::span<const double> values,
    std::size_t dim);

/* iter,elapsed_s,objective,n_components,dir_deriv,stop_reason; the stop
 * reason is written on the last record */
void write_trace(const std::filesystem::path& path, const SolveTrace& trace);
std::string trace_csv(const SolveTrace& trace);

/* 2 |A n B| / (|A| + |B|) over the supports {|x| > eps}; 1 when both are
 * empty */
double dice_score(std::span<const double> x, std::span<const double> truth, double eps);

/* deterministic draws: 53-bit uniforms from mt19937_64 and Box-Muller
 * normals, identical on every platform */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform();
    double uniform(double a, double b) { return a + (b - a) * uniform(); }
    double normal();
    std::size_t index(std::size_t n); // uniform in [0, n)

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

struct GeneratorSpec {
    std::string kind; // fused1d, fused2d, eeg_like, multilabel_grid
    std::size_t size = 6;       // fused1d length
    std::size_t rows = 8;       // fused2d, eeg_like, multilabel_grid
    std::size_t cols = 8;
    std::size_t observations = 20; // eeg_like N
    double sparsity = 0.05;     // eeg_like fraction of active vertices
    std::size_t classes = 3;    // multilabel_grid K
    double noise = 0.0;
    double tv = 1.0;            // TV weight
    double l1 = 0.0;            // eeg_like l1 weight
    double beta = 0.1;          // multilabel_grid smoothing
    std::uint64_t seed = 0;

    /* InputError on invalid sizes */
    void check() const;
};

/* per-kind defaults: fused1d of size 6 (the fused-6 instance), 16 x 16
 * fused2d, 10 x 20 eeg_like with 20 observations, 8 x 8 multilabel_grid
 * with 3 classes */
GeneratorSpec default_generator(const std::string& kind);

ProblemData generate(const GeneratorSpec& spec);

} // namespace cutpursuit::io
