#include "cutpursuit/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "cutpursuit/errors.hpp"

namespace cutpursuit::io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string trim(std::string_view s)
{
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) { a++; }
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) { b--; }
    return std::string(s.substr(a, b - a));
}

bool parse_row(const std::string& line, std::vector<double>& row)
{
    row.clear();
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        const std::string cell = trim(std::string_view(line).substr(start,
            comma == std::string::npos ? std::string::npos : comma - start));
        double v = 0.0;
        const char* first = cell.data();
        if (!cell.empty() && cell[0] == '+') { first++; }
        const auto res = std::from_chars(first, cell.data() + cell.size(), v);
        if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
            return false;
        }
        row.push_back(v);
        if (comma == std::string::npos) { return true; }
        start = comma + 1;
    }
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) { throw InputError(path.string() + ": cannot open for writing"); }
    out << text;
    if (!out) { throw InputError(path.string() + ": write failed"); }
}

[[noreturn]] void field_error(const std::string& file, const std::string& field,
    const std::string& what)
{
    throw InputError(file + ": field '" + field + "': " + what);
}

bool is_index(double v, std::size_t bound)
{
    return v >= 0.0 && v == std::floor(v) && v < static_cast<double>(bound);
}

} // namespace

std::vector<std::vector<double>> read_csv(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) { throw InputError(path.string() + ": cannot open file"); }
    std::vector<std::vector<double>> rows;
    std::string line;
    std::vector<double> row;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        if (trim(line).empty()) { continue; }
        if (!parse_row(line, row)) {
            if (line_no == 1) { continue; }
            throw InputError(path.string() + ": line " + std::to_string(line_no)
                + ": expected comma-separated numbers");
        }
        rows.push_back(row);
    }
    return rows;
}

std::vector<double> read_vector(const fs::path& path)
{
    const auto rows = read_csv(path);
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); i++) {
        const auto& r = rows[i];
        if (r.size() == 1) {
            out.push_back(r[0]);
        } else if (r.size() == 2 && r[0] == static_cast<double>(i)) {
            out.push_back(r[1]);
        } else {
            throw InputError(path.string() + ": row " + std::to_string(i + 1)
                + ": expected 'value' or 'vertex,value' with consecutive vertices");
        }
    }
    return out;
}

void write_vector(const fs::path& path, std::span<const double> values)
{
    std::string text = "vertex,value\n";
    for (std::size_t v = 0; v < values.size(); v++) {
        text += std::to_string(v) + "," + format_double(values[v]) + "\n";
    }
    write_text(path, text);
}

void write_multi_values(const fs::path& path, std::span<const double> values,
    std::size_t dim)
{
    std::string text = "vertex,k,value\n";
    for (std::size_t i = 0; i < values.size(); i++) {
        text += std::to_string(i / dim) + "," + std::to_string(i % dim) + ","
            + format_double(values[i]) + "\n";
    }
    write_text(path, text);
}

std::string trace_csv(const SolveTrace& trace)
{
    std::string text = "iter,elapsed_s,objective,n_components,dir_deriv,stop_reason\n";
    for (std::size_t i = 0; i < trace.records.size(); i++) {
        const TraceRecord& r = trace.records[i];
        text += std::to_string(r.iter) + "," + format_double(r.elapsed) + ","
            + format_double(r.objective) + "," + std::to_string(r.components) + ","
            + (r.dir_deriv ? format_double(*r.dir_deriv) : std::string()) + ","
            + (i + 1 == trace.records.size() ? to_string(trace.stop) : std::string()) + "\n";
    }
    return text;
}

void write_trace(const fs::path& path, const SolveTrace& trace)
{
    write_text(path, trace_csv(trace));
}

double dice_score(std::span<const double> x, std::span<const double> truth, double eps)
{
    if (x.size() != truth.size()) {
        throw InputError("dice: solution has " + std::to_string(x.size())
            + " values, truth has " + std::to_string(truth.size()));
    }
    std::size_t a = 0, b = 0, both = 0;
    for (std::size_t v = 0; v < x.size(); v++) {
        const bool in_a = std::abs(x[v]) > eps;
        const bool in_b = std::abs(truth[v]) > eps;
        a += in_a;
        b += in_b;
        both += in_a && in_b;
    }
    if (a + b == 0) { return 1.0; }
    return 2.0 * static_cast<double>(both) / static_cast<double>(a + b);
}

void ProblemData::check() const
{
    const std::string file = "problem";
    const std::size_t n = vertex_count;
    for (std::size_t e = 0; e < edges.size(); e++) {
        if (edges[e].u >= n || edges[e].v >= n) {
            field_error(file, "graph", "edge " + std::to_string(e) + " has an endpoint "
                "outside 0.." + std::to_string(n == 0 ? 0 : n - 1));
        }
    }
    try {
        WeightedGraph(n, edges);
    } catch (const ContractViolation& ex) {
        field_error(file, "graph", ex.what());
    }
    if (!(tv_scale >= 0.0) || !std::isfinite(tv_scale)) {
        field_error(file, "tv_scale", "must be a finite nonnegative number");
    }
    if (truth && truth->size() != n) {
        field_error(file, "truth", "expected " + std::to_string(n) + " values, got "
            + std::to_string(truth->size()));
    }
    if (multidim) {
        const MultidimData& m = *multidim;
        if (m.K < 1) { field_error(file, "multidim.K", "must be at least 1"); }
        if (!(m.beta > 0.0 && m.beta < 1.0)) {
            field_error(file, "multidim.beta", "must lie in ]0, 1[");
        }
        if (m.q.size() != n * m.K) {
            field_error(file, "multidim.q", "expected " + std::to_string(n) + " rows of "
                + std::to_string(m.K) + " values");
        }
        const SimplexIndicator simplex;
        for (std::size_t v = 0; v < n; v++) {
            if (!simplex.value(std::span<const double>(m.q).subspan(v * m.K, m.K)).is_finite()) {
                field_error(file, "multidim.q", "row " + std::to_string(v)
                    + " is not a probability vector");
            }
        }
        for (const auto& t : nonsmooth) {
            if (t.type != "simplex") {
                field_error(file, "nonsmooth.type", "multidim problems only accept 'simplex'");
            }
        }
        return;
    }
    if (nonsmooth.size() != 1 && nonsmooth.size() != n) {
        field_error(file, "nonsmooth", "expected one term or " + std::to_string(n) + " terms");
    }
    for (const auto& t : nonsmooth) {
        if (t.type == "weighted_abs" || t.type == "weighted_abs_nonneg") {
            if (!(t.weight >= 0.0) || !std::isfinite(t.weight)) {
                field_error(file, "nonsmooth.weight", "must be a finite nonnegative number");
            }
        } else if (t.type == "box") {
            if (!(t.lo <= t.hi)) { field_error(file, "nonsmooth.lo", "must not exceed hi"); }
        } else if (t.type == "simplex") {
            field_error(file, "nonsmooth.type", "'simplex' requires a multidim block");
        } else if (t.type != "zero" && t.type != "nonneg") {
            field_error(file, "nonsmooth.type", "unknown type '" + t.type + "'");
        }
    }
    switch (op) {
    case Operator::identity:
        if (y.size() != n) {
            field_error(file, "smooth.y", "expected " + std::to_string(n) + " values, got "
                + std::to_string(y.size()));
        }
        break;
    case Operator::dense:
        if (y.size() != rows) {
            field_error(file, "smooth.y", "expected " + std::to_string(rows) + " values");
        }
        if (phi.size() != rows * n) {
            field_error(file, "smooth.operator", "expected a " + std::to_string(rows) + " x "
                + std::to_string(n) + " matrix");
        }
        break;
    case Operator::triplets:
        if (y.size() != rows) {
            field_error(file, "smooth.y", "expected " + std::to_string(rows) + " values");
        }
        for (const auto& t : triplets) {
            if (t.i >= rows || t.j >= n) {
                field_error(file, "smooth.operator", "triplet index out of range");
            }
        }
        break;
    }
    for (double t : y) {
        if (!std::isfinite(t)) { field_error(file, "smooth.y", "values must be finite"); }
    }
}

namespace {

WeightedGraph scaled_graph(const ProblemData& d)
{
    if (d.tv_scale == 0.0) { return WeightedGraph(d.vertex_count, {}); }
    std::vector<Edge> edges = d.edges;
    for (Edge& e : edges) { e.w *= d.tv_scale; }
    return WeightedGraph(d.vertex_count, std::move(edges));
}

TermPtr make_term(const NonsmoothSpec& t)
{
    if (t.type == "zero") { return zero_term(); }
    if (t.type == "weighted_abs") { return weighted_abs(t.weight); }
    if (t.type == "nonneg") { return nonneg_indicator(); }
    if (t.type == "weighted_abs_nonneg") { return weighted_abs_nonneg(t.weight); }
    if (t.type == "box") { return box_indicator(t.lo, t.hi); }
    throw InputError("problem: field 'nonsmooth.type': unknown type '" + t.type + "'");
}

} // namespace

ProblemSpec ProblemData::to_spec() const
{
    check();
    if (multidim) { throw InputError("problem: field 'multidim': not a scalar problem"); }
    ProblemSpec spec;
    spec.graph = scaled_graph(*this);
    switch (op) {
    case Operator::identity:
        spec.smooth = std::make_shared<QuadraticFidelity>(QuadraticFidelity::identity(y));
        break;
    case Operator::dense:
        spec.smooth = std::make_shared<QuadraticFidelity>(
            QuadraticFidelity::dense(y, phi, vertex_count));
        break;
    case Operator::triplets:
        spec.smooth = std::make_shared<QuadraticFidelity>(QuadraticFidelity::sparse(y,
            SparseMatrix::from_triplets(rows, vertex_count, triplets)));
        break;
    }
    if (nonsmooth.empty()) {
        spec.nonsmooth.assign(vertex_count, zero_term());
    } else if (nonsmooth.size() == 1) {
        spec.nonsmooth.assign(vertex_count, make_term(nonsmooth[0]));
    } else {
        for (const auto& t : nonsmooth) { spec.nonsmooth.push_back(make_term(t)); }
    }
    return spec;
}

MultiProblemSpec ProblemData::to_multi_spec() const
{
    check();
    if (!multidim) { throw InputError("problem: field 'multidim': missing"); }
    MultiProblemSpec spec;
    spec.graph = scaled_graph(*this);
    spec.dim = multidim->K;
    spec.smooth = std::make_shared<KLFidelity>(multidim->q, multidim->K, multidim->beta);
    spec.nonsmooth.assign(vertex_count, simplex_indicator());
    return spec;
}

namespace {

class Loader {
public:
    explicit Loader(const fs::path& json_path)
        : file_(json_path.string()), dir_(json_path.parent_path()) {}

    ProblemData load()
    {
        std::ifstream in(file_, std::ios::binary);
        if (!in) { throw InputError(file_ + ": cannot open file"); }
        Json doc;
        try {
            doc = Json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw InputError(file_ + ": JSON parse error: " + e.what());
        }
        if (!doc.is_object()) { throw InputError(file_ + ": expected a JSON object"); }

        ProblemData d;
        d.vertex_count = index_field(doc, "vertex_count");
        d.tv_scale = doc.contains("tv_scale") ? number(doc["tv_scale"], "tv_scale") : 1.0;
        if (!doc.contains("graph")) { field_error(file_, "graph", "missing"); }
        d.edges = edges(doc["graph"]);

        if (doc.contains("multidim")) {
            const Json& m = doc["multidim"];
            if (!m.is_object()) { field_error(file_, "multidim", "expected an object"); }
            MultidimData md;
            md.K = index_field(m, "K", "multidim.");
            md.beta = m.contains("beta") ? number(m["beta"], "multidim.beta") : 0.1;
            if (!m.contains("q")) { field_error(file_, "multidim.q", "missing"); }
            md.q = matrix(m["q"], "multidim.q", md.K);
            d.multidim = std::move(md);
            d.nonsmooth.push_back({"simplex"});
        } else {
            if (!doc.contains("smooth")) { field_error(file_, "smooth", "missing"); }
            smooth(doc["smooth"], d);
            if (doc.contains("nonsmooth")) {
                const Json& ns = doc["nonsmooth"];
                if (ns.is_array()) {
                    for (std::size_t i = 0; i < ns.size(); i++) {
                        d.nonsmooth.push_back(term(ns[i], "nonsmooth[" + std::to_string(i) + "]"));
                    }
                } else {
                    d.nonsmooth.push_back(term(ns, "nonsmooth"));
                }
            } else {
                d.nonsmooth.push_back({"zero"});
            }
        }
        if (doc.contains("truth")) { d.truth = vector(doc["truth"], "truth"); }
        try {
            d.check();
        } catch (const InputError& e) {
            std::string msg = e.what();
            throw InputError(file_ + msg.substr(msg.find(':')));
        }
        return d;
    }

private:
    double number(const Json& j, const std::string& field)
    {
        if (!j.is_number()) { field_error(file_, field, "expected a number"); }
        return j.get<double>();
    }

    std::size_t index_field(const Json& obj, const std::string& key,
        const std::string& prefix = "")
    {
        if (!obj.contains(key)) { field_error(file_, prefix + key, "missing"); }
        const Json& j = obj[key];
        if (!j.is_number_integer() || j.get<long long>() < 0) {
            field_error(file_, prefix + key, "expected a nonnegative integer");
        }
        return j.get<std::size_t>();
    }

    fs::path resolve(const Json& j, const std::string& field)
    {
        const fs::path p = j.get<std::string>();
        const fs::path full = p.is_absolute() ? p : dir_ / p;
        if (!fs::exists(full)) {
            field_error(file_, field, "file '" + full.string() + "' does not exist");
        }
        return full;
    }

    std::vector<double> vector(const Json& j, const std::string& field)
    {
        if (j.is_string()) { return read_vector(resolve(j, field)); }
        if (!j.is_array()) { field_error(file_, field, "expected a file path or an array"); }
        std::vector<double> out;
        for (const auto& t : j) { out.push_back(number(t, field)); }
        return out;
    }

    std::vector<std::vector<double>> rows(const Json& j, const std::string& field)
    {
        if (j.is_string()) { return read_csv(resolve(j, field)); }
        if (!j.is_array()) { field_error(file_, field, "expected a file path or an array"); }
        std::vector<std::vector<double>> out;
        for (const auto& r : j) {
            if (!r.is_array()) { field_error(file_, field, "expected an array of rows"); }
            std::vector<double> row;
            for (const auto& t : r) { row.push_back(number(t, field)); }
            out.push_back(std::move(row));
        }
        return out;
    }

    std::vector<double> matrix(const Json& j, const std::string& field, std::size_t cols)
    {
        std::vector<double> out;
        for (const auto& r : rows(j, field)) {
            if (r.size() != cols) {
                field_error(file_, field, "expected rows of " + std::to_string(cols) + " values");
            }
            out.insert(out.end(), r.begin(), r.end());
        }
        return out;
    }

    std::vector<Edge> edges(const Json& j)
    {
        std::vector<Edge> out;
        for (const auto& r : rows(j, "graph")) {
            if (r.size() != 3 || !is_index(r[0], 1u << 31) || !is_index(r[1], 1u << 31)) {
                field_error(file_, "graph", "expected rows 'u,v,w' with integer vertices");
            }
            out.push_back({static_cast<index_t>(r[0]), static_cast<index_t>(r[1]), r[2]});
        }
        return out;
    }

    void smooth(const Json& s, ProblemData& d)
    {
        if (!s.is_object()) { field_error(file_, "smooth", "expected an object"); }
        if (s.contains("type") && s["type"] != "quadratic") {
            field_error(file_, "smooth.type", "only 'quadratic' is supported");
        }
        if (!s.contains("y")) { field_error(file_, "smooth.y", "missing"); }
        d.y = vector(s["y"], "smooth.y");
        if (!s.contains("operator") || s["operator"] == "identity") {
            d.op = ProblemData::Operator::identity;
            return;
        }
        const Json& op = s["operator"];
        if (!op.is_object() || !op.contains("format") || !op.contains("path")) {
            field_error(file_, "smooth.operator",
                "expected \"identity\" or an object with format and path");
        }
        d.rows = index_field(op, "rows", "smooth.operator.");
        if (op["format"] == "dense") {
            d.op = ProblemData::Operator::dense;
            d.phi = matrix(op["path"], "smooth.operator.path", d.vertex_count);
        } else if (op["format"] == "triplets") {
            d.op = ProblemData::Operator::triplets;
            for (const auto& r : rows(op["path"], "smooth.operator.path")) {
                if (r.size() != 3 || !is_index(r[0], d.rows) || !is_index(r[1], d.vertex_count)) {
                    field_error(file_, "smooth.operator.path",
                        "expected rows 'i,j,value' within the matrix shape");
                }
                d.triplets.push_back({static_cast<std::size_t>(r[0]),
                    static_cast<std::size_t>(r[1]), r[2]});
            }
        } else {
            field_error(file_, "smooth.operator.format", "expected 'dense' or 'triplets'");
        }
    }

    NonsmoothSpec term(const Json& j, const std::string& field)
    {
        if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
            field_error(file_, field + ".type", "missing");
        }
        NonsmoothSpec t;
        t.type = j["type"].get<std::string>();
        if (j.contains("weight")) { t.weight = number(j["weight"], field + ".weight"); }
        if (j.contains("lo")) { t.lo = number(j["lo"], field + ".lo"); }
        if (j.contains("hi")) { t.hi = number(j["hi"], field + ".hi"); }
        if ((t.type == "weighted_abs" || t.type == "weighted_abs_nonneg") && !j.contains("weight")) {
            field_error(file_, field + ".weight", "missing");
        }
        return t;
    }

    std::string file_;
    fs::path dir_;
};

std::string matrix_csv(std::span<const double> values, std::size_t cols)
{
    std::string text;
    for (std::size_t i = 0; i < values.size(); i++) {
        text += format_double(values[i]);
        text += (i + 1) % cols == 0 ? "\n" : ",";
    }
    return text;
}

Json term_json(const NonsmoothSpec& t)
{
    Json j;
    j["type"] = t.type;
    if (t.type == "weighted_abs" || t.type == "weighted_abs_nonneg") { j["weight"] = t.weight; }
    if (t.type == "box") {
        j["lo"] = t.lo;
        j["hi"] = t.hi;
    }
    return j;
}

} // namespace

ProblemData load_problem(const fs::path& json_path)
{
    return Loader(json_path).load();
}

void save_problem(const ProblemData& data, const fs::path& json_path)
{
    data.check();
    const fs::path dir = json_path.parent_path();
    if (!dir.empty()) { fs::create_directories(dir); }
    const std::string stem = json_path.stem().string();
    auto companion = [&](const std::string& suffix) { return stem + "_" + suffix + ".csv"; };

    Json doc;
    doc["vertex_count"] = data.vertex_count;
    std::string graph = "u,v,w\n";
    for (const Edge& e : data.edges) {
        graph += std::to_string(e.u) + "," + std::to_string(e.v) + "," + format_double(e.w) + "\n";
    }
    write_text(dir / companion("graph"), graph);
    doc["graph"] = companion("graph");
    doc["tv_scale"] = data.tv_scale;

    if (data.multidim) {
        write_text(dir / companion("q"), matrix_csv(data.multidim->q, data.multidim->K));
        Json m;
        m["K"] = data.multidim->K;
        m["q"] = companion("q");
        m["beta"] = data.multidim->beta;
        doc["multidim"] = m;
    } else {
        Json s;
        s["type"] = "quadratic";
        write_vector(dir / companion("y"), data.y);
        s["y"] = companion("y");
        switch (data.op) {
        case ProblemData::Operator::identity:
            s["operator"] = "identity";
            break;
        case ProblemData::Operator::dense:
            write_text(dir / companion("phi"), matrix_csv(data.phi, data.vertex_count));
            s["operator"] = Json{{"format", "dense"}, {"path", companion("phi")}, {"rows", data.rows}};
            break;
        case ProblemData::Operator::triplets: {
            std::string text = "i,j,value\n";
            for (const auto& t : data.triplets) {
                text += std::to_string(t.i) + "," + std::to_string(t.j) + ","
                    + format_double(t.value) + "\n";
            }
            write_text(dir / companion("phi"), text);
            s["operator"] = Json{{"format", "triplets"}, {"path", companion("phi")}, {"rows", data.rows}};
            break;
        }
        }
        doc["smooth"] = s;
        if (data.nonsmooth.size() == 1) {
            doc["nonsmooth"] = term_json(data.nonsmooth[0]);
        } else {
            Json arr = Json::array();
            for (const auto& t : data.nonsmooth) { arr.push_back(term_json(t)); }
            doc["nonsmooth"] = arr;
        }
    }
    if (data.truth) {
        write_vector(dir / companion("truth"), *data.truth);
        doc["truth"] = companion("truth");
    }
    write_text(json_path, doc.dump(2) + "\n");
}

double Rng::uniform()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal()
{
    if (spare_) {
        const double s = *spare_;
        spare_.reset();
        return s;
    }
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    return r * std::cos(theta);
}

std::size_t Rng::index(std::size_t n)
{
    return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
}

} // namespace cutpursuit::io
