#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "deterministic.hpp"
#include "evaluation.hpp"
#include "riccati.hpp"
#include "synthesis.hpp"

namespace lqgame::io {

using json = nlohmann::json;

#ifndef LQGAME_VERSION
#define LQGAME_VERSION "0.1.0"
#endif

inline const char* version() { return LQGAME_VERSION; }

// ============================================================================
// Matrices
// ============================================================================

// Row-major nested arrays. NaN and infinities become null.
inline json to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(std::isfinite(m(i, j)) ? json(m(i, j)) : json(nullptr));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json to_json(const std::vector<double>& v) {
    json out = json::array();
    for (double d : v)
        out.push_back(std::isfinite(d) ? json(d) : json(nullptr));
    return out;
}

inline json to_json(const Vector& v) {
    return to_json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline json to_json(const std::vector<Matrix>& ms) {
    json out = json::array();
    for (const auto& m : ms)
        out.push_back(to_json(m));
    return out;
}

namespace detail {

inline double number_at(const json& j, const std::string& field) {
    if (j.is_null())
        return std::numeric_limits<double>::quiet_NaN();
    if (!j.is_number())
        throw ValidationError(field, "expected a number");
    return j.get<double>();
}

inline const json& member(const json& obj, const char* key, const std::string& field) {
    if (!obj.is_object())
        throw ValidationError(field, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end())
        throw ValidationError(field.empty() ? key : field + "." + key, "missing");
    return *it;
}

} // namespace detail

inline Matrix matrix_from_json(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty())
        throw ValidationError(field, "expected a non-empty array of rows");
    const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
    if (cols == 0)
        throw ValidationError(field, "expected rows to be non-empty arrays");
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string row_field = field + "[" + std::to_string(i) + "]";
        if (!j[i].is_array() || j[i].size() != cols)
            throw ValidationError(row_field, "expected a row of length " + std::to_string(cols));
        for (std::size_t k = 0; k < cols; ++k)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                detail::number_at(j[i][k], row_field + "[" + std::to_string(k) + "]");
    }
    return m;
}

inline std::vector<double> doubles_from_json(const json& j, const std::string& field) {
    if (!j.is_array())
        throw ValidationError(field, "expected an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(detail::number_at(j[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

inline std::vector<Matrix> matrices_from_json(const json& j, const std::string& field) {
    if (!j.is_array())
        throw ValidationError(field, "expected an array of matrices");
    std::vector<Matrix> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(matrix_from_json(j[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

// ============================================================================
// Problem files
// ============================================================================

inline json to_json(const CoefficientPath& p) {
    if (p.is_constant())
        return {{"constant", to_json(p.samples().front())}};
    json times = json::array();
    for (std::size_t j = 0; j < p.samples().size(); ++j)
        times.push_back(p.sample_time(j));
    return {{"samples", {{"times", times}, {"values", to_json(p.samples())}}}};
}

inline json problem_to_json(const GameProblem& problem) {
    const auto& d = problem.dynamics();
    const auto& c = problem.cost();
    return {
        {"horizon", problem.horizon()},
        {"dims", {{"n", problem.n()}, {"m1", problem.m1()}, {"m2", problem.m2()}}},
        {"dynamics",
         {{"A", to_json(d.A)},
          {"B1", to_json(d.B1)},
          {"B2", to_json(d.B2)},
          {"C", to_json(d.C)},
          {"D1", to_json(d.D1)},
          {"D2", to_json(d.D2)}}},
        {"cost",
         {{"G", to_json(c.G)},
          {"Q", to_json(c.Q)},
          {"S1", to_json(c.S1)},
          {"S2", to_json(c.S2)},
          {"R11", to_json(c.R11)},
          {"R12", to_json(c.R12)},
          {"R21", to_json(c.R21)},
          {"R22", to_json(c.R22)}}},
    };
}

namespace detail {

inline CoefficientPath path_from_json(const json& j, const std::string& field, double horizon, Eigen::Index rows,
                                      Eigen::Index cols) {
    if (!j.is_object())
        throw ValidationError(field, "expected {\"constant\": ...} or {\"samples\": ...}");
    auto check_shape = [&](const Matrix& m, const std::string& f) {
        if (m.rows() != rows || m.cols() != cols)
            throw ValidationError(f, "expected shape " + std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    };
    if (j.contains("constant")) {
        Matrix m = matrix_from_json(j["constant"], field + ".constant");
        check_shape(m, field + ".constant");
        return CoefficientPath::constant(std::move(m));
    }
    if (!j.contains("samples"))
        throw ValidationError(field, "expected a \"constant\" or \"samples\" key");
    const std::string sf = field + ".samples";
    const json& s = j["samples"];
    const auto times = doubles_from_json(member(s, "times", sf), sf + ".times");
    auto values = matrices_from_json(member(s, "values", sf), sf + ".values");
    if (times.size() < 2)
        throw ValidationError(sf + ".times", "need at least 2 sample times");
    if (values.size() != times.size())
        throw ValidationError(sf + ".values", "expected " + std::to_string(times.size()) + " samples, one per time");
    const double step = horizon / static_cast<double>(times.size() - 1);
    for (std::size_t i = 0; i < times.size(); ++i)
        if (!(std::abs(times[i] - static_cast<double>(i) * step) <= 1e-9 * std::max(1.0, horizon)))
            throw ValidationError(sf + ".times", "must be uniform on [0, horizon] (index " + std::to_string(i) + ")");
    for (std::size_t i = 0; i < values.size(); ++i)
        check_shape(values[i], sf + ".values[" + std::to_string(i) + "]");
    return CoefficientPath::sampled(std::move(values), horizon);
}

inline Eigen::Index dim_from_json(const json& dims, const char* key) {
    const json& v = member(dims, key, "dims");
    if (!v.is_number_integer() || v.get<long long>() < 1)
        throw ValidationError(std::string("dims.") + key, "expected a positive integer");
    return static_cast<Eigen::Index>(v.get<long long>());
}

} // namespace detail

inline GameProblem problem_from_json(const json& doc) {
    if (!doc.is_object())
        throw ValidationError("", "expected a JSON object at top level");
    const json& h = detail::member(doc, "horizon", "");
    if (!h.is_number())
        throw ValidationError("horizon", "expected a number");
    const double horizon = h.get<double>();
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw ValidationError("horizon", "must be positive and finite");
    const json& dims = detail::member(doc, "dims", "");
    const auto n = detail::dim_from_json(dims, "n");
    const auto m1 = detail::dim_from_json(dims, "m1");
    const auto m2 = detail::dim_from_json(dims, "m2");

    const json& d = detail::member(doc, "dynamics", "");
    const json& c = detail::member(doc, "cost", "");
    auto path = [&](const json& obj, const char* section, const char* key, Eigen::Index r, Eigen::Index cc) {
        const std::string field = std::string(section) + "." + key;
        return detail::path_from_json(detail::member(obj, key, section), field, horizon, r, cc);
    };
    StateDynamics dyn{path(d, "dynamics", "A", n, n),   path(d, "dynamics", "B1", n, m1),
                      path(d, "dynamics", "B2", n, m2), path(d, "dynamics", "C", n, n),
                      path(d, "dynamics", "D1", n, m1), path(d, "dynamics", "D2", n, m2)};
    Matrix G = matrix_from_json(detail::member(c, "G", "cost"), "cost.G");
    if (G.rows() != n || G.cols() != n)
        throw ValidationError("cost.G", "expected shape " + std::to_string(n) + "x" + std::to_string(n));
    CostWeights cost{std::move(G),
                     path(c, "cost", "Q", n, n),
                     path(c, "cost", "S1", m1, n),
                     path(c, "cost", "S2", m2, n),
                     path(c, "cost", "R11", m1, m1),
                     path(c, "cost", "R12", m1, m2),
                     path(c, "cost", "R21", m2, m1),
                     path(c, "cost", "R22", m2, m2)};
    return GameProblem(std::move(dyn), std::move(cost), horizon);
}

namespace detail {

// 1-based line and column of a byte offset.
inline std::string position(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

} // namespace detail

namespace detail {

inline int array_depth(const json& j) {
    if (!j.is_array())
        return 0;
    int depth = 0;
    for (const auto& e : j)
        depth = std::max(depth, array_depth(e));
    return depth + 1;
}

inline bool has_object(const json& j) {
    if (j.is_object())
        return true;
    if (j.is_array())
        for (const auto& e : j)
            if (has_object(e))
                return true;
    return false;
}

inline void pretty(const json& j, std::string& out, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
    if (j.is_object() && !j.empty()) {
        out += "{\n";
        std::size_t i = 0;
        for (auto it = j.begin(); it != j.end(); ++it, ++i) {
            out += inner + json(it.key()).dump() + ": ";
            pretty(it.value(), out, indent + 1);
            out += i + 1 < j.size() ? ",\n" : "\n";
        }
        out += pad + "}";
    } else if (j.is_array() && !j.empty() && (has_object(j) || array_depth(j) > 2)) {
        out += "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            out += inner;
            pretty(j[i], out, indent + 1);
            out += i + 1 < j.size() ? ",\n" : "\n";
        }
        out += pad + "]";
    } else {
        out += j.dump();
    }
}

} // namespace detail

// Indented JSON with vectors and matrices kept on one line each.
inline std::string pretty(const json& j) {
    std::string out;
    detail::pretty(j, out, 0);
    return out + "\n";
}

inline json parse_json(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
        throw ParseError(source + ": " + detail::position(text, at) + ": invalid JSON (" +
                         (text.find_first_not_of(" \t\r\n") == std::string::npos ? std::string("empty document")
                                                                                 : std::string(e.what())) +
                         ")");
    }
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot write " + path.string());
    out << text;
    if (!out)
        throw Error("failed writing " + path.string());
}

inline GameProblem parse_problem(const std::string& text, const std::string& source = "<problem>") {
    return problem_from_json(parse_json(text, source));
}

inline GameProblem load_problem(const std::filesystem::path& path) {
    return parse_problem(read_text(path), path.string());
}

inline void save_problem(const std::filesystem::path& path, const GameProblem& problem) {
    write_text(path, pretty(problem_to_json(problem)));
}

// ============================================================================
// Solution files
// ============================================================================

struct SolutionFile {
    RiccatiSolution solution;
    std::optional<FeedbackLaw> law;
    std::string source = "riccati";  // or "representation"
    std::vector<Matrix> lambda_nodes;
    std::vector<double> condition_numbers;
    json meta = json::object();
};

inline SolutionKind kind_from_string(const std::string& s) {
    if (s == "game")
        return SolutionKind::game;
    if (s == "player1")
        return SolutionKind::player1;
    if (s == "player2")
        return SolutionKind::player2;
    throw ValidationError("kind", "unknown solution kind '" + s + "'");
}

inline json solution_to_json(const SolutionFile& f) {
    const auto& s = f.solution;
    json doc = {
        {"format", "lqgame.solution/1"},
        {"source", f.source},
        {"kind", to_string(s.kind)},
        {"grid", {{"horizon", s.grid.horizon()}, {"n_steps", s.grid.n_steps()}}},
        {"P_nodes", to_json(s.P_nodes)},
        {"margins",
         {{"player1", s.margin1_nodes.empty() ? json(nullptr) : to_json(s.margin1_nodes)},
          {"player2", s.margin2_nodes.empty() ? json(nullptr) : to_json(s.margin2_nodes)}}},
        {"theta_nodes", nullptr},
        {"meta", f.meta},
    };
    if (f.law) {
        doc["theta_nodes"] = to_json(f.law->theta_nodes);
        doc["theta_dims"] = {{"m1", f.law->m1}, {"m2", f.law->m2}};
    }
    if (!f.lambda_nodes.empty())
        doc["lambda_nodes"] = to_json(f.lambda_nodes);
    if (!f.condition_numbers.empty())
        doc["condition_numbers"] = to_json(f.condition_numbers);
    return doc;
}

inline SolutionFile solution_from_json(const json& doc) {
    SolutionFile f;
    const json& g = detail::member(doc, "grid", "");
    const json& h = detail::member(g, "horizon", "grid");
    const json& ns = detail::member(g, "n_steps", "grid");
    if (!h.is_number() || !ns.is_number_unsigned())
        throw ValidationError("grid", "expected numeric horizon and n_steps");
    f.solution.grid = TimeGrid(h.get<double>(), ns.get<std::size_t>());
    f.solution.kind = kind_from_string(detail::member(doc, "kind", "").get<std::string>());
    f.solution.P_nodes = matrices_from_json(detail::member(doc, "P_nodes", ""), "P_nodes");
    if (f.solution.P_nodes.size() != f.solution.grid.size())
        throw ValidationError("P_nodes", "expected one matrix per grid node");
    const json& margins = detail::member(doc, "margins", "");
    if (!margins["player1"].is_null())
        f.solution.margin1_nodes = doubles_from_json(margins["player1"], "margins.player1");
    if (!margins["player2"].is_null())
        f.solution.margin2_nodes = doubles_from_json(margins["player2"], "margins.player2");
    if (doc.contains("source"))
        f.source = doc["source"].get<std::string>();
    if (doc.contains("theta_nodes") && !doc["theta_nodes"].is_null()) {
        FeedbackLaw law;
        law.grid = f.solution.grid;
        law.theta_nodes = matrices_from_json(doc["theta_nodes"], "theta_nodes");
        const json& td = detail::member(doc, "theta_dims", "");
        law.m1 = td.at("m1").get<Eigen::Index>();
        law.m2 = td.at("m2").get<Eigen::Index>();
        f.law = std::move(law);
    }
    if (doc.contains("lambda_nodes"))
        f.lambda_nodes = matrices_from_json(doc["lambda_nodes"], "lambda_nodes");
    if (doc.contains("condition_numbers"))
        f.condition_numbers = doubles_from_json(doc["condition_numbers"], "condition_numbers");
    if (doc.contains("meta"))
        f.meta = doc["meta"];
    return f;
}

inline void save_solution(const std::filesystem::path& path, const SolutionFile& f) {
    write_text(path, pretty(solution_to_json(f)));
}

inline SolutionFile load_solution(const std::filesystem::path& path) {
    return solution_from_json(parse_json(read_text(path), path.string()));
}

// A representation result stored in the solution-file layout (margins omitted).
inline SolutionFile solution_from_representation(const RepresentationResult& rep) {
    SolutionFile f;
    f.source = "representation";
    f.solution.grid = rep.grid;
    f.solution.kind = SolutionKind::game;
    f.solution.P_nodes = rep.P_rep_nodes;
    f.lambda_nodes = rep.Lambda_nodes;
    f.condition_numbers = rep.condition_numbers;
    return f;
}

// CSV plot data: t, P entries (row-major, P_i_j), margin1, margin2.
inline std::string solution_csv(const RiccatiSolution& s, const std::string& header_comment = "") {
    std::ostringstream out;
    out.precision(17);
    if (!header_comment.empty())
        out << "# " << header_comment << "\n";
    const auto n = s.P_nodes.front().rows();
    out << "t";
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            out << ",P_" << i << "_" << j;
    out << ",margin1,margin2\n";
    for (std::size_t k = 0; k < s.P_nodes.size(); ++k) {
        out << s.grid.node(k);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                out << "," << s.P_nodes[k](i, j);
        out << ",";
        if (k < s.margin1_nodes.size())
            out << s.margin1_nodes[k];
        out << ",";
        if (k < s.margin2_nodes.size())
            out << s.margin2_nodes[k];
        out << "\n";
    }
    return out.str();
}

// ============================================================================
// Reports
// ============================================================================

inline json to_json(const CostEstimate& e) {
    return {{"mean", e.mean}, {"std_error", e.std_error}, {"n_paths", e.n_paths}};
}

inline json to_json(const SweepOutcome& o) {
    json j = {{"solved", o.solved()}, {"cause", to_string(o.cause)}};
    if (!o.solved()) {
        j["failure_time"] = std::isfinite(o.failure_time) ? json(o.failure_time) : json(nullptr);
        j["failure_margin"] = std::isfinite(o.failure_margin) ? json(o.failure_margin) : json(nullptr);
        j["message"] = o.message;
    }
    return j;
}

inline json to_json(const CertificateReport& r) {
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    return {{"status", r.certified() ? "CERTIFIED" : "NOT_CERTIFIED"},
            {"failing_side", r.failing_side},
            {"failure_time", num(r.failure_time)},
            {"min_margin1", num(r.min_margin1)},
            {"max_margin2", num(r.max_margin2)},
            {"player1", to_json(r.player1)},
            {"player2", to_json(r.player2)}};
}

inline json to_json(const SaddleReport& r) {
    json g1 = json::array(), g2 = json::array();
    for (const auto& g : r.gaps_player1)
        g1.push_back(to_json(g));
    for (const auto& g : r.gaps_player2)
        g2.push_back(to_json(g));
    return {{"verdict", r.pass ? "PASS" : "FAIL"},
            {"value_analytic", r.value_analytic},
            {"value_mc", to_json(r.value_mc)},
            {"discretization_allowance", r.discretization_allowance},
            {"value_tolerance", r.value_tolerance},
            {"value_ok", r.value_ok},
            {"threshold_se", r.threshold_se},
            {"gaps_player1", g1},
            {"gaps_player2", g2},
            {"failing_gaps1", r.failing_gaps1},
            {"failing_gaps2", r.failing_gaps2},
            {"perturbation_class",
             "deterministic sampled paths (cosine combinations, unit L2 norm); not exhaustive over adapted controls"},
            {"gain_interpolation", "linear between grid nodes"}};
}

inline json to_json(const CostTable& t) {
    json rows = json::array();
    for (std::size_t i = 0; i < t.scalars.size(); ++i)
        rows.push_back({{"lambda", t.scalars[i]}, {"cost", to_json(t.costs[i])}});
    return rows;
}

inline json to_json(const ComparisonReport& r) {
    return {{"min_lower", r.min_lower},
            {"min_upper", r.min_upper},
            {"violating_nodes", r.violating_nodes},
            {"pass", r.pass}};
}

inline json to_json(const EquivalenceReport& r) {
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json j = {{"certificate", to_json(r.certificate)},
              {"game", to_json(r.game)},
              {"representation_ok", r.representation_ok()},
              {"cross_error", num(r.cross_error)},
              {"lambdas", r.lambdas},
              {"lambda_errors", to_json(r.lambda_errors)},
              {"lambda_errors_decreasing", r.lambda_errors_decreasing},
              {"a3_sufficient_not_necessary", r.a3_not_necessary},
              {"consistent", r.consistent}};
    if (!r.representation_ok())
        j["representation_error"] = r.representation_error;
    else
        j["max_symmetry_defect"] = r.representation->max_symmetry_defect;
    return j;
}

inline json to_json(const SolverConfig& c) {
    return {{"eps_reg", c.eps_reg}, {"blowup_cap", c.blowup_cap}, {"n_steps", c.n_steps}};
}

} // namespace lqgame::io
