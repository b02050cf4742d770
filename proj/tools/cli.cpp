#include "cli.hpp"

#include "nonholo/coin.hpp"
#include "nonholo/errors.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace nonholo::cli {

namespace {

Json to_json(const Vec& v)
{
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back(v(i));
    return a;
}

Json rows_json(const Mat& m)
{
    Json a = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        a.push_back(to_json(Vec(m.row(i).transpose())));
    return a;
}

Json cols_json(const Mat& m)
{
    return rows_json(m.transpose());
}

Json list_json(const std::vector<Vec>& values)
{
    Json a = Json::array();
    for (const Vec& v : values)
        a.push_back(to_json(v));
    return a;
}

Json list_json(const std::vector<double>& values)
{
    Json a = Json::array();
    for (double v : values)
        a.push_back(v);
    return a;
}

Vec vec_from_json(const Json& j, const std::string& key)
{
    if (j.is_string())
        return parse_reals(j.get<std::string>());
    if (!j.is_array())
        throw ConfigError("'" + key + "' must be an array of numbers or a comma-separated string");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            throw ConfigError("'" + key + "' must contain only numbers");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

std::vector<Vec> vec_list_from_json(const Json& j, const std::string& key)
{
    if (!j.is_array())
        throw ConfigError("schema mismatch: '" + key + "' must be an array");
    std::vector<Vec> out;
    out.reserve(j.size());
    for (const Json& e : j)
        out.push_back(vec_from_json(e, key));
    return out;
}

double real_from_json(const Json& j, const std::string& key)
{
    if (j.is_number())
        return j.get<double>();
    if (j.is_string()) {
        const Vec v = parse_reals(j.get<std::string>());
        if (v.size() == 1)
            return v(0);
    }
    throw ConfigError("'" + key + "' must be a number");
}

std::string string_from_json(const Json& j, const std::string& key)
{
    if (!j.is_string())
        throw ConfigError("'" + key + "' must be a string");
    return j.get<std::string>();
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw ConfigError("cannot open output file '" + path + "'");
    f << text;
    if (!f)
        throw ConfigError("failed writing '" + path + "'");
}

std::string read_text(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw ConfigError("cannot read '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Json parse_json_text(const std::string& text, const std::string& what)
{
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(what + " is not valid JSON: " + e.what());
    }
}

std::map<std::string, double> resolved_params(const ModelEntry& entry, const std::map<std::string, double>& given)
{
    std::map<std::string, double> out = entry.defaults;
    for (const auto& [key, value] : given) {
        if (!out.count(key)) {
            std::string names;
            for (const auto& d : entry.defaults)
                names += (names.empty() ? "" : ", ") + d.first;
            throw ConfigError("model '" + entry.name + "' has no parameter '" + key + "' (parameters: " + names + ")");
        }
        out[key] = value;
    }
    return out;
}

Vec vector_or(const std::optional<Vec>& v, int n, const std::string& name)
{
    if (!v)
        return Vec::Zero(n);
    if (v->size() != n)
        throw ConfigError("'" + name + "' needs " + std::to_string(n) + " components, got " + std::to_string(v->size()));
    return *v;
}

Pipeline parse_pipeline(const std::string& s)
{
    if (s == "classical")
        return Pipeline::classical;
    if (s == "geometric")
        return Pipeline::geometric;
    throw ConfigError("pipeline must be 'classical' or 'geometric', got '" + s + "'");
}

ConditionMode parse_mode(const std::string& s)
{
    if (s == "paper")
        return ConditionMode::paper_literal;
    if (s == "full")
        return ConditionMode::full;
    throw ConfigError("mode must be 'paper' or 'full', got '" + s + "'");
}

struct Problem {
    std::map<std::string, double> params;
    OcpSpec spec;
    SolveOptions options;
    Vec guess;
};

Problem build_problem(const RunConfig& cfg)
{
    const ModelEntry& entry = find_model(cfg.model);
    Problem pr;
    pr.params = resolved_params(entry, cfg.params);
    OcpSpec& spec = pr.spec;
    spec.sys = entry.build(pr.params);
    spec.classical = entry.classical ? entry.classical(pr.params) : hamiltonian_from_system(spec.sys);
    const int n = spec.sys.dim;
    spec.q0 = vector_or(cfg.q0, n, "q0");
    spec.v0 = vector_or(cfg.v0, n, "v0");
    spec.qT = cfg.qT ? vector_or(cfg.qT, n, "qT") : spec.q0;
    spec.vT = vector_or(cfg.vT, n, "vT");
    spec.horizon = cfg.horizon;
    spec.dt = cfg.dt;
    spec.pipeline = parse_pipeline(cfg.pipeline);
    spec.mode = parse_mode(cfg.mode);
    if (cfg.weights)
        spec.weights = vector_or(cfg.weights, 2 * n, "weights");
    pr.options.max_iter = cfg.max_iter;
    pr.options.tol = cfg.tol;
    pr.options.fd_step = cfg.fd_step;
    pr.guess = vector_or(cfg.guess, spec.unknown_count(), "guess");
    return pr;
}

Json quadratic_table(const ConnectionCoefficients& gamma, int n)
{
    Json rows = Json::array();
    for (int i = 0; i < n; ++i) {
        Json terms = Json::array();
        for (int j = 0; j < n; ++j)
            for (int k = j; k < n; ++k) {
                const double c = j == k ? gamma(i, j, j) : gamma(i, j, k) + gamma(i, k, j);
                terms.push_back({{"monomial", "v" + std::to_string(j + 1) + " v" + std::to_string(k + 1)},
                                 {"coefficient", c}});
            }
        rows.push_back({{"coordinate", i + 1}, {"terms", terms}});
    }
    return rows;
}

Json spec_echo(const RunConfig& cfg, const Problem& pr)
{
    const OcpSpec& s = pr.spec;
    Json params = Json::object();
    for (const auto& [k, v] : pr.params)
        params[k] = v;
    return {{"model", cfg.model},
            {"params", params},
            {"q0", to_json(s.q0)},
            {"v0", to_json(s.v0)},
            {"qT", to_json(s.qT)},
            {"vT", to_json(s.vT)},
            {"T", s.horizon},
            {"dt", s.dt},
            {"pipeline", to_string(s.pipeline)},
            {"mode", to_string(s.mode)},
            {"weights", to_json(s.weight_vector())},
            {"guess", to_json(pr.guess)},
            {"tol", pr.options.tol},
            {"max_iter", pr.options.max_iter},
            {"fd_step", pr.options.fd_step}};
}

Json trajectory_json(const Trajectory& traj)
{
    std::vector<Vec> q, v;
    for (const auto& s : traj.states) {
        q.push_back(s.q);
        v.push_back(s.v);
    }
    Json j = {{"t", list_json(traj.times)},
              {"q", list_json(q)},
              {"v", list_json(v)},
              {"tau", list_json(traj.controls)},
              {"mu", list_json(traj.mu)},
              {"eta", list_json(traj.eta)}};
    if (!traj.xi.empty())
        j["xi"] = list_json(traj.xi);
    return j;
}

Trajectory trajectory_from_json(const Json& j, int n)
{
    Trajectory traj;
    const Json& t = j.at("t");
    if (!t.is_array())
        throw ConfigError("schema mismatch: trajectory.t must be an array");
    for (const Json& e : t) {
        if (!e.is_number())
            throw ConfigError("schema mismatch: trajectory.t must contain numbers");
        traj.times.push_back(e.get<double>());
    }
    const std::vector<Vec> q = vec_list_from_json(j.at("q"), "trajectory.q");
    const std::vector<Vec> v = vec_list_from_json(j.at("v"), "trajectory.v");
    traj.controls = vec_list_from_json(j.at("tau"), "trajectory.tau");
    traj.mu = vec_list_from_json(j.at("mu"), "trajectory.mu");
    traj.eta = vec_list_from_json(j.at("eta"), "trajectory.eta");
    if (j.contains("xi"))
        traj.xi = vec_list_from_json(j.at("xi"), "trajectory.xi");
    const std::size_t count = traj.times.size();
    if (count == 0 || q.size() != count || v.size() != count || traj.controls.size() != count ||
        traj.mu.size() != count || traj.eta.size() != count || (!traj.xi.empty() && traj.xi.size() != count))
        throw ConfigError("schema mismatch: trajectory arrays have inconsistent lengths");
    for (std::size_t i = 0; i < count; ++i) {
        if (q[i].size() != n || v[i].size() != n)
            throw ConfigError("schema mismatch: trajectory state dimension does not match the model");
        traj.states.push_back({q[i], v[i]});
    }
    return traj;
}

Json summary_json(const ResidualSummary& s)
{
    return {{"control", s.control},           {"mu_projected", s.mu_projected},
            {"mu_orthogonal", s.mu_orthogonal}, {"eta", s.eta},
            {"eta_orthogonal", s.eta_orthogonal}, {"curvature", s.curvature},
            {"lambda_term", s.lambda_term}};
}

int exit_code_for(const Error& e)
{
    if (e.code() == Errc::integration_diverged)
        return integration_error;
    if (e.is_geometric())
        return geometry_error;
    return config_error;
}

} // namespace

const std::vector<ModelEntry>& registry()
{
    static const std::vector<ModelEntry> models = [] {
        const std::map<std::string, double> coin_defaults{{"m", 1.0}, {"J", 1.0}};
        std::vector<ModelEntry> r;
        r.push_back({"coin", "vertical coin with knife-edge constraint, forward force and steering torque",
                     coin_defaults,
                     [](const auto& p) { return coin::build_coin(coin::params_from_map(p)); },
                     [](const auto& p) { return coin::classical_spec(coin::params_from_map(p)); }});
        r.push_back({"coin_x_force", "vertical coin with the force fixed along the x axis", coin_defaults,
                     [](const auto& p) { return coin::build_coin_x_force(coin::params_from_map(p)); },
                     nullptr});
        r.push_back({"free_body", "planar rigid body without constraints, fully actuated", coin_defaults,
                     [](const auto& p) { return coin::build_free_body(coin::params_from_map(p)); }, nullptr});
        return r;
    }();
    return models;
}

const ModelEntry& find_model(const std::string& name)
{
    for (const auto& m : registry())
        if (m.name == name)
            return m;
    std::string names;
    for (const auto& m : registry())
        names += (names.empty() ? "" : ", ") + m.name;
    throw ConfigError("unknown model '" + name + "'; registered models: " + names);
}

Vec parse_reals(const std::string& text)
{
    std::vector<double> values;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        const auto first = item.find_first_not_of(" \t");
        if (first == std::string::npos)
            throw ConfigError("empty entry in number list '" + text + "'");
        const std::string trimmed = item.substr(first, item.find_last_not_of(" \t") - first + 1);
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(trimmed.c_str(), &end);
        if (errno != 0 || end != trimmed.c_str() + trimmed.size() || !std::isfinite(v))
            throw ConfigError("'" + trimmed + "' is not a finite number");
        values.push_back(v);
        if (comma == std::string::npos)
            break;
        pos = comma + 1;
    }
    return Eigen::Map<const Vec>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::map<std::string, double> parse_params(const std::string& text)
{
    std::map<std::string, double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("parameter '" + item + "' must have the form name=value");
        const Vec v = parse_reals(item.substr(eq + 1));
        out[item.substr(0, eq)] = v(0);
    }
    return out;
}

RunConfig config_from_json(const Json& doc)
{
    if (!doc.is_object())
        throw ConfigError("configuration must be a JSON object");
    RunConfig cfg;
    for (const auto& [key, value] : doc.items()) {
        if (key == "model")
            cfg.model = string_from_json(value, key);
        else if (key == "params") {
            if (value.is_string())
                cfg.params = parse_params(value.get<std::string>());
            else if (value.is_object())
                for (const auto& [k, v] : value.items())
                    cfg.params[k] = real_from_json(v, "params." + k);
            else
                throw ConfigError("'params' must be an object or a 'k=v,...' string");
        } else if (key == "at")
            cfg.at = vec_from_json(value, key);
        else if (key == "q0")
            cfg.q0 = vec_from_json(value, key);
        else if (key == "v0")
            cfg.v0 = vec_from_json(value, key);
        else if (key == "qT")
            cfg.qT = vec_from_json(value, key);
        else if (key == "vT")
            cfg.vT = vec_from_json(value, key);
        else if (key == "tau")
            cfg.tau = vec_from_json(value, key);
        else if (key == "guess")
            cfg.guess = vec_from_json(value, key);
        else if (key == "weights")
            cfg.weights = vec_from_json(value, key);
        else if (key == "T")
            cfg.horizon = real_from_json(value, key);
        else if (key == "dt")
            cfg.dt = real_from_json(value, key);
        else if (key == "fd_step")
            cfg.fd_step = real_from_json(value, key);
        else if (key == "tol")
            cfg.tol = real_from_json(value, key);
        else if (key == "max_iter") {
            const double it = real_from_json(value, key);
            if (it != std::floor(it) || it < 1 || it > 1e6)
                throw ConfigError("'max_iter' must be a positive integer");
            cfg.max_iter = static_cast<int>(it);
        } else if (key == "pipeline")
            cfg.pipeline = string_from_json(value, key);
        else if (key == "mode")
            cfg.mode = string_from_json(value, key);
        else if (key == "out")
            cfg.out = string_from_json(value, key);
        else if (key == "solution")
            cfg.solution = string_from_json(value, key);
        else if (key == "reproject") {
            if (!value.is_boolean())
                throw ConfigError("'reproject' must be a boolean");
            cfg.reproject = value.get<bool>();
        } else
            throw ConfigError("unknown configuration key '" + key + "'");
    }
    for (const auto& [name, v] : {std::pair{"T", cfg.horizon}, {"dt", cfg.dt}, {"fd_step", cfg.fd_step},
                                  {"tol", cfg.tol}})
        if (!(v > 0.0) || !std::isfinite(v))
            throw ConfigError(std::string("'") + name + "' must be positive");
    parse_pipeline(cfg.pipeline);
    parse_mode(cfg.mode);
    return cfg;
}

int thread_count_from_env()
{
    const char* env = std::getenv("NONHOLO_THREADS");
    if (env == nullptr || *env == '\0')
        return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1 || v > 1024)
        throw ConfigError(std::string("NONHOLO_THREADS must be a positive integer, got '") + env + "'");
    return static_cast<int>(v);
}

Json cmd_describe(const RunConfig& cfg)
{
    const ModelEntry& entry = find_model(cfg.model);
    const auto params = resolved_params(entry, cfg.params);
    const MechanicalSystem sys = entry.build(params);
    const int n = sys.dim;
    const Point q = vector_or(cfg.at, n, "at");
    const Mat g = sys.metric_at(q);
    const DistributionBasis basis = distribution_basis(sys, q);
    const ProjectorPair pp = projector_derivatives(sys, q);
    Json pj = Json::object();
    for (const auto& [k, v] : params)
        pj[k] = v;
    return {{"model", entry.name},
            {"params", pj},
            {"point", to_json(q)},
            {"dimension", n},
            {"num_constraints", sys.num_constraints},
            {"num_inputs", sys.num_inputs},
            {"metric", rows_json(g)},
            {"constraint_forms", rows_json(sys.constraints_at(q))},
            {"christoffel", quadratic_table(levi_civita(sys, q), n)},
            {"nonholonomic_christoffel", quadratic_table(nonholonomic_christoffel(sys, q), n)},
            {"P", rows_json(pp.p)},
            {"Q", rows_json(pp.q)},
            {"D_basis", cols_json(basis.x)},
            {"Dstar_basis", rows_json(basis.dual)},
            {"annihilator", rows_json(basis.annihilator)},
            {"input_forms", rows_json(sys.actuated_at(q))},
            {"input_fields", cols_json(input_vector_fields(sys, q))},
            {"unactuated_forms", rows_json(sys.unactuated_at(q))}};
}

Json cmd_simulate(const RunConfig& cfg, std::ostream* csv)
{
    const ModelEntry& entry = find_model(cfg.model);
    const auto params = resolved_params(entry, cfg.params);
    const MechanicalSystem sys = entry.build(params);
    const int n = sys.dim;
    const DynState s0{vector_or(cfg.q0, n, "q0"), vector_or(cfg.v0, n, "v0")};
    const Vec tau = vector_or(cfg.tau, sys.num_inputs, "tau");
    const Trajectory traj = integrate(
        sys, s0, [tau](double, const DynState&) { return tau; }, cfg.horizon, cfg.dt, {cfg.reproject});
    if (csv != nullptr)
        write_trajectory_csv(traj, *csv);
    const auto& drift = traj.diagnostics.at("drift");
    return {{"model", entry.name},
            {"samples", traj.size()},
            {"final_t", traj.times.back()},
            {"final_q", to_json(traj.states.back().q)},
            {"final_v", to_json(traj.states.back().v)},
            {"max_drift", *std::max_element(drift.begin(), drift.end())},
            {"energy_balance_error", energy_balance_error(sys, traj)},
            {"reproject", cfg.reproject}};
}

Json cmd_solve(const RunConfig& cfg, int threads)
{
    Problem pr = build_problem(cfg);
    pr.options.threads = threads;
    const ShootingResult res = solve(pr.spec, pr.guess, pr.options);
    Json diag = Json::object();
    for (const auto& [k, v] : res.trajectory.diagnostics)
        diag[k] = list_json(v);
    return {{"format", "nonholo-solution"},
            {"version", 1},
            {"spec", spec_echo(cfg, pr)},
            {"unknowns", to_json(res.unknowns)},
            {"converged", res.converged},
            {"status", res.status},
            {"iterations", res.iterations},
            {"residual", {{"vector", to_json(res.terminal_residual)}, {"norm", res.residual_norm}}},
            {"cost", res.cost},
            {"jacobian_condition", res.jacobian_condition},
            {"trajectory", trajectory_json(res.trajectory)},
            {"diagnostics", diag}};
}

Json cmd_verify(const RunConfig& /*cfg*/, const Json& solution)
{
    RunConfig scfg;
    Vec unknowns;
    double stored_norm = 0.0;
    Json traj_json;
    try {
        if (!solution.is_object() || solution.value("format", "") != "nonholo-solution")
            throw ConfigError("schema mismatch: not a solution document");
        scfg = config_from_json(solution.at("spec"));
        unknowns = vec_from_json(solution.at("unknowns"), "unknowns");
        const Json& r = solution.at("residual");
        if (!r.at("norm").is_number())
            throw ConfigError("schema mismatch: residual.norm must be a number");
        stored_norm = r.at("norm").get<double>();
        traj_json = solution.at("trajectory");
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("schema mismatch: ") + e.what());
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        throw ConfigError(what.rfind("schema mismatch", 0) == 0 ? what : "schema mismatch: " + what);
    }
    const Problem pr = build_problem(scfg);
    const OcpSpec& spec = pr.spec;
    const MechanicalSystem& sys = spec.sys;
    Trajectory traj;
    try {
        traj = trajectory_from_json(traj_json, sys.dim);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("schema mismatch: ") + e.what());
    }
    if (unknowns.size() != spec.unknown_count())
        throw ConfigError("schema mismatch: unknown vector length does not match the pipeline");

    const DynState& last = traj.states.back();
    Vec terminal(2 * sys.dim);
    terminal << last.q - spec.qT, last.v - spec.vT;
    const double recomputed = spec.weight_vector().cwiseProduct(terminal).norm();
    const double reshoot = shoot_residual(spec, unknowns).norm();
    const double round_trip = std::max(std::abs(recomputed - stored_norm), std::abs(reshoot - stored_norm));

    Json checks = Json::array();
    bool strict_ok = true;
    const auto check = [&](const std::string& name, double value, double tol, bool strict) {
        const bool pass = std::isfinite(value) && value <= tol;
        if (strict && !pass)
            strict_ok = false;
        checks.push_back({{"name", name}, {"value", value}, {"tolerance", tol}, {"strict", strict}, {"pass", pass}});
    };

    ResidualSummary paper, full;
    Json discrepancy = Json::object();
    if (spec.pipeline == Pipeline::classical) {
        const CrossVerifyReport rep = cross_verify(spec, traj);
        paper = rep.paper;
        full = rep.full;
        check("control_agreement", rep.control_agreement, 1e-9, true);
        const ResidualSummary& own = spec.mode == ConditionMode::full ? full : paper;
        check("control_equation", own.control, 1e-7, true);
        check("eta_equation", own.eta, 1e-7, true);
        check("mu_equation_projected", own.mu_projected, 1e-7, true);
        check("mu_tilde_max", rep.mu_tilde_max_abs, 1e-9, false);
        check("lambda_term_max", rep.lambda_term_max, 1e-9, false);
        discrepancy["t"] = list_json(rep.times);
        discrepancy["mu_tilde"] = {{"max_abs", rep.mu_tilde_max_abs}, {"values", list_json(rep.mu_tilde)}};
        discrepancy["eta_tilde"] = {{"max_abs", rep.eta_tilde_max_abs}, {"values", list_json(rep.eta_tilde)}};
        discrepancy["lambda_term"] = {{"max", rep.lambda_term_max}, {"values", list_json(rep.lambda_term)}};
        discrepancy["control_error"] = list_json(rep.control_error);
    } else {
        const std::vector<ResidualRecord> p = necessary_condition_residual(sys, traj, ConditionMode::paper_literal);
        const std::vector<ResidualRecord> f = necessary_condition_residual(sys, traj, ConditionMode::full);
        paper = summarize(p);
        full = summarize(f);
        const ResidualSummary& own = spec.mode == ConditionMode::full ? full : paper;
        check("control_equation", own.control, 1e-7, true);
        check("eta_equation", own.eta, 1e-7, true);
        check("mu_equation_projected", own.mu_projected, 1e-7, true);
        check("terminal_residual", stored_norm, pr.options.tol, false);
        std::vector<double> lam;
        for (const auto& r : f)
            lam.push_back(r.lambda_term_norm);
        discrepancy["t"] = list_json(traj.times);
        discrepancy["lambda_term"] = {{"max", full.lambda_term}, {"values", list_json(lam)}};
    }
    check("round_trip_residual", round_trip, 1e-12, true);

    return {{"format", "nonholo-verify"},
            {"version", 1},
            {"pipeline", to_string(spec.pipeline)},
            {"mode", to_string(spec.mode)},
            {"samples", traj.size()},
            {"round_trip",
             {{"stored_norm", stored_norm}, {"recomputed_norm", recomputed}, {"reshoot_norm", reshoot}}},
            {"checks", checks},
            {"modes", {{"paper", summary_json(paper)}, {"full", summary_json(full)}}},
            {"discrepancy", discrepancy},
            {"all_strict_pass", strict_ok}};
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("nonholo");
    for (const auto& a : args)
        argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Force-minimizing trajectories for constrained mechanical systems",
                 "nonholo"};
    app.require_subcommand(1);
    std::map<std::string, std::string> flags;
    bool no_reproject = false;
    const auto add = [&](CLI::App* sub, const std::vector<std::pair<std::string, std::string>>& names) {
        for (const auto& [name, help] : names)
            sub->add_option("--" + name, flags[name], help);
    };
    const std::vector<std::pair<std::string, std::string>> common{
        {"model", "registered model name"}, {"params", "model parameters, k=v,..."}, {"config", "JSON config file"},
        {"out", "output path"}};
    const std::vector<std::pair<std::string, std::string>> motion{
        {"q0", "initial configuration"}, {"v0", "initial velocity"}, {"T", "horizon"}, {"dt", "time step"}};
    const std::vector<std::pair<std::string, std::string>> ocp{
        {"qT", "terminal configuration"}, {"vT", "terminal velocity"},  {"pipeline", "classical|geometric"},
        {"mode", "paper|full"},          {"guess", "initial adjoints"}, {"weights", "terminal weights (2n)"},
        {"tol", "residual tolerance"},   {"max-iter", "iteration cap"}, {"fd-step", "Jacobian step"}};

    CLI::App* describe = app.add_subcommand("describe", "geometry tables at a point");
    add(describe, common);
    add(describe, {{"at", "configuration"}});
    CLI::App* simulate = app.add_subcommand("simulate", "integrate the constrained dynamics");
    add(simulate, common);
    add(simulate, motion);
    add(simulate, {{"tau", "constant input"}});
    simulate->add_flag("--no-reproject", no_reproject, "disable velocity re-projection");
    CLI::App* solve_cmd = app.add_subcommand("solve", "two-point optimal control by shooting");
    add(solve_cmd, common);
    add(solve_cmd, motion);
    add(solve_cmd, ocp);
    CLI::App* verify = app.add_subcommand("verify", "check a solution file against the necessary conditions");
    add(verify, common);
    add(verify, {{"solution", "solution JSON path"}});

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return config_error;
    }

    try {
        Json doc = Json::object();
        if (!flags["config"].empty())
            doc = parse_json_text(read_text(flags["config"]), "config '" + flags["config"] + "'");
        if (!doc.is_object())
            throw ConfigError("configuration must be a JSON object");
        const std::map<std::string, std::string> key_of{{"max-iter", "max_iter"}, {"fd-step", "fd_step"}};
        for (const auto& [name, value] : flags) {
            if (value.empty() || name == "config")
                continue;
            const std::string key = key_of.count(name) ? key_of.at(name) : name;
            if (key == "params" && doc.contains("params") && doc["params"].is_object()) {
                for (const auto& [k, v] : parse_params(value))
                    doc["params"][k] = v;
                continue;
            }
            doc[key] = value;
        }
        if (no_reproject)
            doc["reproject"] = false;
        const RunConfig cfg = config_from_json(doc);

        if (describe->parsed()) {
            const std::string text = cmd_describe(cfg).dump(2) + "\n";
            if (cfg.out.empty())
                out << text;
            else
                write_text(cfg.out, text);
            return ok;
        }
        if (simulate->parsed()) {
            std::ostringstream csv;
            const Json summary = cmd_simulate(cfg, cfg.out.empty() ? nullptr : &csv);
            if (!cfg.out.empty())
                write_text(cfg.out, csv.str());
            out << summary.dump(2) << "\n";
            return ok;
        }
        if (solve_cmd->parsed()) {
            const Json doc_out = cmd_solve(cfg, thread_count_from_env());
            const std::string text = doc_out.dump(2) + "\n";
            if (cfg.out.empty()) {
                out << text;
            } else {
                write_text(cfg.out, text);
                out << "status " << doc_out["status"].get<std::string>() << "\n"
                    << "cost " << format_real(doc_out["cost"].get<double>()) << "\n"
                    << "residual " << format_real(doc_out["residual"]["norm"].get<double>()) << "\n"
                    << "iterations " << doc_out["iterations"].get<int>() << "\n";
            }
            return doc_out["converged"].get<bool>() ? ok : not_converged;
        }
        if (verify->parsed()) {
            if (cfg.solution.empty())
                throw ConfigError("verify requires --solution PATH");
            const Json solution = parse_json_text(read_text(cfg.solution), "solution '" + cfg.solution + "'");
            const Json report = cmd_verify(cfg, solution);
            const std::string text = report.dump(2) + "\n";
            if (cfg.out.empty())
                out << text;
            else {
                write_text(cfg.out, text);
                out << "all_strict_pass " << (report["all_strict_pass"].get<bool>() ? "true" : "false") << "\n";
            }
            return ok;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return config_error;
    } catch (const Error& e) {
        err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << "\n";
        return config_error;
    }
    return config_error;
}

} // namespace nonholo::cli
