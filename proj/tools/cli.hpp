#pragma once

#include "nonholo/shooting.hpp"

#include "json.hpp"

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace nonholo::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int { ok = 0, config_error = 2, geometry_error = 3, integration_error = 4, not_converged = 5 };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelEntry {
    std::string name;
    std::string summary;
    std::map<std::string, double> defaults;
    std::function<MechanicalSystem(const std::map<std::string, double>&)> build;
    std::function<HamiltonianSpec(const std::map<std::string, double>&)> classical;
};

const std::vector<ModelEntry>& registry();
const ModelEntry& find_model(const std::string& name);

struct RunConfig {
    std::string model = "coin";
    std::map<std::string, double> params;
    std::optional<Vec> at, q0, v0, qT, vT, tau, guess, weights;
    double horizon = 1.0;
    double dt = 1e-3;
    double fd_step = 1e-6;
    double tol = 1e-8;
    int max_iter = 100;
    std::string pipeline = "classical";
    std::string mode = "paper";
    std::string out;
    std::string solution;
    bool reproject = true;
};

// Config object keys match the long flag names without dashes.
RunConfig config_from_json(const Json& doc);

Vec parse_reals(const std::string& text);
std::map<std::string, double> parse_params(const std::string& text);

int thread_count_from_env();

Json cmd_describe(const RunConfig& cfg);
Json cmd_simulate(const RunConfig& cfg, std::ostream* csv);
// Returns the solution document; `converged` inside it decides the exit code.
Json cmd_solve(const RunConfig& cfg, int threads);
Json cmd_verify(const RunConfig& cfg, const Json& solution);

// Entry point used by the executable and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace nonholo::cli
