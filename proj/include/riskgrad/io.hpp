#pragma once

// Experiment harness: JSON experiment configs (schema-validated, unknown keys
// rejected), reproducible CSV/JSON outputs, and the four subcommands. One
// config file describes one run; reruns with the same config and seed produce
// byte-identical CSVs.

#include <cstdint>
#include <string>

#include <json.hpp>

#include "riskgrad/fixtures.hpp"
#include "riskgrad/model.hpp"
#include "riskgrad/optimize.hpp"

namespace riskgrad::io {

using nlohmann::json;

struct ModelSpec {
    bool is_mdp = false;
    ChainModel chain;
    MdpModel mdp;
    json echo;  // canonical form for the resolved-config echo
};

struct ExactConfig {
    Vector theta;
    std::vector<double> lambda_offsets{0.0, 0.05, 0.2, 0.5, 1.0};  // added to Lambda_theta
    std::vector<double> trunc_levels{2.0, 16.0, 256.0};
};

struct RobustConfig {
    Vector theta;
    std::vector<double> alphas{0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 50.0};
    int random_q = 100;
};

struct ExperimentConfig {
    ModelSpec model;
    double alpha = 1.0;
    std::uint64_t seed = 1;

    Vector eval_theta;
    RunConfig eval;

    RunConfig train;

    ExactConfig exact;
    RobustConfig robust;
};

ExperimentConfig parse_config(const json& doc);
ExperimentConfig load_config(const std::string& path);

// Resolved-config echo: defaults filled in, model in canonical object form.
// Parsing the echo again yields an equivalent config.
json resolved_config(const ExperimentConfig& cfg);

// Shortest round-trip decimal formatting (also used for every CSV cell).
std::string format_double(double v);

std::string trace_csv(const Trace& trace);
std::string checkpoints_csv(const Trace& trace);

void write_file(const std::string& path, const std::string& contents);

// Subcommands. Each writes summary.json (plus trace.csv / checkpoints.csv for
// the iterative commands) under out_dir and returns the summary document.
json cmd_exact(const ExperimentConfig& cfg, const std::string& out_dir);
json cmd_eval(const ExperimentConfig& cfg, const std::string& out_dir);
json cmd_train(const ExperimentConfig& cfg, const std::string& out_dir);
json cmd_robust(const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace riskgrad::io
