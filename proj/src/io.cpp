#include "riskgrad/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>

#include "riskgrad/errors.hpp"
#include "riskgrad/regen.hpp"
#include "riskgrad/robust.hpp"
#include "riskgrad/spectral.hpp"
#include "riskgrad/trunc.hpp"

namespace riskgrad::io {

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& path) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok) throw ConfigError(path + ": unknown key \"" + it.key() + "\"");
    }
}

double require_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path + ": expected a number");
    return v.get<double>();
}

double number_or(const json& obj, const char* key, double dflt, const std::string& path) {
    if (!obj.contains(key)) return dflt;
    return require_number(obj.at(key), path + "." + key);
}

long integer_or(const json& obj, const char* key, long dflt, const std::string& path) {
    if (!obj.contains(key)) return dflt;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) throw ConfigError(path + "." + key + ": expected an integer");
    return v.get<long>();
}

bool bool_or(const json& obj, const char* key, bool dflt, const std::string& path) {
    if (!obj.contains(key)) return dflt;
    const json& v = obj.at(key);
    if (!v.is_boolean()) throw ConfigError(path + "." + key + ": expected a boolean");
    return v.get<bool>();
}

Vector parse_vector(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path + ": expected an array of numbers");
    Vector out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(require_number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

Matrix parse_matrix(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw ConfigError(path + ": expected a nonempty 2d array");
    const int rows = static_cast<int>(v.size());
    const Vector first = parse_vector(v[0], path + "[0]");
    Matrix m(rows, static_cast<int>(first.size()));
    for (int i = 0; i < rows; ++i) {
        const Vector row = parse_vector(v[i], path + "[" + std::to_string(i) + "]");
        if (static_cast<int>(row.size()) != m.cols())
            throw ConfigError(path + ": ragged rows");
        for (int j = 0; j < m.cols(); ++j) m(i, j) = row[j];
    }
    return m;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

ModelSpec parse_model(const json& v) {
    ModelSpec spec;
    if (v.is_string()) {
        const auto named = fixtures::by_name(v.get<std::string>());
        spec.is_mdp = named.is_mdp;
        spec.chain = named.chain;
        spec.mdp = named.mdp;
        spec.echo = json{{"fixture", v.get<std::string>()}};
        return spec;
    }
    if (!v.is_object()) throw ConfigError("model: expected a fixture name or an object");
    check_keys(v, {"fixture", "chain", "logit_mixture", "mdp"}, "model");
    if (v.size() != 1) throw ConfigError("model: exactly one model form must be given");

    if (v.contains("fixture")) {
        const auto named = fixtures::by_name(v.at("fixture").get<std::string>());
        spec.is_mdp = named.is_mdp;
        spec.chain = named.chain;
        spec.mdp = named.mdp;
        spec.echo = v;
        return spec;
    }
    if (v.contains("chain")) {
        const json& c = v.at("chain");
        check_keys(c, {"kernel", "cost", "x_star"}, "model.chain");
        Matrix kernel = parse_matrix(c.at("kernel"), "model.chain.kernel");
        Vector cost = parse_vector(c.at("cost"), "model.chain.cost");
        if (kernel.rows() != kernel.cols())
            throw ConfigError("model.chain.kernel: must be square");
        if (static_cast<int>(cost.size()) != kernel.rows())
            throw ConfigError("model.chain.cost: length must match the kernel");
        const int x_star =
            static_cast<int>(integer_or(c, "x_star", 0, "model.chain"));
        if (x_star < 0 || x_star >= kernel.rows())
            throw ConfigError("model.chain.x_star: out of range");
        spec.echo = json{{"chain",
                          {{"kernel", matrix_json(kernel)},
                           {"cost", cost},
                           {"x_star", x_star}}}};
        spec.chain = fixtures::fixed_chain(std::move(kernel), std::move(cost), x_star);
        validate_kernel(spec.chain.kernel({}), x_star);  // row sums name the offender
        return spec;
    }
    if (v.contains("logit_mixture")) {
        const json& c = v.at("logit_mixture");
        check_keys(c, {"components", "x_star"}, "model.logit_mixture");
        if (!c.contains("components") || !c.at("components").is_array() ||
            c.at("components").empty())
            throw ConfigError("model.logit_mixture.components: expected a nonempty array");
        std::vector<fixtures::MixtureComponent> comps;
        json comps_echo = json::array();
        for (std::size_t i = 0; i < c.at("components").size(); ++i) {
            const json& comp = c.at("components")[i];
            const std::string path =
                "model.logit_mixture.components[" + std::to_string(i) + "]";
            check_keys(comp, {"kernel", "cost"}, path);
            Matrix kernel = parse_matrix(comp.at("kernel"), path + ".kernel");
            Vector cost = parse_vector(comp.at("cost"), path + ".cost");
            comps_echo.push_back(
                json{{"kernel", matrix_json(kernel)}, {"cost", cost}});
            comps.push_back({std::move(kernel), std::move(cost)});
        }
        const int x_star =
            static_cast<int>(integer_or(c, "x_star", 0, "model.logit_mixture"));
        spec.echo = json{{"logit_mixture",
                          {{"components", comps_echo}, {"x_star", x_star}}}};
        spec.chain = fixtures::logit_mixture_chain(std::move(comps), x_star);
        return spec;
    }
    // MDP form
    const json& c = v.at("mdp");
    check_keys(c, {"transition", "cost", "s_star"}, "model.mdp");
    if (!c.contains("transition") || !c.at("transition").is_array())
        throw ConfigError("model.mdp.transition: expected transition[s][a][s']");
    const int S = static_cast<int>(c.at("transition").size());
    Matrix cost = parse_matrix(c.at("cost"), "model.mdp.cost");
    const int A = cost.cols();
    MdpModel mdp;
    mdp.n_states = S;
    mdp.n_actions = A;
    mdp.s_star = static_cast<int>(integer_or(c, "s_star", 0, "model.mdp"));
    mdp.transition = Matrix(S * A, S);
    json trans_echo = json::array();
    for (int s = 0; s < S; ++s) {
        const Matrix per_state =
            parse_matrix(c.at("transition")[s], "model.mdp.transition[" + std::to_string(s) + "]");
        if (per_state.rows() != A || per_state.cols() != S)
            throw ConfigError("model.mdp.transition[" + std::to_string(s) +
                              "]: expected an A x S block");
        trans_echo.push_back(matrix_json(per_state));
        for (int a = 0; a < A; ++a)
            for (int s2 = 0; s2 < S; ++s2) mdp.transition(s * A + a, s2) = per_state(a, s2);
    }
    if (cost.rows() != S) throw ConfigError("model.mdp.cost: expected S x A");
    mdp.cost = cost;
    mdp.finalize();
    spec.is_mdp = true;
    spec.mdp = std::move(mdp);
    spec.echo = json{{"mdp",
                      {{"transition", trans_echo},
                       {"cost", matrix_json(cost)},
                       {"s_star", spec.mdp.s_star}}}};
    return spec;
}

StepSchedule parse_step(const json& obj, const StepSchedule& dflt, const std::string& path) {
    StepSchedule s = dflt;
    if (!obj.contains("step")) return s;
    const json& v = obj.at("step");
    check_keys(v, {"gamma0", "exponent", "offset"}, path + ".step");
    s.gamma0 = number_or(v, "gamma0", dflt.gamma0, path + ".step");
    s.exponent = number_or(v, "exponent", dflt.exponent, path + ".step");
    s.offset = number_or(v, "offset", dflt.offset, path + ".step");
    return s;
}

TruncationSchedule parse_truncation(const json& v, const std::string& path) {
    check_keys(v, {"kind", "M", "beta", "rungs"}, path);
    const std::string kind = v.contains("kind") ? v.at("kind").get<std::string>() : "fixed";
    if (kind == "fixed") return TruncationSchedule::fixed(number_or(v, "M", 16.0, path));
    if (kind == "power") return TruncationSchedule::power(number_or(v, "beta", 0.2, path));
    if (kind == "ladder") {
        if (!v.contains("rungs")) throw ConfigError(path + ".rungs: required for ladder");
        return TruncationSchedule::ladder(parse_vector(v.at("rungs"), path + ".rungs"),
                                          number_or(v, "beta", 0.2, path));
    }
    throw ConfigError(path + ".kind: expected fixed | power | ladder");
}

int model_param_dim(const ModelSpec& spec) {
    return spec.is_mdp ? spec.mdp.n_states * spec.mdp.n_actions : spec.chain.param_dim;
}

double model_c_upper(const ModelSpec& spec) {
    return spec.is_mdp ? spec.mdp.c_upper : spec.chain.c_upper;
}

Vector theta_or_zeros(const json& obj, const char* key, int dim, const std::string& path) {
    if (!obj.contains(key)) return Vector(dim, 0.0);
    Vector t = parse_vector(obj.at(key), path + "." + key);
    if (static_cast<int>(t.size()) != dim)
        throw ConfigError(path + "." + key + ": expected length " + std::to_string(dim));
    return t;
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
    check_keys(doc, {"model", "alpha", "seed", "exact", "eval", "train", "robust"}, "config");
    if (!doc.contains("model")) throw ConfigError("model: required");

    ExperimentConfig cfg;
    cfg.model = parse_model(doc.at("model"));
    cfg.alpha = number_or(doc, "alpha", 1.0, "config");
    if (!(cfg.alpha > 0.0)) throw ConfigError("alpha: must be positive");
    cfg.seed = static_cast<std::uint64_t>(integer_or(doc, "seed", 1, "config"));

    const int dim = model_param_dim(cfg.model);
    const double lam0_default = cfg.alpha * model_c_upper(cfg.model);

    // Evaluation defaults: increasing truncation, small steps late in the run
    // so the truncation level has grown before the iterate settles.
    cfg.eval.steps = 200000;
    cfg.eval.step = StepSchedule{0.05, 0.8, 10.0};
    cfg.eval.trunc = TruncationSchedule::power(0.2);
    cfg.eval.lambda0 = lam0_default;
    cfg.eval.seed = cfg.seed;
    cfg.eval_theta = Vector(dim, 0.0);
    if (doc.contains("eval")) {
        const json& v = doc.at("eval");
        check_keys(v,
                   {"theta", "steps", "mode", "M", "beta", "lambda0", "step", "lambda_thresh",
                    "checkpoint_every", "checkpoint_lambda_trunc", "cycle_cap"},
                   "eval");
        cfg.eval_theta = theta_or_zeros(v, "theta", dim, "eval");
        cfg.eval.steps = integer_or(v, "steps", cfg.eval.steps, "eval");
        const std::string mode =
            v.contains("mode") ? v.at("mode").get<std::string>() : "increasing";
        if (mode == "fixed")
            cfg.eval.trunc = TruncationSchedule::fixed(number_or(v, "M", 4.0, "eval"));
        else if (mode == "increasing")
            cfg.eval.trunc = TruncationSchedule::power(number_or(v, "beta", 0.2, "eval"));
        else
            throw ConfigError("eval.mode: expected fixed | increasing");
        cfg.eval.lambda0 = number_or(v, "lambda0", lam0_default, "eval");
        cfg.eval.step = parse_step(v, cfg.eval.step, "eval");
        if (v.contains("lambda_thresh"))
            cfg.eval.lambda_thresh = require_number(v.at("lambda_thresh"), "eval.lambda_thresh");
        cfg.eval.checkpoint_every =
            integer_or(v, "checkpoint_every", cfg.eval.checkpoint_every, "eval");
        cfg.eval.checkpoint_lambda_trunc =
            bool_or(v, "checkpoint_lambda_trunc", false, "eval");
        cfg.eval.cycle_cap = integer_or(v, "cycle_cap", cfg.eval.cycle_cap, "eval");
    }

    // Training defaults: larger steps buy travel distance in parameter space;
    // gamma_max stays safely below 1.
    cfg.train.steps = 200000;
    cfg.train.step = StepSchedule{3.0, 0.8, 10.0};
    cfg.train.trunc = TruncationSchedule::fixed(16.0);
    cfg.train.lambda0 = lam0_default;
    cfg.train.seed = cfg.seed;
    cfg.train.theta0 = Vector(dim, 0.0);
    if (doc.contains("train")) {
        const json& v = doc.at("train");
        check_keys(v,
                   {"steps", "eta", "theta0", "lambda0", "step", "truncation", "theta_thresh",
                    "lambda_thresh", "checkpoint_every", "checkpoint_lambda_trunc", "cycle_cap"},
                   "train");
        cfg.train.steps = integer_or(v, "steps", cfg.train.steps, "train");
        cfg.train.eta = number_or(v, "eta", 1.0, "train");
        cfg.train.theta0 = theta_or_zeros(v, "theta0", dim, "train");
        cfg.train.lambda0 = number_or(v, "lambda0", lam0_default, "train");
        cfg.train.step = parse_step(v, cfg.train.step, "train");
        if (v.contains("truncation"))
            cfg.train.trunc = parse_truncation(v.at("truncation"), "train.truncation");
        if (v.contains("theta_thresh"))
            cfg.train.theta_thresh = require_number(v.at("theta_thresh"), "train.theta_thresh");
        if (v.contains("lambda_thresh"))
            cfg.train.lambda_thresh =
                require_number(v.at("lambda_thresh"), "train.lambda_thresh");
        cfg.train.checkpoint_every =
            integer_or(v, "checkpoint_every", cfg.train.checkpoint_every, "train");
        cfg.train.checkpoint_lambda_trunc =
            bool_or(v, "checkpoint_lambda_trunc", false, "train");
        cfg.train.cycle_cap = integer_or(v, "cycle_cap", cfg.train.cycle_cap, "train");
    }

    cfg.exact.theta = Vector(dim, 0.0);
    if (doc.contains("exact")) {
        const json& v = doc.at("exact");
        check_keys(v, {"theta", "lambda_offsets", "trunc_levels"}, "exact");
        cfg.exact.theta = theta_or_zeros(v, "theta", dim, "exact");
        if (v.contains("lambda_offsets"))
            cfg.exact.lambda_offsets = parse_vector(v.at("lambda_offsets"), "exact.lambda_offsets");
        if (v.contains("trunc_levels"))
            cfg.exact.trunc_levels = parse_vector(v.at("trunc_levels"), "exact.trunc_levels");
    }

    cfg.robust.theta = Vector(dim, 0.0);
    if (doc.contains("robust")) {
        const json& v = doc.at("robust");
        check_keys(v, {"theta", "alphas", "random_q"}, "robust");
        cfg.robust.theta = theta_or_zeros(v, "theta", dim, "robust");
        if (v.contains("alphas"))
            cfg.robust.alphas = parse_vector(v.at("alphas"), "robust.alphas");
        cfg.robust.random_q =
            static_cast<int>(integer_or(v, "random_q", cfg.robust.random_q, "robust"));
    }

    // Re-validate every numeric constraint now so failures surface at parse
    // time with exit code 2 rather than mid-run.
    cfg.eval.validate();
    cfg.train.validate();
    if (cfg.train.trunc.increasing() && !cfg.train.step.compatible_with(cfg.train.trunc.beta))
        throw ConfigError("train: step/truncation violate 2a(1-beta) > 1");
    if (cfg.eval.trunc.increasing() && !cfg.eval.step.compatible_with(cfg.eval.trunc.beta))
        throw ConfigError("eval: step/truncation violate 2a(1-beta) > 1");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    return parse_config(doc);
}

namespace {

json step_json(const StepSchedule& s) {
    return json{{"gamma0", s.gamma0}, {"exponent", s.exponent}, {"offset", s.offset}};
}

json truncation_json(const TruncationSchedule& t) {
    switch (t.kind) {
        case TruncationSchedule::Kind::Fixed:
            return json{{"kind", "fixed"}, {"M", t.fixed_m}};
        case TruncationSchedule::Kind::Power:
            return json{{"kind", "power"}, {"beta", t.beta}};
        case TruncationSchedule::Kind::Ladder:
            return json{{"kind", "ladder"}, {"rungs", t.rungs}, {"beta", t.beta}};
    }
    return {};
}

}  // namespace

json resolved_config(const ExperimentConfig& cfg) {
    json eval{{"theta", cfg.eval_theta},
              {"steps", cfg.eval.steps},
              {"lambda0", *cfg.eval.lambda0},
              {"step", step_json(cfg.eval.step)},
              {"checkpoint_every", cfg.eval.checkpoint_every},
              {"checkpoint_lambda_trunc", cfg.eval.checkpoint_lambda_trunc},
              {"cycle_cap", cfg.eval.cycle_cap}};
    if (cfg.eval.trunc.kind == TruncationSchedule::Kind::Fixed) {
        eval["mode"] = "fixed";
        eval["M"] = cfg.eval.trunc.fixed_m;
    } else {
        eval["mode"] = "increasing";
        eval["beta"] = cfg.eval.trunc.beta;
    }
    if (cfg.eval.lambda_thresh) eval["lambda_thresh"] = *cfg.eval.lambda_thresh;

    json train{{"steps", cfg.train.steps},
               {"eta", cfg.train.eta},
               {"theta0", cfg.train.theta0},
               {"lambda0", *cfg.train.lambda0},
               {"step", step_json(cfg.train.step)},
               {"truncation", truncation_json(cfg.train.trunc)},
               {"checkpoint_every", cfg.train.checkpoint_every},
               {"checkpoint_lambda_trunc", cfg.train.checkpoint_lambda_trunc},
               {"cycle_cap", cfg.train.cycle_cap}};
    if (cfg.train.theta_thresh) train["theta_thresh"] = *cfg.train.theta_thresh;
    if (cfg.train.lambda_thresh) train["lambda_thresh"] = *cfg.train.lambda_thresh;

    return json{{"model", cfg.model.echo},
                {"alpha", cfg.alpha},
                {"seed", cfg.seed},
                {"eval", eval},
                {"train", train},
                {"exact",
                 {{"theta", cfg.exact.theta},
                  {"lambda_offsets", cfg.exact.lambda_offsets},
                  {"trunc_levels", cfg.exact.trunc_levels}}},
                {"robust",
                 {{"theta", cfg.robust.theta},
                  {"alphas", cfg.robust.alphas},
                  {"random_q", cfg.robust.random_q}}}};
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string trace_csv(const Trace& trace) {
    std::string out =
        "m,t_m,gamma_m,M_m,tau_m,lambda_tilde,update_norm_theta,update_norm_lambda,"
        "trunc_active\n";
    for (const auto& r : trace.iterations) {
        out += std::to_string(r.m);
        out += ',';
        out += std::to_string(r.t_m);
        out += ',';
        out += format_double(r.gamma);
        out += ',';
        out += format_double(r.trunc_level);
        out += ',';
        out += std::to_string(r.tau);
        out += ',';
        out += format_double(r.lambda_tilde);
        out += ',';
        out += format_double(r.update_norm_theta);
        out += ',';
        out += format_double(r.update_norm_lambda);
        out += ',';
        out += r.trunc_active ? '1' : '0';
        out += '\n';
    }
    return out;
}

std::string checkpoints_csv(const Trace& trace) {
    std::string out = "m,Lambda_exact,grad_norm_exact,Lambda_trunc\n";
    for (const auto& c : trace.checkpoints) {
        out += std::to_string(c.m);
        out += ',';
        out += format_double(c.lambda_exact);
        out += ',';
        out += format_double(c.grad_norm_exact);
        out += ',';
        out += format_double(c.lambda_trunc);
        out += '\n';
    }
    return out;
}

void write_file(const std::string& path, const std::string& contents) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << contents;
}

namespace {

json run_summary(const ExperimentConfig& cfg, const Trace& trace) {
    const SummaryReport rep = diagnostics(trace);
    json final{{"lambda_tilde", trace.final_lambda_tilde},
               {"theta", trace.final_theta},
               {"lambda_exact", rep.final_lambda_exact},
               {"grad_norm_exact", rep.final_grad_norm_exact},
               {"min_lambda_tilde", rep.min_lambda_tilde},
               {"max_lambda_tilde", rep.max_lambda_tilde}};
    json assertions{{"lambda_lower_bound", trace.lambda_lower_bound},
                    {"lower_bound_violations", rep.lower_bound_violations},
                    {"upper_warning_iters", rep.upper_warning_iters},
                    {"trunc_activations", rep.trunc_activations},
                    {"trunc_activation_fraction", rep.trunc_activation_fraction}};
    return json{{"config", resolved_config(cfg)},
                {"final", final},
                {"final_grad_norm", rep.final_grad_norm_exact},
                {"assertions", assertions},
                {"timing",
                 {{"wall_seconds", rep.wall_seconds},
                  {"iterations", rep.iterations},
                  {"total_env_steps", rep.total_env_steps},
                  {"mean_tau", rep.mean_tau},
                  {"max_tau", rep.max_tau}}}};
}

void write_run_outputs(const ExperimentConfig& cfg, const Trace& trace,
                       const std::string& out_dir, json& summary) {
    summary = run_summary(cfg, trace);
    write_file(out_dir + "/trace.csv", trace_csv(trace));
    write_file(out_dir + "/checkpoints.csv", checkpoints_csv(trace));
    write_file(out_dir + "/summary.json", summary.dump(2) + "\n");
}

}  // namespace

json cmd_exact(const ExperimentConfig& cfg, const std::string& out_dir) {
    const auto started = std::chrono::steady_clock::now();
    json out{{"config", resolved_config(cfg)}};

    SpectralSolution sol;
    Vector grad_exact, grad_fd;
    ExcursionSystem sys;
    Matrix hat;
    int x_star = 0;
    if (cfg.model.is_mdp) {
        SoftmaxPolicy policy(cfg.model.mdp.n_states, cfg.model.mdp.n_actions);
        policy.logits = cfg.exact.theta;
        sol = solve(cfg.model.mdp, policy, cfg.alpha);
        grad_exact = grad_risk_cost(cfg.model.mdp, policy, cfg.alpha);
        grad_fd = fd_gradient(cfg.model.mdp, policy, cfg.alpha);
        sys = excursion_system(cfg.model.mdp, policy);
        hat = induced_kernels(cfg.model.mdp, policy, cfg.alpha).hat_kernel;
        x_star = cfg.model.mdp.s_star;
    } else {
        const ChainInstance inst = cfg.model.chain.at(cfg.exact.theta);
        const DiagnosticsReport rep = validate_kernel(inst.kernel, inst.x_star);
        if (!rep.irreducible)
            throw NotIrreducible("model: kernel is not irreducible at this theta");
        if (!rep.aperiodic) throw NotIrreducible("model: kernel is periodic at this theta");
        sol = solve(inst, cfg.alpha);
        grad_exact = grad_risk_cost(inst, cfg.alpha, sol);
        grad_fd = fd_gradient(cfg.model.chain, cfg.exact.theta, cfg.alpha);
        sys = excursion_system(inst);
        hat = hat_kernel(inst.kernel, inst.cost, cfg.alpha);
        x_star = inst.x_star;
    }

    out["Lambda"] = sol.Lambda;
    out["lambda"] = sol.lambda;
    out["h"] = sol.h;
    out["pi_check"] = sol.pi_check;
    out["residual"] = sol.residual;
    out["grad_exact"] = grad_exact;
    out["grad_fd"] = grad_fd;

    json grid = json::array();
    for (double off : cfg.exact.lambda_offsets) {
        const double lam = sol.Lambda + off;
        const GValue g = g_exact_hat(hat, x_star, lam);
        grid.push_back(json{{"Lambda", lam},
                            {"g", g.divergent ? json() : json(g.value)},
                            {"divergent", g.divergent}});
    }
    out["g_grid"] = grid;

    json ladder = json::array();
    for (double m : cfg.exact.trunc_levels) {
        ladder.push_back(json{{"M", m},
                              {"hard", lambda_trunc(sys, cfg.alpha, m, TruncMode::Hard)},
                              {"smooth", lambda_trunc(sys, cfg.alpha, m, TruncMode::Smooth)}});
    }
    out["lambda_trunc"] = ladder;

    out["timing"] = {{"wall_seconds",
                      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                          .count()}};
    write_file(out_dir + "/summary.json", out.dump(2) + "\n");
    return out;
}

namespace {

// Structural check before a run: reducible or periodic kernels would only
// show up later as power-iteration stalls, so reject them up front.
void check_run_model(const ModelSpec& spec, const Vector& theta) {
    if (spec.is_mdp) {
        SoftmaxPolicy policy(spec.mdp.n_states, spec.mdp.n_actions);
        policy.logits = theta;
        const auto ik = induced_kernels(spec.mdp, policy, 1.0);
        const DiagnosticsReport rep = validate_kernel(ik.state_kernel, spec.mdp.s_star);
        if (!rep.irreducible)
            throw NotIrreducible("model: induced kernel is not irreducible at theta0");
        if (!rep.aperiodic)
            throw NotIrreducible("model: induced kernel is periodic at theta0");
        return;
    }
    const DiagnosticsReport rep =
        validate_kernel(spec.chain.kernel(theta), spec.chain.x_star);
    if (!rep.irreducible)
        throw NotIrreducible("model: kernel is not irreducible at the initial theta");
    if (!rep.aperiodic)
        throw NotIrreducible("model: kernel is periodic at the initial theta");
}

}  // namespace

json cmd_eval(const ExperimentConfig& cfg, const std::string& out_dir) {
    check_run_model(cfg.model, cfg.eval_theta);
    const Trace trace =
        cfg.model.is_mdp
            ? policy_evaluate(cfg.model.mdp, cfg.eval_theta, cfg.alpha, cfg.eval)
            : policy_evaluate(cfg.model.chain, cfg.eval_theta, cfg.alpha, cfg.eval);
    json summary;
    write_run_outputs(cfg, trace, out_dir, summary);
    return summary;
}

json cmd_train(const ExperimentConfig& cfg, const std::string& out_dir) {
    check_run_model(cfg.model, cfg.train.theta0);
    const Trace trace = cfg.model.is_mdp ? train(cfg.model.mdp, cfg.alpha, cfg.train)
                                         : train(cfg.model.chain, cfg.alpha, cfg.train);
    json summary;
    write_run_outputs(cfg, trace, out_dir, summary);
    return summary;
}

json cmd_robust(const ExperimentConfig& cfg, const std::string& out_dir) {
    if (cfg.model.is_mdp)
        throw ConfigError("robust: requires a chain model (state costs)");
    const auto started = std::chrono::steady_clock::now();
    const ChainInstance inst = cfg.model.chain.at(cfg.robust.theta);

    json out{{"config", resolved_config(cfg)}};
    const RiskLimits limits = risk_limits(inst);
    out["average_cost"] = limits.average_cost;
    out["max_cost"] = limits.max_cost;

    json curve = json::array();
    for (double a : cfg.robust.alphas) {
        const RiskPoint pt = optimal_tilt(inst, a);
        curve.push_back(json{{"alpha", a},
                             {"e", pt.e_alpha},
                             {"beta", pt.beta_alpha},
                             {"rho", pt.rho_at_beta},
                             {"identity_residual", pt.identity_residual}});
    }
    out["tilt_curve"] = curve;

    Rng rng(cfg.seed);
    const double e_ref = entropic_risk(inst, cfg.alpha);
    double max_excess = -1e300;
    int violations = 0;
    for (int i = 0; i < cfg.robust.random_q; ++i) {
        const Matrix q = perturb_kernel(inst.kernel, rng);
        const double bound = kl_lower_bound(inst, cfg.alpha, q);
        max_excess = std::max(max_excess, bound - e_ref);
        if (bound > e_ref + 1e-10) ++violations;
    }
    out["random_q"] = {{"count", cfg.robust.random_q},
                       {"alpha", cfg.alpha},
                       {"entropic_risk", e_ref},
                       {"max_excess", cfg.robust.random_q > 0 ? json(max_excess) : json()},
                       {"violations", violations}};

    out["timing"] = {{"wall_seconds",
                      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                          .count()}};
    write_file(out_dir + "/summary.json", out.dump(2) + "\n");
    return out;
}

}  // namespace riskgrad::io
