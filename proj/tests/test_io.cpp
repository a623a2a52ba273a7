#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "riskgrad/errors.hpp"
#include "riskgrad/io.hpp"

using namespace riskgrad;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    std::filesystem::path path;
    TempDir(const char* tag) {
        path = std::filesystem::temp_directory_path() /
               (std::string("riskgrad_test_") + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("config parsing") {
    SUBCASE("fixture by name with defaults") {
        const auto cfg = io::parse_config(json{{"model", "chain-a"}});
        CHECK_FALSE(cfg.model.is_mdp);
        CHECK(cfg.alpha == 1.0);
        CHECK(cfg.seed == 1);
        CHECK(cfg.train.eta == 1.0);
        CHECK(*cfg.train.lambda0 == doctest::Approx(std::log(4.0)));
    }
    SUBCASE("unknown keys rejected with a path") {
        try {
            io::parse_config(json{{"model", "chain-a"}, {"trian", json::object()}});
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("trian") != std::string::npos);
        }
        CHECK_THROWS_AS(
            io::parse_config(json{{"model", "chain-a"}, {"train", {{"stepz", 1}}}}),
            ConfigError);
    }
    SUBCASE("inline chain with bad row sums names the row") {
        const json doc{{"model",
                        {{"chain",
                          {{"kernel", {{0.5, 0.5}, {0.9, 0.2}}},
                           {"cost", {0.0, 1.0}},
                           {"x_star", 0}}}}}};
        try {
            io::parse_config(doc);
            FAIL("expected RowSumViolation");
        } catch (const RowSumViolation& e) {
            CHECK(std::string(e.what()).find("row 1") != std::string::npos);
        }
    }
    SUBCASE("inline mdp") {
        const json doc{
            {"model",
             {{"mdp",
               {{"transition",
                 {{{0.9, 0.1}, {0.3, 0.7}}, {{0.6, 0.4}, {0.2, 0.8}}}},
                {"cost", {{0.1, 1.0}, {0.5, 2.0}}},
                {"s_star", 0}}}}}};
        const auto cfg = io::parse_config(doc);
        CHECK(cfg.model.is_mdp);
        CHECK(cfg.model.mdp.p(0, 1, 1) == doctest::Approx(0.7));
        CHECK(cfg.model.mdp.c_upper == doctest::Approx(2.0));
        CHECK(cfg.eval_theta.size() == 4);
    }
    SUBCASE("round trip through the resolved echo") {
        const json doc{{"model", "chain-a-theta"},
                       {"alpha", 1.5},
                       {"seed", 9},
                       {"train",
                        {{"steps", 500},
                         {"eta", 0.7},
                         {"truncation", {{"kind", "power"}, {"beta", 0.25}}},
                         {"theta_thresh", 0.1}}}};
        const auto cfg = io::parse_config(doc);
        const json echo = io::resolved_config(cfg);
        const auto cfg2 = io::parse_config(echo);
        CHECK(io::resolved_config(cfg2) == echo);
    }
}

TEST_CASE("format_double round trips") {
    for (double v : {0.1, 1.0 / 3.0, 2.5e-300, -123456.789, 0.0}) {
        const std::string s = io::format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(io::format_double(std::nan("")) == "nan");
}

TEST_CASE("cmd_exact on chain A writes the frozen Lambda") {
    TempDir dir("exact");
    const auto cfg = io::parse_config(json{{"model", "chain-a"}});
    const json out = io::cmd_exact(cfg, dir.path.string());
    CHECK(out.at("Lambda").get<double>() == doctest::Approx(0.916291).epsilon(1e-6));
    CHECK(out.at("h")[1].get<double>() == doctest::Approx(4.0).epsilon(1e-9));
    const json disk = json::parse(slurp((dir.path / "summary.json").string()));
    CHECK(disk.at("Lambda") == out.at("Lambda"));
    // g grid contains the fixed point at offset 0
    CHECK(out.at("g_grid")[0].at("g").get<double>() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("cmd_exact on the one-state fixture") {
    TempDir dir("exact1");
    const json doc{{"model",
                    {{"chain",
                      {{"kernel", {{1.0}}}, {"cost", {0.8}}, {"x_star", 0}}}}},
                   {"alpha", 2.0}};
    const json out = io::cmd_exact(io::parse_config(doc), dir.path.string());
    CHECK(out.at("Lambda").get<double>() == doctest::Approx(1.6).epsilon(1e-12));
}

TEST_CASE("cmd_eval and cmd_train rerun byte-identically") {
    const json doc{{"model", "chain-a-theta"},
                   {"seed", 4},
                   {"eval", {{"steps", 3000}}},
                   {"train", {{"steps", 3000}}}};
    const auto cfg = io::parse_config(doc);
    TempDir d1("rep1"), d2("rep2");
    SUBCASE("eval") {
        io::cmd_eval(cfg, d1.path.string());
        io::cmd_eval(cfg, d2.path.string());
        CHECK(slurp((d1.path / "trace.csv").string()) ==
              slurp((d2.path / "trace.csv").string()));
        CHECK(slurp((d1.path / "checkpoints.csv").string()) ==
              slurp((d2.path / "checkpoints.csv").string()));
        CHECK(!slurp((d1.path / "trace.csv").string()).empty());
    }
    SUBCASE("train") {
        const json s1 = io::cmd_train(cfg, d1.path.string());
        const json s2 = io::cmd_train(cfg, d2.path.string());
        CHECK(slurp((d1.path / "trace.csv").string()) ==
              slurp((d2.path / "trace.csv").string()));
        CHECK(s1.at("final").at("lambda_tilde") == s2.at("final").at("lambda_tilde"));
        // defaulted eta echoed
        CHECK(s1.at("config").at("train").at("eta").get<double>() == 1.0);
    }
}

TEST_CASE("trace csv header and shape") {
    const json doc{{"model", "chain-a"}, {"eval", {{"steps", 50}}}};
    TempDir dir("csv");
    io::cmd_eval(io::parse_config(doc), dir.path.string());
    const std::string csv = slurp((dir.path / "trace.csv").string());
    CHECK(csv.rfind("m,t_m,gamma_m,M_m,tau_m,lambda_tilde,update_norm_theta,"
                    "update_norm_lambda,trunc_active\n", 0) == 0);
    const std::string ck = slurp((dir.path / "checkpoints.csv").string());
    CHECK(ck.rfind("m,Lambda_exact,grad_norm_exact,Lambda_trunc\n", 0) == 0);
}

TEST_CASE("cmd_robust on chain A") {
    TempDir dir("robust");
    const auto cfg =
        io::parse_config(json{{"model", "chain-a"}, {"robust", {{"random_q", 25}}}});
    const json out = io::cmd_robust(cfg, dir.path.string());
    CHECK(out.at("average_cost").get<double>() == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(out.at("max_cost").get<double>() == doctest::Approx(std::log(4.0)));
    CHECK(out.at("random_q").at("violations").get<int>() == 0);
    double prev = -1e300;
    for (const auto& pt : out.at("tilt_curve")) {
        CHECK(pt.at("identity_residual").get<double>() < 1e-8);
        CHECK(pt.at("e").get<double>() >= prev - 1e-10);
        prev = pt.at("e").get<double>();
    }
}

TEST_CASE("cmd_train with the default config drives the gradient below 1e-2") {
    TempDir dir("default_train");
    const auto cfg = io::parse_config(json{{"model", "chain-a-theta"}});
    const json out = io::cmd_train(cfg, dir.path.string());
    CHECK(out.at("final_grad_norm").get<double>() < 1e-2);
    CHECK(out.at("config").at("train").at("eta").get<double>() == 1.0);
}

TEST_CASE("cmd_train on the mdp fixture improves the policy") {
    TempDir dir("mdp");
    const json doc{{"model", "mdp-2x2"},
                   {"seed", 3},
                   {"train", {{"steps", 20000}, {"checkpoint_every", 2000}}}};
    const json out = io::cmd_train(io::parse_config(doc), dir.path.string());
    const double lam_final = out.at("final").at("lambda_exact").get<double>();
    CHECK(lam_final < 0.9);  // started around ln of the mixed hat kernel, ~1.0+
    CHECK(out.at("assertions").at("lower_bound_violations").get<int>() == 0);
}
