#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "rbmlab.h"

namespace {

const char* kSimulateConfig = R"([model]
name = linear_interacting
a = 1.0
kappa = 1.0
sigma = 1.0

[sim]
n_particles = 64
batch_size = 2
tau = 0.1
horizon = 0.5
replicas = 2
seed = 11
)";

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const char* tag) {
        path = std::filesystem::temp_directory_path() /
               (std::string("rbmlab_capi_") + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

} // namespace

TEST_CASE("version string") {
    REQUIRE(rbm_version() != nullptr);
    CHECK(std::string(rbm_version()) == "0.1.0");
}

TEST_CASE("null sessions are rejected without crashing") {
    CHECK(rbm_session_load_config(nullptr, "x.ini") == RBM_ERR_CONFIG);
    CHECK(rbm_run_simulate(nullptr) == RBM_ERR_CONFIG);
    CHECK(std::string(rbm_session_error(nullptr)) != "");
    rbm_session_destroy(nullptr); // no-op
}

TEST_CASE("simulate end to end through the C interface") {
    TempDir dir("simulate");
    rbm_session* s = rbm_session_create();
    REQUIRE(s != nullptr);

    CHECK(rbm_session_load_config_text(s, kSimulateConfig, "inline.ini") == RBM_OK);
    CHECK(rbm_session_set_output_dir(s, dir.path.c_str()) == RBM_OK);
    CHECK(rbm_session_set_threads(s, 1) == RBM_OK);
    const rbm_status st = rbm_run_simulate(s);
    CHECK(st == RBM_OK);
    CHECK(std::string(rbm_session_error(s)).empty());

    const std::string report = rbm_session_report(s);
    CHECK(report.find("linear_interacting") != std::string::npos);

    CHECK(std::filesystem::exists(dir.path / "metrics.csv"));
    CHECK(std::filesystem::exists(dir.path / "manifest.json"));
    const std::string metrics = slurp(dir.path / "metrics.csv");
    CHECK(metrics.rfind("time,metric,value,replica", 0) == 0);
    CHECK(metrics.find("mean_x0") != std::string::npos);

    rbm_session_destroy(s);
}

TEST_CASE("identical seeds give byte-identical outputs across sessions") {
    TempDir dir_a("rep_a");
    TempDir dir_b("rep_b");
    for (const auto* dir : {&dir_a, &dir_b}) {
        rbm_session* s = rbm_session_create();
        REQUIRE(s != nullptr);
        CHECK(rbm_session_load_config_text(s, kSimulateConfig, "inline.ini") == RBM_OK);
        CHECK(rbm_session_set_seed(s, 777) == RBM_OK);
        CHECK(rbm_session_set_output_dir(s, dir->path.c_str()) == RBM_OK);
        CHECK(rbm_run_simulate(s) == RBM_OK);
        rbm_session_destroy(s);
    }
    CHECK(slurp(dir_a.path / "metrics.csv") == slurp(dir_b.path / "metrics.csv"));
}

TEST_CASE("bad config text surfaces as RBM_ERR_CONFIG with a message") {
    rbm_session* s = rbm_session_create();
    REQUIRE(s != nullptr);
    CHECK(rbm_session_load_config_text(s, "[sim\nbroken", "bad.ini") == RBM_ERR_CONFIG);
    const std::string err = rbm_session_error(s);
    CHECK(err.find("bad.ini") != std::string::npos);

    // The session recovers once a good config is loaded.
    CHECK(rbm_session_load_config_text(s, kSimulateConfig, "inline.ini") == RBM_OK);
    rbm_session_destroy(s);
}

TEST_CASE("missing required keys fail the run, not the load") {
    TempDir dir("missing");
    rbm_session* s = rbm_session_create();
    REQUIRE(s != nullptr);
    CHECK(rbm_session_load_config_text(s, "[model]\nname = linear_ou\na = 1.0\nsigma = 1.0\n",
                                       "inline.ini") == RBM_OK);
    CHECK(rbm_session_set_output_dir(s, dir.path.c_str()) == RBM_OK);
    CHECK(rbm_run_simulate(s) == RBM_ERR_CONFIG);
    CHECK(std::string(rbm_session_error(s)).find("n_particles") != std::string::npos);
    rbm_session_destroy(s);
}

TEST_CASE("the assumption gate fails closed and --force opens it") {
    const char* gated = R"([model]
name = linear_interacting
a = 1.0
kappa = 1.0
sigma = 1.0

[sim]
n_particles = 16
tau = 0.1
horizon = 0.5
)";
    TempDir dir("check");
    {
        rbm_session* s = rbm_session_create();
        CHECK(rbm_session_load_config_text(s, gated, "inline.ini") == RBM_OK);
        CHECK(rbm_session_set_output_dir(s, dir.path.c_str()) == RBM_OK);
        CHECK(rbm_run_check(s) == RBM_ERR_ASSUMPTION);
        const std::string err = rbm_session_error(s);
        CHECK(err.find("assumption") != std::string::npos);
        rbm_session_destroy(s);
    }
    {
        rbm_session* s = rbm_session_create();
        CHECK(rbm_session_load_config_text(s, gated, "inline.ini") == RBM_OK);
        CHECK(rbm_session_set_output_dir(s, dir.path.c_str()) == RBM_OK);
        CHECK(rbm_session_set_force(s, 1) == RBM_OK);
        CHECK(rbm_run_check(s) == RBM_OK);
        const std::string report = rbm_session_report(s);
        CHECK(report.find("beta") != std::string::npos);
        rbm_session_destroy(s);
    }
}

TEST_CASE("set rejects malformed assignments") {
    rbm_session* s = rbm_session_create();
    REQUIRE(s != nullptr);
    CHECK(rbm_session_set(s, "nonsense") == RBM_ERR_CONFIG);
    CHECK(std::string(rbm_session_error(s)).find("nonsense") != std::string::npos);
    CHECK(rbm_session_set(s, "sim.tau=0.1") == RBM_OK);
    rbm_session_destroy(s);
}
