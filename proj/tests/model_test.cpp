#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "rbmlab/errors.hpp"
#include "rbmlab/model.hpp"
#include "rbmlab/rng.hpp"

using rbm::builtin_model;
using rbm::ModelSpec;
using rbm::RngStream;
using rbm::StreamDomain;

namespace {

void eval(const rbm::VectorFieldFn& f, double x, double* out) {
    f(&x, out);
}

double eval1(const rbm::VectorFieldFn& f, double x) {
    double out = 0.0;
    eval(f, x, &out);
    return out;
}

} // namespace

TEST_CASE("linear_ou drift and zero kernel") {
    auto m = builtin_model("linear_ou", {{"a", 1.0}, {"sigma", 1.0}});
    CHECK(m.dim == 1);
    CHECK(m.sigma == 1.0);
    CHECK(eval1(m.drift, 2.0) == -2.0);
    CHECK(eval1(m.kernel, 5.0) == 0.0);
    REQUIRE(m.linear.has_value());
    CHECK(m.linear->a == 1.0);
    CHECK(m.linear->kappa == 0.0);
}

TEST_CASE("linear_interacting kernel is -kappa x") {
    auto m = builtin_model("linear_interacting", {{"a", 1.0}, {"kappa", 1.0}, {"sigma", 1.0}});
    CHECK(eval1(m.kernel, 3.0) == -3.0);
    CHECK(eval1(m.drift, 3.0) == -3.0);
    auto m2 = builtin_model("linear_interacting", {{"a", 2.0}, {"kappa", 0.5}, {"sigma", 1.0}});
    CHECK(eval1(m2.kernel, 4.0) == -2.0);
    CHECK(eval1(m2.drift, 4.0) == -8.0);
}

TEST_CASE("bounded_kernel saturates") {
    auto m = builtin_model("bounded_kernel", {{"a", 1.0}, {"kappa", 2.0}, {"sigma", 1.0}});
    // K(r) = kappa r / (1 + r^2): odd, |K| <= kappa/2 with the max at r = 1.
    CHECK(eval1(m.kernel, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eval1(m.kernel, 3.0) == doctest::Approx(0.6).epsilon(1e-12));
    for (double r = 0.1; r < 50.0; r *= 1.7) {
        CHECK(std::abs(eval1(m.kernel, r)) <= 1.0 + 1e-12);
    }
    CHECK(eval1(m.kernel, 0.0) == 0.0);
    CHECK(!m.linear.has_value());
}

TEST_CASE("kernels are antisymmetric on a grid") {
    for (const char* name : {"linear_interacting", "bounded_kernel"}) {
        auto m = builtin_model(name, {{"a", 1.0}, {"kappa", 1.5}, {"sigma", 0.5}});
        for (double r = -3.0; r <= 3.0; r += 0.25) {
            CHECK(eval1(m.kernel, r) == doctest::Approx(-eval1(m.kernel, -r)).epsilon(1e-12));
        }
    }
}

TEST_CASE("model construction rejects bad input") {
    CHECK_THROWS_AS(builtin_model("no_such_model", {}), rbm::ConfigError);
    CHECK_THROWS_AS(builtin_model("linear_ou", {{"sigma", 1.0}}), rbm::ConfigError);
    CHECK_THROWS_AS(builtin_model("linear_ou", {{"a", 0.0}, {"sigma", 1.0}}), rbm::ConfigError);
    CHECK_THROWS_AS(builtin_model("linear_ou", {{"a", -1.0}, {"sigma", 1.0}}), rbm::ConfigError);
    CHECK_THROWS_AS(builtin_model("linear_ou", {{"a", 1.0}, {"sigma", -0.5}}), rbm::ConfigError);
    CHECK_THROWS_AS(builtin_model("linear_ou", {{"a", 1.0}, {"sigma", 1.0}, {"zeta", 3.0}}),
                    rbm::ConfigError);
    const double nan = std::nan("");
    CHECK_THROWS_AS(builtin_model("linear_ou", {{"a", nan}, {"sigma", 1.0}}), rbm::ConfigError);
}

TEST_CASE("assumption probe recovers linear_ou constants") {
    auto m = builtin_model("linear_ou", {{"a", 1.0}, {"sigma", 1.0}});
    RngStream probe(2024, StreamDomain::probe, 0, 0, 0);
    auto rep = rbm::check_assumptions(m, 20000, 10.0, probe);
    CHECK(rep.sample_count == 20000);
    CHECK(rep.lipschitz_b == doctest::Approx(1.0).epsilon(0.02));
    CHECK(rep.lipschitz_k == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rep.confinement_beta == doctest::Approx(1.0).epsilon(0.02));
    CHECK(rep.confinement_beta > 0.0);
}

TEST_CASE("assumption probe recovers interaction Lipschitz constant") {
    auto m = builtin_model("linear_interacting", {{"a", 1.0}, {"kappa", 1.0}, {"sigma", 1.0}});
    RngStream probe(2024, StreamDomain::probe, 0, 0, 0);
    auto rep = rbm::check_assumptions(m, 20000, 10.0, probe);
    CHECK(rep.lipschitz_k == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("bounded_kernel Lipschitz estimate approaches kappa from below") {
    auto m = builtin_model("bounded_kernel", {{"a", 1.0}, {"kappa", 2.0}, {"sigma", 1.0}});
    RngStream probe(7, StreamDomain::probe, 0, 0, 0);
    auto rep = rbm::check_assumptions(m, 100000, 10.0, probe);
    // The slope of 2r/(1+r^2) is steepest at 0 where it equals kappa; sampled
    // difference quotients never exceed it.
    CHECK(rep.lipschitz_k <= 2.0 + 1e-9);
    CHECK(rep.lipschitz_k >= 1.85);
    // |K| <= kappa/2, so any batch-vs-full gap is at most kappa.
    CHECK(rep.kernel_deviation_bound <= 2.0 + 1e-9);
}

TEST_CASE("sampled estimates never decrease with more samples at a fixed seed") {
    auto m = builtin_model("bounded_kernel", {{"a", 1.0}, {"kappa", 2.0}, {"sigma", 1.0}});
    RngStream p1(55, StreamDomain::probe, 0, 0, 0);
    RngStream p2(55, StreamDomain::probe, 0, 0, 0);
    auto small = rbm::check_assumptions(m, 5000, 10.0, p1);
    auto large = rbm::check_assumptions(m, 20000, 10.0, p2);
    // Same stream address: the first 5000 probes coincide, so the maxima can
    // only grow.
    CHECK(large.lipschitz_k >= small.lipschitz_k);
    CHECK(large.lipschitz_b >= small.lipschitz_b);
}

TEST_CASE("beta_exceeds_2l flag follows the confinement margin") {
    {
        auto m = builtin_model("linear_interacting", {{"a", 3.0}, {"kappa", 1.0}, {"sigma", 1.0}});
        RngStream probe(9, StreamDomain::probe, 0, 0, 0);
        auto rep = rbm::check_assumptions(m, 20000, 10.0, probe);
        CHECK(rep.beta_exceeds_2l);
    }
    {
        auto m = builtin_model("linear_interacting", {{"a", 1.0}, {"kappa", 1.0}, {"sigma", 1.0}});
        RngStream probe(9, StreamDomain::probe, 0, 0, 0);
        auto rep = rbm::check_assumptions(m, 20000, 10.0, probe);
        CHECK(!rep.beta_exceeds_2l);
    }
}

TEST_CASE("assumption probe rejects non-finite fields") {
    ModelSpec m;
    m.dim = 1;
    m.sigma = 1.0;
    m.label = "broken";
    m.drift = [](const double*, double* out) { out[0] = std::nan(""); };
    m.kernel = [](const double*, double* out) { out[0] = 0.0; };
    RngStream probe(1, StreamDomain::probe, 0, 0, 0);
    CHECK_THROWS_AS(rbm::check_assumptions(m, 100, 5.0, probe), rbm::NumericError);
}
