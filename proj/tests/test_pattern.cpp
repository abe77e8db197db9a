#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rra/pattern.hpp"

#include <random>

using namespace rra;

namespace {
std::mt19937_64 rng(202);
double uni(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}
}  // namespace

TEST_CASE("peak gain follows 2(2p+1) and the hemisphere power integral is 4*pi") {
    for (double p : {0.0, 0.5, 1.0, 2.0, 3.5}) {
        PatternParams params;
        params.p = p;
        CHECK(params.max_gain() == doctest::Approx(2.0 * (2.0 * p + 1.0)));

        // integral of G0 cos^(2p) over the front hemisphere, solid angle form
        double integral = 0.0;
        const int steps = 4000;
        for (int i = 0; i < steps; ++i) {
            const double varphi = (i + 0.5) * (pi / 2) / steps;
            integral += params.max_gain() * std::pow(std::cos(varphi), 2.0 * p) *
                        std::sin(varphi) * (pi / 2) / steps;
        }
        CHECK(integral * 2.0 * pi == doctest::Approx(4.0 * pi).epsilon(1e-3));
    }
}

TEST_CASE("gain vanishes behind the array and peaks on boresight") {
    PatternParams params;
    CHECK(directive_gain(params, 0.0) == doctest::Approx(params.g0()));
    CHECK(directive_gain(params, pi / 2) == 0.0);
    CHECK(directive_gain(params, pi / 2 + 0.3) == 0.0);
    CHECK(directive_gain(params, -pi / 2 - 0.3) == 0.0);
    CHECK(directive_gain(params, deg2rad(89.999)) > 0.0);
    CHECK(directive_gain(params, deg2rad(60)) == doctest::Approx(params.g0() * 0.5));

    PatternParams bad;
    bad.p = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("alpha equals the cosine of the boresight deflection") {
    for (int i = 0; i < 500; ++i) {
        const Direction dir{uni(0.01, pi - 0.01), uni(0.0, 2 * pi - 1e-9)};
        const Orientation orient = rotation_matrix(uni(-pi / 2, pi / 2), uni(-pi, pi));
        const AlphaBeta ab = gain_alpha_beta(dir, orient);
        CHECK(ab.alpha ==
              doctest::Approx(std::cos(deflection_angle(dir, orient))).epsilon(1e-11));
    }
    const Orientation composed =
        compose(rotation_matrix(0.1, 0.2), rotation_matrix(0.3, -0.1));
    CHECK_THROWS_AS(gain_alpha_beta(Direction{}, composed), std::invalid_argument);
}

TEST_CASE("analytic gain derivatives match central differences") {
    const double h = 1e-6;
    int checked = 0;
    while (checked < 200) {
        PatternParams params;
        params.p = std::vector<double>{0.5, 1.0, 2.0, 3.0}[static_cast<std::size_t>(checked) % 4];
        const Direction dir{uni(0.05, pi - 0.05), uni(0.0, 2 * pi - 1e-9)};
        const Orientation orient = rotation_matrix(uni(-pi / 2, pi / 2), uni(-pi, pi));
        if (gain_alpha_beta(dir, orient).alpha < 0.1) continue;
        ++checked;

        const auto g = [&](double th, double ph) {
            return directive_gain(params, deflection_angle(Direction{th, ph}, orient));
        };
        const GainDerivatives gd = gain_derivatives(params, dir, orient);
        const double num_t = (g(dir.theta + h, dir.phi) - g(dir.theta - h, dir.phi)) / (2 * h);
        const double num_p = (g(dir.theta, dir.phi + h) - g(dir.theta, dir.phi - h)) / (2 * h);
        const double scale = std::max({std::abs(num_t), std::abs(num_p), 1e-9});
        CHECK(std::abs(gd.dg_dtheta - num_t) < 1e-5 * scale);
        CHECK(std::abs(gd.dg_dphi - num_p) < 1e-5 * scale);
    }
}

TEST_CASE("derivative edge cases") {
    PatternParams params;
    params.p = 0.0;
    const GainDerivatives flat = gain_derivatives(params, Direction{}, identity_orientation());
    CHECK(flat.dg_dtheta == 0.0);
    CHECK(flat.dg_dphi == 0.0);

    // emitter behind the array: zero for integer p, undefined otherwise
    const Direction behind{pi / 2, 3 * pi / 2};
    params.p = 2.0;
    const GainDerivatives zero = gain_derivatives(params, behind, identity_orientation());
    CHECK(zero.dg_dtheta == 0.0);
    params.p = 0.5;
    CHECK_THROWS_AS(gain_derivatives(params, behind, identity_orientation()), std::domain_error);
}
