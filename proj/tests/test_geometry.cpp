#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rra/geometry.hpp"

#include <random>

using namespace rra;

namespace {
std::mt19937_64 rng(101);
double uni(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}
Direction random_direction() { return {uni(0.01, pi - 0.01), uni(0.0, 2 * pi - 1e-9)}; }
Orientation random_orientation() { return rotation_matrix(uni(-pi / 2, pi / 2), uni(-pi, pi)); }
}  // namespace

TEST_CASE("element grid is centered and validated") {
    ArrayGeometry geom;
    CHECK(geom.elements() == 36);
    double sx = 0.0, sz = 0.0;
    for (int n = 0; n < geom.n_x; ++n) sx += geom.x_coord(n);
    for (int m = 0; m < geom.n_z; ++m) sz += geom.z_coord(m);
    CHECK(sx == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(sz == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(geom.x_coord(0) == doctest::Approx(-2.5 * geom.d_x));
    CHECK(geom.x_coord(5) == doctest::Approx(2.5 * geom.d_x));

    CHECK_THROWS_AS(element_position(geom, 0, 6), std::out_of_range);
    CHECK_THROWS_AS(element_position(geom, -1, 0), std::out_of_range);
    ArrayGeometry bad = geom;
    bad.d_x = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("squared-coordinate moments match the brute-force sums") {
    // closed form N(N^2-1)/12 d^2 against direct accumulation
    for (int n : {1, 2, 5, 6, 9}) {
        ArrayGeometry geom;
        geom.n_x = n;
        geom.n_z = n + 1;
        double sx = 0.0, sz = 0.0;
        for (int i = 0; i < geom.n_x; ++i) sx += geom.x_coord(i) * geom.x_coord(i);
        for (int m = 0; m < geom.n_z; ++m) sz += geom.z_coord(m) * geom.z_coord(m);
        CHECK(geom.moment_x() == doctest::Approx(sx).epsilon(1e-14));
        CHECK(geom.moment_z() == doctest::Approx(sz).epsilon(1e-14));
    }
}

TEST_CASE("direction angles round trip through the unit vector") {
    for (int i = 0; i < 200; ++i) {
        const Direction dir = random_direction();
        const Direction back = angles_from_vector(unit_vector(dir));
        CHECK(back.theta == doctest::Approx(dir.theta).epsilon(1e-12));
        CHECK(back.phi == doctest::Approx(dir.phi).epsilon(1e-12));
    }
    CHECK_THROWS_AS((Direction{0.0, 0.0}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((Direction{pi / 2, -0.1}.validate()), std::invalid_argument);
}

TEST_CASE("rotation matrices are orthogonal with unit determinant") {
    for (int i = 0; i < 200; ++i) {
        const Orientation o = random_orientation();
        CHECK((o.rotation * o.rotation.transpose() - Eigen::Matrix3d::Identity()).norm() < 1e-13);
        CHECK(o.rotation.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("rotate then restore is the identity") {
    for (int i = 0; i < 1000; ++i) {
        const Direction dir = random_direction();
        const Orientation o = random_orientation();
        const Eigen::Vector3d v = unit_vector(dir);
        CHECK((restore_direction(rotate_direction(dir, o), o) - v).norm() < 1e-12);
    }
}

TEST_CASE("two rotation steps equal their composition on direction vectors") {
    for (int i = 0; i < 100; ++i) {
        const Orientation a = random_orientation();
        const Orientation b = random_orientation();
        const Orientation ab = compose(a, b);
        CHECK_FALSE(ab.canonical);
        const Direction dir = random_direction();
        // applying b in the frame already rotated by a
        const Eigen::Vector3d stepwise = b.rotation.transpose() * rotate_direction(dir, a);
        CHECK((rotate_direction(dir, ab) - stepwise).norm() < 1e-12);
    }
}

TEST_CASE("deflection matches the canonical closed form") {
    for (int i = 0; i < 300; ++i) {
        const Direction dir = random_direction();
        const Orientation o = random_orientation();
        const double expected =
            std::acos(clamp_unit(std::sin(dir.theta) * std::cos(o.delta_theta) *
                                     std::sin(dir.phi + o.delta_phi) +
                                 std::cos(dir.theta) * std::sin(o.delta_theta)));
        CHECK(deflection_angle(dir, o) == doctest::Approx(expected).epsilon(1e-11));
    }
    // no rotation: angle from the +y axis
    const Direction dir{deg2rad(70), deg2rad(30)};
    CHECK(deflection_angle(dir, identity_orientation()) ==
          doctest::Approx(std::acos(std::sin(dir.theta) * std::sin(dir.phi))));
}

TEST_CASE("phase term equals the rotated-frame plane-wave inner product") {
    const ArrayGeometry geom;
    for (int i = 0; i < 50; ++i) {
        const Direction dir = random_direction();
        const Orientation o = random_orientation();
        const Eigen::Vector3d u = rotate_direction(dir, o);
        for (int m : {0, 3, 5})
            for (int n : {0, 2, 5}) {
                const double expected =
                    geom.wavenumber() * element_position(geom, m, n).dot(u);  // y term is zero
                CHECK(phase_term(geom, m, n, dir, o) == doctest::Approx(expected).epsilon(1e-12));
            }
    }
}
