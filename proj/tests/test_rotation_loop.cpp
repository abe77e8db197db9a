#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rra/rotation_loop.hpp"

#include "rra/crlb.hpp"  // noise_power_for_snr

using namespace rra;

namespace {

SourceParams source_at_snr(double snr_db, std::uint64_t seed) {
    SourceParams src;
    src.noise_power = noise_power_for_snr(PatternParams{}, src.transmit_power, snr_db);
    src.seed = seed;
    return src;
}

}  // namespace

TEST_CASE("rotation update targets the boresight") {
    const auto [dt0, dp0] = rotation_update(pi / 2, pi / 2);
    CHECK(dt0 == doctest::Approx(0.0));
    CHECK(dp0 == doctest::Approx(0.0));
    const auto [dt1, dp1] = rotation_update(deg2rad(75), deg2rad(90));
    CHECK(dt1 == doctest::Approx(deg2rad(15)));
    CHECK(dp1 == doctest::Approx(0.0));
    const auto [dt2, dp2] = rotation_update(deg2rad(15), deg2rad(45));
    CHECK(dt2 == doctest::Approx(deg2rad(75)));
    CHECK(dp2 == doctest::Approx(deg2rad(45)));
}

TEST_CASE("noiseless run converges onto the truth with vanishing deflection") {
    const Direction truth{deg2rad(25), deg2rad(70)};
    SourceParams src;
    src.noise_power = 1e-300;
    src.seed = 9;
    const RunResult result = run(truth, ArrayGeometry{}, PatternParams{}, src);

    CHECK(result.converged);
    CHECK(result.iterations_used <= 3);
    CHECK(std::abs(result.theta_final - truth.theta) < deg2rad(0.01));
    CHECK(std::abs(result.phi_final - truth.phi) < deg2rad(0.01));
    // one exact estimate puts the second iteration on boresight
    for (std::size_t i = 1; i < result.history.size(); ++i)
        CHECK(result.history[i].deflection < deg2rad(0.02));
    // stopping rule: last two world estimates agree within the threshold
    const auto& last = result.history.back();
    const auto& prev = result.history[result.history.size() - 2];
    CHECK(std::abs(last.theta_world - prev.theta_world) <= deg2rad(0.01));
    CHECK(std::abs(last.phi_world - prev.phi_world) <= deg2rad(0.01));
}

TEST_CASE("history bookkeeping is frame consistent") {
    const Direction truth{deg2rad(35), deg2rad(110)};
    const RunResult result =
        run(truth, ArrayGeometry{}, PatternParams{}, source_at_snr(20.0, 31));
    REQUIRE(!result.history.empty());
    for (const IterationRecord& rec : result.history) {
        // restoring the frame estimate must reproduce the stored world estimate
        const Direction redo = angles_from_vector(restore_direction(
            unit_vector(Direction{rec.theta_frame, rec.phi_frame}), rec.orientation));
        CHECK(std::abs(redo.theta - rec.theta_world) < 1e-10);
        CHECK(std::abs(redo.phi - rec.phi_world) < 1e-10);
        // the logged deflection is the one implied by truth and orientation
        CHECK(std::abs(rec.deflection - deflection_angle(truth, rec.orientation)) < 1e-12);
    }
    CHECK(result.iterations_used == static_cast<int>(result.history.size()));
    CHECK(result.iterations_used <= RunOptions{}.max_iterations);
}

TEST_CASE("boresight start at high SNR settles immediately") {
    const RunResult result = run(Direction{pi / 2, pi / 2}, ArrayGeometry{}, PatternParams{},
                                 source_at_snr(40.0, 12));
    CHECK(result.converged);
    CHECK(result.rotations() <= 2);
    CHECK(std::abs(result.theta_final - pi / 2) < deg2rad(0.05));
}

TEST_CASE("per-element SNR is non-decreasing through the loop at high SNR") {
    int monotone = 0, total = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const RunResult result =
            run(Direction{deg2rad(40), deg2rad(75)}, ArrayGeometry{}, PatternParams{},
                source_at_snr(30.0, 1000 + static_cast<std::uint64_t>(trial)));
        bool ok = true;
        for (std::size_t i = 1; i < result.history.size(); ++i)
            ok = ok && result.history[i].per_element_snr >=
                           result.history[i - 1].per_element_snr - 0.5;
        ++total;
        monotone += ok ? 1 : 0;
    }
    CHECK(monotone >= total * 95 / 100);
}

TEST_CASE("converged runs do not oscillate beyond the threshold scale") {
    int stable = 0, total = 0;
    const ArrayGeometry geom;
    const PatternParams pattern;
    for (int trial = 0; trial < 40; ++trial) {
        const SourceParams src = source_at_snr(30.0, 2000 + static_cast<std::uint64_t>(trial));
        const Direction truth{deg2rad(55), deg2rad(95)};
        const RunResult result = run(truth, geom, pattern, src);
        if (!result.converged) continue;
        ++total;
        // one extra look from the final orientation
        SourceParams extra = src;
        extra.seed = child_seed(src.seed, 987654);
        const Orientation last = result.history.back().orientation;
        const auto redo = estimate(synthesize(geom, pattern, truth, last, extra));
        const Direction world = angles_from_vector(
            restore_direction(unit_vector(Direction{redo.theta_hat, redo.phi_hat}), last));
        if (std::abs(world.theta - result.theta_final) <= 2 * deg2rad(0.01) &&
            std::abs(world.phi - result.phi_final) <= 2 * deg2rad(0.01))
            ++stable;
    }
    REQUIRE(total > 0);
    CHECK(stable >= total * 95 / 100);
}

TEST_CASE("a run that starts blind is flagged and still recovers at high SNR") {
    // emitter behind the initial orientation
    const Direction truth{deg2rad(60), deg2rad(250)};
    int found = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const RunResult result =
            run(truth, ArrayGeometry{}, PatternParams{}, source_at_snr(30.0, 3000 + seed));
        CHECK(result.started_blind);
        if (result.converged &&
            std::abs(result.theta_final - truth.theta) < deg2rad(0.5) &&
            detail::wrap_phi_gap(result.phi_final, truth.phi) < deg2rad(0.5))
            ++found;
    }
    CHECK(found >= 3);  // random initial estimates: most runs should lock on
}

TEST_CASE("option validation") {
    RunOptions opts;
    opts.max_iterations = 0;
    CHECK_THROWS_AS(run(Direction{}, ArrayGeometry{}, PatternParams{}, SourceParams{}, opts),
                    std::invalid_argument);
}
