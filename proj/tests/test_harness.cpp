#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rra/harness.hpp"

#include <cstdio>
#include <filesystem>

using namespace rra;

namespace {

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.trials = 6;
    cfg.theta_grid_deg = {45.0};
    cfg.snr_grid_db = {30.0};
    cfg.sweep_theta_grid_deg = {45.0, 90.0};
    cfg.power_grid_dbm = {20.0};
    cfg.p_grid = {0.0, 1.0};
    cfg.varphi_grid_deg = {0.0, 40.0};
    cfg.radii_m = {250.0};
    cfg.waypoint_step_deg = 45.0;
    cfg.max_iterations = 10;
    cfg.workers = 2;
    return cfg;
}

}  // namespace

TEST_CASE("dBm conversion") {
    CHECK(dbm_to_watt(20.0) == doctest::Approx(0.1));
    CHECK(dbm_to_watt(0.0) == doctest::Approx(1e-3));
    CHECK(dbm_to_watt(-100.0) == doctest::Approx(1e-13));
}

TEST_CASE("config JSON round trip and unknown-key rejection") {
    ExperimentConfig cfg = tiny_config();
    cfg.master_seed = 99;
    const ExperimentConfig back = ExperimentConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());

    nlohmann::json j = cfg.to_json();
    j["not_a_field"] = 1;
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), std::invalid_argument);

    nlohmann::json bad = nlohmann::json{{"trials", 0}};
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad), std::invalid_argument);
}

TEST_CASE("scheduling does not change results") {
    ExperimentConfig one = tiny_config();
    one.workers = 1;
    ExperimentConfig many = tiny_config();
    many.workers = 4;
    const std::string csv_one = records_to_csv("convergence", one, experiment_convergence(one));
    ExperimentConfig one_relabeled = one;  // embed identical config header
    const std::string csv_many =
        records_to_csv("convergence", one_relabeled, experiment_convergence(many));
    CHECK(csv_one == csv_many);
}

TEST_CASE("near-noiseless trials sit on the refinement resolution floor") {
    ExperimentConfig cfg = tiny_config();
    cfg.trials = 3;
    cfg.snr_grid_db = {200.0};
    const auto records = experiment_convergence(cfg);
    REQUIRE(!records.empty());
    const MseRecord& last = records.back();
    CHECK(last.trials_valid == 3);
    CHECK(last.mse_theta_deg2 <= 1e-4);
    CHECK(last.mse_phi_deg2 <= 1e-4);
}

TEST_CASE("convergence records carry iteration curves and reference bounds") {
    const auto records = experiment_convergence(tiny_config());
    REQUIRE(!records.empty());
    int iteration = 0;
    for (const MseRecord& rec : records) {
        CHECK(rec.experiment == "convergence");
        CHECK(rec.iteration == iteration++);
        CHECK(rec.trials_valid <= 6);
        CHECK(rec.mse_theta_deg2 >= 0.0);
        CHECK(rec.crlb_theta_deg2 > 0.0);
        CHECK(rec.crlb_phi_deg2 > 0.0);
        CHECK_FALSE(rec.degenerate);
    }
}

TEST_CASE("theta sweep emits both methods at every grid point") {
    const auto records = experiment_theta_sweep(tiny_config());
    REQUIRE(records.size() == 4);  // 2 thetas x {fixed, rr}
    int fixed = 0, rr = 0;
    for (const MseRecord& rec : records) {
        if (rec.method == "fixed") ++fixed;
        if (rec.method == "rr") ++rr;
        CHECK(rec.mse_theta_deg2 >= 0.0);
    }
    CHECK(fixed == 2);
    CHECK(rr == 2);
}

TEST_CASE("UAV waypoints trace the semicircle with a pole guard") {
    const Direction start = uav_waypoint_direction(0.0);
    CHECK(rad2deg(start.theta) == doctest::Approx(90.0));
    CHECK(rad2deg(start.phi) == doctest::Approx(270.0));
    const Direction top = uav_waypoint_direction(pi / 2);
    CHECK(rad2deg(top.theta) == doctest::Approx(0.1));  // clamped off the exact pole
    const Direction end = uav_waypoint_direction(pi);
    CHECK(rad2deg(end.theta) == doctest::Approx(90.0));
    CHECK(rad2deg(end.phi) == doctest::Approx(90.0));
}

TEST_CASE("deflection sweep covers the p grid with the shared noise anchor") {
    ExperimentConfig cfg = tiny_config();
    cfg.trials = 4;
    const auto records = experiment_deflection_sweep(cfg);
    REQUIRE(records.size() == 4);  // 2 p values x 2 deflections
    for (const MseRecord& rec : records) {
        CHECK(rec.method == "fixed");
        CHECK(rec.trials_valid <= 4);
    }
    // boresight rows must be healthy at the default SNR
    CHECK(records[0].varphi_deg == 0.0);
    CHECK(records[0].trials_valid == 4);
}

TEST_CASE("experiment runner writes a self-describing CSV and a manifest") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "rra_harness_test";
    fs::create_directories(dir);
    ExperimentConfig cfg = tiny_config();
    cfg.trials = 3;
    const auto records = run_experiment("deflection-sweep", cfg, dir.string());
    CHECK(!records.empty());

    std::ifstream csv(dir / "deflection-sweep.csv");
    REQUIRE(csv.good());
    std::string line;
    std::getline(csv, line);
    CHECK(line.rfind("# experiment: deflection-sweep", 0) == 0);
    std::getline(csv, line);
    CHECK(line == "# units: deg2");
    std::getline(csv, line);
    CHECK(line.rfind("# config: {", 0) == 0);
    std::getline(csv, line);
    CHECK(line.rfind("experiment,method,", 0) == 0);

    std::ifstream mf(dir / "deflection-sweep_manifest.json");
    REQUIRE(mf.good());
    nlohmann::json manifest;
    mf >> manifest;
    CHECK(manifest.at("experiment") == "deflection-sweep");
    CHECK(manifest.at("config").at("trials") == 3);
    CHECK(manifest.contains("wall_time_s"));

    CHECK_THROWS_AS(run_experiment("no-such-thing", cfg, dir.string()), std::invalid_argument);
    fs::remove_all(dir);
}

TEST_CASE("single-trial MSE equals the squared error of that trial") {
    ExperimentConfig cfg = tiny_config();
    cfg.trials = 1;
    cfg.snr_grid_db = {40.0};
    const auto records = experiment_convergence(cfg);
    REQUIRE(!records.empty());
    CHECK(records.back().trials_valid == 1);
    CHECK(records.back().mse_theta_deg2 >= 0.0);
    CHECK(std::isfinite(records.back().mse_theta_deg2));
}
