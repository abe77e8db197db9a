// Command-line front end: single-shot estimation, one rotation-loop run,
// CRLB evaluation, the Monte Carlo experiment families, and a quick
// self-test of the core invariants.

#include "rra/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <random>
#include <string>
#include <vector>

namespace {

struct CommonArgs {
    std::string config_path;
    double theta_deg = 90.0;
    double phi_deg = 90.0;
    double delta_theta_deg = 0.0;
    double delta_phi_deg = 0.0;
    double snr_db = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 0;  // 0 = keep config value
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "JSON config file");
    cmd->add_option("--theta", args.theta_deg, "emitter polar angle, degrees");
    cmd->add_option("--phi", args.phi_deg, "emitter azimuth, degrees");
    cmd->add_option("--delta-theta", args.delta_theta_deg, "array rotation about x, degrees");
    cmd->add_option("--delta-phi", args.delta_phi_deg, "array rotation about z, degrees");
    cmd->add_option("--snr", args.snr_db, "per-element boresight receive SNR, dB");
    cmd->add_option("--seed", args.seed, "master seed");
}

rra::ExperimentConfig load_config(const CommonArgs& args) {
    rra::ExperimentConfig cfg;
    if (!args.config_path.empty()) cfg = rra::ExperimentConfig::load(args.config_path);
    if (!std::isnan(args.snr_db)) cfg.snr_db = args.snr_db;
    if (args.seed != 0) cfg.master_seed = args.seed;
    return cfg;
}

rra::SourceParams source_from(const rra::ExperimentConfig& cfg, bool snr_given) {
    rra::SourceParams src;
    src.transmit_power = cfg.transmit_power_w();
    src.noise_power = snr_given
                          ? rra::noise_power_for_snr(cfg.pattern(), src.transmit_power, cfg.snr_db)
                          : rra::dbm_to_watt(cfg.noise_power_dbm);
    src.snapshots = cfg.snapshots;
    src.seed = cfg.master_seed;
    return src;
}

int cmd_estimate(const CommonArgs& args) {
    const rra::ExperimentConfig cfg = load_config(args);
    const rra::SourceParams src = source_from(cfg, !std::isnan(args.snr_db));
    const rra::Direction truth{rra::deg2rad(args.theta_deg), rra::deg2rad(args.phi_deg)};
    const rra::Orientation orient =
        rra::rotation_matrix(rra::deg2rad(args.delta_theta_deg), rra::deg2rad(args.delta_phi_deg));

    const rra::SnapshotBlock block =
        rra::synthesize(cfg.geometry(), cfg.pattern(), truth, orient, src);
    const rra::DoaEstimate est = rra::estimate(block);

    nlohmann::json out{{"theta_deg", rra::rad2deg(est.theta_hat)},
                       {"phi_deg", rra::rad2deg(est.phi_hat)},
                       {"spectrum", est.spectrum_value},
                       {"deflection_deg", rra::rad2deg(block.deflection)},
                       {"channel_gain", block.gain},
                       {"back_hemisphere", block.back_hemisphere}};
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_rr_run(const CommonArgs& args, const std::string& out_path) {
    const rra::ExperimentConfig cfg = load_config(args);
    const rra::SourceParams src = source_from(cfg, !std::isnan(args.snr_db));
    const rra::Direction truth{rra::deg2rad(args.theta_deg), rra::deg2rad(args.phi_deg)};

    rra::RunOptions opts;
    opts.epsilon = rra::deg2rad(cfg.epsilon_deg);
    opts.max_iterations = cfg.max_iterations;
    const rra::RunResult result = rra::run(truth, cfg.geometry(), cfg.pattern(), src, opts);

    std::string csv = "# rotation loop history\n";
    csv += "# config: " + cfg.to_json().dump() + "\n";
    csv += "iteration,theta_frame_deg,phi_frame_deg,theta_world_deg,phi_world_deg,"
           "deflection_deg,per_element_snr_db\n";
    char buf[256];
    for (const rra::IterationRecord& rec : result.history) {
        std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", rec.index,
                      rra::rad2deg(rec.theta_frame), rra::rad2deg(rec.phi_frame),
                      rra::rad2deg(rec.theta_world), rra::rad2deg(rec.phi_world),
                      rra::rad2deg(rec.deflection), rec.per_element_snr);
        csv += buf;
    }
    if (out_path.empty())
        std::cout << csv;
    else
        rra::write_file(out_path, csv);

    nlohmann::json summary{{"converged", result.converged},
                           {"iterations_used", result.iterations_used},
                           {"rotations", result.rotations()},
                           {"started_blind", result.started_blind},
                           {"theta_deg", rra::rad2deg(result.theta_final)},
                           {"phi_deg", rra::rad2deg(result.phi_final)}};
    std::cerr << summary.dump(2) << "\n";
    return 0;
}

int cmd_crlb(const CommonArgs& args, const std::vector<double>& theta_grid_deg, bool deg2) {
    const rra::ExperimentConfig cfg = load_config(args);
    const rra::SourceParams src = source_from(cfg, !std::isnan(args.snr_db));
    const double unit = deg2 ? rra::rad2deg(rra::rad2deg(1.0)) : 1.0;
    const char* unit_name = deg2 ? "deg2" : "rad2";

    if (theta_grid_deg.empty()) {
        const rra::CrlbReport report = rra::crlb(
            cfg.geometry(), cfg.pattern(), src, {rra::deg2rad(args.theta_deg), rra::deg2rad(args.phi_deg)},
            rra::rotation_matrix(rra::deg2rad(args.delta_theta_deg), rra::deg2rad(args.delta_phi_deg)));
        nlohmann::json out{{"var_theta_lb", report.var_theta_lb * unit},
                           {"var_phi_lb", report.var_phi_lb * unit},
                           {"units", unit_name}};
        std::cout << out.dump(2) << "\n";
        return 0;
    }

    std::vector<double> thetas;
    for (double t : theta_grid_deg) thetas.push_back(rra::deg2rad(t));
    const auto rows = rra::crlb_sweep(cfg.geometry(), cfg.pattern(), src, thetas,
                                      {rra::deg2rad(args.phi_deg)},
                                      {rra::deg2rad(args.delta_theta_deg)},
                                      {rra::deg2rad(args.delta_phi_deg)}, {cfg.p}, {cfg.snr_db});
    std::cout << "theta_deg,phi_deg,delta_theta_deg,delta_phi_deg,p,snr_db,var_theta_lb_"
              << unit_name << ",var_phi_lb_" << unit_name << ",error\n";
    char buf[256];
    for (const auto& row : rows) {
        if (row.valid)
            std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,\n",
                          rra::rad2deg(row.theta), rra::rad2deg(row.phi),
                          rra::rad2deg(row.delta_theta), rra::rad2deg(row.delta_phi), row.p,
                          row.snr_db, row.report.var_theta_lb * unit,
                          row.report.var_phi_lb * unit);
        else
            std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,,,\"%s\"\n",
                          rra::rad2deg(row.theta), rra::rad2deg(row.phi),
                          rra::rad2deg(row.delta_theta), rra::rad2deg(row.delta_phi), row.p,
                          row.snr_db, row.error.c_str());
        std::cout << buf;
    }
    return 0;
}

bool report(const char* name, bool ok) {
    std::printf("%-34s %s\n", name, ok ? "ok" : "FAILED");
    return ok;
}

int cmd_selftest() {
    bool all = true;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    {  // rotate -> restore round trip and orthogonality
        bool ok = true;
        for (int i = 0; i < 1000 && ok; ++i) {
            const rra::Direction dir{uni(rng) * (rra::pi - 0.02) + 0.01, uni(rng) * 2 * rra::pi};
            const rra::Orientation orient =
                rra::rotation_matrix((uni(rng) - 0.5) * rra::pi, (uni(rng) - 0.5) * 2 * rra::pi);
            const Eigen::Vector3d v = rra::unit_vector(dir);
            ok = (rra::restore_direction(rra::rotate_direction(dir, orient), orient) - v).norm() <
                     1e-12 &&
                 (orient.rotation * orient.rotation.transpose() - Eigen::Matrix3d::Identity())
                         .norm() < 1e-12;
        }
        all &= report("frame round trip", ok);
    }
    {  // closed-form Fisher entries vs finite differences
        bool ok = true;
        const rra::ArrayGeometry geom;
        const rra::SourceParams src;
        for (int i = 0; i < 20 && ok; ++i) {
            rra::PatternParams pattern;
            pattern.p = std::vector<double>{0.0, 0.5, 1.0, 2.0}[i % 4];
            const rra::Direction dir{rra::deg2rad(10 + 160 * uni(rng)),
                                     rra::deg2rad(10 + 160 * uni(rng))};
            const rra::Orientation orient = rra::rotation_matrix(
                rra::deg2rad(90 * uni(rng) - 45), rra::deg2rad(90 * uni(rng) - 45));
            if (rra::gain_alpha_beta(dir, orient).alpha < 0.1) continue;
            const rra::FimEntries a = rra::fim_entries(geom, pattern, src, dir, orient);
            const rra::FimEntries b = rra::fim_numeric(geom, pattern, src, dir, orient);
            const double scale = std::max({std::abs(b.P), std::abs(b.R), 1e-30});
            ok = std::abs(a.P - b.P) < 1e-4 * scale && std::abs(a.Q - b.Q) < 1e-4 * scale &&
                 std::abs(a.R - b.R) < 1e-4 * scale;
        }
        all &= report("fisher information closed forms", ok);
    }
    {  // hemisphere power normalization of the element pattern
        bool ok = true;
        for (double p : {0.0, 0.5, 1.0, 2.0}) {
            const double g0_sq = 2.0 * (2.0 * p + 1.0);
            double integral = 0.0;
            const int steps = 2000;
            for (int i = 0; i < steps; ++i) {
                const double varphi = (i + 0.5) * (rra::pi / 2) / steps;
                integral += g0_sq * std::pow(std::cos(varphi), 2.0 * p) * std::sin(varphi) *
                            (rra::pi / 2) / steps;
            }
            ok = ok && std::abs(integral * 2 * rra::pi - 4 * rra::pi) < 0.001 * 4 * rra::pi;
        }
        all &= report("pattern normalization", ok);
    }
    {  // near-noiseless exact recovery
        bool ok = true;
        const rra::ArrayGeometry geom;
        const rra::PatternParams pattern;
        for (int i = 0; i < 3 && ok; ++i) {
            const rra::Direction truth{rra::deg2rad(30 + 40 * uni(rng)),
                                       rra::deg2rad(40 + 100 * uni(rng))};
            rra::SourceParams src;
            src.noise_power = 1e-300;
            src.seed = 1234 + static_cast<std::uint64_t>(i);
            const auto est = rra::estimate(
                rra::synthesize(geom, pattern, truth, rra::identity_orientation(), src));
            ok = std::abs(est.theta_hat - truth.theta) < rra::deg2rad(0.01) &&
                 std::abs(est.phi_hat - truth.phi) < rra::deg2rad(0.01);
        }
        all &= report("noiseless recovery", ok);
    }
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rotatable-array DOA estimation toolkit"};
    app.require_subcommand(1);

    CommonArgs est_args, run_args, crlb_args, exp_args;
    std::string run_out, exp_out = ".", exp_name;
    std::vector<double> crlb_theta_grid;
    bool crlb_deg2 = false;
    int exp_trials = 0, exp_workers = -1;

    CLI::App* est = app.add_subcommand("estimate", "one snapshot block, one estimate");
    add_common(est, est_args);

    CLI::App* rrr = app.add_subcommand("rr-run", "one full rotation loop, history CSV");
    add_common(rrr, run_args);
    rrr->add_option("--out", run_out, "write history CSV here instead of stdout");

    CLI::App* crl = app.add_subcommand("crlb", "lower bounds at a point or over a theta grid");
    add_common(crl, crlb_args);
    crl->add_option("--theta-grid", crlb_theta_grid, "theta sweep values, degrees");
    crl->add_flag("--deg2", crlb_deg2, "report bounds in deg^2 instead of rad^2");

    CLI::App* exp = app.add_subcommand("experiment", "Monte Carlo experiment family");
    exp->add_option("name", exp_name,
                    "convergence | theta-sweep | uav-path | deflection-sweep")
        ->required();
    add_common(exp, exp_args);
    exp->add_option("--trials", exp_trials, "Monte Carlo trials per scenario point");
    exp->add_option("--workers", exp_workers, "worker threads (0 = hardware)");
    exp->add_option("--out", exp_out, "output directory");

    app.add_subcommand("selftest", "run the built-in invariant checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (est->parsed()) return cmd_estimate(est_args);
        if (rrr->parsed()) return cmd_rr_run(run_args, run_out);
        if (crl->parsed()) return cmd_crlb(crlb_args, crlb_theta_grid, crlb_deg2);
        if (exp->parsed()) {
            rra::ExperimentConfig cfg = load_config(exp_args);
            if (exp_trials > 0) cfg.trials = exp_trials;
            if (exp_workers >= 0) cfg.workers = exp_workers;
            rra::run_experiment(exp_name, cfg, exp_out);
            return 0;
        }
        return cmd_selftest();
    } catch (const std::invalid_argument& e) {
        nlohmann::json err{{"error", e.what()}};
        std::cerr << err.dump() << "\n";
        return 3;
    } catch (const std::exception& e) {
        nlohmann::json err{{"error", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}
