#ifndef RRA_HARNESS_HPP
#define RRA_HARNESS_HPP

#include "rra/crlb.hpp"
#include "rra/estimator.hpp"
#include "rra/geometry.hpp"
#include "rra/pattern.hpp"
#include "rra/rotation_loop.hpp"
#include "rra/signal.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

// Monte Carlo experiment driver: scenario configuration, seeded parallel
// trials, MSE aggregation against CRLB references, and CSV/JSON emission.
// Four experiment families: convergence curves over iterations, an
// elevation sweep comparing the fixed and rotating estimators, a UAV
// semicircle fly-over, and a boresight-deflection sweep over directivity
// factors.

namespace rra {

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

struct ExperimentConfig {
    // geometry
    int n_x = 6;
    int n_z = 6;
    double d_x = 0.0625;
    double d_z = 0.0625;
    double wavelength = 0.125;
    // element pattern / link
    double p = 1.0;
    double aperture_area = 6 * 0.0625 * 6 * 0.0625;
    double range = 250.0;
    // source
    double transmit_power_dbm = 20.0;
    double noise_power_dbm = -100.0;  ///< used when no SNR is requested
    int snapshots = 100;
    /// Per-element receive SNR (dB) at zero boresight deflection; drives the
    /// noise floor of the sweep experiments.
    double snr_db = -10.0;
    // scenario
    int trials = 2000;
    double phi_deg = 90.0;
    double epsilon_deg = 0.01;
    int max_iterations = 50;
    std::vector<double> theta_grid_deg{75.0, 45.0, 15.0};
    std::vector<double> snr_grid_db{-10.0, 10.0, 30.0};
    std::vector<double> sweep_theta_grid_deg{5.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0};
    std::vector<double> power_grid_dbm{0.0, 20.0};
    std::vector<double> p_grid{0.0, 0.5, 1.0, 2.0};
    std::vector<double> varphi_grid_deg{0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0};
    std::vector<double> radii_m{150.0, 250.0};
    double waypoint_step_deg = 5.0;
    std::uint64_t master_seed = 1;
    int workers = 0;  ///< 0 = hardware concurrency

    void validate() const {
        geometry().validate();
        pattern().validate();
        if (trials < 1) throw std::invalid_argument("ExperimentConfig: trials must be >= 1");
        if (snapshots < 1) throw std::invalid_argument("ExperimentConfig: snapshots must be >= 1");
        if (epsilon_deg <= 0.0) throw std::invalid_argument("ExperimentConfig: epsilon_deg must be > 0");
        if (max_iterations < 1)
            throw std::invalid_argument("ExperimentConfig: max_iterations must be >= 1");
        if (workers < 0) throw std::invalid_argument("ExperimentConfig: workers must be >= 0");
        if (waypoint_step_deg <= 0.0)
            throw std::invalid_argument("ExperimentConfig: waypoint_step_deg must be > 0");
        for (const auto* grid : {&theta_grid_deg, &snr_grid_db, &sweep_theta_grid_deg,
                                 &power_grid_dbm, &p_grid, &varphi_grid_deg, &radii_m})
            if (grid->empty()) throw std::invalid_argument("ExperimentConfig: empty grid");
    }

    ArrayGeometry geometry() const { return {n_x, n_z, d_x, d_z, wavelength}; }
    PatternParams pattern() const { return {p, aperture_area, range}; }
    double transmit_power_w() const { return dbm_to_watt(transmit_power_dbm); }
    int effective_workers() const {
        if (workers > 0) return workers;
        const unsigned hw = std::thread::hardware_concurrency();
        return hw > 0 ? static_cast<int>(hw) : 4;
    }

    nlohmann::json to_json() const {
        return {{"n_x", n_x},
                {"n_z", n_z},
                {"d_x", d_x},
                {"d_z", d_z},
                {"wavelength", wavelength},
                {"p", p},
                {"aperture_area", aperture_area},
                {"range", range},
                {"transmit_power_dbm", transmit_power_dbm},
                {"noise_power_dbm", noise_power_dbm},
                {"snapshots", snapshots},
                {"snr_db", snr_db},
                {"trials", trials},
                {"phi_deg", phi_deg},
                {"epsilon_deg", epsilon_deg},
                {"max_iterations", max_iterations},
                {"theta_grid_deg", theta_grid_deg},
                {"snr_grid_db", snr_grid_db},
                {"sweep_theta_grid_deg", sweep_theta_grid_deg},
                {"power_grid_dbm", power_grid_dbm},
                {"p_grid", p_grid},
                {"varphi_grid_deg", varphi_grid_deg},
                {"radii_m", radii_m},
                {"waypoint_step_deg", waypoint_step_deg},
                {"master_seed", master_seed},
                {"workers", workers}};
    }

    static ExperimentConfig from_json(const nlohmann::json& j) {
        ExperimentConfig cfg;
        const nlohmann::json defaults = cfg.to_json();
        for (const auto& [key, value] : j.items()) {
            if (!defaults.contains(key))
                throw std::invalid_argument("ExperimentConfig: unknown key \"" + key + "\"");
            (void)value;
        }
        const auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).template get<std::decay_t<decltype(field)>>();
        };
        get("n_x", cfg.n_x);
        get("n_z", cfg.n_z);
        get("d_x", cfg.d_x);
        get("d_z", cfg.d_z);
        get("wavelength", cfg.wavelength);
        get("p", cfg.p);
        get("aperture_area", cfg.aperture_area);
        get("range", cfg.range);
        get("transmit_power_dbm", cfg.transmit_power_dbm);
        get("noise_power_dbm", cfg.noise_power_dbm);
        get("snapshots", cfg.snapshots);
        get("snr_db", cfg.snr_db);
        get("trials", cfg.trials);
        get("phi_deg", cfg.phi_deg);
        get("epsilon_deg", cfg.epsilon_deg);
        get("max_iterations", cfg.max_iterations);
        get("theta_grid_deg", cfg.theta_grid_deg);
        get("snr_grid_db", cfg.snr_grid_db);
        get("sweep_theta_grid_deg", cfg.sweep_theta_grid_deg);
        get("power_grid_dbm", cfg.power_grid_dbm);
        get("p_grid", cfg.p_grid);
        get("varphi_grid_deg", cfg.varphi_grid_deg);
        get("radii_m", cfg.radii_m);
        get("waypoint_step_deg", cfg.waypoint_step_deg);
        get("master_seed", cfg.master_seed);
        get("workers", cfg.workers);
        cfg.validate();
        return cfg;
    }

    static ExperimentConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::invalid_argument("ExperimentConfig: cannot open " + path);
        nlohmann::json j;
        in >> j;
        return from_json(j);
    }
};

/// One aggregated result row. Fields that do not apply to an experiment stay
/// NaN / -1 and serialize as empty CSV cells.
struct MseRecord {
    std::string experiment;
    std::string method;  ///< "fixed" or "rr"
    double theta_deg = std::numeric_limits<double>::quiet_NaN();
    double phi_deg = std::numeric_limits<double>::quiet_NaN();
    double snr_db = std::numeric_limits<double>::quiet_NaN();
    double power_dbm = std::numeric_limits<double>::quiet_NaN();
    double p = std::numeric_limits<double>::quiet_NaN();
    double varphi_deg = std::numeric_limits<double>::quiet_NaN();
    double radius_m = std::numeric_limits<double>::quiet_NaN();
    int waypoint = -1;
    int iteration = -1;
    double mse_theta_deg2 = std::numeric_limits<double>::quiet_NaN();
    double mse_phi_deg2 = std::numeric_limits<double>::quiet_NaN();
    double crlb_theta_deg2 = std::numeric_limits<double>::quiet_NaN();
    double crlb_phi_deg2 = std::numeric_limits<double>::quiet_NaN();
    int trials_valid = 0;
    double median_rotations = std::numeric_limits<double>::quiet_NaN();
    bool degenerate = false;
};

/// Noise power giving the requested per-element receive SNR for a
/// hemispherically isotropic (p = 0) element at the configured range. All
/// experiments quote SNR against this reference, so directive patterns show
/// their main-lobe gain as real SNR advantage on top of it.
inline double reference_noise_power(const ExperimentConfig& cfg, double transmit_power_w,
                                    double snr_db) {
    PatternParams iso = cfg.pattern();
    iso.p = 0.0;
    return noise_power_for_snr(iso, transmit_power_w, snr_db);
}

namespace detail {

/// Order-independent parallel map over [0, count): work is claimed through an
/// atomic counter, results land in an index-addressed vector.
template <typename T, typename Fn>
std::vector<T> parallel_map(int count, int workers, Fn fn) {
    std::vector<T> results(static_cast<std::size_t>(count));
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) results[static_cast<std::size_t>(i)] = fn(i);
        return results;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1))
                results[static_cast<std::size_t>(i)] = fn(i);
        });
    for (auto& t : pool) t.join();
    return results;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double sq_deg(double rad) {
    const double d = rad2deg(rad);
    return d * d;
}

/// Squared world-frame errors in deg^2, phi wrap-aware.
inline std::pair<double, double> squared_errors(double theta_hat, double phi_hat,
                                                const Direction& truth) {
    return {sq_deg(theta_hat - truth.theta), sq_deg(wrap_phi_gap(phi_hat, truth.phi))};
}

/// Single-look estimate at a fixed orientation, with fresh-noise retries.
inline std::optional<DoaEstimate> fixed_trial(const ArrayGeometry& geom,
                                              const PatternParams& pattern,
                                              const Direction& truth, const Orientation& orient,
                                              SourceParams source, int retries) {
    for (int attempt = 0; attempt < retries; ++attempt) {
        SourceParams draw = source;
        draw.seed = child_seed(source.seed, static_cast<std::uint64_t>(attempt));
        try {
            return estimate(synthesize(geom, pattern, truth, orient, draw));
        } catch (const EstimationError&) {
        }
    }
    return std::nullopt;
}

/// Orientation that puts the given direction exactly on boresight; the CRLB
/// at this orientation is the reference for the rotating estimator.
inline Orientation aligned_orientation(const Direction& dir) {
    return rotation_matrix(pi / 2 - dir.theta, pi / 2 - dir.phi);
}

inline void attach_crlb(MseRecord& rec, const ArrayGeometry& geom, const PatternParams& pattern,
                        const SourceParams& source, const Direction& truth,
                        const Orientation& orient, bool initial) {
    try {
        const CrlbReport report = initial ? crlb_initial(geom, pattern, source, truth)
                                          : crlb(geom, pattern, source, truth, orient);
        rec.crlb_theta_deg2 = rad2deg(rad2deg(report.var_theta_lb));
        rec.crlb_phi_deg2 = rad2deg(rad2deg(report.var_phi_lb));
    } catch (const std::exception&) {
        // behind the array / singular: leave the reference cells empty
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Experiments

/// MSE versus iteration index of the rotating estimator for each
/// (theta, SNR) scenario, with boresight-aligned CRLB reference columns and
/// the median number of physical rotations until the stopping rule fired.
inline std::vector<MseRecord> experiment_convergence(const ExperimentConfig& cfg) {
    cfg.validate();
    const ArrayGeometry geom = cfg.geometry();
    const PatternParams pattern = cfg.pattern();
    const double phi = deg2rad(cfg.phi_deg);

    std::vector<MseRecord> records;
    std::uint64_t scenario = 0;
    for (double theta_deg : cfg.theta_grid_deg)
        for (double snr : cfg.snr_grid_db) {
            const Direction truth{deg2rad(theta_deg), phi};
            SourceParams source;
            source.transmit_power = cfg.transmit_power_w();
            source.noise_power = reference_noise_power(cfg, source.transmit_power, snr);
            source.snapshots = cfg.snapshots;

            RunOptions opts;
            opts.epsilon = deg2rad(cfg.epsilon_deg);
            opts.max_iterations = cfg.max_iterations;

            const std::uint64_t scenario_seed = child_seed(cfg.master_seed, scenario++);
            const auto outcomes = detail::parallel_map<std::optional<RunResult>>(
                cfg.trials, cfg.effective_workers(), [&](int trial) -> std::optional<RunResult> {
                    SourceParams draw = source;
                    draw.seed = child_seed(scenario_seed, static_cast<std::uint64_t>(trial));
                    try {
                        return run(truth, geom, pattern, draw, opts);
                    } catch (const EstimationError&) {
                        return std::nullopt;
                    }
                });

            int longest = 0;
            int valid = 0;
            std::vector<double> rotations;
            for (const auto& out : outcomes) {
                if (!out) {
                    rotations.push_back(static_cast<double>(cfg.max_iterations));
                    continue;
                }
                ++valid;
                longest = std::max(longest, out->iterations_used);
                rotations.push_back(out->converged ? static_cast<double>(out->rotations())
                                                   : static_cast<double>(cfg.max_iterations));
            }
            const double med_rot = detail::median(rotations);

            for (int it = 0; it < std::max(longest, 1); ++it) {
                MseRecord rec;
                rec.experiment = "convergence";
                rec.method = "rr";
                rec.theta_deg = theta_deg;
                rec.phi_deg = cfg.phi_deg;
                rec.snr_db = snr;
                rec.p = cfg.p;
                rec.iteration = it;
                rec.trials_valid = valid;
                rec.median_rotations = med_rot;
                double sum_t = 0.0, sum_p = 0.0;
                for (const auto& out : outcomes) {
                    if (!out) continue;
                    // converged trials hold their final estimate on later indices
                    const auto& h =
                        out->history[static_cast<std::size_t>(std::min(it, out->iterations_used - 1))];
                    const auto [et, ep] =
                        detail::squared_errors(h.theta_world, h.phi_world, truth);
                    sum_t += et;
                    sum_p += ep;
                }
                if (valid > 0) {
                    rec.mse_theta_deg2 = sum_t / valid;
                    rec.mse_phi_deg2 = sum_p / valid;
                }
                rec.degenerate = valid * 2 < cfg.trials;
                detail::attach_crlb(rec, geom, pattern, source, truth,
                                    detail::aligned_orientation(truth), false);
                records.push_back(rec);
            }
        }
    return records;
}

/// Fixed versus rotating estimator MSE over an elevation grid for each
/// transmit power. The noise floor is set once from snr_db at the largest
/// grid power, so lower powers see proportionally less SNR.
inline std::vector<MseRecord> experiment_theta_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const ArrayGeometry geom = cfg.geometry();
    const PatternParams pattern = cfg.pattern();
    const double phi = deg2rad(cfg.phi_deg);
    const double p_ref =
        dbm_to_watt(*std::max_element(cfg.power_grid_dbm.begin(), cfg.power_grid_dbm.end()));
    const double noise = reference_noise_power(cfg, p_ref, cfg.snr_db);

    std::vector<MseRecord> records;
    std::uint64_t scenario = 0;
    for (double power_dbm : cfg.power_grid_dbm)
        for (double theta_deg : cfg.sweep_theta_grid_deg)
            for (const std::string method : {"fixed", "rr"}) {
                const Direction truth{deg2rad(theta_deg), phi};
                SourceParams source;
                source.transmit_power = dbm_to_watt(power_dbm);
                source.noise_power = noise;
                source.snapshots = cfg.snapshots;

                RunOptions opts;
                opts.epsilon = deg2rad(cfg.epsilon_deg);
                opts.max_iterations = cfg.max_iterations;

                const bool rotating = method == "rr";
                const std::uint64_t scenario_seed = child_seed(cfg.master_seed, scenario++);
                const auto errors =
                    detail::parallel_map<std::optional<std::pair<double, double>>>(
                        cfg.trials, cfg.effective_workers(),
                        [&](int trial) -> std::optional<std::pair<double, double>> {
                            SourceParams draw = source;
                            draw.seed =
                                child_seed(scenario_seed, static_cast<std::uint64_t>(trial));
                            if (rotating) {
                                try {
                                    const RunResult out = run(truth, geom, pattern, draw, opts);
                                    return detail::squared_errors(out.theta_final, out.phi_final,
                                                                  truth);
                                } catch (const EstimationError&) {
                                    return std::nullopt;
                                }
                            }
                            const auto est = detail::fixed_trial(geom, pattern, truth,
                                                                 identity_orientation(), draw, 5);
                            if (!est) return std::nullopt;
                            return detail::squared_errors(est->theta_hat, est->phi_hat, truth);
                        });

                MseRecord rec;
                rec.experiment = "theta_sweep";
                rec.method = method;
                rec.theta_deg = theta_deg;
                rec.phi_deg = cfg.phi_deg;
                rec.power_dbm = power_dbm;
                // boresight SNR at this power relative to the reference power
                rec.snr_db = cfg.snr_db - 10.0 * std::log10(p_ref / source.transmit_power);
                rec.p = cfg.p;
                double sum_t = 0.0, sum_p = 0.0;
                int valid = 0;
                for (const auto& e : errors)
                    if (e) {
                        sum_t += e->first;
                        sum_p += e->second;
                        ++valid;
                    }
                rec.trials_valid = valid;
                if (valid > 0) {
                    rec.mse_theta_deg2 = sum_t / valid;
                    rec.mse_phi_deg2 = sum_p / valid;
                }
                rec.degenerate = valid * 2 < cfg.trials;
                detail::attach_crlb(rec, geom, pattern, source, truth,
                                    detail::aligned_orientation(truth), !rotating);
                records.push_back(rec);
            }
    return records;
}

/// Waypoints of a semicircular fly-over in the y-z plane from (0, -r, 0)
/// over the zenith to (0, r, 0). The polar angle is kept off the exact pole
/// so both angles stay defined.
inline Direction uav_waypoint_direction(double t_rad) {
    Eigen::Vector3d v(0.0, -std::cos(t_rad), std::sin(t_rad));
    Direction d = angles_from_vector(v);
    const double floor_rad = deg2rad(0.1);
    d.theta = std::clamp(d.theta, floor_rad, pi - floor_rad);
    return d;
}

/// Per-waypoint MSE of both estimators along the fly-over for each radius.
/// The noise floor is anchored at the configured reference range, so closer
/// passes enjoy the full 1/r^2 gain advantage.
inline std::vector<MseRecord> experiment_uav_path(const ExperimentConfig& cfg) {
    cfg.validate();
    const ArrayGeometry geom = cfg.geometry();
    const double noise = reference_noise_power(cfg, cfg.transmit_power_w(), cfg.snr_db);
    const int waypoints = static_cast<int>(std::lround(180.0 / cfg.waypoint_step_deg)) + 1;

    std::vector<MseRecord> records;
    std::uint64_t scenario = 0;
    for (double radius : cfg.radii_m)
        for (int w = 0; w < waypoints; ++w)
            for (const std::string method : {"fixed", "rr"}) {
                PatternParams pattern = cfg.pattern();
                pattern.range = radius;
                const double t_deg = w * cfg.waypoint_step_deg;
                const Direction truth = uav_waypoint_direction(deg2rad(t_deg));

                SourceParams source;
                source.transmit_power = cfg.transmit_power_w();
                source.noise_power = noise;
                source.snapshots = cfg.snapshots;

                RunOptions opts;
                opts.epsilon = deg2rad(cfg.epsilon_deg);
                opts.max_iterations = cfg.max_iterations;

                const bool rotating = method == "rr";
                const std::uint64_t scenario_seed = child_seed(cfg.master_seed, scenario++);
                const auto errors =
                    detail::parallel_map<std::optional<std::pair<double, double>>>(
                        cfg.trials, cfg.effective_workers(),
                        [&](int trial) -> std::optional<std::pair<double, double>> {
                            SourceParams draw = source;
                            draw.seed =
                                child_seed(scenario_seed, static_cast<std::uint64_t>(trial));
                            if (rotating) {
                                try {
                                    const RunResult out = run(truth, geom, pattern, draw, opts);
                                    return detail::squared_errors(out.theta_final, out.phi_final,
                                                                  truth);
                                } catch (const EstimationError&) {
                                    return std::nullopt;
                                }
                            }
                            const auto est = detail::fixed_trial(geom, pattern, truth,
                                                                 identity_orientation(), draw, 5);
                            if (!est) return std::nullopt;
                            return detail::squared_errors(est->theta_hat, est->phi_hat, truth);
                        });

                MseRecord rec;
                rec.experiment = "uav_path";
                rec.method = method;
                rec.theta_deg = rad2deg(truth.theta);
                rec.phi_deg = rad2deg(truth.phi);
                rec.radius_m = radius;
                rec.waypoint = w;
                rec.p = cfg.p;
                rec.snr_db = cfg.snr_db + 20.0 * std::log10(cfg.range / radius);
                double sum_t = 0.0, sum_p = 0.0;
                int valid = 0;
                for (const auto& e : errors)
                    if (e) {
                        sum_t += e->first;
                        sum_p += e->second;
                        ++valid;
                    }
                rec.trials_valid = valid;
                if (valid > 0) {
                    rec.mse_theta_deg2 = sum_t / valid;
                    rec.mse_phi_deg2 = sum_p / valid;
                }
                rec.degenerate = valid * 2 < cfg.trials;
                detail::attach_crlb(rec, geom, pattern, source, truth,
                                    detail::aligned_orientation(truth), !rotating);
                records.push_back(rec);
            }
    return records;
}

/// Single fixed-orientation estimates over a boresight-deflection grid for
/// each directivity factor. The noise floor is anchored to the isotropic
/// (p = 0) boresight gain so every curve shares the same physical noise.
inline std::vector<MseRecord> experiment_deflection_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const ArrayGeometry geom = cfg.geometry();
    const double noise = reference_noise_power(cfg, cfg.transmit_power_w(), cfg.snr_db);

    std::vector<MseRecord> records;
    std::uint64_t scenario = 0;
    for (double p : cfg.p_grid)
        for (double varphi_deg : cfg.varphi_grid_deg) {
            PatternParams pattern = cfg.pattern();
            pattern.p = p;
            // theta = 90 deg puts the deflection entirely in azimuth
            const Direction truth{pi / 2, deg2rad(90.0 - varphi_deg)};
            SourceParams source;
            source.transmit_power = cfg.transmit_power_w();
            source.noise_power = noise;
            source.snapshots = cfg.snapshots;

            const std::uint64_t scenario_seed = child_seed(cfg.master_seed, scenario++);
            const auto errors = detail::parallel_map<std::optional<std::pair<double, double>>>(
                cfg.trials, cfg.effective_workers(),
                [&](int trial) -> std::optional<std::pair<double, double>> {
                    SourceParams draw = source;
                    draw.seed = child_seed(scenario_seed, static_cast<std::uint64_t>(trial));
                    const auto est = detail::fixed_trial(geom, pattern, truth,
                                                         identity_orientation(), draw, 5);
                    if (!est) return std::nullopt;
                    return detail::squared_errors(est->theta_hat, est->phi_hat, truth);
                });

            MseRecord rec;
            rec.experiment = "deflection_sweep";
            rec.method = "fixed";
            rec.theta_deg = rad2deg(truth.theta);
            rec.phi_deg = rad2deg(truth.phi);
            rec.varphi_deg = varphi_deg;
            rec.p = p;
            rec.snr_db = cfg.snr_db;
            double sum_t = 0.0, sum_p = 0.0;
            int valid = 0;
            for (const auto& e : errors)
                if (e) {
                    sum_t += e->first;
                    sum_p += e->second;
                    ++valid;
                }
            rec.trials_valid = valid;
            if (valid > 0) {
                rec.mse_theta_deg2 = sum_t / valid;
                rec.mse_phi_deg2 = sum_p / valid;
            }
            rec.degenerate = valid * 2 < cfg.trials;
            detail::attach_crlb(rec, geom, pattern, source, truth, identity_orientation(), true);
            records.push_back(rec);
        }
    return records;
}

// ---------------------------------------------------------------------------
// Emission

namespace detail {

inline std::string csv_number(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

}  // namespace detail

/// CSV with a leading comment block holding the resolved configuration, so
/// every artifact is self-describing. All MSE/CRLB columns are deg^2.
inline std::string records_to_csv(const std::string& experiment, const ExperimentConfig& cfg,
                                  const std::vector<MseRecord>& records) {
    std::string out;
    out += "# experiment: " + experiment + "\n";
    out += "# units: deg2\n";
    out += "# config: " + cfg.to_json().dump() + "\n";
    out += "experiment,method,theta_deg,phi_deg,snr_db,power_dbm,p,varphi_deg,radius_m,"
           "waypoint,iteration,mse_theta_deg2,mse_phi_deg2,crlb_theta_deg2,crlb_phi_deg2,"
           "trials_valid,median_rotations,degenerate\n";
    for (const MseRecord& r : records) {
        out += r.experiment + "," + r.method + ",";
        out += detail::csv_number(r.theta_deg) + "," + detail::csv_number(r.phi_deg) + ",";
        out += detail::csv_number(r.snr_db) + "," + detail::csv_number(r.power_dbm) + ",";
        out += detail::csv_number(r.p) + "," + detail::csv_number(r.varphi_deg) + ",";
        out += detail::csv_number(r.radius_m) + ",";
        out += (r.waypoint >= 0 ? std::to_string(r.waypoint) : "") + ",";
        out += (r.iteration >= 0 ? std::to_string(r.iteration) : "") + ",";
        out += detail::csv_number(r.mse_theta_deg2) + "," + detail::csv_number(r.mse_phi_deg2) +
               ",";
        out += detail::csv_number(r.crlb_theta_deg2) + "," + detail::csv_number(r.crlb_phi_deg2) +
               ",";
        out += std::to_string(r.trials_valid) + ",";
        out += detail::csv_number(r.median_rotations) + ",";
        out += std::string(r.degenerate ? "1" : "0") + "\n";
    }
    return out;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

inline void write_manifest(const std::string& path, const std::string& experiment,
                           const ExperimentConfig& cfg, double wall_seconds) {
    nlohmann::json manifest{{"experiment", experiment},
                            {"config", cfg.to_json()},
                            {"master_seed", cfg.master_seed},
                            {"units", "deg2"},
                            {"version", "0.1.0"},
                            {"wall_time_s", wall_seconds}};
    write_file(path, manifest.dump(2) + "\n");
}

/// Run one experiment family by name and drop CSV + manifest into out_dir.
inline std::vector<MseRecord> run_experiment(const std::string& name, const ExperimentConfig& cfg,
                                             const std::string& out_dir) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<MseRecord> records;
    if (name == "convergence")
        records = experiment_convergence(cfg);
    else if (name == "theta-sweep")
        records = experiment_theta_sweep(cfg);
    else if (name == "uav-path")
        records = experiment_uav_path(cfg);
    else if (name == "deflection-sweep")
        records = experiment_deflection_sweep(cfg);
    else
        throw std::invalid_argument("unknown experiment \"" + name + "\"");
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const std::string stem = out_dir + "/" + name;
    write_file(stem + ".csv", records_to_csv(name, cfg, records));
    write_manifest(stem + "_manifest.json", name, cfg, wall);
    return records;
}

}  // namespace rra

#endif  // RRA_HARNESS_HPP
