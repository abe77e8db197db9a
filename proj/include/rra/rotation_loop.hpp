#ifndef RRA_ROTATION_LOOP_HPP
#define RRA_ROTATION_LOOP_HPP

#include "rra/estimator.hpp"
#include "rra/geometry.hpp"
#include "rra/pattern.hpp"
#include "rra/signal.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

// Recursive-rotation controller: estimate the DOA, rotate the array
// boresight toward the estimate, re-estimate in the rotated frame, restore
// to world coordinates, and stop once successive world estimates agree
// within a small angular threshold in both angles.

namespace rra {

struct IterationRecord {
    int index = 0;
    Orientation orientation;        ///< cumulative frame the block was observed in
    double theta_frame = 0.0;       ///< estimate in the rotated frame, radians
    double phi_frame = 0.0;
    double theta_world = 0.0;       ///< estimate restored to world coordinates
    double phi_world = 0.0;
    double deflection = 0.0;        ///< boresight deflection during this block
    double per_element_snr = 0.0;   ///< dB; -inf when the emitter is behind the array
};

struct RunResult {
    std::vector<IterationRecord> history;
    bool converged = false;
    bool started_blind = false;     ///< first block saw the emitter behind the array
    double theta_final = 0.0;
    double phi_final = 0.0;
    int iterations_used = 0;

    /// Physical rotations performed before settling (estimates minus one).
    int rotations() const { return iterations_used > 0 ? iterations_used - 1 : 0; }
};

struct RunOptions {
    double epsilon = deg2rad(0.01);  ///< stopping threshold per angle
    int max_iterations = 50;
    int retries_per_iteration = 5;   ///< fresh-noise retries after estimator errors
    RefinementOptions refine;
};

/// Frame rotation that would put the current estimate on boresight.
inline std::pair<double, double> rotation_update(double theta_hat, double phi_hat) {
    return {pi / 2 - theta_hat, pi / 2 - phi_hat};
}

namespace detail {

inline double wrap_phi_gap(double a, double b) {
    double d = std::abs(a - b);
    return std::min(d, 2.0 * pi - d);
}

}  // namespace detail

inline RunResult run(const Direction& truth, const ArrayGeometry& geom,
                     const PatternParams& pattern, const SourceParams& source,
                     const RunOptions& opts = {}) {
    truth.validate();
    if (opts.max_iterations < 1 || opts.retries_per_iteration < 1 || opts.epsilon <= 0.0)
        throw std::invalid_argument("run: bad loop options");

    RunResult result;
    Orientation orient = identity_orientation();
    std::optional<IterationRecord> prev;

    for (int i = 0; i < opts.max_iterations; ++i) {
        const std::uint64_t iter_seed = child_seed(source.seed, static_cast<std::uint64_t>(i));

        std::optional<DoaEstimate> est;
        SnapshotBlock block;
        std::string last_error;
        for (int attempt = 0; attempt < opts.retries_per_iteration && !est; ++attempt) {
            SourceParams draw = source;
            draw.seed = child_seed(iter_seed, static_cast<std::uint64_t>(attempt));
            block = synthesize(geom, pattern, truth, orient, draw);
            try {
                est = estimate(block, opts.refine);
            } catch (const EstimationError& e) {
                last_error = e.what();
            }
        }
        if (!est)
            throw EstimationError("rotation loop: estimator failed " +
                                  std::to_string(opts.retries_per_iteration) +
                                  " times at iteration " + std::to_string(i) + ": " + last_error);

        if (i == 0) result.started_blind = block.back_hemisphere;

        IterationRecord rec;
        rec.index = i;
        rec.orientation = orient;
        rec.theta_frame = est->theta_hat;
        rec.phi_frame = est->phi_hat;
        rec.deflection = block.deflection;
        rec.per_element_snr =
            block.gain > 0.0 ? 10.0 * std::log10(source.transmit_power * block.gain * block.gain /
                                                 source.noise_power)
                             : -std::numeric_limits<double>::infinity();

        const Direction world = angles_from_vector(
            restore_direction(unit_vector(Direction{est->theta_hat, est->phi_hat}), orient));
        rec.theta_world = world.theta;
        rec.phi_world = world.phi;
        result.history.push_back(rec);

        if (prev && std::abs(rec.theta_world - prev->theta_world) <= opts.epsilon &&
            detail::wrap_phi_gap(rec.phi_world, prev->phi_world) <= opts.epsilon) {
            result.converged = true;
            break;
        }
        prev = rec;

        const auto [dt, dp] = rotation_update(est->theta_hat, est->phi_hat);
        orient = compose(orient, rotation_matrix(dt, dp));
    }

    result.iterations_used = static_cast<int>(result.history.size());
    result.theta_final = result.history.back().theta_world;
    result.phi_final = result.history.back().phi_world;
    return result;
}

}  // namespace rra

#endif  // RRA_ROTATION_LOOP_HPP
