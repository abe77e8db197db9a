#ifndef RRA_PATTERN_HPP
#define RRA_PATTERN_HPP

#include "rra/geometry.hpp"

#include <cmath>
#include <stdexcept>

// Directive element pattern cos^p over the front hemisphere, the
// emitter-to-array channel gain and its analytic angle derivatives.

namespace rra {

struct PatternParams {
    double p = 1.0;              ///< directivity factor, >= 0
    double aperture_area = 6 * 0.0625 * 6 * 0.0625;  ///< panel extent, m^2
    double range = 250.0;        ///< emitter distance, m

    void validate() const {
        if (p < 0.0) throw std::invalid_argument("PatternParams: p must be nonnegative");
        if (aperture_area <= 0.0 || range <= 0.0)
            throw std::invalid_argument("PatternParams: aperture_area and range must be positive");
    }

    /// Maximum directive gain 2(2p+1), normalized so the hemisphere
    /// integral of G^2 equals 4*pi.
    double max_gain() const { return 2.0 * (2.0 * p + 1.0); }

    /// Boresight channel amplitude sqrt(A/(4 pi r^2) * G0).
    double g0() const { return std::sqrt(aperture_area / (4.0 * pi * range * range) * max_gain()); }
};

/// Channel amplitude gain g0 * cos^p(varphi), zero behind the array.
inline double directive_gain(const PatternParams& params, double varphi) {
    const double c = std::cos(varphi);
    if (std::abs(varphi) >= pi / 2 || c <= 0.0) return 0.0;
    return params.g0() * std::pow(c, params.p);
}

struct AlphaBeta {
    double alpha;   ///< cos of the deflection angle
    double beta1;   ///< d alpha / d theta
    double beta2;   ///< d alpha / d phi
};

/// alpha, beta1, beta2 for a canonical orientation. alpha equals
/// cos(deflection_angle) on all inputs.
inline AlphaBeta gain_alpha_beta(const Direction& dir, const Orientation& orient) {
    if (!orient.canonical)
        throw std::invalid_argument("gain_alpha_beta: composed orientation has no canonical angles");
    const double st = std::sin(dir.theta), ct = std::cos(dir.theta);
    const double cdt = std::cos(orient.delta_theta), sdt = std::sin(orient.delta_theta);
    const double sp = std::sin(dir.phi + orient.delta_phi);
    const double cp = std::cos(dir.phi + orient.delta_phi);
    return {st * cdt * sp + ct * sdt,
            ct * cdt * sp - st * sdt,
            st * cdt * cp};
}

struct GainDerivatives {
    double dg_dtheta;
    double dg_dphi;
};

/// Analytic derivatives of the channel gain w.r.t. theta and phi:
/// g0 * p * alpha^(p-1) * (beta1, beta2).
inline GainDerivatives gain_derivatives(const PatternParams& params, const Direction& dir,
                                        const Orientation& orient) {
    if (params.p == 0.0) return {0.0, 0.0};
    const AlphaBeta ab = gain_alpha_beta(dir, orient);
    if (ab.alpha <= 0.0) {
        if (params.p != std::floor(params.p))
            throw std::domain_error(
                "gain_derivatives: emitter outside the pattern's differentiable support");
        return {0.0, 0.0};  // gain identically zero behind the array
    }
    const double common = params.g0() * params.p * std::pow(ab.alpha, params.p - 1.0);
    return {common * ab.beta1, common * ab.beta2};
}

}  // namespace rra

#endif  // RRA_PATTERN_HPP
