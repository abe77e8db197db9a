#ifndef RRA_CRLB_HPP
#define RRA_CRLB_HPP

#include "rra/geometry.hpp"
#include "rra/pattern.hpp"
#include "rra/signal.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

// Closed-form Cramer-Rao lower bounds for the two DOA angles of the rotated
// directive array, the Fisher information entries behind them, and a
// finite-difference oracle used to validate the long closed forms.
//
// The published closed forms this module is based on carry a typo in the
// determinant identity: P1*R1 - Q1^2 equals M*N*S_m*S_n*sin^2(theta)*alpha^2
// (not ... * without the alpha^2 factor). The formulas below use the corrected
// identity; all code paths agree with direct inversion of the numeric Fisher
// matrix to high precision (see the oracle tests).

namespace rra {

enum class CrlbRegime { rotated_general, initial_orientation, boresight_aligned };

struct FimEntries {
    double P = 0.0;       ///< theta-theta entry before the gamma scale
    double Q = 0.0;       ///< theta-phi entry
    double R = 0.0;       ///< phi-phi entry
    double gamma = 0.0;   ///< 2 K P_t / sigma^2
    double d1 = 0.0;      ///< (2 pi / lambda)^2
    double d2 = 0.0;      ///< M N p^2
    double d3 = 0.0;      ///< d1 M N S_m S_n
    double d4 = 0.0;      ///< d1 g0^2
    double S_n = 0.0;     ///< sum of squared x coordinates
    double S_m = 0.0;     ///< sum of squared z coordinates
    double alpha = 0.0;   ///< cos of the boresight deflection
    double beta1 = 0.0;   ///< d alpha / d theta
    double beta2 = 0.0;   ///< d alpha / d phi
    double gain = 0.0;    ///< channel amplitude g0 alpha^p
};

struct CrlbReport {
    double var_theta_lb = 0.0;  ///< rad^2
    double var_phi_lb = 0.0;    ///< rad^2
    FimEntries fim;
    CrlbRegime regime = CrlbRegime::rotated_general;
};

inline double received_snr_scale(const SourceParams& source) {
    return 2.0 * source.snapshots * source.transmit_power / source.noise_power;
}

/// P, Q, R of the single-snapshot Fisher structure for a canonical
/// orientation, in the expanded closed form.
inline FimEntries fim_entries(const ArrayGeometry& geom, const PatternParams& pattern,
                              const SourceParams& source, const Direction& dir,
                              const Orientation& orient) {
    geom.validate();
    pattern.validate();
    source.validate();
    dir.validate();

    const AlphaBeta ab = gain_alpha_beta(dir, orient);
    if (ab.alpha <= 0.0)
        throw std::invalid_argument("fim_entries: emitter outside pattern support");

    FimEntries f;
    f.alpha = ab.alpha;
    f.beta1 = ab.beta1;
    f.beta2 = ab.beta2;
    f.S_n = geom.moment_x();
    f.S_m = geom.moment_z();
    f.gamma = received_snr_scale(source);

    const double mn = static_cast<double>(geom.elements());
    const double msn = geom.n_z * f.S_n;  // each x term is summed over all rows
    const double nsm = geom.n_x * f.S_m;

    f.d1 = geom.wavenumber() * geom.wavenumber();
    f.d2 = mn * pattern.p * pattern.p;
    f.d3 = f.d1 * mn * f.S_m * f.S_n;
    f.d4 = f.d1 * pattern.g0() * pattern.g0();

    const GainDerivatives gd = gain_derivatives(pattern, dir, orient);
    // g0 * alpha^p directly; going through acos/cos would shave ~8 digits
    // off the gain for grazing directions
    f.gain = pattern.g0() * std::pow(ab.alpha, pattern.p);

    const double st = std::sin(dir.theta), ct = std::cos(dir.theta);
    const double sdt = std::sin(orient.delta_theta), cdt = std::cos(orient.delta_theta);
    const double phip = dir.phi + orient.delta_phi;
    const double sp = std::sin(phip), cp = std::cos(phip);
    const double g2 = f.gain * f.gain;

    // Sensitivities of the two phase direction cosines:
    //   u_x = sin th cos ph',  u_z = cos th cos dt - sin th sin dt sin ph'.
    const double duz_dth = st * cdt + ct * sdt * sp;  // sign absorbed by squaring
    f.P = mn * gd.dg_dtheta * gd.dg_dtheta +
          f.d1 * g2 * (ct * ct * cp * cp * msn + duz_dth * duz_dth * nsm);
    f.Q = mn * gd.dg_dtheta * gd.dg_dphi +
          f.d1 * g2 *
              (-st * ct * cp * sp * (msn - nsm * sdt * sdt) + sdt * cdt * st * st * cp * nsm);
    f.R = mn * gd.dg_dphi * gd.dg_dphi +
          f.d1 * g2 * st * st * (sp * sp * msn + sdt * sdt * cp * cp * nsm);
    return f;
}

/// Same P, Q, R from central differences of the model mean g(th, ph) * a(th, ph);
/// the arbiter for the expanded closed forms.
inline FimEntries fim_numeric(const ArrayGeometry& geom, const PatternParams& pattern,
                              const SourceParams& source, const Direction& dir,
                              const Orientation& orient, double step = 1e-6) {
    const auto mean = [&](double th, double ph) -> Eigen::VectorXcd {
        const Direction d{th, ph < 0.0 ? ph + 2.0 * pi : (ph >= 2.0 * pi ? ph - 2.0 * pi : ph)};
        const double g = directive_gain(pattern, deflection_angle(d, orient));
        return g * steering_vector(geom, d, orient);
    };
    const Eigen::VectorXcd dth =
        (mean(dir.theta + step, dir.phi) - mean(dir.theta - step, dir.phi)) / (2.0 * step);
    const Eigen::VectorXcd dph =
        (mean(dir.theta, dir.phi + step) - mean(dir.theta, dir.phi - step)) / (2.0 * step);

    FimEntries f = fim_entries(geom, pattern, source, dir, orient);
    f.P = dth.dot(dth).real();
    f.Q = dth.dot(dph).real();
    f.R = dph.dot(dph).real();
    return f;
}

namespace detail {

inline CrlbReport invert_fim(const FimEntries& f, CrlbRegime regime) {
    const double det = f.P * f.R - f.Q * f.Q;
    if (!(det > 1e-12 * std::abs(f.P * f.R)) || !(det > 0.0))
        throw std::invalid_argument("crlb: unidentifiable geometry");
    CrlbReport out;
    out.fim = f;
    out.regime = regime;
    out.var_theta_lb = f.R / (f.gamma * det);
    out.var_phi_lb = f.P / (f.gamma * det);
    return out;
}

inline void check_agreement(double a, double b, const char* what) {
    if (std::abs(a - b) > 1e-9 * std::max(std::abs(a), std::abs(b)))
        throw std::logic_error(std::string("crlb: closed form disagrees with inversion: ") + what);
}

}  // namespace detail

/// Bounds for a canonical orientation. Computes both the direct 2x2
/// inversion and the factored closed form (corrected determinant identity)
/// and insists they agree.
inline CrlbReport crlb(const ArrayGeometry& geom, const PatternParams& pattern,
                       const SourceParams& source, const Direction& dir,
                       const Orientation& orient) {
    const FimEntries f = fim_entries(geom, pattern, source, dir, orient);
    const CrlbRegime regime =
        f.alpha > 1.0 - 1e-12 ? CrlbRegime::boresight_aligned : CrlbRegime::rotated_general;
    CrlbReport out = detail::invert_fim(f, regime);

    // Factored closed form: P = g0^2 a^(2p-2) (d2/MN * MN p^2 b1^2 + ...);
    // with P1 R1 - Q1^2 = MN S_m S_n sin^2 th a^2 the determinant collapses to
    // d1 MN a^2 [p^2 G + d1 S_m S_n sin^2 th a^4] times the common gain power.
    const double st = std::sin(dir.theta), ct = std::cos(dir.theta);
    const double sdt = std::sin(orient.delta_theta), cdt = std::cos(orient.delta_theta);
    const double phip = dir.phi + orient.delta_phi;
    const double sp = std::sin(phip), cp = std::cos(phip);
    const double msn = geom.n_z * f.S_n, nsm = geom.n_x * f.S_m;
    const double mn = static_cast<double>(geom.elements());

    const double duz_dth = st * cdt + ct * sdt * sp;
    const double P1 = ct * ct * cp * cp * msn + duz_dth * duz_dth * nsm;
    const double Q1 =
        -st * ct * cp * sp * (msn - nsm * sdt * sdt) + sdt * cdt * st * st * cp * nsm;
    const double R1 = st * st * (sp * sp * msn + sdt * sdt * cp * cp * nsm);
    const double big_g =
        f.beta1 * f.beta1 * R1 + f.beta2 * f.beta2 * P1 - 2.0 * f.beta1 * f.beta2 * Q1;

    const double p = pattern.p;
    const double a2 = f.alpha * f.alpha;
    const double denom = f.gamma * f.d4 * std::pow(a2, p) * mn *
                         (p * p * big_g + f.d1 * f.S_m * f.S_n * st * st * a2 * a2);
    const double closed_theta = (mn * p * p * f.beta2 * f.beta2 + f.d1 * a2 * R1) / denom;
    const double closed_phi = (mn * p * p * f.beta1 * f.beta1 + f.d1 * a2 * P1) / denom;

    detail::check_agreement(out.var_theta_lb, closed_theta, "var(theta)");
    detail::check_agreement(out.var_phi_lb, closed_phi, "var(phi)");
    return out;
}

/// Bounds for the unrotated array in the explicit special-case form, where
/// cos(varphi) = sin th sin ph is the deflection cosine.
inline CrlbReport crlb_initial(const ArrayGeometry& geom, const PatternParams& pattern,
                               const SourceParams& source, const Direction& dir) {
    const FimEntries f = fim_entries(geom, pattern, source, dir, identity_orientation());
    CrlbReport out = detail::invert_fim(f, CrlbRegime::initial_orientation);

    const double st = std::sin(dir.theta), ct = std::cos(dir.theta);
    const double sp = std::sin(dir.phi), cp = std::cos(dir.phi);
    const double cvar = st * sp;
    const double cvar2 = cvar * cvar;
    const double p = pattern.p;
    const double g0 = pattern.g0();
    const double nn = geom.n_x, mm = geom.n_z;

    const double bracket = mm * p * p * f.S_n * ct * ct + nn * p * p * f.S_m * st * st * cp * cp +
                           f.d1 * f.S_m * f.S_n * cvar2 * cvar2;
    const double common = f.gamma * g0 * g0 * std::pow(cvar2, p) * f.d1 * bracket;
    const double init_theta =
        (nn * p * p * cp * cp + f.d1 * f.S_n * cvar2 * sp * sp) / (common * nn);
    const double init_phi =
        (mm * nn * p * p * sp * sp * ct * ct +
         f.d1 * cvar2 * (mm * f.S_n * ct * ct * cp * cp + nn * f.S_m * st * st)) /
        (common * mm * nn * st * st);

    detail::check_agreement(out.var_theta_lb, init_theta, "initial var(theta)");
    detail::check_agreement(out.var_phi_lb, init_phi, "initial var(phi)");
    return out;
}

struct CrlbSweepRow {
    double theta = 0.0;        ///< radians
    double phi = 0.0;          ///< radians
    double delta_theta = 0.0;  ///< radians
    double delta_phi = 0.0;    ///< radians
    double p = 0.0;
    double snr_db = 0.0;       ///< per-element boresight receive SNR
    bool valid = false;
    std::string error;
    CrlbReport report;
};

/// Noise power giving the requested per-element boresight receive SNR
/// (P_t g0^2 / sigma^2 in dB) for this pattern.
inline double noise_power_for_snr(const PatternParams& pattern, double transmit_power,
                                  double snr_db) {
    const double g0 = pattern.g0();
    return transmit_power * g0 * g0 / std::pow(10.0, snr_db / 10.0);
}

/// Cartesian product evaluation; failures become rows with an error string.
inline std::vector<CrlbSweepRow> crlb_sweep(
    const ArrayGeometry& geom, const PatternParams& pattern_base, const SourceParams& source_base,
    const std::vector<double>& thetas, const std::vector<double>& phis,
    const std::vector<double>& delta_thetas, const std::vector<double>& delta_phis,
    const std::vector<double>& ps, const std::vector<double>& snrs_db) {
    std::vector<CrlbSweepRow> rows;
    for (double p : ps)
        for (double snr : snrs_db)
            for (double dt : delta_thetas)
                for (double dp : delta_phis)
                    for (double th : thetas)
                        for (double ph : phis) {
                            CrlbSweepRow row;
                            row.theta = th;
                            row.phi = ph;
                            row.delta_theta = dt;
                            row.delta_phi = dp;
                            row.p = p;
                            row.snr_db = snr;
                            PatternParams pattern = pattern_base;
                            pattern.p = p;
                            SourceParams source = source_base;
                            source.noise_power =
                                noise_power_for_snr(pattern, source.transmit_power, snr);
                            try {
                                row.report = crlb(geom, pattern, source, Direction{th, ph},
                                                  rotation_matrix(dt, dp));
                                row.valid = true;
                            } catch (const std::exception& e) {
                                row.error = e.what();
                            }
                            rows.push_back(row);
                        }
    return rows;
}

}  // namespace rra

#endif  // RRA_CRLB_HPP
