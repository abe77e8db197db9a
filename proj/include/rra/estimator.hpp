#ifndef RRA_ESTIMATOR_HPP
#define RRA_ESTIMATOR_HPP

#include "rra/geometry.hpp"
#include "rra/signal.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

// Single-shot two-angle DOA estimation: sample covariance, subspace split,
// per-axis polynomial rooting and MUSIC-spectrum refinement. All angles are
// expressed in the frame the snapshots were observed in.

namespace rra {

class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SubspaceDecomposition {
    Eigen::MatrixXcd covariance;
    Eigen::VectorXcd signal_basis;   ///< eigenvector of the largest eigenvalue
    Eigen::MatrixXcd noise_basis;    ///< remaining MN-1 eigenvectors
    Eigen::VectorXd eigenvalues;     ///< descending
};

struct DoaCandidate {
    double theta;
    double phi;
    double spectrum;
};

struct DoaEstimate {
    double theta_hat = 0.0;
    double phi_hat = 0.0;
    double spectrum_value = 0.0;
    std::vector<DoaCandidate> candidates;
};

struct RefinementOptions {
    double half_window = deg2rad(0.5);
    double step = deg2rad(0.01);
    /// second-stage resolution; keeps grid quantization well below the
    /// estimator noise floor at high SNR
    double fine_step = deg2rad(0.0005);
};

inline Eigen::MatrixXcd sample_covariance(const SnapshotBlock& block) {
    if (block.data.cols() < 1 || block.data.rows() < 1)
        throw std::invalid_argument("sample_covariance: empty snapshot block");
    const double k = static_cast<double>(block.data.cols());
    Eigen::MatrixXcd cov = block.data * block.data.adjoint() / k;
    return (cov + cov.adjoint()) / 2.0;  // exact Hermitian symmetrization
}

inline SubspaceDecomposition eigendecompose(const Eigen::MatrixXcd& cov) {
    const double scale = cov.norm();
    if (scale > 0.0 && (cov - cov.adjoint()).norm() > 1e-10 * scale)
        throw std::invalid_argument("eigendecompose: input is not Hermitian");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(cov);
    if (solver.info() != Eigen::Success)
        throw EstimationError("eigendecompose: eigensolver failed to converge");

    const int dim = static_cast<int>(cov.rows());
    SubspaceDecomposition out;
    out.covariance = cov;
    out.eigenvalues.resize(dim);
    Eigen::MatrixXcd basis(dim, dim);
    for (int i = 0; i < dim; ++i) {  // flip to descending order
        out.eigenvalues(i) = solver.eigenvalues()(dim - 1 - i);
        basis.col(i) = solver.eigenvectors().col(dim - 1 - i);
    }
    out.signal_basis = basis.col(0);
    out.noise_basis = basis.rightCols(dim - 1);
    return out;
}

/// MUSIC pseudo-spectrum 1 / ||U_n^H a(theta, phi)||^2 in the array frame.
inline double music_spectrum(const SubspaceDecomposition& decomp, const ArrayGeometry& geom,
                             const Direction& dir) {
    const Eigen::VectorXcd a = steering_vector(geom, dir, identity_orientation());
    const double den = (decomp.noise_basis.adjoint() * a).squaredNorm();
    return 1.0 / std::max(den, 1e-18);
}

inline Eigen::VectorXd music_spectrum(const SubspaceDecomposition& decomp,
                                      const ArrayGeometry& geom,
                                      const std::vector<Direction>& dir_grid) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(dir_grid.size()));
    for (std::size_t i = 0; i < dir_grid.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = music_spectrum(decomp, geom, dir_grid[i]);
    return out;
}

namespace detail {

/// Roots of the Laurent polynomial sum_l coeffs[l + deg - 1] z^l
/// (l = -(deg-1) .. deg-1) via the companion matrix of z^(deg-1) * p(z).
inline std::vector<cplx> laurent_roots(const Eigen::VectorXcd& coeffs) {
    int hi = static_cast<int>(coeffs.size()) - 1;
    const double scale = coeffs.cwiseAbs().maxCoeff();
    while (hi > 0 && std::abs(coeffs(hi)) < 1e-14 * scale) --hi;
    if (hi < 1) throw EstimationError("root_music: degenerate axis polynomial");

    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(hi, hi);
    for (int i = 1; i < hi; ++i) companion(i, i - 1) = 1.0;
    for (int i = 0; i < hi; ++i) companion(i, hi - 1) = -coeffs(i) / coeffs(hi);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
    if (solver.info() != Eigen::Success)
        throw EstimationError("root_music: companion eigensolver failed");

    std::vector<cplx> roots(solver.eigenvalues().data(),
                            solver.eigenvalues().data() + solver.eigenvalues().size());
    return roots;
}

/// Angle of the root closest to (and not outside) the unit circle.
inline double nearest_unit_root_angle(const std::vector<cplx>& roots) {
    double best_mod = -1.0;
    cplx best;
    for (const cplx& r : roots) {
        const double mod = std::abs(r);
        if (mod <= 1.0 + 1e-9 && mod > best_mod) {
            best_mod = mod;
            best = r;
        }
    }
    if (best_mod < 0.0) throw EstimationError("root_music: no root inside the unit circle");
    return std::arg(best);
}

/// Collapse the noise projector onto one axis: sum the (m, n) x (m', n')
/// structure over matching indices of the other axis, then read Laurent
/// coefficients off the diagonals.
inline Eigen::VectorXcd axis_polynomial(const Eigen::MatrixXcd& projector, int n_x, int n_z,
                                        bool z_axis) {
    const int dim = z_axis ? n_z : n_x;
    Eigen::MatrixXcd marg = Eigen::MatrixXcd::Zero(dim, dim);
    if (z_axis) {
        for (int m = 0; m < n_z; ++m)
            for (int mp = 0; mp < n_z; ++mp)
                for (int n = 0; n < n_x; ++n)
                    marg(m, mp) += projector(m * n_x + n, mp * n_x + n);
    } else {
        for (int n = 0; n < n_x; ++n)
            for (int np = 0; np < n_x; ++np)
                for (int m = 0; m < n_z; ++m)
                    marg(n, np) += projector(m * n_x + n, m * n_x + np);
    }
    Eigen::VectorXcd coeffs = Eigen::VectorXcd::Zero(2 * dim - 1);
    for (int l = -(dim - 1); l <= dim - 1; ++l) {
        cplx sum = 0.0;
        for (int i = std::max(0, -l); i < dim - std::max(0, l); ++i) sum += marg(i, i + l);
        coeffs(l + dim - 1) = sum;
    }
    return coeffs;
}

}  // namespace detail

/// Root-MUSIC for the rank-1 UPA model. Each axis is rooted separately from
/// the marginalized noise projector; the phi candidates from cos(phi) are
/// tie-broken toward the front hemisphere (the x-z manifold is invariant
/// under phi -> 2*pi - phi, so the spectrum cannot split them).
inline DoaEstimate root_music(const SubspaceDecomposition& decomp, const ArrayGeometry& geom) {
    if (geom.d_z > geom.wavelength / 2.0 + 1e-12)
        throw std::invalid_argument("root_music: d_z must not exceed lambda/2");

    const Eigen::MatrixXcd projector = decomp.noise_basis * decomp.noise_basis.adjoint();

    const double ang_z = detail::nearest_unit_root_angle(
        detail::laurent_roots(detail::axis_polynomial(projector, geom.n_x, geom.n_z, true)));
    const double cos_theta = ang_z / (geom.wavenumber() * geom.d_z);
    if (std::abs(cos_theta) > 1.0) throw EstimationError("root_music: elevation root out of range");
    const double theta = std::acos(cos_theta);
    if (std::sin(theta) < 1e-3)
        throw EstimationError("root_music: azimuth unobservable near pole");

    const double ang_x = detail::nearest_unit_root_angle(
        detail::laurent_roots(detail::axis_polynomial(projector, geom.n_x, geom.n_z, false)));
    const double cos_phi = ang_x / (geom.wavenumber() * geom.d_x * std::sin(theta));
    if (std::abs(cos_phi) > 1.0) throw EstimationError("root_music: azimuth root out of range");

    const double phi_front = std::acos(cos_phi);
    const double phi_mirror = 2.0 * pi - phi_front;

    DoaEstimate est;
    for (double phi : {phi_front, phi_mirror})
        est.candidates.push_back({theta, phi, music_spectrum(decomp, geom, Direction{theta, phi})});
    // The manifold depends on phi only through cos(phi), so the two
    // candidates score identically up to round-off; the directive element
    // blocks the back hemisphere, which settles the tie on the front one.
    est.theta_hat = est.candidates[0].theta;
    est.phi_hat = est.candidates[0].phi;
    est.spectrum_value = est.candidates[0].spectrum;
    return est;
}

namespace detail {

/// Fast spectrum over a separable (theta, phi) grid. Uses the unitarity of
/// the eigenbasis: ||U_n^H a||^2 = MN - |u_s^H a|^2, with the Kronecker
/// structure of a to reuse per-theta partial sums.
inline void grid_argmax(const SubspaceDecomposition& decomp, const ArrayGeometry& geom,
                        const std::vector<double>& thetas, const std::vector<double>& phis,
                        double& best_theta, double& best_phi, double& best_spectrum) {
    const double k = geom.wavenumber();
    const double mn = static_cast<double>(geom.elements());
    const Eigen::VectorXcd& u = decomp.signal_basis;
    Eigen::VectorXcd w(geom.n_x);
    best_spectrum = -1.0;
    for (double theta : thetas) {
        const double cz = std::cos(theta);
        for (int n = 0; n < geom.n_x; ++n) {
            cplx acc = 0.0;
            for (int m = 0; m < geom.n_z; ++m)
                acc += std::conj(u(m * geom.n_x + n)) * std::polar(1.0, k * geom.z_coord(m) * cz);
            w(n) = acc;
        }
        const double st = std::sin(theta);
        for (double phi : phis) {
            const double cx = st * std::cos(phi);
            cplx overlap = 0.0;
            for (int n = 0; n < geom.n_x; ++n)
                overlap += w(n) * std::polar(1.0, k * geom.x_coord(n) * cx);
            const double den = std::max(mn - std::norm(overlap), 1e-18);
            const double spec = 1.0 / den;
            if (spec > best_spectrum) {
                best_spectrum = spec;
                best_theta = theta;
                best_phi = phi;
            }
        }
    }
}

}  // namespace detail

/// Full pipeline: covariance, subspace split, per-axis rooting, then a local
/// spectrum grid search around the root solution.
namespace detail {

/// One local grid pass centered on (theta0, phi0); the center itself is on
/// the grid, so the result can only improve the spectrum.
inline void refine_pass(const SubspaceDecomposition& decomp, const ArrayGeometry& geom,
                        double half_window, double step, double& theta0, double& phi0,
                        double& spectrum) {
    std::vector<double> thetas, phis;
    const int steps = static_cast<int>(std::lround(half_window / step));
    for (int i = -steps; i <= steps; ++i) {
        const double th = theta0 + i * step;
        if (th > 0.0 && th < pi) thetas.push_back(th);
        // stay inside the front hemisphere; crossing 0 or pi would re-enter
        // through the mirror-equivalent back side
        const double ph = phi0 + i * step;
        if (ph > 0.0 && ph < pi) phis.push_back(ph);
    }
    grid_argmax(decomp, geom, thetas, phis, theta0, phi0, spectrum);
}

}  // namespace detail

inline DoaEstimate estimate(const SnapshotBlock& block, const RefinementOptions& opts = {}) {
    const SubspaceDecomposition decomp = eigendecompose(sample_covariance(block));
    DoaEstimate est = root_music(decomp, block.geom);

    detail::refine_pass(decomp, block.geom, opts.half_window, opts.step, est.theta_hat,
                        est.phi_hat, est.spectrum_value);
    if (opts.fine_step < opts.step)
        detail::refine_pass(decomp, block.geom, opts.step, opts.fine_step, est.theta_hat,
                            est.phi_hat, est.spectrum_value);
    return est;
}

}  // namespace rra

#endif  // RRA_ESTIMATOR_HPP
