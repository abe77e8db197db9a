#ifndef RRA_SIGNAL_HPP
#define RRA_SIGNAL_HPP

#include "rra/geometry.hpp"
#include "rra/pattern.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>

// Snapshot synthesis for a single narrowband emitter received by the
// (possibly rotated) directive array, with circular complex AWGN.

namespace rra {

using cplx = std::complex<double>;

struct SourceParams {
    double transmit_power = 0.1;    ///< watts, E{|s|^2}
    double noise_power = 1e-13;     ///< watts per complex sample
    int snapshots = 100;            ///< K
    std::uint64_t seed = 1;

    void validate() const {
        if (transmit_power <= 0.0 || noise_power <= 0.0)
            throw std::invalid_argument("SourceParams: powers must be positive");
        if (snapshots < 1)
            throw std::invalid_argument("SourceParams: need at least one snapshot");
    }
};

/// splitmix64 step; used both as a standalone generator and to derive
/// order-independent child seeds for Monte Carlo trials.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t child_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t s = master ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    splitmix64(s);
    return splitmix64(s);
}

/// Small deterministic RNG with explicit Box-Muller normals, so streams are
/// bit-reproducible regardless of the standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(splitmix64(state_) >> 11) * 0x1.0p-53;
    }

    /// Standard circular complex normal, unit variance per complex sample.
    cplx complex_normal() {
        double u1 = uniform();
        while (u1 == 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-std::log(u1));  // var 1/2 per component
        return {r * std::cos(2.0 * pi * u2), r * std::sin(2.0 * pi * u2)};
    }

private:
    std::uint64_t state_;
};

/// Array response for the rotated frame: entry (m*N + n) is
/// exp(j * phase_term(m, n)), i.e. the flattening a_z kron a_x.
inline Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, const Direction& dir,
                                        const Orientation& orient) {
    const Eigen::Vector3d u = rotate_direction(dir, orient);
    const double k = geom.wavenumber();
    Eigen::VectorXcd a(geom.elements());
    for (int m = 0; m < geom.n_z; ++m) {
        const cplx fz = std::polar(1.0, k * geom.z_coord(m) * u.z());
        for (int n = 0; n < geom.n_x; ++n)
            a(m * geom.n_x + n) = fz * std::polar(1.0, k * geom.x_coord(n) * u.x());
    }
    return a;
}

/// K complex baseband snapshots plus the ground truth they were drawn from.
struct SnapshotBlock {
    Eigen::MatrixXcd data;   ///< (M*N) x K
    ArrayGeometry geom;
    Orientation orient;
    Direction truth;
    SourceParams source;
    double gain = 0.0;        ///< channel amplitude used for synthesis
    double deflection = 0.0;  ///< boresight deflection angle, radians
    bool back_hemisphere = false;
};

/// Draw a snapshot block: column k is s_k * g * a + n_k with a
/// constant-modulus random-phase source, |s_k|^2 = P_t.
inline SnapshotBlock synthesize(const ArrayGeometry& geom, const PatternParams& pattern,
                                const Direction& dir, const Orientation& orient,
                                const SourceParams& source) {
    geom.validate();
    pattern.validate();
    dir.validate();
    source.validate();

    SnapshotBlock block;
    block.geom = geom;
    block.orient = orient;
    block.truth = dir;
    block.source = source;
    block.deflection = deflection_angle(dir, orient);
    block.gain = directive_gain(pattern, block.deflection);
    block.back_hemisphere = block.gain == 0.0;

    const Eigen::VectorXcd a = steering_vector(geom, dir, orient);
    const double amp = std::sqrt(source.transmit_power) * block.gain;
    const double noise_scale = std::sqrt(source.noise_power);

    Rng rng(source.seed);
    block.data.resize(geom.elements(), source.snapshots);
    for (int k = 0; k < source.snapshots; ++k) {
        const cplx s = amp * std::polar(1.0, 2.0 * pi * rng.uniform());
        for (int e = 0; e < geom.elements(); ++e)
            block.data(e, k) = s * a(e) + noise_scale * rng.complex_normal();
    }
    return block;
}

}  // namespace rra

#endif  // RRA_SIGNAL_HPP
