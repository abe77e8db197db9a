#ifndef RRA_GEOMETRY_HPP
#define RRA_GEOMETRY_HPP

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <stdexcept>

// Coordinate backbone: element placement on the x-z plane, emitter
// direction vectors, two-axis rotation matrices and the boresight
// deflection angle of a rotatable uniform planar array.

namespace rra {

inline constexpr double pi = std::numbers::pi;

inline double deg2rad(double d) { return d * pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / pi; }

/// Clamp to [-1, 1] before acos/asin; round-off can push arguments past 1.
inline double clamp_unit(double x) { return x < -1.0 ? -1.0 : (x > 1.0 ? 1.0 : x); }

/// M x N element grid on the x-z plane, geometric center at the origin.
/// n indexes the x axis (N = n_x elements), m indexes the z axis (M = n_z).
struct ArrayGeometry {
    int n_x = 6;
    int n_z = 6;
    double d_x = 0.0625;
    double d_z = 0.0625;
    double wavelength = 0.125;

    int elements() const { return n_x * n_z; }

    void validate() const {
        if (n_x < 1 || n_z < 1)
            throw std::invalid_argument("ArrayGeometry: need at least one element per axis");
        if (d_x <= 0.0 || d_z <= 0.0 || wavelength <= 0.0)
            throw std::invalid_argument("ArrayGeometry: spacings and wavelength must be positive");
    }

    double x_coord(int n) const { return (n - (n_x - 1) / 2.0) * d_x; }
    double z_coord(int m) const { return (m - (n_z - 1) / 2.0) * d_z; }

    /// Sum of squared x coordinates, N(N^2-1)/12 * d_x^2 in closed form.
    double moment_x() const {
        double nn = n_x;
        return nn * (nn * nn - 1.0) / 12.0 * d_x * d_x;
    }
    /// Sum of squared z coordinates.
    double moment_z() const {
        double mm = n_z;
        return mm * (mm * mm - 1.0) / 12.0 * d_z * d_z;
    }

    double wavenumber() const { return 2.0 * pi / wavelength; }
};

/// Emitter direction: polar angle theta from the +z axis in (0, pi),
/// azimuth phi from the +x axis in [0, 2*pi).
struct Direction {
    double theta = pi / 2;
    double phi = pi / 2;

    void validate() const {
        if (!(theta > 0.0 && theta < pi))
            throw std::invalid_argument("Direction: theta must lie in (0, pi)");
        if (!(phi >= 0.0 && phi < 2.0 * pi))
            throw std::invalid_argument("Direction: phi must lie in [0, 2*pi)");
    }
};

/// Position of element (m, n) in the array frame, meters.
inline Eigen::Vector3d element_position(const ArrayGeometry& geom, int m, int n) {
    if (n < 0 || n >= geom.n_x || m < 0 || m >= geom.n_z)
        throw std::out_of_range("element_position: element index out of range");
    return {geom.x_coord(n), 0.0, geom.z_coord(m)};
}

/// Unit vector pointing from the array center toward the emitter.
inline Eigen::Vector3d unit_vector(const Direction& dir) {
    return {std::sin(dir.theta) * std::cos(dir.phi),
            std::sin(dir.theta) * std::sin(dir.phi),
            std::cos(dir.theta)};
}

/// Accumulated rotation of the array frame. Canonical orientations are a
/// z-rotation by delta_phi composed with an x-rotation by delta_theta;
/// orientations produced by compose() carry only the matrix.
struct Orientation {
    double delta_theta = 0.0;
    double delta_phi = 0.0;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    bool canonical = true;
};

/// R_z(delta_phi) * R_x(delta_theta).
inline Orientation rotation_matrix(double delta_theta, double delta_phi) {
    const double ct = std::cos(delta_theta), st = std::sin(delta_theta);
    const double cp = std::cos(delta_phi), sp = std::sin(delta_phi);
    Eigen::Matrix3d rz, rx;
    rz << cp,  sp, 0.0,
         -sp,  cp, 0.0,
          0.0, 0.0, 1.0;
    rx << 1.0, 0.0, 0.0,
          0.0,  ct, -st,
          0.0,  st,  ct;
    return Orientation{delta_theta, delta_phi, rz * rx, true};
}

inline Orientation identity_orientation() { return Orientation{}; }

/// Apply a further rotation step (expressed in the current frame) to an
/// accumulated orientation. Directions transform through R^H, so the
/// step multiplies on the right.
inline Orientation compose(const Orientation& current, const Orientation& step) {
    Orientation out;
    out.rotation = current.rotation * step.rotation;
    out.delta_theta = 0.0;
    out.delta_phi = 0.0;
    out.canonical = false;
    return out;
}

/// Emitter direction expressed in the rotated array frame: R^H * v.
inline Eigen::Vector3d rotate_direction(const Direction& dir, const Orientation& orient) {
    return orient.rotation.transpose() * unit_vector(dir);
}

/// Undo rotate_direction: (R^H)^-1 * v = R * v.
inline Eigen::Vector3d restore_direction(const Eigen::Vector3d& est_dir_rotated,
                                         const Orientation& orient) {
    return orient.rotation * est_dir_rotated;
}

/// World-frame angles of a unit direction vector.
inline Direction angles_from_vector(const Eigen::Vector3d& v) {
    Direction d;
    d.theta = std::acos(clamp_unit(v.z()));
    d.phi = std::atan2(v.y(), v.x());
    if (d.phi < 0.0) d.phi += 2.0 * pi;
    return d;
}

/// Boresight deflection angle: angle between the emitter direction and the
/// rotated array normal (+y of the rotated frame). For canonical
/// orientations this is arccos(sin th cos dth sin(ph + dph) + cos th sin dth);
/// with no rotation it reduces to arccos(sin th sin ph).
inline double deflection_angle(const Direction& dir, const Orientation& orient) {
    return std::acos(clamp_unit(rotate_direction(dir, orient).y()));
}

/// Plane-wave phase at element (m, n): (2*pi/lambda) <p_mn, u> with the
/// emitter direction u taken in the rotated frame. The y component of the
/// element position is zero, so only the x and z terms survive.
inline double phase_term(const ArrayGeometry& geom, int m, int n,
                         const Direction& dir, const Orientation& orient) {
    const Eigen::Vector3d u = rotate_direction(dir, orient);
    const Eigen::Vector3d p = element_position(geom, m, n);
    return geom.wavenumber() * (p.x() * u.x() + p.z() * u.z());
}

}  // namespace rra

#endif  // RRA_GEOMETRY_HPP
