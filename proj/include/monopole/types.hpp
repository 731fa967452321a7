#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <variant>

#include <Eigen/Core>

#include "monopole/error.hpp"

namespace monopole {

using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using Mat3c = Eigen::Matrix3cd;
using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;

/// Reduced Planck constant in J·s, used only at the Joule/kg boundary.
inline constexpr double hbar_si = 1.0545718e-34;

/// Point in space. Spherical and cylindrical coordinates are derived on demand;
/// on the z axis the azimuth is 0.
struct Position {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Position from_spherical(double r, double theta, double phi) {
    return {r * std::sin(theta) * std::cos(phi), r * std::sin(theta) * std::sin(phi),
            r * std::cos(theta)};
  }
  static Position from_cylindrical(double rho, double phi, double z) {
    return {rho * std::cos(phi), rho * std::sin(phi), z};
  }
  static Position from_vec(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

  Vec3 vec() const { return {x, y, z}; }
  double rho() const { return std::hypot(x, y); }
  double r() const { return std::hypot(rho(), z); }
  double theta() const { return std::atan2(rho(), z); }
  double phi() const { return (x == 0.0 && y == 0.0) ? 0.0 : std::atan2(y, x); }

  /// r + z, computed without cancellation near the negative z axis.
  double r_plus_z() const {
    const double rr = r();
    if (z >= 0.0) return rr + z;
    const double rh = rho();
    return rr - z > 0.0 ? rh * rh / (rr - z) : 0.0;
  }
  /// r - z, computed without cancellation near the positive z axis.
  double r_minus_z() const {
    const double rr = r();
    if (z <= 0.0) return rr - z;
    const double rh = rho();
    return rr + z > 0.0 ? rh * rh / (rr + z) : 0.0;
  }

  Vec3 e_r() const {
    const double t = theta(), p = phi();
    return {std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t)};
  }
  Vec3 e_theta() const {
    const double t = theta(), p = phi();
    return {std::cos(t) * std::cos(p), std::cos(t) * std::sin(p), -std::sin(t)};
  }
  Vec3 e_phi() const {
    const double p = phi();
    return {-std::sin(p), std::cos(p), 0.0};
  }
};

/// Wu-Yang cap. A covers the north (θ < π/2 + δ), B the south (θ > π/2 − δ).
enum class Patch { A, B };

inline const char* to_string(Patch p) { return p == Patch::A ? "A" : "B"; }

struct PatchGeometry {
  double overlap_half_width = pi / 12.0;

  bool contains(Patch p, double theta) const {
    return p == Patch::A ? theta < pi / 2 + overlap_half_width
                         : theta > pi / 2 - overlap_half_width;
  }
  bool in_overlap(double theta) const { return contains(Patch::A, theta) && contains(Patch::B, theta); }
};

/// Laser shaping: |Ω_p|² = ξ(r+z), |Ω_c|² = ξ[(2η−1)r − z], phases k z + gφ and k z.
struct BeamConfig {
  double xi = 1.0;     // rad²·s⁻²·m⁻¹
  int g = 1;           // optical angular momentum winding
  double eta = 1.0;    // cap deformation, ≥ 1
  double k = 0.0;      // m⁻¹
  double delta = 0.0;  // one-photon detuning, rad·s⁻¹

  void validate() const {
    if (!(xi >= 0.0) || !std::isfinite(xi)) throw DomainError("beam: xi must be finite and >= 0");
    if (!(eta >= 1.0) || !std::isfinite(eta)) throw DomainError("beam: eta must be >= 1");
    if (!std::isfinite(k) || !std::isfinite(delta)) throw DomainError("beam: k and delta must be finite");
  }
};

/// ħ = 1 throughout: mass is carried as M/ħ and energies as angular frequencies.
struct AtomConfig {
  double mass_over_hbar = 1.0;  // s·m⁻²
  double energy_scale = 0.0;    // rad·s⁻¹

  static AtomConfig from_si(double mass_kg, double energy_joule) {
    return {mass_kg / hbar_si, energy_joule / hbar_si};
  }
  void validate() const {
    if (!(mass_over_hbar > 0.0)) throw DomainError("atom: mass must be > 0");
    if (!(energy_scale >= 0.0)) throw DomainError("atom: energy scale must be >= 0");
  }
};

struct NoTrap {};

/// Spherically symmetric trap; the callable returns V(r) in rad·s⁻¹.
struct SphericalTrap {
  std::function<double(double)> potential;
};

/// V = ½ M ω_z² (z − z0)² + ½ M ω² ρ².
struct HarmonicTrap {
  double omega = 1.0;
  double omega_z = 1.0;
  double z0 = 1.0;

  void validate() const {
    if (!(omega > 0.0) || !(omega_z > 0.0) || !(z0 > 0.0))
      throw DomainError("harmonic trap: omega, omega_z and z0 must be > 0");
  }
};

using TrapConfig = std::variant<NoTrap, SphericalTrap, HarmonicTrap>;

/// Trap potential (rad·s⁻¹) felt by both ground levels at `pos`.
inline double trap_potential(const TrapConfig& trap, const AtomConfig& atom, const Position& pos) {
  struct Visitor {
    const AtomConfig& atom;
    const Position& pos;
    double operator()(const NoTrap&) const { return 0.0; }
    double operator()(const SphericalTrap& s) const { return s.potential ? s.potential(pos.r()) : 0.0; }
    double operator()(const HarmonicTrap& h) const {
      const double m = atom.mass_over_hbar;
      const double dz = pos.z - h.z0;
      const double rho = pos.rho();
      return 0.5 * m * (h.omega_z * h.omega_z * dz * dz + h.omega * h.omega * rho * rho);
    }
  };
  return std::visit(Visitor{atom, pos}, trap);
}

}  // namespace monopole
