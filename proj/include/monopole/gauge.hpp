#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "monopole/error.hpp"
#include "monopole/fields.hpp"
#include "monopole/numerics.hpp"
#include "monopole/types.hpp"

namespace monopole {

enum class GaugeKind { Connection, Curvature };

struct GaugeSample {
  Position position;
  Vec3 a_vec = Vec3::Zero();
  Patch patch = Patch::A;
  GaugeKind kind = GaugeKind::Connection;
};

struct FluxReport {
  double radius = 0.0;
  double flux = 0.0;
  double chern = 0.0;
  int quadrature_order = 0;
  double estimated_error = 0.0;
};

enum class Quantization { Quantized, NotQuantized };

inline const char* to_string(Quantization q) { return q == Quantization::Quantized ? "Quantized" : "NotQuantized"; }

struct GaugeOptions {
  double exclusion_radius = 1e-9;  // m
  PatchGeometry geometry{};
};

/// Closed-form patch connection. In cap A it vanishes on the north axis, in cap B on
/// the south axis; the opposite axis is that cap's Dirac string. For η > 1 the
/// B form is g(1+cosθ)/(2ηr sinθ) and A is its e^{−igφ/η} gauge transform.
inline Vec3 connection_analytic(const BeamConfig& beam, const Position& pos, Patch patch,
                                bool include_kz = false, const GaugeOptions& opts = {}) {
  const double r = pos.r();
  if (r < opts.exclusion_radius) throw DegeneratePoint("connection_analytic: inside exclusion ball");
  const double rho = pos.rho();
  const double charge = beam.g / beam.eta;
  Vec3 a = Vec3::Zero();
  if (rho == 0.0) {
    const bool on_string = (patch == Patch::A) ? pos.z < 0.0 : pos.z > 0.0;
    if (on_string && beam.g != 0)
      throw OnAxisSingular(std::string("connection_analytic: Dirac string of patch ") + to_string(patch));
  } else {
    // (cosθ ∓ 1)/(r sinθ) written as ∓(r ∓ z)/(rρ) to stay accurate near the axis
    const double a_phi = (patch == Patch::A) ? -charge * pos.r_minus_z() / (2.0 * r * rho)
                                             : charge * pos.r_plus_z() / (2.0 * r * rho);
    a = a_phi * pos.e_phi();
  }
  if (include_kz) a.z() += beam.k;
  return a;
}

struct NumericDiffOptions {
  double h_rel = 1e-4;      // step as a fraction of r
  bool richardson = true;   // one (h, h/2) level
  bool include_kz = false;  // keep the common e^{ikz} phase in the differentiated section
};

struct NumericConnection {
  Vec3 value = Vec3::Zero();
  double imag_residue = 0.0;  // max |Im(−i⟨D|∂_j D⟩)|, m⁻¹
  double step = 0.0;
};

namespace detail {

inline double unwrap_near(double phi, double reference) {
  return reference + std::remainder(phi - reference, 2.0 * pi);
}

inline double diff_step(const BeamConfig& beam, double r, const NumericDiffOptions& o) {
  double h = o.h_rel * r;
  if (o.include_kz && beam.k != 0.0) h = std::min(h, 1e-2 / std::abs(beam.k));
  return h;
}

inline void check_stencil(const Vec3& x, double h, Patch patch, const GaugeOptions& opts) {
  for (int j = 0; j < 3; ++j) {
    for (double s : {-1.0, 1.0}) {
      const Position p = Position::from_vec(x + s * h * Vec3::Unit(j));
      if (p.r() < opts.exclusion_radius)
        throw DegeneratePoint("connection_numeric: stencil enters the exclusion ball");
      if (!opts.geometry.contains(patch, p.theta()))
        throw PatchBoundary(std::string("connection_numeric: stencil leaves patch ") + to_string(patch));
    }
  }
}

}  // namespace detail

/// −i⟨D|∇D⟩ from central differences of the dark section of `patch`.
inline NumericConnection connection_numeric(const BeamConfig& beam, const Position& pos, Patch patch,
                                            const NumericDiffOptions& o = {}, const GaugeOptions& opts = {}) {
  const Vec3 x = pos.vec();
  const double h = detail::diff_step(beam, pos.r(), o);
  detail::check_stencil(x, h, patch, opts);
  const double phi0 = pos.phi();
  auto section = [&](const Vec3& y) {
    const Position p = Position::from_vec(y);
    return detail::dark_section(beam, p, detail::unwrap_near(p.phi(), phi0), patch, o.include_kz);
  };
  const CVec3 d = section(x);
  NumericConnection out;
  out.step = h;
  for (int j = 0; j < 3; ++j) {
    const CVec3 dd = central_derivative(section, x, Vec3::Unit(j), h, o.richardson);
    const cplx a = cplx(0.0, -1.0) * d.dot(dd);  // dot() conjugates the first argument
    out.value(j) = a.real();
    out.imag_residue = std::max(out.imag_residue, std::abs(a.imag()));
  }
  return out;
}

/// Analytic curvature −(g/η)/(2r²) e_r, identical in both caps.
inline Vec3 curvature(const BeamConfig& beam, const Position& pos, const GaugeOptions& opts = {}) {
  const double r = pos.r();
  if (r < opts.exclusion_radius) throw DegeneratePoint("curvature: inside exclusion ball");
  return -(beam.g / beam.eta) / (2.0 * r * r) * pos.vec() / r;
}

/// Curl of connection_numeric on an outer stencil of step outer_h_rel·r.
inline Vec3 curvature_numeric(const BeamConfig& beam, const Position& pos, Patch patch,
                              double outer_h_rel = 5e-3, const NumericDiffOptions& inner = {},
                              const GaugeOptions& opts = {}) {
  const double big_h = outer_h_rel * pos.r();
  detail::check_stencil(pos.vec(), big_h, patch, opts);
  auto field = [&](const Vec3& y) { return connection_numeric(beam, Position::from_vec(y), patch, inner, opts).value; };
  return curl(field, pos.vec(), big_h, true);
}

struct SphereQuadrature {
  int theta_order = 64;  // Gauss-Legendre in cosθ
  int phi_points = 128;  // trapezoid in φ
};

namespace detail {

inline double sphere_flux(const BeamConfig& beam, double radius, const SphereQuadrature& q, const GaugeOptions& opts) {
  const QuadratureRule gl = gauss_legendre(q.theta_order);
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(q.theta_order) * q.phi_points);
  const double dphi = 2.0 * pi / q.phi_points;
  for (int i = 0; i < q.theta_order; ++i) {
    const double cos_t = gl.nodes[i];
    const double theta = std::acos(cos_t);
    for (int j = 0; j < q.phi_points; ++j) {
      const Position p = Position::from_spherical(radius, theta, j * dphi);
      const Vec3 n = p.vec() / radius;
      terms.push_back(gl.weights[i] * dphi * radius * radius * curvature(beam, p, opts).dot(n));
    }
  }
  return pairwise_sum(terms);
}

}  // namespace detail

/// Outward flux of the curvature through the origin-centred sphere. The error
/// estimate is the change against a rule of half the resolution in both angles.
inline FluxReport monopole_flux(const BeamConfig& beam, double radius, int quadrature_order = 64,
                                int phi_points = 128, const GaugeOptions& opts = {}) {
  if (!(radius > opts.exclusion_radius)) throw DomainError("monopole_flux: radius must exceed the exclusion radius");
  if (quadrature_order < 1 || phi_points < 1) throw DomainError("monopole_flux: quadrature sizes must be >= 1");
  FluxReport rep;
  rep.radius = radius;
  rep.quadrature_order = quadrature_order;
  rep.flux = detail::sphere_flux(beam, radius, {quadrature_order, phi_points}, opts);
  const double coarse = detail::sphere_flux(
      beam, radius, {std::max(1, quadrature_order / 2), std::max(1, phi_points / 2)}, opts);
  rep.estimated_error = std::abs(rep.flux - coarse) / (2.0 * pi);
  rep.chern = rep.flux / (2.0 * pi);
  return rep;
}

/// ∮ (A_b − A_a)·dl around the colatitude circle θ (trapezoid in φ).
inline double transition_holonomy(const BeamConfig& beam, double r, double theta, int n_samples,
                                  const GaugeOptions& opts = {}) {
  if (!opts.geometry.in_overlap(theta) || theta <= 0.0 || theta >= pi)
    throw DomainError("transition_holonomy: theta must lie strictly inside the overlap band");
  if (n_samples < 1) throw DomainError("transition_holonomy: n_samples must be >= 1");
  std::vector<double> terms(n_samples);
  const double dphi = 2.0 * pi / n_samples;
  for (int j = 0; j < n_samples; ++j) {
    const Position p = Position::from_spherical(r, theta, j * dphi);
    const Vec3 diff = connection_analytic(beam, p, Patch::B, false, opts) - connection_analytic(beam, p, Patch::A, false, opts);
    terms[j] = diff.dot(p.e_phi()) * r * std::sin(theta) * dphi;
  }
  return pairwise_sum(terms);
}

/// The transition e^{−igφ/η} is single valued iff g/η is an integer.
inline Quantization quantization_check(int g, double eta) {
  const double w = g / eta;
  return std::abs(w - std::round(w)) <= 1e-12 ? Quantization::Quantized : Quantization::NotQuantized;
}

}  // namespace monopole
