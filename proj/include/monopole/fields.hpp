#pragma once

#include <cmath>
#include <complex>

#include "monopole/error.hpp"
#include "monopole/types.hpp"

namespace monopole {

/// Probe and control Rabi frequencies at one point (rad·s⁻¹).
struct RabiFields {
  cplx probe;    // Ω_p, couples |e⟩ and |1⟩
  cplx control;  // Ω_c, couples |e⟩ and |2⟩
};

/// Local eigen-decomposition of the internal Hamiltonian. The basis order of
/// `dark` is (|1⟩, |2⟩, |e⟩).
struct EigenFrame {
  double e0 = 0.0;
  double e_plus = 0.0;
  double e_minus = 0.0;
  CVec3 dark = CVec3::Zero();
  double gap_plus = 0.0;   // e_plus − e0
  double gap_minus = 0.0;  // e0 − e_minus
  Patch patch = Patch::A;
};

struct FieldOptions {
  double exclusion_radius = 1e-9;  // m
};

inline RabiFields rabi_at(const BeamConfig& beam, const Position& pos) {
  const double probe_sq = beam.xi * pos.r_plus_z();
  const double control_sq = beam.xi * (2.0 * (beam.eta - 1.0) * pos.r() + pos.r_minus_z());
  const double common = beam.k * pos.z;
  return {std::polar(std::sqrt(std::max(probe_sq, 0.0)), common + beam.g * pos.phi()),
          std::polar(std::sqrt(std::max(control_sq, 0.0)), common)};
}

/// H = V(|1⟩⟨1| + |2⟩⟨2|) + Δ|e⟩⟨e| + (Ω_p|e⟩⟨1| + Ω_c|e⟩⟨2| + h.c.), trap potential `v` given.
inline Mat3c local_hamiltonian(const BeamConfig& beam, double v, const Position& pos) {
  const RabiFields rf = rabi_at(beam, pos);
  Mat3c h = Mat3c::Zero();
  h(0, 0) = v;
  h(1, 1) = v;
  h(2, 2) = beam.delta;
  h(2, 0) = rf.probe;
  h(0, 2) = std::conj(rf.probe);
  h(2, 1) = rf.control;
  h(1, 2) = std::conj(rf.control);
  return h;
}

inline Mat3c local_hamiltonian(const BeamConfig& beam, const TrapConfig& trap, const AtomConfig& atom,
                               const Position& pos) {
  return local_hamiltonian(beam, trap_potential(trap, atom, pos), pos);
}

namespace detail {

/// Gauge phase removed from the bare dark state in each cap: k z + (g/η) φ in A,
/// k z in B. `phi` is passed explicitly so callers can unwrap it locally.
inline double patch_phase(const BeamConfig& beam, double z, double phi, Patch patch) {
  const double common = beam.k * z;
  return patch == Patch::A ? common + (beam.g / beam.eta) * phi : common;
}

}  // namespace detail

/// Closed-form eigensystem of `h` (as built by local_hamiltonian) with the dark
/// state expressed in the section of `patch`.
inline EigenFrame eigensystem(const Mat3c& h, const BeamConfig& beam, const Position& pos, Patch patch,
                              const FieldOptions& opts = {}) {
  const double v = h(0, 0).real();
  const double delta = h(2, 2).real();
  const cplx probe = h(2, 0);
  const cplx control = h(2, 1);
  const double omega_sq = std::norm(probe) + std::norm(control);
  if (pos.r() < opts.exclusion_radius || omega_sq == 0.0)
    throw DegeneratePoint("eigensystem: gap closes at this point (Omega = 0 or inside exclusion ball)");

  EigenFrame f;
  f.patch = patch;
  f.e0 = v;
  const double detuning = delta - v;
  const double root = std::sqrt(4.0 * omega_sq + detuning * detuning);
  // the small-magnitude root is taken from the product e+·e− = −Ω² to avoid cancellation
  if (detuning >= 0.0) {
    f.gap_plus = 0.5 * (detuning + root);
    f.gap_minus = omega_sq / f.gap_plus;
  } else {
    f.gap_minus = 0.5 * (root - detuning);
    f.gap_plus = omega_sq / f.gap_minus;
  }
  f.e_plus = v + f.gap_plus;
  f.e_minus = v - f.gap_minus;

  const double omega = std::sqrt(omega_sq);
  const cplx gauge = std::polar(1.0, -detail::patch_phase(beam, pos.z, pos.phi(), patch));
  f.dark << -control / omega * gauge, probe / omega * gauge, 0.0;
  return f;
}

inline EigenFrame eigensystem(const BeamConfig& beam, const TrapConfig& trap, const AtomConfig& atom,
                              const Position& pos, Patch patch, const FieldOptions& opts = {}) {
  return eigensystem(local_hamiltonian(beam, trap, atom, pos), beam, pos, patch, opts);
}

namespace detail {

/// Dark section built from field magnitudes with an explicit (possibly unwrapped)
/// azimuth. With `keep_common_phase` the e^{ikz} factor of both beams is left in.
inline CVec3 dark_section(const BeamConfig& beam, const Position& pos, double phi, Patch patch,
                          bool keep_common_phase) {
  const double probe = std::sqrt(std::max(beam.xi * pos.r_plus_z(), 0.0));
  const double control = std::sqrt(std::max(beam.xi * (2.0 * (beam.eta - 1.0) * pos.r() + pos.r_minus_z()), 0.0));
  const double omega = std::hypot(probe, control);
  if (omega == 0.0) throw DegeneratePoint("dark_section: Omega = 0");
  const double common = keep_common_phase ? beam.k * pos.z : 0.0;
  const double removed = patch == Patch::A ? (beam.g / beam.eta) * phi : 0.0;
  CVec3 d;
  d << -std::polar(control / omega, common - removed), std::polar(probe / omega, common + beam.g * phi - removed), 0.0;
  return d;
}

}  // namespace detail

}  // namespace monopole
