#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "monopole/eigensolver.hpp"
#include "monopole/error.hpp"
#include "monopole/types.hpp"

namespace monopole {

/// F_m(ρ, z) = (m/ρ + g(z − r)/(2rρ))², the azimuthal part of (P + A_a)² in cap A.
inline double f_exact(int m, int g, double rho, double z) {
  if (!(rho > 0.0)) throw DomainError("f_exact: rho must be > 0");
  const double r = std::hypot(rho, z);
  // z − r without cancellation for z > 0
  const double z_minus_r = z > 0.0 ? -rho * rho / (r + z) : z - r;
  const double t = m / rho + g * z_minus_r / (2.0 * r * rho);
  return t * t;
}

/// Laurent truncation of F_m around the plane z = z0.
inline double f_approx(int m, int g, double rho, double z0) {
  if (!(rho > 0.0) || !(z0 > 0.0)) throw DomainError("f_approx: rho and z0 must be > 0");
  const double z2 = z0 * z0;
  return m * m / (rho * rho) + g * g * rho * rho / (16.0 * z2 * z2) - m * g / (2.0 * z2);
}

/// Physicists' Hermite polynomial H_n(x).
inline double hermite(int n, double x) {
  if (n < 0) throw DomainError("hermite: n must be >= 0");
  double h0 = 1.0, h1 = 2.0 * x;
  if (n == 0) return h0;
  for (int k = 1; k < n; ++k) {
    const double h2 = 2.0 * x * h1 - 2.0 * k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

/// ₁F₁(−n; b; x), a polynomial of degree n.
inline double hyp1f1_terminating(int n, double b, double x) {
  if (n < 0) throw DomainError("hyp1f1_terminating: n must be >= 0");
  double term = 1.0, sum = 1.0;
  for (int k = 0; k < n; ++k) {
    term *= (k - n) * x / ((b + k) * (k + 1.0));
    sum += term;
  }
  return sum;
}

struct TrapSpectrumParams {
  AtomConfig atom;
  HarmonicTrap trap;
  int g = 0;
  int m = 0;
  int n_rho = 0;
  int n_z = 0;

  void validate() const {
    atom.validate();
    trap.validate();
    if (n_rho < 0 || n_z < 0) throw DomainError("spectrum: n_rho and n_z must be >= 0");
  }
};

enum class SpectrumMethod { Analytic, NumericApproxF, NumericExactF };

inline const char* to_string(SpectrumMethod m) {
  switch (m) {
    case SpectrumMethod::Analytic: return "Analytic";
    case SpectrumMethod::NumericApproxF: return "NumericApproxF";
    case SpectrumMethod::NumericExactF: return "NumericExactF";
  }
  return "?";
}

struct GridMetadata {
  int n_rho = 0;
  int n_z = 0;
  double rho_max = 0.0;
  double z_min = 0.0;
  double z_max = 0.0;
  double h_rho = 0.0;
  double h_z = 0.0;
  double shift = 0.0;
  double residual = 0.0;                                            // ‖Hv − λv‖/|λ|
  double richardson = std::numeric_limits<double>::quiet_NaN();     // (4λ_h − λ_2h)/3 when requested
  int operator_calls = 0;
};

struct SpectrumResult {
  int m = 0;
  int n_rho = -1;  // −1 when only the sorted index is known
  int n_z = -1;
  int index = 0;
  double energy = 0.0;
  SpectrumMethod method = SpectrumMethod::Analytic;
  // analytic decomposition
  double modified_frequency = 0.0;  // ω̃
  double frequency_shift = 0.0;     // ω̃ − ω
  double zero_point_shift = 0.0;    // −m g /(4 M z0²)
  std::optional<GridMetadata> grid;
};

/// ω̃ = sqrt(ω² + g²/(16 (M/ħ)² z0⁴)).
inline double modified_frequency(const AtomConfig& atom, const HarmonicTrap& trap, int g) {
  const double mz2 = atom.mass_over_hbar * trap.z0 * trap.z0;
  const double extra = g / (4.0 * mz2);
  return std::sqrt(trap.omega * trap.omega + extra * extra);
}

inline SpectrumResult spectrum_analytic(const TrapSpectrumParams& p) {
  p.validate();
  SpectrumResult res;
  res.m = p.m;
  res.n_rho = p.n_rho;
  res.n_z = p.n_z;
  res.method = SpectrumMethod::Analytic;
  res.modified_frequency = modified_frequency(p.atom, p.trap, p.g);
  res.frequency_shift = res.modified_frequency - p.trap.omega;
  res.zero_point_shift = -static_cast<double>(p.m) * p.g / (4.0 * p.atom.mass_over_hbar * p.trap.z0 * p.trap.z0);
  res.energy = (2.0 * p.n_rho + std::abs(p.m) + 1.0) * res.modified_frequency + res.zero_point_shift +
               (p.n_z + 0.5) * p.trap.omega_z;
  return res;
}

/// Lowest `count` analytic levels of one m sector, ascending, with their labels.
inline std::vector<SpectrumResult> analytic_sector_levels(const AtomConfig& atom, const HarmonicTrap& trap, int g,
                                                          int m, int count) {
  std::vector<SpectrumResult> all;
  for (int nr = 0; nr < count; ++nr)
    for (int nz = 0; nz < count; ++nz) all.push_back(spectrum_analytic({atom, trap, g, m, nr, nz}));
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.energy < b.energy; });
  all.resize(count);
  for (int i = 0; i < count; ++i) all[i].index = i;
  return all;
}

/// Separable harmonic-trap eigenfunction of the approximated problem in cap A,
/// normalised to ∫|ψ|² ρ dρ dφ dz = 1.
inline cplx wavefunction_analytic(const TrapSpectrumParams& p, double rho, double z, double phi) {
  p.validate();
  const int am = std::abs(p.m);
  const double a = p.atom.mass_over_hbar * modified_frequency(p.atom, p.trap, p.g);
  const double b = p.atom.mass_over_hbar * p.trap.omega_z;
  // ∫ρ^{2|m|+1} e^{−aρ²} F² dρ = n! (|m|!)² / (2 a^{|m|+1} (n+|m|)!),  ∫ e^{−b ζ²} H_n² dζ = sqrt(π/b) 2ⁿ n!
  const double log_radial = std::lgamma(p.n_rho + 1.0) + 2.0 * std::lgamma(am + 1.0) - std::log(2.0) -
                            (am + 1.0) * std::log(a) - std::lgamma(p.n_rho + am + 1.0);
  const double log_axial = 0.5 * std::log(pi / b) + p.n_z * std::log(2.0) + std::lgamma(p.n_z + 1.0);
  const double norm = std::exp(-0.5 * (std::log(2.0 * pi) + log_radial + log_axial));
  const double dz = z - p.trap.z0;
  const double radial = std::pow(rho, am) * std::exp(-0.5 * a * rho * rho) * hyp1f1_terminating(p.n_rho, am + 1.0, a * rho * rho);
  const double axial = std::exp(-0.5 * b * dz * dz) * hermite(p.n_z, std::sqrt(b) * dz);
  return norm * radial * axial * std::polar(1.0, p.m * phi);
}

enum class RadialPotential { ExactF, ApproxF };

/// Tensor grid in (ρ, z). Extents default to multiples of the oscillator lengths
/// (harmonic traps); absolute bounds override them and are required otherwise.
struct GridSpec {
  int n_rho = 512;
  int n_z = 512;
  double rho_extent = 8.0;  // oscillator lengths
  double z_extent = 8.0;    // oscillator lengths either side of z0
  std::optional<double> rho_max;
  std::optional<double> z_min;
  std::optional<double> z_max;
  double richardson_tolerance = 0.0;  // > 0: also solve on the half grid and compare
};

struct SectorProblem {
  AtomConfig atom;
  TrapConfig trap;
  int g = 0;
};

struct SpectrumSolverOptions {
  double residual_tolerance = 1e-8;  // ‖Hv − λv‖ ≤ tol·|λ|
  EigensolverOptions eigensolver{};
  int max_inner_iterations = 400;
};

namespace detail {

struct ResolvedGrid {
  int n_rho = 0, n_z = 0;
  double rho_max = 0.0, z_min = 0.0, z_max = 0.0, h_rho = 0.0, h_z = 0.0;
  double rho(int i) const { return (i + 0.5) * h_rho; }
  double z(int j) const { return z_min + (j + 1) * h_z; }
};

inline ResolvedGrid resolve_grid(const SectorProblem& prob, const GridSpec& spec) {
  if (spec.n_rho < 4 || spec.n_z < 4) throw DomainError("grid: need at least 4 points per axis");
  ResolvedGrid grid;
  grid.n_rho = spec.n_rho;
  grid.n_z = spec.n_z;
  if (const auto* h = std::get_if<HarmonicTrap>(&prob.trap)) {
    const double m = prob.atom.mass_over_hbar;
    const double len_rho = 1.0 / std::sqrt(m * modified_frequency(prob.atom, *h, prob.g));
    const double len_z = 1.0 / std::sqrt(m * h->omega_z);
    grid.rho_max = spec.rho_max.value_or(spec.rho_extent * len_rho);
    grid.z_min = spec.z_min.value_or(h->z0 - spec.z_extent * len_z);
    grid.z_max = spec.z_max.value_or(h->z0 + spec.z_extent * len_z);
    constexpr double min_lengths = 6.0 - 1e-12;
    if (grid.rho_max < min_lengths * len_rho || grid.z_max - h->z0 < min_lengths * len_z ||
        h->z0 - grid.z_min < min_lengths * len_z)
      throw DomainError("grid: extents must cover at least 6 oscillator lengths");
  } else {
    if (!spec.rho_max || !spec.z_min || !spec.z_max)
      throw DomainError("grid: absolute extents are required for non-harmonic traps");
    grid.rho_max = *spec.rho_max;
    grid.z_min = *spec.z_min;
    grid.z_max = *spec.z_max;
  }
  if (!(grid.rho_max > 0.0) || !(grid.z_max > grid.z_min)) throw DomainError("grid: empty extents");
  grid.h_rho = grid.rho_max / grid.n_rho;
  grid.h_z = (grid.z_max - grid.z_min) / (grid.n_z + 1);
  return grid;
}

/// Eigenpairs of a symmetric tridiagonal matrix. Eigen's tridiagonal QR does not
/// balance its input and can return wrong eigenvalues for entries far from unity.
inline void tridiagonal_eigen(const Eigen::VectorXd& diag, const Eigen::VectorXd& off, Eigen::VectorXd& values,
                              Eigen::MatrixXd& vectors) {
  double scale = diag.cwiseAbs().maxCoeff();
  if (off.size() > 0) scale = std::max(scale, off.cwiseAbs().maxCoeff());
  if (!(scale > 0.0)) scale = 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag / scale, off / scale, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw NonConverged("tridiagonal_eigen: QR iteration failed");
  values = scale * es.eigenvalues();
  vectors = es.eigenvectors();
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Symmetrised finite-difference operator of one m sector,
///   (1/2M)[−∂ρ² − (1/ρ)∂ρ − ∂z² + F_m] + V,
/// on cell-centred ρ nodes (the flux through the axis vanishes) and interior z
/// nodes with Dirichlet walls. The diagonal similarity u = sqrt(ρ)·T makes the
/// conservative radial stencil symmetric.
class SectorOperator {
 public:
  SectorOperator(int m, const SectorProblem& prob, RadialPotential pot, const ResolvedGrid& grid)
      : grid_(grid), nr_(grid.n_rho), nz_(grid.n_z) {
    const double c = 0.5 / prob.atom.mass_over_hbar;
    const auto* harmonic = std::get_if<HarmonicTrap>(&prob.trap);
    if (pot == RadialPotential::ApproxF && !harmonic)
      throw DomainError("spectrum_numeric: the approximated F_m needs a harmonic trap (z0)");

    rho_diag_ = Eigen::VectorXd::Constant(nr_, 2.0 * c / (grid.h_rho * grid.h_rho));
    rho_off_.resize(nr_ - 1);
    for (int i = 0; i + 1 < nr_; ++i) {
      const double face = (i + 1) * grid.h_rho;
      rho_off_(i) = -c * face / (grid.h_rho * grid.h_rho * std::sqrt(grid.rho(i) * grid.rho(i + 1)));
    }
    z_diag_ = 2.0 * c / (grid.h_z * grid.h_z);
    z_off_ = -c / (grid.h_z * grid.h_z);

    potential_.resize(nr_, nz_);
    for (int i = 0; i < nr_; ++i) {
      const double rho = grid.rho(i);
      for (int j = 0; j < nz_; ++j) {
        const double z = grid.z(j);
        const double f = pot == RadialPotential::ExactF ? f_exact(m, prob.g, rho, z) : f_approx(m, prob.g, rho, harmonic->z0);
        potential_(i, j) = c * f + trap_potential(prob.trap, prob.atom, Position::from_cylindrical(rho, 0.0, z));
      }
    }
    build_separable(harmonic ? harmonic->z0 : 0.5 * (grid.z_min + grid.z_max));
  }

  Eigen::Index size() const { return static_cast<Eigen::Index>(nr_) * nz_; }
  const ResolvedGrid& grid() const { return grid_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& u) const {
    Eigen::VectorXd out(u.size());
    Eigen::Map<const RowMatrix> in(u.data(), nr_, nz_);
    Eigen::Map<RowMatrix> res(out.data(), nr_, nz_);
    for (int i = 0; i < nr_; ++i) {
      for (int j = 0; j < nz_; ++j) {
        double v = (rho_diag_(i) + z_diag_ + potential_(i, j)) * in(i, j);
        if (i > 0) v += rho_off_(i - 1) * in(i - 1, j);
        if (i + 1 < nr_) v += rho_off_(i) * in(i + 1, j);
        if (j > 0) v += z_off_ * in(i, j - 1);
        if (j + 1 < nz_) v += z_off_ * in(i, j + 1);
        res(i, j) = v;
      }
    }
    return out;
  }

  /// (H_sep − σ)^{-1} u by fast diagonalisation of the two 1D factors.
  Eigen::VectorXd separable_solve(const Eigen::VectorXd& u, double shift) const {
    Eigen::Map<const RowMatrix> in(u.data(), nr_, nz_);
    RowMatrix y = q_rho_.transpose() * in * q_z_;
    for (int i = 0; i < nr_; ++i)
      for (int j = 0; j < nz_; ++j) y(i, j) /= (lam_rho_(i) + lam_z_(j) - shift);
    Eigen::VectorXd out(u.size());
    Eigen::Map<RowMatrix>(out.data(), nr_, nz_) = q_rho_ * y * q_z_.transpose();
    return out;
  }

  /// Lowest `count` eigenvalues of the separable part, ascending.
  std::vector<double> separable_levels(int count) const {
    std::vector<double> lv;
    const int nr = std::min(nr_, count), nz = std::min(nz_, count);
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < nz; ++j) lv.push_back(lam_rho_(i) + lam_z_(j));
    std::sort(lv.begin(), lv.end());
    lv.resize(std::min<std::size_t>(lv.size(), count));
    return lv;
  }
  double separable_max() const { return lam_rho_.maxCoeff() + lam_z_.maxCoeff(); }
  double remainder_norm() const { return remainder_.cwiseAbs().maxCoeff(); }

  /// (H − σ)^{-1} u by preconditioned CG; the separable inverse is the preconditioner.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, double shift, double tol, int max_iter, int& iterations) const {
    Eigen::VectorXd x = separable_solve(rhs, shift);
    iterations = 1;
    if (remainder_is_zero_) return x;
    Eigen::VectorXd r = rhs - apply(x) + shift * x;
    const double target = tol * rhs.norm();
    if (r.norm() <= target) return x;
    Eigen::VectorXd z = separable_solve(r, shift);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    for (int it = 0; it < max_iter; ++it) {
      const Eigen::VectorXd ap = apply(p) - shift * p;
      const double pap = p.dot(ap);
      if (!(pap > 0.0)) throw IndefiniteShift("spectrum_numeric: H - shift is not positive definite");
      const double alpha = rz / pap;
      x += alpha * p;
      r -= alpha * ap;
      ++iterations;
      if (r.norm() <= target) return x;
      z = separable_solve(r, shift);
      const double rz_new = r.dot(z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
    }
    throw NonConverged("spectrum_numeric: inner CG solve did not converge");
  }

 private:
  void build_separable(double z_ref) {
    int jref = 0;
    for (int j = 1; j < nz_; ++j)
      if (std::abs(grid_.z(j) - z_ref) < std::abs(grid_.z(jref) - z_ref)) jref = j;
    int iref = 0;
    for (int i = 1; i < nr_; ++i)
      if (potential_(i, jref) < potential_(iref, jref)) iref = i;

    Eigen::VectorXd w_rho = potential_.col(jref);
    Eigen::VectorXd w_z = (potential_.row(iref).array() - potential_(iref, jref)).matrix().transpose();
    remainder_ = potential_;
    for (int i = 0; i < nr_; ++i)
      for (int j = 0; j < nz_; ++j) remainder_(i, j) -= w_rho(i) + w_z(j);
    remainder_is_zero_ = remainder_.cwiseAbs().maxCoeff() <= 1e-13 * potential_.cwiseAbs().maxCoeff();

    tridiagonal_eigen(rho_diag_ + w_rho, rho_off_, lam_rho_, q_rho_);
    tridiagonal_eigen(Eigen::VectorXd::Constant(nz_, z_diag_) + w_z, Eigen::VectorXd::Constant(nz_ - 1, z_off_), lam_z_,
                      q_z_);
  }

  ResolvedGrid grid_;
  int nr_, nz_;
  Eigen::VectorXd rho_diag_, rho_off_;
  double z_diag_ = 0.0, z_off_ = 0.0;
  RowMatrix potential_, remainder_;
  bool remainder_is_zero_ = false;
  Eigen::VectorXd lam_rho_, lam_z_;
  Eigen::MatrixXd q_rho_, q_z_;
};

struct SectorSolution {
  Eigen::VectorXd values;
  std::vector<double> residuals;
  double shift = 0.0;
  int operator_calls = 0;
};

inline SectorSolution solve_sector(const SectorOperator& op, int n_eigs, const SpectrumSolverOptions& opts) {
  const std::vector<double> sep = op.separable_levels(n_eigs + 1);
  const double lowest = sep.front();
  double spacing = (sep.back() - lowest) / std::max<std::size_t>(sep.size() - 1, 1);
  spacing = std::max(spacing, 1e-6 * std::abs(lowest));

  for (int attempt = 0; attempt < 40; ++attempt) {
    const double shift = lowest - 0.5 * spacing * std::pow(4.0, attempt);
    const double kappa = (op.separable_max() - shift) / (lowest - shift);
    const double inner_tol = std::max(1e-13, 50.0 * std::numeric_limits<double>::epsilon() * kappa);
    try {
      int calls = 0;
      auto inverse = [&](const Eigen::VectorXd& v) {
        int it = 0;
        Eigen::VectorXd x = op.solve(v, shift, inner_tol, opts.max_inner_iterations, it);
        calls += it;
        return x;
      };
      EigenPairs pairs = shift_invert_eigensolve(op.size(), n_eigs, shift, inverse, opts.eigensolver);
      SectorSolution sol;
      sol.values = pairs.values;
      sol.shift = shift;
      sol.operator_calls = calls;
      for (int i = 0; i < n_eigs; ++i) {
        const Eigen::VectorXd v = pairs.vectors.col(i);
        const double res = (op.apply(v) - pairs.values(i) * v).norm() / std::abs(pairs.values(i));
        sol.residuals.push_back(res);
        if (!(res <= opts.residual_tolerance))
          throw NonConverged("spectrum_numeric: eigenpair residual " + std::to_string(res) + " above tolerance");
      }
      return sol;
    } catch (const IndefiniteShift&) {
      continue;
    }
  }
  throw NonConverged("spectrum_numeric: could not place the shift below the spectrum");
}

}  // namespace detail

/// Lowest `n_eigs` eigenvalues of the m sector on a finite-difference grid.
inline std::vector<SpectrumResult> spectrum_numeric(int m, const SectorProblem& prob, RadialPotential pot,
                                                    const GridSpec& spec, int n_eigs,
                                                    const SpectrumSolverOptions& opts = {}) {
  prob.atom.validate();
  if (const auto* h = std::get_if<HarmonicTrap>(&prob.trap)) h->validate();
  if (n_eigs < 1) throw DomainError("spectrum_numeric: n_eigs must be >= 1");

  const detail::ResolvedGrid grid = detail::resolve_grid(prob, spec);
  const detail::SectorOperator op(m, prob, pot, grid);
  const detail::SectorSolution sol = detail::solve_sector(op, n_eigs, opts);

  std::optional<Eigen::VectorXd> coarse;
  if (spec.richardson_tolerance > 0.0) {
    GridSpec half = spec;
    half.n_rho = spec.n_rho / 2;
    half.n_z = (spec.n_z + 1) / 2 - 1;  // interior nodes of (n_z + 1)/2 intervals between the same walls
    half.rho_max = grid.rho_max;
    half.z_min = grid.z_min;
    half.z_max = grid.z_max;
    const detail::SectorOperator op2(m, prob, pot, detail::resolve_grid(prob, half));
    coarse = detail::solve_sector(op2, n_eigs, opts).values;
    for (int i = 0; i < n_eigs; ++i) {
      const double diff = std::abs(sol.values(i) - (*coarse)(i));
      if (diff > spec.richardson_tolerance * std::abs(sol.values(i)))
        throw GridTooCoarse("spectrum_numeric: eigenvalue " + std::to_string(i) + " changes by " +
                            std::to_string(diff / std::abs(sol.values(i))) + " (relative) under grid halving");
    }
  }

  std::vector<SpectrumResult> out;
  for (int i = 0; i < n_eigs; ++i) {
    SpectrumResult r;
    r.m = m;
    r.index = i;
    r.energy = sol.values(i);
    r.method = pot == RadialPotential::ExactF ? SpectrumMethod::NumericExactF : SpectrumMethod::NumericApproxF;
    GridMetadata meta;
    meta.n_rho = grid.n_rho;
    meta.n_z = grid.n_z;
    meta.rho_max = grid.rho_max;
    meta.z_min = grid.z_min;
    meta.z_max = grid.z_max;
    meta.h_rho = grid.h_rho;
    meta.h_z = grid.h_z;
    meta.shift = sol.shift;
    meta.residual = sol.residuals[i];
    meta.operator_calls = sol.operator_calls;
    if (coarse) meta.richardson = (4.0 * sol.values(i) - (*coarse)(i)) / 3.0;
    r.grid = meta;
    out.push_back(r);
  }
  return out;
}

}  // namespace monopole
