#pragma once

#include <cmath>
#include <complex>
#include <cstdlib>
#include <string>
#include <vector>

#include "monopole/error.hpp"
#include "monopole/types.hpp"

namespace monopole {

/// Exact half-integer, stored as twice its value.
class HalfInt {
 public:
  constexpr HalfInt() = default;
  static constexpr HalfInt from_twice(int twice) { return HalfInt(twice); }
  static constexpr HalfInt from_int(int n) { return HalfInt(2 * n); }

  constexpr int twice() const { return twice_; }
  constexpr double value() const { return 0.5 * twice_; }
  constexpr bool is_integer() const { return twice_ % 2 == 0; }
  constexpr HalfInt abs() const { return HalfInt(twice_ < 0 ? -twice_ : twice_); }

  constexpr HalfInt operator-() const { return HalfInt(-twice_); }
  constexpr HalfInt operator+(HalfInt o) const { return HalfInt(twice_ + o.twice_); }
  constexpr HalfInt operator-(HalfInt o) const { return HalfInt(twice_ - o.twice_); }
  constexpr auto operator<=>(const HalfInt&) const = default;

  std::string str() const { return is_integer() ? std::to_string(twice_ / 2) : std::to_string(twice_) + "/2"; }

 private:
  constexpr explicit HalfInt(int twice) : twice_(twice) {}
  int twice_ = 0;
};

/// (q, l, m) of a monopole harmonic: l ≥ |q|, l − |q| ∈ ℕ, −l ≤ m ≤ l, l − m ∈ ℤ.
struct MonopoleQuantum {
  HalfInt q;
  HalfInt l;
  HalfInt m;

  void validate() const {
    const int dl = l.twice() - q.abs().twice();
    if (dl < 0 || dl % 2 != 0)
      throw InvalidQuantum("monopole quantum: l = " + l.str() + " not admissible for q = " + q.str());
    if (m.abs() > l || (l - m).twice() % 2 != 0)
      throw InvalidQuantum("monopole quantum: m = " + m.str() + " not admissible for l = " + l.str());
  }
};

/// |g/2|, |g/2| + 1, ...
inline std::vector<HalfInt> allowed_l(int g, int count) {
  if (count < 1) throw DomainError("allowed_l: count must be >= 1");
  std::vector<HalfInt> out;
  out.reserve(count);
  const int base = std::abs(g);
  for (int i = 0; i < count; ++i) out.push_back(HalfInt::from_twice(base + 2 * i));
  return out;
}

/// μ = sqrt(l(l+1) − (g/2)² + 1/4).
inline double mu_index(HalfInt l, int g) {
  const int dl = l.twice() - std::abs(g);
  if (dl < 0 || dl % 2 != 0) throw InvalidQuantum("mu_index: l = " + l.str() + " not admissible for g = " + std::to_string(g));
  const double lv = l.value(), q = 0.5 * g;
  return std::sqrt(lv * (lv + 1.0) - q * q + 0.25);
}

namespace detail {

inline constexpr double bessel_crossover = 12.0;

inline double bessel_j_series(double nu, double x) {
  using ld = long double;
  const ld half = static_cast<ld>(x) / 2;
  ld term = std::exp(static_cast<ld>(nu) * std::log(half) - std::lgamma(static_cast<ld>(nu) + 1));
  ld sum = term;
  const ld q = half * half;
  for (int k = 1; k < 500; ++k) {
    term *= -q / (static_cast<ld>(k) * (k + static_cast<ld>(nu)));
    sum += term;
    if (k > half && std::abs(term) < 1e-19L * std::abs(sum)) break;
  }
  return static_cast<double>(sum);
}

/// Hankel expansion; sets `converged` false if the terms stop decreasing before
/// reaching double precision.
inline double bessel_j_asymptotic(double nu, double x, bool& converged) {
  const double mu4 = 4.0 * nu * nu;
  double p = 0.0, q = 0.0;
  double term = 1.0;  // a_k(ν) / x^k
  double last = 2.0;
  converged = false;
  for (int k = 0; k < 200; ++k) {
    const double mag = std::abs(term);
    if (mag > last) break;
    switch (k % 4) {
      case 0: p += term; break;
      case 1: q += term; break;
      case 2: p -= term; break;
      case 3: q -= term; break;
    }
    if (mag < 1e-17) {
      converged = true;
      break;
    }
    last = mag;
    const double odd = 2.0 * k + 1.0;
    term *= (mu4 - odd * odd) / ((k + 1.0) * 8.0 * x);
    if (term == 0.0) {
      converged = true;
      break;
    }
  }
  const double chi = x - (0.5 * nu + 0.25) * pi;
  return std::sqrt(2.0 / (pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace detail

/// Bessel J_ν(x) for ν ≥ 0, x ≥ 0. Below x = 12, or for ν > x, the ascending
/// series; otherwise two seeds of order frac(ν) and frac(ν) + 1 from the Hankel
/// expansion (series if it stalls) and upward recurrence, which is stable for ν ≤ x.
inline double bessel_j(double nu, double x) {
  if (nu < 0.0 || x < 0.0) throw DomainError("bessel_j: requires nu >= 0 and x >= 0");
  if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  if (x < detail::bessel_crossover || nu > x) return detail::bessel_j_series(nu, x);
  auto seed = [x](double order) {
    bool converged = false;
    const double v = detail::bessel_j_asymptotic(order, x, converged);
    return converged ? v : detail::bessel_j_series(order, x);
  };
  const int n = static_cast<int>(std::floor(nu));
  const double nu0 = nu - n;
  double j0 = seed(nu0);
  if (n == 0) return j0;
  double j1 = seed(nu0 + 1.0);
  for (int k = 1; k < n; ++k) {
    const double j2 = 2.0 * (nu0 + k) / x * j1 - j0;
    j0 = j1;
    j1 = j2;
  }
  return j1;
}

/// Free (V = 0, E > 0) radial solution J_μ(kr)/sqrt(kr), k = sqrt(2 (M/ħ) E).
inline double free_radial(HalfInt l, int g, double energy, const AtomConfig& atom, double r) {
  if (!(energy > 0.0) || !(r > 0.0)) throw DomainError("free_radial: requires E > 0 and r > 0");
  const double mu = mu_index(l, g);
  const double x = std::sqrt(2.0 * atom.mass_over_hbar * energy) * r;
  return bessel_j(mu, x) / std::sqrt(x);
}

/// Small Wigner-d element d^l_{m1,m2}(θ) from the explicit sum, with log-factorial
/// prefactors and the sign of each term tracked separately.
inline double wigner_d(HalfInt l, HalfInt m1, HalfInt m2, double theta) {
  const int j2 = l.twice(), a2 = m1.twice(), b2 = m2.twice();
  if (j2 < 0 || std::abs(a2) > j2 || std::abs(b2) > j2 || (j2 - a2) % 2 != 0 || (j2 - b2) % 2 != 0)
    throw InvalidQuantum("wigner_d: bad indices l = " + l.str() + ", m1 = " + m1.str() + ", m2 = " + m2.str());
  const int jpa = (j2 + a2) / 2, jma = (j2 - a2) / 2, jpb = (j2 + b2) / 2, jmb = (j2 - b2) / 2;
  const int amb = (a2 - b2) / 2;  // m1 − m2
  auto lf = [](int n) { return std::lgamma(n + 1.0); };
  const double log_pref = 0.5 * (lf(jpa) + lf(jma) + lf(jpb) + lf(jmb));
  const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
  double sum = 0.0;
  for (int k = std::max(0, -amb); k <= std::min(jpb, jma); ++k) {
    const double log_den = lf(jpb - k) + lf(k) + lf(amb + k) + lf(jma - k);
    const int ec = j2 - amb - 2 * k;  // 2j + m2 − m1 − 2k
    const int es = amb + 2 * k;
    const double sign = ((amb + k) % 2 == 0) ? 1.0 : -1.0;
    sum += sign * std::exp(log_pref - log_den) * std::pow(c, ec) * std::pow(s, es);
  }
  return sum;
}

/// Monopole harmonic Y_{q,l,m}(θ, φ) = sqrt((2l+1)/4π) d^l_{−m,q}(θ) e^{i(m ± q)φ},
/// + in cap A (regular at the north pole), − in cap B (regular at the south pole).
/// On the overlap Y_B = Y_A e^{−2iqφ}.
inline cplx monopole_harmonic(const MonopoleQuantum& qn, double theta, double phi, Patch patch) {
  qn.validate();
  const double norm = std::sqrt((qn.l.twice() + 1.0) / (4.0 * pi));
  const double d = wigner_d(qn.l, -qn.m, qn.q, theta);
  const int winding = (patch == Patch::A ? (qn.m + qn.q) : (qn.m - qn.q)).twice() / 2;
  return norm * d * std::polar(1.0, winding * phi);
}

}  // namespace monopole
