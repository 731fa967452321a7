#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "monopole/error.hpp"

namespace monopole {

/// Raised by an inverse operator when H − σ turns out not to be positive definite.
class IndefiniteShift : public Error {
 public:
  using Error::Error;
};

struct EigensolverOptions {
  int block_size = 3;
  int max_basis = 48;          // columns kept before a thick restart
  int max_operator_calls = 4000;
  double ritz_tolerance = 1e-11;  // relative residual of the inverted operator
  std::uint64_t seed = 0x5eed1234abcdULL;
};

struct EigenPairs {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns, orthonormal
  int operator_calls = 0;
  int restarts = 0;
};

namespace detail {

/// Deterministic start block: uniform entries in [−1, 1) from a seeded mt19937_64.
inline Eigen::MatrixXd seeded_block(Eigen::Index n, int cols, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Eigen::MatrixXd x(n, cols);
  for (int j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < n; ++i) x(i, j) = (static_cast<double>(gen() >> 11) * 0x1.0p-53) * 2.0 - 1.0;
  return x;
}

/// Orthogonalize `block` against the first `k` columns of `basis` (two passes of
/// classical Gram-Schmidt), then orthonormalize it by modified Gram-Schmidt.
/// Returns the number of columns that survived; dropped columns are refilled from `refill`.
inline int orthonormalize_block(const Eigen::MatrixXd& basis, Eigen::Index k, Eigen::MatrixXd& block,
                                const std::function<Eigen::VectorXd()>& refill) {
  int good = 0;
  for (int j = 0; j < block.cols(); ++j) {
    for (int attempt = 0; attempt < 4; ++attempt) {
      Eigen::VectorXd v = block.col(j);
      const double before = v.norm();
      for (int pass = 0; pass < 2; ++pass) {
        if (k > 0) v -= basis.leftCols(k) * (basis.leftCols(k).transpose() * v);
        for (int i = 0; i < good; ++i) v -= block.col(i).dot(v) * block.col(i);
      }
      const double after = v.norm();
      if (before > 0.0 && after > 1e-10 * before) {
        block.col(good++) = v / after;
        break;
      }
      block.col(j) = refill();
    }
  }
  return good;
}

}  // namespace detail

/// Lowest `n_eigs` eigenpairs of a symmetric H from a shift-inverted operator
/// `inverse(x) = (H − σ)^{-1} x` (σ below the spectrum). The search space is a
/// block Krylov space of the inverse, extended by Ritz residuals, with an explicit
/// Rayleigh-Ritz projection each step and thick restarts.
inline EigenPairs shift_invert_eigensolve(Eigen::Index n, int n_eigs, double shift,
                                          const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& inverse,
                                          const EigensolverOptions& opts = {}) {
  if (n_eigs < 1 || n_eigs > n) throw DomainError("eigensolver: n_eigs out of range");
  const int b = std::max(1, std::min<int>(opts.block_size, static_cast<int>(n)));
  const int cap = std::max<int>(opts.max_basis, n_eigs + 3 * b);
  const int keep = n_eigs + b;

  std::mt19937_64 refill_gen(opts.seed ^ 0x9e3779b97f4a7c15ULL);
  auto refill = [&]() {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = (static_cast<double>(refill_gen() >> 11) * 0x1.0p-53) * 2.0 - 1.0;
    return v;
  };

  Eigen::MatrixXd basis(n, cap), images(n, cap);
  Eigen::Index k = 0;
  EigenPairs out;

  auto append = [&](Eigen::MatrixXd block) {
    const int good = detail::orthonormalize_block(basis, k, block, refill);
    for (int j = 0; j < good && k < cap; ++j) {
      basis.col(k) = block.col(j);
      images.col(k) = inverse(block.col(j));
      ++out.operator_calls;
      ++k;
    }
  };

  append(detail::seeded_block(n, std::min<Eigen::Index>(std::max(b, n_eigs), n), opts.seed));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small;
  while (true) {
    Eigen::MatrixXd t = basis.leftCols(k).transpose() * images.leftCols(k);
    t = 0.5 * (t + t.transpose()).eval();
    small.compute(t);
    const Eigen::VectorXd& theta = small.eigenvalues();  // ascending; wanted are the largest
    const Eigen::MatrixXd& s = small.eigenvectors();

    const double theta_max = theta.cwiseAbs().maxCoeff();
    if (theta(0) < -1e-8 * theta_max)
      throw IndefiniteShift("eigensolver: negative Ritz value, shift lies above the lowest eigenvalue");

    const int avail = static_cast<int>(std::min<Eigen::Index>(k, keep + b));
    std::vector<Eigen::VectorXd> residuals;
    std::vector<double> rel;
    for (int i = 0; i < avail; ++i) {
      const Eigen::Index c = k - 1 - i;
      const Eigen::VectorXd y = basis.leftCols(k) * s.col(c);
      const Eigen::VectorXd ry = images.leftCols(k) * s.col(c) - theta(c) * y;
      rel.push_back(ry.norm() / std::abs(theta(c)));
      residuals.push_back(ry);
    }
    const bool enough = k >= n_eigs;
    bool converged = enough;
    for (int i = 0; i < std::min(n_eigs, avail) && converged; ++i) converged = rel[i] <= opts.ritz_tolerance;

    if (converged || k == n) {
      out.values.resize(n_eigs);
      out.vectors.resize(n, n_eigs);
      for (int i = 0; i < n_eigs; ++i) {
        const Eigen::Index c = k - 1 - i;
        out.values(i) = shift + 1.0 / theta(c);
        out.vectors.col(i) = basis.leftCols(k) * s.col(c);
      }
      return out;
    }
    if (out.operator_calls >= opts.max_operator_calls)
      throw NonConverged("eigensolver: operator call budget exhausted before convergence");

    // next directions: residuals of the leading unconverged Ritz pairs
    Eigen::MatrixXd block(n, b);
    int filled = 0;
    for (int i = 0; i < avail && filled < b; ++i)
      if (rel[i] > opts.ritz_tolerance) block.col(filled++) = residuals[i];
    while (filled < b) block.col(filled++) = refill();

    if (k + b > cap) {
      const int kept = std::min<int>(keep, static_cast<int>(k));
      const Eigen::MatrixXd sk = s.rightCols(kept);
      Eigen::MatrixXd nb = basis.leftCols(k) * sk;
      Eigen::MatrixXd ni = images.leftCols(k) * sk;
      basis.leftCols(kept) = nb;
      images.leftCols(kept) = ni;
      k = kept;
      ++out.restarts;
    }
    append(block);
  }
}

}  // namespace monopole
