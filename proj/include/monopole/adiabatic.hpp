#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "monopole/error.hpp"
#include "monopole/parallel.hpp"
#include "monopole/types.hpp"

namespace monopole {

/// Upper bound of the non-adiabatic coupling, (|g|/r)·sqrt(2E/M).
inline double coupling_bound(int g, const AtomConfig& atom, double r) {
  if (!(r > 0.0)) throw DomainError("coupling_bound: r must be > 0");
  return std::abs(g) / r * std::sqrt(2.0 * atom.energy_scale / atom.mass_over_hbar);
}

/// Lower bound of the dark/bright gap at Δ = 0 with V ≤ E:
/// ½(sqrt(4ξ(r+|z|) + E²) − E), evaluated as 2ξ(r+|z|)/(sqrt(·) + E).
inline double gap_bound(const BeamConfig& beam, const AtomConfig& atom, double r, double z) {
  if (beam.delta != 0.0) throw UnsupportedDetuning("gap_bound: the criterion is derived for zero detuning only");
  if (!(r >= 0.0) || std::abs(z) > r * (1.0 + 1e-12)) throw DomainError("gap_bound: requires r >= |z| >= 0");
  const double e = atom.energy_scale;
  const double drive = 4.0 * beam.xi * (r + std::abs(z));
  const double root = std::sqrt(drive + e * e);
  return root + e > 0.0 ? 0.5 * drive / (root + e) : 0.0;
}

struct AdiabaticReport {
  Position position;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  bool valid = false;
};

/// Coupling-to-gap ratio at one point; points where the gap bound vanishes (or
/// the origin) get ratio = +inf.
inline AdiabaticReport adiabatic_report(const BeamConfig& beam, const AtomConfig& atom, const Position& pos,
                                        double criterion = 1.0) {
  AdiabaticReport rep;
  rep.position = pos;
  const double r = pos.r();
  if (r == 0.0) {
    rep.ratio = std::numeric_limits<double>::infinity();
    return rep;
  }
  rep.lhs = coupling_bound(beam.g, atom, r);
  rep.rhs = gap_bound(beam, atom, r, pos.z);
  rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : std::numeric_limits<double>::infinity();
  rep.valid = rep.ratio <= criterion;
  return rep;
}

/// Radius along `direction` where the ratio drops to `criterion`. The ratio is
/// strictly decreasing along rays, so the crossing is unique; bisection in log r.
inline double threshold_radius(const BeamConfig& beam, const AtomConfig& atom, const Vec3& direction,
                               double criterion = 1.0, double r_min = 1e-9) {
  if (!(criterion > 0.0) || criterion > 1.0) throw DomainError("threshold_radius: criterion must lie in (0, 1]");
  if (!(direction.norm() > 0.0)) throw DomainError("threshold_radius: direction must be nonzero");
  const Vec3 u = direction.normalized();
  auto ratio = [&](double r) { return adiabatic_report(beam, atom, Position::from_vec(r * u), criterion).ratio; };
  double lo = r_min;
  if (ratio(lo) < criterion) throw NoThreshold("threshold_radius: already adiabatic at the exclusion radius");
  double hi = 2.0 * lo;
  int grow = 0;
  while (ratio(hi) >= criterion) {
    lo = hi;
    hi *= 2.0;
    if (++grow > 2000) throw NoThreshold("threshold_radius: ratio never drops below the criterion");
  }
  while (hi / lo - 1.0 > 1e-13) {
    const double mid = std::sqrt(lo * hi);
    if (ratio(mid) >= criterion)
      lo = mid;
    else
      hi = mid;
  }
  return std::sqrt(lo * hi);
}

/// Cell-centred Cartesian sampling box.
struct CartesianGrid {
  Vec3 lower = Vec3::Constant(-1.0);
  Vec3 upper = Vec3::Constant(1.0);
  std::array<int, 3> counts{16, 16, 16};

  std::size_t size() const { return static_cast<std::size_t>(counts[0]) * counts[1] * counts[2]; }
  Position cell(std::size_t idx) const {
    const int i = static_cast<int>(idx / (static_cast<std::size_t>(counts[1]) * counts[2]));
    const int j = static_cast<int>((idx / counts[2]) % counts[1]);
    const int k = static_cast<int>(idx % counts[2]);
    const std::array<int, 3> ijk{i, j, k};
    Vec3 p;
    for (int a = 0; a < 3; ++a) p(a) = lower(a) + (ijk[a] + 0.5) * (upper(a) - lower(a)) / counts[a];
    return Position::from_vec(p);
  }
};

struct RegionMap {
  CartesianGrid grid;
  double criterion = 1.0;
  std::vector<AdiabaticReport> cells;  // x-major, then y, then z
  double valid_fraction = 0.0;
};

inline RegionMap region_map(const BeamConfig& beam, const AtomConfig& atom, const CartesianGrid& grid,
                            double criterion = 1.0) {
  for (int c : grid.counts)
    if (c < 1) throw DomainError("region_map: counts must be >= 1");
  RegionMap map;
  map.grid = grid;
  map.criterion = criterion;
  map.cells.resize(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) { map.cells[i] = adiabatic_report(beam, atom, grid.cell(i), criterion); });
  std::size_t valid = 0;
  for (const auto& c : map.cells) valid += c.valid ? 1 : 0;
  map.valid_fraction = static_cast<double>(valid) / static_cast<double>(map.cells.size());
  return map;
}

}  // namespace monopole
