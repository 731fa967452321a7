#include <gtest/gtest.h>

#include <cstdlib>
#include <random>

#include "monopole/adiabatic.hpp"
#include "monopole/fields.hpp"

using namespace monopole;

namespace {

const AtomConfig cesium = AtomConfig::from_si(2.2069466e-25, 1e-26);

BeamConfig case_beam(int g) { return {std::pow(pi * 1e10, 2), g, 1.0, 0.0, 0.0}; }

}  // namespace

TEST(Bounds, CouplingFormula) {
  const AtomConfig atom{2.0, 8.0};
  EXPECT_NEAR(coupling_bound(3, atom, 0.5), 3 / 0.5 * std::sqrt(8.0), 1e-14);
  EXPECT_NEAR(coupling_bound(-3, atom, 0.5), coupling_bound(3, atom, 0.5), 0.0);
  EXPECT_THROW(coupling_bound(1, atom, 0.0), DomainError);
}

TEST(Bounds, GapClosedFormAndStableEvaluation) {
  const AtomConfig atom{1.0, 3.0};
  const BeamConfig beam{2.0, 1, 1.0, 0.0, 0.0};
  const double r = 0.8, z = -0.3;
  EXPECT_NEAR(gap_bound(beam, atom, r, z), 0.5 * (std::sqrt(4 * 2.0 * (r + 0.3) + 9.0) - 3.0), 1e-14);
  // drive ≪ E²: the naive difference would cancel completely
  const AtomConfig hot{1.0, 1e9};
  const BeamConfig weak{1e-6, 1, 1.0, 0.0, 0.0};
  EXPECT_NEAR(gap_bound(weak, hot, 1.0, 0.0), 1e-6 / 1e9, 1e-22);
}

TEST(Bounds, GapBoundNeverExceedsTrueGap) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 2000; ++t) {
    const BeamConfig beam{std::pow(10.0, 4 * u(gen) - 2), 1, 1.0, 0.0, 0.0};
    const AtomConfig atom{1.0, 5.0 * u(gen)};
    const Position p = Position::from_spherical(0.01 + 3 * u(gen), pi * u(gen), 2 * pi * u(gen));
    const double v = atom.energy_scale * u(gen);
    const EigenFrame f = eigensystem(local_hamiltonian(beam, v, p), beam, p, Patch::B);
    EXPECT_LE(gap_bound(beam, atom, p.r(), p.z), std::min(f.gap_plus, f.gap_minus) * (1 + 1e-12));
  }
}

TEST(Bounds, DomainChecks) {
  BeamConfig beam{1.0, 1, 1.0, 0.0, 0.5};
  EXPECT_THROW(gap_bound(beam, AtomConfig{}, 1.0, 0.0), UnsupportedDetuning);
  beam.delta = 0.0;
  EXPECT_THROW(gap_bound(beam, AtomConfig{}, 1.0, 2.0), DomainError);
}

TEST(Report, OriginIsNeverAdiabatic) {
  const AdiabaticReport rep = adiabatic_report(case_beam(10), cesium, {0, 0, 0});
  EXPECT_TRUE(std::isinf(rep.ratio));
  EXPECT_FALSE(rep.valid);
}

TEST(Report, RatioDecreasesAlongRays) {
  const BeamConfig beam = case_beam(10);
  for (const Vec3& d : {Vec3(1, 0, 0), Vec3(0, 0, 1), Vec3(0, 0, -1), Vec3(1, -2, 0.5)}) {
    double prev = std::numeric_limits<double>::infinity();
    for (double r = 1e-9; r < 1e-2; r *= 1.5) {
      const double ratio = adiabatic_report(beam, cesium, Position::from_vec(r * d.normalized())).ratio;
      EXPECT_LT(ratio, prev);
      prev = ratio;
    }
  }
}

TEST(Threshold, CrossingIsAtCriterion) {
  const BeamConfig beam = case_beam(10);
  for (double crit : {1.0, 0.1}) {
    const Vec3 d(0.3, 0.4, -0.2);
    const double r = threshold_radius(beam, cesium, d, crit);
    const double at = adiabatic_report(beam, cesium, Position::from_vec(r * d.normalized())).ratio;
    EXPECT_NEAR(at, crit, 1e-9 * crit);
  }
}

TEST(Threshold, CaseStudyMagnitude) {
  // ξ is the square of the quoted amplitude π·10¹⁰
  const BeamConfig beam = case_beam(10);
  for (const Vec3& d : {Vec3(1, 0, 0), Vec3(0, 0, 1), Vec3(0, 0, -1)}) {
    const double r = threshold_radius(beam, cesium, d);
    EXPECT_GE(r, 1e-7);
    EXPECT_LE(r, 1e-5);
  }
  // the literal reading ξ = π·10¹⁰ puts the threshold near a decimetre
  BeamConfig literal = beam;
  literal.xi = pi * 1e10;
  EXPECT_GT(threshold_radius(literal, cesium, Vec3(1, 0, 0)), 1e-2);
}

TEST(Threshold, Errors) {
  EXPECT_THROW(threshold_radius(case_beam(0), cesium, Vec3(1, 0, 0)), NoThreshold);
  EXPECT_THROW(threshold_radius(case_beam(10), cesium, Vec3(0, 0, 0)), DomainError);
  EXPECT_THROW(threshold_radius(case_beam(10), cesium, Vec3(1, 0, 0), 1.5), DomainError);
}

TEST(RegionMap, EnsembleScaleIsAlmostEverywhereAdiabatic) {
  const CartesianGrid grid{Vec3::Constant(-1e-3), Vec3::Constant(1e-3), {20, 20, 20}};
  const RegionMap map = region_map(case_beam(10), cesium, grid);
  EXPECT_EQ(map.cells.size(), 8000u);
  EXPECT_GE(map.valid_fraction, 0.99);
}

TEST(RegionMap, CellCentredLayout) {
  const CartesianGrid grid{Vec3(0, 0, 0), Vec3(1, 2, 4), {2, 2, 2}};
  const Position p = grid.cell(1);  // i = 0, j = 0, k = 1
  EXPECT_NEAR(p.x, 0.25, 1e-15);
  EXPECT_NEAR(p.y, 0.5, 1e-15);
  EXPECT_NEAR(p.z, 3.0, 1e-15);
}

TEST(RegionMap, IndependentOfThreadCount) {
  const CartesianGrid grid{Vec3::Constant(-2e-6), Vec3::Constant(2e-6), {9, 9, 9}};
  setenv("MONOPOLE_THREADS", "1", 1);
  const RegionMap a = region_map(case_beam(10), cesium, grid);
  setenv("MONOPOLE_THREADS", "7", 1);
  const RegionMap b = region_map(case_beam(10), cesium, grid);
  unsetenv("MONOPOLE_THREADS");
  ASSERT_EQ(a.cells.size(), b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) EXPECT_EQ(a.cells[i].ratio, b.cells[i].ratio);
  EXPECT_EQ(a.valid_fraction, b.valid_fraction);
  EXPECT_GT(a.valid_fraction, 0.0);
  EXPECT_LT(a.valid_fraction, 1.0);
}
