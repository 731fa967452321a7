#include <gtest/gtest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "monopole/fields.hpp"
#include "monopole/numerics.hpp"

using namespace monopole;

namespace {

Position random_position(std::mt19937_64& gen, double scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Position p{scale * u(gen), scale * u(gen), scale * u(gen)};
  return p;
}

}  // namespace

TEST(Position, DerivedCoordinatesAreConsistent) {
  const Position p{0.3, -0.4, 1.2};
  EXPECT_NEAR(p.rho(), 0.5, 1e-15);
  EXPECT_NEAR(p.r(), 1.3, 1e-15);
  const Position q = Position::from_spherical(p.r(), p.theta(), p.phi());
  EXPECT_NEAR(q.x, p.x, 1e-14);
  EXPECT_NEAR(q.y, p.y, 1e-14);
  EXPECT_NEAR(q.z, p.z, 1e-14);
  EXPECT_EQ((Position{0, 0, -2}.phi()), 0.0);
  EXPECT_NEAR((Position{0, 0, -2}.theta()), pi, 1e-15);
}

TEST(Rabi, ProbeOnlyOnPositiveAxis) {
  const BeamConfig beam{1.0, 1, 1.0, 0.0, 0.0};
  const RabiFields rf = rabi_at(beam, {0, 0, 1});
  EXPECT_NEAR(rf.probe.real(), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(rf.probe.imag(), 0.0, 1e-15);
  EXPECT_EQ(std::abs(rf.control), 0.0);
}

TEST(Rabi, VanishesAtOrigin) {
  const BeamConfig beam{3.0, 2, 1.0, 7.0, 0.5};
  const RabiFields rf = rabi_at(beam, {0, 0, 0});
  EXPECT_EQ(std::abs(rf.probe), 0.0);
  EXPECT_EQ(std::abs(rf.control), 0.0);
}

TEST(Rabi, EquatorialPointPhases) {
  const BeamConfig beam{2.0, 3, 1.0, 5.0, 0.0};
  const RabiFields rf = rabi_at(beam, {1, 0, 0});
  EXPECT_NEAR(std::abs(rf.probe), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(std::abs(rf.control), std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(std::arg(rf.probe), 0.0, 1e-15);
  EXPECT_NEAR(std::arg(rf.control), 0.0, 1e-15);
}

TEST(Rabi, IntensitiesFollowProfilesIncludingEta) {
  const BeamConfig beam{1.7, 2, 2.5, 3.0, 0.0};
  const Position p{0.2, 0.7, -0.4};
  const RabiFields rf = rabi_at(beam, p);
  EXPECT_NEAR(std::norm(rf.probe), beam.xi * (p.r() + p.z), 1e-14);
  EXPECT_NEAR(std::norm(rf.control), beam.xi * ((2 * beam.eta - 1) * p.r() - p.z), 1e-14);
  EXPECT_NEAR(std::remainder(std::arg(rf.probe) - (beam.k * p.z + beam.g * p.phi()), 2 * pi), 0.0, 1e-14);
  EXPECT_NEAR(std::remainder(std::arg(rf.control) - beam.k * p.z, 2 * pi), 0.0, 1e-14);
}

TEST(Hamiltonian, ZeroCouplingIsZeroMatrix) {
  const BeamConfig beam{0.0, 1, 1.0, 0.0, 0.0};
  EXPECT_EQ(local_hamiltonian(beam, 0.0, {1, 2, 3}).norm(), 0.0);
}

TEST(Hamiltonian, IsHermitianWithExpectedLayout) {
  const BeamConfig beam{1.3, -2, 1.0, 4.0, 0.7};
  const Mat3c h = local_hamiltonian(beam, 0.25, {0.1, -0.3, 0.2});
  EXPECT_EQ((h - h.adjoint()).norm(), 0.0);
  EXPECT_EQ(h(0, 0), cplx(0.25));
  EXPECT_EQ(h(1, 1), cplx(0.25));
  EXPECT_EQ(h(2, 2), cplx(0.7));
  EXPECT_EQ(h(0, 1), cplx(0.0));
}

TEST(Hamiltonian, UnitCouplingsGiveRootTwoSpectrum) {
  Mat3c h = Mat3c::Zero();
  h(2, 0) = h(0, 2) = 1.0;
  h(2, 1) = h(1, 2) = 1.0;
  Eigen::SelfAdjointEigenSolver<Mat3c> es(h);
  EXPECT_NEAR(es.eigenvalues()(0), -std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(es.eigenvalues()(1), 0.0, 1e-14);
  EXPECT_NEAR(es.eigenvalues()(2), std::sqrt(2.0), 1e-14);
  const EigenFrame f = eigensystem(h, BeamConfig{}, {1, 0, 0}, Patch::B);
  EXPECT_NEAR(f.e_plus, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(f.e_minus, -std::sqrt(2.0), 1e-15);
  EXPECT_EQ(f.e0, 0.0);
}

TEST(Eigensystem, ProbeOffMeansDarkIsLevelOne) {
  const BeamConfig beam{1.0, 1, 1.0, 0.0, 0.0};
  // on the negative z axis |Ω_p|² = ξ(r + z) = 0
  const EigenFrame f = eigensystem(beam, NoTrap{}, AtomConfig{}, {0, 0, -2}, Patch::B);
  EXPECT_NEAR(std::abs(f.dark(0)), 1.0, 1e-15);
  EXPECT_EQ(std::abs(f.dark(1)), 0.0);
  EXPECT_EQ(std::abs(f.dark(2)), 0.0);
}

TEST(Eigensystem, OriginIsDegenerate) {
  const BeamConfig beam{1.0, 1, 1.0, 0.0, 0.0};
  EXPECT_THROW(eigensystem(beam, NoTrap{}, AtomConfig{}, {0, 0, 0}, Patch::A), DegeneratePoint);
  EXPECT_THROW(eigensystem(beam, NoTrap{}, AtomConfig{}, {1e-10, 0, 0}, Patch::A), DegeneratePoint);
  EXPECT_NO_THROW(eigensystem(beam, NoTrap{}, AtomConfig{}, {1e-10, 0, 0}, Patch::A, FieldOptions{1e-12}));
}

// Closed-form eigenvalues against an independent numerical diagonalization.
TEST(Eigensystem, ClosedFormMatchesNumericalDiagonalization) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    BeamConfig beam;
    beam.xi = std::pow(10.0, 4 * u(gen) - 2);
    beam.g = static_cast<int>(gen() % 11) - 5;
    beam.eta = 1.0 + 3.0 * u(gen) * (trial % 2);
    beam.k = 10.0 * (u(gen) - 0.5);
    beam.delta = 20.0 * (u(gen) - 0.5);
    const Position p = random_position(gen, 2.0);
    const double v = 10.0 * (u(gen) - 0.3);
    const Mat3c h = local_hamiltonian(beam, v, p);
    const EigenFrame f = eigensystem(h, beam, p, trial % 3 ? Patch::A : Patch::B);
    Eigen::SelfAdjointEigenSolver<Mat3c> es(h);
    const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
    std::array<double, 3> mine{f.e_minus, f.e0, f.e_plus};
    std::sort(mine.begin(), mine.end());
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(mine[i], es.eigenvalues()(i), 1e-12 * scale);
    EXPECT_NEAR(f.dark.norm(), 1.0, 1e-12);
    EXPECT_LE((h * f.dark - f.e0 * f.dark).norm(), 1e-10 * scale);
    EXPECT_EQ(f.dark(2), cplx(0.0));
    EXPECT_NEAR((f.dark.adjoint() * h * f.dark)(0).real(), v, 1e-12 * scale);
  }
}

TEST(Eigensystem, ZeroDetuningSymmetricGap) {
  const BeamConfig beam{2.0, 1, 1.0, 0.0, 0.0};
  const Position p{1, 0, 0};  // |Ω_p| = |Ω_c| = sqrt(2)
  const EigenFrame f = eigensystem(beam, NoTrap{}, AtomConfig{}, p, Patch::A);
  EXPECT_NEAR(f.e_plus, 2.0, 1e-14);
  EXPECT_NEAR(f.e_minus, -2.0, 1e-14);
  EXPECT_EQ(f.e0, 0.0);
  EXPECT_NEAR(f.gap_plus, 2.0, 1e-14);
  EXPECT_NEAR(f.gap_minus, 2.0, 1e-14);
}

// On the overlap the two sections differ by the winding e^{igφ}.
TEST(Eigensystem, PatchSectionsDifferByWinding) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const PatchGeometry geo;
  for (int trial = 0; trial < 500; ++trial) {
    BeamConfig beam{1.5, static_cast<int>(gen() % 9) - 4, 1.0, 3.0, 0.2};
    const double theta = pi / 2 + (2 * u(gen) - 1) * 0.99 * geo.overlap_half_width;
    const Position p = Position::from_spherical(0.5 + u(gen), theta, 2 * pi * u(gen));
    const EigenFrame a = eigensystem(beam, NoTrap{}, AtomConfig{}, p, Patch::A);
    const EigenFrame b = eigensystem(beam, NoTrap{}, AtomConfig{}, p, Patch::B);
    const cplx winding = std::polar(1.0, beam.g * p.phi());
    EXPECT_LE((b.dark - a.dark * winding).norm(), 1e-12);
  }
}

// Each section is smooth inside its cap: central differences converge at order h².
TEST(Eigensystem, SectionDerivativeConvergesQuadratically) {
  const BeamConfig beam{1.0, 2, 1.0, 0.0, 0.0};
  const Position p = Position::from_spherical(1.0, pi / 3, 0.7);
  for (Patch patch : {Patch::A, Patch::B}) {
    auto dark = [&](const Vec3& x) {
      return eigensystem(beam, NoTrap{}, AtomConfig{}, Position::from_vec(x), patch).dark;
    };
    const Vec3 dir = Vec3(1, 2, -1).normalized();
    const CVec3 exact = central_derivative(dark, p.vec(), dir, 1e-3, true);
    const double e1 = (central_derivative(dark, p.vec(), dir, 4e-2, false) - exact).norm();
    const double e2 = (central_derivative(dark, p.vec(), dir, 2e-2, false) - exact).norm();
    const double e3 = (central_derivative(dark, p.vec(), dir, 1e-2, false) - exact).norm();
    EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.1);
    EXPECT_NEAR(std::log2(e2 / e3), 2.0, 0.1);
  }
}

TEST(Trap, HarmonicPotentialValue) {
  const HarmonicTrap h{2.0, 3.0, 0.5};
  const AtomConfig atom{4.0, 0.0};
  const double v = trap_potential(h, atom, Position::from_cylindrical(0.25, 1.0, 1.5));
  EXPECT_NEAR(v, 0.5 * 4.0 * (9.0 * 1.0 + 4.0 * 0.0625), 1e-14);
  EXPECT_THROW((HarmonicTrap{0.0, 1.0, 1.0}.validate()), DomainError);
}
