#include <gtest/gtest.h>

#include <random>

#include "monopole/gauge.hpp"

using namespace monopole;

namespace {

/// Random point strictly inside `patch`, away from the overlap edges and the axis.
Position point_in_patch(std::mt19937_64& gen, Patch patch, const PatchGeometry& geo) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double edge = pi / 2 + (patch == Patch::A ? 1.0 : -1.0) * geo.overlap_half_width;
  double theta;
  if (patch == Patch::A)
    theta = 0.02 + (edge - 0.05 - 0.02) * u(gen);
  else
    theta = edge + 0.05 + (pi - 0.02 - edge - 0.05) * u(gen);
  return Position::from_spherical(std::pow(10.0, 2.0 * u(gen) - 1.0), theta, 2.0 * pi * u(gen));
}

/// Lattice (plaquette-product) flux of the dark-state bundle over a sphere.
/// Link variables are gauge invariant, so the raw dark state can be used.
double lattice_flux(const BeamConfig& beam, double radius, int n_theta, int n_phi) {
  std::vector<std::vector<CVec3>> d(n_theta + 1, std::vector<CVec3>(n_phi));
  for (int i = 0; i <= n_theta; ++i)
    for (int j = 0; j < n_phi; ++j) {
      const double theta = pi * i / n_theta;
      const Position p = Position::from_spherical(radius, theta, (i == 0 || i == n_theta) ? 0.0 : 2 * pi * j / n_phi);
      d[i][j] = eigensystem(beam, NoTrap{}, AtomConfig{}, p, Patch::B).dark;
    }
  auto link = [](const CVec3& a, const CVec3& b) {
    const cplx o = a.dot(b);
    return o / std::abs(o);
  };
  std::vector<double> terms;
  for (int i = 0; i < n_theta; ++i)
    for (int j = 0; j < n_phi; ++j) {
      const int jn = (j + 1) % n_phi;
      // counter-clockwise seen from outside: +θ, then +φ, then −θ, then −φ
      const cplx loop = link(d[i][j], d[i + 1][j]) * link(d[i + 1][j], d[i + 1][jn]) *
                        link(d[i + 1][jn], d[i][jn]) * link(d[i][jn], d[i][j]);
      terms.push_back(std::arg(loop));
    }
  return pairwise_sum(terms);
}

}  // namespace

TEST(ConnectionAnalytic, KnownValues) {
  const BeamConfig beam{1.0, 2, 1.0, 0.0, 0.0};
  const Position eq{1.0, 0.0, 0.0};
  // on the equator: A_a = −(g/2) e_φ / r, A_b = +(g/2) e_φ / r
  EXPECT_NEAR(connection_analytic(beam, eq, Patch::A).y(), -1.0, 1e-15);
  EXPECT_NEAR(connection_analytic(beam, eq, Patch::B).y(), 1.0, 1e-15);
  EXPECT_EQ(connection_analytic(beam, {0, 0, 2}, Patch::A).norm(), 0.0);
  EXPECT_EQ(connection_analytic(beam, {0, 0, -2}, Patch::B).norm(), 0.0);
}

TEST(ConnectionAnalytic, StringsAndExclusion) {
  const BeamConfig beam{1.0, 1, 1.0, 0.0, 0.0};
  EXPECT_THROW(connection_analytic(beam, {0, 0, -1}, Patch::A), OnAxisSingular);
  EXPECT_THROW(connection_analytic(beam, {0, 0, 1}, Patch::B), OnAxisSingular);
  EXPECT_THROW(connection_analytic(beam, {0, 0, 0}, Patch::A), DegeneratePoint);
  const BeamConfig plain{1.0, 0, 1.0, 3.0, 0.0};
  EXPECT_NO_THROW(connection_analytic(plain, {0, 0, -1}, Patch::A));
}

TEST(ConnectionAnalytic, TransitionIsPureGradient) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    const BeamConfig beam{1.0, static_cast<int>(gen() % 7) - 3, 1.0 + 2.0 * u(gen), 0.0, 0.0};
    const Position p = Position::from_spherical(0.1 + u(gen), 0.1 + (pi - 0.2) * u(gen), 2 * pi * u(gen));
    const Vec3 diff = connection_analytic(beam, p, Patch::B) - connection_analytic(beam, p, Patch::A);
    const Vec3 grad = (beam.g / beam.eta) / p.rho() * p.e_phi();
    EXPECT_LE((diff - grad).norm(), 1e-12 * grad.norm() + 1e-14);
  }
}

TEST(ConnectionAnalytic, CurlGivesMonopoleField) {
  const BeamConfig beam{1.0, 3, 1.0, 0.0, 0.0};
  for (Patch patch : {Patch::A, Patch::B}) {
    const Position p = Position::from_spherical(0.7, patch == Patch::A ? 0.6 : 2.4, 1.1);
    auto a = [&](const Vec3& x) { return connection_analytic(beam, Position::from_vec(x), patch); };
    const Vec3 b = curl(a, p.vec(), 1e-3, true);
    EXPECT_LE((b - curvature(beam, p)).norm(), 1e-9 * curvature(beam, p).norm());
  }
}

TEST(ConnectionNumeric, MatchesAnalyticInsidePatches) {
  std::mt19937_64 gen(5);
  const GaugeOptions go;
  for (bool kz : {false, true}) {
    for (Patch patch : {Patch::A, Patch::B}) {
      for (int t = 0; t < 100; ++t) {
        const BeamConfig beam{2.0, static_cast<int>(gen() % 9) - 4, 1.0, kz ? 1.7 : 0.0, 0.0};
        const Position p = point_in_patch(gen, patch, go.geometry);
        NumericDiffOptions nd;
        nd.include_kz = kz;
        const NumericConnection num = connection_numeric(beam, p, patch, nd, go);
        const Vec3 ana = connection_analytic(beam, p, patch, kz, go);
        EXPECT_LE((num.value - ana).norm(), 1e-6 * std::max(ana.norm(), 1.0 / p.r())) << t;
        EXPECT_LE(num.imag_residue, 1e-6 / p.r());
      }
    }
  }
}

TEST(ConnectionNumeric, NoWindingGivesPlaneWaveTerm) {
  const BeamConfig beam{1.0, 0, 1.0, 2.5, 0.0};
  NumericDiffOptions nd;
  nd.include_kz = true;
  const NumericConnection num = connection_numeric(beam, Position::from_spherical(1.0, 1.0, 0.3), Patch::A, nd);
  EXPECT_NEAR(num.value.x(), 0.0, 1e-8);
  EXPECT_NEAR(num.value.y(), 0.0, 1e-8);
  EXPECT_NEAR(num.value.z(), 2.5, 1e-8);
}

TEST(ConnectionNumeric, DeformedCapsMatchAnalytic) {
  const BeamConfig beam{1.0, 3, 2.0, 0.0, 0.0};
  for (Patch patch : {Patch::A, Patch::B}) {
    const Position p = Position::from_spherical(1.3, patch == Patch::A ? 0.8 : 2.2, -2.0);
    const Vec3 num = connection_numeric(beam, p, patch).value;
    const Vec3 ana = connection_analytic(beam, p, patch);
    EXPECT_LE((num - ana).norm(), 1e-6 * ana.norm());
  }
}

TEST(ConnectionNumeric, StencilLeavingCapThrows) {
  const BeamConfig beam{1.0, 1, 1.0, 0.0, 0.0};
  const PatchGeometry geo;
  const Position edge = Position::from_spherical(1.0, pi / 2 + geo.overlap_half_width - 1e-6, 0.3);
  EXPECT_THROW(connection_numeric(beam, edge, Patch::A), PatchBoundary);
  EXPECT_THROW(connection_numeric(beam, {1e-9, 0, 0}, Patch::A), DegeneratePoint);
}

TEST(Curvature, NumericCurlAgrees) {
  const BeamConfig beam{1.0, 2, 1.0, 0.0, 0.0};
  for (Patch patch : {Patch::A, Patch::B}) {
    const Position p = Position::from_spherical(2.0, patch == Patch::A ? 0.9 : 2.3, 0.4);
    const Vec3 num = curvature_numeric(beam, p, patch);
    EXPECT_LE((num - curvature(beam, p)).norm(), 1e-5 * curvature(beam, p).norm());
  }
}

TEST(Curvature, DivergenceFreeAwayFromOrigin) {
  const BeamConfig beam{1.0, 5, 1.0, 0.0, 0.0};
  std::mt19937_64 gen(9);
  for (int t = 0; t < 50; ++t) {
    const Position p = point_in_patch(gen, t % 2 ? Patch::A : Patch::B, PatchGeometry{});
    auto b = [&](const Vec3& x) { return curvature(beam, Position::from_vec(x)); };
    const double scale = curvature(beam, p).norm() / p.r();
    EXPECT_LE(std::abs(divergence(b, p.vec(), 1e-3 * p.r(), true)), 1e-8 * scale);
  }
}

TEST(Flux, ChernEqualsMinusWinding) {
  for (int g : {1, 2, 5, -3}) {
    const BeamConfig beam{1.0, g, 1.0, 0.0, 0.0};
    for (double r : {0.01, 0.1, 1.0, 10.0}) {
      const FluxReport rep = monopole_flux(beam, r);
      EXPECT_NEAR(rep.flux, -2 * pi * g, 1e-10);
      EXPECT_NEAR(rep.chern, -g, 1e-10);
      EXPECT_LE(rep.estimated_error, 1e-10);
    }
  }
}

TEST(Flux, DeformedCapsCarryFractionalCharge) {
  const BeamConfig beam{1.0, 3, 2.0, 0.0, 0.0};
  EXPECT_NEAR(monopole_flux(beam, 1.0).chern, -1.5, 1e-10);
}

TEST(Flux, InvalidRadius) {
  EXPECT_THROW(monopole_flux(BeamConfig{}, 0.0), DomainError);
  EXPECT_THROW(monopole_flux(BeamConfig{}, 1.0, 0), DomainError);
}

// Independent check from the dark states alone.
TEST(Flux, LatticeChernOfDarkStates) {
  for (int g : {1, 2, 5}) {
    const BeamConfig beam{1.0, g, 1.0, 0.0, 0.0};
    EXPECT_NEAR(lattice_flux(beam, 1.0, 40, 40) / (2 * pi), -g, 1e-9);
  }
}

TEST(Holonomy, IntegerWindingForUndeformedCaps) {
  for (int g : {1, 2, 5, -4}) {
    const BeamConfig beam{1.0, g, 1.0, 0.0, 0.0};
    for (double theta : {pi / 2, pi / 2 + 0.1, pi / 2 - 0.2}) {
      EXPECT_NEAR(transition_holonomy(beam, 1.0, theta, 64) / (2 * pi), g, 1e-12);
    }
    EXPECT_EQ(quantization_check(g, 1.0), Quantization::Quantized);
  }
}

TEST(Holonomy, DeformedCapsLeaveUnremovablePhase) {
  const BeamConfig beam{1.0, 3, 2.0, 0.0, 0.0};
  EXPECT_NEAR(transition_holonomy(beam, 2.0, pi / 2, 64), 3 * pi, 1e-12);
  EXPECT_EQ(quantization_check(3, 2.0), Quantization::NotQuantized);
  EXPECT_EQ(quantization_check(4, 2.0), Quantization::Quantized);
}

TEST(Holonomy, OutsideOverlapRejected) {
  EXPECT_THROW(transition_holonomy(BeamConfig{}, 1.0, 0.3, 64), DomainError);
}
