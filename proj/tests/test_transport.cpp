#include <doctest.h>

#include <cmath>
#include <numbers>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "support.hpp"

using namespace hqc;
using hqc_test::analytic_gaussian;
using hqc_test::l2_relative;

namespace {

ClassicalDensity evolve_liouville(ClassicalDensity rho, const ClassicalHamiltonian& h, double dt,
                                  int steps) {
  const LiouvilleSolver solver(rho.grid(), h, dt);
  for (int k = 0; k < steps; ++k) rho = solver.step(rho);
  return rho;
}

}  // namespace

TEST_CASE("transport method selection") {
  const PhaseGrid g(-4, 4, -4, 4, 32, 32);
  CHECK(TransportPlan(g, ClassicalHamiltonian::zero(), 0.1).method() == TransportMethod::kIdentity);
  CHECK(TransportPlan(g, ClassicalHamiltonian::polynomial(Polynomial::constant(3.0)), 0.1).method() ==
        TransportMethod::kIdentity);
  CHECK(TransportPlan(g, ClassicalHamiltonian::linear_p(1.0), 0.1).method() ==
        TransportMethod::kSpectralShift);
  CHECK(TransportPlan(g, ClassicalHamiltonian::harmonic(), 0.1).method() == TransportMethod::kBicubic);
  CHECK(std::string(to_string(TransportMethod::kBicubic)) == "bicubic");
}

TEST_CASE("zero generator leaves the density unchanged exactly") {
  const PhaseGrid g(-5, 5, -5, 5, 64, 64);
  const ClassicalDensity rho = gaussian_state(g, 0.5, -0.5, 0.5, 0.5);
  const ClassicalDensity out = evolve_liouville(rho, ClassicalHamiltonian::zero(), 0.1, 10);
  CHECK((out.values() == rho.values()).all());
}

TEST_CASE("free streaming matches the shifted analytic profile") {
  const PhaseGrid g(-5, 5, -5, 5, 256, 256);
  const ClassicalDensity rho = gaussian_state(g, 0.0, 0.0, 0.5, 0.5);
  const ClassicalDensity out = evolve_liouville(rho, ClassicalHamiltonian::linear_p(1.0), 0.025, 40);
  CHECK(std::abs(mean_observable(Polynomial::monomial(1, 0), out) - 1.0) <= g.dq());
  CHECK(std::abs(mean_observable(Polynomial::monomial(0, 1), out)) <= g.dp());
  CHECK(l2_relative(out.values(), analytic_gaussian(g, 1.0, 0.0, 0.5, 0.5)) <= 1e-3);
  CHECK(std::abs(out.mass() - 1.0) <= 1e-8 * 2.0);
}

TEST_CASE("linear flow in q direction (H = q) moves p backwards") {
  const PhaseGrid g(-4, 4, -4, 4, 128, 128);
  const ClassicalDensity rho = gaussian_state(g, 0.0, 1.0, 0.4, 0.4);
  const auto h = ClassicalHamiltonian::polynomial(Polynomial::monomial(1, 0, 1.0));
  const ClassicalDensity out = evolve_liouville(rho, h, 0.05, 20);
  CHECK(mean_observable(Polynomial::monomial(0, 1), out) == doctest::Approx(0.0).epsilon(1e-9).scale(1));
  CHECK(l2_relative(out.values(), analytic_gaussian(g, 0.0, 0.0, 0.4, 0.4)) <= 1e-2);
}

TEST_CASE("harmonic rotation: quarter period at moderate resolution") {
  const PhaseGrid g(-5, 5, -5, 5, 128, 128);
  const ClassicalDensity rho = gaussian_state(g, 1.5, 0.0, 0.5, 0.5);
  const int steps = 500;
  const double dt = 0.5 * std::numbers::pi / steps;
  const ClassicalDensity out = evolve_liouville(rho, ClassicalHamiltonian::harmonic(), dt, steps);
  // Clockwise rotation: (1.5, 0) -> (0, -1.5) after a quarter period.
  CHECK(l2_relative(out.values(), analytic_gaussian(g, 0.0, -1.5, 0.5, 0.5)) <= 1e-2);
  CHECK(std::abs(out.mass() - 1.0) <= 1e-8 * (1.0 + 0.5 * std::numbers::pi));
  const double l2_0 = quadrature(g, RealField(rho.values().square()));
  const double l2_1 = quadrature(g, RealField(out.values().square()));
  CHECK(std::abs(l2_1 - l2_0) / l2_0 <= 1e-2);
}

TEST_CASE("mass conservation over the Hamiltonian catalog") {
  const PhaseGrid g(-5, 5, -5, 5, 96, 96);
  const std::vector<ClassicalHamiltonian> catalog = {
      ClassicalHamiltonian::linear_p(-0.7),
      ClassicalHamiltonian::harmonic(),
      ClassicalHamiltonian::polynomial(Polynomial::monomial(0, 2, 0.5) + Polynomial::monomial(4, 0, 0.002)),
      ClassicalHamiltonian::polynomial(Polynomial::monomial(0, 2, 0.5) + Polynomial::monomial(2, 0, 0.3) +
                                       Polynomial::monomial(3, 0, 0.01)),
  };
  for (const auto& h : catalog) {
    ClassicalDensity rho = gaussian_state(g, 0.5, 0.3, 0.5, 0.5);
    const double dt = 0.02;
    const LiouvilleSolver solver(g, h, dt);
    for (int k = 1; k <= 50; ++k) {
      rho = solver.step(rho);
      CHECK(std::abs(rho.mass() - 1.0) <= 1e-8 * (1.0 + k * dt));
    }
  }
}

TEST_CASE("mass correction beyond the cap surfaces as a breakdown") {
  // A stretching flow on a coarse grid loses mass faster than the 1e-8 cap
  // allows; the solver must fail rather than renormalise silently.
  const PhaseGrid g(-5, 5, -5, 5, 64, 64);
  ClassicalDensity rho = gaussian_state(g, 0.5, 0.3, 0.5, 0.5);
  const LiouvilleSolver solver(g, ClassicalHamiltonian::polynomial(Polynomial::monomial(1, 1, 0.3)), 0.02);
  CHECK_THROWS_WITH_AS(
      [&] {
        for (int k = 0; k < 50; ++k) rho = solver.step(rho);
      }(),
      doctest::Contains("exceeds cap"), NumericalBreakdown);
  TransportOptions loose;
  loose.mass_correction_cap = 1e-3;
  ClassicalDensity rho2 = gaussian_state(g, 0.5, 0.3, 0.5, 0.5);
  const LiouvilleSolver tolerant(g, ClassicalHamiltonian::polynomial(Polynomial::monomial(1, 1, 0.3)), 0.02,
                                 loose);
  for (int k = 0; k < 50; ++k) rho2 = tolerant.step(rho2);
  CHECK(std::abs(rho2.mass() - 1.0) <= 1e-12);
}

TEST_CASE("Liouville preconditions") {
  const PhaseGrid g(-5, 5, -5, 5, 64, 64);
  const ClassicalDensity rho = gaussian_state(g, 0.0, 0.0, 0.5, 0.5);
  CHECK_THROWS_AS(liouville_step(rho, ClassicalHamiltonian::harmonic(), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(liouville_step(rho, ClassicalHamiltonian::harmonic(), -0.1), std::invalid_argument);
  // max|dH/dp| = 3, dq = 10/64: dt = 0.1 gives q-Courant 1.92.
  CHECK_THROWS_WITH_AS(liouville_step(rho, ClassicalHamiltonian::linear_p(3.0), 0.1),
                       doctest::Contains("q-transport"), std::invalid_argument);
  const auto h = ClassicalHamiltonian::polynomial(Polynomial::monomial(1, 0, 5.0));
  CHECK_THROWS_WITH_AS(liouville_step(rho, h, 0.1), doctest::Contains("p-transport"),
                       std::invalid_argument);
  const CflReport r = transport_cfl(g, ClassicalHamiltonian::linear_p(1.0), 10.0 / 64);
  CHECK(r.q_courant == doctest::Approx(1.0));
  CHECK(r.ok());
}

TEST_CASE("finalize_density_field clamps noise and rejects real negativity") {
  const PhaseGrid g(0, 1, 0, 1, 8, 8);
  const TransportOptions opts;
  ComplexField f = ComplexField::Constant(64, Complex(1.0, 1e-3));
  f[0] = Complex(-1e-14, 0.0);
  const double target = 63.0 / 64.0 * (1.0 + 1e-9);
  finalize_density_field(g, f, target, opts, "test");
  CHECK(f[0] == Complex(0.0, 0.0));
  CHECK((f.imag() == 0.0).all());
  CHECK(quadrature(g, RealField(f.real())) == doctest::Approx(target).epsilon(1e-15));

  ComplexField bad = ComplexField::Constant(64, Complex(1.0, 0.0));
  bad[5] = -1e-6;
  CHECK_THROWS_AS(finalize_density_field(g, bad, 1.0, opts, "test"), NumericalBreakdown);

  ComplexField drift = ComplexField::Constant(64, Complex(1.001, 0.0));
  CHECK_THROWS_WITH_AS(finalize_density_field(g, drift, 1.0, opts, "test"),
                       doctest::Contains("mass drift"), NumericalBreakdown);
}

#ifdef _OPENMP
TEST_CASE("Liouville steps are bit-identical across thread counts") {
  const PhaseGrid g(-5, 5, -5, 5, 96, 96);
  const ClassicalDensity rho = gaussian_state(g, 1.0, 0.0, 0.5, 0.5);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const ClassicalDensity a = evolve_liouville(rho, ClassicalHamiltonian::harmonic(), 0.01, 30);
  const ClassicalDensity a2 = evolve_liouville(rho, ClassicalHamiltonian::linear_p(1.0), 0.01, 30);
  omp_set_num_threads(4);
  const ClassicalDensity b = evolve_liouville(rho, ClassicalHamiltonian::harmonic(), 0.01, 30);
  const ClassicalDensity b2 = evolve_liouville(rho, ClassicalHamiltonian::linear_p(1.0), 0.01, 30);
  omp_set_num_threads(saved);
  CHECK((a.values() == b.values()).all());
  CHECK((a2.values() == b2.values()).all());
}
#endif
