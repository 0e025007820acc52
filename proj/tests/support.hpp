#pragma once

#include <cmath>
#include <random>

#include "hqc/collapse.hpp"

namespace hqc_test {

using namespace hqc;

inline std::mt19937& rng() {
  static std::mt19937 gen(20240611u);
  return gen;
}

inline double l2_relative(const RealField& a, const RealField& b) {
  return std::sqrt((a - b).square().sum() / b.square().sum());
}

/// Strictly positive random field with unit mass.
inline ClassicalDensity random_density(const PhaseGrid& g, std::mt19937& gen) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  RealField v(static_cast<Eigen::Index>(g.size()));
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = u(gen);
  return ClassicalDensity::normalized(g, v);
}

inline Amplitudes random_amplitudes(int d, std::mt19937& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  Amplitudes c(d);
  for (int i = 0; i < d; ++i) c[i] = Complex(n(gen), n(gen));
  return c / c.norm();
}

/// Analytic unit-mass Gaussian sampled on the grid (no renormalisation).
inline RealField analytic_gaussian(const PhaseGrid& g, double q0, double p0, double sq, double sp) {
  RealField v(static_cast<Eigen::Index>(g.size()));
  const double norm = 1.0 / (2.0 * M_PI * sq * sp);
  for (int i = 0; i < g.n_q(); ++i) {
    for (int j = 0; j < g.n_p(); ++j) {
      const double a = (g.q(i) - q0) / sq, b = (g.p(j) - p0) / sp;
      v[static_cast<Eigen::Index>(g.index(i, j))] = norm * std::exp(-0.5 * (a * a + b * b));
    }
  }
  return v;
}

/// The two-level pointer scenario: c = (1,1)/sqrt(2), v = +-1, V_cm = p.
inline MeasurementScenario pointer_scenario(double sigma, double q_half, int n_q, double p_half,
                                            int n_p, double dt, double t_final, int cadence = 1) {
  MeasurementScenario s;
  s.amplitudes = Amplitudes::Constant(2, Complex(1.0 / std::sqrt(2.0), 0.0));
  s.observable = MeasuredObservable({1.0, -1.0});
  s.coupling = pointer_coupling_p();
  s.sigma_q = sigma;
  s.sigma_p = sigma;
  s.grid = PhaseGrid(-q_half, q_half, -p_half, p_half, n_q, n_p);
  s.dt = dt;
  s.t_final = t_final;
  s.cadence = cadence;
  return s;
}

}  // namespace hqc_test
