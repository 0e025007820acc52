#pragma once

#include <vector>

#include <Eigen/Dense>

#include "hqc/phase_space.hpp"

namespace hqc {

using ComplexMatrix = Eigen::MatrixXcd;
using Amplitudes = Eigen::VectorXcd;

inline constexpr int kMaxQuantumDim = 16;

/// d x d Hermitian, unit-trace density matrix.
///
/// Hermiticity is structural (the lower triangle is mirrored from the upper
/// one on construction) and the trace is checked to 1e-10. Positivity is
/// not enforced: marginals of intermediate hybrid states may legitimately
/// fail it, so use min_eigenvalue() / is_psd() when it matters.
class QuantumDensity {
 public:
  static constexpr double kTraceTolerance = 1e-10;
  static constexpr double kPsdTolerance = 1e-10;

  /// Accepts a matrix Hermitian within hermitian_tol; the stored copy is
  /// made exactly Hermitian from its upper triangle.
  static QuantumDensity from_matrix(const ComplexMatrix& m, double hermitian_tol = 1e-12,
                                    double trace_tol = kTraceTolerance);

  int dim() const { return static_cast<int>(m_.rows()); }
  const ComplexMatrix& matrix() const { return m_; }
  Complex operator()(int i, int j) const { return m_(i, j); }
  double trace() const { return m_.trace().real(); }
  bool is_psd(double tol = kPsdTolerance) const;

 private:
  explicit QuantumDensity(ComplexMatrix m) : m_(std::move(m)) {}
  ComplexMatrix m_;
};

/// Eigenvalues of the measured observable; its eigenbasis is the
/// computational basis.
class MeasuredObservable {
 public:
  explicit MeasuredObservable(std::vector<double> eigenvalues);

  int dim() const { return static_cast<int>(v_.size()); }
  double eigenvalue(int i) const { return v_[static_cast<std::size_t>(i)]; }
  const std::vector<double>& eigenvalues() const { return v_; }
  /// At least two distinct eigenvalues, i.e. the observable can tell states apart.
  bool nontrivial() const;
  double max_gap() const;

 private:
  std::vector<double> v_;
};

QuantumDensity pure_from_amplitudes(const Amplitudes& c);
QuantumDensity diagonal_density(const std::vector<double>& weights);

/// Tr(rho^2).
double purity(const QuantumDensity& rho);

/// -sum lambda ln lambda (natural log). Eigenvalues in [-1e-10, 0) count as
/// zero; anything lower throws std::domain_error.
double von_neumann_entropy(const QuantumDensity& rho);

/// Smallest eigenvalue of a Hermitian matrix (throws std::invalid_argument
/// when the input is not Hermitian within 1e-12).
double min_eigenvalue(const ComplexMatrix& m);

/// Closed form for the 2x2 Hermitian [[a, x], [conj(x), b]].
inline double min_eigenvalue_2x2(double a, double b, Complex x) {
  const double mean = 0.5 * (a + b);
  const double half_gap = 0.5 * (a - b);
  return mean - std::sqrt(half_gap * half_gap + std::norm(x));
}

}  // namespace hqc
