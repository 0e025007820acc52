#include "hqc/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hqc {

namespace {

double hermitian_defect(const ComplexMatrix& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

ComplexMatrix mirrored_upper(const ComplexMatrix& m) {
  ComplexMatrix h = m;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    h(i, i) = Complex(m(i, i).real(), 0.0);
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) h(j, i) = std::conj(m(i, j));
  }
  return h;
}

}  // namespace

QuantumDensity QuantumDensity::from_matrix(const ComplexMatrix& m, double hermitian_tol,
                                           double trace_tol) {
  if (m.rows() != m.cols() || m.rows() < 1 || m.rows() > kMaxQuantumDim) {
    throw std::invalid_argument("density matrix must be square with 1 <= d <= 16");
  }
  if (!m.allFinite()) throw std::invalid_argument("density matrix has non-finite entries");
  if (hermitian_defect(m) > hermitian_tol) {
    throw std::invalid_argument("density matrix is not Hermitian");
  }
  ComplexMatrix h = mirrored_upper(m);
  const double tr = h.trace().real();
  if (std::abs(tr - 1.0) > trace_tol) {
    std::ostringstream os;
    os << "density matrix trace " << tr << " is not 1";
    throw std::invalid_argument(os.str());
  }
  return QuantumDensity(std::move(h));
}

bool QuantumDensity::is_psd(double tol) const { return min_eigenvalue(m_) >= -tol; }

MeasuredObservable::MeasuredObservable(std::vector<double> eigenvalues) : v_(std::move(eigenvalues)) {
  if (v_.empty() || static_cast<int>(v_.size()) > kMaxQuantumDim) {
    throw std::invalid_argument("observable dimension must be in [1, 16]");
  }
  for (double v : v_) {
    if (!std::isfinite(v)) throw std::invalid_argument("observable eigenvalues must be finite");
  }
}

bool MeasuredObservable::nontrivial() const { return max_gap() > 0.0; }

double MeasuredObservable::max_gap() const {
  const auto [lo, hi] = std::minmax_element(v_.begin(), v_.end());
  return *hi - *lo;
}

QuantumDensity pure_from_amplitudes(const Amplitudes& c) {
  if (c.size() < 1 || c.size() > kMaxQuantumDim) {
    throw std::invalid_argument("amplitude vector must have 1..16 entries");
  }
  if (!c.allFinite()) throw std::invalid_argument("amplitudes must be finite");
  const double norm2 = c.squaredNorm();
  if (!(norm2 > 0.0)) throw std::invalid_argument("amplitude vector is zero");
  const Eigen::Index d = c.size();
  ComplexMatrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    m(i, i) = Complex(std::norm(c[i]) / norm2, 0.0);
    for (Eigen::Index j = i + 1; j < d; ++j) {
      m(i, j) = c[i] * std::conj(c[j]) / norm2;
      m(j, i) = std::conj(m(i, j));
    }
  }
  return QuantumDensity::from_matrix(m);
}

QuantumDensity diagonal_density(const std::vector<double>& weights) {
  ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(weights.size()),
                                        static_cast<Eigen::Index>(weights.size()));
  for (std::size_t i = 0; i < weights.size(); ++i) {
    m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = weights[i];
  }
  return QuantumDensity::from_matrix(m);
}

double purity(const QuantumDensity& rho) {
  // Tr(rho^2) = sum_ij |rho_ij|^2 for Hermitian rho.
  return rho.matrix().cwiseAbs2().sum();
}

double von_neumann_entropy(const QuantumDensity& rho) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho.matrix(), Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const double lambda = es.eigenvalues()[k];
    if (lambda < -QuantumDensity::kPsdTolerance) {
      std::ostringstream os;
      os << "invalid state: eigenvalue " << lambda << " below -1e-10";
      throw std::domain_error(os.str());
    }
    if (lambda > 0.0) s -= lambda * std::log(lambda);
  }
  return s;
}

double min_eigenvalue(const ComplexMatrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1) throw std::invalid_argument("matrix must be square");
  if (hermitian_defect(m) > 1e-12) throw std::invalid_argument("matrix is not Hermitian");
  if (m.rows() == 1) return m(0, 0).real();
  if (m.rows() == 2) return min_eigenvalue_2x2(m(0, 0).real(), m(1, 1).real(), m(0, 1));
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace hqc
