#include "hqc/polynomial.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hqc {

namespace {

double ipow(double x, int n) {
  double r = 1.0;
  for (int k = 0; k < n; ++k) r *= x;
  return r;
}

}  // namespace

void Polynomial::check_powers(int q_power, int p_power) {
  if (q_power < 0 || p_power < 0 || q_power + p_power > kMaxDegree) {
    throw std::invalid_argument("monomial q^" + std::to_string(q_power) + " p^" +
                                std::to_string(p_power) + " exceeds total degree " +
                                std::to_string(kMaxDegree));
  }
}

Polynomial Polynomial::constant(double c) { return monomial(0, 0, c); }

Polynomial Polynomial::monomial(int q_power, int p_power, double coefficient) {
  check_powers(q_power, p_power);
  Polynomial f;
  f.c_[q_power][p_power] = coefficient;
  return f;
}

double Polynomial::coefficient(int q_power, int p_power) const {
  check_powers(q_power, p_power);
  return c_[q_power][p_power];
}

void Polynomial::set_coefficient(int q_power, int p_power, double value) {
  check_powers(q_power, p_power);
  c_[q_power][p_power] = value;
}

double Polynomial::operator()(double q, double p) const {
  double sum = 0.0;
  for (int a = 0; a <= kMaxDegree; ++a) {
    for (int b = 0; a + b <= kMaxDegree; ++b) {
      if (c_[a][b] != 0.0) sum += c_[a][b] * ipow(q, a) * ipow(p, b);
    }
  }
  return sum;
}

double Polynomial::d_dq(double q, double p) const {
  double sum = 0.0;
  for (int a = 1; a <= kMaxDegree; ++a) {
    for (int b = 0; a + b <= kMaxDegree; ++b) {
      if (c_[a][b] != 0.0) sum += c_[a][b] * a * ipow(q, a - 1) * ipow(p, b);
    }
  }
  return sum;
}

double Polynomial::d_dp(double q, double p) const {
  double sum = 0.0;
  for (int a = 0; a <= kMaxDegree; ++a) {
    for (int b = 1; a + b <= kMaxDegree; ++b) {
      if (c_[a][b] != 0.0) sum += c_[a][b] * b * ipow(q, a) * ipow(p, b - 1);
    }
  }
  return sum;
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  Polynomial r = *this;
  for (int a = 0; a <= kMaxDegree; ++a)
    for (int b = 0; a + b <= kMaxDegree; ++b) r.c_[a][b] += other.c_[a][b];
  return r;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial r = *this;
  for (auto& row : r.c_)
    for (auto& v : row) v *= s;
  return r;
}

bool Polynomial::is_zero() const { return degree() < 0; }

bool Polynomial::is_affine() const { return degree() <= 1; }

int Polynomial::degree() const {
  int deg = -1;
  for (int a = 0; a <= kMaxDegree; ++a)
    for (int b = 0; a + b <= kMaxDegree; ++b)
      if (c_[a][b] != 0.0 && a + b > deg) deg = a + b;
  return deg;
}

bool Polynomial::all_finite() const {
  for (const auto& row : c_)
    for (double v : row)
      if (!std::isfinite(v)) return false;
  return true;
}

std::string Polynomial::to_string() const {
  std::ostringstream os;
  os.precision(17);
  bool first = true;
  for (int a = 0; a <= kMaxDegree; ++a) {
    for (int b = 0; a + b <= kMaxDegree; ++b) {
      if (c_[a][b] == 0.0) continue;
      if (!first) os << " + ";
      first = false;
      os << c_[a][b];
      if (a > 0) os << "*q^" << a;
      if (b > 0) os << "*p^" << b;
    }
  }
  if (first) os << "0";
  return os.str();
}

}  // namespace hqc
