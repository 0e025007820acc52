#pragma once

#include <array>
#include <string>

namespace hqc {

/// Real polynomial in (q, p) of total degree at most 4.
///
/// Stored as a dense coefficient table c[a][b] for the monomial q^a p^b.
/// Used both for observables and for classical Hamiltonians; the partial
/// derivatives are exact.
class Polynomial {
 public:
  static constexpr int kMaxDegree = 4;

  Polynomial() = default;

  static Polynomial constant(double c);
  static Polynomial monomial(int q_power, int p_power, double coefficient = 1.0);

  double coefficient(int q_power, int p_power) const;
  void set_coefficient(int q_power, int p_power, double value);

  double operator()(double q, double p) const;
  double d_dq(double q, double p) const;
  double d_dp(double q, double p) const;

  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator*(double s) const;
  friend Polynomial operator*(double s, const Polynomial& f) { return f * s; }

  bool is_zero() const;
  // Every monomial has total degree <= 1, so the Hamiltonian vector field is constant.
  bool is_affine() const;
  int degree() const;
  bool all_finite() const;

  std::string to_string() const;

  bool operator==(const Polynomial&) const = default;

 private:
  static void check_powers(int q_power, int p_power);

  std::array<std::array<double, kMaxDegree + 1>, kMaxDegree + 1> c_{};
};

}  // namespace hqc
