#pragma once

#include <boost/multiprecision/gmp.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

namespace enlarge {

using Rational = boost::multiprecision::mpq_rational;

// Arithmetic policy for the two engine modes. Float mode compares against a
// tolerance; rational mode is exact.
template <typename T>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
  static constexpr bool kExact = false;
  static constexpr double kDefaultTol = 1e-10;
  static double abs(double x) { return std::fabs(x); }
  static double to_double(double x) { return x; }
  static double from_double(double x) { return x; }
  static bool is_zero(double x, double tol) { return std::fabs(x) <= tol; }
  static std::string to_string(double x);
  static double parse(const std::string& s) { return std::stod(s); }
};

template <>
struct ScalarTraits<Rational> {
  static constexpr bool kExact = true;
  static constexpr double kDefaultTol = 0.0;
  static Rational abs(const Rational& x) { return x < 0 ? Rational(-x) : x; }
  static double to_double(const Rational& x) { return x.convert_to<double>(); }
  // Exact binary expansion of the double.
  static Rational from_double(double x) { return Rational(x); }
  static bool is_zero(const Rational& x, double /*tol*/) { return x == 0; }
  static std::string to_string(const Rational& x) { return x.str(); }
  static Rational parse(const std::string& s) { return Rational(s); }
};

template <typename T>
double to_double(const T& x) {
  return ScalarTraits<T>::to_double(x);
}

template <typename T>
T abs_value(const T& x) {
  return ScalarTraits<T>::abs(x);
}

}  // namespace enlarge
