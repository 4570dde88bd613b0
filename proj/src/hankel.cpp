#include "enclab/hankel.hpp"

#include <cmath>

#include "enclab/errors.hpp"

namespace enclab {

namespace {

constexpr double kEulerGamma = 0.57721566490153286061;
constexpr int kMaxSeriesTerms = 200;

void check_argument(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw InvalidArgument("Hankel argument must be positive and finite");
}

// Large-argument sum sum_k i^k a_k(nu) / x^k, truncated at its smallest term.
cplx asymptotic_sum(double nu, double x) {
  const double mu = 4.0 * nu * nu;
  cplx sum = 1.0;
  cplx ik = 1.0;
  double term = 1.0;
  double prev = 1.0;
  for (int k = 1; k < 100; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = term * (mu - odd * odd) / (k * 8.0 * x);
    if (std::abs(next) >= prev) break;
    term = next;
    prev = std::abs(term);
    ik *= kI;
    sum += ik * term;
    if (prev < 1e-17) break;
  }
  return sum;
}

}  // namespace

cplx hankel0_series(double x) {
  check_argument(x);
  const double q = 0.25 * x * x;
  double j0 = 0.0, ysum = 0.0;
  double term = 1.0;  // (-q)^k / (k!)^2
  double harmonic = 0.0;
  for (int k = 0; k < kMaxSeriesTerms; ++k) {
    if (k > 0) {
      term *= -q / (static_cast<double>(k) * k);
      harmonic += 1.0 / k;
    }
    j0 += term;
    ysum -= harmonic * term;
    if (std::abs(term) < 1e-18 * std::max(1.0, std::abs(j0)) && k > q) break;
  }
  const double y0 = (2.0 / kPi) * ((std::log(0.5 * x) + kEulerGamma) * j0 + ysum);
  return {j0, y0};
}

cplx hankel1_series(double x) {
  check_argument(x);
  const double q = 0.25 * x * x;
  double jsum = 0.0, ysum = 0.0;
  double term = 1.0;  // (-q)^k / (k! (k+1)!)
  // psi(k+1) + psi(k+2) = 2 H_k + 1/(k+1) - 2 gamma
  double harmonic = 0.0;
  for (int k = 0; k < kMaxSeriesTerms; ++k) {
    if (k > 0) {
      term *= -q / (static_cast<double>(k) * (k + 1));
      harmonic += 1.0 / k;
    }
    jsum += term;
    ysum += (2.0 * harmonic + 1.0 / (k + 1) - 2.0 * kEulerGamma) * term;
    if (std::abs(term) < 1e-18 * std::max(1.0, std::abs(jsum)) && k > q) break;
  }
  const double j1 = 0.5 * x * jsum;
  const double y1 = -2.0 / (kPi * x) + (2.0 / kPi) * std::log(0.5 * x) * j1 - x / (2.0 * kPi) * ysum;
  return {j1, y1};
}

cplx hankel0_asymptotic(double x) {
  check_argument(x);
  const double phase = x - 0.25 * kPi;
  return std::sqrt(2.0 / (kPi * x)) * std::polar(1.0, phase) * asymptotic_sum(0.0, x);
}

cplx hankel1_asymptotic(double x) {
  check_argument(x);
  const double phase = x - 0.75 * kPi;
  return std::sqrt(2.0 / (kPi * x)) * std::polar(1.0, phase) * asymptotic_sum(1.0, x);
}

cplx hankel0(double x) { return x < kHankelSwitch ? hankel0_series(x) : hankel0_asymptotic(x); }

cplx hankel1(double x) { return x < kHankelSwitch ? hankel1_series(x) : hankel1_asymptotic(x); }

cplx helmholtz_green(Vec2 x, Vec2 y, double k) {
  if (!(k > 0.0)) throw InvalidArgument("wavenumber must be positive");
  const double r = norm(x - y);
  return 0.25 * kI * hankel0(k * r);
}

CVec2 helmholtz_green_grad(Vec2 x, Vec2 y, double k) {
  if (!(k > 0.0)) throw InvalidArgument("wavenumber must be positive");
  const Vec2 d = x - y;
  const double r = norm(d);
  // d/dr H0(kr) = -k H1(kr)
  const cplx radial = -0.25 * kI * k * hankel1(k * r);
  return {radial * (d.x / r), radial * (d.y / r)};
}

}  // namespace enclab
