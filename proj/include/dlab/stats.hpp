#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>

#include "dlab/error.hpp"

namespace dlab::stats {

template <typename Scalar>
struct SampleSummary {
  std::size_t n = 0;
  Scalar mean = 0;
  Scalar std = 0;  // n - 1 denominator
};

template <typename Scalar>
struct TestResult {
  Scalar t = 0;
  Scalar df = 0;
  Scalar p_two_sided = 1;
  std::optional<Scalar> d;  // Cohen's d when computed
};

namespace detail {

template <typename Derived>
void require_vector(const Eigen::MatrixBase<Derived>&) {
  static_assert(Derived::IsVectorAtCompileTime || Derived::ColsAtCompileTime == Eigen::Dynamic,
                "stats routines take vectors");
}

template <typename Derived>
typename Derived::Scalar sum_squared_deviation(const Eigen::MatrixBase<Derived>& x, typename Derived::Scalar mean) {
  return (x.array() - mean).square().sum();
}

// Continued fraction for the incomplete beta function (modified Lentz).
template <typename Scalar>
Scalar beta_continued_fraction(Scalar a, Scalar b, Scalar x) {
  constexpr Scalar tiny = std::numeric_limits<Scalar>::min() / std::numeric_limits<Scalar>::epsilon();
  constexpr Scalar eps = std::numeric_limits<Scalar>::epsilon();
  constexpr int max_iterations = 100000;

  const Scalar qab = a + b;
  const Scalar qap = a + 1;
  const Scalar qam = a - 1;
  Scalar c = 1;
  Scalar d = 1 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1 / d;
  Scalar h = d;
  for (int m = 1; m <= max_iterations; ++m) {
    const Scalar m2 = 2 * static_cast<Scalar>(m);
    Scalar aa = static_cast<Scalar>(m) * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1 / d;
    const Scalar delta = d * c;
    h *= delta;
    if (std::abs(delta - 1) <= eps) return h;
  }
  throw DomainError("incomplete beta continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b). `y` must equal 1 - x; passing it separately keeps
/// precision when x is close to 1.
template <typename Scalar>
Scalar regularized_incomplete_beta(Scalar a, Scalar b, Scalar x, Scalar y) {
  if (!(a > 0) || !(b > 0)) throw DomainError("incomplete beta requires a, b > 0");
  if (x < 0 || x > 1) throw DomainError("incomplete beta requires 0 <= x <= 1");
  if (x == 0) return 0;
  if (y == 0) return 1;
  using std::exp;
  using std::lgamma;
  using std::log;
  const Scalar log_front = lgamma(a + b) - lgamma(a) - lgamma(b) + a * log(x) + b * log(y);
  if (x < (a + 1) / (a + b + 2)) return exp(log_front) * detail::beta_continued_fraction(a, b, x) / a;
  return 1 - exp(log_front) * detail::beta_continued_fraction(b, a, y) / b;
}

template <typename Scalar>
Scalar regularized_incomplete_beta(Scalar a, Scalar b, Scalar x) {
  return regularized_incomplete_beta(a, b, x, Scalar(1) - x);
}

/// P(|T| >= |t|) for Student's t with `df` degrees of freedom.
template <typename Scalar>
Scalar t_two_sided_p(Scalar t, Scalar df) {
  if (!(df > 0)) throw DomainError("degrees of freedom must be positive");
  if (std::isnan(t)) throw DomainError("t is NaN");
  if (std::isinf(t)) return 0;
  const Scalar t2 = t * t;
  const Scalar denom = df + t2;
  return std::clamp(regularized_incomplete_beta(df / 2, Scalar(0.5), df / denom, t2 / denom), Scalar(0), Scalar(1));
}

/// Student's t cumulative distribution function.
template <typename Scalar>
Scalar t_cdf(Scalar t, Scalar df) {
  const Scalar tail = t_two_sided_p(t, df) / 2;
  if (t < 0) return tail;
  if (t > 0) return 1 - tail;
  return Scalar(0.5);
}

template <typename Derived>
SampleSummary<typename Derived::Scalar> summarize(const Eigen::MatrixBase<Derived>& x) {
  detail::require_vector(x);
  using Scalar = typename Derived::Scalar;
  const auto n = static_cast<std::size_t>(x.size());
  if (n == 0) throw DomainError("empty sample");
  if (n == 1) throw DomainError("standard deviation undefined for a single observation");
  SampleSummary<Scalar> out;
  out.n = n;
  out.mean = x.sum() / static_cast<Scalar>(n);
  out.std = std::sqrt(detail::sum_squared_deviation(x, out.mean) / static_cast<Scalar>(n - 1));
  return out;
}

/// Paired-samples t test on x - y, df = n - 1.
template <typename DerivedX, typename DerivedY>
TestResult<typename DerivedX::Scalar> paired_t(const Eigen::MatrixBase<DerivedX>& x,
                                               const Eigen::MatrixBase<DerivedY>& y) {
  detail::require_vector(x);
  detail::require_vector(y);
  using Scalar = typename DerivedX::Scalar;
  static_assert(std::is_same_v<Scalar, typename DerivedY::Scalar>, "samples must share a scalar type");
  if (x.size() != y.size())
    throw DomainError("paired samples differ in length (" + std::to_string(x.size()) + " vs " +
                      std::to_string(y.size()) + ")");
  if (x.size() < 2) throw DomainError("paired t test needs at least 2 pairs");

  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> diff = (x - y).eval();
  const auto n = static_cast<Scalar>(diff.size());
  const Scalar mean = diff.sum() / n;
  const Scalar sd = std::sqrt(detail::sum_squared_deviation(diff, mean) / (n - 1));
  const Scalar scale = diff.cwiseAbs().maxCoeff();
  if (!(sd > n * std::numeric_limits<Scalar>::epsilon() * scale)) throw DomainError("degenerate differences");

  TestResult<Scalar> out;
  out.t = mean / (sd / std::sqrt(n));
  out.df = n - 1;
  out.p_two_sided = t_two_sided_p(out.t, out.df);
  return out;
}

/// Cohen's d with the pooled (n - 1 weighted) standard deviation.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar cohens_d(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  const auto sx = summarize(x);
  const auto sy = summarize(y);
  const Scalar n1 = static_cast<Scalar>(sx.n);
  const Scalar n2 = static_cast<Scalar>(sy.n);
  const Scalar pooled =
      std::sqrt(((n1 - 1) * sx.std * sx.std + (n2 - 1) * sy.std * sy.std) / (n1 + n2 - 2));
  if (!(pooled > 0)) throw DomainError("pooled standard deviation is zero");
  return (sx.mean - sy.mean) / pooled;
}

/// Welch's unequal-variance t test with Welch-Satterthwaite df. Fills `d` when the pooled
/// standard deviation is positive.
template <typename DerivedX, typename DerivedY>
TestResult<typename DerivedX::Scalar> welch_t(const Eigen::MatrixBase<DerivedX>& x,
                                              const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  static_assert(std::is_same_v<Scalar, typename DerivedY::Scalar>, "samples must share a scalar type");
  if (x.size() < 2 || y.size() < 2) throw DomainError("Welch t test needs at least 2 observations per sample");
  const auto sx = summarize(x);
  const auto sy = summarize(y);
  const Scalar vx = sx.std * sx.std / static_cast<Scalar>(sx.n);
  const Scalar vy = sy.std * sy.std / static_cast<Scalar>(sy.n);
  if (!(vx + vy > 0)) throw DomainError("both samples have zero variance");

  TestResult<Scalar> out;
  out.t = (sx.mean - sy.mean) / std::sqrt(vx + vy);
  out.df = (vx + vy) * (vx + vy) /
           (vx * vx / static_cast<Scalar>(sx.n - 1) + vy * vy / static_cast<Scalar>(sy.n - 1));
  out.p_two_sided = t_two_sided_p(out.t, out.df);
  out.d = cohens_d(x, y);
  return out;
}

/// "*" p < .05, "**" p < .01, "***" p < .001.
inline std::string significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

}  // namespace dlab::stats
