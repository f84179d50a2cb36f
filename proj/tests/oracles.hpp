#pragma once

// Independent reference implementations used only by tests.  These must not
// share code paths with the library routines they check.

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "covsync/plane.hpp"
#include "covsync/rng.hpp"

namespace oracle {

// Direct O(64^2) type-II orthonormal DCT by the definition sum.
inline covsync::Block8<double> naive_dct(const covsync::Block8<double>& b) {
  const double pi = 3.14159265358979323846;
  covsync::Block8<double> out;
  for (int u = 0; u < 8; ++u) {
    for (int v = 0; v < 8; ++v) {
      double acc = 0.0;
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
          acc += b(i, j) * std::cos((2 * i + 1) * u * pi / 16.0) *
                 std::cos((2 * j + 1) * v * pi / 16.0);
      const double su = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      const double sv = v == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      out(u, v) = su * sv * acc;
    }
  }
  return out;
}

// High-precision bisection for the payload lambda on a small cost set,
// run in long double with a fixed 400-step schedule.
inline long double lambda_bisection(const std::vector<long double>& costs,
                                    long double target_bits) {
  auto entropy = [&](long double lam) {
    long double h = 0.0L;
    for (long double c : costs) {
      const long double e = std::exp(-lam * c);
      const long double z = 1.0L + 2.0L * e;
      const long double p0 = 1.0L / z, pc = e / z;
      auto plp = [](long double p) {
        return p > 0.0L ? -p * std::log2(p) : 0.0L;
      };
      h += plp(p0) + 2.0L * plp(pc);
    }
    return h;
  };
  long double lo = 1e-12L, hi = 1e12L;
  for (int i = 0; i < 400; ++i) {
    const long double mid = 0.5L * (lo + hi);
    (entropy(mid) > target_bits ? lo : hi) = mid;
  }
  return 0.5L * (lo + hi);
}

// Adaptive Simpson quadrature of the N(mean, var) density over [a, b].
inline double gauss_integral(double mean, double sd, double a, double b) {
  auto pdf = [&](double x) {
    const double z = (x - mean) / sd;
    return std::exp(-0.5 * z * z) / (sd * 2.5066282746310002);
  };
  std::function<double(double, double, double, double, double, double, int)> simp =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole,
          int depth) -> double {
    const double mid = 0.5 * (lo + hi);
    const double flm = pdf(0.5 * (lo + mid)), frm = pdf(0.5 * (mid + hi));
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    if (depth > 40 || std::abs(left + right - whole) < 1e-14)
      return left + right + (left + right - whole) / 15.0;
    return simp(lo, mid, flo, flm, fmid, left, depth + 1) +
           simp(mid, hi, fmid, frm, fhi, right, depth + 1);
  };
  const double mid = 0.5 * (a + b);
  const double fa = pdf(a), fm = pdf(mid), fb = pdf(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simp(a, b, fa, fm, fb, whole, 0);
}

// Samples N(0, sigma) via a Cholesky factor of the full covariance.  This is
// the sampling route for the Monte-Carlo conditional-moment oracles; it never
// touches the Schur-complement code under test.
struct MvnSampler {
  Eigen::MatrixXd chol;
  explicit MvnSampler(const Eigen::MatrixXd& sigma)
      : chol(Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL()) {}
  Eigen::VectorXd draw(covsync::CounterRng& rng) const {
    Eigen::VectorXd z(chol.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.next_gaussian();
    return chol * z;
  }
};

// Conditional-moment estimate by rejection on a slab around the history
// point: accepts |x_i - h_i| <= delta for all history coordinates.
struct SlabMoments {
  double mean = 0.0, var = 0.0;
  long accepted = 0;
  double se_mean = 0.0, se_var = 0.0;
};

inline SlabMoments slab_conditional_moments(const Eigen::MatrixXd& sigma,
                                            const Eigen::VectorXd& history, double delta,
                                            long total_draws, std::uint64_t seed) {
  MvnSampler sampler(sigma);
  covsync::CounterRng rng(seed, 0xabcdef);
  double s1 = 0.0, s2 = 0.0;
  long m = 0;
  for (long k = 0; k < total_draws; ++k) {
    const Eigen::VectorXd x = sampler.draw(rng);
    bool ok = true;
    for (Eigen::Index i = 0; i < history.size(); ++i)
      if (std::abs(x[i + 1] - history[i]) > delta) {
        ok = false;
        break;
      }
    if (!ok) continue;
    ++m;
    s1 += x[0];
    s2 += x[0] * x[0];
  }
  SlabMoments out;
  out.accepted = m;
  if (m > 1) {
    out.mean = s1 / m;
    out.var = s2 / m - out.mean * out.mean;
    out.se_mean = std::sqrt(out.var / m);
    out.se_var = out.var * std::sqrt(2.0 / m);
  }
  return out;
}

// Conditional moments by ordinary least squares of x0 on the history
// coordinates over unconditioned draws: for a Gaussian, E[x0|h] is linear in
// h and the residual variance equals the Schur complement.
struct RegressionMoments {
  double mean = 0.0;      // fitted value at the query history
  double var = 0.0;       // residual variance
  double se_mean = 0.0;
  double se_var = 0.0;
};

inline RegressionMoments regression_conditional_moments(const Eigen::MatrixXd& sigma,
                                                        const Eigen::VectorXd& history,
                                                        long draws, std::uint64_t seed) {
  MvnSampler sampler(sigma);
  covsync::CounterRng rng(seed, 0x5eed5);
  const Eigen::Index d = history.size();
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(d + 1, d + 1);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(d + 1);
  double yy = 0.0;
  for (long k = 0; k < draws; ++k) {
    const Eigen::VectorXd x = sampler.draw(rng);
    Eigen::VectorXd f(d + 1);
    f[0] = 1.0;
    f.tail(d) = x.tail(d);
    xtx.noalias() += f * f.transpose();
    xty.noalias() += f * x[0];
    yy += x[0] * x[0];
  }
  const Eigen::VectorXd beta = xtx.ldlt().solve(xty);
  const double rss = yy - beta.dot(xty);
  RegressionMoments out;
  out.var = rss / static_cast<double>(draws - (d + 1));
  Eigen::VectorXd q(d + 1);
  q[0] = 1.0;
  q.tail(d) = history;
  out.mean = beta.dot(q);
  out.se_mean = std::sqrt(out.var * q.dot(xtx.ldlt().solve(q)));
  out.se_var = out.var * std::sqrt(2.0 / static_cast<double>(draws));
  return out;
}

}  // namespace oracle
