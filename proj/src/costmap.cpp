#include "covsync/costmap.hpp"

#include <cmath>

#include "covsync/error.hpp"
#include "covsync/gauss.hpp"

namespace covsync {

namespace {
constexpr double kLog2 = 0.6931471805599453;
constexpr double kLambdaLo = 1e-8;
constexpr double kLambdaHi = 1e8;
constexpr int kMaxBisect = 200;

inline double plogp_bits(double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; }
}  // namespace

double ternary_entropy(const TernaryPmf& pmf) {
  return plogp_bits(pmf.minus) + plogp_bits(pmf.zero) + plogp_bits(pmf.plus);
}

double CostMap::max_entropy_bits() const {
  return std::log2(3.0) * static_cast<double>(size() - wet_count());
}

CostMap make_unit_costs(int width, int height) {
  CostMap m;
  m.width = width;
  m.height = height;
  const Eigen::Index n = static_cast<Eigen::Index>(width / 8) * (height / 8) * 64;
  m.cost = Eigen::ArrayXd::Ones(n);
  m.wet = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, false);
  return m;
}

CostMap make_qprop_costs(const QuantizedDctImage& cover) {
  CostMap m;
  m.width = cover.width;
  m.height = cover.height;
  const Eigen::Index n = cover.coeff.size();
  m.cost.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) m.cost[i] = cover.qtable[i % kModesPerBlock];
  m.wet = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n, false);
  return m;
}

double total_entropy_bits(const CostMap& costs, double lambda) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < costs.size(); ++i) {
    if (costs.wet[i]) continue;
    const double e = std::exp(-lambda * costs.cost[i]);
    const double z = 1.0 + 2.0 * e;
    const double p0 = 1.0 / z, pc = e / z;
    h += plogp_bits(p0) + 2.0 * plogp_bits(pc);
  }
  return h;
}

PmfMap probabilities_from_costs(const CostMap& costs, double target_bits) {
  const double h_max = costs.max_entropy_bits();
  if (!(target_bits > 0.0)) throw NumericError("infeasible payload: target must be > 0");
  if (target_bits > h_max + 1e-9)
    throw NumericError("infeasible payload: target above log2(3) x non-wet coefficients");

  // Entropy is strictly decreasing in lambda, so plain bisection.  The lower
  // bracket end doubles as the uniform (lambda -> 0) limit.
  double lo = kLambdaLo, hi = kLambdaHi;
  double h_lo = total_entropy_bits(costs, lo);
  double lambda, achieved;
  if (target_bits >= h_lo) {
    lambda = lo;
    achieved = h_lo;
  } else {
    lambda = 0.5 * (lo + hi);
    achieved = h_lo;
    bool converged = false;
    for (int it = 0; it < kMaxBisect; ++it) {
      lambda = 0.5 * (lo + hi);
      achieved = total_entropy_bits(costs, lambda);
      if (std::abs(achieved - target_bits) <= 1e-10 * std::max(1.0, target_bits)) {
        converged = true;
        break;
      }
      (achieved > target_bits ? lo : hi) = lambda;
    }
    if (!converged && std::abs(achieved - target_bits) > 1e-6 * std::max(1.0, target_bits))
      throw NumericError("lambda bisection did not converge");
  }

  PmfMap out;
  out.solution = {lambda, achieved, target_bits};
  out.pmf.resize(static_cast<std::size_t>(costs.size()));
  for (Eigen::Index i = 0; i < costs.size(); ++i) {
    if (costs.wet[i]) {
      out.pmf[i] = TernaryPmf{0.0, 1.0, 0.0};
      continue;
    }
    const double e = std::exp(-lambda * costs.cost[i]);
    const double z = 1.0 + 2.0 * e;
    out.pmf[i] = TernaryPmf{e / z, 1.0 / z, e / z};
  }
  return out;
}

double variance_from_p0(double p0, double q) {
  if (!(p0 > 0.0 && p0 < 1.0)) throw ParameterError("variance_from_p0: p0 must be in (0,1)");
  if (!(q > 0.0)) throw ParameterError("variance_from_p0: q must be > 0");
  const double x = inverse_erf(p0);  // sign inside the paper's erfinv is squared away
  return q * q / (8.0 * x * x);
}

double p0_from_variance(double variance, double q) {
  if (!(variance > 0.0)) throw ParameterError("p0_from_variance: variance must be > 0");
  return std::erf(q / (2.0 * std::sqrt(2.0 * variance)));
}

Eigen::ArrayXd variance_map(const PmfMap& pmfs, const std::array<std::uint16_t, 64>& qsteps) {
  Eigen::ArrayXd var(static_cast<Eigen::Index>(pmfs.pmf.size()));
  for (Eigen::Index i = 0; i < var.size(); ++i) {
    const double p0 = pmfs.pmf[static_cast<std::size_t>(i)].zero;
    var[i] = p0 >= 1.0 ? 0.0 : variance_from_p0(p0, qsteps[i % kModesPerBlock]);
  }
  return var;
}

CostTriplet costs_from_probabilities(const TernaryPmf& pmf) {
  if (!(pmf.zero > 0.0)) throw NumericError("costs_from_probabilities: degenerate pmf, p0 = 0");
  CostTriplet c;
  c.zero = 0.0;
  c.minus = pmf.minus > 0.0 ? std::log(pmf.zero / pmf.minus) : kWetCost;
  c.plus = pmf.plus > 0.0 ? std::log(pmf.zero / pmf.plus) : kWetCost;
  return c;
}

TernaryPmf pmf_from_triplet(const CostTriplet& c, double lambda) {
  const double em = std::exp(-lambda * c.minus);
  const double e0 = std::exp(-lambda * c.zero);
  const double ep = std::exp(-lambda * c.plus);
  const double z = em + e0 + ep;
  return TernaryPmf{em / z, e0 / z, ep / z};
}

}  // namespace covsync
