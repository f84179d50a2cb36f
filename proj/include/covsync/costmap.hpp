#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "covsync/devpipe.hpp"

namespace covsync {

/// Costs at or above this value mark a coefficient as wet (never modified).
inline constexpr double kWetCost = 1e10;

struct TernaryPmf {
  double minus = 0.0;
  double zero = 1.0;
  double plus = 0.0;
};

/// -sum p log2 p with 0 log 0 = 0.
double ternary_entropy(const TernaryPmf& pmf);

// Per-coefficient symmetric embedding costs (c^-1 = c^+1, c^0 = 0).
struct CostMap {
  int width = 0;
  int height = 0;
  Eigen::ArrayXd cost;                          // cost of a +/-1 change
  Eigen::Array<bool, Eigen::Dynamic, 1> wet;

  Eigen::Index size() const { return cost.size(); }
  Eigen::Index wet_count() const { return wet.count(); }
  /// log2(3) * number of non-wet coefficients.
  double max_entropy_bits() const;
};

CostMap make_unit_costs(int width, int height);
CostMap make_qprop_costs(const QuantizedDctImage& cover);

struct LambdaSolution {
  double lambda = 0.0;
  double achieved_bits = 0.0;
  double target_bits = 0.0;
};

struct PmfMap {
  std::vector<TernaryPmf> pmf;
  LambdaSolution solution;
};

/// Total ternary entropy (bits) of the Boltzmann pmfs at a given lambda;
/// wet coefficients contribute zero.
double total_entropy_bits(const CostMap& costs, double lambda);

/// Solves the payload constraint by bisection on lambda and returns the
/// per-coefficient pmfs P(k) proportional to exp(-lambda c^k).
PmfMap probabilities_from_costs(const CostMap& costs, double target_bits);

/// Implicit Gaussian variance of a ternary pmf with zero-change mass p0 and
/// quantization step q: sigma^2 = q^2 / (8 erfinv(p0)^2).
double variance_from_p0(double p0, double q);

/// Zero-change mass of a centered Gaussian quantized into the three bins:
/// p0 = erf(q / (2 sqrt(2) sigma)); exact inverse of variance_from_p0.
double p0_from_variance(double variance, double q);

/// Per-coefficient implicit variances; zero for wet or p0 = 1 coefficients.
Eigen::ArrayXd variance_map(const PmfMap& pmfs, const std::array<std::uint16_t, 64>& qsteps);

struct CostTriplet {
  double minus = 0.0;
  double zero = 0.0;
  double plus = 0.0;
};

/// c^k = ln(p0 / pk); zero-probability changes map to the wet cost.
CostTriplet costs_from_probabilities(const TernaryPmf& pmf);

/// Eq.-style Boltzmann pmf of one cost triplet at a given lambda.
TernaryPmf pmf_from_triplet(const CostTriplet& c, double lambda);

}  // namespace covsync
