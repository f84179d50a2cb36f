#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "covsync/costmap.hpp"
#include "covsync/covmodel.hpp"
#include "covsync/devpipe.hpp"
#include "covsync/lattice.hpp"
#include "covsync/rng.hpp"

namespace covsync {

// Relative clamp floors for conditional variances and truncated-bin masses.
inline constexpr double kVarianceFloor = 1e-12;
inline constexpr double kProbabilityFloor = 1e-12;

// Local covariance of one coefficient (index 0) and its conditioning
// neighbors: diagonal of variances, off-diagonals rho_kl sigma_k sigma_l,
// PSD-repaired when the sparsified correlations are jointly inconsistent.
struct LocalCovariance {
  Eigen::MatrixXd sigma;
  bool repaired = false;
};

/// Assembles sigma from per-coefficient variances and the pairwise
/// correlation matrix (unit diagonal).  Repair clips negative eigenvalues
/// and rescales so the diagonal is restored exactly.
LocalCovariance build_sigma(const Eigen::VectorXd& variances, const Eigen::MatrixXd& corr);

struct ConditionalGaussian {
  double mean = 0.0;
  double var = 0.0;
};

/// Schur-complement conditioning of coordinate 0 on the (zero-mean) history:
/// mu = S_1H S_HH^-1 h, var = S_11 - S_1H S_HH^-1 S_H1, with var clamped to
/// [kVarianceFloor * S_11, S_11].  A numerically singular history block
/// falls back to dropping the most collinear neighbor.
ConditionalGaussian conditional_gaussian(const LocalCovariance& cov,
                                         const Eigen::VectorXd& history);

/// Integrates N(mean,var) over the three quantization bins
/// ]-inf,-q/2], ]-q/2,q/2], ]q/2,inf[.
TernaryPmf quantized_pmf(const ConditionalGaussian& g, double q);

/// Inverse-CDF draw over the fixed order (-1, 0, +1).
int sample_change(const TernaryPmf& pmf, double u);

/// Draw from N(mean,var) truncated to the bin of `change`; rejection capped
/// at 64 attempts, then an exact inverse-CDF truncated draw.
double sample_latent(const ConditionalGaussian& g, int change, double q, CounterRng& rng);

struct ChangeMap {
  int width = 0;
  int height = 0;
  Eigen::Matrix<std::int8_t, Eigen::Dynamic, 1> change;
  Eigen::VectorXd latent;
};

struct EmbedReport {
  double h_in = 0.0;   // bits/nzAC before synchronization
  double h_out = 0.0;  // bits/nzAC of the realized conditional pmfs
  double lambda = 0.0;
  int nzac = 0;
  std::array<double, 8> lattice_entropy{};  // mean bits/coefficient
  std::array<std::int64_t, 8> lattice_size{};
  std::int64_t n_minus = 0, n_zero = 0, n_plus = 0;
  double runtime_seconds = 0.0;
};

struct EmbedResult {
  ChangeMap changes;
  EmbedReport report;
  std::vector<TernaryPmf> realized;  // conditional pmf actually sampled from
};

/// Lattice-sequential synchronized embedding.  Coefficients with no active
/// conditioning neighbors keep their input pmf bit-exactly (all of lattice 0
/// in particular).  Deterministic for any thread count.
EmbedResult embed_image(const QuantizedDctImage& cover, const PmfMap& pmfs,
                        const Eigen::ArrayXd& variances, const CorrelationModel& model,
                        const NeighborTable& tables, const std::array<std::uint16_t, 64>& qsteps,
                        std::uint64_t seed, int threads = 1);

struct CalibrationResult {
  double h_in = 0.0;
  double h_out = 0.0;
  PmfMap baseline;  // unsynchronized pmfs re-solved at h_out
  EmbedResult synchronized_run;
};

/// Runs synchronized embedding at h_in (bits/nzAC), measures the achievable
/// post-conditioning entropy h_out, and re-solves the unsynchronized
/// probabilities at h_out so both stegos carry the same payload.
CalibrationResult calibrate_payload(const CostMap& costs, const QuantizedDctImage& cover,
                                    const CorrelationModel& model, const NeighborTable& tables,
                                    const std::array<std::uint16_t, 64>& qsteps, double h_in,
                                    std::uint64_t seed, int threads = 1);

/// Stego = cover + changes (saturating at the int16 range).
QuantizedDctImage apply_changes(const QuantizedDctImage& cover, const ChangeMap& changes);

}  // namespace covsync
