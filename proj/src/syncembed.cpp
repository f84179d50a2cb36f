#include "covsync/syncembed.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "covsync/error.hpp"
#include "covsync/gauss.hpp"

namespace covsync {

namespace {

constexpr std::uint64_t kEmbedDomain = 0x656d6264u;  // per-coefficient stream tag

// Simple deterministic range splitter; chunk boundaries do not affect
// results because every coefficient owns its RNG stream and output slot.
template <typename Fn>
void parallel_ranges(std::size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 128) {
    fn(std::size_t{0}, n);
    return;
  }
  const std::size_t nt = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  const std::size_t chunk = (n + nt - 1) / nt;
  for (std::size_t t = 0; t < nt; ++t) {
    const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

LocalCovariance build_sigma(const Eigen::VectorXd& variances, const Eigen::MatrixXd& corr) {
  const Eigen::Index n = variances.size();
  if (corr.rows() != n || corr.cols() != n)
    throw ParameterError("build_sigma: correlation matrix does not match variance count");

  Eigen::VectorXd sd = variances.cwiseMax(0.0).cwiseSqrt();
  LocalCovariance out;
  out.sigma = (sd * sd.transpose()).cwiseProduct(corr);
  out.sigma.diagonal() = variances;
  if (n == 1) return out;

  Eigen::LLT<Eigen::MatrixXd> llt(out.sigma);
  if (llt.info() == Eigen::Success) return out;

  // Clip eigenvalues, then rescale off-diagonals so the diagonal (the
  // marginal variances) is restored exactly; congruence keeps PSD.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.sigma);
  const double eps = 1e-9 * out.sigma.diagonal().maxCoeff();
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(eps);
  Eigen::MatrixXd repaired =
      es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  Eigen::VectorXd scale(n);
  for (Eigen::Index i = 0; i < n; ++i)
    scale[i] = repaired(i, i) > 0.0 ? std::sqrt(variances[i] / repaired(i, i)) : 0.0;
  out.sigma = (scale * scale.transpose()).cwiseProduct(repaired);
  out.sigma.diagonal() = variances;
  out.repaired = true;
  return out;
}

namespace {

std::optional<ConditionalGaussian> try_condition(const Eigen::MatrixXd& sigma,
                                                 const Eigen::VectorXd& history) {
  const Eigen::Index m = history.size();
  const Eigen::MatrixXd shh = sigma.block(1, 1, m, m);
  Eigen::LLT<Eigen::MatrixXd> llt(shh);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXd s1h = sigma.block(1, 0, m, 1);
  const Eigen::VectorXd w = llt.solve(s1h);
  if (!w.allFinite()) return std::nullopt;
  ConditionalGaussian g;
  g.mean = w.dot(history);
  g.var = sigma(0, 0) - w.dot(s1h);
  return g;
}

}  // namespace

ConditionalGaussian conditional_gaussian(const LocalCovariance& cov,
                                         const Eigen::VectorXd& history) {
  const Eigen::Index n = cov.sigma.rows();
  if (history.size() != n - 1)
    throw ParameterError("conditional_gaussian: history length must be n-1");
  const double marginal = cov.sigma(0, 0);
  if (n == 1) return {0.0, marginal};

  Eigen::MatrixXd sigma = cov.sigma;
  Eigen::VectorXd h = history;
  while (true) {
    if (auto g = try_condition(sigma, h)) {
      g->var = std::min(std::max(g->var, kVarianceFloor * marginal), marginal);
      return *g;
    }
    const Eigen::Index m = h.size();
    if (m <= 1) return {0.0, marginal};
    // Drop the most collinear history member: largest absolute off-diagonal
    // correlation within the history block (later index on ties).
    Eigen::Index drop = m;
    double best = -1.0;
    for (Eigen::Index i = 1; i <= m; ++i)
      for (Eigen::Index j = i + 1; j <= m; ++j) {
        const double denom = std::sqrt(sigma(i, i) * sigma(j, j));
        const double r = denom > 0.0 ? std::abs(sigma(i, j)) / denom : 1.0;
        if (r >= best) {
          best = r;
          drop = j;
        }
      }
    Eigen::MatrixXd reduced(sigma.rows() - 1, sigma.cols() - 1);
    Eigen::VectorXd hr(m - 1);
    Eigen::Index ri = 0;
    for (Eigen::Index i = 0; i <= m; ++i) {
      if (i == drop) continue;
      if (i > 0) hr[ri - 1] = h[i - 1];
      Eigen::Index rj = 0;
      for (Eigen::Index j = 0; j <= m; ++j) {
        if (j == drop) continue;
        reduced(ri, rj++) = sigma(i, j);
      }
      ++ri;
    }
    sigma.swap(reduced);
    h.swap(hr);
  }
}

TernaryPmf quantized_pmf(const ConditionalGaussian& g, double q) {
  if (!(g.var > 0.0)) throw ParameterError("quantized_pmf: variance must be > 0");
  const double sd = std::sqrt(g.var);
  const double lo = (-0.5 * q - g.mean) / sd;
  const double hi = (0.5 * q - g.mean) / sd;
  TernaryPmf pmf;
  pmf.minus = normal_cdf(lo);
  pmf.plus = normal_sf(hi);
  pmf.zero = 1.0 - pmf.minus - pmf.plus;
  if (pmf.zero < 0.0) pmf.zero = 0.0;
  return pmf;
}

int sample_change(const TernaryPmf& pmf, double u) {
  if (u < pmf.minus) return -1;
  if (u < pmf.minus + pmf.zero) return 0;
  return +1;
}

namespace {

// Inverse-CDF draw from the standard normal truncated to [alpha, inf),
// stable for far tails via the survival function.
double truncated_upper_std(double alpha, double u) {
  const double tail = normal_sf(alpha);
  if (tail <= 0.0) return alpha;  // beyond double support; clamp to the edge
  double z = -normal_quantile(std::max(tail * (1.0 - u), 1e-300));
  return std::max(z, alpha);
}

}  // namespace

double sample_latent(const ConditionalGaussian& g, int change, double q, CounterRng& rng) {
  const double sd = std::sqrt(g.var);
  const double lo_edge = -0.5 * q, hi_edge = 0.5 * q;
  auto in_bin = [&](double x) {
    if (change == -1) return x <= lo_edge;
    if (change == 0) return x > lo_edge && x <= hi_edge;
    return x > hi_edge;
  };

  for (int attempt = 0; attempt < 64; ++attempt) {
    const double x = g.mean + sd * rng.next_gaussian();
    if (in_bin(x)) return x;
  }

  // Exact truncated draw (distributionally identical to accepted rejections).
  const double u = rng.next_unit_open();
  double x;
  if (change == +1) {
    x = g.mean + sd * truncated_upper_std((hi_edge - g.mean) / sd, u);
    if (!(x > hi_edge)) x = std::nextafter(hi_edge, hi_edge + 1.0);
  } else if (change == -1) {
    x = g.mean - sd * truncated_upper_std((g.mean - lo_edge) / sd, u);
    if (!(x <= lo_edge)) x = lo_edge;
  } else {
    const double a = normal_cdf((lo_edge - g.mean) / sd);
    const double b = normal_cdf((hi_edge - g.mean) / sd);
    const double v = a + u * (b - a);
    x = g.mean + sd * normal_quantile(std::min(std::max(v, 1e-300), 1.0 - 1e-16));
    if (!(x > lo_edge)) x = std::nextafter(lo_edge, hi_edge);
    if (!(x <= hi_edge)) x = hi_edge;
  }
  return x;
}

EmbedResult embed_image(const QuantizedDctImage& cover, const PmfMap& pmfs,
                        const Eigen::ArrayXd& variances, const CorrelationModel& model,
                        const NeighborTable& tables, const std::array<std::uint16_t, 64>& qsteps,
                        std::uint64_t seed, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index n = cover.coeff.size();
  if (static_cast<Eigen::Index>(pmfs.pmf.size()) != n || variances.size() != n)
    throw StateError("embed_image: pmf/variance maps do not match the cover");

  Schedule schedule(cover.blocks_w(), cover.blocks_h(), tables);

  EmbedResult res;
  res.changes.width = cover.width;
  res.changes.height = cover.height;
  res.changes.change.setZero(n);
  res.changes.latent.setZero(n);
  res.realized.assign(static_cast<std::size_t>(n), TernaryPmf{});
  Eigen::VectorXd entropy = Eigen::VectorXd::Zero(n);
  std::vector<std::uint8_t> done(static_cast<std::size_t>(n), 0);

  for (LatticeId id = 0; id < 8; ++id) {
    const auto& members = schedule.lattice_members(id);
    parallel_ranges(members.size(), threads, [&](std::size_t lo, std::size_t hi) {
      std::vector<Schedule::Neighbor> nb;
      std::vector<Schedule::Neighbor> active;
      for (std::size_t k = lo; k < hi; ++k) {
        const int linear = members[k];
        const TernaryPmf& input = pmfs.pmf[static_cast<std::size_t>(linear)];
        const double q = qsteps[linear % kModesPerBlock];

        if (!(variances[linear] > 0.0)) {
          // wet or p0 = 1: never modified, contributes no entropy
          res.realized[static_cast<std::size_t>(linear)] = input;
          done[static_cast<std::size_t>(linear)] = 1;
          continue;
        }

        schedule.gather_neighbors(linear, nb);
        active.clear();
        for (const auto& cand : nb)
          if (variances[cand.linear] > 0.0) active.push_back(cand);

        ConditionalGaussian g{0.0, variances[linear]};
        TernaryPmf out_pmf;
        if (active.empty()) {
          out_pmf = input;  // no conditioning: keep the input pmf bit-exactly
        } else {
          const Eigen::Index m = static_cast<Eigen::Index>(active.size());
          Eigen::VectorXd var(m + 1);
          Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(m + 1, m + 1);
          Eigen::VectorXd history(m);
          var[0] = variances[linear];
          const int mode0 = linear % kModesPerBlock;
          for (Eigen::Index i = 0; i < m; ++i) {
            const auto& ni = active[static_cast<std::size_t>(i)];
            if (!done[static_cast<std::size_t>(ni.linear)])
              throw StateError("embed_image: schedule violation, neighbor not yet embedded");
            var[i + 1] = variances[ni.linear];
            history[i] = res.changes.latent[ni.linear];
            corr(0, i + 1) = corr(i + 1, 0) = model.rho(ni.dy, ni.dx, mode0, ni.mode);
            for (Eigen::Index j = 0; j < i; ++j) {
              const auto& nj = active[static_cast<std::size_t>(j)];
              const double r = model.rho(nj.dy - ni.dy, nj.dx - ni.dx, ni.mode, nj.mode);
              corr(i + 1, j + 1) = corr(j + 1, i + 1) = r;
            }
          }
          const LocalCovariance local = build_sigma(var, corr);
          g = conditional_gaussian(local, history);
          out_pmf = quantized_pmf(g, q);
        }

        CounterRng rng(derive_stream(seed, kEmbedDomain),
                       static_cast<std::uint64_t>(linear));
        const int change = sample_change(out_pmf, rng.next_unit());
        const double latent = sample_latent(g, change, q, rng);

        res.realized[static_cast<std::size_t>(linear)] = out_pmf;
        res.changes.change[linear] = static_cast<std::int8_t>(change);
        res.changes.latent[linear] = latent;
        entropy[linear] = ternary_entropy(out_pmf);
        done[static_cast<std::size_t>(linear)] = 1;
      }
    });
  }

  // Sequential reductions keep reports identical for any thread count.
  EmbedReport& rep = res.report;
  rep.nzac = cover.nzac();
  double h_in_total = 0.0, h_out_total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    h_in_total += ternary_entropy(pmfs.pmf[static_cast<std::size_t>(i)]);
    h_out_total += entropy[i];
    const int ch = res.changes.change[i];
    rep.n_minus += ch == -1;
    rep.n_zero += ch == 0;
    rep.n_plus += ch == +1;
  }
  for (LatticeId id = 0; id < 8; ++id) {
    const auto& members = schedule.lattice_members(id);
    double s = 0.0;
    for (int linear : members) s += entropy[linear];
    rep.lattice_size[id] = static_cast<std::int64_t>(members.size());
    rep.lattice_entropy[id] = members.empty() ? 0.0 : s / static_cast<double>(members.size());
  }
  if (rep.nzac <= 0) throw NumericError("embed_image: cover has no nonzero AC coefficients");
  rep.h_in = h_in_total / rep.nzac;
  rep.h_out = h_out_total / rep.nzac;
  rep.lambda = pmfs.solution.lambda;
  rep.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

CalibrationResult calibrate_payload(const CostMap& costs, const QuantizedDctImage& cover,
                                    const CorrelationModel& model, const NeighborTable& tables,
                                    const std::array<std::uint16_t, 64>& qsteps, double h_in,
                                    std::uint64_t seed, int threads) {
  const int nzac = cover.nzac();
  if (nzac <= 0) throw NumericError("calibrate_payload: cover has no nonzero AC coefficients");
  PmfMap pmfs = probabilities_from_costs(costs, h_in * nzac);
  const Eigen::ArrayXd variances = variance_map(pmfs, qsteps);

  CalibrationResult out;
  out.synchronized_run =
      embed_image(cover, pmfs, variances, model, tables, qsteps, seed, threads);
  out.h_in = out.synchronized_run.report.h_in;
  out.h_out = out.synchronized_run.report.h_out;
  out.baseline = probabilities_from_costs(costs, out.h_out * nzac);
  return out;
}

QuantizedDctImage apply_changes(const QuantizedDctImage& cover, const ChangeMap& changes) {
  if (changes.change.size() != cover.coeff.size())
    throw StateError("apply_changes: change map does not match the cover");
  QuantizedDctImage out = cover;
  for (Eigen::Index i = 0; i < out.coeff.size(); ++i) {
    const int v = static_cast<int>(out.coeff[i]) + changes.change[i];
    out.coeff[i] = static_cast<std::int16_t>(std::min(std::max(v, -32768), 32767));
  }
  return out;
}

}  // namespace covsync
