#include "covsync/covmodel.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "covsync/error.hpp"

namespace covsync {

namespace {

// sub-block view of the 256x256 matrix: rows of block i vs cols of block j
inline Eigen::Block<const Eigen::MatrixXd, 64, 64> sub(const Eigen::MatrixXd& m, int i, int j) {
  return m.block<64, 64>(i * 64, j * 64);
}

}  // namespace

void CovAccumulator::accumulate(const DctPlane& dct) {
  const int bw = dct.blocks_w(), bh = dct.blocks_h();
  if (bw < 2 || bh < 2) throw SizeError("accumulate: plane must hold at least 2x2 blocks");

  const int n_loc = (bw - 1) * (bh - 1);
  Eigen::MatrixXd samples(kNeighborhoodDim, n_loc);
  int col = 0;
  for (int by = 0; by + 1 < bh; ++by) {
    for (int bx = 0; bx + 1 < bw; ++bx, ++col) {
      const int blocks[4] = {by * bw + bx, by * bw + bx + 1, (by + 1) * bw + bx,
                             (by + 1) * bw + bx + 1};
      for (int k = 0; k < 4; ++k)
        samples.block<64, 1>(k * 64, col) = dct.coeff.segment<64>(
            static_cast<Eigen::Index>(blocks[k]) * kModesPerBlock);
    }
  }
  sum += samples.rowwise().sum();
  sum_outer.noalias() += samples * samples.transpose();
  n_samples += static_cast<std::uint64_t>(n_loc);
}

void CovAccumulator::merge(const CovAccumulator& other) {
  n_samples += other.n_samples;
  sum += other.sum;
  sum_outer += other.sum_outer;
}

CorrelationMatrix finalize_correlation(const CovAccumulator& acc) {
  if (acc.n_samples < 2) throw StateError("finalize_correlation: need at least 2 samples");
  const double n = static_cast<double>(acc.n_samples);
  const Eigen::VectorXd mean = acc.sum / n;
  Eigen::MatrixXd cov = acc.sum_outer / n - mean * mean.transpose();

  Eigen::VectorXd sd(kNeighborhoodDim);
  for (int i = 0; i < kNeighborhoodDim; ++i) {
    if (!(cov(i, i) > 0.0))
      throw NumericError("finalize_correlation: zero variance at coordinate " + std::to_string(i));
    sd[i] = std::sqrt(cov(i, i));
  }

  CorrelationMatrix out;
  out.rho = cov.array() / (sd * sd.transpose()).array();
  out.rho = 0.5 * (out.rho + out.rho.transpose()).eval();
  out.rho.diagonal().setOnes();
  return out;
}

CorrelationModel::CorrelationModel(double threshold, std::vector<ModelEntry> entries)
    : threshold_(threshold), entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    const bool canonical = (e.db[0] == 0 && e.db[1] == 0) || (e.db[0] == 0 && e.db[1] == 1) ||
                           (e.db[0] == 1 && e.db[1] == 0);
    if (!canonical) throw ValidationError("model entry with non-canonical block offset");
    if (e.mode_a < 0 || e.mode_a >= 64 || e.mode_b < 0 || e.mode_b >= 64)
      throw ValidationError("model entry with mode outside [0,64)");
    if (!(std::abs(e.rho) <= 1.0)) throw ValidationError("model entry with |rho| > 1");
    if (e.db[0] == 0 && e.db[1] == 0 && e.mode_a == e.mode_b)
      throw ValidationError("model entry pairing a mode with itself at offset (0,0)");
    if (threshold_ > 0.0 && std::abs(e.rho) < threshold_)
      throw ValidationError("model entry below its own threshold");
  }
  build_lookup();
}

void CorrelationModel::build_lookup() {
  for (const auto& e : entries_) {
    if (e.db[0] == 0 && e.db[1] == 0) {
      intra_(e.mode_a, e.mode_b) = e.rho;
      intra_(e.mode_b, e.mode_a) = e.rho;
    } else if (e.db[0] == 0) {
      horiz_(e.mode_a, e.mode_b) = e.rho;
    } else {
      vert_(e.mode_a, e.mode_b) = e.rho;
    }
  }
}

double CorrelationModel::rho(int dy, int dx, int a, int b) const {
  if (dy == 0 && dx == 0) return a == b ? 1.0 : intra_(a, b);
  if (dy == 0 && dx == 1) return horiz_(a, b);
  if (dy == 0 && dx == -1) return horiz_(b, a);
  if (dy == 1 && dx == 0) return vert_(a, b);
  if (dy == -1 && dx == 0) return vert_(b, a);
  return 0.0;  // diagonal or distant blocks are uncorrelated by model
}

CorrelationModel sparsify(const CorrelationMatrix& corr, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ParameterError("sparsify: threshold must be in (0,1)");
  const auto& m = corr.rho;

  const Eigen::Matrix<double, 64, 64> intra = folded_intra(corr);
  const Eigen::Matrix<double, 64, 64> horiz = 0.5 * (sub(m, 0, 1) + sub(m, 2, 3));
  const Eigen::Matrix<double, 64, 64> vert = 0.5 * (sub(m, 0, 2) + sub(m, 1, 3));

  std::vector<ModelEntry> entries;
  for (int a = 0; a < 64; ++a)
    for (int b = a + 1; b < 64; ++b)
      if (std::abs(intra(a, b)) >= threshold) entries.push_back({{0, 0}, a, b, intra(a, b)});
  for (int a = 0; a < 64; ++a)
    for (int b = 0; b < 64; ++b) {
      if (std::abs(horiz(a, b)) >= threshold) entries.push_back({{0, 1}, a, b, horiz(a, b)});
      if (std::abs(vert(a, b)) >= threshold) entries.push_back({{1, 0}, a, b, vert(a, b)});
    }
  return CorrelationModel(threshold, std::move(entries));
}

Eigen::Matrix<double, 64, 64> intra_matrix(const CorrelationModel& model) {
  Eigen::Matrix<double, 64, 64> out = Eigen::Matrix<double, 64, 64>::Identity();
  for (const auto& e : model.entries())
    if (e.db[0] == 0 && e.db[1] == 0) {
      out(e.mode_a, e.mode_b) = e.rho;
      out(e.mode_b, e.mode_a) = e.rho;
    }
  return out;
}

Eigen::Matrix<double, 64, 64> folded_intra(const CorrelationMatrix& corr) {
  const auto& m = corr.rho;
  Eigen::Matrix<double, 64, 64> intra =
      0.25 * (sub(m, 0, 0) + sub(m, 1, 1) + sub(m, 2, 2) + sub(m, 3, 3));
  intra = 0.5 * (intra + intra.transpose()).eval();
  intra.diagonal().setOnes();
  return intra;
}

ReorderResult reorder_to_lattices(const Eigen::Matrix<double, 64, 64>& intra,
                                  const std::array<int, 64>& group_of_mode) {
  std::array<int, 4> sizes{};
  for (int g : group_of_mode) {
    if (g < 0 || g > 3) throw ParameterError("reorder_to_lattices: group ids must be in [0,4)");
    ++sizes[g];
  }
  for (int g = 0; g < 4; ++g)
    if (sizes[g] != 16)
      throw ParameterError("reorder_to_lattices: assignment is not a 4x16 partition");

  std::array<int, 64> perm{};
  int pos = 0;
  for (int g = 0; g < 4; ++g)
    for (int m = 0; m < 64; ++m)
      if (group_of_mode[m] == g) perm[pos++] = m;

  ReorderResult out;
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) out.permuted(i, j) = intra(perm[i], perm[j]);
  double resid = 0.0;
  for (int g = 0; g < 4; ++g)
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j)
        if (i != j) resid = std::max(resid, std::abs(out.permuted(g * 16 + i, g * 16 + j)));
  out.residual = resid;
  return out;
}

ReorderResult reorder_to_lattices(const CorrelationMatrix& corr,
                                  const std::array<int, 64>& group_of_mode) {
  return reorder_to_lattices(folded_intra(corr), group_of_mode);
}

StructureReport validate_structure(const CorrelationModel& model, const CorrelationMatrix* corr,
                                   const std::array<int, 64>* group_of_mode) {
  StructureReport rep;
  rep.empty_model = model.empty();
  if (rep.empty_model) rep.deviations.push_back("model has no entries");

  for (const auto& e : model.entries()) {
    if (e.db[0] == 0 && e.db[1] == 0) {
      ++rep.intra_count[e.mode_a];
      ++rep.intra_count[e.mode_b];
    } else if (e.db[0] == 0) {
      ++rep.right_count[e.mode_a];  // partner to the right of a
      ++rep.left_count[e.mode_b];   // and symmetric view from b
    } else {
      ++rep.down_count[e.mode_a];
      ++rep.up_count[e.mode_b];
    }
  }
  for (int m = 0; m < 64; ++m) {
    const bool intra_ok = rep.intra_count[m] == 6;
    const bool inter_ok = rep.up_count[m] == 8 && rep.down_count[m] == 8 &&
                          rep.left_count[m] == 8 && rep.right_count[m] == 8;
    rep.canonical_intra_modes += intra_ok;
    rep.canonical_inter_modes += inter_ok;
    if (!intra_ok)
      rep.deviations.push_back("mode " + std::to_string(m) + ": intra degree " +
                               std::to_string(rep.intra_count[m]) + " != 6");
    if (!inter_ok)
      rep.deviations.push_back("mode " + std::to_string(m) + ": adjacent-block degrees " +
                               std::to_string(rep.up_count[m]) + "/" +
                               std::to_string(rep.down_count[m]) + "/" +
                               std::to_string(rep.left_count[m]) + "/" +
                               std::to_string(rep.right_count[m]) + " != 8");
  }

  if (corr) {
    const auto& m = corr->rho;
    rep.max_diag_rho = std::max(sub(m, 0, 3).cwiseAbs().maxCoeff(),
                                sub(m, 1, 2).cwiseAbs().maxCoeff());
    if (group_of_mode)
      rep.lattice_residual = reorder_to_lattices(*corr, *group_of_mode).residual;
  }
  return rep;
}

void save_model(std::ostream& os, const CorrelationModel& model) {
  nlohmann::json j;
  j["threshold"] = model.threshold();
  auto& arr = j["entries"] = nlohmann::json::array();
  for (const auto& e : model.entries())
    arr.push_back({{"db", {e.db[0], e.db[1]}},
                   {"a", {e.mode_a / 8, e.mode_a % 8}},
                   {"b", {e.mode_b / 8, e.mode_b % 8}},
                   {"rho", e.rho}});
  os << j.dump(1) << "\n";
}

CorrelationModel load_model(std::istream& is) {
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model: invalid JSON: ") + e.what());
  }
  try {
    const double threshold = j.at("threshold").get<double>();
    std::vector<ModelEntry> entries;
    for (const auto& je : j.at("entries")) {
      ModelEntry e;
      e.db = {je.at("db").at(0).get<int>(), je.at("db").at(1).get<int>()};
      e.mode_a = je.at("a").at(0).get<int>() * 8 + je.at("a").at(1).get<int>();
      e.mode_b = je.at("b").at(0).get<int>() * 8 + je.at("b").at(1).get<int>();
      e.rho = je.at("rho").get<double>();
      entries.push_back(e);
    }
    return CorrelationModel(threshold, std::move(entries));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model: missing or malformed field: ") + e.what());
  }
}

void save_model_file(const std::string& path, const CorrelationModel& model) {
  std::ofstream f(path);
  if (!f) throw FormatError("cannot open for writing: " + path);
  save_model(f, model);
}

CorrelationModel load_model_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw FormatError("cannot open: " + path);
  return load_model(f);
}

}  // namespace covsync
