#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "covsync/devpipe.hpp"

namespace covsync {

// 2x2 block neighborhoods are flattened to 256-vectors: blocks in raster
// order (TL, TR, BL, BR), the 64 modes row-major within each block.
inline constexpr int kNeighborhoodDim = 256;

// Streaming first/second-moment sums; mergeable value object.
struct CovAccumulator {
  std::uint64_t n_samples = 0;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(kNeighborhoodDim);
  Eigen::MatrixXd sum_outer = Eigen::MatrixXd::Zero(kNeighborhoodDim, kNeighborhoodDim);

  /// Adds every overlapping (stride 1) 2x2 block neighborhood of the plane.
  void accumulate(const DctPlane& dct);
  void merge(const CovAccumulator& other);
};

struct CorrelationMatrix {
  Eigen::MatrixXd rho;  // 256x256, symmetric, unit diagonal
};

CorrelationMatrix finalize_correlation(const CovAccumulator& acc);

// Sparse correlation model keyed by canonical block offset and mode pair.
// Offsets stored: (0,0) intra (a < b), (0,1) horizontal and (1,0) vertical
// (a in the first block, b in the shifted one). Reversed offsets are served
// by the closure rho(-d, b, a) = rho(d, a, b).
struct ModelEntry {
  std::array<int, 2> db{};  // (dy, dx)
  int mode_a = 0;
  int mode_b = 0;
  double rho = 0.0;
};

class CorrelationModel {
 public:
  CorrelationModel() = default;
  CorrelationModel(double threshold, std::vector<ModelEntry> entries);

  double threshold() const { return threshold_; }
  const std::vector<ModelEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  /// Correlation between mode a at some block and mode b at offset (dy,dx)
  /// from it; zero for offsets outside the model.
  double rho(int dy, int dx, int a, int b) const;

 private:
  void build_lookup();

  double threshold_ = 0.0;
  std::vector<ModelEntry> entries_;
  Eigen::Matrix<double, 64, 64> intra_ = Eigen::Matrix<double, 64, 64>::Zero();
  Eigen::Matrix<double, 64, 64> horiz_ = Eigen::Matrix<double, 64, 64>::Zero();
  Eigen::Matrix<double, 64, 64> vert_ = Eigen::Matrix<double, 64, 64>::Zero();
};

/// Folds the 256x256 correlation by symmetry (the two horizontal and two
/// vertical sub-blocks each averaged, intra averaged over the four diagonal
/// sub-blocks), keeps |rho| >= threshold, and drops diagonal-neighbor pairs.
CorrelationModel sparsify(const CorrelationMatrix& corr, double threshold);

/// Dense 64x64 intra-block correlation implied by a model (unit diagonal).
Eigen::Matrix<double, 64, 64> intra_matrix(const CorrelationModel& model);

/// Folded 64x64 intra-block correlation of an estimated matrix.
Eigen::Matrix<double, 64, 64> folded_intra(const CorrelationMatrix& corr);

struct ReorderResult {
  Eigen::Matrix<double, 64, 64> permuted;
  double residual = 0.0;  // max |off-diagonal| within the 16x16 diagonal blocks
};

/// Permutes the intra matrix so the four mode groups are contiguous;
/// `group_of_mode` must partition the 64 modes into 4 groups of 16.
ReorderResult reorder_to_lattices(const Eigen::Matrix<double, 64, 64>& intra,
                                  const std::array<int, 64>& group_of_mode);
ReorderResult reorder_to_lattices(const CorrelationMatrix& corr,
                                  const std::array<int, 64>& group_of_mode);

struct StructureReport {
  std::array<int, 64> intra_count{};  // undirected partners in the same block
  std::array<int, 64> up_count{}, down_count{}, left_count{}, right_count{};
  int canonical_intra_modes = 0;  // modes whose intra degree is 6
  int canonical_inter_modes = 0;  // modes with 8 partners in each adjacent block
  double max_diag_rho = 0.0;      // filled when a matrix is supplied
  double lattice_residual = 0.0;  // filled when matrix + assignment supplied
  bool empty_model = false;
  std::vector<std::string> deviations;
};

StructureReport validate_structure(const CorrelationModel& model,
                                   const CorrelationMatrix* corr = nullptr,
                                   const std::array<int, 64>* group_of_mode = nullptr);

// Structured-text serialization:
// {"threshold": f, "entries": [{"db":[dy,dx],"a":[r,c],"b":[r,c],"rho":f}, ...]}
void save_model(std::ostream& os, const CorrelationModel& model);
CorrelationModel load_model(std::istream& is);
void save_model_file(const std::string& path, const CorrelationModel& model);
CorrelationModel load_model_file(const std::string& path);

}  // namespace covsync
