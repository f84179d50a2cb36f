#pragma once

#include <Eigen/Core>

namespace covsync {

// Row-major dense plane; (y, x) indexing matches raster serialization order.
template <typename Scalar>
using Plane = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using Block8 = Eigen::Matrix<Scalar, 8, 8, Eigen::RowMajor>;

inline constexpr int kBlockSize = 8;
inline constexpr int kModesPerBlock = 64;

}  // namespace covsync
