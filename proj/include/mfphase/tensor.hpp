#pragma once

#include <Eigen/Dense>

#include <vector>

namespace mfp {

// Row-major tensor with per-axis extents.
struct Tensor {
  std::vector<int> dims;
  std::vector<double> data;
};

// Contracts axis `axis` with B: out[..., r, ...] = sum_j B(r, j) in[..., j, ...].
inline Tensor apply_axis(const Tensor& in, int axis, const Eigen::MatrixXd& B) {
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  long outer = 1, inner = 1;
  for (int a = 0; a < axis; ++a) outer *= in.dims[a];
  for (int a = axis + 1; a < static_cast<int>(in.dims.size()); ++a) inner *= in.dims[a];
  const long n = in.dims[axis];
  const long rows = B.rows();
  Tensor out;
  out.dims = in.dims;
  out.dims[axis] = static_cast<int>(rows);
  out.data.resize(static_cast<std::size_t>(outer * rows * inner));
  for (long o = 0; o < outer; ++o) {
    Eigen::Map<const RowMat> src(in.data.data() + o * n * inner, n, inner);
    Eigen::Map<RowMat> dst(out.data.data() + o * rows * inner, rows, inner);
    dst.noalias() = B * src;
  }
  return out;
}

// Applies one matrix per axis.
inline Tensor apply_all_axes(Tensor t, const std::vector<Eigen::MatrixXd>& mats) {
  for (int a = 0; a < static_cast<int>(mats.size()); ++a) t = apply_axis(t, a, mats[a]);
  return t;
}

}  // namespace mfp
