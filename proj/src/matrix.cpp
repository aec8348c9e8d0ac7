#include "cwct/matrix.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cwct/kernels.hpp"

namespace cwct {

Matrix::Matrix(int r, int c, std::vector<float> d) : rows(r), cols(c), data(std::move(d)) {
  if (data.size() != static_cast<std::size_t>(r) * c)
    throw std::invalid_argument("Matrix: data length does not match rows*cols");
}

Matrix Matrix::identity(int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0f;
  return m;
}

Matrix Matrix::from_row(std::span<const float> v) {
  Matrix m(1, static_cast<int>(v.size()));
  std::copy(v.begin(), v.end(), m.data.begin());
  return m;
}

AttentionMask AttentionMask::causal(int n) {
  AttentionMask m(n, n, false);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) m.set(i, j, true);
  return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows)
    throw std::invalid_argument("matmul: inner dimensions " + std::to_string(a.cols) + " vs " +
                                std::to_string(b.rows));
  Matrix c(a.rows, b.cols);
  kernels::active().gemm(a.data.data(), b.data.data(), c.data.data(), a.rows, a.cols, b.cols);
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols != b.cols)
    throw std::invalid_argument("matmul_nt: inner dimensions " + std::to_string(a.cols) + " vs " +
                                std::to_string(b.cols));
  Matrix c(a.rows, b.rows);
  kernels::active().gemm_nt(a.data.data(), b.data.data(), c.data.data(), a.rows, a.cols, b.rows);
  return c;
}

Matrix masked_row_softmax(const Matrix& logits, const AttentionMask* mask, float scale) {
  if (scale <= 0.0f) throw std::invalid_argument("masked_row_softmax: scale must be positive");
  if (mask && (mask->rows != logits.rows || mask->cols != logits.cols))
    throw std::invalid_argument("masked_row_softmax: mask shape mismatch");
  Matrix out(logits.rows, logits.cols);
  for (int i = 0; i < logits.rows; ++i) {
    float maxv = -INFINITY;
    for (int j = 0; j < logits.cols; ++j)
      if (!mask || mask->at(i, j)) maxv = std::max(maxv, logits.at(i, j) / scale);
    if (maxv == -INFINITY)
      throw std::invalid_argument("masked_row_softmax: row " + std::to_string(i) +
                                  " allows no key");
    double sum = 0.0;
    for (int j = 0; j < logits.cols; ++j) {
      if (!mask || mask->at(i, j)) {
        const float e = std::exp(logits.at(i, j) / scale - maxv);
        out.at(i, j) = e;
        sum += e;
      }
    }
    const float inv = static_cast<float>(1.0 / sum);
    for (int j = 0; j < logits.cols; ++j)
      if (!mask || mask->at(i, j)) out.at(i, j) *= inv;
  }
  return out;
}

Matrix layer_normalize(const Matrix& x, std::span<const float> gain, std::span<const float> bias,
                       float epsilon) {
  if (static_cast<int>(gain.size()) != x.cols || static_cast<int>(bias.size()) != x.cols)
    throw std::invalid_argument("layer_normalize: gain/bias length must equal cols");
  Matrix out(x.rows, x.cols);
  for (int i = 0; i < x.rows; ++i) {
    const float* r = x.row(i);
    double mean = 0.0;
    for (int j = 0; j < x.cols; ++j) mean += r[j];
    mean /= x.cols;
    double var = 0.0;
    for (int j = 0; j < x.cols; ++j) {
      const double d = r[j] - mean;
      var += d * d;
    }
    var /= x.cols;
    const float inv = static_cast<float>(1.0 / std::sqrt(var + epsilon));
    const float mu = static_cast<float>(mean);
    float* o = out.row(i);
    for (int j = 0; j < x.cols; ++j) o[j] = gain[j] * ((r[j] - mu) * inv) + bias[j];
  }
  return out;
}

Matrix relu(const Matrix& x) {
  Matrix out = x;
  kernels::active().relu(out.data.data(), out.data.size());
  return out;
}

Matrix sinusoidal_positions(int length, int dim) {
  if (dim % 2 != 0) throw std::invalid_argument("sinusoidal_positions: dim must be even");
  Matrix out(length, dim);
  for (int pos = 0; pos < length; ++pos) {
    for (int i = 0; i < dim / 2; ++i) {
      const double freq = std::pow(10000.0, -2.0 * i / dim);
      out.at(pos, 2 * i) = static_cast<float>(std::sin(pos * freq));
      out.at(pos, 2 * i + 1) = static_cast<float>(std::cos(pos * freq));
    }
  }
  return out;
}

std::vector<float> mean_pool_rows(const Matrix& x) {
  if (x.rows < 1) throw std::invalid_argument("mean_pool_rows: empty input");
  std::vector<double> acc(x.cols, 0.0);
  for (int i = 0; i < x.rows; ++i) {
    const float* r = x.row(i);
    for (int j = 0; j < x.cols; ++j) acc[j] += r[j];
  }
  std::vector<float> out(x.cols);
  for (int j = 0; j < x.cols; ++j) out[j] = static_cast<float>(acc[j] / x.rows);
  return out;
}

void add_inplace(Matrix& x, const Matrix& y) {
  if (!x.same_shape(y)) throw std::invalid_argument("add_inplace: shape mismatch");
  kernels::active().add(x.data.data(), y.data.data(), x.data.size());
}

}  // namespace cwct
