#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cwct {

// Dense row-major f32 matrix; the carrier for every feature map in the model.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<float> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0f) {}
  Matrix(int r, int c, std::vector<float> d);

  float& at(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
  float at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
  float* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
  const float* row(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }
  std::span<const float> row_span(int i) const { return {row(i), static_cast<std::size_t>(cols)}; }
  std::size_t size() const { return data.size(); }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

  static Matrix identity(int n);
  static Matrix from_row(std::span<const float> v);
};

// Boolean (query, key) admissibility. Every query row must allow at least
// one key; softmax enforces this.
struct AttentionMask {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> allowed;

  AttentionMask() = default;
  AttentionMask(int r, int c, bool value = true)
      : rows(r), cols(c), allowed(static_cast<std::size_t>(r) * c, value ? 1 : 0) {}

  bool at(int i, int j) const { return allowed[static_cast<std::size_t>(i) * cols + j] != 0; }
  void set(int i, int j, bool v) { allowed[static_cast<std::size_t>(i) * cols + j] = v ? 1 : 0; }

  // Lower-triangular: position i attends to j <= i.
  static AttentionMask causal(int n);
};

Matrix matmul(const Matrix& a, const Matrix& b);
// a (m x k) times b^T where b is (n x k).
Matrix matmul_nt(const Matrix& a, const Matrix& b);

// Row-wise softmax of logits/scale. Disallowed keys are excluded from the
// exponential sum and come out exactly 0.0f. A row with no allowed key is a
// contract violation.
Matrix masked_row_softmax(const Matrix& logits, const AttentionMask* mask, float scale);

Matrix layer_normalize(const Matrix& x, std::span<const float> gain, std::span<const float> bias,
                       float epsilon = 1e-5f);

Matrix relu(const Matrix& x);

// entry (pos, 2i) = sin(pos / 10000^(2i/dim)), entry (pos, 2i+1) = cos(...).
Matrix sinusoidal_positions(int length, int dim);

std::vector<float> mean_pool_rows(const Matrix& x);

// x += y (shape checked).
void add_inplace(Matrix& x, const Matrix& y);

}  // namespace cwct
