#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "cwct/matrix.hpp"

namespace cwct {

struct DataFormatError : std::runtime_error {
  explicit DataFormatError(const std::string& what) : std::runtime_error(what) {}
};

// Feature container: magic "FEAT", version u32 = 1, frame count u32, dim
// u32, then frames*dim little-endian f32 row-major. Returned/accepted as a
// frames x dim matrix.
Matrix load_features(std::istream& in);
Matrix load_features(const std::string& path);
void save_features(const Matrix& features, std::ostream& out);
void save_features(const Matrix& features, const std::string& path);

// Prediction CSV: one row per frame, `frame_index,p_0,...,p_{Na-1}` with
// probabilities at 9 significant digits. Frame indices must be 0..T-1 in
// order.
void save_predictions(const Matrix& probs, std::ostream& out);
void save_predictions(const Matrix& probs, const std::string& path);
Matrix load_predictions(std::istream& in);
Matrix load_predictions(const std::string& path);

// Header-less label CSV `frame_index,class_index`, frames 0..T-1 in order.
std::vector<int> load_labels(std::istream& in);
std::vector<int> load_labels(const std::string& path);
void save_labels(const std::vector<int>& labels, const std::string& path);

}  // namespace cwct
