#include "cwct/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace cwct {

namespace {

constexpr char kMagic[4] = {'F', 'E', 'A', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint64_t kMaxElements = 1ull << 33;

template <typename T>
bool read_pod(std::istream& in, T& value) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return static_cast<bool>(in);
}

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

}  // namespace

Matrix load_features(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw DataFormatError("feature file: bad magic at offset 0");
  std::uint32_t version = 0, frames = 0, dim = 0;
  if (!read_pod(in, version) || version != kVersion)
    throw DataFormatError("feature file: unsupported version at offset 4");
  if (!read_pod(in, frames)) throw DataFormatError("feature file: truncated frame count at offset 8");
  if (!read_pod(in, dim)) throw DataFormatError("feature file: truncated dim at offset 12");
  if (dim == 0) throw DataFormatError("feature file: zero dim at offset 12");
  const std::uint64_t elements = static_cast<std::uint64_t>(frames) * dim;
  if (elements > kMaxElements) throw DataFormatError("feature file: shape overflow at offset 8");

  Matrix m(static_cast<int>(frames), static_cast<int>(dim));
  in.read(reinterpret_cast<char*>(m.data.data()),
          static_cast<std::streamsize>(elements * sizeof(float)));
  if (!in)
    throw DataFormatError("feature file: truncated payload at offset 16 (expected " +
                          std::to_string(elements * sizeof(float)) + " bytes)");
  return m;
}

void save_features(const Matrix& features, std::ostream& out) {
  out.write(kMagic, 4);
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint32_t>(features.rows));
  write_pod(out, static_cast<std::uint32_t>(features.cols));
  out.write(reinterpret_cast<const char*>(features.data.data()),
            static_cast<std::streamsize>(features.data.size() * sizeof(float)));
  if (!out) throw DataFormatError("feature file: write failed");
}

Matrix load_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataFormatError("feature file: cannot open " + path);
  return load_features(in);
}

void save_features(const Matrix& features, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataFormatError("feature file: cannot open " + path + " for writing");
  save_features(features, out);
}

void save_predictions(const Matrix& probs, std::ostream& out) {
  char buf[32];
  for (int i = 0; i < probs.rows; ++i) {
    out << i;
    for (int j = 0; j < probs.cols; ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(probs.at(i, j)));
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw DataFormatError("prediction file: write failed");
}

void save_predictions(const Matrix& probs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataFormatError("prediction file: cannot open " + path + " for writing");
  save_predictions(probs, out);
}

Matrix load_predictions(std::istream& in) {
  std::vector<std::vector<float>> rows;
  std::string line;
  int expected_cols = -1;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<float> row;
    int col = 0;
    while (std::getline(ls, field, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(field, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != field.size())
        throw DataFormatError("prediction file: bad field " + std::to_string(col) + " on line " +
                              std::to_string(line_no));
      if (col == 0) {
        if (static_cast<int>(v) != static_cast<int>(rows.size()))
          throw DataFormatError("prediction file: frame index " + field + " out of order on line " +
                                std::to_string(line_no));
      } else {
        row.push_back(static_cast<float>(v));
      }
      ++col;
    }
    if (row.empty())
      throw DataFormatError("prediction file: no probabilities on line " + std::to_string(line_no));
    if (expected_cols < 0) expected_cols = static_cast<int>(row.size());
    if (static_cast<int>(row.size()) != expected_cols)
      throw DataFormatError("prediction file: ragged row on line " + std::to_string(line_no));
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<int>(rows.size()), expected_cols < 0 ? 0 : expected_cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].begin(), rows[i].end(), m.row(static_cast<int>(i)));
  return m;
}

Matrix load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataFormatError("prediction file: cannot open " + path);
  return load_predictions(in);
}

std::vector<int> load_labels(std::istream& in) {
  std::vector<int> labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    long frame = 0, cls = 0;
    char extra = 0;
    if (std::sscanf(line.c_str(), "%ld,%ld%c", &frame, &cls, &extra) != 2)
      throw DataFormatError("label file: expected `frame,class` on line " +
                            std::to_string(line_no));
    if (frame != static_cast<long>(labels.size()))
      throw DataFormatError("label file: frame index " + std::to_string(frame) +
                            " out of order on line " + std::to_string(line_no));
    if (cls < 0)
      throw DataFormatError("label file: negative class on line " + std::to_string(line_no));
    labels.push_back(static_cast<int>(cls));
  }
  return labels;
}

std::vector<int> load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataFormatError("label file: cannot open " + path);
  return load_labels(in);
}

void save_labels(const std::vector<int>& labels, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataFormatError("label file: cannot open " + path + " for writing");
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i] << '\n';
  if (!out) throw DataFormatError("label file: write failed");
}

}  // namespace cwct
