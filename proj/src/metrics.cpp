#include "cwct/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cwct {

double cross_entropy_window(const Matrix& pred, const std::vector<int>& labels) {
  if (static_cast<int>(labels.size()) != pred.rows)
    throw std::invalid_argument("cross_entropy_window: " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(pred.rows) + " prediction rows");
  double loss = 0.0;
  for (int i = 0; i < pred.rows; ++i) {
    const int y = labels[i];
    if (y < 0 || y >= pred.cols)
      throw std::invalid_argument("cross_entropy_window: label " + std::to_string(y) +
                                  " out of range at frame " + std::to_string(i));
    loss -= std::log(std::max(static_cast<double>(pred.at(i, y)), 1e-12));
  }
  return loss;
}

double total_loss(double oad, double oas, double cascade_oad, double cascade_oas, double l1,
                  double l2, double l3) {
  return oad + l1 * oas + l2 * cascade_oad + l3 * cascade_oas;
}

namespace {

std::vector<int> ranking(const std::vector<float>& scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  return order;
}

void check_sizes(const std::vector<float>& scores, const std::vector<std::uint8_t>& positives) {
  if (scores.size() != positives.size() || scores.empty())
    throw std::invalid_argument("precision metrics: scores and positives must be non-empty and "
                                "equally sized");
}

}  // namespace

double average_precision(const std::vector<float>& scores,
                         const std::vector<std::uint8_t>& positives) {
  check_sizes(scores, positives);
  const auto order = ranking(scores);
  long long tp = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (!positives[order[k]]) continue;
    ++tp;
    sum += static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  if (tp == 0) throw std::invalid_argument("average_precision: no positive frame");
  return sum / static_cast<double>(tp);
}

double calibrated_ap(const std::vector<float>& scores,
                     const std::vector<std::uint8_t>& positives) {
  check_sizes(scores, positives);
  const long long total_pos = std::count(positives.begin(), positives.end(), 1);
  const long long total_neg = static_cast<long long>(positives.size()) - total_pos;
  if (total_pos == 0 || total_neg == 0)
    throw std::invalid_argument("calibrated_ap: needs at least one positive and one negative");
  const double omega = static_cast<double>(total_neg) / static_cast<double>(total_pos);

  const auto order = ranking(scores);
  long long tp = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (!positives[order[k]]) continue;
    ++tp;
    const double fp = static_cast<double>(k + 1 - tp);
    sum += static_cast<double>(tp) / (static_cast<double>(tp) + fp / omega);
  }
  return sum / static_cast<double>(tp);
}

EvalSummary evaluate_scores(const Matrix& scores, const std::vector<int>& labels) {
  if (static_cast<int>(labels.size()) != scores.rows)
    throw std::invalid_argument("evaluate_scores: label/score frame count mismatch");
  EvalSummary out;
  double ap_sum = 0.0;
  double cap_sum = 0.0;
  std::vector<float> col(static_cast<std::size_t>(scores.rows));
  std::vector<std::uint8_t> pos(static_cast<std::size_t>(scores.rows));
  for (int c = 1; c < scores.cols; ++c) {
    long long positives = 0;
    for (int i = 0; i < scores.rows; ++i) {
      col[i] = scores.at(i, c);
      pos[i] = labels[i] == c ? 1 : 0;
      positives += pos[i];
    }
    if (positives == 0) continue;
    ap_sum += average_precision(col, pos);
    ++out.ap_classes;
    if (positives < scores.rows) {
      cap_sum += calibrated_ap(col, pos);
      ++out.cap_classes;
    }
  }
  if (out.ap_classes == 0)
    throw std::invalid_argument("evaluate_scores: no action class has a positive frame");
  out.mean_ap = ap_sum / out.ap_classes;
  out.mean_cap = out.cap_classes > 0 ? cap_sum / out.cap_classes : 0.0;
  return out;
}

}  // namespace cwct
