#pragma once

#include <cstdint>
#include <vector>

#include "cwct/matrix.hpp"

namespace cwct {

// -sum_i log pred[i, labels[i]], probabilities clamped at 1e-12.
double cross_entropy_window(const Matrix& pred, const std::vector<int>& labels);

// oad + l1*oas + l2*cascade_oad + l3*cascade_oas.
double total_loss(double oad, double oas, double cascade_oad, double cascade_oas, double l1,
                  double l2, double l3);

// Frames ranked by descending score, ties broken by ascending index; AP is
// the mean of precision-at-k over the ranks k holding a positive. Requires
// at least one positive.
double average_precision(const std::vector<float>& scores,
                         const std::vector<std::uint8_t>& positives);

// Same ranking, but precision at rank k is TP_k / (TP_k + FP_k / omega)
// with omega = negatives/positives, discounting the background-heavy class
// imbalance. Requires at least one positive and one negative; reduces to
// average_precision when omega == 1.
double calibrated_ap(const std::vector<float>& scores, const std::vector<std::uint8_t>& positives);

struct EvalSummary {
  double mean_ap = 0.0;
  double mean_cap = 0.0;
  int ap_classes = 0;   // classes entering the mAP mean
  int cap_classes = 0;  // classes entering the mcAP mean
};

// Class-mean of the two metrics over action classes 1..N_a-1 (background
// index 0 excluded). Classes without a positive are skipped for mAP;
// classes additionally need a negative for mcAP. Throws when no class
// qualifies for mAP.
EvalSummary evaluate_scores(const Matrix& scores, const std::vector<int>& labels);

}  // namespace cwct
