#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

#include "slicegcn/error.hpp"
#include "slicegcn/matrix.hpp"

namespace slicegcn {

/// Area under the ROC curve via the Mann-Whitney rank statistic. Tied scores
/// share their average rank, so each tied positive/negative pair counts 1/2.
inline double auc_roc(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  if (scores.size() != positive.size()) throw ShapeError("auc_roc: size mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // ranks i+1 .. j share their mean
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (positive[order[k]]) {
        pos_rank_sum += rank;
        ++n_pos;
      }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw ConfigError("auc_roc: need both positive and negative examples");
  const double u = pos_rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

/// Fraction of `rows` whose argmax logit (first maximum) equals the label.
template <typename T>
double accuracy(const Matrix<T>& logits, std::span<const std::uint32_t> labels,
                std::span<const std::uint32_t> rows) {
  if (rows.empty()) throw ConfigError("accuracy: empty split");
  std::size_t correct = 0;
  for (std::uint32_t r : rows) {
    const auto row = logits.row(r);
    const auto pred = static_cast<std::uint32_t>(std::max_element(row.begin(), row.end()) - row.begin());
    correct += pred == labels[r];
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

enum class MetricKind { kAccuracy, kAucRoc };

/// AUC-ROC for binary tasks, accuracy otherwise.
inline MetricKind metric_for(std::size_t num_classes) {
  return num_classes == 2 ? MetricKind::kAucRoc : MetricKind::kAccuracy;
}

inline std::string_view metric_name(MetricKind k) {
  return k == MetricKind::kAucRoc ? "auc_roc" : "accuracy";
}

/// The task metric over one split: accuracy for multi-class, AUC-ROC of the
/// class-1 softmax probability for binary.
template <typename T>
double evaluate(const Matrix<T>& logits, std::span<const std::uint32_t> labels,
                std::span<const std::uint32_t> rows, std::size_t num_classes) {
  if (rows.empty()) throw ConfigError("evaluate: empty split");
  if (logits.rows() != labels.size()) throw ShapeError("evaluate: logits rows != label count");
  if (metric_for(num_classes) == MetricKind::kAccuracy) return accuracy(logits, labels, rows);
  std::vector<double> scores;
  std::vector<std::uint8_t> positive;
  scores.reserve(rows.size());
  positive.reserve(rows.size());
  for (std::uint32_t r : rows) {
    const auto row = logits.row(r);
    // log-odds of class 1: same ranking as its softmax probability, without
    // saturating to 1.0 for confident nodes
    scores.push_back(static_cast<double>(row[1]) - static_cast<double>(row[0]));
    positive.push_back(labels[r] == 1 ? 1 : 0);
  }
  return auc_roc(scores, positive);
}

}  // namespace slicegcn
