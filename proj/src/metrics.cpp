#include "steinglm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace steinglm {

double rmse(const std::vector<double>& predictions, const std::vector<double>& targets) {
  if (predictions.size() != targets.size() || predictions.empty())
    throw std::invalid_argument("rmse: length mismatch or empty input");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - targets[i];
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(predictions.size()));
}

double auc(const std::vector<double>& scores, const std::vector<double>& binary_targets) {
  if (scores.size() != binary_targets.size() || scores.empty())
    throw std::invalid_argument("auc: length mismatch or empty input");

  std::size_t n_pos = 0, n_neg = 0;
  for (double y : binary_targets) {
    if (y == 1.0)
      ++n_pos;
    else if (y == 0.0)
      ++n_neg;
    else
      throw std::invalid_argument("auc: targets must be 0/1");
  }
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("auc: undefined, only one class present");

  // Average ranks over tied score groups, then Mann-Whitney U.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (std::size_t k = i; k < j; ++k)
      if (binary_targets[order[k]] == 1.0) rank_sum_pos += avg_rank;
    i = j;
  }
  const double u =
      rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace steinglm
