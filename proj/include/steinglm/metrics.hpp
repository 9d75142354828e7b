#ifndef STEINGLM_METRICS_HPP
#define STEINGLM_METRICS_HPP

#include <vector>

namespace steinglm {

double rmse(const std::vector<double>& predictions, const std::vector<double>& targets);

/// Area under the ROC curve via the Mann-Whitney rank statistic; tied scores
/// contribute 1/2. Throws if either class is absent.
double auc(const std::vector<double>& scores, const std::vector<double>& binary_targets);

}  // namespace steinglm

#endif
