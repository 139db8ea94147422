#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kdrsdl/tensor.hpp"

namespace kdrsdl {

/// ||estimate - truth||_F / ||truth||_F. Throws DomainError for a zero truth
/// and DimensionError for mismatched shapes.
double relative_error(const Tensor3& estimate, const Tensor3& truth);
double relative_error(const Matrix& estimate, const Matrix& truth);

/// Area under the ROC curve: the probability that a random positive scores
/// above a random negative, ties counted one half. Labels are 0/1. Throws
/// DomainError when only one class is present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

/// 10 log10(peak^2 / MSE). Returns +infinity when MSE is zero.
double psnr(const Matrix& estimate, const Matrix& reference, double peak);

/// PSNR over a whole tensor with peak = max - min of the reference.
double psnr(const Tensor3& estimate, const Tensor3& reference);

enum class AucPooling { kPooled, kPerFrame };

/// Foreground AUC with |scores| as the score and mask > 0.5 as the label.
/// Pooled ranks all pixels of all frames together; per-frame averages the
/// AUC of every frame that has both classes.
double foreground_auc(const Tensor3& scores, const Tensor3& masks, AucPooling pooling);

/// Named scalar results plus the parameters that produced them. Entries keep
/// insertion order so emitted tables are stable.
class MetricsReport {
 public:
  void set(const std::string& name, double value);
  void set_config(const std::string& name, std::string value);

  double at(const std::string& name) const;
  bool contains(const std::string& name) const;

  const std::vector<std::pair<std::string, double>>& values() const { return values_; }
  const std::vector<std::pair<std::string, std::string>>& config() const {
    return config_;
  }

 private:
  std::vector<std::pair<std::string, double>> values_;
  std::vector<std::pair<std::string, std::string>> config_;
};

}  // namespace kdrsdl
