#include "kdrsdl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kdrsdl/error.hpp"

namespace kdrsdl {

double relative_error(const Tensor3& estimate, const Tensor3& truth) {
  if (!estimate.same_shape(truth)) {
    throw DimensionError("relative_error: shape mismatch");
  }
  const double denom = truth.norm();
  if (denom == 0.0) throw DomainError("relative_error: truth has zero norm");
  double num = 0.0;
  const auto e = estimate.data();
  const auto t = truth.data();
  for (std::size_t k = 0; k < e.size(); ++k) {
    const double d = e[k] - t[k];
    num += d * d;
  }
  return std::sqrt(num) / denom;
}

double relative_error(const Matrix& estimate, const Matrix& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw DimensionError("relative_error: shape mismatch");
  }
  const double denom = truth.norm();
  if (denom == 0.0) throw DomainError("relative_error: truth has zero norm");
  return (estimate - truth).norm() / denom;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw DimensionError("roc_auc: scores and labels differ in length");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return scores[i] < scores[j]; });

  // Mann-Whitney U with mid-ranks for tied groups.
  double positive_rank_sum = 0.0;
  double positives = 0.0;
  double negatives = 0.0;
  std::size_t g = 0;
  while (g < order.size()) {
    std::size_t end = g;
    while (end < order.size() && scores[order[end]] == scores[order[g]]) ++end;
    const double mid_rank = 0.5 * static_cast<double>(g + 1 + end);
    for (std::size_t k = g; k < end; ++k) {
      const int label = labels[order[k]];
      if (label != 0 && label != 1) throw DomainError("roc_auc: labels must be 0 or 1");
      if (label == 1) {
        positive_rank_sum += mid_rank;
        positives += 1.0;
      } else {
        negatives += 1.0;
      }
    }
    g = end;
  }
  if (positives == 0.0 || negatives == 0.0) {
    throw DomainError("roc_auc: need at least one positive and one negative label");
  }
  const double u = positive_rank_sum - positives * (positives + 1.0) / 2.0;
  return u / (positives * negatives);
}

double psnr(const Matrix& estimate, const Matrix& reference, double peak) {
  if (estimate.rows() != reference.rows() || estimate.cols() != reference.cols()) {
    throw DimensionError("psnr: shape mismatch");
  }
  const double mse = (estimate - reference).squaredNorm() /
                     static_cast<double>(reference.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double psnr(const Tensor3& estimate, const Tensor3& reference) {
  if (!estimate.same_shape(reference)) throw DimensionError("psnr: shape mismatch");
  const auto ref = reference.data();
  const auto [lo, hi] = std::minmax_element(ref.begin(), ref.end());
  const Matrix e = unfold_slices(estimate);
  const Matrix r = unfold_slices(reference);
  return psnr(e, r, *hi - *lo);
}

double foreground_auc(const Tensor3& scores, const Tensor3& masks, AucPooling pooling) {
  if (!scores.same_shape(masks)) throw DimensionError("foreground_auc: shape mismatch");
  auto labels_of = [](std::span<const double> m) {
    std::vector<int> out(m.size());
    std::transform(m.begin(), m.end(), out.begin(),
                   [](double v) { return v > 0.5 ? 1 : 0; });
    return out;
  };
  auto magnitudes = [](std::span<const double> s) {
    std::vector<double> out(s.size());
    std::transform(s.begin(), s.end(), out.begin(), [](double v) { return std::abs(v); });
    return out;
  };

  if (pooling == AucPooling::kPooled) {
    return roc_auc(magnitudes(scores.data()), labels_of(masks.data()));
  }
  const auto frame = static_cast<std::size_t>(scores.rows() * scores.cols());
  double total = 0.0;
  int frames = 0;
  for (Index i = 0; i < scores.depth(); ++i) {
    const auto offset = static_cast<std::size_t>(i) * frame;
    const std::vector<int> labels = labels_of(masks.data().subspan(offset, frame));
    const auto pos = std::count(labels.begin(), labels.end(), 1);
    if (pos == 0 || pos == static_cast<long>(labels.size())) continue;
    total += roc_auc(magnitudes(scores.data().subspan(offset, frame)), labels);
    ++frames;
  }
  if (frames == 0) {
    throw DomainError("foreground_auc: no frame contains both classes");
  }
  return total / frames;
}

void MetricsReport::set(const std::string& name, double value) {
  for (auto& [k, v] : values_) {
    if (k == name) {
      v = value;
      return;
    }
  }
  values_.emplace_back(name, value);
}

void MetricsReport::set_config(const std::string& name, std::string value) {
  for (auto& [k, v] : config_) {
    if (k == name) {
      v = std::move(value);
      return;
    }
  }
  config_.emplace_back(name, std::move(value));
}

double MetricsReport::at(const std::string& name) const {
  for (const auto& [k, v] : values_) {
    if (k == name) return v;
  }
  throw DomainError("no metric named " + name);
}

bool MetricsReport::contains(const std::string& name) const {
  return std::any_of(values_.begin(), values_.end(),
                     [&](const auto& kv) { return kv.first == name; });
}

}  // namespace kdrsdl
