#include "catnet/exemplar.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "catnet/tensor.hpp"

namespace catnet {

std::size_t ExemplarStore::total_cached() const {
  std::size_t n = 0;
  for (const auto& [cls, list] : per_class) n += list.size();
  return n;
}

FeatureVec class_mean(const std::vector<FeatureVec>& features) {
  if (features.empty()) throw std::invalid_argument("class_mean: no samples for class");
  const std::size_t dim = features.front().size();
  FeatureVec mean(dim, 0.0);
  for (const FeatureVec& f : features) {
    if (f.size() != dim) {
      throw std::invalid_argument("class_mean: feature length " + std::to_string(f.size()) +
                                  " does not match " + std::to_string(dim));
    }
    for (std::size_t d = 0; d < dim; ++d) mean[d] += f[d];
  }
  const double inv = 1.0 / static_cast<double>(features.size());
  for (double& v : mean) v *= inv;
  return mean;
}

std::vector<std::size_t> herd_select_indices(const std::vector<FeatureVec>& features,
                                             std::size_t k) {
  if (k < 1) throw std::invalid_argument("herd_select: k must be >= 1");
  if (features.empty()) throw std::invalid_argument("herd_select: no candidates");

  const FeatureVec mu = class_mean(features);
  const std::size_t dim = mu.size();
  const std::size_t picks = std::min(k, features.size());

  std::vector<std::size_t> selected;
  selected.reserve(picks);
  std::vector<bool> taken(features.size(), false);
  FeatureVec running_sum(dim, 0.0);  // sum of features picked so far

  for (std::size_t step = 1; step <= picks; ++step) {
    double best = 0.0;
    std::size_t best_index = features.size();
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (taken[i]) continue;
      double dist_sq = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        const double avg = (running_sum[d] + features[i][d]) / static_cast<double>(step);
        const double diff = mu[d] - avg;
        dist_sq += diff * diff;
      }
      const double dist = std::sqrt(dist_sq);
      if (best_index == features.size() || dist < best) {
        best = dist;
        best_index = i;
      }
    }
    taken[best_index] = true;
    selected.push_back(best_index);
    for (std::size_t d = 0; d < dim; ++d) running_sum[d] += features[best_index][d];
  }
  return selected;
}

std::vector<Sample> herd_select(const std::vector<Sample>& samples,
                                const std::vector<FeatureVec>& features, std::size_t k) {
  if (samples.size() != features.size()) {
    throw std::invalid_argument("herd_select: " + std::to_string(samples.size()) +
                                " samples but " + std::to_string(features.size()) +
                                " features");
  }
  std::vector<Sample> out;
  for (std::size_t i : herd_select_indices(features, k)) out.push_back(samples[i]);
  return out;
}

void update_store(ExemplarStore& store,
                  const std::vector<std::pair<std::uint32_t, std::vector<const Sample*>>>& new_classes,
                  const Extractor& extractor) {
  if (store.capacity_k < 1) throw std::invalid_argument("update_store: capacity K must be >= 1");
  for (const auto& [cls, samples] : new_classes) {
    if (store.per_class.count(cls)) {
      throw std::invalid_argument("update_store: class " + std::to_string(cls) +
                                  " is already cached");
    }
    if (samples.empty()) {
      throw std::invalid_argument("update_store: no samples for class " + std::to_string(cls));
    }
    std::vector<Sample> candidates;
    std::vector<FeatureVec> features;
    candidates.reserve(samples.size());
    features.reserve(samples.size());
    for (const Sample* s : samples) {
      candidates.push_back(*s);
      features.push_back(extractor(*s));
    }
    store.per_class[cls] = herd_select(candidates, features, store.capacity_k);
    store.class_order.push_back(cls);
    if (candidates.size() < store.capacity_k) store.under_capacity.insert(cls);
  }
}

FeatureMeanMatrix compute_mean_matrix(const ExemplarStore& store, const Extractor& extractor,
                                      bool renormalize) {
  if (store.empty()) throw std::invalid_argument("compute_mean_matrix: store is empty");
  FeatureMeanMatrix matrix;
  matrix.class_order = store.class_order;
  for (std::uint32_t cls : store.class_order) {
    const auto& cached = store.per_class.at(cls);
    if (cached.empty()) {
      throw std::invalid_argument("compute_mean_matrix: class " + std::to_string(cls) +
                                  " has no cached exemplars");
    }
    std::vector<FeatureVec> features;
    features.reserve(cached.size());
    for (const Sample& s : cached) features.push_back(extractor(s));
    FeatureVec mean = class_mean(features);
    if (renormalize) {
      const double norm = l2_norm(mean);
      if (norm > 1e-12) {
        for (double& v : mean) v /= norm;
      }
    }
    matrix.feature_dim = mean.size();
    matrix.means[cls] = std::move(mean);
  }
  return matrix;
}

}  // namespace catnet
