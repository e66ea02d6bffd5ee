#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "catnet/dataset.hpp"

namespace catnet {

using FeatureVec = std::vector<double>;
// Maps a sample to the feature used for herding, means and classification.
using Extractor = std::function<FeatureVec(const Sample&)>;

// Per-class cached exemplars, in herding selection order, capped at
// capacity_k per class.
struct ExemplarStore {
  std::size_t capacity_k = 0;
  std::vector<std::uint32_t> class_order;              // arrival order
  std::map<std::uint32_t, std::vector<Sample>> per_class;
  std::set<std::uint32_t> under_capacity;              // classes with < K samples available

  bool empty() const { return class_order.empty(); }
  std::size_t total_cached() const;
};

// Per-class feature means, one row per class in arrival order.
struct FeatureMeanMatrix {
  std::size_t feature_dim = 0;
  std::vector<std::uint32_t> class_order;
  std::map<std::uint32_t, FeatureVec> means;

  bool empty() const { return class_order.empty(); }
};

// Arithmetic mean of the given feature vectors; not renormalized.
FeatureVec class_mean(const std::vector<FeatureVec>& features);

// Greedy herding: step k picks the candidate whose feature, averaged with
// the already-picked ones, lands closest (L2) to the class mean. Selection
// is without replacement; ties break toward the lowest input index.
// Returns min(k, |features|) indices in selection order.
std::vector<std::size_t> herd_select_indices(const std::vector<FeatureVec>& features,
                                             std::size_t k);
std::vector<Sample> herd_select(const std::vector<Sample>& samples,
                                const std::vector<FeatureVec>& features, std::size_t k);

// Herds each new class into the store. Existing classes are untouched;
// class_order is extended in the given order. Duplicate class ids are
// rejected.
void update_store(ExemplarStore& store,
                  const std::vector<std::pair<std::uint32_t, std::vector<const Sample*>>>& new_classes,
                  const Extractor& extractor);

// Recomputes every class mean from the cached exemplars with the current
// extractor. `renormalize` optionally rescales each mean to unit norm.
FeatureMeanMatrix compute_mean_matrix(const ExemplarStore& store, const Extractor& extractor,
                                      bool renormalize = false);

}  // namespace catnet
