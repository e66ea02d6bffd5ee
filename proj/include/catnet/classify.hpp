#pragma once

#include <cstdint>
#include <vector>

#include "catnet/exemplar.hpp"

namespace catnet {

// Concatenates two unit-norm stream features (stream order fixed by the
// caller's config). The result has norm sqrt(2) and is not renormalized, so
// both modalities carry equal weight. Inputs must be unit within 1e-6.
FeatureVec fuse(const FeatureVec& f_a, const FeatureVec& f_b);

// Nearest mean of exemplars: the class whose mean minimizes the L2 distance
// to the feature. Ties break toward the earliest class in arrival order.
std::uint32_t nme_classify(const FeatureVec& feature, const FeatureMeanMatrix& means);

struct Prediction {
  std::uint64_t sample_id = 0;
  std::uint32_t true_label = 0;
  std::uint32_t predicted = 0;
  double distance = 0.0;  // L2 to the predicted class mean
  double margin = 0.0;    // runner-up distance minus predicted distance
};

struct BatchResult {
  std::vector<Prediction> predictions;
  std::size_t skipped = 0;  // samples missing a required modality
};

// Runs extract-then-classify over a batch. Samples with fewer than
// `required_modalities` vectors are recorded as skipped and excluded.
BatchResult classify_batch(const std::vector<const Sample*>& samples,
                           const Extractor& extractor, const FeatureMeanMatrix& means,
                           std::size_t required_modalities);

void write_predictions_csv(const BatchResult& batch, const std::string& path);

}  // namespace catnet
