#include "catnet/classify.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

#include "catnet/tensor.hpp"

namespace catnet {

FeatureVec fuse(const FeatureVec& f_a, const FeatureVec& f_b) {
  for (const FeatureVec* f : {&f_a, &f_b}) {
    const double norm = l2_norm(*f);
    if (std::abs(norm - 1.0) > 1e-6) {
      throw std::invalid_argument("fuse: stream feature has norm " + std::to_string(norm) +
                                  ", expected unit");
    }
  }
  FeatureVec fused;
  fused.reserve(f_a.size() + f_b.size());
  fused.insert(fused.end(), f_a.begin(), f_a.end());
  fused.insert(fused.end(), f_b.begin(), f_b.end());
  return fused;
}

std::uint32_t nme_classify(const FeatureVec& feature, const FeatureMeanMatrix& means) {
  if (means.empty()) throw std::invalid_argument("nme_classify: no class means");
  if (feature.size() != means.feature_dim) {
    throw std::invalid_argument("nme_classify: feature length " +
                                std::to_string(feature.size()) +
                                " does not match mean dimension " +
                                std::to_string(means.feature_dim));
  }
  // Squared distance has the same argmin as plain L2.
  double best = std::numeric_limits<double>::infinity();
  std::uint32_t best_class = means.class_order.front();
  for (std::uint32_t cls : means.class_order) {
    const double d = squared_distance(feature, means.means.at(cls));
    if (d < best) {
      best = d;
      best_class = cls;
    }
  }
  return best_class;
}

BatchResult classify_batch(const std::vector<const Sample*>& samples,
                           const Extractor& extractor, const FeatureMeanMatrix& means,
                           std::size_t required_modalities) {
  BatchResult result;
  result.predictions.reserve(samples.size());
  for (const Sample* sample : samples) {
    if (sample->modalities.size() < required_modalities) {
      ++result.skipped;
      continue;
    }
    const FeatureVec feature = extractor(*sample);
    Prediction pred;
    pred.sample_id = sample->id;
    pred.true_label = sample->label;
    pred.predicted = nme_classify(feature, means);

    double best = std::numeric_limits<double>::infinity();
    double second = std::numeric_limits<double>::infinity();
    for (std::uint32_t cls : means.class_order) {
      const double d = std::sqrt(squared_distance(feature, means.means.at(cls)));
      if (cls == pred.predicted) {
        best = d;
      } else if (d < second) {
        second = d;
      }
    }
    pred.distance = best;
    pred.margin = means.class_order.size() > 1 ? second - best
                                               : std::numeric_limits<double>::infinity();
    result.predictions.push_back(pred);
  }
  return result;
}

void write_predictions_csv(const BatchResult& batch, const std::string& path) {
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw std::runtime_error("cannot open predictions csv for writing: " + path);
  file << "sample_id,true_class,pred_class,distance_to_pred,distance_margin\n";
  file.precision(17);
  for (const Prediction& p : batch.predictions) {
    file << p.sample_id << "," << p.true_label << "," << p.predicted << "," << p.distance
         << "," << p.margin << "\n";
  }
  if (!file) throw std::runtime_error("write failed for predictions csv: " + path);
}

}  // namespace catnet
