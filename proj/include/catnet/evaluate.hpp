#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "catnet/exemplar.hpp"

namespace catnet {

// N x N matrix of per-task accuracies; entry (i, j) is the task-i model
// evaluated on task-j test data. Only j <= i is defined: earlier models
// cannot emit class ids they have not learned.
class AccuracyMatrix {
 public:
  explicit AccuracyMatrix(std::size_t n_tasks);

  std::size_t n_tasks() const { return n_; }
  void set(std::size_t row, std::size_t col, double accuracy);
  std::optional<double> get(std::size_t row, std::size_t col) const;

 private:
  std::size_t n_;
  std::vector<std::optional<double>> cells_;
};

// Fraction of exact matches. Lengths must be equal and non-zero.
double accuracy(const std::vector<std::uint32_t>& preds,
                const std::vector<std::uint32_t>& truths);

// Mean of the strict lower triangle (later models on earlier tasks).
double compute_bwt(const AccuracyMatrix& r);

// Auxiliary forgetting delta, mean of R_ij - R_jj over i > j. Reported
// alongside compute_bwt for context; not the headline metric.
double compute_bwt_delta(const AccuracyMatrix& r);

// Mean of the last row's defined entries (final model on every task).
double compute_mean_accuracy(const AccuracyMatrix& r);

// R_00: the task-0 model on task-0 test data.
double initial_accuracy(const AccuracyMatrix& r);

// Per-class scalar: each class mean averaged over its feature coordinates.
// `begin_dim`/`end_dim` select a coordinate range, which two-stream callers
// use to summarize each stream separately.
std::map<std::uint32_t, double> summarize_means(const FeatureMeanMatrix& means);
std::map<std::uint32_t, double> summarize_means(const FeatureMeanMatrix& means,
                                                std::size_t begin_dim, std::size_t end_dim);

void write_matrix_csv(const AccuracyMatrix& r, const std::string& path);
AccuracyMatrix read_matrix_csv(const std::string& path);

// Binary PGM (P5) heatmap of the matrix, one cell per task pair, lighter =
// higher accuracy. Undefined cells render black.
void write_heatmap_pgm(const AccuracyMatrix& r, const std::string& path,
                       std::size_t cell_pixels = 24);

}  // namespace catnet
