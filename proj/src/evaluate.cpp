#include "catnet/evaluate.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace catnet {

AccuracyMatrix::AccuracyMatrix(std::size_t n_tasks) : n_(n_tasks), cells_(n_tasks * n_tasks) {
  if (n_tasks == 0) throw std::invalid_argument("accuracy matrix needs at least one task");
}

void AccuracyMatrix::set(std::size_t row, std::size_t col, double value) {
  if (row >= n_ || col >= n_) throw std::out_of_range("accuracy matrix index out of range");
  if (col > row) {
    throw std::invalid_argument("accuracy matrix entry (" + std::to_string(row) + "," +
                                std::to_string(col) + ") is above the diagonal");
  }
  if (!(value >= 0.0 && value <= 1.0)) {
    throw std::invalid_argument("accuracy " + std::to_string(value) + " outside [0,1]");
  }
  cells_[row * n_ + col] = value;
}

std::optional<double> AccuracyMatrix::get(std::size_t row, std::size_t col) const {
  if (row >= n_ || col >= n_) throw std::out_of_range("accuracy matrix index out of range");
  return cells_[row * n_ + col];
}

double accuracy(const std::vector<std::uint32_t>& preds,
                const std::vector<std::uint32_t>& truths) {
  if (preds.size() != truths.size()) {
    throw std::invalid_argument("accuracy: " + std::to_string(preds.size()) +
                                " predictions vs " + std::to_string(truths.size()) + " truths");
  }
  if (preds.empty()) throw std::invalid_argument("accuracy: empty inputs");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == truths[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

double compute_bwt(const AccuracyMatrix& r) {
  if (r.n_tasks() < 2) throw std::invalid_argument("BWT undefined for single task");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 1; i < r.n_tasks(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const auto v = r.get(i, j);
      if (!v) throw std::invalid_argument("BWT: entry (" + std::to_string(i) + "," +
                                          std::to_string(j) + ") is undefined");
      sum += *v;
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

double compute_bwt_delta(const AccuracyMatrix& r) {
  if (r.n_tasks() < 2) throw std::invalid_argument("BWT undefined for single task");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 1; i < r.n_tasks(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const auto v = r.get(i, j);
      const auto diag = r.get(j, j);
      if (!v || !diag) throw std::invalid_argument("BWT delta: undefined entry");
      sum += *v - *diag;
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

double compute_mean_accuracy(const AccuracyMatrix& r) {
  const std::size_t last = r.n_tasks() - 1;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j <= last; ++j) {
    const auto v = r.get(last, j);
    if (!v) throw std::invalid_argument("mean accuracy: last-row entry " + std::to_string(j) +
                                        " is undefined");
    sum += *v;
    ++count;
  }
  return sum / static_cast<double>(count);
}

double initial_accuracy(const AccuracyMatrix& r) {
  const auto v = r.get(0, 0);
  if (!v) throw std::invalid_argument("initial accuracy: R_00 is undefined");
  return *v;
}

std::map<std::uint32_t, double> summarize_means(const FeatureMeanMatrix& means) {
  return summarize_means(means, 0, means.feature_dim);
}

std::map<std::uint32_t, double> summarize_means(const FeatureMeanMatrix& means,
                                                std::size_t begin_dim, std::size_t end_dim) {
  if (means.empty()) throw std::invalid_argument("summarize_means: empty mean matrix");
  if (begin_dim >= end_dim || end_dim > means.feature_dim) {
    throw std::invalid_argument("summarize_means: bad dim range [" + std::to_string(begin_dim) +
                                ", " + std::to_string(end_dim) + ") for feature_dim " +
                                std::to_string(means.feature_dim));
  }
  std::map<std::uint32_t, double> out;
  const double inv = 1.0 / static_cast<double>(end_dim - begin_dim);
  for (std::uint32_t cls : means.class_order) {
    const FeatureVec& mean = means.means.at(cls);
    double sum = 0.0;
    for (std::size_t d = begin_dim; d < end_dim; ++d) sum += mean[d];
    out[cls] = sum * inv;
  }
  return out;
}

void write_matrix_csv(const AccuracyMatrix& r, const std::string& path) {
  std::ofstream file(path, std::ios::trunc);
  if (!file) throw std::runtime_error("cannot open matrix csv for writing: " + path);
  file.precision(17);
  for (std::size_t i = 0; i < r.n_tasks(); ++i) {
    for (std::size_t j = 0; j < r.n_tasks(); ++j) {
      if (j > 0) file << ",";
      const auto v = r.get(i, j);
      if (v) file << *v;
    }
    file << "\n";
  }
  if (!file) throw std::runtime_error("write failed for matrix csv: " + path);
}

AccuracyMatrix read_matrix_csv(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw std::runtime_error("cannot open matrix csv: " + path);
  std::vector<std::vector<std::optional<double>>> rows;
  std::string line;
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    std::vector<std::optional<double>> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      row.push_back(cell.empty() ? std::optional<double>() : std::stod(cell));
    }
    // a trailing empty cell is swallowed by getline; pad to square later
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("matrix csv " + path + " is empty");
  AccuracyMatrix r(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size() && j < rows.size(); ++j) {
      if (rows[i][j]) r.set(i, j, *rows[i][j]);
    }
  }
  return r;
}

void write_heatmap_pgm(const AccuracyMatrix& r, const std::string& path,
                       std::size_t cell_pixels) {
  if (cell_pixels == 0) throw std::invalid_argument("heatmap cell size must be > 0");
  const std::size_t n = r.n_tasks();
  const std::size_t side = n * cell_pixels;
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot open heatmap for writing: " + path);
  file << "P5\n" << side << " " << side << "\n255\n";
  std::string row_pixels(side, '\0');
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const auto v = r.get(i, j);
      // defined cells span 64..255 so a defined 0.0 stays distinct from undefined
      const unsigned char shade =
          v ? static_cast<unsigned char>(std::lround(64.0 + 191.0 * *v)) : 0;
      for (std::size_t px = 0; px < cell_pixels; ++px) {
        row_pixels[j * cell_pixels + px] = static_cast<char>(shade);
      }
    }
    for (std::size_t py = 0; py < cell_pixels; ++py) {
      file.write(row_pixels.data(), static_cast<std::streamsize>(row_pixels.size()));
    }
  }
  if (!file) throw std::runtime_error("write failed for heatmap: " + path);
}

}  // namespace catnet
