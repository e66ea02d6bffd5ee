#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace catnet {

// Dense row-major matrix of doubles.
struct Tensor2 {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor2() = default;
  Tensor2(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  bool same_shape(const Tensor2& other) const {
    return rows == other.rows && cols == other.cols;
  }
};

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline bool all_finite(const Tensor2& t) { return all_finite(t.data); }

// y = W x.  Throws when x does not match W's column count, naming both dims.
inline std::vector<double> matvec(const Tensor2& w, const std::vector<double>& x,
                                  const char* context = "matvec") {
  if (x.size() != w.cols) {
    throw std::invalid_argument(std::string(context) + ": input length " +
                                std::to_string(x.size()) +
                                " does not match weight columns " +
                                std::to_string(w.cols));
  }
  std::vector<double> y(w.rows, 0.0);
  for (std::size_t r = 0; r < w.rows; ++r) {
    double acc = 0.0;
    const double* row = &w.data[r * w.cols];
    for (std::size_t c = 0; c < w.cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
  return y;
}

// y = W^T g.
inline std::vector<double> matvec_transposed(const Tensor2& w,
                                             const std::vector<double>& g) {
  if (g.size() != w.rows) {
    throw std::invalid_argument("matvec_transposed: input length " +
                                std::to_string(g.size()) +
                                " does not match weight rows " +
                                std::to_string(w.rows));
  }
  std::vector<double> y(w.cols, 0.0);
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* row = &w.data[r * w.cols];
    const double gr = g[r];
    for (std::size_t c = 0; c < w.cols; ++c) y[c] += row[c] * gr;
  }
  return y;
}

// acc += g x^T.
inline void add_outer(Tensor2& acc, const std::vector<double>& g,
                      const std::vector<double>& x) {
  for (std::size_t r = 0; r < acc.rows; ++r) {
    double* row = &acc.data[r * acc.cols];
    const double gr = g[r];
    for (std::size_t c = 0; c < acc.cols; ++c) row[c] += gr * x[c];
  }
}

inline double l2_norm(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

inline double squared_distance(const std::vector<double>& a,
                               const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace catnet
