// Copyright 2026 The Selftalk Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SELFTALK_KERNEL_H_
#define SELFTALK_KERNEL_H_

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace selftalk {

using Vec = std::vector<double>;

// Dense row-major matrix of doubles. Column vectors (biases) are stored as
// n x 1 matrices.
class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(size_t rows, size_t cols, std::vector<double> data);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return data_.size(); }

  double& operator()(size_t r, size_t c) { return data_[r * cols_ + c]; }
  double operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void Fill(double value);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

// W x + b. Throws ShapeError on mismatch.
Vec Affine(const Matrix& w, std::span<const double> x,
           std::span<const double> b);

// W x with no bias.
Vec MatVec(const Matrix& w, std::span<const double> x);

// y += W^T g.
void AddMatTVec(const Matrix& w, std::span<const double> g, std::span<double> y);

// G += g x^T.
void AddOuter(Matrix& grad, std::span<const double> g,
              std::span<const double> x);

// Max-subtracted softmax. Throws ShapeError on empty input.
Vec Softmax(std::span<const double> z);

Vec TanhVec(std::span<const double> z);
Vec SigmoidVec(std::span<const double> z);
double Sigmoid(double z);

inline constexpr double kProbabilityFloor = 1e-12;

// -ln(max(p[target], 1e-12)). Throws std::out_of_range on a bad target.
double CrossEntropy(std::span<const double> probabilities, size_t target);

struct Parameter {
  Matrix value;
  Matrix grad;
};

// Named parameters with paired gradient buffers, iterated in lexicographic
// name order.
class ParamStore {
 public:
  using Map = std::map<std::string, Parameter>;

  // Adds a zero-initialized parameter. Names must be unique.
  Matrix& Add(const std::string& name, size_t rows, size_t cols);

  Matrix& value(const std::string& name);
  const Matrix& value(const std::string& name) const;
  Matrix& grad(const std::string& name);
  const Matrix& grad(const std::string& name) const;
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.contains(name); }

  Map::iterator begin() { return params_.begin(); }
  Map::iterator end() { return params_.end(); }
  Map::const_iterator begin() const { return params_.begin(); }
  Map::const_iterator end() const { return params_.end(); }
  size_t count() const { return params_.size(); }

  // Total number of scalar parameters.
  size_t TotalSize() const;
  void ZeroGrad();
  double GradNorm() const;

  // Weights uniform in [-scale, scale], parameters named in `biases` zero.
  void InitUniform(uint64_t seed, double scale,
                   const std::vector<std::string>& biases);

  // True when every parameter value matches bit-for-bit.
  bool SameValues(const ParamStore& other) const;

 private:
  Map params_;
};

struct SgdOptions {
  double learning_rate = 0.1;
  double clip = 5.0;
};

// Shared SGD training schedule for both models.
struct TrainOptions {
  size_t epochs = 15;
  uint64_t seed = 42;
  double learning_rate = 0.1;
  // The learning rate is multiplied by decay_factor every decay_every epochs.
  double decay_factor = 0.5;
  size_t decay_every = 5;
  double clip = 5.0;
  double init_scale = 0.1;
};

// Clips the global gradient L2 norm to `clip`, applies theta -= lr * g and
// zeroes the gradients. Throws NumericError naming the first parameter with
// a non-finite gradient, before any value is modified.
void SgdStep(ParamStore& store, const SgdOptions& options);

// Evaluates the loss at the store's current values. When accumulate is
// true, the loss also adds its gradient into the store's gradient buffers.
using DifferentiableLoss = std::function<double(ParamStore&, bool accumulate)>;

struct GradCheckEntry {
  std::string name;
  size_t checked = 0;
  double max_relative_error = 0.0;
  size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_relative_error = 0.0;
  bool passed = true;
};

struct GradCheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  // Models larger than this are sampled per matrix.
  size_t exhaustive_limit = 2000;
  size_t samples_per_matrix = 200;
  uint64_t seed = 17;
};

// Compares analytic gradients against central finite differences. The
// relative error per coordinate is |a - n| / max(|a|, |n|, 1e-8). Leaves the
// store's values unchanged and its gradients zeroed.
GradCheckReport GradCheck(ParamStore& store, const DifferentiableLoss& loss,
                          const GradCheckOptions& options = {});

}  // namespace selftalk

#endif  // SELFTALK_KERNEL_H_
