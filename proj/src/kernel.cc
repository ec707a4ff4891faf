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

#include "selftalk/kernel.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "selftalk/errors.h"
#include "selftalk/random.h"

namespace selftalk {
namespace {

std::string ShapeString(size_t rows, size_t cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace

Matrix::Matrix(size_t rows, size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("matrix data length " + std::to_string(data_.size()) +
                     " does not match shape " + ShapeString(rows, cols));
  }
}

void Matrix::Fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Vec MatVec(const Matrix& w, std::span<const double> x) {
  if (x.size() != w.cols()) {
    throw ShapeError("matvec: matrix " + ShapeString(w.rows(), w.cols()) +
                     " times vector of length " + std::to_string(x.size()));
  }
  Vec y(w.rows(), 0.0);
  for (size_t r = 0; r < w.rows(); ++r) {
    const double* row = w.data().data() + r * w.cols();
    // Four independent partial sums; the order is fixed so results stay
    // reproducible.
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    size_t c = 0;
    for (; c + 4 <= w.cols(); c += 4) {
      s0 += row[c] * x[c];
      s1 += row[c + 1] * x[c + 1];
      s2 += row[c + 2] * x[c + 2];
      s3 += row[c + 3] * x[c + 3];
    }
    for (; c < w.cols(); ++c) s0 += row[c] * x[c];
    y[r] = (s0 + s1) + (s2 + s3);
  }
  return y;
}

Vec Affine(const Matrix& w, std::span<const double> x,
           std::span<const double> b) {
  if (b.size() != w.rows()) {
    throw ShapeError("affine: bias length " + std::to_string(b.size()) +
                     " for matrix " + ShapeString(w.rows(), w.cols()));
  }
  Vec y = MatVec(w, x);
  for (size_t r = 0; r < y.size(); ++r) y[r] += b[r];
  return y;
}

void AddMatTVec(const Matrix& w, std::span<const double> g,
                std::span<double> y) {
  if (g.size() != w.rows() || y.size() != w.cols()) {
    throw ShapeError("transposed matvec shape mismatch");
  }
  for (size_t r = 0; r < w.rows(); ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    const double* row = w.data().data() + r * w.cols();
    for (size_t c = 0; c < w.cols(); ++c) y[c] += row[c] * gr;
  }
}

void AddOuter(Matrix& grad, std::span<const double> g,
              std::span<const double> x) {
  if (g.size() != grad.rows() || x.size() != grad.cols()) {
    throw ShapeError("outer product shape mismatch");
  }
  for (size_t r = 0; r < grad.rows(); ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    double* row = grad.data().data() + r * grad.cols();
    for (size_t c = 0; c < grad.cols(); ++c) row[c] += gr * x[c];
  }
}

Vec Softmax(std::span<const double> z) {
  if (z.empty()) throw ShapeError("softmax of an empty vector");
  const double top = *std::max_element(z.begin(), z.end());
  Vec p(z.size());
  double sum = 0.0;
  for (size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - top);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

Vec TanhVec(std::span<const double> z) {
  Vec out(z.size());
  std::transform(z.begin(), z.end(), out.begin(),
                 [](double v) { return std::tanh(v); });
  return out;
}

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Vec SigmoidVec(std::span<const double> z) {
  Vec out(z.size());
  std::transform(z.begin(), z.end(), out.begin(), Sigmoid);
  return out;
}

double CrossEntropy(std::span<const double> probabilities, size_t target) {
  if (target >= probabilities.size()) {
    throw std::out_of_range("cross entropy target " + std::to_string(target) +
                            " outside distribution of size " +
                            std::to_string(probabilities.size()));
  }
  return -std::log(std::max(probabilities[target], kProbabilityFloor));
}

Matrix& ParamStore::Add(const std::string& name, size_t rows, size_t cols) {
  auto [it, inserted] =
      params_.emplace(name, Parameter{Matrix(rows, cols), Matrix(rows, cols)});
  if (!inserted) throw std::invalid_argument("duplicate parameter " + name);
  return it->second.value;
}

Parameter& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter " + name);
  return it->second;
}

const Parameter& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter " + name);
  return it->second;
}

Matrix& ParamStore::value(const std::string& name) { return at(name).value; }
const Matrix& ParamStore::value(const std::string& name) const {
  return at(name).value;
}
Matrix& ParamStore::grad(const std::string& name) { return at(name).grad; }
const Matrix& ParamStore::grad(const std::string& name) const {
  return at(name).grad;
}

size_t ParamStore::TotalSize() const {
  size_t total = 0;
  for (const auto& [name, p] : params_) total += p.value.size();
  return total;
}

void ParamStore::ZeroGrad() {
  for (auto& [name, p] : params_) p.grad.Fill(0.0);
}

double ParamStore::GradNorm() const {
  double sum = 0.0;
  for (const auto& [name, p] : params_) {
    for (double g : p.grad.data()) sum += g * g;
  }
  return std::sqrt(sum);
}

void ParamStore::InitUniform(uint64_t seed, double scale,
                             const std::vector<std::string>& biases) {
  Rng rng(seed);
  for (auto& [name, p] : params_) {
    const bool is_bias =
        std::find(biases.begin(), biases.end(), name) != biases.end();
    for (double& v : p.value.data()) {
      v = is_bias ? 0.0 : rng.Uniform(-scale, scale);
    }
    p.grad.Fill(0.0);
  }
}

bool ParamStore::SameValues(const ParamStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  auto it = other.params_.begin();
  for (const auto& [name, p] : params_) {
    if (name != it->first || !(p.value == it->second.value)) return false;
    ++it;
  }
  return true;
}

void SgdStep(ParamStore& store, const SgdOptions& options) {
  for (const auto& [name, p] : store) {
    for (double g : p.grad.data()) {
      if (!std::isfinite(g)) {
        throw NumericError("non-finite gradient in parameter " + name);
      }
    }
  }
  double scale = 1.0;
  const double norm = store.GradNorm();
  if (norm > options.clip) scale = options.clip / norm;
  const double step = options.learning_rate * scale;
  for (auto& [name, p] : store) {
    auto& values = p.value.data();
    auto& grads = p.grad.data();
    for (size_t i = 0; i < values.size(); ++i) {
      values[i] -= step * grads[i];
      grads[i] = 0.0;
    }
  }
}

GradCheckReport GradCheck(ParamStore& store, const DifferentiableLoss& loss,
                          const GradCheckOptions& options) {
  store.ZeroGrad();
  loss(store, /*accumulate=*/true);
  std::map<std::string, Matrix> analytic;
  for (const auto& [name, p] : store) analytic.emplace(name, p.grad);
  store.ZeroGrad();

  const bool exhaustive = store.TotalSize() <= options.exhaustive_limit;
  Rng rng(options.seed);
  GradCheckReport report;
  for (auto& [name, p] : store) {
    GradCheckEntry entry;
    entry.name = name;
    std::vector<size_t> coords;
    const size_t n = p.value.size();
    if (exhaustive || n <= options.samples_per_matrix) {
      coords.resize(n);
      std::iota(coords.begin(), coords.end(), size_t{0});
    } else {
      for (size_t k = 0; k < options.samples_per_matrix; ++k) {
        coords.push_back(static_cast<size_t>(rng.Below(n)));
      }
    }
    const Matrix& grad = analytic.at(name);
    for (size_t i : coords) {
      double& theta = p.value.data()[i];
      const double saved = theta;
      theta = saved + options.epsilon;
      const double plus = loss(store, false);
      theta = saved - options.epsilon;
      const double minus = loss(store, false);
      theta = saved;
      const double numeric = (plus - minus) / (2.0 * options.epsilon);
      const double a = grad.data()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      ++entry.checked;
      if (entry.checked == 1 || rel > entry.max_relative_error) {
        entry.max_relative_error = rel;
        entry.worst_index = i;
        entry.worst_analytic = a;
        entry.worst_numeric = numeric;
      }
    }
    entry.passed = entry.max_relative_error <= options.tolerance;
    report.max_relative_error =
        std::max(report.max_relative_error, entry.max_relative_error);
    report.passed = report.passed && entry.passed;
    report.entries.push_back(std::move(entry));
  }
  store.ZeroGrad();
  return report;
}

}  // namespace selftalk
