// Copyright 2026 The SEHM Authors.
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

#include "sehm/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sehm {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << "x";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d <= 0) throw SehmError("shape " + shape_string(shape) + " has a non-positive extent");
    n *= d;
  }
  return n;
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<size_t>(shape_numel(shape_)), 0.0);
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (static_cast<int64_t>(data_.size()) != shape_numel(shape_)) {
    throw SehmError("tensor data length " + std::to_string(data_.size()) +
                    " does not match shape " + shape_string(shape_));
  }
}

Tensor Tensor::full(Shape shape, double value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

Tensor Tensor::vector(std::vector<double> values) {
  const auto n = static_cast<int64_t>(values.size());
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(int64_t rows, int64_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

int64_t Tensor::dim(int axis) const {
  if (axis < 0) axis += rank();
  if (axis < 0 || axis >= rank()) {
    throw SehmError("axis " + std::to_string(axis) + " out of range for shape " +
                    shape_string(shape_));
  }
  return shape_[static_cast<size_t>(axis)];
}

size_t Tensor::offset(std::initializer_list<int64_t> index) const {
  if (index.size() != shape_.size()) {
    throw SehmError("index rank does not match shape " + shape_string(shape_));
  }
  size_t off = 0;
  size_t axis = 0;
  for (int64_t i : index) {
    if (i < 0 || i >= shape_[axis]) throw SehmError("index out of range for shape " + shape_string(shape_));
    off = off * static_cast<size_t>(shape_[axis]) + static_cast<size_t>(i);
    ++axis;
  }
  return off;
}

double Tensor::at(std::initializer_list<int64_t> index) const { return data_[offset(index)]; }
double& Tensor::at(std::initializer_list<int64_t> index) { return data_[offset(index)]; }

double Tensor::item() const {
  if (data_.size() != 1) throw SehmError("item() on tensor of shape " + shape_string(shape_));
  return data_[0];
}

bool Tensor::all_finite() const {
  // x * 0 is NaN exactly when x is inf or NaN; four lanes keep the loop cheap.
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const size_t n = data_.size();
  size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (size_t j = 0; j < 4; ++j) acc[j] += data_[i + j] * 0.0;
  }
  for (; i < n; ++i) acc[0] += data_[i] * 0.0;
  return acc[0] + acc[1] + acc[2] + acc[3] == 0.0;
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != static_cast<int64_t>(data_.size())) {
    throw SehmError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

void Tensor::add_(const Tensor& other) {
  if (other.data_.size() != data_.size()) {
    throw SehmError("add_: shape " + shape_string(shape_) + " vs " + shape_string(other.shape_));
  }
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

}  // namespace sehm
