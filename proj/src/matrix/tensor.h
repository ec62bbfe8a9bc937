// matrix/tensor.h

// Copyright 2026  cmkit authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CMKIT_MATRIX_TENSOR_H_
#define CMKIT_MATRIX_TENSOR_H_

#include <cmath>
#include <initializer_list>
#include <string>
#include <vector>

#include "base/common.h"

namespace cmkit {

// Dense row-major tensor of doubles, rank 0..4.  Deliberately plain:
// shape plus contiguous storage, deep-copy value semantics.  All layout
// tricks (views, strides) live in the ops that need them.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int64> shape, real fill = 0.0)
      : shape_(std::move(shape)) {
    int64 n = 1;
    for (int64 d : shape_) {
      CMKIT_ASSERT(d >= 0);
      n *= d;
    }
    data_.assign(static_cast<size_t>(n), fill);
  }
  Tensor(std::vector<int64> shape, std::vector<real> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    CMKIT_ASSERT(static_cast<int64>(data_.size()) == NumElementsOf(shape_));
  }

  static Tensor Scalar(real v) { return Tensor({}, std::vector<real>{v}); }

  int32 NumAxes() const { return static_cast<int32>(shape_.size()); }
  int64 Dim(int32 axis) const { return shape_[static_cast<size_t>(axis)]; }
  const std::vector<int64> &shape() const { return shape_; }
  int64 NumElements() const { return static_cast<int64>(data_.size()); }
  bool SameShape(const Tensor &other) const { return shape_ == other.shape_; }

  real *data() { return data_.data(); }
  const real *data() const { return data_.data(); }

  real &operator[](int64 i) { return data_[static_cast<size_t>(i)]; }
  real operator[](int64 i) const { return data_[static_cast<size_t>(i)]; }

  real &operator()(int64 i, int64 j) {
    return data_[static_cast<size_t>(i * shape_[1] + j)];
  }
  real operator()(int64 i, int64 j) const {
    return data_[static_cast<size_t>(i * shape_[1] + j)];
  }
  real &operator()(int64 i, int64 j, int64 k) {
    return data_[static_cast<size_t>((i * shape_[1] + j) * shape_[2] + k)];
  }
  real operator()(int64 i, int64 j, int64 k) const {
    return data_[static_cast<size_t>((i * shape_[1] + j) * shape_[2] + k)];
  }
  real &operator()(int64 i, int64 j, int64 k, int64 l) {
    return data_[static_cast<size_t>(
        ((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
  }
  real operator()(int64 i, int64 j, int64 k, int64 l) const {
    return data_[static_cast<size_t>(
        ((i * shape_[1] + j) * shape_[2] + k) * shape_[3] + l)];
  }

  void Fill(real v) { std::fill(data_.begin(), data_.end(), v); }
  void SetZero() { Fill(0.0); }

  // In-place reshape; element count must match.
  void Reshape(std::vector<int64> shape) {
    CMKIT_ASSERT(NumElementsOf(shape) == NumElements());
    shape_ = std::move(shape);
  }

  bool AllFinite() const {
    for (real v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  std::string ShapeString() const {
    std::string s = "[";
    for (size_t i = 0; i < shape_.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(shape_[i]);
    }
    return s + "]";
  }

  static int64 NumElementsOf(const std::vector<int64> &shape) {
    int64 n = 1;
    for (int64 d : shape) n *= d;
    return n;
  }

 private:
  std::vector<int64> shape_;
  std::vector<real> data_;
};

}  // namespace cmkit

#endif  // CMKIT_MATRIX_TENSOR_H_
