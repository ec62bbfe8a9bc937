// tests/test-util.h

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

#ifndef CMKIT_TESTS_TEST_UTIL_H_
#define CMKIT_TESTS_TEST_UTIL_H_

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "base/rng.h"
#include "nnet/autograd.h"

namespace cmkit {
namespace test {

inline Tensor RandomTensor(std::vector<int64> shape, Rng *rng, real lo = -1.0,
                           real hi = 1.0) {
  Tensor t(std::move(shape));
  for (int64 i = 0; i < t.NumElements(); ++i) t[i] = rng->Uniform(lo, hi);
  return t;
}

// Largest |a-b| over all elements, scaled by the largest |b| (peak-relative).
inline real PeakRelativeError(const Tensor &a, const Tensor &b) {
  CMKIT_ASSERT(a.SameShape(b));
  real max_diff = 0.0, peak = 0.0;
  for (int64 i = 0; i < a.NumElements(); ++i) {
    max_diff = std::max(max_diff, std::abs(a[i] - b[i]));
    peak = std::max(peak, std::abs(b[i]));
  }
  return max_diff / (peak > 0.0 ? peak : 1.0);
}

inline real MaxAbsDiff(const Tensor &a, const Tensor &b) {
  CMKIT_ASSERT(a.SameShape(b));
  real m = 0.0;
  for (int64 i = 0; i < a.NumElements(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

struct GradCheckResult {
  int64 checked = 0;
  int64 passed = 0;
  real worst = 0.0;
  bool ok(real min_pass_fraction = 1.0) const {
    return checked > 0 &&
           static_cast<real>(passed) >=
               min_pass_fraction * static_cast<real>(checked);
  }
};

// Central-difference gradient check.  `forward` must rebuild the graph from
// the current parameter values and return a scalar loss Variable.  `params`
// are the leaves whose analytic gradients are compared.  Coordinates are
// subsampled when a parameter is large.
inline GradCheckResult GradCheck(
    const std::function<nn::Variable()> &forward,
    std::vector<nn::Variable> params, real step = 1e-5, real tol = 1e-3,
    int64 max_coords_per_param = 64, Rng *rng = nullptr) {
  GradCheckResult res;
  for (nn::Variable &p : params) p.ZeroGrad();
  nn::Variable loss = forward();
  nn::Backward(loss);

  Rng fallback(1234);
  Rng *r = rng ? rng : &fallback;
  for (nn::Variable &p : params) {
    int64 n = p.Value().NumElements();
    std::vector<int64> coords;
    if (n <= max_coords_per_param) {
      for (int64 i = 0; i < n; ++i) coords.push_back(i);
    } else {
      for (int64 i = 0; i < max_coords_per_param; ++i)
        coords.push_back(r->UniformInt(0, n - 1));
    }
    for (int64 c : coords) {
      real orig = p.Value()[c];
      p.MutableValue()[c] = orig + step;
      real up = forward().Value()[0];
      p.MutableValue()[c] = orig - step;
      real down = forward().Value()[0];
      p.MutableValue()[c] = orig;
      real numeric = (up - down) / (2.0 * step);
      real analytic = p.HasGrad() ? p.Grad()[c] : 0.0;
      real denom = std::max({std::abs(numeric), std::abs(analytic), 1e-4});
      real rel = std::abs(numeric - analytic) / denom;
      res.checked++;
      if (rel <= tol) res.passed++;
      res.worst = std::max(res.worst, rel);
    }
  }
  return res;
}

}  // namespace test
}  // namespace cmkit

#endif  // CMKIT_TESTS_TEST_UTIL_H_
