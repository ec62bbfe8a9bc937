// aug/rir.cc

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

#include "aug/rir.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aug/noise-augment.h"
#include "feat/signal.h"

namespace cmkit {

namespace {
constexpr real kPi = 3.14159265358979323846;
// Half width of the windowed-sinc fractional-delay kernel, in samples.
constexpr int32 kSincHalfWidth = 32;
// Amplitude clamp for near-coincident source and mic.
constexpr real kMinDistance = 0.01;
}  // namespace

void RoomSpec::Validate() const {
  for (int32 i = 0; i < 3; ++i) {
    if (dims[static_cast<size_t>(i)] <= 2.0 * kMinWallMargin)
      CMKIT_ERR(InvalidInputError)
          << "room dimension " << i << " too small: "
          << dims[static_cast<size_t>(i)];
    auto inside = [&](real p) {
      return p >= kMinWallMargin &&
             p <= dims[static_cast<size_t>(i)] - kMinWallMargin;
    };
    if (!inside(source[static_cast<size_t>(i)]))
      CMKIT_ERR(InvalidInputError)
          << "source coordinate " << i << " (" << source[static_cast<size_t>(i)]
          << ") outside the room margin";
    if (!inside(mic[static_cast<size_t>(i)]))
      CMKIT_ERR(InvalidInputError)
          << "mic coordinate " << i << " (" << mic[static_cast<size_t>(i)]
          << ") outside the room margin";
  }
  if (rt60_target <= 0.0)
    CMKIT_ERR(InvalidInputError) << "rt60_target must be positive, got "
                                 << rt60_target;
  if (max_image_order < 0)
    CMKIT_ERR(InvalidInputError) << "max_image_order must be >= 0";
}

namespace {

struct LatticeBounds {
  std::array<int64, 3> order;
  real reach = 0.0;
  real direct_dist = 0.0;
};

LatticeBounds ComputeBounds(const RoomSpec &spec) {
  LatticeBounds b;
  real dd = 0.0;
  for (int32 i = 0; i < 3; ++i) {
    real d = spec.source[static_cast<size_t>(i)] -
             spec.mic[static_cast<size_t>(i)];
    dd += d * d;
  }
  b.direct_dist = std::sqrt(dd);
  // Tail modeled all the way to the -60 dB region.
  real t_tail = spec.rt60_target + 0.02;
  real max_dist = b.direct_dist + kSpeedOfSound * t_tail;
  for (int32 i = 0; i < 3; ++i) {
    b.order[static_cast<size_t>(i)] =
        static_cast<int64>(std::ceil(
            max_dist / (2.0 * spec.dims[static_cast<size_t>(i)]))) +
        1;
    if (spec.max_image_order > 0)
      b.order[static_cast<size_t>(i)] = std::min<int64>(
          b.order[static_cast<size_t>(i)], spec.max_image_order);
  }
  b.reach = max_dist;
  if (spec.max_image_order > 0) {
    real r = 0.0;
    for (int32 i = 0; i < 3; ++i)
      r = std::max(r,
                   2.0 * static_cast<real>(b.order[static_cast<size_t>(i)]) *
                       spec.dims[static_cast<size_t>(i)]);
    b.reach = std::min(b.reach, r);
  }
  return b;
}

// Deterministic +-1 from the image lattice index.  Reflections carry a
// pseudo-random sign so that overlapping arrivals add incoherently; pure
// specular addition (all positive) piles up in the dense tail and stretches
// the measured decay well past the calibrated target.
real ImageSign(int64 nx, int64 ny, int64 nz, int32 px, int32 py, int32 pz) {
  uint64 h = 0x9e3779b97f4a7c15ull;
  auto mix = [&h](uint64 v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h *= 0xff51afd7ed558ccdull;
    h ^= h >> 33;
  };
  mix(static_cast<uint64>(nx + (1 << 20)));
  mix(static_cast<uint64>(ny + (1 << 20)));
  mix(static_cast<uint64>(nz + (1 << 20)));
  mix(static_cast<uint64>(px * 4 + py * 2 + pz));
  return (h & 1ull) ? 1.0 : -1.0;
}

// Visits every image within reach with its distance, reflection count and
// sign (the direct path is always positive).
template <class F>
void ForEachImage(const RoomSpec &spec, const LatticeBounds &b, F &&f) {
  const real Lx = spec.dims[0], Ly = spec.dims[1], Lz = spec.dims[2];
  for (int32 px = 0; px <= 1; ++px)
    for (int32 py = 0; py <= 1; ++py)
      for (int32 pz = 0; pz <= 1; ++pz)
        for (int64 nx = -b.order[0]; nx <= b.order[0]; ++nx) {
          real ix = 2.0 * static_cast<real>(nx) * Lx +
                    (px ? -spec.source[0] : spec.source[0]);
          real dx = ix - spec.mic[0];
          if (std::abs(dx) > b.reach) continue;
          for (int64 ny = -b.order[1]; ny <= b.order[1]; ++ny) {
            real iy = 2.0 * static_cast<real>(ny) * Ly +
                      (py ? -spec.source[1] : spec.source[1]);
            real dy = iy - spec.mic[1];
            real dxy2 = dx * dx + dy * dy;
            if (dxy2 > b.reach * b.reach) continue;
            for (int64 nz = -b.order[2]; nz <= b.order[2]; ++nz) {
              real iz = 2.0 * static_cast<real>(nz) * Lz +
                        (pz ? -spec.source[2] : spec.source[2]);
              real dz = iz - spec.mic[2];
              real dist = std::sqrt(dxy2 + dz * dz);
              if (dist > b.reach) continue;
              int64 refl = std::abs(nx - px) + std::abs(nx) +
                           std::abs(ny - py) + std::abs(ny) +
                           std::abs(nz - pz) + std::abs(nz);
              real sign =
                  (refl == 0) ? 1.0 : ImageSign(nx, ny, nz, px, py, pz);
              f(dist, refl, sign);
            }
          }
        }
}

// T20 fit on a binned energy-decay histogram; returns a negative value when
// there is no usable decay segment (decays too fast to measure).
real Rt60FromBinnedEnergy(const std::vector<real> &energy, real bin_dt) {
  int64 n = static_cast<int64>(energy.size());
  std::vector<real> edc(energy.size());
  real acc = 0.0;
  for (int64 i = n - 1; i >= 0; --i) {
    acc += energy[static_cast<size_t>(i)];
    edc[static_cast<size_t>(i)] = acc;
  }
  if (acc <= 0.0) return -1.0;
  int64 peak = 0;
  for (int64 i = 0; i < n; ++i)
    if (energy[static_cast<size_t>(i)] > energy[static_cast<size_t>(peak)])
      peak = i;
  real e0 = edc[static_cast<size_t>(peak)];
  int64 t1 = -1, t2 = -1;
  for (int64 i = peak; i < n; ++i) {
    if (edc[static_cast<size_t>(i)] <= 0.0) break;
    real db = 10.0 * std::log10(edc[static_cast<size_t>(i)] / e0);
    if (t1 < 0 && db <= -5.0) t1 = i;
    if (db <= -25.0) {
      t2 = i;
      break;
    }
  }
  if (t1 < 0 || t2 < 0 || t2 <= t1) return -1.0;
  real sx = 0, sy = 0, sxx = 0, sxy = 0;
  int64 count = 0;
  for (int64 i = t1; i <= t2; ++i) {
    real y = 10.0 * std::log10(edc[static_cast<size_t>(i)] / e0);
    real x = static_cast<real>(i - t1);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  real denom = static_cast<real>(count) * sxx - sx * sx;
  if (denom <= 0.0) return -1.0;
  real slope = (static_cast<real>(count) * sxy - sx * sy) / denom / bin_dt;
  if (slope >= -1e-9) return -1.0;
  return -60.0 / slope;
}

}  // namespace

Waveform SimulateRir(const RoomSpec &spec, int32 sample_rate) {
  spec.Validate();
  const real volume = spec.dims[0] * spec.dims[1] * spec.dims[2];
  const real surface = 2.0 * (spec.dims[0] * spec.dims[1] +
                              spec.dims[0] * spec.dims[2] +
                              spec.dims[1] * spec.dims[2]);

  // Eyring starting point: rt60 = 0.161 V / (-S ln(1 - alpha)).
  real alpha = 1.0 - std::exp(-0.161 * volume / (surface * spec.rt60_target));
  real beta = std::sqrt(std::max(0.0, 1.0 - alpha));
  LatticeBounds bounds = ComputeBounds(spec);

  // The purely specular image field decays slower than the diffuse-field
  // theory behind Eyring's formula, by a geometry-dependent factor.  The
  // wall reflectivity is therefore refined against the simulated decay
  // itself: a time-binned energy histogram keyed by reflection count makes
  // re-evaluating the Schroeder RT60 for a candidate beta nearly free.
  if (beta > 0.02) {
    const real bin_dt = 5e-4;
    int64 nbins = static_cast<int64>(
                      std::ceil(bounds.reach / kSpeedOfSound / bin_dt)) +
                  1;
    int64 max_refl = 2 * (bounds.order[0] + bounds.order[1] +
                          bounds.order[2]) +
                     3;
    std::vector<std::vector<real>> hist(
        static_cast<size_t>(nbins),
        std::vector<real>(static_cast<size_t>(max_refl + 1), 0.0));
    ForEachImage(spec, bounds, [&](real dist, int64 refl, real) {
      int64 bin = static_cast<int64>(dist / kSpeedOfSound / bin_dt);
      if (bin >= nbins) bin = nbins - 1;
      real r = std::max(dist, kMinDistance);
      hist[static_cast<size_t>(bin)][static_cast<size_t>(refl)] +=
          1.0 / (r * r);
    });
    std::vector<real> pow_beta(static_cast<size_t>(max_refl + 1));
    std::vector<real> energy(static_cast<size_t>(nbins));
    auto measured = [&](real b) {
      pow_beta[0] = 1.0;
      real b2 = b * b;
      for (int64 i = 1; i <= max_refl; ++i)
        pow_beta[static_cast<size_t>(i)] =
            pow_beta[static_cast<size_t>(i - 1)] * b2;
      for (int64 i = 0; i < nbins; ++i) {
        real acc = 0.0;
        const std::vector<real> &row = hist[static_cast<size_t>(i)];
        for (int64 k = 0; k <= max_refl; ++k) acc += row[static_cast<size_t>(k)] * pow_beta[static_cast<size_t>(k)];
        energy[static_cast<size_t>(i)] = acc;
      }
      return Rt60FromBinnedEnergy(energy, bin_dt);
    };
    real lo = 0.05, hi = 0.999;
    // Decay time grows monotonically with reflectivity; bisect.
    for (int32 it = 0; it < 40; ++it) {
      real mid = 0.5 * (lo + hi);
      real got = measured(mid);
      if (got < 0.0 || got < spec.rt60_target)
        lo = mid;
      else
        hi = mid;
    }
    real refined = 0.5 * (lo + hi);
    real check = measured(refined);
    // Fall back to the analytic value if the refinement went degenerate
    // (e.g. targets far outside what the capped lattice can produce).
    if (check > 0.0 &&
        std::abs(check - spec.rt60_target) <
            std::abs(spec.rt60_target) * 0.5)
      beta = refined;
  }

  int64 length = static_cast<int64>(std::ceil(
                     (bounds.reach / kSpeedOfSound) * sample_rate)) +
                 2 * kSincHalfWidth + 2;
  std::vector<real> h(static_cast<size_t>(length), 0.0);
  const real fs = static_cast<real>(sample_rate);
  ForEachImage(spec, bounds, [&](real dist, int64 refl, real sign) {
    real amp = sign * std::pow(beta, static_cast<real>(refl)) /
               (4.0 * kPi * std::max(dist, kMinDistance));
    if (std::abs(amp) < 1e-12) return;
    real t_arrival = dist / kSpeedOfSound * fs;  // in samples
    int64 center = static_cast<int64>(std::llround(t_arrival));
    for (int64 n = center - kSincHalfWidth; n <= center + kSincHalfWidth;
         ++n) {
      if (n < 0 || n >= length) continue;
      real dt = static_cast<real>(n) - t_arrival;
      real sinc =
          (std::abs(dt) < 1e-9) ? 1.0 : std::sin(kPi * dt) / (kPi * dt);
      real win = 0.5 * (1.0 + std::cos(kPi * dt / (kSincHalfWidth + 1.0)));
      h[static_cast<size_t>(n)] += amp * sinc * win;
    }
  });

  return Waveform(std::move(h), sample_rate);
}

std::vector<real> SchroederDecayDb(const Waveform &rir, int64 *peak_index) {
  rir.Validate();
  int64 n = rir.NumSamples();
  std::vector<real> edc(static_cast<size_t>(n));
  real acc = 0.0;
  for (int64 i = n - 1; i >= 0; --i) {
    real s = rir.samples[static_cast<size_t>(i)];
    acc += s * s;
    edc[static_cast<size_t>(i)] = acc;
  }
  if (acc <= 0.0)
    CMKIT_ERR(EstimationError) << "silent impulse response";
  int64 peak = 0;
  real best = 0.0;
  for (int64 i = 0; i < n; ++i) {
    real a = std::abs(rir.samples[static_cast<size_t>(i)]);
    if (a > best) {
      best = a;
      peak = i;
    }
  }
  real e0 = edc[static_cast<size_t>(peak)];
  std::vector<real> db(static_cast<size_t>(n),
                       -std::numeric_limits<real>::infinity());
  for (int64 i = 0; i < n; ++i)
    if (edc[static_cast<size_t>(i)] > 0.0)
      db[static_cast<size_t>(i)] =
          10.0 * std::log10(edc[static_cast<size_t>(i)] / e0);
  if (peak_index != nullptr) *peak_index = peak;
  return db;
}

real EstimateRt60(const Waveform &rir) {
  int64 peak = 0;
  std::vector<real> db = SchroederDecayDb(rir, &peak);
  int64 n = static_cast<int64>(db.size());
  int64 t1 = -1, t2 = -1;
  for (int64 i = peak; i < n; ++i) {
    if (t1 < 0 && db[static_cast<size_t>(i)] <= -5.0) t1 = i;
    if (db[static_cast<size_t>(i)] <= -25.0) {
      t2 = i;
      break;
    }
  }
  if (t1 < 0 || t2 < 0 || t2 - t1 < 10)
    CMKIT_ERR(EstimationError)
        << "decay segment too short for a -5..-25 dB fit (t1=" << t1
        << ", t2=" << t2 << ")";
  // least-squares line on [t1, t2]
  real sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int64 count = 0;
  for (int64 i = t1; i <= t2; ++i) {
    real y = db[static_cast<size_t>(i)];
    if (!std::isfinite(y))
      CMKIT_ERR(EstimationError) << "decay curve hits zero inside the fit";
    real x = static_cast<real>(i - t1);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  real denom = static_cast<real>(count) * sxx - sx * sx;
  if (denom <= 0.0) CMKIT_ERR(EstimationError) << "degenerate fit segment";
  real slope = (static_cast<real>(count) * sxy - sx * sy) / denom;  // dB/sample
  real slope_per_s = slope * static_cast<real>(rir.sample_rate);
  if (slope_per_s >= -1e-9)
    CMKIT_ERR(EstimationError) << "non-decaying impulse response";
  return -60.0 / slope_per_s;
}

ReverbResult AddReverb(const Waveform &clean, const Waveform &rir) {
  ReverbResult res;
  res.wet = Convolve(clean, rir);
  real peak = res.wet.PeakAbs();
  if (peak > 1.0) {
    res.renorm = kClipPeak / peak;
    for (real &s : res.wet.samples) s *= res.renorm;
  }
  return res;
}

RoomSpec DrawRoom(const std::array<real, 3> &dims_min,
                  const std::array<real, 3> &dims_max, real rt60_min,
                  real rt60_max, int32 max_image_order, Rng *rng) {
  RoomSpec spec;
  for (int32 i = 0; i < 3; ++i) {
    spec.dims[static_cast<size_t>(i)] =
        rng->Uniform(dims_min[static_cast<size_t>(i)],
                     dims_max[static_cast<size_t>(i)]);
    spec.source[static_cast<size_t>(i)] =
        rng->Uniform(kMinWallMargin,
                     spec.dims[static_cast<size_t>(i)] - kMinWallMargin);
    spec.mic[static_cast<size_t>(i)] =
        rng->Uniform(kMinWallMargin,
                     spec.dims[static_cast<size_t>(i)] - kMinWallMargin);
  }
  spec.rt60_target = rng->Uniform(rt60_min, rt60_max);
  spec.max_image_order = max_image_order;
  return spec;
}

}  // namespace cmkit
