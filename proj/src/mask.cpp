// Copyright 2026 The VQS Toolkit Authors
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

#include "vqs/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "vqs/error.hpp"

namespace vqs {

namespace {

void require_positive_dims(int height, int width) {
  if (height < 1 || width < 1) {
    fail(ErrorCode::kInvalidArgument,
         "mask dimensions must be positive, got " + std::to_string(height) +
             "x" + std::to_string(width));
  }
}

void require_same_dims(const BinaryMask& a, const BinaryMask& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    fail(ErrorCode::kDimensionMismatch,
         "mask " + std::to_string(a.height()) + "x" + std::to_string(a.width()) +
             " vs " + std::to_string(b.height()) + "x" +
             std::to_string(b.width()));
  }
}

}  // namespace

BinaryMask::BinaryMask(int height, int width)
    : height_(height), width_(width) {
  require_positive_dims(height, width);
  bits_.assign(static_cast<std::size_t>(height) * width, 0);
}

BinaryMask::BinaryMask(int height, int width, std::vector<std::uint8_t> bits)
    : height_(height), width_(width), bits_(std::move(bits)) {
  require_positive_dims(height, width);
  if (bits_.size() != static_cast<std::size_t>(height) * width) {
    fail(ErrorCode::kDimensionMismatch,
         "bit count " + std::to_string(bits_.size()) + " does not match " +
             std::to_string(height) + "x" + std::to_string(width));
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

RleMask rle_encode(const BinaryMask& mask) {
  RleMask rle{mask.height(), mask.width(), {}};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (int c = 0; c < mask.width(); ++c) {
    for (int r = 0; r < mask.height(); ++r) {
      const std::uint8_t bit = mask.at(r, c) ? 1 : 0;
      if (bit != current) {
        rle.counts.push_back(run);
        run = 0;
        current = bit;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return rle;
}

BinaryMask rle_decode(const RleMask& rle) {
  require_positive_dims(rle.height, rle.width);
  const std::uint64_t expected =
      static_cast<std::uint64_t>(rle.height) * rle.width;
  const std::uint64_t total = std::accumulate(
      rle.counts.begin(), rle.counts.end(), std::uint64_t{0});
  if (total != expected) {
    fail(ErrorCode::kCountMismatch,
         "run lengths sum to " + std::to_string(total) + ", expected " +
             std::to_string(expected));
  }
  BinaryMask mask(rle.height, rle.width);
  std::uint64_t pos = 0;
  bool value = false;
  for (std::uint32_t run : rle.counts) {
    if (value) {
      for (std::uint64_t k = pos; k < pos + run; ++k) {
        mask.set(static_cast<int>(k % rle.height),
                 static_cast<int>(k / rle.height));
      }
    }
    pos += run;
    value = !value;
  }
  return mask;
}

BinaryMask rasterize_polygon(const Polygon& polygon, int height, int width) {
  const auto& v = polygon.vertices;
  if (v.size() < 3) {
    fail(ErrorCode::kDegeneratePolygon,
         "polygon has " + std::to_string(v.size()) + " vertices");
  }
  BinaryMask mask(height, width);
  std::vector<double> xs;
  for (int r = 0; r < height; ++r) {
    const double y = r + 0.5;
    xs.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Point& a = v[i];
      const Point& b = v[(i + 1) % v.size()];
      // Half-open rule so a vertex on the scanline is counted once.
      if ((a.y <= y) != (b.y <= y)) {
        xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
      }
    }
    std::sort(xs.begin(), xs.end());
    // Center x is inside iff an odd number of crossings lie at or left of it,
    // i.e. xs[2k] <= x < xs[2k+1].
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const double lo = std::ceil(xs[k] - 0.5);
      const double hi = std::ceil(xs[k + 1] - 0.5);
      const int c0 = static_cast<int>(std::max(0.0, lo));
      const int c1 = static_cast<int>(std::min<double>(width, hi));
      for (int c = c0; c < c1; ++c) mask.set(r, c);
    }
  }
  return mask;
}

BinaryMask box_to_mask(const Box& box, int height, int width) {
  BinaryMask mask(height, width);
  const long r0 = std::max<long>(0, box.y);
  const long r1 = std::min<long>(height, static_cast<long>(box.y) + box.h);
  const long c0 = std::max<long>(0, box.x);
  const long c1 = std::min<long>(width, static_cast<long>(box.x) + box.w);
  for (long r = r0; r < r1; ++r) {
    for (long c = c0; c < c1; ++c) mask.set(static_cast<int>(r), static_cast<int>(c));
  }
  return mask;
}

BinaryMask mask_union(std::span<const BinaryMask> masks) {
  if (masks.empty()) fail(ErrorCode::kInvalidArgument, "union of no masks");
  BinaryMask out = masks.front();
  for (const auto& m : masks.subspan(1)) {
    require_same_dims(out, m);
    for (int r = 0; r < out.height(); ++r) {
      for (int c = 0; c < out.width(); ++c) {
        if (m.at(r, c)) out.set(r, c);
      }
    }
  }
  return out;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a, b);
  const auto& x = a.bits();
  const auto& y = b.bits();
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    inter += x[i] & y[i];
    uni += x[i] | y[i];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

ValueGrid downsample_to_grid(const BinaryMask& mask, int g) {
  if (g < 1) fail(ErrorCode::kInvalidArgument, "grid side must be >= 1");
  const long H = mask.height();
  const long W = mask.width();
  ValueGrid grid{g, std::vector<double>(static_cast<std::size_t>(g) * g, 0.0)};
  for (long i = 0; i < g; ++i) {
    const long r0 = i * H / g;
    const long r1 = (i + 1) * H / g;
    for (long j = 0; j < g; ++j) {
      const long c0 = j * W / g;
      const long c1 = (j + 1) * W / g;
      const long area = (r1 - r0) * (c1 - c0);
      if (area == 0) continue;
      long on = 0;
      for (long r = r0; r < r1; ++r) {
        for (long c = c0; c < c1; ++c) {
          on += mask.at(static_cast<int>(r), static_cast<int>(c));
        }
      }
      grid.cells[i * g + j] = static_cast<double>(on) / static_cast<double>(area);
    }
  }
  return grid;
}

ProbGrid normalize_l1(const ValueGrid& grid) {
  if (grid.g < 1 ||
      grid.cells.size() != static_cast<std::size_t>(grid.g) * grid.g) {
    fail(ErrorCode::kInvalidArgument, "grid cell count is not g*g");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.cells.size(); ++i) {
    const double v = grid.cells[i];
    if (!(v >= 0.0)) {
      fail(ErrorCode::kNegativeEntry,
           "grid cell " + std::to_string(i) + " is negative or NaN");
    }
    sum += v;
  }
  ProbGrid out{grid.g, grid.cells};
  if (sum == 0.0) {
    std::fill(out.cells.begin(), out.cells.end(),
              1.0 / static_cast<double>(out.cells.size()));
  } else {
    for (auto& v : out.cells) v /= sum;
  }
  return out;
}

SoftMask aggregate(std::span<const BinaryMask> masks,
                   std::span<const double> weights) {
  if (masks.empty()) fail(ErrorCode::kInvalidArgument, "aggregate of no masks");
  if (masks.size() != weights.size()) {
    fail(ErrorCode::kDimensionMismatch,
         std::to_string(masks.size()) + " masks but " +
             std::to_string(weights.size()) + " weights");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) fail(ErrorCode::kInvalidSimplex, "negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    fail(ErrorCode::kInvalidSimplex,
         "weights sum to " + std::to_string(sum));
  }
  const int H = masks.front().height();
  const int W = masks.front().width();
  SoftMask out{H, W, std::vector<double>(static_cast<std::size_t>(H) * W, 0.0)};
  for (std::size_t i = 0; i < masks.size(); ++i) {
    require_same_dims(masks.front(), masks[i]);
    const auto& bits = masks[i].bits();
    for (std::size_t p = 0; p < bits.size(); ++p) {
      if (bits[p]) out.values[p] += weights[i];
    }
  }
  for (auto& v : out.values) v = std::clamp(v, 0.0, 1.0);
  return out;
}

BinaryMask threshold(const SoftMask& soft, double tau) {
  std::vector<std::uint8_t> bits(soft.values.size());
  for (std::size_t p = 0; p < bits.size(); ++p) {
    bits[p] = soft.values[p] >= tau ? 1 : 0;
  }
  return BinaryMask(soft.height, soft.width, std::move(bits));
}

SoftMask to_soft(const BinaryMask& mask) {
  SoftMask out{mask.height(), mask.width(), {}};
  out.values.assign(mask.bits().begin(), mask.bits().end());
  return out;
}

}  // namespace vqs
