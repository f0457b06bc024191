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

// Binary masks, their COCO-style run-length encoding, rasterization of
// polygons and boxes, and the soft-mask algebra shared by attention-target
// derivation and proposal aggregation.
//
// All functions here are pure; masks are plain values.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace vqs {

// Row-major boolean grid. bits[r * width + c] is pixel (row r, col c).
class BinaryMask {
 public:
  BinaryMask() = default;
  // All-zero mask. Throws kInvalidArgument unless height, width >= 1.
  BinaryMask(int height, int width);
  BinaryMask(int height, int width, std::vector<std::uint8_t> bits);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return bits_.size(); }

  bool at(int row, int col) const { return bits_[index(row, col)] != 0; }
  void set(int row, int col, bool value = true) {
    bits_[index(row, col)] = value ? 1 : 0;
  }

  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * width_ + col;
  }

  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Column-major runs alternating 0s and 1s, starting with a (possibly empty)
// run of 0s.
struct RleMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;

  friend bool operator==(const RleMask&, const RleMask&) = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Polygon {
  std::vector<Point> vertices;
};

// Top-left corner plus extents, in pixels.
struct Box {
  int x = 0;
  int y = 0;
  int w = 1;
  int h = 1;

  friend bool operator==(const Box&, const Box&) = default;
};

struct SoftMask {
  int height = 0;
  int width = 0;
  std::vector<double> values;
};

// Unnormalized g x g grid, row-major.
struct ValueGrid {
  int g = 0;
  std::vector<double> cells;
};

// g x g grid of non-negative cells summing to one.
struct ProbGrid {
  int g = 0;
  std::vector<double> cells;
};

RleMask rle_encode(const BinaryMask& mask);
// Throws kCountMismatch when the runs do not cover height * width pixels.
BinaryMask rle_decode(const RleMask& rle);

// Even-odd rule evaluated at pixel centers (col + 0.5, row + 0.5).
// Throws kDegeneratePolygon for fewer than three vertices.
BinaryMask rasterize_polygon(const Polygon& polygon, int height, int width);

// Clamped to image bounds; a box entirely outside yields an empty mask.
BinaryMask box_to_mask(const Box& box, int height, int width);

BinaryMask mask_union(std::span<const BinaryMask> masks);

// |a & b| / |a | b|, with iou(empty, empty) == 1.
double iou(const BinaryMask& a, const BinaryMask& b);

// Cell (i, j) holds the foreground fraction over rows [floor(iH/g),
// floor((i+1)H/g)) and cols [floor(jW/g), floor((j+1)W/g)). Cells that cover
// no pixel (g larger than a dimension) are zero.
ValueGrid downsample_to_grid(const BinaryMask& mask, int g);

// Falls back to the uniform grid when every cell is zero.
ProbGrid normalize_l1(const ValueGrid& grid);

// Pixel-wise convex combination sum_i weights[i] * masks[i].
SoftMask aggregate(std::span<const BinaryMask> masks,
                   std::span<const double> weights);

// Pixel set iff value >= tau.
BinaryMask threshold(const SoftMask& soft, double tau);

SoftMask to_soft(const BinaryMask& mask);

}  // namespace vqs
