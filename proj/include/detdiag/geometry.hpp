// Copyright 2026 The detdiag Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "detdiag/error.hpp"

namespace detdiag {

// Axis-aligned box in continuous pixel coordinates, (left, top, width,
// height). Area is w*h; there is no +1 pixel convention.
struct Box {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  double area() const { return w > 0 && h > 0 ? w * h : 0.0; }
  bool operator==(const Box&) const = default;
};

// Binary mask stored as alternating run lengths in column-major order.
// The first run counts zeros and may be empty.
struct RleMask {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<std::uint32_t> counts;
  // Whether the source document used the compressed string form. Only
  // affects serialization.
  bool compressed = false;

  std::uint64_t pixels() const {
    return static_cast<std::uint64_t>(height) * width;
  }
  bool operator==(const RleMask& o) const {
    return height == o.height && width == o.width && counts == o.counts;
  }
};

namespace detail {

inline double Intersection(const Box& a, const Box& b) {
  const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  return iw > 0 && ih > 0 ? iw * ih : 0.0;
}

struct RunOverlap {
  std::uint64_t intersection = 0;
  std::uint64_t union_ = 0;
};

// Walks both run streams in lockstep; never materializes pixels.
inline RunOverlap Overlap(const RleMask& a, const RleMask& b) {
  if (a.height != b.height || a.width != b.width) {
    throw InputError("mask dimension mismatch: " + std::to_string(a.height) +
                     "x" + std::to_string(a.width) + " vs " +
                     std::to_string(b.height) + "x" + std::to_string(b.width));
  }
  RunOverlap out;
  std::size_t ia = 0, ib = 0;
  std::uint64_t ra = a.counts.empty() ? 0 : a.counts[0];
  std::uint64_t rb = b.counts.empty() ? 0 : b.counts[0];
  bool va = false, vb = false;
  while (ia < a.counts.size() && ib < b.counts.size()) {
    if (ra == 0) {
      if (++ia >= a.counts.size()) break;
      ra = a.counts[ia];
      va = !va;
      continue;
    }
    if (rb == 0) {
      if (++ib >= b.counts.size()) break;
      rb = b.counts[ib];
      vb = !vb;
      continue;
    }
    const std::uint64_t step = std::min(ra, rb);
    if (va && vb) out.intersection += step;
    if (va || vb) out.union_ += step;
    ra -= step;
    rb -= step;
  }
  // Whatever is left of the longer stream can only add to the union.
  auto drain = [&](const RleMask& m, std::size_t i, std::uint64_t r, bool v) {
    while (i < m.counts.size()) {
      if (v) out.union_ += r;
      if (++i >= m.counts.size()) break;
      r = m.counts[i];
      v = !v;
    }
  };
  if (ia < a.counts.size()) drain(a, ia, ra, va);
  if (ib < b.counts.size()) drain(b, ib, rb, vb);
  return out;
}

}  // namespace detail

inline double box_iou(const Box& a, const Box& b) {
  const double inter = detail::Intersection(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

// Overlap of a detection with a crowd region, measured against the
// detection's own area.
inline double box_iou_crowd(const Box& det, const Box& crowd) {
  const double area = det.area();
  return area > 0 ? detail::Intersection(det, crowd) / area : 0.0;
}

inline std::uint64_t rle_area(const RleMask& m) {
  std::uint64_t total = 0;
  for (std::size_t i = 1; i < m.counts.size(); i += 2) total += m.counts[i];
  return total;
}

inline double mask_iou(const RleMask& a, const RleMask& b) {
  const auto o = detail::Overlap(a, b);
  return o.union_ > 0 ? static_cast<double>(o.intersection) / o.union_ : 0.0;
}

inline double mask_iou_crowd(const RleMask& det, const RleMask& crowd) {
  const auto o = detail::Overlap(det, crowd);
  const auto area = rle_area(det);
  return area > 0 ? static_cast<double>(o.intersection) / area : 0.0;
}

// Throws InputError when the runs do not tile height*width.
inline void validate_rle(const RleMask& m) {
  std::uint64_t total = 0;
  for (auto c : m.counts) total += c;
  if (total != m.pixels()) {
    throw InputError("RLE counts sum to " + std::to_string(total) +
                     " but mask is " + std::to_string(m.height) + "x" +
                     std::to_string(m.width));
  }
}

// Column-major pixel grid -> runs.
inline RleMask rle_encode(std::span<const std::uint8_t> pixels,
                          std::uint32_t height, std::uint32_t width) {
  RleMask m{height, width, {}, false};
  std::uint8_t current = 0;
  std::uint32_t run = 0;
  for (std::uint8_t p : pixels) {
    const std::uint8_t v = p ? 1 : 0;
    if (v != current) {
      m.counts.push_back(run);
      run = 0;
      current = v;
    }
    ++run;
  }
  m.counts.push_back(run);
  return m;
}

// Covers the pixels whose centers lie inside the box. Built directly as
// runs, so cost is proportional to the box width.
inline RleMask rle_from_box(const Box& b, std::uint32_t height,
                            std::uint32_t width) {
  auto first_center = [](double lo, std::uint32_t n) {
    const double c = std::ceil(lo - 0.5);
    return static_cast<std::uint32_t>(std::clamp(c, 0.0, static_cast<double>(n)));
  };
  const std::uint32_t c0 = first_center(b.x, width);
  const std::uint32_t c1 = first_center(b.x + b.w, width);
  const std::uint32_t r0 = first_center(b.y, height);
  const std::uint32_t r1 = first_center(b.y + b.h, height);
  RleMask m{height, width, {}, false};
  const std::uint64_t total = static_cast<std::uint64_t>(height) * width;
  if (c0 >= c1 || r0 >= r1) {
    m.counts.push_back(static_cast<std::uint32_t>(total));
    return m;
  }
  // Alternating zero/one runs; adjacent equal-valued runs are merged.
  std::uint64_t zeros = static_cast<std::uint64_t>(c0) * height + r0;
  for (std::uint32_t c = c0; c < c1; ++c) {
    if (c > c0) zeros = (height - r1) + r0;
    if (zeros == 0 && !m.counts.empty()) {
      m.counts.back() += r1 - r0;
    } else {
      m.counts.push_back(static_cast<std::uint32_t>(zeros));
      m.counts.push_back(r1 - r0);
    }
  }
  const std::uint64_t tail =
      (height - r1) + static_cast<std::uint64_t>(width - c1) * height;
  if (tail > 0) m.counts.push_back(static_cast<std::uint32_t>(tail));
  return m;
}

// Tight bounding box of the set pixels.
inline Box rle_bbox(const RleMask& m) {
  if (m.height == 0 || rle_area(m) == 0) return {};
  std::uint64_t pos = 0;
  std::uint64_t xmin = m.width, xmax = 0, ymin = m.height, ymax = 0;
  for (std::size_t i = 0; i < m.counts.size(); ++i) {
    const std::uint64_t start = pos;
    pos += m.counts[i];
    if (i % 2 == 0 || m.counts[i] == 0) continue;
    const std::uint64_t end = pos - 1;
    const std::uint64_t c0 = start / m.height, c1 = end / m.height;
    xmin = std::min(xmin, c0);
    xmax = std::max(xmax, c1);
    if (c0 != c1) {
      ymin = 0;
      ymax = m.height - 1;
    } else {
      ymin = std::min(ymin, start % m.height);
      ymax = std::max(ymax, end % m.height);
    }
  }
  return {static_cast<double>(xmin), static_cast<double>(ymin),
          static_cast<double>(xmax - xmin + 1),
          static_cast<double>(ymax - ymin + 1)};
}

// Compressed ASCII form used by the standard dataset tooling: each count is
// delta-coded against the count two positions back (from the third on) and
// packed five bits per character, offset by 48.
inline std::string rle_to_string(const RleMask& m) {
  std::string s;
  for (std::size_t i = 0; i < m.counts.size(); ++i) {
    long long x = m.counts[i];
    if (i > 2) x -= static_cast<long long>(m.counts[i - 2]);
    bool more = true;
    while (more) {
      char c = static_cast<char>(x & 0x1f);
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      s.push_back(static_cast<char>(c + 48));
    }
  }
  return s;
}

inline RleMask rle_from_string(std::string_view s, std::uint32_t height,
                               std::uint32_t width) {
  RleMask m{height, width, {}, true};
  std::size_t p = 0;
  while (p < s.size()) {
    long long x = 0;
    int k = 0;
    bool more = true;
    while (more) {
      if (p >= s.size()) throw InputError("truncated RLE string");
      const int c = static_cast<int>(s[p]) - 48;
      if (c < 0 || c > 63) throw InputError("invalid character in RLE string");
      x |= static_cast<long long>(c & 0x1f) << (5 * k);
      more = (c & 0x20) != 0;
      ++p;
      ++k;
      if (!more && (c & 0x10)) x |= -1LL << (5 * k);
    }
    if (m.counts.size() > 2) x += m.counts[m.counts.size() - 2];
    if (x < 0 || x > 0xffffffffLL) throw InputError("RLE run out of range");
    m.counts.push_back(static_cast<std::uint32_t>(x));
  }
  return m;
}

}  // namespace detdiag
