/*
 * Copyright 2026 The PSZ Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "psz/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "psz/error.hpp"

namespace psz {
namespace {

constexpr double kLatticeTol = 1e-9;

std::size_t StepsAlong(double length, double resolution, const char* axis) {
  const double steps = length / resolution;
  const double rounded = std::round(steps);
  if (std::abs(rounded * resolution - length) > kLatticeTol) {
    std::ostringstream msg;
    msg << "grid resolution " << resolution << " m does not divide the "
        << axis << " extent " << length << " m";
    throw ConfigError(msg.str());
  }
  return static_cast<std::size_t>(rounded);
}

double NormalizeAxis(double v, double lo, double hi, double margin) {
  const double t = (v - lo) / (hi - lo);
  return -1.0 + margin + t * 2.0 * (1.0 - margin);
}

double DenormalizeAxis(double u, double lo, double hi, double margin) {
  const double t = (u + 1.0 - margin) / (2.0 * (1.0 - margin));
  return lo + t * (hi - lo);
}

}  // namespace

double Distance(const Point2& a, const Point2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

double Distance(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void RenderingArea::Validate() const {
  if (!(x_min < x_max) || !(y_min < y_max)) {
    throw ConfigError("rendering area must satisfy x_min < x_max and "
                      "y_min < y_max");
  }
}

bool RenderingArea::Contains(const Point2& p, double tol) const {
  return p.x >= x_min - tol && p.x <= x_max + tol && p.y >= y_min - tol &&
         p.y <= y_max + tol;
}

SamplingGrid MakeGrid(const RenderingArea& area, double resolution) {
  area.Validate();
  if (!(resolution > 0.0)) {
    throw ConfigError("grid resolution must be positive");
  }
  SamplingGrid grid;
  grid.area_ = area;
  grid.resolution_ = resolution;
  grid.cols_ = StepsAlong(area.width(), resolution, "x") + 1;
  grid.rows_ = StepsAlong(area.depth(), resolution, "y") + 1;
  grid.points_.reserve(grid.rows_ * grid.cols_);
  for (std::size_t r = 0; r < grid.rows_; ++r) {
    for (std::size_t c = 0; c < grid.cols_; ++c) {
      grid.points_.push_back({area.x_min + static_cast<double>(c) * resolution,
                              area.y_min + static_cast<double>(r) * resolution});
    }
  }
  return grid;
}

std::vector<std::size_t> SelectControlPoints(const SamplingGrid& grid,
                                             const Zone& zone) {
  if (zone.radius < 0.0) {
    throw ConfigError("zone radius must be non-negative");
  }
  std::vector<std::size_t> ids;
  if (grid.size() > 0) {
    // Only scan the lattice window covering the zone's bounding box.
    const RenderingArea& area = grid.area();
    const double res = grid.resolution();
    const double reach = zone.radius + kLatticeTol;
    auto clamp_index = [](double v, std::size_t n) -> std::size_t {
      if (v < 0.0) return 0;
      return std::min(static_cast<std::size_t>(v), n);
    };
    const std::size_t c0 = clamp_index(
        std::floor((zone.center.x - reach - area.x_min) / res), grid.cols());
    const std::size_t c1 = clamp_index(
        std::ceil((zone.center.x + reach - area.x_min) / res) + 1, grid.cols());
    const std::size_t r0 = clamp_index(
        std::floor((zone.center.y - reach - area.y_min) / res), grid.rows());
    const std::size_t r1 = clamp_index(
        std::ceil((zone.center.y + reach - area.y_min) / res) + 1, grid.rows());
    for (std::size_t r = r0; r < r1; ++r) {
      for (std::size_t c = c0; c < c1; ++c) {
        const std::size_t id = grid.index(r, c);
        if (Distance(grid.point(id), zone.center) <= reach) ids.push_back(id);
      }
    }
  }
  if (ids.empty()) {
    std::ostringstream msg;
    msg << "degenerate zone at (" << zone.center.x << ", " << zone.center.y
        << ") with radius " << zone.radius << ": no grid points selected";
    throw DomainError(msg.str());
  }
  return ids;
}

bool ZonesOverlap(const ZonePair& pair) {
  return Distance(pair.bz.center, pair.dz.center) <
         pair.bz.radius + pair.dz.radius;
}

std::array<double, 4> NormalizeCoords(const ZonePair& pair,
                                      const RenderingArea& area,
                                      double margin) {
  area.Validate();
  if (!(margin > 0.0 && margin < 1.0)) {
    throw ConfigError("normalization margin must lie in (0, 1)");
  }
  for (const Zone* z : {&pair.bz, &pair.dz}) {
    if (!area.Contains(z->center)) {
      std::ostringstream msg;
      msg << "zone center (" << z->center.x << ", " << z->center.y
          << ") lies outside the rendering area";
      throw DomainError(msg.str());
    }
  }
  return {NormalizeAxis(pair.bz.center.x, area.x_min, area.x_max, margin),
          NormalizeAxis(pair.bz.center.y, area.y_min, area.y_max, margin),
          NormalizeAxis(pair.dz.center.x, area.x_min, area.x_max, margin),
          NormalizeAxis(pair.dz.center.y, area.y_min, area.y_max, margin)};
}

Point2 DenormalizeCenter(double nx, double ny, const RenderingArea& area,
                         double margin) {
  return {DenormalizeAxis(nx, area.x_min, area.x_max, margin),
          DenormalizeAxis(ny, area.y_min, area.y_max, margin)};
}

}  // namespace psz
