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

// Rendering-plane geometry: the rectangular area listeners may occupy, the
// regular lattice the transfer functions are sampled on, and circular zones.

#ifndef PSZ_GEOMETRY_HPP_
#define PSZ_GEOMETRY_HPP_

#include <array>
#include <cstddef>
#include <vector>

namespace psz {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

double Distance(const Point2& a, const Point2& b);
double Distance(const Point3& a, const Point3& b);

struct RenderingArea {
  double x_min = -1.0;
  double x_max = 1.0;
  double y_min = 0.5;
  double y_max = 2.0;

  // Throws ConfigError unless x_min < x_max and y_min < y_max.
  void Validate() const;
  bool Contains(const Point2& p, double tol = 1e-12) const;
  double width() const { return x_max - x_min; }
  double depth() const { return y_max - y_min; }
};

// Regular lattice over a RenderingArea, boundaries included. Points are
// stored row-major: row r runs along x at y = y_min + r * resolution.
class SamplingGrid {
 public:
  SamplingGrid() = default;

  const RenderingArea& area() const { return area_; }
  double resolution() const { return resolution_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return points_.size(); }
  const std::vector<Point2>& points() const { return points_; }
  const Point2& point(std::size_t id) const { return points_[id]; }
  std::size_t index(std::size_t row, std::size_t col) const {
    return row * cols_ + col;
  }

 private:
  friend SamplingGrid MakeGrid(const RenderingArea&, double);

  RenderingArea area_;
  double resolution_ = 0.0;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Point2> points_;
};

// Throws ConfigError when the resolution does not divide both side lengths
// to within 1e-9 m.
SamplingGrid MakeGrid(const RenderingArea& area, double resolution);

struct Zone {
  Point2 center;
  double radius = 0.1;
};

struct ZonePair {
  Zone bz;
  Zone dz;
};

// Ids of the grid points inside the closed disk of the zone, ascending.
// Distances are compared with a 1e-9 m slack so that lattice points lying
// exactly on the circle are kept. Throws DomainError when nothing is
// selected.
std::vector<std::size_t> SelectControlPoints(const SamplingGrid& grid,
                                             const Zone& zone);

bool ZonesOverlap(const ZonePair& pair);

inline constexpr double kDefaultMargin = 0.05;

// Maps both centers into [-1 + margin, 1 - margin] per axis, ordered
// (bz.x, bz.y, dz.x, dz.y). Throws DomainError for a center outside the
// area and ConfigError for a margin outside (0, 1).
std::array<double, 4> NormalizeCoords(const ZonePair& pair,
                                      const RenderingArea& area,
                                      double margin = kDefaultMargin);

// Inverse of NormalizeCoords for one center.
Point2 DenormalizeCenter(double nx, double ny, const RenderingArea& area,
                         double margin = kDefaultMargin);

}  // namespace psz

#endif  // PSZ_GEOMETRY_HPP_
