// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geometry/structure.hpp"

namespace photonbench {

// Primitive in cell coordinates (nm, x across the period, y down from the top).
struct Shape {
  enum class Kind { Rect, Triangle, Circle };
  Kind kind = Kind::Rect;
  int material = 0;  // palette index
  // Rect: [x0, x1] x [y0, y1].
  // Triangle: isoceles with base centred at (cx, base_y), half-width `half_width`,
  //   apex at (cx, apex_y); apex may lie above or below the base.
  // Circle: centre (cx, cy), radius.
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
  double cx = 0, cy = 0, radius = 0;
  double base_y = 0, apex_y = 0, half_width = 0;

  bool contains(double x, double y) const;
};

// A cell plus an ordered shape list. Later shapes override earlier ones.
// Palette entry 0 is always vacuum.
struct Layout {
  SimulationCell cell;
  std::vector<std::string> palette{"vacuum"};
  std::vector<Shape> shapes;
  double smallest_feature = 0.0;  // nm, for resolution warnings

  int material_index(const std::string& name);  // adds to the palette on first use
  void add_rect(const std::string& material, double x0, double x1, double y0, double y1);
  void add_triangle(const std::string& material, double cx, double base_y, double apex_y,
                    double half_width);
  void add_circle(const std::string& material, double cx, double cy, double radius);
};

// Shape list of a structure. Materials come from the spec (defaults when empty);
// geometry is not re-validated here.
Layout layout(const StructureSpec& spec, double unit_depth = kDefaultUnitDepth);
// All-vacuum layout of the same cell, used for normalization runs.
Layout empty_layout(const SimulationCell& cell);

struct MaterialGrid {
  int nx = 0, ny = 0;
  double dx = 0.0;  // nm
  SimulationCell cell;
  std::vector<std::string> palette;
  std::vector<std::uint8_t> ids;  // row-major, index j * nx + i, j = 0 at the top
  std::vector<std::string> warnings;

  std::uint8_t at(int i, int j) const { return ids[static_cast<std::size_t>(j) * nx + i]; }
  std::size_t count_material(int palette_index) const;
  std::size_t count_non_vacuum() const;
};

// Cell-centre sampling: cell (i, j) takes the material of the last shape
// containing ((i + 1/2) dx, (j + 1/2) dx). Dimensions are ceil(size / dx).
MaterialGrid rasterize(const Layout& layout, double dx);
MaterialGrid rasterize(const StructureSpec& spec, double dx,
                       double unit_depth = kDefaultUnitDepth);

}  // namespace photonbench
