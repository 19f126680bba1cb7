// Copyright The photonbench Authors.
// SPDX-License-Identifier: Apache-2.0

#include "geometry/raster.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "common/io.hpp"
#include "materials/library.hpp"

namespace photonbench {

bool Shape::contains(double x, double y) const {
  switch (kind) {
    case Kind::Rect:
      return x >= x0 && x <= x1 && y >= y0 && y <= y1;
    case Kind::Circle: {
      const double ddx = x - cx, ddy = y - cy;
      return ddx * ddx + ddy * ddy <= radius * radius;
    }
    case Kind::Triangle: {
      const double lo = std::min(base_y, apex_y), hi = std::max(base_y, apex_y);
      if (y < lo || y > hi || hi <= lo) return false;
      const double w = half_width * std::abs(y - apex_y) / (hi - lo);
      return std::abs(x - cx) <= w;
    }
  }
  return false;
}

int Layout::material_index(const std::string& name) {
  if (name == "Air" || name == "vacuum") return 0;
  for (std::size_t k = 0; k < palette.size(); ++k)
    if (palette[k] == name) return static_cast<int>(k);
  if (palette.size() >= 255) throw InvalidArgument("too many materials in one layout");
  palette.push_back(name);
  return static_cast<int>(palette.size() - 1);
}

void Layout::add_rect(const std::string& material, double x0, double x1, double y0, double y1) {
  Shape s;
  s.kind = Shape::Kind::Rect;
  s.material = material_index(material);
  s.x0 = x0, s.x1 = x1, s.y0 = y0, s.y1 = y1;
  shapes.push_back(s);
}

void Layout::add_triangle(const std::string& material, double cx, double base_y, double apex_y,
                          double half_width) {
  Shape s;
  s.kind = Shape::Kind::Triangle;
  s.material = material_index(material);
  s.cx = cx, s.base_y = base_y, s.apex_y = apex_y, s.half_width = half_width;
  shapes.push_back(s);
}

void Layout::add_circle(const std::string& material, double cx, double cy, double radius) {
  Shape s;
  s.kind = Shape::Kind::Circle;
  s.material = material_index(material);
  s.cx = cx, s.cy = cy, s.radius = radius;
  shapes.push_back(s);
}

Layout empty_layout(const SimulationCell& cell) {
  Layout l;
  l.cell = cell;
  return l;
}

Layout layout(const StructureSpec& spec, double m) {
  Layout l;
  l.cell = cell_size(spec, m);
  const auto mats = spec.materials.empty() ? default_materials(spec.variant) : spec.materials;
  const double W = l.cell.width;
  const double top = l.cell.structure_top();
  const double S = l.cell.structure_height();
  const double yc = top + S / 2.0;
  const auto p = [&](const char* n) { return spec.param(n); };
  switch (spec.variant) {
    case Variant::ThreeLayerFilm: {
      const double t1 = p("t1"), t2 = p("t2"), t3 = p("t3");
      const double m0 = yc - t2 / 2, m1 = yc + t2 / 2;
      l.add_rect(mats.at(0), 0, W, m1, m1 + t3);
      l.add_rect(mats.at(1), 0, W, m0, m1);
      l.add_rect(mats.at(0), 0, W, m0 - t1, m0);
      l.smallest_feature = std::min({t1, t2, t3});
      break;
    }
    case Variant::AntiReflectiveNanocones: {
      const double r = p("r"), h = p("h");
      const double base = top + h;
      l.add_rect(mats.at(0), 0, W, base, l.cell.height);
      l.add_triangle(mats.at(0), W / 2, base, base - h, r);
      l.smallest_feature = std::min(r, h);
      break;
    }
    case Variant::VerticalNanowires: {
      const double r = p("r"), h = p("h");
      l.add_rect(mats.at(0), W / 2 - r, W / 2 + r, top, top + h);
      l.smallest_feature = std::min({2 * r, p("g"), h});
      break;
    }
    case Variant::ClosePackedNanospheres: {
      const double t = p("t"), r = p("r");
      l.add_rect(mats.at(0), 0, W, yc, yc + t);
      l.add_circle(mats.at(1), W / 2, yc - r, r);
      l.smallest_feature = std::min(t, 2 * r);
      break;
    }
    case Variant::FilmWithDoubleNanocones: {
      const double t1 = p("t1"), t2 = p("t2"), t3 = p("t3");
      const double r1 = p("r1"), h1 = p("h1"), r2 = p("r2"), h2 = p("h2");
      const double m0 = yc - t2 / 2, m1 = yc + t2 / 2;
      l.add_rect(mats.at(0), 0, W, m1, m1 + t3);
      l.add_rect(mats.at(1), 0, W, m0, m1);
      l.add_rect(mats.at(0), 0, W, m0 - t1, m0);
      l.add_triangle(mats.at(2), W / 2, m0 - t1, m0 - t1 - h1, r1);
      l.add_triangle(mats.at(3), W / 2, m1 + t3, m1 + t3 + h2, r2);
      l.smallest_feature = std::min({t1, t2, t3, r1, r2, h1, h2});
      break;
    }
    case Variant::CombinatorialBlocks: {
      const auto& names = block_material_names();
      if (spec.blocks.size() != static_cast<std::size_t>(kBlockCount))
        throw InvalidArgument("blocks grid must have 80 entries");
      for (int row = 0; row < kBlockRows; ++row)
        for (int col = 0; col < kBlockColumns; ++col) {
          const int id = spec.blocks[static_cast<std::size_t>(row * kBlockColumns + col)];
          if (id < 0 || id >= static_cast<int>(names.size()))
            throw InvalidArgument("unknown block material id " + std::to_string(id));
          if (names[static_cast<std::size_t>(id)] == "Air") continue;
          l.add_rect(names[static_cast<std::size_t>(id)], col * kBlockSize,
                     (col + 1) * kBlockSize, top + row * kBlockSize, top + (row + 1) * kBlockSize);
        }
      l.smallest_feature = kBlockSize;
      break;
    }
  }
  return l;
}

std::size_t MaterialGrid::count_material(int palette_index) const {
  return static_cast<std::size_t>(
      std::count(ids.begin(), ids.end(), static_cast<std::uint8_t>(palette_index)));
}

std::size_t MaterialGrid::count_non_vacuum() const { return ids.size() - count_material(0); }

MaterialGrid rasterize(const Layout& l, double dx) {
  if (!(dx > 0)) throw InvalidArgument("grid spacing must be positive");
  MaterialGrid g;
  g.dx = dx;
  g.cell = l.cell;
  g.palette = l.palette;
  // Tolerate floating-point noise so that 390 / 10 gives 39 cells, not 40.
  g.nx = std::max(1, static_cast<int>(std::ceil(l.cell.width / dx - 1e-9)));
  g.ny = std::max(1, static_cast<int>(std::ceil(l.cell.height / dx - 1e-9)));
  g.ids.assign(static_cast<std::size_t>(g.nx) * g.ny, 0);
  for (int j = 0; j < g.ny; ++j) {
    const double y = (j + 0.5) * dx;
    for (int i = 0; i < g.nx; ++i) {
      const double x = (i + 0.5) * dx;
      std::uint8_t id = 0;
      for (const auto& s : l.shapes)
        if (s.contains(x, y)) id = static_cast<std::uint8_t>(s.material);
      g.ids[static_cast<std::size_t>(j) * g.nx + i] = id;
    }
  }
  if (l.smallest_feature > 0 && dx > l.smallest_feature)
    g.warnings.push_back("grid spacing " + format_double(dx) +
                         " nm exceeds the smallest feature (" +
                         format_double(l.smallest_feature) + " nm)");
  return g;
}

MaterialGrid rasterize(const StructureSpec& spec, double dx, double unit_depth) {
  return rasterize(layout(spec, unit_depth), dx);
}

}  // namespace photonbench
