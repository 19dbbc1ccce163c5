#pragma once

#include <cmath>

namespace twr {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Rect {
  double xmin = 0.0;
  double ymin = 0.0;
  double width = 0.0;
  double height = 0.0;

  double xmax() const { return xmin + width; }
  double ymax() const { return ymin + height; }
  double area() const { return width * height; }
  Vec2 center() const { return {xmin + width / 2.0, ymin + height / 2.0}; }
  bool contains(Vec2 p, double eps = 0.0) const {
    return p.x >= xmin - eps && p.x <= xmax() + eps && p.y >= ymin - eps && p.y <= ymax() + eps;
  }
};

}  // namespace twr
