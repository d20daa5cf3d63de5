#pragma once

#include <array>
#include <vector>

namespace almlab {

// Barycentric points; weights sum to one (scale by the cell area).
struct TriangleRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
  int degree = 0;
};

// Points s in [0,1] along an edge; weights sum to one (scale by the length).
struct LineRule {
  std::vector<double> points;
  std::vector<double> weights;
  int degree = 0;
};

// Smallest tabulated rule exact to the requested degree (1, 4 or 6).
const TriangleRule& triangle_rule(int degree = 4);
const LineRule& gauss3();

}  // namespace almlab
