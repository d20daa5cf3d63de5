#include "almlab/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace almlab {

namespace {

void add_orbit3(TriangleRule& r, double a, double w) {
  const double b = 1.0 - 2.0 * a;
  r.points.push_back({b, a, a});
  r.points.push_back({a, b, a});
  r.points.push_back({a, a, b});
  for (int i = 0; i < 3; ++i) r.weights.push_back(w);
}

void add_orbit6(TriangleRule& r, double a, double b, double w) {
  const double c = 1.0 - a - b;
  for (auto p : {std::array<double, 3>{a, b, c}, {a, c, b}, {b, a, c}, {b, c, a}, {c, a, b},
                 {c, b, a}}) {
    r.points.push_back(p);
    r.weights.push_back(w);
  }
}

TriangleRule make_centroid() {
  TriangleRule r;
  r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  r.weights.push_back(1.0);
  r.degree = 1;
  return r;
}

// Dunavant rules
TriangleRule make_degree4() {
  TriangleRule r;
  add_orbit3(r, 0.445948490915965, 0.223381589678011);
  add_orbit3(r, 0.091576213509771, 0.109951743655322);
  r.degree = 4;
  return r;
}

TriangleRule make_degree6() {
  TriangleRule r;
  add_orbit3(r, 0.249286745170910, 0.116786275726379);
  add_orbit3(r, 0.063089014491502, 0.050844906370207);
  add_orbit6(r, 0.053145049844817, 0.310352451033784, 0.082851075618374);
  r.degree = 6;
  return r;
}

}  // namespace

const TriangleRule& triangle_rule(int degree) {
  static const TriangleRule r1 = make_centroid();
  static const TriangleRule r4 = make_degree4();
  static const TriangleRule r6 = make_degree6();
  if (degree <= 1) return r1;
  if (degree <= 4) return r4;
  if (degree <= 6) return r6;
  throw std::invalid_argument("no triangle rule of degree > 6");
}

const LineRule& gauss3() {
  static const LineRule r = [] {
    const double d = 0.5 * std::sqrt(3.0 / 5.0);
    return LineRule{{0.5 - d, 0.5, 0.5 + d}, {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0}, 5};
  }();
  return r;
}

}  // namespace almlab
