#include "fpreg/quadrature.hpp"

#include "fpreg/error.hpp"

#include <cmath>

namespace fpreg {

namespace {

void add_orbit3(std::vector<TriQuadPoint>& rule, double a, double b, double w) {
  rule.push_back({{a, b, b}, w});
  rule.push_back({{b, a, b}, w});
  rule.push_back({{b, b, a}, w});
}

void add_orbit6(std::vector<TriQuadPoint>& rule, double a, double b, double c, double w) {
  rule.push_back({{a, b, c}, w});
  rule.push_back({{a, c, b}, w});
  rule.push_back({{b, a, c}, w});
  rule.push_back({{b, c, a}, w});
  rule.push_back({{c, a, b}, w});
  rule.push_back({{c, b, a}, w});
}

// Dunavant (1985) symmetric rules.
std::vector<TriQuadPoint> make_rule(int degree) {
  std::vector<TriQuadPoint> r;
  switch (degree) {
    case 2:
      add_orbit3(r, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 3.0);
      break;
    case 4:
      add_orbit3(r, 0.108103018168070, 0.445948490915965, 0.223381589678011);
      add_orbit3(r, 0.816847572980459, 0.091576213509771, 0.109951743655322);
      break;
    case 5:
      r.push_back({{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}, 0.225});
      add_orbit3(r, 0.059715871789770, 0.470142064105115, 0.132394152788506);
      add_orbit3(r, 0.797426985353087, 0.101286507323456, 0.125939180544827);
      break;
    case 6:
      add_orbit3(r, 0.501426509658179, 0.249286745170910, 0.116786275726379);
      add_orbit3(r, 0.873821971016996, 0.063089014491502, 0.050844906370207);
      add_orbit6(r, 0.053145049844817, 0.310352451033784, 0.636502499121399, 0.082851075618374);
      break;
    default:
      break;
  }
  // Tabulated digits leave ~1e-15 slack; make each point and the weights sum exactly.
  double total = 0.0;
  for (auto& q : r) {
    q.bary[2] = 1.0 - q.bary[0] - q.bary[1];
    total += q.weight;
  }
  for (auto& q : r) q.weight /= total;
  return r;
}

}  // namespace

std::span<const TriQuadPoint> triangle_rule(int degree) {
  static const std::vector<TriQuadPoint> d2 = make_rule(2);
  static const std::vector<TriQuadPoint> d4 = make_rule(4);
  static const std::vector<TriQuadPoint> d5 = make_rule(5);
  static const std::vector<TriQuadPoint> d6 = make_rule(6);
  if (degree <= 2) return d2;
  if (degree <= 4) return d4;
  if (degree == 5) return d5;
  if (degree == 6) return d6;
  throw Error("no triangle quadrature rule of degree " + std::to_string(degree));
}

std::span<const LineQuadPoint> line_rule(int n) {
  static const std::vector<LineQuadPoint> g1{{0.5, 1.0}};
  static const std::vector<LineQuadPoint> g2{{0.5 - 0.5 / std::sqrt(3.0), 0.5}, {0.5 + 0.5 / std::sqrt(3.0), 0.5}};
  static const std::vector<LineQuadPoint> g3{{0.5 - 0.5 * std::sqrt(0.6), 5.0 / 18.0},
                                             {0.5, 8.0 / 18.0},
                                             {0.5 + 0.5 * std::sqrt(0.6), 5.0 / 18.0}};
  static const std::vector<LineQuadPoint> g4 = [] {
    const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(6.0 / 5.0));
    const double wa = (18.0 + std::sqrt(30.0)) / 36.0, wb = (18.0 - std::sqrt(30.0)) / 36.0;
    return std::vector<LineQuadPoint>{{0.5 - 0.5 * b, 0.5 * wb},
                                      {0.5 - 0.5 * a, 0.5 * wa},
                                      {0.5 + 0.5 * a, 0.5 * wa},
                                      {0.5 + 0.5 * b, 0.5 * wb}};
  }();
  switch (n) {
    case 1: return g1;
    case 2: return g2;
    case 3: return g3;
    case 4: return g4;
    default: throw Error("no Gauss-Legendre rule with " + std::to_string(n) + " points");
  }
}

}  // namespace fpreg
