#include "geoflow/psl2.hpp"

#include <algorithm>
#include <ostream>

namespace geoflow {

namespace {

constexpr double kTraceZeroTol = 1e-12;
constexpr double kSeriesTol = 1e-8;

Mat2 canonical_sign(Mat2 m) {
  const double scale = std::max(1.0, m.frobenius());
  const double tr = m.trace();
  bool flip = false;
  if (std::abs(tr) <= kTraceZeroTol * scale) {
    const double entries[4] = {m.a, m.b, m.c, m.d};
    for (double e : entries) {
      if (std::abs(e) > 1e-14 * scale) {
        flip = e < 0.0;
        break;
      }
    }
  } else {
    flip = tr < 0.0;
  }
  return flip ? (-1.0) * m : m;
}

Mat2 unit_det(const Mat2& m) {
  const double det = m.det();
  if (!(det > 0.0) || !std::isfinite(det)) throw Error("matrix has non-positive determinant");
  return (1.0 / std::sqrt(det)) * m;
}

// h^2 - 1 computed without subtracting nearly equal quantities where possible.
double log_discriminant(const Mat2& m) {
  const double half_diff = 0.5 * (m.a - m.d);
  return half_diff * half_diff + m.b * m.c;
}

}  // namespace

GroupElement GroupElement::from_matrix(const Mat2& m) {
  return GroupElement(canonical_sign(unit_det(m)));
}

GroupElement GroupElement::inverse() const {
  return GroupElement(canonical_sign({m_.d, -m_.b, -m_.c, m_.a}));
}

void GroupElement::act(double x, double y, double& out_x, double& out_y) const {
  // (a z + b)/(c z + d) with z = x + i y
  const double nr = m_.a * x + m_.b, ni = m_.a * y;
  const double dr = m_.c * x + m_.d, di = m_.c * y;
  const double den = dr * dr + di * di;
  out_x = (nr * dr + ni * di) / den;
  out_y = (ni * dr - nr * di) / den;
}

GroupElement operator*(const GroupElement& g, const GroupElement& h) {
  return GroupElement(canonical_sign(unit_det(g.m_ * h.m_)));
}

GroupElement mul(const GroupElement& g, const GroupElement& h) { return g * h; }

std::ostream& operator<<(std::ostream& os, const GroupElement& g) {
  return os << "[[" << g.a() << ", " << g.b() << "], [" << g.c() << ", " << g.d() << "]]";
}

GroupElement one_param(OneParam kind, double t) {
  switch (kind) {
    case OneParam::A: {
      const double e = std::exp(0.5 * t);
      return GroupElement::from_entries(e, 0.0, 0.0, 1.0 / e);
    }
    case OneParam::B:
      return GroupElement::from_entries(1.0, t, 0.0, 1.0);
    case OneParam::C:
      return GroupElement::from_entries(1.0, 0.0, t, 1.0);
  }
  return {};
}

KanCoords decompose_cba(const GroupElement& g) {
  const double a = g.a();
  if (std::abs(a) <= kPivotTol) throw DegenerateDecomposition("top-left entry vanishes");
  return {g.c() / a, a * g.b(), 2.0 * std::log(std::abs(a)), KanOrder::CBA};
}

KanCoords decompose_abc(const GroupElement& g) {
  const double d = g.d();
  if (std::abs(d) <= kPivotTol) throw DegenerateDecomposition("bottom-right entry vanishes");
  return {g.c() / d, g.b() * d, -2.0 * std::log(std::abs(d)), KanOrder::ABC};
}

KanCoords decompose_bca(const GroupElement& g) {
  const double d = g.d();
  if (std::abs(d) <= kPivotTol) throw DegenerateDecomposition("bottom-right entry vanishes");
  return {g.c() * d, g.b() / d, -2.0 * std::log(std::abs(d)), KanOrder::BCA};
}

GroupElement recompose(const KanCoords& k) {
  const GroupElement a = flow_elem(k.t), b = stable_elem(k.s), c = unstable_elem(k.u);
  switch (k.order) {
    case KanOrder::CBA:
      return c * b * a;
    case KanOrder::ABC:
      return a * b * c;
    case KanOrder::BCA:
      return b * c * a;
  }
  return {};
}

Mat2 matrix_log(const GroupElement& g) {
  const Mat2& m = g.matrix();
  if (!std::isfinite(m.frobenius())) throw LogUndefined("non-finite element");
  const double h = 0.5 * m.trace();
  if (h < 1e-9) throw LogUndefined("trace vanishes (half-turn)");
  const double q = log_discriminant(m);
  double f;
  if (std::abs(q) < kSeriesTol) {
    f = 1.0 - q / 6.0 + 3.0 * q * q / 40.0;
  } else if (q > 0.0) {
    const double r = std::sqrt(q);
    f = std::asinh(r) / r;
  } else {
    const double r = std::sqrt(-q);
    f = std::atan2(r, h) / r;
  }
  return f * Mat2{m.a - h, m.b, m.c, m.d - h};
}

GroupElement matrix_exp(const Mat2& x) {
  const double tr = x.trace();
  const Mat2 y{x.a - 0.5 * tr, x.b, x.c, x.d - 0.5 * tr};
  const double q = -y.det();
  double ch, sh;
  if (std::abs(q) < kSeriesTol) {
    ch = 1.0 + q / 2.0 + q * q / 24.0;
    sh = 1.0 + q / 6.0 + q * q / 120.0;
  } else if (q > 0.0) {
    const double r = std::sqrt(q);
    ch = std::cosh(r);
    sh = std::sinh(r) / r;
  } else {
    const double r = std::sqrt(-q);
    ch = std::cos(r);
    sh = std::sin(r) / r;
  }
  return GroupElement::from_matrix({ch + sh * y.a, sh * y.b, sh * y.c, ch + sh * y.d});
}

double proxy_norm(const GroupElement& g) { return matrix_log(g).frobenius(); }

MetricValue proxy_dist(const GroupElement& g, const GroupElement& h) {
  const double v = proxy_norm(g.inverse() * h);
  return {v, v};
}

double displacement(const GroupElement& g) {
  const Mat2& m = g.matrix();
  const double x = m.a - m.d, y = m.b + m.c;
  return 2.0 * std::asinh(0.5 * std::sqrt(x * x + y * y));
}

double hyperbolic_dist(const GroupElement& g, const GroupElement& h) {
  return displacement(g.inverse() * h);
}

double frobenius_dist(const GroupElement& g, const GroupElement& h) {
  return (g.matrix() - h.matrix()).frobenius();
}

bool approx_equal(const GroupElement& g, const GroupElement& h, double tol) {
  return frobenius_dist(g, h) <= tol * std::max(1.0, g.matrix().frobenius());
}

}  // namespace geoflow
