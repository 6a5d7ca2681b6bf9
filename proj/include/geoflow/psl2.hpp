#pragma once

#include <cmath>
#include <iosfwd>

#include "geoflow/errors.hpp"

namespace geoflow {

// Plain 2x2 real matrix, row-major.
struct Mat2 {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

  double det() const { return a * d - b * c; }
  double trace() const { return a + d; }
  double frobenius() const { return std::sqrt(a * a + b * b + c * c + d * d); }
  double frobenius_sq() const { return a * a + b * b + c * c + d * d; }

  friend Mat2 operator*(const Mat2& x, const Mat2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d,
            x.c * y.a + x.d * y.c, x.c * y.b + x.d * y.d};
  }
  friend Mat2 operator+(const Mat2& x, const Mat2& y) {
    return {x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d};
  }
  friend Mat2 operator-(const Mat2& x, const Mat2& y) {
    return {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d};
  }
  friend Mat2 operator*(double k, const Mat2& x) { return {k * x.a, k * x.b, k * x.c, k * x.d}; }

  static Mat2 zero() { return {0.0, 0.0, 0.0, 0.0}; }
};

// Element of PSL(2,R): unit determinant, trace >= 0, and for trace ~ 0 the first
// nonzero entry (row-major) positive.
class GroupElement {
 public:
  GroupElement() = default;

  // Rescales to unit determinant and canonicalizes the sign. Throws Error for det <= 0.
  static GroupElement from_matrix(const Mat2& m);
  static GroupElement from_entries(double a, double b, double c, double d) {
    return from_matrix({a, b, c, d});
  }

  const Mat2& matrix() const { return m_; }
  double a() const { return m_.a; }
  double b() const { return m_.b; }
  double c() const { return m_.c; }
  double d() const { return m_.d; }

  GroupElement inverse() const;
  // Moebius action on the upper half plane point z = x + iy.
  void act(double x, double y, double& out_x, double& out_y) const;

  friend GroupElement operator*(const GroupElement& g, const GroupElement& h);

 private:
  explicit GroupElement(const Mat2& m) : m_(m) {}
  Mat2 m_{};
};

std::ostream& operator<<(std::ostream& os, const GroupElement& g);

GroupElement mul(const GroupElement& g, const GroupElement& h);

enum class OneParam { A, B, C };

GroupElement one_param(OneParam kind, double t);
inline GroupElement flow_elem(double t) { return one_param(OneParam::A, t); }
inline GroupElement stable_elem(double s) { return one_param(OneParam::B, s); }
inline GroupElement unstable_elem(double u) { return one_param(OneParam::C, u); }

// CBA: g = c_u b_s a_t.  ABC: g = a_t b_s c_u.  BCA: g = b_s c_u a_t.
enum class KanOrder { CBA, ABC, BCA };

struct KanCoords {
  double u = 0.0;
  double s = 0.0;
  double t = 0.0;
  KanOrder order = KanOrder::CBA;
};

inline constexpr double kPivotTol = 1e-12;

KanCoords decompose_cba(const GroupElement& g);
KanCoords decompose_abc(const GroupElement& g);
KanCoords decompose_bca(const GroupElement& g);
GroupElement recompose(const KanCoords& k);

Mat2 matrix_log(const GroupElement& g);
// Exponential of a traceless matrix.
GroupElement matrix_exp(const Mat2& x);

struct MetricValue {
  double lower = 0.0;
  double upper = 0.0;
  double value() const { return upper; }
};

MetricValue proxy_dist(const GroupElement& g, const GroupElement& h);
double proxy_norm(const GroupElement& g);

// Hyperbolic distance between i and g(i) in the upper half plane.
double displacement(const GroupElement& g);
// Hyperbolic distance between g(i) and h(i).
double hyperbolic_dist(const GroupElement& g, const GroupElement& h);

double frobenius_dist(const GroupElement& g, const GroupElement& h);
bool approx_equal(const GroupElement& g, const GroupElement& h, double tol = 1e-9);

}  // namespace geoflow
