#include "geoflow/section_index.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace geoflow {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

// cosh d(g i, h i)
double cosh_dist(const GroupElement& g, const GroupElement& h) {
  return 0.5 * (g.inverse() * h).matrix().frobenius_sq();
}

double checked_cell(double cell, double pad) {
  if (!(cell > 0.0) || !(pad >= 0.0)) throw ConfigError("index cell must be positive and pad nonnegative");
  return cell;
}

}  // namespace

TangentCoords tangent_coords(const GroupElement& g) {
  using C = std::complex<double>;
  const C I(0.0, 1.0);
  double x = 0.0, y = 0.0;
  g.act(0.0, 1.0, x, y);
  const C z(x, y);
  const C w = (z - I) / (z + I);
  const C v = -2.0 / ((z + I) * (z + I) * (g.c() * I + g.d()) * (g.c() * I + g.d()));
  TangentCoords t;
  t.r = 2.0 * std::atanh(std::min(std::abs(w), 1.0 - 1e-16));
  t.phi = wrap(std::arg(w));
  t.theta = wrap(std::arg(v));
  return t;
}

GroupElement sample_haar(const FuchsianGroup& G, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double R = G.domain_radius();
  for (;;) {
    // Radius with density proportional to sinh r on [0, R].
    const double r = std::acosh(1.0 + unit(rng) * (std::cosh(R) - 1.0));
    const double phi = kTwoPi * unit(rng);
    const double theta = std::numbers::pi * unit(rng);
    // Rotation by phi/2 about i, then translation by r along the imaginary axis.
    const GroupElement rot = GroupElement::from_entries(std::cos(phi / 2), std::sin(phi / 2), -std::sin(phi / 2),
                                                        std::cos(phi / 2));
    const GroupElement dir = GroupElement::from_entries(std::cos(theta), std::sin(theta), -std::sin(theta),
                                                        std::cos(theta));
    const GroupElement h = rot * flow_elem(r) * rot.inverse() * dir;
    if (near_domain(G, h, 0.0)) return h;
  }
}

bool near_domain(const FuchsianGroup& G, const GroupElement& g, double pad) {
  const double own = std::acosh(std::max(1.0, 0.5 * g.matrix().frobenius_sq()));
  for (const GroupElement& l : G.alphabet()) {
    const double other = std::acosh(std::max(1.0, cosh_dist(l, g)));
    if (own > other + 2.0 * pad) return false;
  }
  return true;
}

SectionIndex::SectionIndex(const FuchsianGroup& G, double cell, double pad)
    : G_(&G),
      cell_(checked_cell(cell, pad)),
      pad_(pad),
      dir_cells_(static_cast<int>(std::ceil(kTwoPi / cell))),
      dir_width_(kTwoPi / dir_cells_) {
  const double reach = 2.0 * G.domain_radius() + pad;
  for (const OrbitEntry& e : *G.orbit(reach)) {
    if (e.displacement > reach) break;
    neighbours_.push_back(e.gamma);
  }
}

int SectionIndex::sectors(int ring) const {
  return std::max(1, static_cast<int>(std::ceil(kTwoPi * std::sinh((ring + 1) * cell_) / cell_)));
}

std::uint64_t SectionIndex::key(int ring, int sector, int dir) const {
  return (static_cast<std::uint64_t>(ring) << 44) | (static_cast<std::uint64_t>(sector) << 20) |
         static_cast<std::uint64_t>(dir);
}

void SectionIndex::insert(std::uint32_t id, const GroupElement& lift) {
  const GroupElement base = G_->reduce(lift).rep;
  std::uint32_t slot = 0;
  for (const GroupElement& gamma : neighbours_) {
    const GroupElement t = gamma * base;
    if (!near_domain(*G_, t, pad_)) continue;
    const TangentCoords c = tangent_coords(t);
    const int ring = static_cast<int>(c.r / cell_);
    const int n = sectors(ring);
    const int sector = std::min(n - 1, static_cast<int>(c.phi / kTwoPi * n));
    const int dir = std::min(dir_cells_ - 1, static_cast<int>(c.theta / dir_width_));
    buckets_[key(ring, sector, dir)].push_back(static_cast<std::uint32_t>(entries_.size()));
    entries_.push_back({id, slot++, t});
  }
}

void SectionIndex::collect(const GroupElement& g, double pos_radius, double angle_radius,
                           std::vector<std::uint32_t>& out) const {
  const TangentCoords c = tangent_coords(g);
  const int r_lo = std::max(0, static_cast<int>(std::floor((c.r - pos_radius) / cell_)));
  const int r_hi = static_cast<int>(std::floor((c.r + pos_radius) / cell_));
  const double spread = c.r <= pos_radius ? std::numbers::pi
                                          : std::asin(std::min(1.0, std::sinh(pos_radius) / std::sinh(c.r)));
  const int d_lo = static_cast<int>(std::floor((c.theta - angle_radius) / dir_width_));
  const int d_hi = static_cast<int>(std::floor((c.theta + angle_radius) / dir_width_));
  const int d_count = std::min(dir_cells_, d_hi - d_lo + 1);
  for (int ring = r_lo; ring <= r_hi; ++ring) {
    const int n = sectors(ring);
    int s_lo = 0, s_count = n;
    if (spread < std::numbers::pi) {
      s_lo = static_cast<int>(std::floor((c.phi - spread) / kTwoPi * n));
      s_count = std::min(n, static_cast<int>(std::floor((c.phi + spread) / kTwoPi * n)) - s_lo + 1);
    }
    for (int si = 0; si < s_count; ++si) {
      const int sector = ((s_lo + si) % n + n) % n;
      for (int di = 0; di < d_count; ++di) {
        const int dir = ((d_lo + di) % dir_cells_ + dir_cells_) % dir_cells_;
        const auto it = buckets_.find(key(ring, sector, dir));
        if (it != buckets_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
      }
    }
  }
}

}  // namespace geoflow
