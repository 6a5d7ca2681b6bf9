#include "geoflow/fuchsian.hpp"

#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <complex>
#include <deque>
#include <limits>
#include <numbers>
#include <random>

namespace geoflow {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kElementQuantum = 1e-9;

Mat2 octagon_side_pairing(int k) {
  using cd = std::complex<double>;
  const double alpha = 1.0 + kSqrt2;
  const double beta = std::sqrt(alpha * alpha - 1.0);
  const cd w = std::polar(1.0, k * std::numbers::pi / 4.0);
  const cd A[2][2] = {{alpha, beta * w}, {beta * std::conj(w), alpha}};
  // Conjugate the disc isometry to the upper half plane: C^{-1} A C with C = [[1,-i],[1,i]].
  const cd I(0.0, 1.0);
  const cd C[2][2] = {{1.0, -I}, {1.0, I}};
  const cd Ci[2][2] = {{0.5, 0.5}, {0.5 * I, -0.5 * I}};
  cd AC[2][2], M[2][2];
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) AC[r][c] = A[r][0] * C[0][c] + A[r][1] * C[1][c];
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) M[r][c] = Ci[r][0] * AC[0][c] + Ci[r][1] * AC[1][c];
  return {M[0][0].real(), M[0][1].real(), M[1][0].real(), M[1][1].real()};
}

int letter_of(int signed_index, std::size_t n) {
  const int k = std::abs(signed_index) - 1;
  return signed_index > 0 ? k : k + static_cast<int>(n);
}

}  // namespace

double translation_length(const GroupElement& g) {
  const double h = 0.5 * std::abs(g.matrix().trace());
  return h <= 1.0 ? 0.0 : 2.0 * std::acosh(h);
}

// ---------------------------------------------------------------- ElementSet

std::size_t ElementSet::KeyHash::operator()(const Key& k) const noexcept {
  std::size_t h = 0xcbf29ce484222325ULL;
  for (auto v : k) h = (h ^ static_cast<std::size_t>(v)) * 0x100000001b3ULL;
  return h;
}

ElementSet::Key ElementSet::key_of(const GroupElement& g) {
  const Mat2& m = g.matrix();
  const double n = m.frobenius();
  return {static_cast<std::int64_t>(std::floor(m.a / n / kElementQuantum)),
          static_cast<std::int64_t>(std::floor(m.b / n / kElementQuantum)),
          static_cast<std::int64_t>(std::floor(m.c / n / kElementQuantum)),
          static_cast<std::int64_t>(std::floor(m.d / n / kElementQuantum))};
}

long ElementSet::find(const GroupElement& g) const {
  const Mat2& m = g.matrix();
  const double n = m.frobenius();
  const double vals[4] = {m.a / n, m.b / n, m.c / n, m.d / n};
  // Probe neighbouring cells only along coordinates that sit on a cell boundary.
  std::array<std::array<std::int64_t, 2>, 4> opts{};
  std::array<int, 4> counts{};
  for (int i = 0; i < 4; ++i) {
    const double x = vals[i] / kElementQuantum;
    const auto k = static_cast<std::int64_t>(std::floor(x));
    const double frac = x - static_cast<double>(k);
    opts[i][0] = k;
    counts[i] = 1;
    if (frac < 1e-3) opts[i][counts[i]++] = k - 1;
    else if (frac > 1.0 - 1e-3) opts[i][counts[i]++] = k + 1;
  }
  for (int i0 = 0; i0 < counts[0]; ++i0)
    for (int i1 = 0; i1 < counts[1]; ++i1)
      for (int i2 = 0; i2 < counts[2]; ++i2)
        for (int i3 = 0; i3 < counts[3]; ++i3) {
          const Key key{opts[0][i0], opts[1][i1], opts[2][i2], opts[3][i3]};
          auto it = buckets_.find(key);
          if (it == buckets_.end()) continue;
          for (auto idx : it->second)
            if (approx_equal(elems_[idx], g, 1e-7)) return static_cast<long>(idx);
        }
  return -1;
}

std::pair<std::size_t, bool> ElementSet::insert(const GroupElement& g) {
  const long found = find(g);
  if (found >= 0) return {static_cast<std::size_t>(found), false};
  elems_.push_back(g);
  buckets_[key_of(g)].push_back(elems_.size() - 1);
  return {elems_.size() - 1, true};
}

// ------------------------------------------------------------ FuchsianGroup

FuchsianGroup FuchsianGroup::bolza() {
  GroupSpec spec;
  spec.name = "bolza";
  for (int k = 0; k < 4; ++k) spec.generators.push_back(octagon_side_pairing(k));
  spec.relation = {1, -2, 3, -4, -1, 2, -3, 4};
  return from_spec(spec);
}

FuchsianGroup FuchsianGroup::from_spec(const GroupSpec& spec) {
  if (spec.generators.empty()) throw InvalidGroup("no generators");
  auto impl = std::make_shared<Impl>();
  impl->name = spec.name;
  impl->spec = spec;
  for (const auto& m : spec.generators) {
    if (std::abs(m.det() - 1.0) > 1e-9) throw InvalidGroup("generator determinant is not 1");
    impl->alphabet.push_back(GroupElement::from_matrix(m));
    if (std::abs(impl->alphabet.back().matrix().trace()) <= 2.0 + 1e-9)
      throw InvalidGroup("generator is not hyperbolic");
  }
  const std::size_t n = spec.generators.size();
  for (std::size_t k = 0; k < n; ++k) impl->alphabet.push_back(impl->alphabet[k].inverse());
  for (int r : spec.relation)
    if (r == 0 || static_cast<std::size_t>(std::abs(r)) > n)
      throw InvalidGroup("relation refers to an unknown generator");

  FuchsianGroup group(impl);
  if (!approx_equal(group.relation_product(), GroupElement{}, 1e-9))
    throw InvalidGroup("relation product is not the identity");

  if (spec.name == "bolza") {
    const double alpha = 1.0 + kSqrt2;
    impl->domain_radius = std::acosh(alpha * alpha);
  } else {
    // Largest reduced displacement over random words, padded.
    std::mt19937_64 rng(12345);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(2 * n) - 1);
    std::uniform_real_distribution<double> small(-1.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 2000; ++trial) {
      GroupElement g = recompose({small(rng), small(rng), 2.0 * small(rng), KanOrder::CBA});
      for (int j = 0; j < 6; ++j) g = impl->alphabet[static_cast<std::size_t>(pick(rng))] * g;
      worst = std::max(worst, displacement(group.reduce(g).rep));
    }
    impl->domain_radius = 1.1 * worst + 0.1;
  }
  group.compute_systole();
  if (!(impl->sigma_star > 1e-6)) throw InvalidGroup("group does not look discrete");
  return group;
}

int FuchsianGroup::inverse_letter(int letter) const {
  const int n = static_cast<int>(generator_count());
  return letter < n ? letter + n : letter - n;
}

GroupElement FuchsianGroup::word_product(std::span<const int> letters) const {
  GroupElement g;
  for (int l : letters) g = g * impl_->alphabet.at(static_cast<std::size_t>(l));
  return g;
}

GroupElement FuchsianGroup::relation_product() const {
  std::vector<int> letters;
  for (int r : impl_->spec.relation) letters.push_back(letter_of(r, generator_count()));
  return word_product(letters);
}

std::vector<GroupElement> FuchsianGroup::ball(int max_word_len) const {
  if (max_word_len > impl_->ball_cap) throw BallTooLarge("word length exceeds the configured cap");
  if (max_word_len <= 0) return {};
  ElementSet seen;
  seen.insert(GroupElement{});
  std::vector<GroupElement> frontier{GroupElement{}};
  std::vector<GroupElement> out;
  for (int len = 1; len <= max_word_len; ++len) {
    std::vector<GroupElement> next;
    for (const auto& g : frontier)
      for (const auto& l : impl_->alphabet) {
        const GroupElement h = g * l;
        if (seen.insert(h).second) {
          next.push_back(h);
          out.push_back(h);
        }
      }
    frontier = std::move(next);
  }
  return out;
}

QuotientPoint FuchsianGroup::reduce(const GroupElement& g) const {
  QuotientPoint out{g, {}};
  double cost = g.matrix().frobenius_sq();
  for (int iter = 0; iter < 100000; ++iter) {
    int best = -1;
    double best_cost = cost * (1.0 - 1e-13);
    GroupElement best_elem;
    for (std::size_t l = 0; l < impl_->alphabet.size(); ++l) {
      const GroupElement h = impl_->alphabet[l] * out.rep;
      const double c = h.matrix().frobenius_sq();
      if (c < best_cost) {
        best_cost = c;
        best = static_cast<int>(l);
        best_elem = h;
      }
    }
    if (best < 0) return out;
    out.rep = best_elem;
    out.word.push_back(best);
    cost = best_cost;
  }
  throw InvalidGroup("reduction did not terminate");
}

void FuchsianGroup::extend_orbit(double radius) const {
  // Tiles meeting the geodesic from i to gamma i have centres within radius + r0.
  const double bound = radius + impl_->domain_radius + 0.5;
  ElementSet seen;
  std::vector<OrbitEntry> found;
  std::deque<std::size_t> queue;
  seen.insert(GroupElement{});
  found.push_back({GroupElement{}, 0.0});
  queue.push_back(0);
  while (!queue.empty()) {
    const GroupElement g = found[queue.front()].gamma;
    queue.pop_front();
    for (const auto& l : impl_->alphabet) {
      const GroupElement h = g * l;
      const double d = displacement(h);
      if (d > bound) continue;
      if (!seen.insert(h).second) continue;
      found.push_back({h, d});
      queue.push_back(found.size() - 1);
    }
  }
  std::stable_sort(found.begin(), found.end(),
                   [](const OrbitEntry& x, const OrbitEntry& y) { return x.displacement < y.displacement; });
  std::erase_if(found, [radius](const OrbitEntry& e) { return e.displacement > radius; });
  impl_->orbit = std::make_shared<const std::vector<OrbitEntry>>(std::move(found));
  impl_->orbit_radius = radius;
}

std::shared_ptr<const std::vector<OrbitEntry>> FuchsianGroup::orbit(double radius) const {
  std::lock_guard lock(impl_->orbit_mutex);
  if (!impl_->orbit || impl_->orbit_radius < radius) {
    if (radius > 40.0) throw BallTooLarge("orbit radius too large");
    extend_orbit(std::max(radius, std::max(impl_->orbit_radius * 1.25, 2.0 * impl_->domain_radius + 4.0)));
  }
  return impl_->orbit;
}

void FuchsianGroup::compute_systole() {
  double shortest = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < generator_count(); ++k)
    shortest = std::min(shortest, translation_length(impl_->alphabet[k]));
  // Every conjugacy class has a representative whose axis crosses the domain.
  const double radius = 2.0 * impl_->domain_radius + shortest;
  for (const auto& e : *orbit(radius)) {
    if (e.displacement > radius) break;
    if (e.displacement < 1e-9) continue;
    shortest = std::min(shortest, translation_length(e.gamma));
  }
  impl_->systole = shortest;
  impl_->sigma_star = shortest / kSqrt2;
}

std::vector<GroupElement> FuchsianGroup::translates_within(const GroupElement& g, const GroupElement& h,
                                                           double radius) const {
  // Work with reduced representatives: g = wg * gr and h = wh * hr.
  const GroupElement gr = reduce(g).rep, hr = reduce(h).rep;
  const GroupElement wg = g * gr.inverse(), wh = h * hr.inverse();
  const double dg = displacement(gr), dh = displacement(hr);
  const double reach = radius + dg + dh;
  std::vector<GroupElement> out;
  const GroupElement p = gr.inverse();
  for (const auto& e : *orbit(reach)) {
    if (e.displacement > reach) break;
    if (displacement(p * e.gamma * hr) <= radius) out.push_back(wg * e.gamma * wh.inverse());
  }
  return out;
}

Translate FuchsianGroup::nearest_translate(const GroupElement& g, const GroupElement& h) const {
  const GroupElement gr = reduce(g).rep, hr = reduce(h).rep;
  const GroupElement wg = g * gr.inverse(), wh = h * hr.inverse();
  const double dg = displacement(gr), dh = displacement(hr);
  const GroupElement p = gr.inverse();
  Translate best{GroupElement{}, std::numeric_limits<double>::infinity()};
  auto consider = [&](const GroupElement& gamma) {
    try {
      const double v = proxy_norm(p * gamma * hr);
      if (v < best.distance) best = {gamma, v};
    } catch (const LogUndefined&) {
    }
  };
  // Seed the bound from a modest ball; extend only if the bound still reaches past it.
  const double seed_radius = dg + dh + 2.0 * impl_->domain_radius;
  for (const auto& e : *orbit(seed_radius)) {
    if (e.displacement > seed_radius) break;
    if ((e.displacement - dg - dh) / kSqrt2 >= best.distance) break;
    consider(e.gamma);
  }
  if (best.distance * kSqrt2 + dg + dh > seed_radius) {
    if (!std::isfinite(best.distance)) throw LogUndefined("no translate admits a logarithm");
    for (const auto& e : *orbit(best.distance * kSqrt2 + dg + dh)) {
      if ((e.displacement - dg - dh) / kSqrt2 >= best.distance) break;
      if (e.displacement > seed_radius) consider(e.gamma);
    }
  }
  best.gamma = wg * best.gamma * wh.inverse();
  return best;
}

double FuchsianGroup::quotient_dist(const QuotientPoint& x, const QuotientPoint& y) const {
  return quotient_dist(x.rep, y.rep);
}

double FuchsianGroup::quotient_dist(const GroupElement& g, const GroupElement& h) const {
  return nearest_translate(g, h).distance;
}

namespace {

struct ConjugationTarget {
  GroupElement gamma;
  GroupElement base;
};

double conjugated_norm(const gsl_vector* v, void* params) {
  const auto* t = static_cast<const ConjugationTarget*>(params);
  const double p = gsl_vector_get(v, 0), q = gsl_vector_get(v, 1), r = gsl_vector_get(v, 2);
  const GroupElement g = t->base * matrix_exp({p, q, r, -p});
  try {
    return proxy_dist(t->gamma * g, g).value();
  } catch (const LogUndefined&) {
    return 1e6;
  }
}

double minimise_conjugated_norm(const GroupElement& gamma, const GroupElement& base) {
  ConjugationTarget target{gamma, base};
  gsl_multimin_function fn{&conjugated_norm, 3, &target};
  gsl_vector* x = gsl_vector_calloc(3);
  gsl_vector* step = gsl_vector_alloc(3);
  gsl_vector_set_all(step, 0.3);
  gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 3);
  gsl_multimin_fminimizer_set(m, &fn, x, step);
  for (int iter = 0; iter < 5000; ++iter) {
    if (gsl_multimin_fminimizer_iterate(m) != 0) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-10) == GSL_SUCCESS) break;
  }
  const double best = m->fval;
  gsl_multimin_fminimizer_free(m);
  gsl_vector_free(step);
  gsl_vector_free(x);
  return best;
}

}  // namespace

double FuchsianGroup::sampled_injectivity_radius(int starts_per_element, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  const double radius = 2.0 * impl_->domain_radius + 0.5;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : *orbit(radius)) {
    if (e.displacement > radius) break;
    if (e.displacement < 1e-9) continue;
    for (int k = 0; k < starts_per_element; ++k) {
      const GroupElement start =
          reduce(recompose({coord(rng), coord(rng), 2.0 * coord(rng), KanOrder::CBA})).rep;
      best = std::min(best, minimise_conjugated_norm(e.gamma, start));
    }
  }
  return best;
}

}  // namespace geoflow
