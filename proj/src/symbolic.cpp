#include "geoflow/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "geoflow/parallel.hpp"

namespace geoflow {

namespace {

struct FixedPoints {
  double repelling, attracting;
};

std::optional<FixedPoints> fixed_points(const Moebius& f) {
  const double det = f.a * f.d - f.b * f.c;
  const double A = f.c, B = f.d - f.a, C = -f.b;
  std::vector<double> roots;
  if (std::abs(A) < 1e-300) {
    if (B == 0.0) return std::nullopt;
    roots.push_back(-C / B);
  } else {
    const double disc = B * B - 4.0 * A * C;
    if (!(disc > 0.0)) return std::nullopt;
    const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
    roots.push_back(q / A);
    if (q != 0.0) roots.push_back(C / q);
  }
  std::optional<double> rep, att;
  for (double x : roots) {
    const double den = f.c * x + f.d;
    const double slope = std::abs(det) / (den * den);
    if (slope > 1.0) rep = x;
    if (slope < 1.0) att = x;
  }
  // An affine map has its second fixed point at infinity.
  if (roots.size() == 1 && std::abs(A) < 1e-300) {
    if (!rep) rep = roots[0];
    if (!att) att = roots[0];
  }
  if (!rep || !att) return std::nullopt;
  return FixedPoints{*rep, *att};
}

bool lyndon(const std::vector<std::uint32_t>& w) {
  const std::size_t n = w.size();
  for (std::size_t r = 1; r < n; ++r)
    for (std::size_t k = 0; k < n; ++k) {
      const auto a = w[k], b = w[(k + r) % n];
      if (a < b) break;
      if (a > b) return false;
      if (k + 1 == n) return false;
    }
  return true;
}

std::vector<std::vector<std::uint32_t>> cycles(const std::vector<std::vector<std::uint8_t>>& A, std::size_t period_max,
                                               std::size_t max_words, bool& truncated) {
  const std::size_t m = A.size();
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<std::uint32_t> path;
  auto dfs = [&](auto&& self, std::uint32_t s) -> void {
    if (out.size() >= max_words) {
      truncated = true;
      return;
    }
    const std::uint32_t last = path.back();
    if (A[last][s] && lyndon(path)) out.push_back(path);
    if (path.size() == period_max) return;
    for (std::uint32_t q = s; q < m; ++q) {
      if (!A[last][q]) continue;
      path.push_back(q);
      self(self, s);
      path.pop_back();
    }
  };
  for (std::uint32_t s = 0; s < m; ++s) {
    path = {s};
    dfs(dfs, s);
  }
  return out;
}

}  // namespace

std::vector<double> length_spectrum(const FuchsianGroup& G, int word_len) {
  std::vector<double> out;
  for (const GroupElement& g : G.ball(word_len)) {
    const double tr = std::abs(g.matrix().trace());
    if (tr > 2.0 + 1e-12) out.push_back(2.0 * std::acosh(tr / 2.0));
  }
  std::sort(out.begin(), out.end());
  std::vector<double> uniq;
  for (double x : out)
    if (uniq.empty() || x - uniq.back() > 1e-9) uniq.push_back(x);
  return uniq;
}

double nearest_length(std::span<const double> spectrum, double length) {
  if (spectrum.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto it = std::lower_bound(spectrum.begin(), spectrum.end(), length);
  double best = it == spectrum.end() ? spectrum.back() : *it;
  if (it != spectrum.begin() && std::abs(*(it - 1) - length) < std::abs(best - length)) best = *(it - 1);
  return best;
}

SymbolicBundle export_symbolic(const FuchsianGroup& G, const PoincareMap& PM, const MarkovPartition& M,
                               const SymbolicConfig& cfg) {
  SymbolicBundle out;
  out.adjacency = M.adjacency;
  if (M.size() == 0 || cfg.period_max == 0) return out;
  const auto words = cycles(M.adjacency, cfg.period_max, cfg.max_words, out.truncated);
  out.words = words.size();
  const std::vector<double> spectrum = length_spectrum(G, cfg.spectrum_word_len);

  std::vector<std::optional<PeriodicOrbit>> found(words.size());
  parallel_for(words.size(), [&](std::size_t w) {
    const auto& word = words[w];
    const std::size_t n = word.size();
    std::vector<std::vector<std::size_t>> choices(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto edges = PM.forward_edges(word[k]);
      for (std::size_t e = 0; e < edges.size(); ++e)
        if (edges[e].target == word[(k + 1) % n]) choices[k].push_back(e);
      if (choices[k].empty()) return;
    }
    std::vector<std::size_t> pick(n, 0);
    std::optional<PeriodicOrbit> first;
    for (int combo = 0; combo < 64; ++combo) {
      Moebius fu, fs;
      Mat2 closing;
      for (std::size_t k = 0; k < n; ++k) {
        const Edge& e = PM.forward_edges(word[k])[choices[k][pick[k]]];
        fu = fu.then(e.transit.u_map());
        fs = fs.then(e.transit.s_map());
        closing = e.transit.M * closing;
      }
      if (const auto fp = fixed_points(fu)) {
        const auto fq = fixed_points(fs);
        if (fq) {
          PeriodicOrbit o;
          o.word = word;
          o.symbolic_length = n;
          o.start = {fp->repelling, fq->attracting};
          o.trace_length = 2.0 * std::acosh(std::max(1.0, std::abs(closing.trace()) / 2.0));
          LeafLabels l = o.start;
          MemberPoint x{word[0], o.start};
          bool realized = true;
          for (std::size_t k = 0; k < n; ++k) {
            const Edge& e = PM.forward_edges(word[k])[choices[k][pick[k]]];
            o.r_sum += e.time(l);
            l = e.apply(l);
            if (realized) {
              const auto r = PM.forward(x);
              realized = r && r->to.member == word[(k + 1) % n] && r->edge == choices[k][pick[k]];
              if (realized) x = r->to;
            }
          }
          realized = realized && std::abs(x.labels.u - o.start.u) < 1e-7 && std::abs(x.labels.sp - o.start.sp) < 1e-7;
          o.realized = realized;
          o.group_length = nearest_length(spectrum, o.r_sum);
          o.residual = std::abs(o.r_sum - o.group_length);
          if (o.realized) {
            found[w] = std::move(o);
            return;
          }
          if (!first) first = std::move(o);
        }
      }
      std::size_t k = 0;
      while (k < n && ++pick[k] == choices[k].size()) pick[k++] = 0;
      if (k == n) break;
    }
    found[w] = std::move(first);
  });
  for (auto& o : found)
    if (o) out.orbits.push_back(std::move(*o));
  return out;
}

}  // namespace geoflow
