#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "geoflow/psl2.hpp"

namespace geoflow {

struct QuotientPoint {
  GroupElement rep;
  // Alphabet indices left-multiplied onto the input, in application order.
  std::vector<int> word;
};

struct GroupSpec {
  std::string name = "custom";
  std::vector<Mat2> generators;
  // Signed 1-based generator indices; -k means the inverse of generator k.
  std::vector<int> relation;
};

// Group element together with its displacement d(i, g i).
struct OrbitEntry {
  GroupElement gamma;
  double displacement = 0.0;
};

struct Translate {
  GroupElement gamma;
  double distance = 0.0;
};

// Deduplicating container for group elements.
class ElementSet {
 public:
  // Returns the index of g, inserting it if it is new.
  std::pair<std::size_t, bool> insert(const GroupElement& g);
  bool contains(const GroupElement& g) const { return find(g) >= 0; }
  long find(const GroupElement& g) const;
  const std::vector<GroupElement>& elements() const { return elems_; }
  std::size_t size() const { return elems_.size(); }

 private:
  using Key = std::array<std::int64_t, 4>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };
  static Key key_of(const GroupElement& g);
  std::vector<GroupElement> elems_;
  std::unordered_map<Key, std::vector<std::size_t>, KeyHash> buckets_;
};

class FuchsianGroup {
 public:
  static FuchsianGroup bolza();
  // Validates traces, relation and discreteness; throws InvalidGroup.
  static FuchsianGroup from_spec(const GroupSpec& spec);

  const std::string& name() const { return impl_->name; }
  const GroupSpec& spec() const { return impl_->spec; }
  // Generators followed by their inverses.
  std::span<const GroupElement> alphabet() const { return impl_->alphabet; }
  std::size_t generator_count() const { return impl_->spec.generators.size(); }
  int inverse_letter(int letter) const;

  GroupElement word_product(std::span<const int> letters) const;
  GroupElement relation_product() const;

  // Upper bound for d(i, p) over the fundamental domain.
  double domain_radius() const { return impl_->domain_radius; }
  double sigma_star() const { return impl_->sigma_star; }
  double systole() const { return impl_->systole; }

  int ball_cap() const { return impl_->ball_cap; }
  std::vector<GroupElement> ball(int max_word_len) const;

  QuotientPoint reduce(const GroupElement& g) const;
  QuotientPoint point(const GroupElement& g) const { return reduce(g); }

  // Orbit elements sorted by displacement, complete up to at least `radius`.
  std::shared_ptr<const std::vector<OrbitEntry>> orbit(double radius) const;
  // All gamma with d(g i, gamma h i) <= radius.
  std::vector<GroupElement> translates_within(const GroupElement& g, const GroupElement& h,
                                              double radius) const;
  // gamma minimising proxy_dist(g, gamma h).
  Translate nearest_translate(const GroupElement& g, const GroupElement& h) const;
  double quotient_dist(const QuotientPoint& x, const QuotientPoint& y) const;
  double quotient_dist(const GroupElement& g, const GroupElement& h) const;

  // Independent estimate: local minimisation of proxy_dist(gamma g, g) over g.
  double sampled_injectivity_radius(int starts_per_element, std::uint64_t seed) const;

 private:
  struct Impl;
  explicit FuchsianGroup(std::shared_ptr<Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<Impl> impl_;

  struct Impl {
    std::string name;
    GroupSpec spec;
    std::vector<GroupElement> alphabet;
    double domain_radius = 0.0;
    double sigma_star = 0.0;
    double systole = 0.0;
    int ball_cap = 8;
    mutable std::mutex orbit_mutex;
    mutable std::shared_ptr<const std::vector<OrbitEntry>> orbit;
    mutable double orbit_radius = 0.0;
  };
  void extend_orbit(double radius) const;
  void compute_systole();
};

double translation_length(const GroupElement& g);

}  // namespace geoflow
