#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "vbcar/corpus.hpp"
#include "vbcar/rng.hpp"

namespace vbcar {

/// A (user, item, item) purchase-context triple. Items are stored with the
/// lower index first; the likelihood is symmetric in the two items.
struct Triple {
  std::uint32_t user = 0;
  std::uint32_t item_a = 0;
  std::uint32_t item_b = 0;

  auto operator<=>(const Triple&) const = default;
};

struct TripleHash {
  std::size_t operator()(const Triple& t) const noexcept;
};

/// Returns the triple with its items in canonical order.
Triple canonical(Triple t);

struct CountedTriple {
  Triple triple;
  std::uint32_t count = 1;  // n+

  bool operator==(const CountedTriple&) const = default;
};

/// Positive triples aggregated by multiplicity plus their corrupted
/// counterparts.
struct TripleBatch {
  std::vector<CountedTriple> positives;
  std::vector<Triple> negatives;
  std::size_t neg_ratio = 0;

  /// Sum of n+ over distinct positives.
  std::size_t positive_total() const;
};

/// Draws triples from training baskets: an eligible basket (two or more
/// distinct items) uniformly, then an unordered item pair uniformly within it.
class TripleSampler {
 public:
  explicit TripleSampler(std::span<const Basket> train);

  Triple draw(Rng& rng) const;
  std::vector<Triple> sample(std::size_t count, Rng& rng) const;

  /// True when both items co-occur in one of the user's training baskets.
  bool supports(const Triple& t) const;

  std::size_t eligible_baskets() const { return eligible_.size(); }

 private:
  std::vector<Basket> eligible_;
};

std::vector<Triple> sample_triples(std::span<const Basket> train, std::size_t count, Rng& rng);

struct NegativeSampling {
  std::size_t neg_ratio = 5;
  std::size_t max_retries = 100;
};

/// Emits `neg_ratio` corruptions per positive, in positive order: one slot
/// chosen uniformly is replaced by a uniform id of the same kind. Corruptions
/// that hit the positive set or repeat an item are redrawn.
std::vector<Triple> draw_negatives(std::span<const Triple> positives,
                                   const NegativeSampling& options, std::size_t n_users,
                                   std::size_t n_items, Rng& rng);

/// Aggregates positives into n+ counts, in first-appearance order.
TripleBatch make_batch(std::span<const Triple> positives, std::span<const Triple> negatives,
                       std::size_t neg_ratio);

TripleBatch sample_negatives(std::span<const Triple> positives, std::size_t neg_ratio,
                             std::size_t n_users, std::size_t n_items, Rng& rng,
                             std::size_t max_retries = 100);

/// "user<TAB>item_a<TAB>item_b<TAB>count" lines for the positives.
void write_triples(std::ostream& out, const TripleBatch& batch);

}  // namespace vbcar
