#include "vbcar/sampler.hpp"

#include <algorithm>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

#include "vbcar/error.hpp"

namespace vbcar {

std::size_t TripleHash::operator()(const Triple& t) const noexcept {
  std::uint64_t h = t.user;
  h = h * 0x9e3779b97f4a7c15ULL ^ t.item_a;
  h = h * 0x9e3779b97f4a7c15ULL ^ t.item_b;
  h ^= h >> 29;
  return static_cast<std::size_t>(h * 0xbf58476d1ce4e5b9ULL);
}

Triple canonical(Triple t) {
  if (t.item_a > t.item_b) std::swap(t.item_a, t.item_b);
  return t;
}

std::size_t TripleBatch::positive_total() const {
  std::size_t total = 0;
  for (const auto& p : positives) total += p.count;
  return total;
}

TripleSampler::TripleSampler(std::span<const Basket> train) {
  for (const auto& basket : train) {
    Basket b = basket;
    std::sort(b.items.begin(), b.items.end());
    b.items.erase(std::unique(b.items.begin(), b.items.end()), b.items.end());
    if (b.items.size() >= 2) eligible_.push_back(std::move(b));
  }
  if (eligible_.empty()) {
    throw Error(ErrorKind::insufficient_data,
                "no training basket holds two distinct items; cannot sample triples");
  }
}

Triple TripleSampler::draw(Rng& rng) const {
  const Basket& basket = eligible_[rng.index(eligible_.size())];
  const std::size_t n = basket.items.size();
  // Uniform unordered pair: first slot anywhere, second among the rest.
  const std::size_t first = rng.index(n);
  std::size_t second = rng.index(n - 1);
  if (second >= first) ++second;
  return canonical({basket.user, basket.items[first], basket.items[second]});
}

std::vector<Triple> TripleSampler::sample(std::size_t count, Rng& rng) const {
  std::vector<Triple> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(draw(rng));
  return out;
}

bool TripleSampler::supports(const Triple& t) const {
  if (t.item_a == t.item_b) return false;
  for (const auto& b : eligible_) {
    if (b.user != t.user) continue;
    if (std::binary_search(b.items.begin(), b.items.end(), t.item_a) &&
        std::binary_search(b.items.begin(), b.items.end(), t.item_b)) {
      return true;
    }
  }
  return false;
}

std::vector<Triple> sample_triples(std::span<const Basket> train, std::size_t count, Rng& rng) {
  return TripleSampler(train).sample(count, rng);
}

std::vector<Triple> draw_negatives(std::span<const Triple> positives,
                                   const NegativeSampling& options, std::size_t n_users,
                                   std::size_t n_items, Rng& rng) {
  if (options.neg_ratio < 1) {
    throw Error(ErrorKind::invalid_argument, "neg_ratio must be at least 1");
  }
  if (n_items < 2 || n_users < 1) {
    throw Error(ErrorKind::invalid_argument, "negative sampling needs N >= 1 and M >= 2");
  }
  std::unordered_set<Triple, TripleHash> observed;
  for (const Triple& t : positives) observed.insert(canonical(t));

  std::vector<Triple> negatives;
  negatives.reserve(positives.size() * options.neg_ratio);
  for (const Triple& pos : positives) {
    for (std::size_t r = 0; r < options.neg_ratio; ++r) {
      bool accepted = false;
      for (std::size_t attempt = 0; attempt < options.max_retries; ++attempt) {
        Triple cand = pos;
        switch (rng.index(3)) {
          case 0:
            cand.user = static_cast<std::uint32_t>(rng.index(n_users));
            break;
          case 1:
            cand.item_a = static_cast<std::uint32_t>(rng.index(n_items));
            break;
          default:
            cand.item_b = static_cast<std::uint32_t>(rng.index(n_items));
            break;
        }
        if (cand.item_a == cand.item_b) continue;
        cand = canonical(cand);
        if (observed.count(cand)) continue;
        negatives.push_back(cand);
        accepted = true;
        break;
      }
      if (!accepted) {
        throw Error(ErrorKind::sampling,
                    "negative sampling exhausted its retry budget; the user/item universe "
                    "is too small for the positive set");
      }
    }
  }
  return negatives;
}

TripleBatch make_batch(std::span<const Triple> positives, std::span<const Triple> negatives,
                       std::size_t neg_ratio) {
  TripleBatch batch;
  batch.neg_ratio = neg_ratio;
  std::unordered_map<Triple, std::size_t, TripleHash> slot;
  for (const Triple& t : positives) {
    auto [it, inserted] = slot.emplace(t, batch.positives.size());
    if (inserted) {
      batch.positives.push_back({t, 1});
    } else {
      ++batch.positives[it->second].count;
    }
  }
  batch.negatives.assign(negatives.begin(), negatives.end());
  return batch;
}

TripleBatch sample_negatives(std::span<const Triple> positives, std::size_t neg_ratio,
                             std::size_t n_users, std::size_t n_items, Rng& rng,
                             std::size_t max_retries) {
  const auto negatives = draw_negatives(positives, {neg_ratio, max_retries}, n_users, n_items, rng);
  return make_batch(positives, negatives, neg_ratio);
}

void write_triples(std::ostream& out, const TripleBatch& batch) {
  for (const auto& p : batch.positives) {
    out << p.triple.user << '\t' << p.triple.item_a << '\t' << p.triple.item_b << '\t'
        << p.count << '\n';
  }
}

}  // namespace vbcar
