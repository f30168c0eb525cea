#include "vbcar/synthgen.hpp"

#include <algorithm>
#include <string>

#include "vbcar/error.hpp"
#include "vbcar/rng.hpp"

namespace vbcar {
namespace {

std::string padded(char prefix, std::size_t value, std::size_t count) {
  const std::size_t width = std::to_string(count == 0 ? 0 : count - 1).size();
  std::string digits = std::to_string(value);
  return prefix + std::string(width - digits.size(), '0') + digits;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_users < 1 || n_items < 2) {
    throw Error(ErrorKind::invalid_argument, "synthetic corpus needs users and at least 2 items");
  }
  if (n_clusters < 1 || n_clusters > std::min(n_users, n_items)) {
    throw Error(ErrorKind::invalid_argument, "n_clusters must lie in [1, min(n_users, n_items)]");
  }
  if (items_per_order < 2) throw Error(ErrorKind::invalid_argument, "items_per_order must be >= 2");
  if (!(in_cluster_prob >= 0.0 && in_cluster_prob <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, "in_cluster_prob must lie in [0, 1]");
  }
  if (items_per_order > n_items) {
    throw Error(ErrorKind::invalid_argument, "items_per_order exceeds the item count");
  }
  // Smallest cluster size under round-robin assignment.
  const std::size_t cluster = n_items / n_clusters;
  if (pantry_size > cluster) {
    throw Error(ErrorKind::invalid_argument, "pantry_size exceeds the cluster size");
  }
  const std::size_t pool = pantry_size > 0 ? pantry_size : cluster;
  if (in_cluster_prob == 1.0 && items_per_order > pool) {
    throw Error(ErrorKind::invalid_argument, "items_per_order exceeds the items available in-cluster");
  }
}

std::size_t cluster_of(std::size_t entity, std::size_t n_clusters) { return entity % n_clusters; }

std::vector<std::vector<std::uint32_t>> user_pools(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<std::vector<std::uint32_t>> clusters(cfg.n_clusters);
  for (std::size_t i = 0; i < cfg.n_items; ++i) {
    clusters[cluster_of(i, cfg.n_clusters)].push_back(static_cast<std::uint32_t>(i));
  }
  Rng rng(derive_seed(cfg.seed, 0));
  std::vector<std::vector<std::uint32_t>> pools(cfg.n_users);
  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    std::vector<std::uint32_t> pool = clusters[cluster_of(u, cfg.n_clusters)];
    if (cfg.pantry_size > 0) {
      rng.shuffle(std::span<std::uint32_t>(pool));
      pool.resize(cfg.pantry_size);
      std::sort(pool.begin(), pool.end());
    }
    pools[u] = std::move(pool);
  }
  return pools;
}

Interactions generate(const SynthConfig& cfg) {
  const auto pools = user_pools(cfg);
  Rng rng(derive_seed(cfg.seed, 1));
  const std::size_t n_orders = cfg.n_users * cfg.orders_per_user;

  std::vector<InteractionRecord> records;
  records.reserve(n_orders * cfg.items_per_order);
  std::vector<std::uint32_t> basket;
  for (std::size_t round = 0; round < cfg.orders_per_user; ++round) {
    for (std::size_t u = 0; u < cfg.n_users; ++u) {
      const std::size_t order = round * cfg.n_users + u;
      const auto& pool = pools[u];
      basket.clear();
      while (basket.size() < cfg.items_per_order) {
        const bool in_cluster = rng.uniform() < cfg.in_cluster_prob;
        const std::uint32_t item = in_cluster
                                       ? pool[rng.index(pool.size())]
                                       : static_cast<std::uint32_t>(rng.index(cfg.n_items));
        if (std::find(basket.begin(), basket.end(), item) == basket.end()) basket.push_back(item);
      }
      for (std::uint32_t item : basket) {
        records.push_back({padded('u', u, cfg.n_users), padded('i', item, cfg.n_items),
                           padded('o', order, n_orders), static_cast<std::int64_t>(order)});
      }
    }
  }
  return Interactions::from_records(std::move(records));
}

}  // namespace vbcar
