#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "vbcar/corpus.hpp"

namespace vbcar {

/// Synthetic basket corpus with planted clusters. Users and items are assigned
/// to clusters round-robin (entity k belongs to cluster k % n_clusters).
struct SynthConfig {
  std::size_t n_users = 200;
  std::size_t n_items = 200;
  std::size_t n_clusters = 4;
  std::size_t orders_per_user = 10;
  std::size_t items_per_order = 5;
  double in_cluster_prob = 0.9;
  /// When positive, each user owns this many items of their cluster and
  /// in-cluster draws come from that set only. 0 uses the whole cluster.
  std::size_t pantry_size = 0;
  std::uint64_t seed = 1;

  void validate() const;
};

std::size_t cluster_of(std::size_t entity, std::size_t n_clusters);

/// Every order has a distinct timestamp. Orders are interleaved across users
/// (round r of user u is at time r * n_users + u) so a temporal split cuts
/// each user's history rather than whole users.
Interactions generate(const SynthConfig& cfg);

/// The in-cluster pool of every user (the pantry, or the whole cluster),
/// ascending item indices matching `generate`'s zero-padded ids.
std::vector<std::vector<std::uint32_t>> user_pools(const SynthConfig& cfg);

}  // namespace vbcar
