#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vbcar/corpus.hpp"
#include "vbcar/model.hpp"

namespace vbcar {

/// Union of the items across all of a user's test orders, ascending.
std::vector<std::uint32_t> relevant_items(const Interactions& test, const IdMaps& maps,
                                          std::uint32_t user);

/// relevant_items for every user in `maps`, indexed by dense user id.
std::vector<std::vector<std::uint32_t>> ground_truth(const Interactions& test, const IdMaps& maps);

/// |top-K ∩ relevant| / |relevant|; nullopt when nothing is relevant.
std::optional<double> recall_at_k(std::span<const std::uint32_t> ranked,
                                  std::span<const std::uint32_t> relevant, std::size_t k);

/// Binary-gain NDCG; nullopt when nothing is relevant.
std::optional<double> ndcg_at_k(std::span<const std::uint32_t> ranked,
                                std::span<const std::uint32_t> relevant, std::size_t k);

struct UserMetrics {
  std::uint32_t user = 0;
  double recall = 0.0;
  double ndcg = 0.0;

  bool operator==(const UserMetrics&) const = default;
};

struct MetricsReport {
  std::size_t k = 10;
  std::vector<UserMetrics> per_user;  // ascending user id
  double recall_mean = 0.0;
  double ndcg_mean = 0.0;

  std::size_t users() const { return per_user.size(); }

  /// {k, users, recall_mean, ndcg_mean[, per_user]}
  std::string to_json(bool include_per_user = true) const;
  static MetricsReport from_json(const std::string& text);

  bool operator==(const MetricsReport&) const = default;
};

/// Next-basket evaluation over every user with a non-empty ground truth.
MetricsReport evaluate(const LatentMatrix& zu, const LatentMatrix& zi,
                       const std::vector<std::vector<std::uint32_t>>& truth, std::size_t k);

MetricsReport evaluate(const LatentMatrix& zu, const LatentMatrix& zi, const Interactions& test,
                       const IdMaps& maps, std::size_t k);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;  // two-sided
  std::size_t dof = 0;
};

/// Paired Student t-test on a - b.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

struct Comparison {
  std::size_t users = 0;
  TTestResult recall;
  TTestResult ndcg;

  std::string to_json() const;
};

/// Pairs the per-user metrics of two reports over the same user set.
Comparison compare_reports(const MetricsReport& a, const MetricsReport& b);

}  // namespace vbcar
