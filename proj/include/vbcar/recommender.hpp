#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "vbcar/model.hpp"

namespace vbcar {

struct ScoredItem {
  std::uint32_t item = 0;
  double score = 0.0;

  bool operator==(const ScoredItem&) const = default;
};

/// Top-K items for one user: scores non-increasing, ties by ascending item.
struct RankedResult {
  std::uint32_t user = 0;
  std::vector<ScoredItem> items;
};

/// s_ui = z_u . z_i for every item; `zi` must be the full item table.
std::vector<double> next_basket_scores(std::uint32_t user, const LatentMatrix& zu,
                                       const LatentMatrix& zi);

/// s_ui = (z_u + sum of basket item vectors) . z_i; basket items score -inf.
std::vector<double> within_basket_scores(std::uint32_t user, std::span<const std::uint32_t> basket,
                                         const LatentMatrix& zu, const LatentMatrix& zi);

/// The K best finite-or-+inf scores. Entries scored -inf are never returned.
std::vector<ScoredItem> top_k(std::span<const double> scores, std::size_t k);

RankedResult recommend(std::uint32_t user, const LatentMatrix& zu, const LatentMatrix& zi,
                       std::size_t k);

enum class ScoringMode {
  mean,     // posterior means
  sampled,  // one reparameterized draw per entity
};

struct PointEmbeddings {
  LatentMatrix users;
  LatentMatrix items;
};

/// Full user and item tables for scoring. `rng` is used only in sampled mode
/// and only for variational parameters.
PointEmbeddings point_embeddings(const EncoderParams& params, ScoringMode mode, Rng* rng = nullptr);

/// "user<TAB>rank<TAB>item<TAB>score" lines, rank 1-based.
void write_recommendations(std::ostream& out, std::span<const RankedResult> results);

}  // namespace vbcar
