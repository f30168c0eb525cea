#include "vbcar/recommender.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "vbcar/error.hpp"

namespace vbcar {
namespace {

void require_full_items(const LatentMatrix& zi) {
  if (!zi.is_full()) {
    throw Error(ErrorKind::invalid_argument, "item scoring needs the full item table");
  }
}

std::vector<std::uint32_t> all_ids(std::size_t n) {
  std::vector<std::uint32_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0u);
  return ids;
}

}  // namespace

std::vector<double> next_basket_scores(std::uint32_t user, const LatentMatrix& zu,
                                       const LatentMatrix& zi) {
  require_full_items(zi);
  const auto u = zu.at(user);
  std::vector<double> scores(zi.rows());
  for (std::size_t i = 0; i < zi.rows(); ++i) scores[i] = dot(u, zi.z().row(i));
  return scores;
}

std::vector<double> within_basket_scores(std::uint32_t user, std::span<const std::uint32_t> basket,
                                         const LatentMatrix& zu, const LatentMatrix& zi) {
  require_full_items(zi);
  const auto u = zu.at(user);
  std::vector<double> context(u.begin(), u.end());
  for (std::uint32_t item : basket) axpy(1.0, zi.at(item), context);
  std::vector<double> scores(zi.rows());
  for (std::size_t i = 0; i < zi.rows(); ++i) scores[i] = dot(context, zi.z().row(i));
  for (std::uint32_t item : basket) scores[item] = -std::numeric_limits<double>::infinity();
  return scores;
}

std::vector<ScoredItem> top_k(std::span<const double> scores, std::size_t k) {
  std::vector<std::uint32_t> candidates;
  candidates.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) {
      throw Error(ErrorKind::numerical, "NaN score for item " + std::to_string(i));
    }
    if (scores[i] != -std::numeric_limits<double>::infinity()) {
      candidates.push_back(static_cast<std::uint32_t>(i));
    }
  }
  const std::size_t n = std::min(k, candidates.size());
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n),
                    candidates.end(), better);
  std::vector<ScoredItem> out;
  out.reserve(n);
  for (std::size_t r = 0; r < n; ++r) out.push_back({candidates[r], scores[candidates[r]]});
  return out;
}

RankedResult recommend(std::uint32_t user, const LatentMatrix& zu, const LatentMatrix& zi,
                       std::size_t k) {
  const auto scores = next_basket_scores(user, zu, zi);
  return {user, top_k(scores, k)};
}

PointEmbeddings point_embeddings(const EncoderParams& params, ScoringMode mode, Rng* rng) {
  const auto users = all_ids(params.n_users());
  const auto items = all_ids(params.n_items());
  GaussianEmbeddings gu = encode(params, Side::user, users);
  GaussianEmbeddings gi = encode(params, Side::item, items);
  if (mode == ScoringMode::mean || params.mode == Mode::deterministic) {
    return {LatentMatrix(users, std::move(gu.mu)), LatentMatrix(items, std::move(gi.mu))};
  }
  if (!rng) throw Error(ErrorKind::invalid_argument, "sampled scoring needs a random source");
  Matrix nu(gu.mu.rows, gu.mu.cols), ni(gi.mu.rows, gi.mu.cols);
  for (double& v : nu.values) v = rng->normal();
  for (double& v : ni.values) v = rng->normal();
  return {reparameterize(gu, nu), reparameterize(gi, ni)};
}

void write_recommendations(std::ostream& out, std::span<const RankedResult> results) {
  char buf[32];
  for (const auto& r : results) {
    for (std::size_t rank = 0; rank < r.items.size(); ++rank) {
      std::snprintf(buf, sizeof(buf), "%.17g", r.items[rank].score);
      out << r.user << '\t' << rank + 1 << '\t' << r.items[rank].item << '\t' << buf << '\n';
    }
  }
}

}  // namespace vbcar
