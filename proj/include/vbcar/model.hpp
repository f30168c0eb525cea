#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "vbcar/matrix.hpp"
#include "vbcar/rng.hpp"
#include "vbcar/sampler.hpp"

namespace vbcar {

/// `variational` learns Gaussian posteriors; `deterministic` uses the mean
/// head as point embeddings (the Triple2vec-style baseline).
enum class Mode { variational, deterministic };
enum class Side { user, item };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

/// Two-layer tanh network over one-hot identity codes. W1 * onehot is a row
/// lookup, so `w1` has one row per entity.
struct Encoder {
  Matrix w1;               // entities x H
  std::vector<double> b1;  // H
  Matrix w2;               // H x 2D: columns [0, D) -> mu, [D, 2D) -> log variance
  std::vector<double> b2;  // 2D

  bool operator==(const Encoder&) const = default;
};

struct EncoderParams {
  Encoder user;
  Encoder item;
  Mode mode = Mode::variational;
  std::size_t dim = 0;
  std::size_t hidden = 0;

  static EncoderParams zeros(std::size_t n_users, std::size_t n_items, std::size_t dim,
                             std::size_t hidden, Mode mode);

  std::size_t n_users() const { return user.w1.rows; }
  std::size_t n_items() const { return item.w1.rows; }
  std::size_t n_entities(Side side) const { return side == Side::user ? n_users() : n_items(); }

  const Encoder& encoder(Side side) const { return side == Side::user ? user : item; }
  Encoder& encoder(Side side) { return side == Side::user ? user : item; }

  /// Every trainable tensor, in a fixed order.
  std::array<std::span<double>, 8> tensors();
  std::array<std::span<const double>, 8> tensors() const;

  bool same_shape(const EncoderParams& other) const;
  std::uint64_t digest() const;

  bool operator==(const EncoderParams&) const = default;
};

/// Per-entity diagonal Gaussian; row r describes entity ids[r].
struct GaussianEmbeddings {
  std::vector<std::uint32_t> ids;
  Matrix mu;
  Matrix log_var;
};

/// Embedding rows with an id lookup.
class LatentMatrix {
 public:
  LatentMatrix() = default;
  LatentMatrix(std::vector<std::uint32_t> ids, Matrix z);

  /// Rows are entities 0..rows-1.
  static LatentMatrix full(Matrix z);

  const std::vector<std::uint32_t>& ids() const { return ids_; }
  const Matrix& z() const { return z_; }
  std::size_t rows() const { return z_.rows; }
  std::size_t dim() const { return z_.cols; }
  bool is_full() const { return full_; }

  std::optional<std::size_t> find(std::uint32_t id) const;
  /// Throws when `id` has no row.
  std::span<const double> at(std::uint32_t id) const;

 private:
  std::vector<std::uint32_t> ids_;
  Matrix z_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> sorted_;
  bool full_ = false;
};

struct PriorConfig {
  double alpha = 1.0;  // prior standard deviation
};

/// Forward pass that also keeps the tanh activations for backpropagation.
struct EncodedRows {
  GaussianEmbeddings gaussian;
  Matrix hidden;
};

EncodedRows encode_with_hidden(const EncoderParams& params, Side side,
                               std::span<const std::uint32_t> indices);
GaussianEmbeddings encode(const EncoderParams& params, Side side,
                          std::span<const std::uint32_t> indices);

/// z = mu + exp(log_var / 2) * noise; deterministic mode returns mu.
LatentMatrix reparameterize(const GaussianEmbeddings& g, const Matrix& noise,
                            Mode mode = Mode::variational);

double sigmoid(double x);
/// log(sigmoid(x)) without overflow for large |x|.
double log_sigmoid(double x);

/// Logits of the three conditionals: item_a | (item_b, user),
/// item_b | (item_a, user) and user | (item_a, item_b).
std::array<double, 3> triple_logits(std::span<const double> zu, std::span<const double> zi,
                                    std::span<const double> zj);

struct TripleLogProb {
  double log_pos = 0.0;  // sum of log sigmoid over the three logits
  double log_neg = 0.0;  // sum of log(1 - sigmoid)
};

TripleLogProb triple_log_sigma(std::span<const double> zu, std::span<const double> zi,
                               std::span<const double> zj);

/// Sum of n+ * log_pos over positives plus log_neg over negatives.
double log_likelihood(const LatentMatrix& zu, const LatentMatrix& zi, const TripleBatch& batch);

/// KL(q || N(0, alpha^2 I)) summed over entities and dimensions.
double kl_to_prior(const GaussianEmbeddings& g, const PriorConfig& prior);

/// Distinct users and items referenced by a batch, ascending.
struct BatchEntities {
  std::vector<std::uint32_t> users;
  std::vector<std::uint32_t> items;

  std::size_t size() const { return users.size() + items.size(); }
};

BatchEntities batch_entities(const TripleBatch& batch);

/// One standard-normal row per batch entity, aligned with BatchEntities.
struct BatchNoise {
  Matrix user;
  Matrix item;
};

BatchNoise draw_noise(const BatchEntities& entities, std::size_t dim, Rng& rng);

struct ElboTerms {
  double elbo = 0.0;
  double recon = 0.0;
  double kl = 0.0;
};

/// Single-sample ELBO over the entities of `batch`. KL is multiplied by
/// `kl_scale`; deterministic mode drops it.
ElboTerms elbo(const EncoderParams& params, const TripleBatch& batch, const BatchNoise& noise,
               const PriorConfig& prior, double kl_scale);

}  // namespace vbcar
