#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vbcar/corpus.hpp"
#include "vbcar/model.hpp"
#include "vbcar/sampler.hpp"

namespace vbcar {

enum class KlScaleMode {
  per_batch,  // batch share of the epoch's positives; KL counted once per epoch
  off,        // unscaled KL over the batch entities in every batch
};

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 512;
  double learning_rate = 1e-3;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-8;
  std::uint64_t seed = 0;
  std::size_t neg_ratio = 5;
  std::size_t max_retries = 100;
  KlScaleMode kl_scale_mode = KlScaleMode::per_batch;
  Mode mode = Mode::variational;
  std::size_t dim = 64;
  std::size_t hidden = 0;  // 0 selects 2 * dim
  double alpha = 1.0;
  /// Sample the triple corpus once and reuse it every epoch.
  bool fixed_corpus = false;

  std::size_t hidden_size() const { return hidden == 0 ? 2 * dim : hidden; }
  void validate() const;
};

/// RMSprop running averages of squared gradients, one per parameter.
struct OptimizerState {
  EncoderParams accumulators;

  static OptimizerState zeros_like(const EncoderParams& params);
};

/// Gradient of -ELBO with respect to every parameter, plus the ELBO terms of
/// the same forward pass when `terms` is non-null.
EncoderParams gradients(const EncoderParams& params, const TripleBatch& batch,
                        const BatchNoise& noise, const PriorConfig& prior, double kl_scale,
                        ElboTerms* terms = nullptr);

/// acc <- decay * acc + (1 - decay) * g^2; theta <- theta - lr * g / sqrt(acc + eps).
/// Throws on a non-finite gradient before touching any state.
void rmsprop_step(EncoderParams& params, const EncoderParams& grads, OptimizerState& state,
                  const TrainConfig& cfg);

/// Glorot-uniform weights, zero biases, and -1 on the log-variance output bias.
EncoderParams initialize_params(std::size_t n_users, std::size_t n_items, const TrainConfig& cfg,
                                Rng& rng);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double elbo = 0.0;      // means over the epoch's batches
  double recon = 0.0;
  double kl = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::uint64_t params_digest = 0;

  /// Trajectory and digest; wall-clock times are left out so identical runs
  /// serialize identically.
  std::string to_json() const;
  /// "epoch,elbo,recon,kl"
  std::string to_csv() const;
  /// "epoch,seconds"
  std::string timing_csv() const;
};

struct TrainResult {
  EncoderParams params;
  TrainReport report;
};

using EpochCallback = std::function<void(const EpochStats&, const EncoderParams&)>;

TrainResult train(std::span<const Basket> train_baskets, std::size_t n_users, std::size_t n_items,
                  const TrainConfig& cfg, std::size_t sample_count,
                  const EpochCallback& on_epoch = {});

TrainResult train(const SplitDataset& data, const IdMaps& maps, const TrainConfig& cfg,
                  std::size_t sample_count, const EpochCallback& on_epoch = {});

}  // namespace vbcar
