#include "vbcar/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "vbcar/error.hpp"

namespace vbcar {
namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Accumulates d(-ELBO)/d(head) for one side into the encoder gradients.
void backprop_encoder(const Encoder& enc, const EncodedRows& rows, const Matrix& dz,
                      const Matrix& noise, Mode mode, const PriorConfig& prior, double kl_scale,
                      Encoder& grad) {
  const std::size_t dim = rows.gaussian.mu.cols;
  const std::size_t hidden = rows.hidden.cols;
  const double inv_alpha_sq = 1.0 / (prior.alpha * prior.alpha);
  const bool with_kl = mode == Mode::variational && kl_scale > 0.0;

  std::vector<double> dhead(2 * dim);
  std::vector<double> dpre(hidden);
  for (std::size_t r = 0; r < rows.gaussian.ids.size(); ++r) {
    auto mu = rows.gaussian.mu.row(r);
    auto lv = rows.gaussian.log_var.row(r);
    auto dz_row = dz.row(r);
    for (std::size_t d = 0; d < dim; ++d) {
      double dmu = dz_row[d];
      double dlv = 0.0;
      if (mode == Mode::variational) {
        // dz/dlog_var = sigma * eps / 2
        dlv = dz_row[d] * 0.5 * std::exp(0.5 * lv[d]) * noise(r, d);
      }
      if (with_kl) {
        dmu += kl_scale * mu[d] * inv_alpha_sq;
        dlv += kl_scale * 0.5 * (std::exp(lv[d]) * inv_alpha_sq - 1.0);
      }
      dhead[d] = dmu;
      dhead[dim + d] = dlv;
    }

    auto h = rows.hidden.row(r);
    axpy(1.0, dhead, grad.b2);
    for (std::size_t k = 0; k < hidden; ++k) {
      axpy(h[k], dhead, grad.w2.row(k));
      const double dh = dot(enc.w2.row(k), dhead);
      dpre[k] = dh * (1.0 - h[k] * h[k]);
    }
    axpy(1.0, dpre, grad.w1.row(rows.gaussian.ids[r]));
    axpy(1.0, dpre, grad.b1);
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error(ErrorKind::invalid_argument, "batch_size must be at least 1");
  if (!(rms_decay > 0.0 && rms_decay < 1.0)) {
    throw Error(ErrorKind::invalid_argument, "rms_decay must lie in (0, 1)");
  }
  if (!(learning_rate > 0.0)) {
    throw Error(ErrorKind::invalid_argument, "learning_rate must be positive");
  }
  if (!(rms_epsilon > 0.0)) throw Error(ErrorKind::invalid_argument, "rms_epsilon must be positive");
  if (neg_ratio < 1) throw Error(ErrorKind::invalid_argument, "neg_ratio must be at least 1");
  if (dim < 1) throw Error(ErrorKind::invalid_argument, "dim must be at least 1");
  if (!(alpha > 0.0)) throw Error(ErrorKind::invalid_argument, "alpha must be positive");
}

OptimizerState OptimizerState::zeros_like(const EncoderParams& params) {
  return {EncoderParams::zeros(params.n_users(), params.n_items(), params.dim, params.hidden,
                               params.mode)};
}

EncoderParams gradients(const EncoderParams& params, const TripleBatch& batch,
                        const BatchNoise& noise, const PriorConfig& prior, double kl_scale,
                        ElboTerms* terms) {
  if (!(kl_scale >= 0.0 && kl_scale <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, "kl_scale must lie in [0, 1]");
  }
  const BatchEntities entities = batch_entities(batch);
  const EncodedRows users = encode_with_hidden(params, Side::user, entities.users);
  const EncodedRows items = encode_with_hidden(params, Side::item, entities.items);
  const LatentMatrix zu = reparameterize(users.gaussian, noise.user, params.mode);
  const LatentMatrix zi = reparameterize(items.gaussian, noise.item, params.mode);

  Matrix dzu(zu.rows(), params.dim);
  Matrix dzi(zi.rows(), params.dim);
  double recon = 0.0;

  // weight scales d log-likelihood; positive triples use log sigmoid,
  // negatives log(1 - sigmoid).
  auto accumulate = [&](const Triple& t, double weight, bool positive) {
    const std::size_t ru = *zu.find(t.user);
    const std::size_t ri = *zi.find(t.item_a);
    const std::size_t rj = *zi.find(t.item_b);
    const auto u = zu.z().row(ru);
    const auto i = zi.z().row(ri);
    const auto j = zi.z().row(rj);
    const auto logits = triple_logits(u, i, j);
    std::array<double, 3> g{};
    for (std::size_t f = 0; f < 3; ++f) {
      const double x = logits[f];
      if (positive) {
        recon += weight * log_sigmoid(x);
        g[f] = weight * sigmoid(-x);
      } else {
        recon += weight * log_sigmoid(-x);
        g[f] = -weight * sigmoid(x);
      }
    }
    const auto [ga, gb, gc] = g;
    // Loss is -log-likelihood, hence the negative scales.
    auto du = dzu.row(ru);
    axpy(-(ga + gc), i, du);
    axpy(-(gb + gc), j, du);
    auto di = dzi.row(ri);
    axpy(-(ga + gb), j, di);
    axpy(-(ga + gc), u, di);
    auto dj = dzi.row(rj);
    axpy(-(ga + gb), i, dj);
    axpy(-(gb + gc), u, dj);
  };
  for (const auto& p : batch.positives) accumulate(p.triple, static_cast<double>(p.count), true);
  for (const auto& t : batch.negatives) accumulate(t, 1.0, false);

  EncoderParams grad = EncoderParams::zeros(params.n_users(), params.n_items(), params.dim,
                                            params.hidden, params.mode);
  backprop_encoder(params.user, users, dzu, noise.user, params.mode, prior, kl_scale, grad.user);
  backprop_encoder(params.item, items, dzi, noise.item, params.mode, prior, kl_scale, grad.item);

  if (terms) {
    terms->recon = recon;
    terms->kl = 0.0;
    if (params.mode == Mode::variational && kl_scale > 0.0) {
      terms->kl = kl_scale * (kl_to_prior(users.gaussian, prior) + kl_to_prior(items.gaussian, prior));
    }
    terms->elbo = terms->recon - terms->kl;
  }
  return grad;
}

void rmsprop_step(EncoderParams& params, const EncoderParams& grads, OptimizerState& state,
                  const TrainConfig& cfg) {
  if (!params.same_shape(grads) || !params.same_shape(state.accumulators)) {
    throw Error(ErrorKind::invalid_argument, "parameter, gradient and state shapes disagree");
  }
  const auto g_tensors = grads.tensors();
  for (auto g : g_tensors) {
    if (!all_finite(g)) throw Error(ErrorKind::numerical, "non-finite gradient");
  }
  auto p_tensors = params.tensors();
  auto a_tensors = state.accumulators.tensors();
  const double decay = cfg.rms_decay;
  for (std::size_t t = 0; t < p_tensors.size(); ++t) {
    auto p = p_tensors[t];
    auto a = a_tensors[t];
    auto g = g_tensors[t];
    for (std::size_t k = 0; k < p.size(); ++k) {
      a[k] = decay * a[k] + (1.0 - decay) * g[k] * g[k];
      p[k] -= cfg.learning_rate * g[k] / std::sqrt(a[k] + cfg.rms_epsilon);
    }
  }
}

EncoderParams initialize_params(std::size_t n_users, std::size_t n_items, const TrainConfig& cfg,
                                Rng& rng) {
  EncoderParams p = EncoderParams::zeros(n_users, n_items, cfg.dim, cfg.hidden_size(), cfg.mode);
  auto glorot = [&](Matrix& m, std::size_t fan_in, std::size_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (double& v : m.values) v = a * (2.0 * rng.uniform() - 1.0);
  };
  for (Encoder* e : {&p.user, &p.item}) {
    glorot(e->w1, e->w1.rows, p.hidden);
    glorot(e->w2, p.hidden, 2 * p.dim);
    std::fill(e->b2.begin() + static_cast<std::ptrdiff_t>(p.dim), e->b2.end(), -1.0);
  }
  return p;
}

std::string TrainReport::to_json() const {
  nlohmann::ordered_json j;
  j["epochs"] = nlohmann::ordered_json::array();
  for (const auto& e : epochs) {
    j["epochs"].push_back({{"epoch", e.epoch}, {"elbo", e.elbo}, {"recon", e.recon}, {"kl", e.kl}});
  }
  j["params_digest"] = hex64(params_digest);
  return j.dump(2) + "\n";
}

std::string TrainReport::to_csv() const {
  std::ostringstream out;
  out << "epoch,elbo,recon,kl\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << fmt_double(e.elbo) << ',' << fmt_double(e.recon) << ','
        << fmt_double(e.kl) << '\n';
  }
  return out.str();
}

std::string TrainReport::timing_csv() const {
  std::ostringstream out;
  out << "epoch,seconds\n";
  for (const auto& e : epochs) out << e.epoch << ',' << fmt_double(e.seconds) << '\n';
  return out.str();
}

TrainResult train(std::span<const Basket> train_baskets, std::size_t n_users, std::size_t n_items,
                  const TrainConfig& cfg, std::size_t sample_count, const EpochCallback& on_epoch) {
  cfg.validate();
  if (sample_count < 1) {
    throw Error(ErrorKind::invalid_argument, "triples per epoch must be at least 1");
  }
  // Stream 0 seeds initialization, stream 1 the fixed corpus, 2 + e epoch e.
  Rng init_rng(derive_seed(cfg.seed, 0));
  TrainResult result{initialize_params(n_users, n_items, cfg, init_rng), {}};
  EncoderParams& params = result.params;
  if (cfg.epochs == 0) {
    result.report.params_digest = params.digest();
    return result;
  }

  const TripleSampler sampler(train_baskets);
  std::vector<Triple> fixed;
  if (cfg.fixed_corpus) {
    Rng corpus_rng(derive_seed(cfg.seed, 1));
    fixed = sampler.sample(sample_count, corpus_rng);
  }

  OptimizerState state = OptimizerState::zeros_like(params);
  const PriorConfig prior{cfg.alpha};
  const NegativeSampling neg{cfg.neg_ratio, cfg.max_retries};

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(derive_seed(cfg.seed, 2 + epoch));
    std::vector<Triple> positives = cfg.fixed_corpus ? fixed : sampler.sample(sample_count, rng);
    rng.shuffle(std::span<Triple>(positives));
    const std::vector<Triple> negatives = draw_negatives(positives, neg, n_users, n_items, rng);
    const auto epoch_positives = static_cast<double>(positives.size());

    EpochStats stats;
    stats.epoch = epoch + 1;
    std::size_t n_batches = 0;
    for (std::size_t begin = 0; begin < positives.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(positives.size(), begin + cfg.batch_size);
      const TripleBatch batch = make_batch(
          std::span<const Triple>(positives).subspan(begin, end - begin),
          std::span<const Triple>(negatives).subspan(begin * cfg.neg_ratio,
                                                     (end - begin) * cfg.neg_ratio),
          cfg.neg_ratio);
      const BatchEntities entities = batch_entities(batch);
      BatchNoise noise;
      if (cfg.mode == Mode::variational) {
        noise = draw_noise(entities, cfg.dim, rng);
      } else {
        noise = {Matrix(entities.users.size(), cfg.dim), Matrix(entities.items.size(), cfg.dim)};
      }
      const double kl_scale = cfg.kl_scale_mode == KlScaleMode::per_batch
                                  ? static_cast<double>(end - begin) / epoch_positives
                                  : 1.0;
      ElboTerms terms;
      const EncoderParams grads = gradients(params, batch, noise, prior, kl_scale, &terms);
      if (!std::isfinite(terms.elbo)) {
        throw Error(ErrorKind::numerical, "non-finite ELBO at epoch " + std::to_string(epoch + 1) +
                                              ", batch " + std::to_string(n_batches + 1));
      }
      rmsprop_step(params, grads, state, cfg);
      stats.elbo += terms.elbo;
      stats.recon += terms.recon;
      stats.kl += terms.kl;
      ++n_batches;
    }
    stats.elbo /= static_cast<double>(n_batches);
    stats.recon /= static_cast<double>(n_batches);
    stats.kl /= static_cast<double>(n_batches);
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (auto t : params.tensors()) {
      if (!all_finite(t)) {
        throw Error(ErrorKind::numerical,
                    "non-finite parameters after epoch " + std::to_string(epoch + 1));
      }
    }
    result.report.epochs.push_back(stats);
    if (on_epoch) on_epoch(stats, params);
  }
  result.report.params_digest = params.digest();
  return result;
}

TrainResult train(const SplitDataset& data, const IdMaps& maps, const TrainConfig& cfg,
                  std::size_t sample_count, const EpochCallback& on_epoch) {
  const auto baskets = to_baskets(data.train, maps);
  return train(baskets, maps.n_users(), maps.n_items(), cfg, sample_count, on_epoch);
}

}  // namespace vbcar
