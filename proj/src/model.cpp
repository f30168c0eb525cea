#include "vbcar/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vbcar/error.hpp"

namespace vbcar {

std::string_view to_string(Mode mode) {
  return mode == Mode::variational ? "variational" : "deterministic";
}

Mode parse_mode(std::string_view text) {
  if (text == "variational") return Mode::variational;
  if (text == "deterministic") return Mode::deterministic;
  throw Error(ErrorKind::invalid_argument, "unknown mode '" + std::string(text) + "'");
}

EncoderParams EncoderParams::zeros(std::size_t n_users, std::size_t n_items, std::size_t dim,
                                   std::size_t hidden, Mode mode) {
  if (dim == 0 || hidden == 0) {
    throw Error(ErrorKind::invalid_argument, "latent and hidden sizes must be positive");
  }
  auto make = [&](std::size_t entities) {
    Encoder e;
    e.w1 = Matrix(entities, hidden);
    e.b1.assign(hidden, 0.0);
    e.w2 = Matrix(hidden, 2 * dim);
    e.b2.assign(2 * dim, 0.0);
    return e;
  };
  EncoderParams p;
  p.user = make(n_users);
  p.item = make(n_items);
  p.mode = mode;
  p.dim = dim;
  p.hidden = hidden;
  return p;
}

std::array<std::span<double>, 8> EncoderParams::tensors() {
  return {std::span<double>(user.w1.values), std::span<double>(user.b1),
          std::span<double>(user.w2.values), std::span<double>(user.b2),
          std::span<double>(item.w1.values), std::span<double>(item.b1),
          std::span<double>(item.w2.values), std::span<double>(item.b2)};
}

std::array<std::span<const double>, 8> EncoderParams::tensors() const {
  return {std::span<const double>(user.w1.values), std::span<const double>(user.b1),
          std::span<const double>(user.w2.values), std::span<const double>(user.b2),
          std::span<const double>(item.w1.values), std::span<const double>(item.b1),
          std::span<const double>(item.w2.values), std::span<const double>(item.b2)};
}

bool EncoderParams::same_shape(const EncoderParams& other) const {
  auto mine = tensors();
  auto theirs = other.tensors();
  for (std::size_t k = 0; k < mine.size(); ++k) {
    if (mine[k].size() != theirs[k].size()) return false;
  }
  return dim == other.dim && hidden == other.hidden && user.w1.same_shape(other.user.w1) &&
         item.w1.same_shape(other.item.w1);
}

std::uint64_t EncoderParams::digest() const {
  std::uint64_t h = fnv1a64(std::span<const unsigned char>());
  for (auto t : tensors()) h = fnv1a64(t, h);
  return h;
}

LatentMatrix::LatentMatrix(std::vector<std::uint32_t> ids, Matrix z)
    : ids_(std::move(ids)), z_(std::move(z)) {
  if (ids_.size() != z_.rows) {
    throw Error(ErrorKind::invalid_argument, "latent ids and rows disagree");
  }
  full_ = true;
  sorted_.reserve(ids_.size());
  for (std::size_t r = 0; r < ids_.size(); ++r) {
    if (ids_[r] != r) full_ = false;
    sorted_.emplace_back(ids_[r], static_cast<std::uint32_t>(r));
  }
  std::sort(sorted_.begin(), sorted_.end());
}

LatentMatrix LatentMatrix::full(Matrix z) {
  std::vector<std::uint32_t> ids(z.rows);
  for (std::size_t r = 0; r < ids.size(); ++r) ids[r] = static_cast<std::uint32_t>(r);
  return LatentMatrix(std::move(ids), std::move(z));
}

std::optional<std::size_t> LatentMatrix::find(std::uint32_t id) const {
  if (full_) {
    if (id < z_.rows) return id;
    return std::nullopt;
  }
  auto it = std::lower_bound(sorted_.begin(), sorted_.end(), std::make_pair(id, 0u));
  if (it == sorted_.end() || it->first != id) return std::nullopt;
  return it->second;
}

std::span<const double> LatentMatrix::at(std::uint32_t id) const {
  auto row = find(id);
  if (!row) {
    throw Error(ErrorKind::invalid_argument, "no latent row for entity " + std::to_string(id));
  }
  return z_.row(*row);
}

EncodedRows encode_with_hidden(const EncoderParams& params, Side side,
                               std::span<const std::uint32_t> indices) {
  const Encoder& enc = params.encoder(side);
  const std::size_t dim = params.dim;
  const std::size_t hidden = params.hidden;
  EncodedRows out;
  out.gaussian.ids.assign(indices.begin(), indices.end());
  out.gaussian.mu = Matrix(indices.size(), dim);
  out.gaussian.log_var = Matrix(indices.size(), dim);
  out.hidden = Matrix(indices.size(), hidden);

  std::vector<double> head(2 * dim);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::uint32_t id = indices[r];
    if (id >= enc.w1.rows) {
      throw Error(ErrorKind::invalid_argument, std::string(side == Side::user ? "user" : "item") +
                                                   " index " + std::to_string(id) +
                                                   " out of range");
    }
    auto h = out.hidden.row(r);
    auto w1_row = enc.w1.row(id);
    for (std::size_t k = 0; k < hidden; ++k) h[k] = std::tanh(w1_row[k] + enc.b1[k]);

    std::copy(enc.b2.begin(), enc.b2.end(), head.begin());
    for (std::size_t k = 0; k < hidden; ++k) axpy(h[k], enc.w2.row(k), head);
    auto mu = out.gaussian.mu.row(r);
    auto lv = out.gaussian.log_var.row(r);
    std::copy(head.begin(), head.begin() + dim, mu.begin());
    std::copy(head.begin() + dim, head.end(), lv.begin());
  }
  return out;
}

GaussianEmbeddings encode(const EncoderParams& params, Side side,
                          std::span<const std::uint32_t> indices) {
  return encode_with_hidden(params, side, indices).gaussian;
}

LatentMatrix reparameterize(const GaussianEmbeddings& g, const Matrix& noise, Mode mode) {
  if (!noise.same_shape(g.mu)) {
    throw Error(ErrorKind::invalid_argument, "noise shape does not match the embeddings");
  }
  Matrix z = g.mu;
  if (mode == Mode::variational) {
    for (std::size_t k = 0; k < z.values.size(); ++k) {
      z.values[k] += std::exp(0.5 * g.log_var.values[k]) * noise.values[k];
    }
  }
  return LatentMatrix(g.ids, std::move(z));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

std::array<double, 3> triple_logits(std::span<const double> zu, std::span<const double> zi,
                                    std::span<const double> zj) {
  const double ij = dot(zi, zj);
  const double iu = dot(zi, zu);
  const double ju = dot(zj, zu);
  return {ij + iu, ij + ju, iu + ju};
}

TripleLogProb triple_log_sigma(std::span<const double> zu, std::span<const double> zi,
                               std::span<const double> zj) {
  TripleLogProb out;
  for (double x : triple_logits(zu, zi, zj)) {
    out.log_pos += log_sigmoid(x);
    out.log_neg += log_sigmoid(-x);
  }
  return out;
}

double log_likelihood(const LatentMatrix& zu, const LatentMatrix& zi, const TripleBatch& batch) {
  double total = 0.0;
  for (const auto& p : batch.positives) {
    const auto& t = p.triple;
    total += p.count * triple_log_sigma(zu.at(t.user), zi.at(t.item_a), zi.at(t.item_b)).log_pos;
  }
  for (const auto& t : batch.negatives) {
    total += triple_log_sigma(zu.at(t.user), zi.at(t.item_a), zi.at(t.item_b)).log_neg;
  }
  return total;
}

double kl_to_prior(const GaussianEmbeddings& g, const PriorConfig& prior) {
  if (!(prior.alpha > 0.0)) throw Error(ErrorKind::invalid_argument, "alpha must be positive");
  const double log_alpha = std::log(prior.alpha);
  const double inv_two_alpha_sq = 0.5 / (prior.alpha * prior.alpha);
  double total = 0.0;
  for (std::size_t k = 0; k < g.mu.values.size(); ++k) {
    const double mu = g.mu.values[k];
    const double lv = g.log_var.values[k];
    // ln(alpha / sigma) + sigma^2 / (2 alpha^2) + mu^2 / (2 alpha^2) - 1/2
    total += (log_alpha - 0.5 * lv) + 0.5 * std::exp(lv - 2.0 * log_alpha) +
             mu * mu * inv_two_alpha_sq - 0.5;
  }
  return total;
}

BatchEntities batch_entities(const TripleBatch& batch) {
  BatchEntities e;
  auto add = [&](const Triple& t) {
    e.users.push_back(t.user);
    e.items.push_back(t.item_a);
    e.items.push_back(t.item_b);
  };
  for (const auto& p : batch.positives) add(p.triple);
  for (const auto& t : batch.negatives) add(t);
  for (auto* v : {&e.users, &e.items}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  return e;
}

BatchNoise draw_noise(const BatchEntities& entities, std::size_t dim, Rng& rng) {
  BatchNoise noise{Matrix(entities.users.size(), dim), Matrix(entities.items.size(), dim)};
  for (double& v : noise.user.values) v = rng.normal();
  for (double& v : noise.item.values) v = rng.normal();
  return noise;
}

ElboTerms elbo(const EncoderParams& params, const TripleBatch& batch, const BatchNoise& noise,
               const PriorConfig& prior, double kl_scale) {
  if (!(kl_scale >= 0.0 && kl_scale <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, "kl_scale must lie in [0, 1]");
  }
  const BatchEntities entities = batch_entities(batch);
  const GaussianEmbeddings gu = encode(params, Side::user, entities.users);
  const GaussianEmbeddings gi = encode(params, Side::item, entities.items);
  const LatentMatrix zu = reparameterize(gu, noise.user, params.mode);
  const LatentMatrix zi = reparameterize(gi, noise.item, params.mode);

  ElboTerms terms;
  terms.recon = log_likelihood(zu, zi, batch);
  if (params.mode == Mode::variational && kl_scale > 0.0) {
    terms.kl = kl_scale * (kl_to_prior(gu, prior) + kl_to_prior(gi, prior));
  }
  terms.elbo = terms.recon - terms.kl;
  return terms;
}

}  // namespace vbcar
