#include "vbcar/checkpoint.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "vbcar/error.hpp"

namespace vbcar {
namespace {

constexpr const char* kMagic = "vbcar-checkpoint";
constexpr int kVersion = 1;

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_checkpoint(std::ostream& out, const EncoderParams& params) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "mode " << to_string(params.mode) << '\n';
  out << "sizes " << params.n_users() << ' ' << params.n_items() << ' ' << params.dim << ' '
      << params.hidden << '\n';
  for (auto tensor : params.tensors()) {
    out << tensor.size();
    for (double v : tensor) out << ' ' << fmt_double(v);
    out << '\n';
  }
}

EncoderParams load_checkpoint(std::istream& in) {
  std::string magic, key, mode_text;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic) {
    throw Error(ErrorKind::parse, "not a vbcar checkpoint");
  }
  if (version != kVersion) {
    throw Error(ErrorKind::parse, "unsupported checkpoint version " + std::to_string(version));
  }
  std::size_t n_users = 0, n_items = 0, dim = 0, hidden = 0;
  if (!(in >> key >> mode_text) || key != "mode") throw Error(ErrorKind::parse, "checkpoint: missing mode");
  if (!(in >> key >> n_users >> n_items >> dim >> hidden) || key != "sizes") {
    throw Error(ErrorKind::parse, "checkpoint: missing sizes");
  }
  EncoderParams params = EncoderParams::zeros(n_users, n_items, dim, hidden, parse_mode(mode_text));
  for (auto tensor : params.tensors()) {
    std::size_t n = 0;
    if (!(in >> n) || n != tensor.size()) throw Error(ErrorKind::parse, "checkpoint: tensor size mismatch");
    std::string token;
    for (double& v : tensor) {
      // strtod accepts the inf/nan spellings that operator>> rejects.
      if (!(in >> token)) throw Error(ErrorKind::parse, "checkpoint: truncated tensor");
      char* end = nullptr;
      v = std::strtod(token.c_str(), &end);
      if (end != token.c_str() + token.size()) {
        throw Error(ErrorKind::parse, "checkpoint: bad number '" + token + "'");
      }
    }
  }
  return params;
}

void write_embeddings(std::ostream& out, const EncoderParams& params, const IdMaps& maps) {
  if (maps.n_users() != params.n_users() || maps.n_items() != params.n_items()) {
    throw Error(ErrorKind::invalid_argument, "id maps do not match the checkpoint sizes");
  }
  auto emit = [&](Side side, const char* kind) {
    const std::size_t n = params.n_entities(side);
    std::vector<std::uint32_t> ids(n);
    for (std::size_t k = 0; k < n; ++k) ids[k] = static_cast<std::uint32_t>(k);
    const GaussianEmbeddings g = encode(params, side, ids);
    for (std::size_t r = 0; r < n; ++r) {
      out << kind << '\t'
          << (side == Side::user ? maps.user_id(ids[r]) : maps.item_id(ids[r]));
      for (double v : g.mu.row(r)) out << '\t' << fmt_double(v);
      if (params.mode == Mode::variational) {
        for (double v : g.log_var.row(r)) out << '\t' << fmt_double(std::exp(v));
      }
      out << '\n';
    }
  };
  emit(Side::user, "user");
  emit(Side::item, "item");
}

}  // namespace vbcar
