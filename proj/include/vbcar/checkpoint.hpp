#pragma once

#include <iosfwd>

#include "vbcar/corpus.hpp"
#include "vbcar/model.hpp"

namespace vbcar {

/// Text checkpoint: a version header, mode and sizes, then every tensor in
/// EncoderParams::tensors() order with round-trip precision.
void save_checkpoint(std::ostream& out, const EncoderParams& params);
EncoderParams load_checkpoint(std::istream& in);

/// "kind<TAB>external_id<TAB>mu_1..mu_D<TAB>var_1..var_D" rows for every
/// user then every item. Variances are omitted in deterministic mode.
void write_embeddings(std::ostream& out, const EncoderParams& params, const IdMaps& maps);

}  // namespace vbcar
