#pragma once

#include <map>
#include <string>

#include "core/param_set.hpp"

namespace pcrec {

// Checkpoints are a pair of files: `<path>` is a text manifest listing one
// line per tensor (name, role, kind, shape, byte offset, element count) plus
// `meta` key/value lines for seeds and hyperparameters, and `<path minus
// .manifest>.bin` holds the tensors as little-endian 32-bit floats in
// manifest order. Round-trips are bit-exact.
void save_checkpoint(const std::string& manifest_path, const ParamSet<float>& params,
                     const std::map<std::string, std::string>& meta);

ParamSet<float> load_checkpoint(const std::string& manifest_path,
                                std::map<std::string, std::string>* meta_out = nullptr);

}  // namespace pcrec
