//
// HBGSA - hydrogen-bond graph affinity toolkit
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "hbgsa/nn/param_store.hpp"

namespace hbgsa::nn {

// Binary parameter container, all integers little-endian u32:
//
//   "HBGS" | version | param_count
//   per parameter: name_len | name (utf-8) | rank | dims[rank] |
//                  float32 values (little-endian, row-major)
//
// Parameters are written in store order. Values are always stored as
// float32; double stores are narrowed on write.
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <class T>
void write_checkpoint(std::ostream &os, const ParamStore<T> &params);
ParamStore<float> read_checkpoint(std::istream &is);

template <class T>
void save_checkpoint(const std::filesystem::path &path,
                     const ParamStore<T> &params);
ParamStore<float> load_checkpoint(const std::filesystem::path &path);

}  // namespace hbgsa::nn
