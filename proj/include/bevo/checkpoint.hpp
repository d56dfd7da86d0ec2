#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bevo/nn/tensor.hpp"

namespace bevo {

// Flat container of named tensors; the on-disk checkpoint format.
struct NamedTensors {
    std::vector<std::pair<std::string, nn::Tensor>> items;

    const nn::Tensor* find(const std::string& name) const;
};

// Binary layout: magic "BEVOCKPT", u32 version, u64 count, then per tensor:
// u32 name length, name bytes, u32 rank, i64 dims, f64 data. Writes are
// atomic (temp file + rename).
void write_tensor_file(const std::string& path, const NamedTensors& tensors);
NamedTensors read_tensor_file(const std::string& path);

}  // namespace bevo
