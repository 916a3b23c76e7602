#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "simq/tape.hpp"

namespace simq {

// Self-describing parameter snapshot: metadata tags (architecture, pooling,
// flags, dimensions) plus named tensors. Serialized as text with hexfloat
// values, so save/load round-trips are value-exact at 64-bit.
struct Checkpoint {
    std::map<std::string, std::string> meta;
    std::vector<std::pair<std::string, Tensor>> params;

    const Tensor* find(const std::string& name) const;
    std::string meta_or(const std::string& key, const std::string& fallback) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Snapshot every parameter in the store, in registration order.
Checkpoint snapshot(const ParamStore& params,
                    std::map<std::string, std::string> meta);

// Copy checkpoint tensors into an already-built store. Names and shapes must
// match for every store entry; extra checkpoint tensors are ignored.
void restore(const Checkpoint& ckpt, ParamStore& params);

}  // namespace simq
