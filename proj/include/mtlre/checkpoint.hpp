#pragma once

#include <span>
#include <string>
#include <vector>

#include "mtlre/tensor.hpp"

namespace mtlre {

// Flat binary container for named parameters.  Layout (all integers and
// doubles little-endian):
//   magic "MTLRECKP" | u32 version | u64 parameter count
//   per parameter: u32 name length | name bytes | u32 rank |
//                  u64 extent per axis | f64 values (row-major)
// Round trips are byte-exact: doubles travel as raw IEEE-754 bit patterns.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct SavedParameter {
    std::string name;
    Shape shape;
    Vec value;
};

void save_checkpoint(const std::string& path, std::span<const Parameter* const> params);
std::vector<SavedParameter> load_checkpoint(const std::string& path);

// Overwrites each parameter's values with its checkpoint entry, matched by
// name.  Missing, extra, or shape-mismatched entries raise errors naming
// the offending parameter.
void load_checkpoint_into(const std::string& path, std::span<Parameter* const> params);

}  // namespace mtlre
