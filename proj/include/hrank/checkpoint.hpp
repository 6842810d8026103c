#ifndef HRANK_CHECKPOINT_HPP_
#define HRANK_CHECKPOINT_HPP_

#include <string>

#include "hrank/backbone.hpp"

namespace hrank {

// Versioned binary container of named parameter arrays. Layout (little
// endian): magic "HRCK", u32 version, u64 entry count, then per entry
// u32 name length, name bytes, u32 rows, u32 cols, rows*cols f64 values.
void save_checkpoint(const NamedTensors& params, const std::string& path);

// Restores values into matching names; name or shape mismatches are errors.
void load_checkpoint(NamedTensors params, const std::string& path);

}  // namespace hrank

#endif  // HRANK_CHECKPOINT_HPP_
