#pragma once

// Head checkpoints.
//
// Layout (all little-endian):
//   offset 0   u32 magic 0x484D5953 ("SYMH")
//   offset 4   u32 kind  (1 symmetric, 2 fc, 3 arcface, 4 sphereface)
//   offset 8   u32 n     (classes)
//   offset 12  u32 d     (input dimension)
//   offset 16  f64[]     parameters in ClassifierHead::parameters() order,
//                        matrices row-major
// Hyperparameters (sigma, margin) are configuration and are not stored.

#include <cstdint>
#include <iosfwd>
#include <memory>

#include "symfs/head.hpp"

namespace symfs {

inline constexpr std::uint32_t kHeadMagic = 0x484D5953;

void save_head(std::ostream& out, const ClassifierHead& head);

/// Reads a checkpoint; `spec.kind` must match the stored kind.
/// Throws FormatError on bad magic, kind mismatch or truncation.
std::unique_ptr<ClassifierHead> load_head(std::istream& in, const HeadSpec& spec);

}  // namespace symfs
