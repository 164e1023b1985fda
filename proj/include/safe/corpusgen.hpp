#pragma once

#include <cstdint>

#include "safe/dataset.hpp"

namespace safe::corpus {

// Template families used by the generator. Family 4 is straight-line code
// (no branches or loops), which some data-flow checks rely on.
inline constexpr int kFamilyLoopBound = 1;
inline constexpr int kFamilyBranchUse = 2;
inline constexpr int kFamilyResourceLeak = 3;
inline constexpr int kFamilyIndexClamp = 4;

/// Family tag encoded in a sample id ("s000123-f2" -> 2), 0 if absent.
int family_of(const std::string& sample_id);

/// Deterministic synthetic corpus: n mini-C functions from four templated
/// families, round(n*vulnerable_ratio) of them vulnerable, split 70/15/15 by
/// a seeded shuffle. Identifiers are randomized independently of the label;
/// the label is decided only by the planted pattern (missing bounds guard,
/// unguarded branch use, missing release on early return, unclamped index).
data::Dataset generate(std::uint64_t seed, int n, double vulnerable_ratio);

}  // namespace safe::corpus
