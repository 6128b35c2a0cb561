// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace motiac::io {

/// Shortest decimal text that parses back to the same double. Infinities
/// are written as "inf" / "-inf".
std::string FormatDouble(double value);

double ParseDouble(std::string_view text);
std::int64_t ParseInt(std::string_view text);

std::vector<std::string> Split(std::string_view line, char delimiter);
std::string_view Trim(std::string_view text);

/// Writes to a sibling temp file and renames it over `path`.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view contents);
std::string ReadFile(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t Fnv1a(std::string_view data);

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t Mix(std::uint64_t x);
std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                         std::uint64_t c = 0);

/// SplitMix64 as a UniformRandomBitGenerator. Seeding is free, which
/// matters for the per-ad, per-session streams in the simulator
/// (std::mt19937_64 spends ~0.5 us filling its state on every seed).
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() {
    const auto out = Mix(state_);  // Mix adds the golden-ratio increment
    state_ += 0x9E3779B97F4A7C15ULL;
    return out;
  }

 private:
  std::uint64_t state_;
};

}  // namespace motiac::io
