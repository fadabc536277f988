#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace quanta {

// Counter-based PRNG (Philox4x64-10). Every consumer of randomness owns an
// independent stream addressed by (key0, key1); values depend only on the key
// and the counter, never on call order elsewhere in the process, so parallel
// jobs can draw without coordination.
std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> counter,
                                        std::array<std::uint64_t, 2> key);

// FNV-1a, used to turn stream names into key material.
std::uint64_t fnv1a64(std::string_view bytes);

// Expands one master seed into a named sub-seed ("data", "init", ...) with a
// keyed Philox evaluation. Distinct names give independent streams.
std::uint64_t derive_seed(std::uint64_t master_seed, std::string_view purpose,
                          std::uint64_t index = 0);

class RngStream {
 public:
  RngStream(std::uint64_t key0, std::uint64_t key1) : key_{key0, key1} {}

  std::uint64_t next_u64();
  // Uniform on [0, 1), 53-bit resolution.
  double next_double();
  // Unbiased uniform integer on [0, bound). bound must be >= 1.
  std::uint64_t next_below(std::uint64_t bound);
  // Standard normal via Box-Muller (second value cached).
  double next_normal();

  void fill_normal(std::span<double> out);

 private:
  std::array<std::uint64_t, 2> key_;
  std::array<std::uint64_t, 4> counter_{0, 0, 0, 0};
  std::array<std::uint64_t, 4> buffer_{};
  int buffered_ = 0;  // values remaining in buffer_
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace quanta
