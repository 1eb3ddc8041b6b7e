#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace billiards {

// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
// as easy as 1, 2, 3"). Pure function of (counter, key).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

// FNV-1a, used to turn purpose tags into stream identifiers.
std::uint64_t hash_tag(std::string_view tag) noexcept;

// Counter-based random stream. The stream is keyed by the run seed and
// addressed by (replica, purpose); two streams with different addresses
// never share a counter block, so replicas can be generated independently
// and in any order.
//
// Satisfies UniformRandomBitGenerator, so it also plugs into <random>.
class Stream {
 public:
  using result_type = std::uint64_t;

  Stream(std::uint64_t seed, std::uint64_t replica, std::string_view purpose);
  Stream(std::uint64_t seed, std::uint64_t replica, std::uint64_t purpose);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on the open interval (0, 1).
  double uniform_pos();
  // Mean-one exponential.
  double exponential();
  double normal();

  // Independent child stream; deterministic in (parent address, index).
  Stream split(std::uint64_t index) const;

 private:
  void refill();

  PhiloxKey key_{};
  std::uint64_t replica_ = 0;
  std::uint64_t purpose_ = 0;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

}  // namespace billiards
