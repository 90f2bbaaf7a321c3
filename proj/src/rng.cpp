#include "placebo/rng.hpp"

#include <cmath>

#include "placebo/errors.hpp"
#include "placebo/stats.hpp"

namespace placebo {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline std::array<std::uint32_t, 4> round_once(
    const std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
  const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const auto lo0 = static_cast<std::uint32_t>(p0);
  const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const auto lo1 = static_cast<std::uint32_t>(p1);
  return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) {
  for (int r = 0; r < 10; ++r) {
    counter = round_once(counter, key);
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return counter;
}

Rng::Rng(std::uint64_t seed, StreamPurpose purpose, std::uint32_t context,
         std::uint32_t stream)
    : key_{static_cast<std::uint32_t>(seed),
           static_cast<std::uint32_t>(seed >> 32)},
      stream_(stream),
      tag_word_((context << 8) | (static_cast<std::uint32_t>(purpose) & 0xFFu)) {
  if (context >= (1u << 24)) {
    throw DataError(errc::invalid_argument, "rng context exceeds 24 bits");
  }
}

void Rng::refill() {
  const std::array<std::uint32_t, 4> counter = {
      static_cast<std::uint32_t>(draw_counter_),
      static_cast<std::uint32_t>(draw_counter_ >> 32), stream_, tag_word_};
  block_ = philox4x32_10(counter, key_);
  ++draw_counter_;
  block_pos_ = 0;
}

std::uint32_t Rng::next_u32() {
  if (block_pos_ >= 4) refill();
  return block_[static_cast<std::size_t>(block_pos_++)];
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t lo = next_u32();
  const std::uint64_t hi = next_u32();
  return (hi << 32) | lo;
}

double Rng::next_double() {
  const std::uint64_t bits = next_u64() >> 11;  // top 53 bits
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double Rng::next_normal() { return stats::inv_normal_cdf(next_double()); }

double Rng::next_normal(double mu, double sd) { return mu + sd * next_normal(); }

bool Rng::next_bernoulli(double p) { return next_double() < p; }

std::uint32_t Rng::next_below(std::uint32_t bound) {
  if (bound == 0) {
    throw DataError(errc::invalid_argument, "next_below: bound must be positive");
  }
  const std::uint32_t limit = 0xFFFFFFFFu - (0xFFFFFFFFu % bound);
  for (;;) {
    const std::uint32_t v = next_u32();
    if (v < limit) return v % bound;
  }
}

}  // namespace placebo
