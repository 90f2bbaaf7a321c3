#pragma once
// Counter-based random streams (Philox4x32-10).
//
// Every random draw in this project is addressed by
//   (seed, purpose tag, context, stream, draw counter)
// so results never depend on scheduling or thread count. The mapping into
// the Philox state is:
//   key       = 64-bit user seed
//   counter3  = (context << 8) | purpose     (context: e.g. replicate index)
//   counter2  = stream                       (e.g. bootstrap resample index)
//   counter1..0 = 64-bit running draw counter
// Two independent consumers must differ in at least one of purpose,
// context, or stream.

#include <array>
#include <cstdint>

namespace placebo {

enum class StreamPurpose : std::uint32_t {
  generate = 1,   // simulation data generation
  bootstrap = 2,  // bootstrap resample indices
};

struct PhiloxState {
  std::array<std::uint32_t, 4> counter;
  std::array<std::uint32_t, 2> key;
};

// One application of the 10-round Philox4x32 block cipher.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

class Rng {
public:
  Rng(std::uint64_t seed, StreamPurpose purpose, std::uint32_t context,
      std::uint32_t stream);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on the open interval (0, 1); 53 random bits plus a half-ulp
  // offset so the endpoints are unreachable.
  double next_double();

  // Standard normal via the inverse CDF; one uniform per draw.
  double next_normal();
  double next_normal(double mu, double sd);

  bool next_bernoulli(double p);

  // Uniform integer in [0, bound), bound > 0, rejection-sampled to avoid
  // modulo bias.
  std::uint32_t next_below(std::uint32_t bound);

private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_;
  std::uint32_t tag_word_;
  std::uint64_t draw_counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int block_pos_ = 4;  // empty
};

}  // namespace placebo
