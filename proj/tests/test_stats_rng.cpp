#include <doctest.h>

#include <cmath>
#include <vector>

#include "placebo/rng.hpp"
#include "placebo/stats.hpp"

using namespace placebo;

TEST_CASE("inverse normal cdf matches reference values") {
  CHECK(stats::inv_normal_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(stats::inv_normal_cdf(0.975) ==
        doctest::Approx(1.959963984540054).epsilon(1e-12));
  CHECK(stats::inv_normal_cdf(0.025) ==
        doctest::Approx(-1.959963984540054).epsilon(1e-12));
  CHECK(stats::inv_normal_cdf(0.9) ==
        doctest::Approx(1.2815515655446004).epsilon(1e-12));
  CHECK(stats::inv_normal_cdf(1e-10) ==
        doctest::Approx(-6.361340902404056).epsilon(1e-9));
  CHECK(stats::z_two_sided(0.05) ==
        doctest::Approx(1.959963984540054).epsilon(1e-12));
}

TEST_CASE("quantile convention: 1-based index ceil(q*m) of the sorted sample") {
  const std::vector<double> sorted = {1.0, 2.0, 3.0, 4.0};
  CHECK(stats::quantile_sorted(sorted, 0.025) == 1.0);  // ceil(0.1) = 1
  CHECK(stats::quantile_sorted(sorted, 0.5) == 2.0);    // ceil(2.0) = 2
  CHECK(stats::quantile_sorted(sorted, 0.51) == 3.0);   // ceil(2.04) = 3
  CHECK(stats::quantile_sorted(sorted, 0.975) == 4.0);  // ceil(3.9) = 4
  CHECK(stats::quantile_sorted(sorted, 0.0) == 1.0);    // clamped to index 1
  CHECK(stats::quantile_sorted(sorted, 1.0) == 4.0);
}

TEST_CASE("median and sd basics") {
  CHECK(stats::median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(stats::median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK(stats::sample_sd({1.0, 1.0, 1.0}) == 0.0);
  CHECK(stats::sample_sd({0.0, 2.0}) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("philox known-answer vectors") {
  const auto zeros = philox4x32_10({0u, 0u, 0u, 0u}, {0u, 0u});
  CHECK(zeros[0] == 0x6627e8d5u);
  CHECK(zeros[1] == 0xe169c58du);
  CHECK(zeros[2] == 0xbc57ac4cu);
  CHECK(zeros[3] == 0x9b00dbd8u);

  const auto ones = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                  {0xffffffffu, 0xffffffffu});
  CHECK(ones[0] == 0x408f276du);
  CHECK(ones[1] == 0x41c83b0eu);
  CHECK(ones[2] == 0xa20bc7c6u);
  CHECK(ones[3] == 0x6d5451fdu);

  const auto pi_digits = philox4x32_10(
      {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
      {0xa4093822u, 0x299f31d0u});
  CHECK(pi_digits[0] == 0xd16cfe09u);
  CHECK(pi_digits[1] == 0x94fdccebu);
  CHECK(pi_digits[2] == 0x5001e420u);
  CHECK(pi_digits[3] == 0x24126ea1u);
}

TEST_CASE("streams are reproducible and distinct") {
  Rng a(42, StreamPurpose::bootstrap, 3, 7);
  Rng b(42, StreamPurpose::bootstrap, 3, 7);
  Rng c(42, StreamPurpose::bootstrap, 3, 8);
  Rng d(42, StreamPurpose::generate, 3, 7);
  bool same_ab = true, same_ac = true, same_ad = true;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u32();
    same_ab = same_ab && va == b.next_u32();
    same_ac = same_ac && va == c.next_u32();
    same_ad = same_ad && va == d.next_u32();
  }
  CHECK(same_ab);
  CHECK_FALSE(same_ac);
  CHECK_FALSE(same_ad);
}

TEST_CASE("uniform doubles live in the open unit interval") {
  Rng rng(1, StreamPurpose::generate, 0, 0);
  bool ok = true;
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.next_double();
    ok = ok && u > 0.0 && u < 1.0;
  }
  CHECK(ok);
}

TEST_CASE("normal draws have the right first two moments") {
  Rng rng(7, StreamPurpose::generate, 0, 0);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = rng.next_normal();
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("bounded draws stay in range and are roughly uniform") {
  Rng rng(9, StreamPurpose::bootstrap, 0, 0);
  std::vector<int> counts(10, 0);
  for (int i = 0; i < 50000; ++i) counts[rng.next_below(10)]++;
  for (int c : counts) {
    CHECK(c > 4500);
    CHECK(c < 5500);
  }
}
