#include <doctest.h>

#include <cmath>
#include <set>

#include "rbmc/rng.hpp"

using namespace rbmc;

TEST_CASE("philox4x32-10 known-answer vectors") {
  // reference vectors for the underlying block function
  auto b = detail::philox4x32_10(0, 0, 0, 0, 0, 0);
  CHECK(b.w[0] == 0x6627e8d5u);
  CHECK(b.w[1] == 0xe169c58du);
  CHECK(b.w[2] == 0xbc57ac4cu);
  CHECK(b.w[3] == 0x9b00dbd8u);

  b = detail::philox4x32_10(0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu,
                            0xffffffffu);
  CHECK(b.w[0] == 0x408f276du);
  CHECK(b.w[1] == 0x41c83b0eu);
  CHECK(b.w[2] == 0xa20bc7c6u);
  CHECK(b.w[3] == 0x6d5451fdu);

  b = detail::philox4x32_10(0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u, 0xa4093822u,
                            0x299f31d0u);
  CHECK(b.w[0] == 0xd16cfe09u);
  CHECK(b.w[1] == 0x94fdccebu);
  CHECK(b.w[2] == 0x5001e420u);
  CHECK(b.w[3] == 0x24126ea1u);
}

TEST_CASE("streams are deterministic and independent") {
  RngStream a(123, "test", 0), a2(123, "test", 0);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == a2.next_u64());

  RngStream b(123, "test", 1);
  RngStream c(123, "other", 0);
  std::set<std::uint64_t> seen;
  RngStream a3(123, "test", 0);
  for (int i = 0; i < 64; ++i) {
    seen.insert(a3.next_u64());
    seen.insert(b.next_u64());
    seen.insert(c.next_u64());
  }
  CHECK(seen.size() == 3 * 64);  // no collisions across streams
}

TEST_CASE("u01 ranges and moments") {
  RngStream r(7, "u01");
  double mn = 1.0, mx = 0.0, sum = 0.0, sum2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = r.u01();
    mn = std::min(mn, u);
    mx = std::max(mx, u);
    sum += u;
    sum2 += u * u;
  }
  CHECK(mn >= 0.0);
  CHECK(mx < 1.0);
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(var - 1.0 / 12.0) < 3e-3);

  RngStream ro(7, "u01-open");
  for (int i = 0; i < 10000; ++i) {
    const double u = ro.u01_open();
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal and exponential moments") {
  RngStream r(11, "gauss");
  const int n = 100000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  CHECK(std::abs(s / n) < 3.0 / std::sqrt(double(n)));
  CHECK(std::abs(s2 / n - 1.0) < 3.0 * std::sqrt(2.0 / n));

  RngStream e(11, "exp");
  double se = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = e.exponential(4.0);
    CHECK(x > 0.0);
    se += x;
  }
  CHECK(std::abs(se / n - 0.25) < 3.0 * 0.25 / std::sqrt(double(n)));
}
