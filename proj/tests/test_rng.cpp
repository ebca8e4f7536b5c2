#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "carl/rng.hpp"

using namespace carl;

TEST_CASE("philox blocks are deterministic and keyed") {
  const auto a = rng::philox4x32(42, 1, 2, 3, 4);
  const auto b = rng::philox4x32(42, 1, 2, 3, 4);
  CHECK(a == b);
  CHECK(a != rng::philox4x32(43, 1, 2, 3, 4));
  CHECK(a != rng::philox4x32(42, 2, 2, 3, 4));
}

TEST_CASE("u01 stays inside the open unit interval") {
  CHECK(rng::u01(0u, 0u) > 0.0);
  CHECK(rng::u01(0xffffffffu, 0xffffffffu) < 1.0);
}

TEST_CASE("uniform draws pass coarse moment checks") {
  const rng::Draw d{7, rng::Stream::scratch};
  const std::size_t n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = d.uniform01(static_cast<std::uint32_t>(i));
    sum += u;
    sum2 += u * u;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK_THAT(mean, Catch::Matchers::WithinAbs(0.5, 3.0 / std::sqrt(12.0 * n)));
  CHECK_THAT(var, Catch::Matchers::WithinAbs(1.0 / 12.0, 3e-3));
}

TEST_CASE("normal draws pass coarse moment checks") {
  const rng::Draw d{99, rng::Stream::scratch};
  const std::size_t n = 200000;
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = d.normal_pair(static_cast<std::uint32_t>(i));
    for (const double v : {z[0], z[1]}) {
      sum += v;
      sum2 += v * v;
      sum4 += v * v * v * v;
    }
  }
  const double m = sum / (2.0 * n);
  const double v = sum2 / (2.0 * n);
  const double kurt = sum4 / (2.0 * n);
  CHECK_THAT(m, Catch::Matchers::WithinAbs(0.0, 3.0 / std::sqrt(2.0 * n)));
  CHECK_THAT(v, Catch::Matchers::WithinRel(1.0, 0.02));
  CHECK_THAT(kurt, Catch::Matchers::WithinRel(3.0, 0.05));
}

TEST_CASE("streams are disjoint across substreams and steps") {
  const rng::Draw a{5, rng::Stream::langevin_kick};
  const rng::Draw b{5, rng::Stream::kuramoto_kick};
  CHECK(a.uniform01(0, 0) != b.uniform01(0, 0));
  CHECK(a.uniform01(0, 1) != a.uniform01(0, 2));
  CHECK(a.uniform01(1, 1) != a.uniform01(2, 1));

  // step index uses all 64 bits
  CHECK(a.uniform01(0, 0x100000000ull) != a.uniform01(0, 0ull));
}
