#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "mlmcq/errors.hpp"
#include "mlmcq/rng.hpp"

using namespace mlmcq;

TEST_CASE("philox4x64-10 known answers") {
  // Random123 kat_vectors
  auto out = philox4x64({0, 0, 0, 0}, {0, 0});
  CHECK(out[0] == 0x16554d9eca36314cULL);
  CHECK(out[1] == 0xdb20fe9d672d0fdcULL);
  CHECK(out[2] == 0xd7e772cee186176bULL);
  CHECK(out[3] == 0x7e68b68aec7ba23bULL);

  const std::uint64_t f = ~0ULL;
  out = philox4x64({f, f, f, f}, {f, f});
  CHECK(out[0] == 0x87b092c3013fe90bULL);
  CHECK(out[1] == 0x438c3c67be8d0224ULL);
  CHECK(out[2] == 0x9cc7d7c69cd777b6ULL);
  CHECK(out[3] == 0xa09caebf594f0ba0ULL);

  out = philox4x64({0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL, 0xa4093822299f31d0ULL,
                    0x082efa98ec4e6c89ULL},
                   {0x452821e638d01377ULL, 0xbe5466cf34e90c6cULL});
  CHECK(out[0] == 0xa528f45403e61d95ULL);
  CHECK(out[1] == 0x38c72dbd566e9788ULL);
  CHECK(out[2] == 0xa5a1610e72fd18b5ULL);
  CHECK(out[3] == 0x57bd43b5e52b7fe6ULL);
}

TEST_CASE("streams are reproducible from their descriptor") {
  const RngStream a = RngStream(42).child(3).child(7);
  const RngStream b = RngStream(42).child(3).child(7);
  CHECK(a == b);
  CHECK(a.depth() == 2);
  CHECK(a.path()[0] == 3);
  CHECK(a.path()[1] == 7);
  auto ea = a.engine();
  auto eb = b.engine();
  for (int i = 0; i < 10; ++i) CHECK(ea() == eb());
}

TEST_CASE("siblings, cousins and seeds get distinct keys") {
  std::set<std::array<std::uint64_t, 2>> keys;
  const RngStream root(1);
  for (int i = 0; i < 50; ++i) {
    keys.insert(root.child(i).key());
    keys.insert(root.child(i).child(0).key());
    keys.insert(RngStream(i + 2).key());
  }
  keys.insert(root.key());
  CHECK(keys.size() == 151);
  // (1, 2) and (2, 1) must differ: the path is ordered
  CHECK_FALSE(root.child(1).child(2) == root.child(2).child(1));
}

TEST_CASE("depth limit") {
  RngStream s(0);
  for (std::size_t d = 0; d < RngStream::kMaxDepth; ++d) s = s.child(1);
  CHECK_THROWS_AS(s.child(1), ResourceError);
}

TEST_CASE("uniform stays inside the open unit interval") {
  CounterEngine e({0, 0});
  double lo = 1.0, hi = 0.0, sum = 0.0;
  constexpr int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = e.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  CHECK(std::abs(sum / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("normal moments and independence across sibling streams") {
  constexpr int n = 200000;
  auto e1 = RngStream(9).child(0).engine();
  auto e2 = RngStream(9).child(1).engine();
  double s1 = 0, s2 = 0, s11 = 0, s12 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = e1.normal();
    const double y = e2.normal();
    s1 += x;
    s2 += y;
    s11 += x * x;
    s12 += x * y;
  }
  const double se = 1.0 / std::sqrt(double(n));
  CHECK(std::abs(s1 / n) < 5 * se);
  CHECK(std::abs(s2 / n) < 5 * se);
  CHECK(std::abs(s11 / n - 1.0) < 5 * std::sqrt(2.0) * se);
  CHECK(std::abs(s12 / n) < 5 * se);
}

TEST_CASE("engine consumes whole blocks") {
  CounterEngine e({5, 6});
  CHECK(e.blocks_consumed() == 0);
  e();
  CHECK(e.blocks_consumed() == 1);
  for (int i = 0; i < 3; ++i) e();
  CHECK(e.blocks_consumed() == 1);
  e();
  CHECK(e.blocks_consumed() == 2);
}

TEST_CASE("neighbouring child streams are uncorrelated") {
  auto a = RngStream(7).child(3).engine();
  auto b = RngStream(7).child(4).engine();
  constexpr int n = 100000;
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (int i = 0; i < n; ++i) {
    const double x = a.uniform(), y = b.uniform();
    sa += x;
    sb += y;
    saa += x * x;
    sbb += y * y;
    sab += x * y;
  }
  const double cov = sab / n - (sa / n) * (sb / n);
  const double rho = cov / std::sqrt((saa / n - sa * sa / n / n) * (sbb / n - sb * sb / n / n));
  CHECK(std::abs(rho) < 0.01);
}

TEST_CASE("interleaved child streams pass a chi-squared uniformity test") {
  constexpr int bins = 64, per_stream = 4096, streams = 16;
  std::vector<CounterEngine> engines;
  for (int i = 0; i < streams; ++i) engines.push_back(RngStream(123).child(i).engine());
  std::vector<int> counts(bins, 0);
  for (int k = 0; k < per_stream; ++k) {
    for (auto& e : engines) ++counts[static_cast<int>(e.uniform() * bins)];
  }
  const double expected = double(per_stream) * streams / bins;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 63 degrees of freedom; 0.999 quantile is about 103.4
  CHECK(chi2 < 103.4);
}
