#include "support.hpp"

#include "vsnet/simulate.hpp"

#include "doctest.h"

#include <set>

using namespace vsnet;
using vsnet::test::rel_err;

namespace {

auto sampled_rows(SamplingMask const &m) -> std::set<int>
{
  std::set<int> rows;
  for (int y = 0; y < m.height(); ++y) {
    if (m.row_sampled(y)) { rows.insert(y); }
  }
  return rows;
}

} // namespace

TEST_SUITE("simulate")
{
  TEST_CASE("no acceleration samples everything")
  {
    auto const m = cartesian_mask({20, 12, 1.0, 4, 3});
    CHECK(m.sampled_count() == 240);
  }

  TEST_CASE("row budget and central block")
  {
    auto const m = cartesian_mask({64, 64, 4.0, 8, 11});
    auto const rows = sampled_rows(m);
    CHECK(rows.size() == 16);
    CHECK(m.sampled_count() == 16 * 64);
    for (int y = 28; y < 36; ++y) {
      CHECK(rows.count(y) == 1);
    }
    for (int y : rows) {
      for (int x = 0; x < 64; ++x) {
        CHECK(m(y, x));
      }
    }
  }

  TEST_CASE("row budget is ceil(height / AF)")
  {
    std::uint64_t seed = 0;
    for (int h : {16, 17, 31, 64, 100}) {
      for (double af : {1.5, 2.0, 3.0, 4.0, 6.0}) {
        MaskSpec const spec{h, 10, af, 2, seed++};
        CHECK(sampled_rows(cartesian_mask(spec)).size() == std::size_t(std::ceil(h / af)));
        CHECK(spec.line_budget() == int(std::ceil(h / af)));
      }
    }
  }

  TEST_CASE("masks are seeded")
  {
    MaskSpec const spec{48, 32, 4.0, 6, 5};
    CHECK(cartesian_mask(spec) == cartesian_mask(spec));
    auto other = spec;
    other.seed = 6;
    CHECK_FALSE(cartesian_mask(spec) == cartesian_mask(other));
  }

  TEST_CASE("invalid mask specifications")
  {
    CHECK_THROWS_AS(cartesian_mask({64, 64, 4.0, 200, 0}), Error);
    CHECK_THROWS_AS(cartesian_mask({64, 64, 4.0, 17, 0}), Error);
    CHECK_THROWS_AS(cartesian_mask({64, 64, 0.5, 8, 0}), Error);
    try {
      cartesian_mask({64, 64, 4.0, 200, 0});
    } catch (Error const &e) {
      CHECK(e.kind() == ErrorKind::Config);
    }
  }

  TEST_CASE("the line sampler is pluggable")
  {
    LineSampler const lowest = [](std::vector<int> const &candidates, int count, std::uint64_t) {
      auto sorted = candidates;
      std::sort(sorted.begin(), sorted.end());
      sorted.resize(std::size_t(count));
      return sorted;
    };
    auto const rows = sampled_rows(cartesian_mask({32, 8, 4.0, 4, 0}, lowest));
    CHECK(rows == std::set<int>{0, 1, 2, 3, 14, 15, 16, 17});
  }

  TEST_CASE("phantom")
  {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      auto const m = phantom(48, 40, seed);
      CHECK(m == phantom(48, 40, seed));
      std::size_t support = 0;
      for (std::size_t i = 0; i < m.size(); ++i) {
        double const a = std::abs(m[i]);
        CHECK(a <= 1.0);
        CHECK(a >= 0.0);
        support += a > 0.0 ? 1 : 0;
      }
      double const frac = double(support) / double(m.size());
      CHECK(frac > 0.2);
      CHECK(frac < 0.9);
    }
    CHECK_FALSE(phantom(32, 32, 1) == phantom(32, 32, 2));
    CHECK_THROWS_AS(phantom(15, 32, 0), Error);
  }

  TEST_CASE("coil maps are normalised and smooth")
  {
    for (int n : {1, 2, 4, 8, 15}) {
      auto const s = coil_maps(40, 36, n);
      REQUIRE(s.coils() == n);
      for (double v : s.sos()) {
        CHECK(std::abs(v - 1.0) < 1e-10);
      }
      double worst = 0.0;
      for (int c = 0; c < n; ++c) {
        auto const map = s.map(c);
        for (int y = 0; y < 40; ++y) {
          for (int x = 0; x < 36; ++x) {
            double const a = std::abs(map[std::size_t(y * 36 + x)]);
            if (x + 1 < 36) { worst = std::max(worst, std::abs(a - std::abs(map[std::size_t(y * 36 + x + 1)]))); }
            if (y + 1 < 40) { worst = std::max(worst, std::abs(a - std::abs(map[std::size_t((y + 1) * 36 + x)]))); }
          }
        }
      }
      INFO(n << " coils");
      CHECK(worst < 0.2);
    }
    auto const one = coil_maps(16, 16, 1);
    for (std::size_t i = 0; i < 256; ++i) {
      CHECK(std::abs(std::abs(one.map(0)[i]) - 1.0) < 1e-12);
    }
  }

  TEST_CASE("synthesis")
  {
    auto const m = phantom(32, 32, 3);
    auto const s = coil_maps(32, 32, 4);
    auto const full = synthesize(m, s, test::full_mask(32, 32));
    CHECK(rel_err(full.reference, m) < 1e-12);
    auto const pf = validate_problem(full.kspace, s, test::full_mask(32, 32));
    CHECK(rel_err(zero_fill(pf), full.reference) < 1e-10);

    auto const mask = cartesian_mask({32, 32, 4.0, 8, 4});
    auto const under = synthesize(m, s, mask);
    CHECK(under.reference == full.reference);
    auto const pu = validate_problem(under.kspace, s, mask);
    CHECK(rel_err(zero_fill(pu), under.reference) > 0.0);
    for (int c = 0; c < 4; ++c) {
      for (std::size_t i = 0; i < 1024; ++i) {
        if (!mask.data()[i]) { CHECK(under.kspace.plane(c)[i] == Complex(0.0)); }
      }
    }
  }

  TEST_CASE("simulated cases are seeded")
  {
    auto const a = simulate_case(32, 3, 4.0, 8, 9);
    auto const b = simulate_case(32, 3, 4.0, 8, 9);
    CHECK(a.kspace == b.kspace);
    CHECK(a.mask == b.mask);
    CHECK(a.reference == b.reference);
    CHECK(a.sensitivities == b.sensitivities);
    CHECK(a.mask_spec.center_lines == 8);
    CHECK_FALSE(simulate_case(32, 3, 4.0, 8, 10).kspace == a.kspace);
    CHECK_NOTHROW(validate_problem(a.kspace, a.sensitivities, a.mask));
  }
}
