#include "baa/adjuster.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "test_util.hpp"

using namespace baa;
using test_util::central_diff;
using test_util::rel_err;
using test_util::urand;

namespace {
const BaaParams kDefault{0.7, {16.0, 0.2}, DwfKind::kExp};
constexpr double kExpMid = 0.8320183851339245;  // dwf_exp(0.1; b=16, T=0.2)

BaaParams random_params(std::mt19937_64& rng) {
  BaaParams p;
  p.thr = urand(rng, 0.05, 0.95);
  p.dwf.b = urand(rng, 0.5, 64.0);
  p.dwf.thr_dev = urand(rng, 0.02, 0.5);
  p.kind = rng() % 2 == 0 ? DwfKind::kExp : DwfKind::kLinear;
  return p;
}
}  // namespace

TEST_CASE("masked distance signs and zero at the threshold") {
  CHECK(masked_distance(0.5, 0.0, 0.7) == Catch::Approx(0.2));
  CHECK(masked_distance(0.5, 1.0, 0.7) == Catch::Approx(-0.2));
  CHECK(masked_distance(0.7, 1.0, 0.7) == 0.0);
  CHECK(masked_distance(0.7, 0.0, 0.7) == 0.0);
  CHECK_THROWS_AS(masked_distance(1.2, 0.0, 0.7), std::domain_error);
  CHECK_THROWS_AS(masked_distance(0.5, -0.1, 0.7), std::domain_error);
  CHECK_THROWS_AS(masked_distance(0.5, 0.0, 1.4), std::domain_error);
}

TEST_CASE("masked distance equals signed threshold distance for binary gt") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 2000; ++i) {
    const double pred = urand(rng, 0.0, 1.0);
    const double thr = urand(rng, 0.0, 1.0);
    const double gt = rng() % 2 ? 1.0 : 0.0;
    const double md = masked_distance(pred, gt, thr);
    const bool same_side = (pred - thr) * (gt - thr) >= 0.0;
    if (gt == 1.0 ? pred >= thr : pred <= thr) {
      REQUIRE(md == Catch::Approx(std::abs(pred - thr)).margin(1e-15));
    } else {
      REQUIRE(md == Catch::Approx(-std::abs(pred - thr)).margin(1e-15));
    }
    (void)same_side;
  }
}

TEST_CASE("baa_weight on the three regimes") {
  CHECK(baa_weight(0.2, 1.0, kDefault) == 1.0);   // misclassified
  CHECK(baa_weight(0.05, 0.0, kDefault) == 0.0);  // confidently correct
  CHECK(baa_weight(0.8, 1.0, kDefault) == Catch::Approx(kExpMid).epsilon(1e-12));
}

TEST_CASE("baa_weight range, C5 and monotone uncertainty emphasis") {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 100000; ++i) {
    const BaaParams p = random_params(rng);
    const double pred = urand(rng, 0.0, 1.0);
    const double gt = rng() % 2 ? 1.0 : 0.0;
    const double w = baa_weight(pred, gt, p);
    REQUIRE(w >= 0.0);
    REQUIRE(w <= 1.0);
    // C5: misclassified (strictly across the threshold) => weight 1.
    if ((pred - p.thr) * (gt - p.thr) < 0.0 && pred != p.thr) REQUIRE(w == 1.0);
  }
  // C3: for correct predictions the weight never increases with distance.
  for (int i = 0; i < 2000; ++i) {
    const BaaParams p = random_params(rng);
    const double gt = rng() % 2 ? 1.0 : 0.0;
    const double sign = gt == 1.0 ? 1.0 : -1.0;
    double d1 = urand(rng, 0.0, gt == 1.0 ? 1.0 - p.thr : p.thr);
    double d2 = urand(rng, 0.0, gt == 1.0 ? 1.0 - p.thr : p.thr);
    if (d1 > d2) std::swap(d1, d2);
    const double w_near = baa_weight(p.thr + sign * d1, gt, p);
    const double w_far = baa_weight(p.thr + sign * d2, gt, p);
    REQUIRE(w_near >= w_far);
  }
}

TEST_CASE("baa_weight is continuous in pred") {
  std::mt19937_64 rng(23);
  const double h = 1e-8;
  for (int i = 0; i < 20000; ++i) {
    const BaaParams p = random_params(rng);
    const double pred = urand(rng, h, 1.0 - h);
    const double gt = rng() % 2 ? 1.0 : 0.0;
    REQUIRE(std::abs(baa_weight(pred + h, gt, p) - baa_weight(pred, gt, p)) <= 1e-6);
  }
}

TEST_CASE("hard adjuster matches its closed form") {
  CHECK(hard_adjuster(0.9, 1.0, 0.7) == 0.0);
  CHECK(hard_adjuster(0.5, 1.0, 0.7) == 1.0);
  CHECK(hard_adjuster(0.7, 0.0, 0.7) == 0.0);  // product exactly zero
}

TEST_CASE("limit adjuster matches its closed form") {
  CHECK(limit_adjuster(0.95, 1.0, 0.7, 0.2) == 0.0);
  CHECK(limit_adjuster(0.8, 1.0, 0.7, 0.2) == 1.0);
  CHECK(limit_adjuster(0.5, 1.0, 0.7, 0.2) == 1.0);
}

TEST_CASE("b -> infinity: baa_weight converges to the limit adjuster") {
  std::mt19937_64 rng(24);
  for (int i = 0; i < 20000; ++i) {
    BaaParams p;
    p.thr = urand(rng, 0.05, 0.95);
    p.dwf = {1e4, urand(rng, 0.02, 0.5)};
    p.kind = DwfKind::kExp;
    const double pred = urand(rng, 0.0, 1.0);
    const double gt = rng() % 2 ? 1.0 : 0.0;
    if (std::abs(std::abs(pred - p.thr) - p.dwf.thr_dev) < 0.01) continue;
    REQUIRE(std::abs(baa_weight(pred, gt, p) -
                     limit_adjuster(pred, gt, p.thr, p.dwf.thr_dev)) <= 1e-6);
  }
}

TEST_CASE("thr_dev -> 0 with large b reduces to the hard adjuster") {
  std::mt19937_64 rng(25);
  for (int i = 0; i < 20000; ++i) {
    BaaParams p;
    p.thr = urand(rng, 0.05, 0.95);
    p.dwf = {1e4, 1e-9};
    p.kind = DwfKind::kExp;
    const double pred = urand(rng, 0.0, 1.0);
    const double gt = rng() % 2 ? 1.0 : 0.0;
    if (std::abs(pred - p.thr) < 0.01) continue;
    REQUIRE(baa_weight(pred, gt, p) == hard_adjuster(pred, gt, p.thr));
  }
}

TEST_CASE("baa_weight_grad values and sign flip") {
  CHECK(baa_weight_grad(0.2, 1.0, kDefault) == 0.0);  // flat branch, weight pinned at 1
  CHECK(baa_weight_grad(0.8, 1.0, kDefault) == Catch::Approx(-3.3676157271034306).epsilon(1e-12));
  CHECK(baa_weight_grad(0.6, 0.0, kDefault) == Catch::Approx(+3.3676157271034306).epsilon(1e-12));
}

TEST_CASE("baa_weight_grad matches finite differences away from kinks") {
  std::mt19937_64 rng(26);
  int checked = 0;
  while (checked < 4000) {
    const BaaParams p = random_params(rng);
    const double pred = urand(rng, 1e-5, 1.0 - 1e-5);
    const double gt = rng() % 2 ? 1.0 : 0.0;
    const double d = std::abs(pred - p.thr);
    if (d < 1e-3 || std::abs(d - p.dwf.thr_dev) < 1e-3) continue;
    const double fd =
        central_diff([&](double x) { return baa_weight(x, gt, p); }, pred, 1e-6);
    // Floor 1e-4: at h = 1e-6 the finite-difference rounding noise is
    // ~5e-11, so sub-1e-4 derivatives are held to an absolute 1e-9 bar.
    REQUIRE(rel_err(baa_weight_grad(pred, gt, p), fd, 1e-4) <= 1e-5);
    ++checked;
  }
}
