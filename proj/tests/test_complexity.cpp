#include <doctest.h>

#include <cmath>

#include "proxyforge/complexity.hpp"
#include "proxyforge/errors.hpp"

using namespace proxyforge;

TEST_CASE("masked proxy batch counts by hand") {
  ProbeConfig c;
  c.loss = LossKind::kMaskedProxy;
  c.batch_size = 8;
  c.shots_per_class = 2;

  // 4 batch classes among 10 proxies: 4 x (1 + 3 + 6) + 4 x 4 = 56 per batch,
  // and 20 instances give 20 / 8 = 2 batches
  c.num_proxies = 10;
  c.num_instances = 20;
  const ComparisonCount ten = count_epoch_comparisons(c);
  CHECK(ten.measured == 2 * 56);
  CHECK(ten.predicted == ten.measured);

  // every proxy masked: 4 x (1 + 3) + 4 x 4
  c.num_proxies = 4;
  c.num_instances = 8;
  CHECK(count_epoch_comparisons(c).measured == 32);

  c.hyper.lambda_balance = 0.0;
  CHECK(count_epoch_comparisons(c).measured == 16);
}

TEST_CASE("prototypical compares every query with every centroid") {
  for (std::size_t classes : {2u, 3u, 5u, 8u}) {
    ProbeConfig c;
    c.loss = LossKind::kPrototypical;
    c.num_proxies = classes;
    c.num_instances = 2 * classes;
    c.batch_size = 2 * classes;
    const ComparisonCount n = count_epoch_comparisons(c);
    CHECK(n.measured == classes * classes);
    CHECK(n.predicted == n.measured);
  }
}

TEST_CASE("empty epoch counts nothing") {
  ProbeConfig c;
  c.num_instances = 0;
  const ComparisonCount n = count_epoch_comparisons(c);
  CHECK(n.measured == 0);
  CHECK(n.predicted == 0);
}

TEST_CASE("infeasible probe configurations raise SamplerError") {
  ProbeConfig c;
  c.num_instances = 12;
  c.num_proxies = 3;
  c.batch_size = 8;  // needs 4 classes
  CHECK_THROWS_AS(count_epoch_comparisons(c), SamplerError);
}

TEST_CASE("instrumented counts equal closed forms for every loss and sampler") {
  for (LossKind k : kAllLosses) {
    for (SamplerMode mode : {SamplerMode::kBalanced, SamplerMode::kVariable}) {
      for (std::size_t n : {60u, 150u, 300u}) {
        ProbeConfig c;
        c.loss = k;
        c.mode = mode;
        c.num_instances = n;
        c.num_proxies = 15;
        c.batch_size = 12;
        c.shots_per_class = k == LossKind::kGe2e ? 3 : 2;
        c.seed = n;
        const ComparisonCount cnt = count_epoch_comparisons(c);
        INFO(loss_name(k), " N=", n);
        CHECK(cnt.measured > 0);
        CHECK(cnt.measured == cnt.predicted);
      }
    }
  }
}

TEST_CASE("masked proxy counts grow linearly in N and P") {
  for (LossKind k : {LossKind::kMaskedProxy, LossKind::kMultinomialMaskedProxy}) {
    SweepSpec n_sweep;
    n_sweep.loss = k;
    n_sweep.param = SweepParam::kInstances;
    n_sweep.values = {160, 320, 640, 1280, 2560};
    n_sweep.fixed.num_proxies = 20;
    const ScalingReport rn = fit_scaling(n_sweep);
    CHECK(rn.counts_match);
    CHECK(std::abs(rn.loglog.slope - 1.0) <= 0.1);

    SweepSpec p_sweep;
    p_sweep.loss = k;
    p_sweep.param = SweepParam::kProxies;
    p_sweep.values = {25, 50, 100, 200, 400, 800};
    p_sweep.fixed.num_instances = 1600;
    const ScalingReport rp = fit_scaling(p_sweep);
    CHECK(rp.counts_match);
    CHECK(std::abs(rp.loglog.slope - 1.0) <= 0.1);
    // exactly affine in P for fixed N, B, M
    CHECK(rp.linear.residual <= 1e-9 * rp.linear.slope);
  }
}

TEST_CASE("fully enumerated triplets grow cubically") {
  SweepSpec s;
  s.loss = LossKind::kTriplet;
  s.param = SweepParam::kInstances;
  s.values = {12, 24, 36, 48, 60};
  s.fixed.num_proxies = 2;
  s.full_enumeration = true;
  const ScalingReport r = fit_scaling(s);
  CHECK(r.counts_match);
  CHECK(std::abs(r.loglog.slope - 3.0) <= 0.2);
  // two classes of N/2: 2 * N * (N/2 - 1) * N/2 comparisons
  for (const SweepRow& row : r.rows) {
    const std::size_t n = row.value;
    CHECK(row.count.measured == 2 * n * (n / 2 - 1) * (n / 2));
  }
}

TEST_CASE("line fits") {
  const std::vector<double> x{1, 2, 4, 8};
  const std::vector<double> flat{5, 5, 5, 5};
  const LineFit zero = loglog_fit(x, flat);
  CHECK(zero.slope == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(zero.residual == doctest::Approx(0.0).epsilon(1e-14));

  const std::vector<double> cube{1, 8, 64, 512};
  CHECK(loglog_fit(x, cube).slope == doctest::Approx(3.0).epsilon(1e-12));

  const std::vector<double> affine{3, 5, 9, 17};
  const LineFit l = linear_fit(x, affine);
  CHECK(l.slope == doctest::Approx(2.0));
  CHECK(l.intercept == doctest::Approx(1.0));

  CHECK_THROWS_AS(loglog_fit(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}), ProbeError);
  CHECK_THROWS_AS(loglog_fit(std::vector<double>{1, 2, 0, 4}, std::vector<double>{1, 2, 3, 4}),
                  ProbeError);
  CHECK_THROWS_AS(loglog_fit(std::vector<double>{2, 2, 2, 2}, std::vector<double>{1, 2, 3, 4}),
                  ProbeError);

  SweepSpec few;
  few.values = {10, 20, 40};
  CHECK_THROWS_AS(fit_scaling(few), ProbeError);
}

TEST_CASE("scaling CSV layout") {
  std::vector<SweepRow> rows{{LossKind::kMaskedProxy, SweepParam::kInstances, 160, {1920, 1920}},
                             {LossKind::kTriplet, SweepParam::kProxies, 4, {7, 7}}};
  CHECK(scaling_csv(rows) == "loss,param,value,count\nmp,N,160,1920\ntriplet,P,4,7\n");
}
