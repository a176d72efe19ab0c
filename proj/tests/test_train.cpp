#include "baa/train.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "test_util.hpp"

using namespace baa;
using test_util::rel_err;
using test_util::urand;

namespace {

Grid random_image(std::mt19937_64& rng, int w, int h) {
  Grid g(w, h);
  for (double& v : g.data) v = urand(rng, 0.0, 1.0);
  return g;
}

Grid random_gt(std::mt19937_64& rng, int w, int h, double density = 0.3) {
  Grid g(w, h);
  for (double& v : g.data) v = urand(rng, 0.0, 1.0) < density ? 1.0 : 0.0;
  return g;
}

// Scalar loss with BAA weights frozen at a reference model's predictions:
// the function whose exact gradient kWeightAsConstant backprop computes.
double frozen_weight_total(const TinyModel& m, const TrainBatch& batch, const LossConfig& cfg,
                           const std::vector<std::vector<double>>& frozen) {
  LossConfig base_cfg = cfg;
  base_cfg.baa.reset();
  double total = 0.0;
  for (std::size_t s = 0; s < batch.images.size(); ++s) {
    const Grid pred = forward(m, batch.images[s]);
    const LossBreakdown lb = adjusted_loss(PixelBatch(pred, batch.gts[s]), base_cfg);
    for (std::size_t i = 0; i < lb.base_loss.size(); ++i)
      total += (frozen[s][i] + cfg.delta) * lb.base_loss[i];
  }
  return total;
}

bool preds_clear_of_kinks(const Grid& pred, const BaaParams& p, double margin) {
  for (double v : pred.data) {
    const double d = std::abs(v - p.thr);
    if (d < margin || std::abs(d - p.dwf.thr_dev) < margin) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("backprop matches finite differences across loss configurations") {
  std::mt19937_64 rng(71);
  const double h = 1e-5;
  int instance = 0;
  int done = 0;
  while (done < 12) {
    ++instance;
    const TinyModel model = TinyModel::init(3, 6, 1000 + instance);
    TrainBatch batch;
    batch.images.push_back(random_image(rng, 6, 6));
    batch.gts.push_back(random_gt(rng, 6, 6));

    LossConfig cfg;
    cfg.base = done % 2 ? BaseLoss::kBce : BaseLoss::kWbce;
    switch (done % 4) {
      case 0:
        break;  // plain baseline
      case 1:
      case 2:
        cfg.baa = BaaParams{0.6, {16.0, 0.2}, DwfKind::kExp};
        cfg.grad_mode = GradMode::kWeightAsConstant;
        break;
      case 3:
        cfg.baa = BaaParams{0.6, {16.0, 0.2}, DwfKind::kExp};
        cfg.grad_mode = GradMode::kThroughWeight;
        break;
    }

    if (cfg.baa) {
      const Grid pred = forward(model, batch.images[0]);
      if (!preds_clear_of_kinks(pred, *cfg.baa, 2e-3)) continue;  // resample instance
    }

    std::vector<double> grads;
    backward(model, batch, cfg, grads);

    std::vector<std::vector<double>> frozen;
    if (cfg.baa && cfg.grad_mode == GradMode::kWeightAsConstant) {
      const Grid pred = forward(model, batch.images[0]);
      frozen.push_back(adjusted_loss(PixelBatch(pred, batch.gts[0]), cfg).weight);
    }

    TinyModel probe = model;
    for (int p = 0; p < model.param_count(); ++p) {
      const double saved = probe.params[p];
      const auto eval = [&](double v) {
        probe.params[p] = v;
        const double t = (cfg.baa && cfg.grad_mode == GradMode::kWeightAsConstant)
                             ? frozen_weight_total(probe, batch, cfg, frozen)
                             : batch_loss(probe, batch, cfg);
        probe.params[p] = saved;
        return t;
      };
      const double fd = (eval(saved + h) - eval(saved - h)) / (2.0 * h);
      REQUIRE(rel_err(grads[p], fd, 1e-6) <= 1e-4);
    }
    ++done;
  }
}

TEST_CASE("backprop edge cases") {
  // Saturated-correct predictions fall inside the clamp: zero gradients.
  TinyModel m;
  m.params.assign(m.param_count(), 0.0);
  m.params[m.b2_at()] = 20.0;  // preds ~ 1 - 2e-9, clamped by bce
  TrainBatch batch;
  batch.images.push_back(Grid(6, 6, 0.5));
  batch.gts.push_back(Grid(6, 6, 1.0));
  LossConfig bce;
  bce.base = BaseLoss::kBce;
  std::vector<double> grads;
  backward(m, batch, bce, grads);
  double norm = 0.0;
  for (double g : grads) norm += g * g;
  CHECK(std::sqrt(norm) <= 1e-5);

  // All weights zero with delta = 0: the loss is identically zero.
  TinyModel zero;
  zero.params.assign(zero.param_count(), 0.0);  // preds 0.5 everywhere
  LossConfig cfg;
  cfg.base = BaseLoss::kBce;
  cfg.baa = BaaParams{0.7, {16.0, 0.05}, DwfKind::kExp};
  cfg.delta = 0.0;
  TrainBatch b2;
  b2.images.push_back(Grid(4, 4, 0.3));
  b2.gts.push_back(Grid(4, 4, 0.0));  // correct, distance 0.2 >> 0.05
  const double total = backward(zero, b2, cfg, grads);
  CHECK(total == 0.0);
  for (double g : grads) REQUIRE(g == 0.0);
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
  AdamConfig cfg;
  cfg.weight_decay = 0.0;
  AdamState st(3);
  std::vector<double> params{0.5, -0.25, 1.0};
  const std::vector<double> before = params;
  adam_step(st, params, {0.0, 0.0, 0.0}, cfg);
  CHECK(params == before);
  CHECK(st.step == 1);
}

TEST_CASE("adam first step moves by ~lr against the gradient sign") {
  AdamConfig cfg;
  cfg.lr = 1e-3;
  cfg.weight_decay = 0.0;
  AdamState st(2);
  std::vector<double> params{0.0, 0.0};
  adam_step(st, params, {2.5, -0.7}, cfg);
  // First-step closed form: -lr * g / (|g| + eps).
  CHECK(params[0] == Catch::Approx(-cfg.lr * 2.5 / (2.5 + cfg.eps)).epsilon(1e-12));
  CHECK(params[1] == Catch::Approx(+cfg.lr * 0.7 / (0.7 + cfg.eps)).epsilon(1e-12));
  CHECK(std::abs(std::abs(params[0]) - cfg.lr) <= cfg.lr * 1e-6);
}

TEST_CASE("adam is deterministic and validates shapes") {
  std::mt19937_64 rng(72);
  AdamConfig cfg;
  std::vector<double> p1{0.1, 0.2, 0.3}, p2{0.1, 0.2, 0.3};
  AdamState s1(3), s2(3);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> g{urand(rng, -1, 1), urand(rng, -1, 1), urand(rng, -1, 1)};
    adam_step(s1, p1, g, cfg);
    adam_step(s2, p2, g, cfg);
  }
  CHECK(p1 == p2);
  AdamState bad(2);
  CHECK_THROWS_AS(adam_step(bad, p1, {0.0, 0.0, 0.0}, cfg), DimensionError);
}

TEST_CASE("training descends, is deterministic, and epochs=0 is a no-op") {
  const std::vector<Sample> ds = gen_synthetic(501, 6, 16);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 3;
  cfg.loss.base = BaseLoss::kBce;
  cfg.adam.lr = 0.02;

  TinyModel m0 = TinyModel::init(5, 8, 11);
  const std::vector<double> before = m0.params;
  const TrainLog log0 = train(m0, ds, cfg);
  CHECK(m0.params == before);
  CHECK(log0.epochs.empty());

  cfg.epochs = 12;
  TinyModel m1 = TinyModel::init(5, 8, 11);
  const TrainLog log1 = train(m1, ds, cfg);
  REQUIRE(log1.epochs.size() == 12);
  CHECK(log1.epochs.back().loss < log1.epochs.front().loss);
  for (const EpochRecord& e : log1.epochs) {
    REQUIRE(std::isfinite(e.loss));
    REQUIRE(e.loss >= 0.0);
  }

  // Same seed, fresh model: identical loss trajectory and parameters.
  TinyModel m2 = TinyModel::init(5, 8, 11);
  const TrainLog log2 = train(m2, ds, cfg);
  CHECK(m1.params == m2.params);
  CHECK(trainlog_losses(log1) == trainlog_losses(log2));

  CHECK(log1.used_ids.size() == ds.size());
}

TEST_CASE("training can log validation metrics and gradient-mass snapshots") {
  const std::vector<Sample> ds = gen_synthetic(504, 6, 16);
  const std::vector<Sample> val = gen_synthetic(505, 2, 16);
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.batch_size = 4;
  cfg.crop = 16;
  cfg.seed = 1;
  cfg.adam.lr = 0.02;
  cfg.val_every = 2;
  cfg.infer_patch = 16;
  cfg.infer_stride = 14;
  cfg.gradmass_bins = 8;
  cfg.gradmass_every = 2;

  TinyModel m = TinyModel::init(5, 8, 1);
  const TrainLog log = train(m, ds, cfg, &val);
  REQUIRE(log.epochs.size() == 4);
  CHECK(!log.epochs[0].ods.has_value());
  REQUIRE(log.epochs[1].ods.has_value());
  REQUIRE(log.epochs[3].ois.has_value());
  CHECK(*log.epochs[1].ods >= 0.0);
  CHECK(*log.epochs[1].ods <= 1.0);

  // Snapshots at epochs 0, 2 and the final epoch.
  REQUIRE(log.gradmass.size() == 3);
  CHECK(log.gradmass[0].epoch == 0);
  CHECK(log.gradmass[1].epoch == 2);
  CHECK(log.gradmass[2].epoch == 3);
  CHECK(log.gradmass[0].hist.bin_lo.size() == 8);

  const std::string csv = trainlog_csv(log);
  CHECK(csv.rfind("epoch,loss,ods,ois\n", 0) == 0);
  CHECK(csv.find(",,\n") != std::string::npos);        // epochs without validation
  CHECK(csv.find("0.") != std::string::npos);
}

TEST_CASE("per-image wbce weighting differs from per-batch on imbalanced pairs") {
  // Image A nearly all positive, image B nearly all negative: per-batch
  // weighting balances globally, per-image weighting flips per image.
  Grid img(4, 4, 0.5);
  Grid gt_a(4, 4, 1.0);
  gt_a.data[0] = 0.0;
  Grid gt_b(4, 4, 0.0);
  gt_b.data[0] = 1.0;
  TrainBatch batch;
  batch.images = {img, img};
  batch.gts = {gt_a, gt_b};

  LossConfig cfg;
  cfg.base = BaseLoss::kWbce;
  const TinyModel m = TinyModel::init(3, 4, 2);
  const double per_batch = batch_loss(m, batch, cfg, /*wbce_per_image=*/false);
  const double per_image = batch_loss(m, batch, cfg, /*wbce_per_image=*/true);
  CHECK(per_batch != per_image);
}

TEST_CASE("fractional gt is honored only when binarize_gt is disabled") {
  Grid pred(2, 1);
  pred.data = {0.70, 0.70};  // exactly at thr: weight f(0) = 1 when gt is binary
  Grid gt(2, 1);
  gt.data = {0.8, 0.8};  // fractional
  LossConfig cfg;
  cfg.base = BaseLoss::kBce;
  cfg.baa = BaaParams{0.7, {16.0, 0.2}, DwfKind::kExp};

  const LossBreakdown binarized = adjusted_loss(PixelBatch(pred, gt), cfg);
  cfg.binarize_gt = false;
  const LossBreakdown fractional = adjusted_loss(PixelBatch(pred, gt), cfg);
  CHECK(binarized.weight[0] == 1.0);
  CHECK(fractional.weight[0] == 1.0);  // MD(thr, gt) = 0 for every gt
  // Away from thr the two gt treatments give different masked distances.
  pred.data = {0.75, 0.75};
  cfg.binarize_gt = true;
  const double w_bin = adjusted_loss(PixelBatch(pred, gt), cfg).weight[0];
  cfg.binarize_gt = false;
  const double w_frac = adjusted_loss(PixelBatch(pred, gt), cfg).weight[0];
  CHECK(w_bin != w_frac);
}

TEST_CASE("training rejects diverged parameters") {
  std::vector<Sample> ds = gen_synthetic(502, 2, 16);
  TinyModel m = TinyModel::init(5, 8, 1);
  m.params[0] = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK_THROWS_AS(train(m, ds, cfg), TrainingError);
}

TEST_CASE("predict_tiled equals forward for single-patch images") {
  std::mt19937_64 rng(73);
  const TinyModel m = TinyModel::init(5, 8, 21);
  const Grid img = random_image(rng, 24, 18);
  const Grid direct = forward(m, img);
  const Grid tiled = predict_tiled(m, img, 32, 28);
  CHECK(tiled.data == direct.data);

  TinyModel zero;
  zero.params.assign(zero.param_count(), 0.0);
  const Grid big = random_image(rng, 48, 48);
  const Grid out = predict_tiled(zero, big, 32, 28);
  for (double v : out.data) REQUIRE(v == 0.5);  // averaging a constant output

  CHECK_THROWS_AS(predict_tiled(m, img, 32, 0), DimensionError);
  CHECK_THROWS_AS(predict_tiled(m, img, 32, 33), DimensionError);
}

TEST_CASE("predict_tiled matches a per-pixel average oracle") {
  std::mt19937_64 rng(74);
  const TinyModel m = TinyModel::init(5, 8, 22);
  const Grid img = random_image(rng, 48, 48);
  const int patch = 32, stride = 28;
  const Grid got = predict_tiled(m, img, patch, stride);

  // Independent origin enumeration and averaging.
  std::vector<int> origins;
  for (int x = 0; x + patch < 48; x += stride) origins.push_back(x);
  origins.push_back(48 - patch);
  Grid sum(48, 48, 0.0), cnt(48, 48, 0.0);
  for (int y0 : origins)
    for (int x0 : origins) {
      Grid tile(patch, patch);
      for (int y = 0; y < patch; ++y)
        for (int x = 0; x < patch; ++x) tile.at(x, y) = img.at(x0 + x, y0 + y);
      const Grid pred = forward(m, tile);
      for (int y = 0; y < patch; ++y)
        for (int x = 0; x < patch; ++x) {
          sum.at(x0 + x, y0 + y) += pred.at(x, y);
          cnt.at(x0 + x, y0 + y) += 1.0;
        }
    }
  for (std::size_t i = 0; i < got.size(); ++i) {
    REQUIRE(cnt.data[i] >= 1.0);  // full coverage
    REQUIRE(got.data[i] == Catch::Approx(sum.data[i] / cnt.data[i]).margin(1e-15));
  }
}

TEST_CASE("predict_tiled with stride == patch equals blockwise forward") {
  std::mt19937_64 rng(75);
  const TinyModel m = TinyModel::init(5, 8, 23);
  const Grid img = random_image(rng, 64, 64);
  const Grid tiled = predict_tiled(m, img, 32, 32);
  for (int by = 0; by < 2; ++by)
    for (int bx = 0; bx < 2; ++bx) {
      Grid block(32, 32);
      for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) block.at(x, y) = img.at(bx * 32 + x, by * 32 + y);
      const Grid pred = forward(m, block);
      for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
          REQUIRE(tiled.at(bx * 32 + x, by * 32 + y) == pred.at(x, y));
    }
}

TEST_CASE("gradient mass histogram accounting") {
  const std::vector<Sample> ds = gen_synthetic(503, 3, 16);
  const TinyModel m = TinyModel::init(5, 8, 31);

  LossConfig baseline;
  baseline.base = BaseLoss::kWbce;
  const GradMassHistogram base_h = gradient_mass_histogram(m, ds, baseline, 10, 0.7);

  LossConfig baa0 = baseline;
  baa0.baa = BaaParams{0.7, {16.0, 0.2}, DwfKind::kExp};
  baa0.delta = 0.0;
  const GradMassHistogram adj_h = gradient_mass_histogram(m, ds, baa0, 10, 0.7);

  // Totals equal the elementwise sums computed independently.
  double total = 0.0;
  for (int i = 0; i < 10; ++i) total += base_h.correct_mass[i] + base_h.wrong_mass[i];
  double expected = 0.0;
  for (const Sample& s : ds) {
    const Grid pred = forward(m, s.image);
    const LossBreakdown lb = adjusted_loss(PixelBatch(pred, s.gt), baseline);
    for (double g : lb.grad) expected += std::abs(g);
  }
  CHECK(total == Catch::Approx(expected).epsilon(1e-12));

  // Far-correct bins: zero mass under delta = 0 BAA, nonzero under WBCE.
  double far_correct_base = 0.0, far_correct_adj = 0.0;
  for (int i = 0; i < 10; ++i) {
    if (base_h.bin_lo[i] < 0.2) continue;
    far_correct_base += base_h.correct_mass[i];
    far_correct_adj += adj_h.correct_mass[i];
  }
  CHECK(far_correct_base > 0.0);
  CHECK(far_correct_adj == 0.0);

  // Weights in [0, 1] scale each element: per-bin BAA mass never exceeds
  // the baseline mass.
  for (int i = 0; i < 10; ++i) {
    REQUIRE(adj_h.correct_mass[i] <= base_h.correct_mass[i] + 1e-12);
    REQUIRE(adj_h.wrong_mass[i] <= base_h.wrong_mass[i] + 1e-12);
  }
}
