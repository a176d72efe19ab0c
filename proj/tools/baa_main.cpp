// Command-line front end: reproducible experiment runs emitting CSV
// artifacts. Every command with a --seed is byte-reproducible.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "baa/baa.hpp"

namespace fs = std::filesystem;
using namespace baa;

namespace {

constexpr int kExitIo = 2;         // I/O or parse failure
constexpr int kExitDims = 3;       // dimension / structural mismatch
constexpr int kExitMissing = 4;    // missing prediction file
constexpr int kExitDiverged = 5;   // training divergence

// Relative output paths resolve under $BAA_OUT_ROOT when it is set.
fs::path resolve_out(const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return p;
  if (const char* root = std::getenv("BAA_OUT_ROOT")) return fs::path(root) / p;
  return p;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct DirLock {
  fs::path file;
  explicit DirLock(const fs::path& dir) : file(dir / ".lock") {
    fs::create_directories(dir);
    if (fs::exists(file))
      throw IoError("output directory is locked by another run: " + dir.string());
    std::ofstream out(file);
    out << "locked\n";
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(file, ec);
  }
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("short write to " + path.string());
}

// ---------------------------------------------------------------------------
// Shared flag groups

struct BaaFlags {
  double thr = 0.7;
  double thr_dev = 0.2;
  double b = 16.0;
  double delta = 1.0;
  std::string kind = "exp";
  std::string grad_mode = "const";
  std::string base = "wbce";

  void add_weight_opts(CLI::App* app) {
    app->add_option("--thr", thr, "binarization threshold")->capture_default_str();
    app->add_option("--thr-dev", thr_dev, "threshold window")->capture_default_str();
    app->add_option("--decay-b", b, "DWF decay rate")->capture_default_str();
    app->add_option("--kind", kind, "DWF kind (exp|linear)")->capture_default_str();
  }
  void add_loss_opts(CLI::App* app) {
    add_weight_opts(app);
    app->add_option("--delta", delta, "additive weight floor")->capture_default_str();
    app->add_option("--grad-mode", grad_mode, "adjuster gradient mode (const|through)")
        ->capture_default_str();
    app->add_option("--base", base, "baseline loss (wbce|bce)")->capture_default_str();
  }

  BaaParams baa_params() const { return {thr, {b, thr_dev}, dwf_kind_from_string(kind)}; }
  LossConfig loss_config(bool with_baa) const {
    LossConfig cfg;
    cfg.base = base == "bce" ? BaseLoss::kBce : BaseLoss::kWbce;
    if (base != "bce" && base != "wbce") throw std::domain_error("unknown base loss: " + base);
    if (with_baa) cfg.baa = baa_params();
    cfg.delta = delta;
    if (grad_mode == "const")
      cfg.grad_mode = GradMode::kWeightAsConstant;
    else if (grad_mode == "through")
      cfg.grad_mode = GradMode::kThroughWeight;
    else
      throw std::domain_error("unknown grad mode: " + grad_mode);
    return cfg;
  }
};

struct MetricFlags {
  double radius = 1.0;
  std::string metric = "chebyshev";
  double grid_lo = 0.01, grid_hi = 0.99, grid_step = 0.01;

  void add_opts(CLI::App* app) {
    app->add_option("--radius", radius, "matching tolerance in pixels")->capture_default_str();
    app->add_option("--metric", metric, "distance metric (chebyshev|euclidean)")
        ->capture_default_str();
    app->add_option("--grid-lo", grid_lo, "lowest evaluation threshold")->capture_default_str();
    app->add_option("--grid-hi", grid_hi, "highest evaluation threshold")->capture_default_str();
    app->add_option("--grid-step", grid_step, "evaluation threshold step")->capture_default_str();
  }
  MetricConfig config() const { return {radius, distance_metric_from_string(metric), 1.0}; }
  std::vector<double> grid() const { return threshold_grid(grid_lo, grid_hi, grid_step); }
};

struct TrainFlags {
  int epochs = 30;
  int batch_size = 8;
  int crop = 32;
  int crop_refresh = 5;
  double lr = 1e-4;
  double weight_decay = 1e-8;
  int patch = 5;
  int hidden = 16;
  int infer_patch = 32;
  int infer_stride = 28;
  std::uint64_t seed = 0;
  double pretrain_frac = 0.5;
  double val_frac = 0.25;
  bool wbce_per_image = false;

  void add_opts(CLI::App* app) {
    app->add_option("--epochs", epochs, "training epochs")->capture_default_str();
    app->add_option("--batch-size", batch_size, "samples per optimizer step")->capture_default_str();
    app->add_option("--crop", crop, "square crop size")->capture_default_str();
    app->add_option("--crop-refresh", crop_refresh, "epochs between crop refreshes")
        ->capture_default_str();
    app->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
    app->add_option("--weight-decay", weight_decay, "Adam weight decay")->capture_default_str();
    app->add_option("--patch", patch, "model input patch (odd)")->capture_default_str();
    app->add_option("--hidden", hidden, "model hidden width")->capture_default_str();
    app->add_option("--infer-patch", infer_patch, "tiled inference patch")->capture_default_str();
    app->add_option("--infer-stride", infer_stride, "tiled inference stride")->capture_default_str();
    app->add_option("--seed", seed, "master seed")->capture_default_str();
    app->add_option("--pretrain-frac", pretrain_frac, "pretrain fraction of the dataset")
        ->capture_default_str();
    app->add_option("--val-frac", val_frac, "validation fraction of the dataset")
        ->capture_default_str();
    app->add_flag("--wbce-per-image", wbce_per_image,
                  "compute WBCE class weights per image instead of per batch");
  }

  TrainConfig config(const LossConfig& loss) const {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.crop = crop;
    cfg.crop_refresh = crop_refresh;
    cfg.adam.lr = lr;
    cfg.adam.weight_decay = weight_decay;
    cfg.loss = loss;
    cfg.wbce_per_image = wbce_per_image;
    cfg.infer_patch = infer_patch;
    cfg.infer_stride = infer_stride;
    return cfg;
  }
};

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  std::uint64_t seed = 0;
  int count = 60;
  int size = 32;
  std::string out;
  ShapeConfig shapes;
};

int cmd_gen(const GenArgs& a) {
  const fs::path dir = resolve_out(a.out);
  fs::create_directories(dir);
  const std::vector<Sample> ds = gen_synthetic(a.seed, a.count, a.size, a.shapes);
  save_dataset(dir, ds);
  std::cout << "wrote " << ds.size() << " samples to " << (dir / "manifest.csv").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// weights

struct WeightsArgs {
  std::string pred, gt, out;
  BaaFlags baa;
  bool fractional_gt = false;
};

int cmd_weights(const WeightsArgs& a) {
  const Grid pred = load_pgm(a.pred);
  Grid gt = load_pgm(a.gt);
  require_same_shape(pred, gt, "weights");
  if (!a.fractional_gt)
    for (double& v : gt.data) v = v >= 0.5 ? 1.0 : 0.0;

  const BaaParams p = a.baa.baa_params();
  std::string csv = "pred,gt,md,weight\n";
  char buf[160];
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double md = masked_distance(pred.data[i], gt.data[i], p.thr);
    const double w = baa_weight(pred.data[i], gt.data[i], p);
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g,%.9g\n", pred.data[i], gt.data[i], md, w);
    csv += buf;
  }
  write_text(resolve_out(a.out), csv);
  std::cout << "wrote " << pred.size() << " rows to " << resolve_out(a.out).string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string pred_dir, manifest, out;
  MetricFlags metrics;
};

int cmd_eval(const EvalArgs& a) {
  const Manifest m = load_manifest(a.manifest);
  std::vector<EvalSample> ds;
  ds.reserve(m.entries.size());
  for (const ManifestEntry& e : m.entries) {
    const fs::path pred_path = fs::path(a.pred_dir) / (e.id + ".pgm");
    if (!fs::exists(pred_path)) {
      std::cerr << "missing prediction: " << pred_path.string() << "\n";
      return kExitMissing;
    }
    Grid gt = load_pgm(e.gt);
    ds.push_back({e.id, load_pgm(pred_path), binarize(gt, 0.5)});
  }
  const EvalReport rep = evaluate_dataset(ds, a.metrics.grid(), a.metrics.config());
  write_text(resolve_out(a.out), eval_report_csv(rep));
  std::printf("ODS %.6f at thr %s, OIS %.6f\n", rep.ods_f1, fmt(rep.ods_threshold).c_str(),
              rep.ois_f1);
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string manifest, out, mode = "baseline";
  BaaFlags baa;
  MetricFlags metrics;
  TrainFlags tr;
  bool warm_start = false;
  bool dump_pred = false;
};

void write_config_csv(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& kv) {
  std::string csv = "key,value\n";
  for (const auto& [k, v] : kv) csv += k + "," + v + "\n";
  write_text(path, csv);
}

void dump_predictions(const fs::path& dir, const TinyModel& model,
                      const std::vector<Sample>& samples, int patch, int stride) {
  fs::create_directories(dir);
  for (const Sample& s : samples)
    save_pgm(dir / (s.id + ".pgm"), predict_tiled(model, s.image, patch, stride), 65535);
}

int cmd_train(const TrainArgs& a) {
  // Validate every flag before any work starts.
  a.baa.loss_config(a.mode != "baseline").validate();
  a.metrics.config();
  a.metrics.grid();
  if (a.mode != "baseline" && a.mode != "baa-fixed" && a.mode != "baa-sa")
    throw std::domain_error("unknown mode: " + a.mode);

  const Manifest source = load_manifest(a.manifest);
  const std::vector<Sample> data = load_samples(source);
  const fs::path out_dir = resolve_out(a.out);
  DirLock lock(out_dir);

  const SplitFractions fractions{a.tr.pretrain_frac, a.tr.val_frac};
  RunArtifacts art;
  std::vector<Sample> test_samples;

  if (a.mode == "baa-sa") {
    ProtocolConfig cfg;
    cfg.fractions = fractions;
    cfg.model = {a.tr.patch, a.tr.hidden};
    cfg.pretrain_cfg = a.tr.config(a.baa.loss_config(false));
    cfg.final_cfg = a.tr.config(a.baa.loss_config(true));
    cfg.final_cfg.loss.baa->thr = a.baa.thr;  // replaced by calibration
    cfg.grid = a.metrics.grid();
    cfg.metrics = a.metrics.config();
    cfg.warm_start = a.warm_start;
    cfg.seed = a.tr.seed;
    const ProtocolResult r = run_protocol(data, cfg);
    art.split = r.split;
    art.pretrained = r.pretrained;
    art.pretrain_log = r.pretrain_log;
    art.calibration_report = r.calibration_report;
    art.model = r.model;
    art.log = r.log;
    art.thr = r.thr;
    art.thr_source = "calibrated";
    art.report = r.report;
    test_samples = select_samples(data, r.split.test);
  } else if (a.mode == "baseline" || a.mode == "baa-fixed") {
    const bool with_baa = a.mode == "baa-fixed";
    art.split = split_dataset(data, fractions, derive_seed(a.tr.seed, 0));
    if (art.split.test.empty())
      throw DimensionError("train: split fractions leave no test samples");
    std::vector<Sample> train_set = select_samples(data, art.split.pretrain);
    const std::vector<Sample> val = select_samples(data, art.split.validation);
    train_set.insert(train_set.end(), val.begin(), val.end());
    test_samples = select_samples(data, art.split.test);

    art.model = TinyModel::init(a.tr.patch, a.tr.hidden, derive_seed(a.tr.seed, 3));
    TrainConfig cfg = a.tr.config(a.baa.loss_config(with_baa));
    cfg.seed = derive_seed(a.tr.seed, 4);
    art.log = train(art.model, train_set, cfg);
    art.report = evaluate_dataset(
        predict_eval_samples(art.model, test_samples, a.tr.infer_patch, a.tr.infer_stride),
        a.metrics.grid(), a.metrics.config());
    if (with_baa) {
      art.thr = a.baa.thr;
      art.thr_source = "fixed";
    }
  } else {
    throw std::domain_error("unknown mode: " + a.mode);
  }

  write_run_dir(out_dir, art);
  write_config_csv(out_dir / "config.csv",
                   {{"mode", a.mode},
                    {"seed", std::to_string(a.tr.seed)},
                    {"base", a.baa.base},
                    {"thr", std::isnan(art.thr) ? std::string() : fmt(art.thr)},
                    {"thr_source", art.thr_source},
                    {"thr_dev", fmt(a.baa.thr_dev)},
                    {"decay_b", fmt(a.baa.b)},
                    {"delta", fmt(a.baa.delta)},
                    {"kind", a.baa.kind},
                    {"grad_mode", a.baa.grad_mode},
                    {"epochs", std::to_string(a.tr.epochs)},
                    {"batch_size", std::to_string(a.tr.batch_size)},
                    {"crop", std::to_string(a.tr.crop)},
                    {"crop_refresh", std::to_string(a.tr.crop_refresh)},
                    {"lr", fmt(a.tr.lr)},
                    {"weight_decay", fmt(a.tr.weight_decay)},
                    {"patch", std::to_string(a.tr.patch)},
                    {"hidden", std::to_string(a.tr.hidden)},
                    {"infer_patch", std::to_string(a.tr.infer_patch)},
                    {"infer_stride", std::to_string(a.tr.infer_stride)},
                    {"pretrain_frac", fmt(a.tr.pretrain_frac)},
                    {"val_frac", fmt(a.tr.val_frac)},
                    {"radius", fmt(a.metrics.radius)},
                    {"metric", a.metrics.metric},
                    {"warm_start", a.warm_start ? "1" : "0"}});
  if (a.dump_pred) {
    dump_predictions(out_dir / "pred", art.model, test_samples, a.tr.infer_patch,
                     a.tr.infer_stride);
    // Companion manifest of the test split so the dump feeds `eval`.
    Manifest test_manifest;
    for (const ManifestEntry& e : source.entries)
      for (const Sample& t : test_samples)
        if (t.id == e.id) {
          ManifestEntry abs = e;
          abs.image = fs::absolute(e.image);
          abs.gt = fs::absolute(e.gt);
          test_manifest.entries.push_back(std::move(abs));
        }
    save_manifest(out_dir / "test_manifest.csv", test_manifest);
  }

  // Epoch losses are sums over crop pixels; also report a per-pixel mean.
  double crop_pixels = 0.0;
  for (const Sample& s : data) {
    const bool in_test = std::any_of(test_samples.begin(), test_samples.end(),
                                     [&](const Sample& t) { return t.id == s.id; });
    if (!in_test)
      crop_pixels += double(std::min(a.tr.crop, s.image.width)) *
                     double(std::min(a.tr.crop, s.image.height));
  }
  if (!art.log.epochs.empty() && crop_pixels > 0.0)
    std::printf("final epoch loss %.6g (%.6g per pixel)\n", art.log.epochs.back().loss,
                art.log.epochs.back().loss / crop_pixels);
  std::printf("mode %s: test ODS %.6f at thr %s, OIS %.6f\n", a.mode.c_str(), art.report.ods_f1,
              fmt(art.report.ods_threshold).c_str(), art.report.ois_f1);
  return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  std::string manifest, out;
  std::string thr_dev_list = "0.1,0.2,0.3,0.4,0.5,0.6,0.7";
  std::string b_list = "8,16,32";
  BaaFlags baa;
  MetricFlags metrics;
  TrainFlags tr;
};

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stod(item));
  if (out.empty()) throw std::domain_error("empty list: " + s);
  return out;
}

int cmd_sweep(const SweepArgs& a) {
  a.metrics.config();
  a.metrics.grid();
  const std::vector<double> thr_devs = parse_list(a.thr_dev_list);
  const std::vector<double> bs = parse_list(a.b_list);
  const std::vector<Sample> data = load_samples(load_manifest(a.manifest));

  const SplitFractions fractions{a.tr.pretrain_frac, a.tr.val_frac};
  const SplitSpec split = split_dataset(data, fractions, derive_seed(a.tr.seed, 0));
  if (split.test.empty()) throw DimensionError("sweep: split fractions leave no test samples");
  std::vector<Sample> train_set = select_samples(data, split.pretrain);
  const std::vector<Sample> val = select_samples(data, split.validation);
  train_set.insert(train_set.end(), val.begin(), val.end());
  const std::vector<Sample> test = select_samples(data, split.test);

  std::string csv = "thr,thr_dev,delta,b,ods,ois\n";
  char buf[200];
  for (double b : bs) {
    for (double thr_dev : thr_devs) {
      BaaFlags cell = a.baa;
      cell.b = b;
      cell.thr_dev = thr_dev;
      std::string ods_s = "nan", ois_s = "nan";
      try {
        TinyModel model = TinyModel::init(a.tr.patch, a.tr.hidden, derive_seed(a.tr.seed, 3));
        TrainConfig cfg = a.tr.config(cell.loss_config(true));
        cfg.seed = derive_seed(a.tr.seed, 4);
        train(model, train_set, cfg);
        const EvalReport rep = evaluate_dataset(
            predict_eval_samples(model, test, a.tr.infer_patch, a.tr.infer_stride),
            a.metrics.grid(), a.metrics.config());
        ods_s = fmt(rep.ods_f1);
        ois_s = fmt(rep.ois_f1);
      } catch (const std::exception& e) {
        std::cerr << "cell thr_dev=" << thr_dev << " b=" << b << " failed: " << e.what() << "\n";
      }
      std::snprintf(buf, sizeof buf, "%s,%s,%s,%s,%s,%s\n", fmt(a.baa.thr).c_str(),
                    fmt(thr_dev).c_str(), fmt(a.baa.delta).c_str(), fmt(b).c_str(), ods_s.c_str(),
                    ois_s.c_str());
      csv += buf;
      std::printf("cell thr=%s thr_dev=%s b=%s: ods=%s ois=%s\n", fmt(a.baa.thr).c_str(),
                  fmt(thr_dev).c_str(), fmt(b).c_str(), ods_s.c_str(), ois_s.c_str());
    }
  }
  write_text(resolve_out(a.out), csv);
  return 0;
}

// ---------------------------------------------------------------------------
// gradmass

struct GradMassArgs {
  std::string checkpoint, manifest, out;
  int bins = 10;
  bool no_baa = false;
  BaaFlags baa;
};

int cmd_gradmass(const GradMassArgs& a) {
  const TinyModel model = load_checkpoint(a.checkpoint);
  const std::vector<Sample> data = load_samples(load_manifest(a.manifest));
  const LossConfig cfg = a.baa.loss_config(!a.no_baa);
  const GradMassHistogram h = gradient_mass_histogram(model, data, cfg, a.bins, a.baa.thr);
  write_text(resolve_out(a.out), gradmass_csv(h));
  std::cout << "wrote " << a.bins << " bins to " << resolve_out(a.out).string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"binarization-aware loss adjustment toolkit"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "generate a synthetic shape dataset");
  gen_cmd->add_option("--seed", gen.seed, "generator seed")->capture_default_str();
  gen_cmd->add_option("--count", gen.count, "number of samples")->capture_default_str();
  gen_cmd->add_option("--size", gen.size, "image side length")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "output dataset directory")->required();
  gen_cmd->add_option("--noise-sigma", gen.shapes.noise_sigma, "Gaussian noise sigma")
      ->capture_default_str();
  gen_cmd->add_option("--min-shapes", gen.shapes.min_shapes, "min shapes per image")
      ->capture_default_str();
  gen_cmd->add_option("--max-shapes", gen.shapes.max_shapes, "max shapes per image")
      ->capture_default_str();
  gen_cmd->add_option("--circle-prob", gen.shapes.circle_prob, "probability a shape is a circle")
      ->capture_default_str();

  WeightsArgs weights;
  CLI::App* weights_cmd =
      app.add_subcommand("weights", "per-pixel adjuster weights for a prediction/gt pair");
  weights_cmd->add_option("--pred", weights.pred, "prediction PGM")->required();
  weights_cmd->add_option("--gt", weights.gt, "ground-truth PGM")->required();
  weights_cmd->add_option("--out", weights.out, "output CSV")->required();
  weights_cmd->add_flag("--fractional-gt", weights.fractional_gt,
                        "use raw gt values instead of binarizing at 0.5");
  weights.baa.add_weight_opts(weights_cmd);

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "ODS/OIS evaluation of a prediction directory");
  eval_cmd->add_option("--pred-dir", eval.pred_dir, "directory of <id>.pgm predictions")->required();
  eval_cmd->add_option("--manifest", eval.manifest, "ground-truth manifest CSV")->required();
  eval_cmd->add_option("--out", eval.out, "output report CSV")->required();
  eval.metrics.add_opts(eval_cmd);

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "train and evaluate one configuration");
  train_cmd->add_option("--manifest", train.manifest, "dataset manifest CSV")->required();
  train_cmd->add_option("--out", train.out, "run directory")->required();
  train_cmd->add_option("--mode", train.mode, "baseline|baa-fixed|baa-sa")->capture_default_str();
  train_cmd->add_flag("--warm-start", train.warm_start, "warm-start the final training");
  train_cmd->add_flag("--dump-pred", train.dump_pred, "write test predictions as 16-bit PGMs");
  train.baa.add_loss_opts(train_cmd);
  train.metrics.add_opts(train_cmd);
  train.tr.add_opts(train_cmd);

  SweepArgs sweep;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "thr_dev x b hyperparameter grid");
  sweep_cmd->add_option("--manifest", sweep.manifest, "dataset manifest CSV")->required();
  sweep_cmd->add_option("--out", sweep.out, "output grid CSV")->required();
  sweep_cmd->add_option("--thr-dev-list", sweep.thr_dev_list, "comma-separated thr_dev values")
      ->capture_default_str();
  sweep_cmd->add_option("--b-list", sweep.b_list, "comma-separated decay rates")
      ->capture_default_str();
  sweep.baa.add_loss_opts(sweep_cmd);
  sweep.metrics.add_opts(sweep_cmd);
  sweep.tr.add_opts(sweep_cmd);

  GradMassArgs gradmass;
  CLI::App* gradmass_cmd =
      app.add_subcommand("gradmass", "gradient-mass histogram over threshold distance");
  gradmass_cmd->add_option("--checkpoint", gradmass.checkpoint, "model checkpoint")->required();
  gradmass_cmd->add_option("--manifest", gradmass.manifest, "dataset manifest CSV")->required();
  gradmass_cmd->add_option("--out", gradmass.out, "output histogram CSV")->required();
  gradmass_cmd->add_option("--bins", gradmass.bins, "number of distance bins")->capture_default_str();
  gradmass_cmd->add_flag("--no-baa", gradmass.no_baa, "histogram of the plain baseline loss");
  gradmass.baa.add_loss_opts(gradmass_cmd);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) return cmd_gen(gen);
    if (weights_cmd->parsed()) return cmd_weights(weights);
    if (eval_cmd->parsed()) return cmd_eval(eval);
    if (train_cmd->parsed()) return cmd_train(train);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep);
    if (gradmass_cmd->parsed()) return cmd_gradmass(gradmass);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDims;
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const CalibrationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
