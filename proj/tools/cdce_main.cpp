#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "cdce/config.hpp"
#include "cdce/datasets.hpp"
#include "cdce/errors.hpp"
#include "cdce/experiments.hpp"
#include "cdce/metrics.hpp"
#include "cdce/optimizer.hpp"
#include "cdce/reconstruct.hpp"

namespace {

using namespace cdce;

struct CommonArgs {
  std::string config_path;
  double rate = -1.0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out;
  bool same_matrix = false;
  int quantize_bits = -1;
  std::string mode = "pixel";
  std::string suite;
  std::string field_path;
};

ExperimentConfig resolve(const CommonArgs& a) {
  ExperimentConfig cfg = a.config_path.empty() ? ExperimentConfig{} : load_config(a.config_path);
  if (a.rate > 0.0) cfg.rates = {a.rate};
  if (a.seed_set) cfg.seeds = {a.seed};
  if (!a.out.empty()) cfg.out_dir = a.out;
  if (a.same_matrix) cfg.same_matrix = true;
  if (a.quantize_bits >= 0) cfg.quantize_bits = {a.quantize_bits};
  cfg.validate();
  return cfg;
}

Granularity granularity_of(const std::string& mode) {
  if (mode == "pixel") return Granularity::Pixel;
  if (mode == "block") return Granularity::Block;
  throw ConfigError("--mode must be pixel or block");
}

std::string tag(const Dataset& d, double rate, std::uint64_t seed) {
  std::ostringstream os;
  os << d.cfg.name << "_r" << rate << "_s" << seed;
  return os.str();
}

void ensure_out(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
}

int cmd_sense(const CommonArgs& a) {
  const ExperimentConfig cfg = resolve(a);
  const Dataset d = load_dataset(cfg.dataset);
  ensure_out(cfg);
  for (double rate : cfg.rates)
    for (std::uint64_t seed : cfg.seeds)
      for (int bits : cfg.quantize_bits) {
        const SensingPair S = build_sensing_pair(static_cast<int>(d.I1.rows()),
                                                 static_cast<int>(d.I1.cols()), rate, seed,
                                                 cfg.kind, cfg.same_matrix);
        const MeasuredPair m = measure_pair(d, S, bits);
        const std::string base = cfg.out_dir + "/" + tag(d, rate, seed) +
                                 (bits ? "_q" + std::to_string(bits) : "");
        save_measurements(base + "_y1.cdce", m.Y1);
        save_measurements(base + "_y2.cdce", m.Y2);
        std::cout << "wrote " << base << "_y{1,2}.cdce (K=" << m.Y1.y.size() << ")\n";
      }
  return 0;
}

int cmd_estimate(const CommonArgs& a) {
  const ExperimentConfig cfg = resolve(a);
  const Dataset d = load_dataset(cfg.dataset);
  ensure_out(cfg);
  const Granularity g = granularity_of(a.mode);
  for (double rate : cfg.rates)
    for (std::uint64_t seed : cfg.seeds)
      for (int bits : cfg.quantize_bits) {
        const EstimateRun r = run_estimate(d, cfg, rate, seed, g, bits);
        const std::string base = cfg.out_dir + "/" + tag(d, rate, seed);
        save_motion_csv(base + "_field.csv", r.field);
        save_trace_csv(base + "_trace.csv", r.trace);
        std::cout << tag(d, rate, seed) << ": error_rate=" << r.error_rate
                  << " psnr_pred=" << r.psnr_pred << " mse_i2=" << r.mse_pred_i2
                  << " wall_ms=" << r.trace.wall_ms << "\n";
      }
  return 0;
}

int cmd_predict(const CommonArgs& a) {
  const ExperimentConfig cfg = resolve(a);
  const Dataset d = load_dataset(cfg.dataset);
  ensure_out(cfg);
  if (a.field_path.empty()) throw ConfigError("predict: --field FIELD.csv is required");
  const MotionField field = load_motion_csv(a.field_path);
  const Image pred = predict(build_warp(field), d.I1);
  const std::string base = cfg.out_dir + "/" + d.cfg.name + "_pred";
  save_pgm(base + ".pgm", pred);
  std::ofstream csv(base + "_metrics.csv");
  csv << "dataset,mse_pred_i2,mse_pred_i1,psnr_pred,error_rate\n";
  const double er = d.has_gt ? disparity_error_rate(field, d.gt, d.cfg.stereo) : -1.0;
  csv << d.cfg.name << "," << mse(pred, d.I2) << "," << mse(pred, d.I1) << ","
      << psnr(pred, d.I2) << "," << er << "\n";
  std::cout << "wrote " << base << ".pgm psnr=" << psnr(pred, d.I2) << "\n";
  return 0;
}

int cmd_bounds(const CommonArgs& a) {
  const ExperimentConfig cfg = resolve(a);
  const Dataset d = load_dataset(cfg.dataset);
  ensure_out(cfg);
  if (!d.has_gt && a.field_path.empty())
    throw ConfigError("bounds: dataset has no ground truth; pass --field");
  const MotionField field =
      a.field_path.empty() ? ground_truth_field(d.gt) : load_motion_csv(a.field_path);
  const std::string path = cfg.out_dir + "/" + d.cfg.name + "_bounds.csv";
  std::ofstream csv(path);
  csv << bound_report_csv_header() << ",dataset,seed,kind\n";
  for (double rate : cfg.rates)
    for (std::uint64_t seed : cfg.seeds) {
      const SensingPair S = build_sensing_pair(static_cast<int>(d.I1.rows()),
                                               static_cast<int>(d.I1.cols()), rate, seed,
                                               cfg.kind, cfg.same_matrix);
      const BoundReport r = bound_report(field, d.I1, d.I2, S.S1, S.S2);
      csv << bound_report_csv_row(r) << "," << d.cfg.name << "," << seed << ","
          << kind_name(cfg.kind) << "\n";
      std::cout << "rate " << rate << " seed " << seed << ": Ed~=" << r.Ed_image
                << " Ed=" << r.Ed_compressed << " sandwich=" << r.sandwich_holds << "\n";
    }
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_reconstruct(const CommonArgs& a) {
  const ExperimentConfig cfg = resolve(a);
  const Dataset d = load_dataset(cfg.dataset);
  ensure_out(cfg);
  const std::string path = cfg.out_dir + "/" + d.cfg.name + "_recon.csv";
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream csv(path, std::ios::app);
  if (fresh)
    csv << "rate,scheme,psnr_I1,psnr_I2,mean_psnr,iterations,wall_ms,dataset,seed,epsilon,"
           "gamma,recon_iters,wavelet,levels\n";
  for (double rate : cfg.rates)
    for (std::uint64_t seed : cfg.seeds)
      for (const std::string scheme : {"independent", "joint-estimated-A"}) {
        const ReconRun r = run_reconstruction(d, cfg, rate, seed, scheme);
        csv << rate << "," << scheme << "," << r.psnr1 << "," << r.psnr2 << ","
            << r.mean_psnr << "," << r.iterations << "," << r.wall_ms << "," << d.cfg.name
            << "," << seed << "," << cfg.recon.epsilon << "," << cfg.recon.gamma << ","
            << cfg.recon.max_iters << ","
            << (cfg.recon.family == WaveletFamily::Haar ? "haar" : "db4") << ","
            << cfg.recon.levels << "\n";
        std::cout << scheme << " rate " << rate << ": psnr I1 " << r.psnr1 << " I2 "
                  << r.psnr2 << "\n";
      }
  std::cout << "wrote " << path << "\n";
  return 0;
}

int cmd_bench(const CommonArgs& a) {
  const ExperimentConfig cfg = resolve(a);
  if (a.suite.empty()) throw ConfigError("bench: --suite NAME is required");
  run_bench_suite(cfg, a.suite);
  std::cout << "suite " << a.suite << " complete under " << cfg.out_dir << "\n";
  return 0;
}

int cmd_dump_config(const CommonArgs& a) {
  std::cout << resolve(a).dump();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"correlation estimation from compressed image measurements"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&args](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "config file (key = value)");
    sub->add_option("--rate", args.rate, "measurement rate in (0,1], overrides config");
    sub->add_option("--seed", args.seed, "RNG seed, overrides config")
        ->each([&args](const std::string&) { args.seed_set = true; });
    sub->add_option("--out", args.out, "output directory");
    sub->add_flag("--same-matrix", args.same_matrix, "use Phi1 = Phi2");
    sub->add_option("--quantize-bits", args.quantize_bits, "0 = off, else bits in [2,16]");
    sub->add_option("--mode", args.mode, "pixel or block granularity");
    sub->add_option("--suite", args.suite, "bench suite name");
    sub->add_option("--field", args.field_path, "motion field CSV input");
  };

  auto* sense = app.add_subcommand("sense", "write measurement files");
  auto* estimate = app.add_subcommand("estimate", "estimate the motion field from measurements");
  auto* predictc = app.add_subcommand("predict", "warp the first image through a field");
  auto* bounds = app.add_subcommand("bounds", "penalty-bound diagnostics over rates");
  auto* reconstruct = app.add_subcommand("reconstruct", "independent and joint reconstruction");
  auto* bench = app.add_subcommand("bench", "run a named figure suite");
  auto* dump = app.add_subcommand("dump-config", "print the resolved configuration");
  for (auto* sub : {sense, estimate, predictc, bounds, reconstruct, bench, dump})
    add_common(sub);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sense->parsed()) return cmd_sense(args);
    if (estimate->parsed()) return cmd_estimate(args);
    if (predictc->parsed()) return cmd_predict(args);
    if (bounds->parsed()) return cmd_bounds(args);
    if (reconstruct->parsed()) return cmd_reconstruct(args);
    if (bench->parsed()) return cmd_bench(args);
    if (dump->parsed()) return cmd_dump_config(args);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
