// SPDX-License-Identifier: Apache-2.0
//
// gmmv: simulate synthetic scattering datasets, run GMMV / LSM inversions,
// and validate the numerical building blocks of a configuration.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gmmv/config.hpp"
#include "gmmv/dataset.hpp"
#include "gmmv/forward.hpp"
#include "gmmv/imaging.hpp"
#include "gmmv/lsm.hpp"
#include "gmmv/manifest.hpp"
#include "gmmv/mie.hpp"
#include "gmmv/parallel.hpp"
#include "gmmv/presets.hpp"
#include "gmmv/sensing.hpp"
#include "gmmv/spgl1.hpp"
#include "gmmv/uniqueness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class StageTimer {
 public:
  explicit StageTimer(gmmv::RunManifest& m) : manifest_(m) {}
  template <typename F>
  auto run(const std::string& stage, F&& f) {
    auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      record(stage, t0);
    } else {
      auto r = f();
      record(stage, t0);
      return r;
    }
  }
  double total() const { return total_; }

 private:
  void record(const std::string& stage, std::chrono::steady_clock::time_point t0) {
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest_.timings_s[stage] = dt;
    total_ += dt;
    std::fprintf(stderr, "[gmmv] %-18s %8.2f s\n", stage.c_str(), dt);
  }
  gmmv::RunManifest& manifest_;
  double total_ = 0.0;
};

json config_snapshot(const gmmv::ExperimentConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  j["grid"] = {{"x0", cfg.grid.x0}, {"y0", cfg.grid.y0}, {"delta", cfg.grid.delta},
               {"nx", cfg.grid.nx}, {"ny", cfg.grid.ny}};
  j["background"] = {{"eps_r", cfg.background.eps_r}, {"sigma", cfg.background.sigma}};
  j["frequencies"] = cfg.freqs.f;
  j["sources"] = cfg.measurement.num_sources();
  j["receiver_catalog"] = cfg.measurement.catalog_size();
  j["cv_per_source"] = cfg.measurement.num_cv(0);
  j["shapes"] = cfg.scene.shapes.size();
  return j;
}

gmmv::ExperimentConfig resolve_config(const std::string& config_path, const std::string& preset,
                                      gmmv::RunManifest& manifest) {
  if (!preset.empty()) {
    auto cfg = gmmv::make_preset(preset);
    manifest.config_snapshot = config_snapshot(cfg);
    return cfg;
  }
  if (config_path.empty())
    throw gmmv::Error(gmmv::ErrorCode::MissingField, "either --config or --preset is required");
  auto cfg = gmmv::load_config(config_path);
  manifest.add_input(config_path);
  manifest.config_snapshot = config_snapshot(cfg);
  return cfg;
}

/// Simulation grid: the inversion domain re-meshed at delta/1.5 (an
/// incommensurate refinement, so synthetic data never comes from the grid the
/// inversion itself uses).
gmmv::Grid2D simulation_grid(const gmmv::Grid2D& inv) {
  double ds = inv.delta / 1.5;
  int nx = static_cast<int>(std::ceil(inv.nx * inv.delta / ds - 1e-9));
  int ny = static_cast<int>(std::ceil(inv.ny * inv.delta / ds - 1e-9));
  return gmmv::Grid2D(inv.x0, inv.y0, ds, nx, ny);
}

std::vector<int> parse_freq_subset(const std::string& arg, const gmmv::FrequencySet& freqs) {
  std::vector<int> idx;
  if (arg.empty()) {
    for (int i = 0; i < freqs.count(); ++i) idx.push_back(i);
    return idx;
  }
  std::stringstream ss(arg);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    double v = std::stod(tok);
    if (v < 1e3) v *= 1e9;  // GHz shorthand
    int best = -1;
    for (int i = 0; i < freqs.count(); ++i)
      if (std::abs(freqs.f[i] - v) <= 1e-6 * v) best = i;
    if (best < 0)
      throw gmmv::Error(gmmv::ErrorCode::EmptyFrequency,
                        "frequency " + tok + " is not in the dataset");
    idx.push_back(best);
  }
  return idx;
}

gmmv::ScatterDataset subset_dataset(const gmmv::ScatterDataset& ds, const std::vector<int>& idx) {
  if (static_cast<int>(idx.size()) == ds.num_freqs()) {
    bool all = true;
    for (int i = 0; i < ds.num_freqs(); ++i) all = all && idx[i] == i;
    if (all) return ds;
  }
  gmmv::ScatterDataset out = ds;
  std::vector<double> f;
  out.data.clear();
  for (int i : idx) {
    f.push_back(ds.freqs.f[i]);
    out.data.push_back(ds.data[i]);
  }
  out.freqs = gmmv::FrequencySet(f, ds.freqs.eps_bg_rel);
  return out;
}

json metrics_json(const gmmv::SupportMetrics& sm) {
  json j;
  j["jaccard"] = sm.jaccard;
  j["num_blobs"] = sm.num_blobs;
  j["num_truth_blobs"] = sm.num_truth_blobs;
  j["centroid_errors_m"] = sm.centroid_errors;
  j["peak_sidelobe_db"] = sm.peak_sidelobe_db;
  j["mean_exterior_db"] = sm.mean_exterior_db;
  return j;
}

int cmd_simulate(const std::string& config_path, const std::string& preset,
                 const std::string& out_dir, double snr_db, std::uint64_t seed) {
  gmmv::RunManifest manifest;
  manifest.command = "simulate";
  StageTimer timer(manifest);
  auto cfg = resolve_config(config_path, preset, manifest);
  fs::create_directories(out_dir);

  auto sim_grid = simulation_grid(cfg.grid);
  auto scene = timer.run("rasterize", [&] { return gmmv::rasterize_scene(cfg.scene, sim_grid, 8); });
  auto ds = timer.run("simulate", [&] {
    return gmmv::simulate_scene(scene, cfg.measurement, cfg.freqs, cfg.background);
  });
  if (!std::isinf(snr_db)) ds = timer.run("add_noise", [&] { return gmmv::add_noise(ds, snr_db, seed); });

  std::string ds_path = out_dir + "/dataset.txt";
  timer.run("write", [&] { gmmv::write_dataset(ds, ds_path); });
  manifest.add_output(ds_path);
  manifest.write(out_dir + "/manifest.json");
  std::fprintf(stderr, "[gmmv] dataset written to %s\n", ds_path.c_str());
  return 0;
}

int cmd_invert(const std::string& dataset_path, const std::string& config_path,
               const std::string& preset, const std::string& out_dir, const std::string& method,
               const std::string& freq_subset, int delta_n, int max_iter,
               std::optional<double> sigma, const std::string& cache_path) {
  gmmv::RunManifest manifest;
  manifest.command = "invert";
  StageTimer timer(manifest);
  auto cfg = resolve_config(config_path, preset, manifest);
  fs::create_directories(out_dir);

  auto full_ds = gmmv::read_dataset(dataset_path);
  manifest.add_input(dataset_path);
  auto idx = parse_freq_subset(freq_subset, full_ds.freqs);
  auto ds = subset_dataset(full_ds, idx);

  bool run_gmmv = method == "gmmv" || method == "both";
  bool run_lsm = method == "lsm" || method == "both";

  // truth support for metrics, when the config declares a scene
  std::optional<gmmv::ContrastMap> truth;
  if (!cfg.scene.shapes.empty()) truth = gmmv::rasterize_scene(cfg.scene, cfg.grid);
  const double lambda_min = ds.freqs.lambda_min();

  std::vector<std::string> outputs;
  if (run_gmmv) {
    gmmv::SensingOperator op = timer.run("build_operator", [&] {
      if (!cache_path.empty() && fs::exists(cache_path))
        return gmmv::load_sensing_cache(cache_path, cfg.grid, ds.config, ds.freqs);
      auto built = gmmv::build_sensing_greens(cfg.grid, ds.config, ds.freqs, cfg.background);
      if (!cache_path.empty()) gmmv::save_sensing_cache(built, cache_path);
      return built;
    });
    gmmv::SolverOptions sopt = cfg.solver;
    sopt.delta_n = delta_n;
    if (max_iter > 0) sopt.max_total_iterations = max_iter;
    auto res = timer.run("gmmv_solve", [&] {
      if (sigma) return gmmv::solve_gmmv_sigma(op, ds, *sigma, sopt);
      return gmmv::solve_gmmv_cv(op, ds, sopt);
    });
    std::fprintf(stderr, "[gmmv] stop at iteration %d, N_opt=%d, sigma_hat/||Y||=%.4f\n",
                 res.n_iter, res.n_opt, res.sigma_hat / res.y_norm_recon);

    auto img = gmmv::gmmv_image(res.J, cfg.grid);
    auto img_db = gmmv::to_db(img);
    gmmv::export_field(img, out_dir + "/gamma_gmmv.csv", gmmv::ImageFormat::CsvGrid);
    gmmv::export_field(img_db, out_dir + "/gamma_gmmv_db.csv", gmmv::ImageFormat::CsvGrid);
    gmmv::export_field(img_db, out_dir + "/gamma_gmmv_db.pgm", gmmv::ImageFormat::Pgm8);
    gmmv::export_field(img_db, out_dir + "/gamma_gmmv_db.png", gmmv::ImageFormat::Png);
    gmmv::write_residual_history(res.r_rec, out_dir + "/residual_rec.txt");
    gmmv::write_residual_history(res.r_cv, out_dir + "/residual_cv.txt");
    {
      std::ofstream tf(out_dir + "/tau_path.txt");
      for (const auto& t : res.tau_path) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%d %.12g %.12g %.12g %.3g\n", t.outer,
                      t.tau * res.y_norm_recon, t.phi, t.phi_prime, t.certificate);
        tf << buf;
      }
    }
    for (const char* f : {"/gamma_gmmv.csv", "/gamma_gmmv_db.csv", "/gamma_gmmv_db.pgm",
                          "/gamma_gmmv_db.png", "/residual_rec.txt", "/residual_cv.txt",
                          "/tau_path.txt"})
      outputs.push_back(out_dir + f);
    if (truth) {
      auto mask = gmmv::threshold_support(img_db, -10.0);
      auto sm = gmmv::support_metrics(mask, *truth, img_db, cfg.background, lambda_min / 2.0);
      std::ofstream mf(out_dir + "/metrics_gmmv.json");
      mf << metrics_json(sm).dump(2) << "\n";
      outputs.push_back(out_dir + "/metrics_gmmv.json");
    }
  }

  if (run_lsm) {
    auto gamma = timer.run("lsm_solve", [&] {
      std::vector<int> all(ds.num_freqs());
      for (int i = 0; i < ds.num_freqs(); ++i) all[i] = i;
      return gmmv::lsm_image(ds, all, cfg.grid, cfg.background);
    });
    auto img = gmmv::lsm_image_field(gamma, cfg.grid);
    auto img_db = gmmv::to_db(img);
    gmmv::export_field(img, out_dir + "/gamma_lsm.csv", gmmv::ImageFormat::CsvGrid);
    gmmv::export_field(img_db, out_dir + "/gamma_lsm_db.csv", gmmv::ImageFormat::CsvGrid);
    gmmv::export_field(img_db, out_dir + "/gamma_lsm_db.pgm", gmmv::ImageFormat::Pgm8);
    gmmv::export_field(img_db, out_dir + "/gamma_lsm_db.png", gmmv::ImageFormat::Png);
    for (const char* f : {"/gamma_lsm.csv", "/gamma_lsm_db.csv", "/gamma_lsm_db.pgm",
                          "/gamma_lsm_db.png"})
      outputs.push_back(out_dir + f);
    if (truth) {
      auto mask = gmmv::threshold_support(img_db, -10.0);
      auto sm = gmmv::support_metrics(mask, *truth, img_db, cfg.background, lambda_min / 2.0);
      std::ofstream mf(out_dir + "/metrics_lsm.json");
      mf << metrics_json(sm).dump(2) << "\n";
      outputs.push_back(out_dir + "/metrics_lsm.json");
    }
  }

  for (const auto& o : outputs) manifest.add_output(o);
  manifest.write(out_dir + "/manifest.json");
  return 0;
}

int cmd_validate(const std::string& config_path, const std::string& preset,
                 const std::string& cache_path) {
  gmmv::RunManifest manifest;
  manifest.command = "validate";
  auto cfg = resolve_config(config_path, preset, manifest);
  bool all_pass = true;
  auto report = [&](const std::string& name, bool pass, const std::string& detail) {
    std::printf("%-28s %s  %s\n", name.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
    all_pass = all_pass && pass;
  };

  // 1. mesh-density rule on the inversion grid
  {
    auto r = gmmv::check_grid_rule(cfg.grid, cfg.freqs);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "delta=%.4g m, delta_max=%.4g m", cfg.grid.delta, r.delta_max);
    report("grid-rule", r.pass, buf);
  }

  // 2. adjoint inner-product identity on the Green's operator
  gmmv::SensingOperator op = [&] {
    if (!cache_path.empty())
      return gmmv::load_sensing_cache(cache_path, cfg.grid, cfg.measurement, cfg.freqs);
    return gmmv::build_sensing_greens(cfg.grid, cfg.measurement, cfg.freqs, cfg.background);
  }();
  {
    gmmv::detail::GaussianRng rng(17);
    gmmv::CMat J(op.num_cells(), op.num_columns());
    for (Eigen::Index i = 0; i < J.size(); ++i)
      J.data()[i] = gmmv::cplx(rng.normal(), rng.normal());
    gmmv::DataBlocks R(op.num_freqs());
    for (int i = 0; i < op.num_freqs(); ++i) {
      R[i].resize(op.config.catalog_size(), op.num_sources());
      for (Eigen::Index t = 0; t < R[i].size(); ++t)
        R[i].data()[t] = gmmv::cplx(rng.normal(), rng.normal());
    }
    auto FJ = gmmv::apply_forward(op, J, gmmv::RowClass::Recon);
    auto AR = gmmv::apply_adjoint(op, R, gmmv::RowClass::Recon);
    gmmv::cplx lhs = 0, rhs = 0;
    for (int i = 0; i < op.num_freqs(); ++i)
      lhs += (FJ[i].conjugate().cwiseProduct(R[i].cwiseProduct(op.mask(gmmv::RowClass::Recon).cast<gmmv::cplx>()))).sum();
    rhs = (J.conjugate().cwiseProduct(AR)).sum();
    double err = std::abs(lhs - rhs) / std::abs(rhs);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "relative error %.3g", err);
    bool ok = err <= 1e-10;
    if (!cache_path.empty()) {
      // cached operators must reproduce freshly built columns to cache precision
      auto fresh = gmmv::build_sensing_greens(cfg.grid, cfg.measurement, cfg.freqs, cfg.background);
      double cerr = 0.0;
      for (int i = 0; i < op.num_freqs(); ++i)
        cerr = std::max(cerr, (op.catalog[i] - fresh.catalog[i]).norm() / fresh.catalog[i].norm());
      ok = ok && cerr <= 1e-5;
      std::snprintf(buf, sizeof(buf), "relative error %.3g, cache drift %.3g", err, cerr);
    }
    report("adjoint-identity", ok, buf);
  }

  // 3. Green's vs FDFD operator agreement
  {
    auto facts = gmmv::make_sensing_factorizations(cfg.grid, cfg.freqs, cfg.background);
    auto fdfd = gmmv::build_sensing_fdfd(facts, cfg.grid, cfg.measurement, cfg.freqs,
                                         cfg.background);
    double worst = 0.0;
    for (int i = 0; i < op.num_freqs(); ++i) {
      for (int n = 0; n < op.num_cells(); ++n) {
        double d = (fdfd.catalog[i].col(n) - op.catalog[i].col(n)).norm() /
                   op.catalog[i].col(n).norm();
        worst = std::max(worst, d);
      }
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "worst columnwise error %.3g", worst);
    report("greens-vs-fdfd", worst <= 0.05, buf);
  }

  // 4. forward solver vs modal series for a reference cylinder
  {
    gmmv::MieCylinder cyl{{0.0, 0.0}, 0.015, 3.0};
    int mid = cfg.freqs.count() / 2;
    gmmv::FrequencySet fs({cfg.freqs.f[mid]}, cfg.background.eps_r);
    double lam = fs.lambda(0);
    double d_inv = lam / 15.0;
    int n = std::max(8, static_cast<int>(std::ceil(2 * 0.020 / d_inv)));
    gmmv::Grid2D inv(-n * d_inv / 2, -n * d_inv / 2, d_inv, n, n);
    gmmv::Grid2D sim = simulation_grid(inv);
    gmmv::SceneSpec sc;
    sc.shapes.push_back(gmmv::make_circle(cyl.center, cyl.radius, gmmv::Material{cyl.eps_r, 0.0}));
    auto scene = gmmv::rasterize_scene(sc, sim, 8);
    gmmv::RingSpec src{0.72, 0.0, 360.0, 1};
    gmmv::RingSpec rx{0.76, 0.0, 5.0, 72};
    auto meas = gmmv::make_full_ring_config(src, rx);
    auto ds = gmmv::simulate_scene(scene, meas, fs, cfg.background);
    auto ref = gmmv::mie_reference(cyl, cfg.background, fs.f[0], meas.sources[0], meas.receivers);
    double num = 0, den = 0;
    for (int q = 0; q < 72; ++q) {
      num += std::norm(ds.data[0](q, 0) - ref[q]);
      den += std::norm(ref[q]);
    }
    double rel = std::sqrt(num / den);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "relative L2 error %.3g at %.3g GHz", rel, fs.f[0] / 1e9);
    report("fdfd-vs-mie", rel <= 0.03, buf);
  }

  // 5. measurement-configuration guideline P*I > Q
  {
    int pi = cfg.measurement.num_sources() * cfg.freqs.count();
    int q = cfg.measurement.num_active(0);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "P*I=%d vs Q=%d", pi, q);
    report("guideline-PIgtQ", pi > q, buf);
  }

  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GMMV shape-reconstruction toolkit"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "cap worker threads (default: all cores)");

  std::string config_path, preset, out_dir, method = "both", freqs_arg, dataset_path, cache_path;
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  int delta_n = 30, max_iter = 0;
  std::optional<double> sigma;

  auto* sim = app.add_subcommand("simulate", "synthesize a scattered-field dataset");
  sim->add_option("--config", config_path, "configuration JSON");
  sim->add_option("--preset", preset, "named scenario preset");
  sim->add_option("--out", out_dir, "output directory")->required();
  sim->add_option("--snr", snr_db, "additive noise SNR in dB (inf = noiseless)");
  sim->add_option("--seed", seed, "noise RNG seed");

  auto* inv = app.add_subcommand("invert", "reconstruct shapes from a dataset");
  inv->add_option("--dataset", dataset_path, "GMMVDS/1 dataset file")->required();
  inv->add_option("--config", config_path, "configuration JSON");
  inv->add_option("--preset", preset, "named scenario preset");
  inv->add_option("--out", out_dir, "output directory")->required();
  inv->add_option("--method", method, "gmmv | lsm | both")
      ->check(CLI::IsMember({"gmmv", "lsm", "both"}));
  inv->add_option("--freqs", freqs_arg, "comma-separated frequency subset (Hz or GHz)");
  inv->add_option("--delta-n", delta_n, "CV patience (iterations past the CV minimum)");
  inv->add_option("--max-iter", max_iter, "total inner-iteration budget");
  double sigma_val = -1.0;
  inv->add_option("--sigma", sigma_val, "known residual target (skips CV stopping)");
  inv->add_option("--cache", cache_path, "sensing-operator cache file");

  auto* val = app.add_subcommand("validate", "run numerical self-checks for a configuration");
  val->add_option("--config", config_path, "configuration JSON");
  val->add_option("--preset", preset, "named scenario preset");
  val->add_option("--cache", cache_path, "sensing-operator cache file to verify");

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) gmmv::set_max_threads(threads);
  if (sigma_val >= 0.0) sigma = sigma_val;

  try {
    if (sim->parsed()) return cmd_simulate(config_path, preset, out_dir, snr_db, seed);
    if (inv->parsed())
      return cmd_invert(dataset_path, config_path, preset, out_dir, method, freqs_arg, delta_n,
                        max_iter, sigma, cache_path);
    if (val->parsed()) return cmd_validate(config_path, preset, cache_path);
  } catch (const gmmv::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case gmmv::ErrorCode::MissingField:
      case gmmv::ErrorCode::BadUnits:
      case gmmv::ErrorCode::GeometryViolation:
      case gmmv::ErrorCode::IoError:
      case gmmv::ErrorCode::VersionMismatch:
      case gmmv::ErrorCode::CorruptRecord:
        return 2;  // usage / configuration errors
      default:
        return 1;  // solver failures
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
