#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <set>

#include "hdrexp/eval.hpp"
#include "hdrexp/merger.hpp"
#include "hdrexp/pfm.hpp"
#include "hdrexp/rng.hpp"
#include "hdrexp/simulator.hpp"
#include "hdrexp/solver.hpp"
#include "hdrexp/stack.hpp"

namespace hdrexp::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

ValidRange parse_valid_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("--valid-range expects lo:hi, got '" + text + "'");
  ValidRange range;
  try {
    range.lower = std::stod(text.substr(0, colon));
    range.upper = std::stod(text.substr(colon + 1));
  } catch (const std::exception&) {
    throw UsageError("--valid-range expects two numbers lo:hi, got '" + text + "'");
  }
  try {
    range.validate();
  } catch (const Error& e) {
    throw UsageError(std::string("--valid-range: ") + e.what());
  }
  return range;
}

std::string format_range(const ValidRange& range) {
  std::ostringstream s;
  s << range.lower << ':' << range.upper;
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary);
  if (!file) throw FileWriteError("cannot open '" + path.string() + "' for writing");
  file << text;
  if (!file) throw FileWriteError("failed writing '" + path.string() + "'");
}

json read_json(const fs::path& path) {
  std::ifstream file(path);
  if (!file) throw FileReadError("cannot open '" + path.string() + "'");
  try {
    return json::parse(file);
  } catch (const json::exception& e) {
    throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

// Expands `--config file.json` into flags for every key not given on the command line.
std::vector<std::string> apply_config(std::vector<std::string> args) {
  std::optional<std::string> config_path;
  std::vector<std::string> rest;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config") {
      if (k + 1 >= args.size()) throw UsageError("--config needs a file");
      config_path = args[++k];
    } else if (args[k].rfind("--config=", 0) == 0) {
      config_path = args[k].substr(9);
    } else {
      rest.push_back(args[k]);
    }
  }
  if (!config_path) return rest;

  std::set<std::string> given;
  for (const std::string& a : rest)
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') - 2));

  const json config = read_json(*config_path);
  if (!config.is_object()) throw DataError("config '" + *config_path + "' must be a JSON object");
  auto scalar = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  for (const auto& [key, value] : config.items()) {
    if (given.count(key)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) rest.push_back("--" + key);
    } else if (value.is_array()) {
      rest.push_back("--" + key);
      for (const json& v : value) rest.push_back(scalar(v));
    } else if (!value.is_null()) {
      rest.push_back("--" + key);
      rest.push_back(scalar(value));
    }
  }
  return rest;
}

int default_iso(const ExposureStack& stack) { return static_cast<int>(std::lround(stack.metadata(0).gain * 100.0)); }

/// Options shared by estimate and merge.
struct StackOptions {
  std::vector<std::string> stack;
  std::string meta;
  std::string noise_profile;
  std::optional<int> iso;
  std::string valid_range = "0.01:0.95";
  int threads = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--stack", stack, "Aligned linear PFM images")->required()->expected(2, -1);
    cmd->add_option("--meta", meta, "Metadata JSON (one entry per image, same order)")->required();
    cmd->add_option("--noise-profile", noise_profile, "Built-in profile name (canon-s100) or profile JSON");
    cmd->add_option("--iso", iso, "ISO entry of the noise profile (default: gain x 100 of the shortest exposure)");
    cmd->add_option("--valid-range", valid_range, "Valid sample band as fractions of white, lo:hi")
        ->capture_default_str();
    cmd->add_option("--threads", threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  }

  ExposureStack load() const {
    std::vector<fs::path> paths(stack.begin(), stack.end());
    return load_stack(paths, meta);
  }

  std::optional<NoiseParameters> noise(const ExposureStack& s) const {
    if (noise_profile.empty()) return std::nullopt;
    return resolve_noise_profile(noise_profile).at_iso(iso.value_or(default_iso(s)));
  }
};

struct EstimateOptions {
  StackOptions common;
  std::string weights = "calibration-free";
  std::string connectivity = "greedy";
  std::string estimator = "wls";
  double lambda = 10.0;
  Index tile = 16;
  Index k = 50;
  double outlier_threshold = std::log(1.5);
  bool no_outlier_rejection = false;
  std::string out = "estimate.json";
};

struct MergeOptions {
  StackOptions common;
  std::string estimate;
  bool use_exif = false;
  std::string mode;
  std::string out = "merged.pfm";
  std::string mask;
};

struct SimulateOptions {
  std::string scene = "gradient13";
  int width = 512;
  int height = 512;
  std::optional<double> radiance_scale;
  std::vector<double> times{1.0 / 64.0, 1.0 / 8.0, 1.0, 8.0};
  int iso = 100;
  int bit_depth = 14;
  std::uint64_t seed = 0;
  double corruption = 0.15;
  std::string corruption_model = "relative";
  std::string noise_profile = "canon-s100";
  bool noiseless = false;
  std::string out = "sim";
};

struct EvaluateOptions {
  std::vector<int> isos{100, 200, 400, 800};
  int seeds = 20;
  int scenes = kProceduralSceneCount;
  int size = 512;
  std::vector<std::string> methods;
  std::string noise_profile = "canon-s100";
  std::string weights = "calibrated";
  double lambda = 10.0;
  Index tile = 16;
  Index k = 50;
  std::string valid_range = "0.01:0.95";
  double outlier_threshold = std::log(1.5);
  bool no_outlier_rejection = false;
  double corruption = 0.15;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out = "eval";
};

int cmd_estimate(const EstimateOptions& o, std::ostream& out) {
  EstimateConfig config;
  config.build.weight_mode = parse_weight_mode(o.weights);
  if (config.build.weight_mode == WeightMode::calibrated && o.common.noise_profile.empty())
    throw UsageError("--weights calibrated requires --noise-profile");
  config.build.tile_size = o.tile;
  config.build.k = o.k;
  config.build.range = parse_valid_range(o.common.valid_range);
  config.build.threads = o.common.threads;
  config.build.connectivity = o.connectivity == "pairwise" ? Connectivity::pairwise : Connectivity::greedy;
  config.estimator = o.estimator == "baseline" ? Estimator::ratio_baseline : Estimator::wls;
  config.solve.lambda = o.lambda;
  config.solve.outlier_threshold_log = o.outlier_threshold;
  config.reject_outliers = !o.no_outlier_rejection;

  const ExposureStack stack = o.common.load();
  std::optional<int> iso;
  if (config.build.weight_mode == WeightMode::calibrated) {
    iso = o.common.iso.value_or(default_iso(stack));
    config.build.noise = o.common.noise(stack);
  }
  const EstimateResult result = estimate_exposures(stack, config);
  const ExposureEstimate& est = result.estimate;

  json report;
  report["files"] = json::array();
  report["source_index"] = json::array();
  for (Index i = 0; i < stack.size(); ++i) {
    report["files"].push_back(stack.name(i));
    report["source_index"].push_back(stack.source_index(i));
  }
  report["e_hat"] = to_json(est.e_hat);
  report["e0"] = to_json(est.e0);
  report["d_hat"] = to_json(est.e_hat.array().exp().matrix());
  report["per_exposure_ratio_vs_exif"] = to_json((est.e_hat - est.e0).array().exp().matrix());
  report["lambda"] = est.lambda;
  report["residual_norm"] = est.residual_norm;
  report["system_rows"] = result.system_rows;
  report["equation_count"] = result.equation_count;
  report["kept_tiles"] = result.kept_tiles;
  report["rejected_tiles"] = result.rejected_tiles;
  report["fell_back_to_prior"] = result.fell_back_to_prior;
  report["config"] = {{"weights", to_string(config.build.weight_mode)},
                      {"noise_profile", o.common.noise_profile.empty() ? json(nullptr) : json(o.common.noise_profile)},
                      {"iso", iso ? json(*iso) : json(nullptr)},
                      {"lambda", config.solve.lambda},
                      {"tile", config.build.tile_size},
                      {"k", config.build.k},
                      {"valid_range", format_range(config.build.range)},
                      {"outlier_threshold", config.solve.outlier_threshold_log},
                      {"outlier_rejection", config.reject_outliers},
                      {"connectivity", to_string(config.build.connectivity)},
                      {"estimator", o.estimator},
                      {"threads", config.build.threads}};
  write_text(o.out, report.dump(2) + "\n");

  out << std::fixed << std::setprecision(6);
  out << "exposure  file  exif_d  estimated_d  correction\n";
  for (Index i = 0; i < stack.size(); ++i)
    out << i << "  " << stack.name(i) << "  " << std::exp(est.e0(i)) << "  " << std::exp(est.e_hat(i)) << "  "
        << std::exp(est.e_hat(i) - est.e0(i)) << '\n';
  out << "tiles kept " << result.kept_tiles.size() << ", rejected " << result.rejected_tiles.size() << '\n';
  out << "report written to " << o.out << '\n';
  if (result.fell_back_to_prior) {
    out << "every tile was rejected as an outlier; the metadata prior was kept\n";
    return kAllTilesRejected;
  }
  return kSuccess;
}

Eigen::VectorXd estimate_from_report(const ExposureStack& stack, const fs::path& path) {
  const json report = read_json(path);
  if (!report.contains("files") || !report.contains("e_hat"))
    throw DataError("estimate report '" + path.string() + "' lacks files or e_hat");
  const auto files = report.at("files").get<std::vector<std::string>>();
  const auto e_hat = report.at("e_hat").get<std::vector<double>>();
  if (files.size() != e_hat.size() || static_cast<Index>(files.size()) != stack.size())
    throw ShapeMismatch("estimate report covers " + std::to_string(files.size()) + " images, stack has " +
                        std::to_string(stack.size()));
  Eigen::VectorXd out(stack.size());
  for (Index i = 0; i < stack.size(); ++i) {
    const fs::path name(stack.name(i));
    std::optional<std::size_t> hit;
    for (std::size_t k = 0; k < files.size() && !hit; ++k)
      if (files[k] == stack.name(i)) hit = k;
    for (std::size_t k = 0; k < files.size() && !hit; ++k)
      if (fs::path(files[k]).filename() == name.filename()) hit = k;
    if (!hit) throw DataError("estimate report has no entry for '" + stack.name(i) + "'");
    out(i) = e_hat[*hit];
  }
  return out;
}

int cmd_merge(const MergeOptions& o, std::ostream& out) {
  if (o.estimate.empty() == !o.use_exif)
    throw UsageError("merge needs exactly one of --estimate <report.json> or --use-exif");
  const ValidRange range = parse_valid_range(o.common.valid_range);
  const ExposureStack stack = o.common.load();
  const std::optional<NoiseParameters> noise = o.common.noise(stack);
  const MergeMode mode = o.mode.empty() ? (noise ? MergeMode::inverse_variance : MergeMode::mean)
                                        : parse_merge_mode(o.mode);
  if (mode == MergeMode::inverse_variance && !noise)
    throw UsageError("--mode inverse-variance requires --noise-profile");

  ExposureEstimate est;
  est.e0 = stack.log_priors();
  est.e_hat = o.use_exif ? est.e0 : estimate_from_report(stack, o.estimate);
  const MergeResult merged = merge(stack, est, mode, noise, range);

  const fs::path out_path(o.out);
  fs::path mask_path(o.mask);
  if (o.mask.empty()) mask_path = fs::path(out_path).replace_extension(".saturation.pgm");
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  write_pfm(out_path, merged.radiance.cast<float>());
  write_pgm_mask(mask_path, merged.saturated);

  Index saturated = 0;
  for (Index p = 0; p < merged.saturated.size(); ++p) saturated += merged.saturated.data()(p) ? 1 : 0;
  out << "merged " << stack.size() << " exposures (" << to_string(mode) << ", "
      << (o.use_exif ? "metadata exposures" : "estimated exposures") << ") into " << out_path.string() << '\n';
  out << saturated << " saturated pixels, mask written to " << mask_path.string() << '\n';
  return kSuccess;
}

ImageD simulate_scene(const SimulateOptions& o) {
  if (o.width < 1 || o.height < 1) throw UsageError("--width and --height must be positive");
  if (o.scene.rfind("gradient", 0) == 0) {
    int stops = 0;
    try {
      stops = std::stoi(o.scene.substr(8));
    } catch (const std::exception&) {
      throw UsageError("gradient scene needs a stop count, e.g. gradient13");
    }
    if (stops < 1 || stops > 40) throw UsageError("gradient stops must be in 1..40");
    return gradient_scene(stops, o.width, o.height, o.radiance_scale.value_or(std::ldexp(1.0, -stops)));
  }
  if (o.scene.rfind("scene", 0) == 0 && o.scene.size() > 5 && std::isdigit(static_cast<unsigned char>(o.scene[5]))) {
    const int index = std::stoi(o.scene.substr(5));
    if (index < 0 || index >= kProceduralSceneCount)
      throw UsageError("procedural scenes are scene0 .. scene" + std::to_string(kProceduralSceneCount - 1));
    ImageD scene = procedural_scene(index, o.height, o.width);
    if (o.radiance_scale) scene.data() *= *o.radiance_scale;
    return scene;
  }
  ImageD scene = read_pfm(o.scene).cast<double>();
  if (o.radiance_scale) scene.data() *= *o.radiance_scale;
  return scene;
}

int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  SimConfig config;
  config.exposure_times = o.times;
  config.iso = o.iso;
  config.bit_depth = o.bit_depth;
  config.seed = o.seed;
  config.corruption_rel_std = o.corruption;
  config.validate();
  const CorruptionModel model =
      o.corruption_model == "log-scaled" ? CorruptionModel::log_scaled : CorruptionModel::relative;

  const NoiseProfile profile = resolve_noise_profile(o.noise_profile);
  const NoiseParameters& params = profile.at_iso(o.iso);
  const ImageD scene = simulate_scene(o);

  const auto n = static_cast<Index>(o.times.size());
  Eigen::VectorXd e_true(n);
  for (Index i = 0; i < n; ++i) e_true(i) = std::log(o.times[static_cast<std::size_t>(i)]);
  const std::optional<Index> pinned = model == CorruptionModel::relative ? std::optional<Index>(n - 1) : std::nullopt;
  const Eigen::VectorXd log_errors =
      corrupt_exposures(e_true, o.corruption, derive_key(o.seed, ~std::uint64_t{0}), model, pinned) - e_true;
  const SimulatedStack sim = simulate_stack(scene, config, params, log_errors, o.noiseless);

  const fs::path dir(o.out);
  fs::create_directories(dir);
  std::vector<CaptureMetadata> metadata;
  json files = json::array();
  for (Index i = 0; i < sim.stack.size(); ++i) {
    std::ostringstream name;
    name << "exposure_" << std::setw(2) << std::setfill('0') << i << ".pfm";
    write_pfm(dir / name.str(), sim.stack.image(i));
    metadata.push_back(sim.stack.metadata(i));
    files.push_back(name.str());
  }
  write_metadata_json(dir / "meta.json", metadata);

  json truth{{"scene", o.scene},
             {"files", files},
             {"iso", o.iso},
             {"seed", o.seed},
             {"bit_depth", o.bit_depth},
             {"noise_profile", profile.name},
             {"noiseless", o.noiseless},
             {"corruption_rel_std", o.corruption},
             {"corruption_model", o.corruption_model},
             {"e_true", to_json(sim.e_true)},
             {"e_exif", to_json(sim.e_exif)}};
  write_text(dir / "truth.json", truth.dump(2) + "\n");
  out << "wrote " << sim.stack.size() << " exposures of " << scene.height() << 'x' << scene.width() << 'x'
      << scene.channels() << " to " << dir.string() << '\n';
  return kSuccess;
}

int cmd_evaluate(const EvaluateOptions& o, std::ostream& out) {
  if (o.scenes < 1 || o.scenes > kProceduralSceneCount)
    throw UsageError("--scenes must be in 1.." + std::to_string(kProceduralSceneCount));
  if (o.size < 16) throw UsageError("--size must be at least 16");
  if (o.seeds < 1) throw UsageError("--seeds must be positive");

  EvalConfig config;
  config.sim.seed = o.seed;
  config.sim.corruption_rel_std = o.corruption;
  config.isos = o.isos;
  config.seeds = o.seeds;
  config.profile = resolve_noise_profile(o.noise_profile);
  if (!o.methods.empty()) {
    config.methods.clear();
    for (const std::string& m : o.methods) config.methods.push_back(parse_method(m));
  }
  config.wls_weights = parse_weight_mode(o.weights);
  config.tile_size = o.tile;
  config.k = o.k;
  config.range = parse_valid_range(o.valid_range);
  config.solve.lambda = o.lambda;
  config.solve.outlier_threshold_log = o.outlier_threshold;
  config.reject_outliers = !o.no_outlier_rejection;
  config.threads = o.threads;

  std::vector<ImageD> scenes;
  for (int s = 0; s < o.scenes; ++s) scenes.push_back(procedural_scene(s, o.size, o.size));
  const EvalReport report = run_experiment(scenes, config);

  const fs::path dir(o.out);
  write_text(dir / "report.json", report_to_json(report) + "\n");
  write_text(dir / "report.csv", report_to_csv(report));
  write_text(dir / "report.dat", report_to_gnuplot(report));
  out << report_to_csv(report);
  out << "reports written to " << dir.string() << '\n';
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exposure ratio estimation and HDR merging for multi-exposure stacks", "hdrexp"};
  app.require_subcommand(1);

  EstimateOptions est;
  auto* estimate = app.add_subcommand("estimate", "Estimate exposure constants from an aligned stack");
  est.common.add(estimate);
  estimate->add_option("--weights", est.weights, "Row weights")
      ->check(CLI::IsMember({"uniform", "calibration-free", "calibrated"}))
      ->capture_default_str();
  estimate->add_option("--connectivity", est.connectivity, "Spanning tree edges")
      ->check(CLI::IsMember({"greedy", "pairwise"}))
      ->capture_default_str();
  estimate->add_option("--estimator", est.estimator, "wls or the mean-ratio baseline")
      ->check(CLI::IsMember({"wls", "baseline"}))
      ->capture_default_str();
  estimate->add_option("--lambda", est.lambda, "Prior strength")->check(CLI::NonNegativeNumber)->capture_default_str();
  estimate->add_option("--tile", est.tile, "Tile size in pixels")->check(CLI::PositiveNumber)->capture_default_str();
  estimate->add_option("--k", est.k, "Spanning trees per tile")->check(CLI::PositiveNumber)->capture_default_str();
  estimate->add_option("--outlier-threshold", est.outlier_threshold, "Max per-tile |e - e0| (natural log)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  estimate->add_flag("--no-outlier-rejection", est.no_outlier_rejection, "Keep every tile");
  estimate->add_option("--out", est.out, "Report JSON path")->capture_default_str();

  MergeOptions mrg;
  auto* merge_cmd = app.add_subcommand("merge", "Merge a stack into a radiance map");
  mrg.common.add(merge_cmd);
  merge_cmd->add_option("--estimate", mrg.estimate, "Estimate report JSON");
  merge_cmd->add_flag("--use-exif", mrg.use_exif, "Use the metadata exposures instead of an estimate");
  merge_cmd->add_option("--mode", mrg.mode, "mean or inverse-variance (default: inverse-variance with a noise profile)")
      ->check(CLI::IsMember({"mean", "inverse-variance"}));
  merge_cmd->add_option("--out", mrg.out, "Output PFM")->capture_default_str();
  merge_cmd->add_option("--mask", mrg.mask, "Saturation mask PGM (default: next to --out)");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Render a noisy stack with corrupted metadata");
  simulate->add_option("--scene", sim.scene, "gradient<stops>, scene0..scene9 or a radiance PFM")
      ->capture_default_str();
  simulate->add_option("--width", sim.width, "Width of generated scenes")->capture_default_str();
  simulate->add_option("--height", sim.height, "Height of generated scenes")->capture_default_str();
  simulate->add_option("--radiance-scale", sim.radiance_scale, "Multiplier applied to scene radiance");
  simulate->add_option("--times", sim.times, "True exposure times")->delimiter(',');
  simulate->add_option("--iso", sim.iso, "ISO (selects the noise profile entry)")->capture_default_str();
  simulate->add_option("--bit-depth", sim.bit_depth, "Quantisation bits")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  simulate->add_option("--corruption", sim.corruption, "Metadata error std")->capture_default_str();
  simulate->add_option("--corruption-model", sim.corruption_model, "relative or log-scaled")
      ->check(CLI::IsMember({"relative", "log-scaled"}))
      ->capture_default_str();
  simulate->add_option("--noise-profile", sim.noise_profile, "Profile name or JSON")->capture_default_str();
  simulate->add_flag("--noiseless", sim.noiseless, "Skip sensor noise (quantisation only)");
  simulate->add_option("--out", sim.out, "Output directory")->capture_default_str();

  EvaluateOptions ev;
  auto* evaluate = app.add_subcommand("evaluate", "Compare estimators on simulated stacks");
  evaluate->add_option("--isos", ev.isos, "ISO settings")->delimiter(',');
  evaluate->add_option("--seeds", ev.seeds, "Seeds per scene and ISO")->capture_default_str();
  evaluate->add_option("--scenes", ev.scenes, "Number of procedural scenes")->capture_default_str();
  evaluate->add_option("--size", ev.size, "Scene width and height")->capture_default_str();
  evaluate->add_option("--methods", ev.methods, "Subset of methods")->delimiter(',');
  evaluate->add_option("--noise-profile", ev.noise_profile, "Profile name or JSON")->capture_default_str();
  evaluate->add_option("--weights", ev.weights, "WLS row weights")
      ->check(CLI::IsMember({"uniform", "calibration-free", "calibrated"}))
      ->capture_default_str();
  evaluate->add_option("--lambda", ev.lambda, "Prior strength")->check(CLI::NonNegativeNumber)->capture_default_str();
  evaluate->add_option("--tile", ev.tile, "Tile size")->check(CLI::PositiveNumber)->capture_default_str();
  evaluate->add_option("--k", ev.k, "Spanning trees per tile")->check(CLI::PositiveNumber)->capture_default_str();
  evaluate->add_option("--valid-range", ev.valid_range, "lo:hi")->capture_default_str();
  evaluate->add_option("--outlier-threshold", ev.outlier_threshold, "Max per-tile |e - e0|")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  evaluate->add_flag("--no-outlier-rejection", ev.no_outlier_rejection, "Keep every tile");
  evaluate->add_option("--corruption", ev.corruption, "Metadata error std")->capture_default_str();
  evaluate->add_option("--seed", ev.seed, "Base seed")->capture_default_str();
  evaluate->add_option("--threads", ev.threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  evaluate->add_option("--out", ev.out, "Output directory")->capture_default_str();

  try {
    std::vector<std::string> args = apply_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
    if (estimate->parsed()) return cmd_estimate(est, out);
    if (merge_cmd->parsed()) return cmd_merge(mrg, out);
    if (simulate->parsed()) return cmd_simulate(sim, out);
    return cmd_evaluate(ev, out);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const UnsolvableSystem& e) {
    err << "unsolvable system: " << e.what() << '\n';
    return kUnsolvable;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataContract;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kDataContract;
  } catch (const json::exception& e) {
    err << "error: malformed JSON value: " << e.what() << '\n';
    return kDataContract;
  }
}

}  // namespace hdrexp::cli
