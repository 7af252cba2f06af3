#include "hdrexp/eval.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "hdrexp/parallel.hpp"
#include "hdrexp/rng.hpp"

namespace hdrexp {

double relative_rmse(const Eigen::VectorXd& e_hat, const Eigen::VectorXd& e_true, std::optional<Index> gauge) {
  if (e_hat.size() != e_true.size()) throw ShapeMismatch("relative_rmse: length mismatch");
  const Index n = e_hat.size();
  if (n < 2) throw ShapeMismatch("relative_rmse needs at least two exposures");
  const Index g = gauge.value_or(n - 1);
  if (g < 0 || g >= n) throw DomainError("gauge exposure out of range");
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (i == g) continue;
    const double err = std::expm1((e_hat(i) - e_hat(g)) - (e_true(i) - e_true(g)));
    sum += err * err;
  }
  return 100.0 * std::sqrt(sum / static_cast<double>(n - 1));
}

std::string to_string(Method method) {
  switch (method) {
    case Method::exif_corrupted: return "exif-corrupted";
    case Method::baseline: return "baseline";
    case Method::btf_external: return "btf-external";
    case Method::pairwise_wls: return "pairwise-wls";
    case Method::greedy_mst_wls: return "greedy-mst-wls";
  }
  return "?";
}

Method parse_method(const std::string& text) {
  for (Method m : all_methods())
    if (to_string(m) == text) return m;
  throw DataError("unknown method '" + text + "'");
}

std::vector<Method> all_methods() {
  return {Method::exif_corrupted, Method::baseline, Method::btf_external, Method::pairwise_wls,
          Method::greedy_mst_wls};
}

const MethodSummary& EvalReport::summary(int iso, Method method) const {
  for (const IsoSummary& s : per_iso) {
    if (s.iso != iso) continue;
    for (const MethodSummary& m : s.methods)
      if (m.method == method) return m;
  }
  throw DataError("no summary for ISO " + std::to_string(iso) + " / " + to_string(method));
}

double EvalReport::overall_mean(Method method) const {
  double sum = 0.0;
  Index count = 0;
  for (const RunRecord& r : runs) {
    if (r.method != method || !r.error.empty()) continue;
    sum += r.rmse;
    ++count;
  }
  return count == 0 ? std::nan("") : sum / static_cast<double>(count);
}

namespace {

Eigen::VectorXd run_method(Method method, const SimulatedStack& sim, const EvalConfig& config,
                           const NoiseParameters& params) {
  if (method == Method::exif_corrupted) return sim.e_exif;

  EstimateConfig est;
  est.build.tile_size = config.tile_size;
  est.build.k = config.k;
  est.build.range = config.range;
  est.build.threads = 1;
  est.solve = config.solve;
  est.reject_outliers = config.reject_outliers;
  if (method == Method::baseline) {
    est.estimator = Estimator::ratio_baseline;
    est.build.weight_mode = WeightMode::uniform;
  } else {
    est.build.weight_mode = config.wls_weights;
    est.build.noise = params;
    est.build.connectivity = method == Method::pairwise_wls ? Connectivity::pairwise : Connectivity::greedy;
  }
  return estimate_exposures(sim.stack, est).estimate.e_hat;
}

}  // namespace

EvalReport run_experiment(std::span<const ImageD> scenes, const EvalConfig& config) {
  if (scenes.empty()) throw DataError("run_experiment needs at least one scene");
  if (config.seeds < 1) throw DataError("run_experiment needs at least one seed");
  config.sim.validate();
  for (int iso : config.isos) (void)config.profile.at_iso(iso);

  const auto n_scenes = static_cast<int>(scenes.size());
  const auto n_isos = static_cast<int>(config.isos.size());
  const auto n_methods = static_cast<int>(config.methods.size());
  const Index cells = static_cast<Index>(n_scenes) * config.seeds * n_isos;

  std::vector<RunRecord> records(static_cast<std::size_t>(cells * n_methods));
  const auto n_exp = static_cast<Index>(config.sim.exposure_times.size());

  parallel_for(cells, config.threads, [&](Index cell) {
    const int iso_idx = static_cast<int>(cell % n_isos);
    const int seed = static_cast<int>((cell / n_isos) % config.seeds);
    const int scene = static_cast<int>(cell / (static_cast<Index>(n_isos) * config.seeds));
    const int iso = config.isos[static_cast<std::size_t>(iso_idx)];

    // Corruption depends on (scene, seed) only, so every ISO sees the same metadata errors.
    const std::uint64_t run_key = derive_key(config.sim.seed, static_cast<std::uint64_t>(scene) * 100003u + seed);
    const Eigen::VectorXd log_errors = corrupt_exposures(Eigen::VectorXd::Zero(n_exp), config.sim.corruption_rel_std,
                                                         run_key, CorruptionModel::relative, n_exp - 1);
    SimConfig sim_cfg = config.sim;
    sim_cfg.iso = iso;
    sim_cfg.seed = derive_key(run_key, static_cast<std::uint64_t>(iso));
    const NoiseParameters& params = config.profile.at_iso(iso);

    std::optional<SimulatedStack> sim;
    std::string sim_error;
    try {
      sim = simulate_stack(scenes[static_cast<std::size_t>(scene)], sim_cfg, params, log_errors);
    } catch (const std::exception& e) {
      sim_error = e.what();
    }

    for (int m = 0; m < n_methods; ++m) {
      RunRecord& rec = records[static_cast<std::size_t>(cell * n_methods + m)];
      rec.scene = scene;
      rec.seed = seed;
      rec.iso = iso;
      rec.method = config.methods[static_cast<std::size_t>(m)];
      if (rec.method == Method::btf_external) {
        rec.error = "not implemented";
        continue;
      }
      if (!sim) {
        rec.error = sim_error;
        continue;
      }
      const auto start = std::chrono::steady_clock::now();
      try {
        const Eigen::VectorXd e_hat = run_method(rec.method, *sim, config, params);
        rec.rmse = relative_rmse(e_hat, sim->e_true);
      } catch (const std::exception& e) {
        rec.error = e.what();
      }
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
  });

  EvalReport report;
  report.config = config;
  report.scene_count = n_scenes;
  for (int iso : config.isos) {
    IsoSummary s{iso, {}};
    for (Method method : config.methods) {
      MethodSummary ms;
      ms.method = method;
      ms.implemented = method != Method::btf_external;
      double sum = 0.0, sum_sq = 0.0, secs = 0.0;
      for (const RunRecord& r : records) {
        if (r.iso != iso || r.method != method || !r.error.empty()) continue;
        sum += r.rmse;
        sum_sq += r.rmse * r.rmse;
        secs += r.seconds;
        ++ms.runs;
      }
      if (ms.runs > 0) {
        const auto cnt = static_cast<double>(ms.runs);
        ms.mean_rmse = sum / cnt;
        ms.mean_seconds = secs / cnt;
        const double var = ms.runs > 1 ? std::max(0.0, (sum_sq - cnt * ms.mean_rmse * ms.mean_rmse) / (cnt - 1.0)) : 0.0;
        ms.ci95 = 1.96 * std::sqrt(var / cnt);
      }
      s.methods.push_back(ms);
    }
    report.per_iso.push_back(std::move(s));
  }
  report.runs = std::move(records);
  return report;
}

std::string report_to_json(const EvalReport& report) {
  using nlohmann::json;
  const EvalConfig& c = report.config;
  json doc;
  doc["config"] = {{"exposure_times", c.sim.exposure_times},
                   {"bit_depth", c.sim.bit_depth},
                   {"corruption_rel_std", c.sim.corruption_rel_std},
                   {"seed", c.sim.seed},
                   {"seeds", c.seeds},
                   {"isos", c.isos},
                   {"noise_profile", c.profile.name},
                   {"wls_weights", to_string(c.wls_weights)},
                   {"tile", c.tile_size},
                   {"k", c.k},
                   {"valid_range", {c.range.lower, c.range.upper}},
                   {"lambda", c.solve.lambda},
                   {"outlier_threshold", c.solve.outlier_threshold_log},
                   {"reject_outliers", c.reject_outliers},
                   {"scenes", report.scene_count}};
  doc["per_iso"] = json::array();
  for (const IsoSummary& s : report.per_iso) {
    json row{{"iso", s.iso}, {"methods", json::array()}};
    for (const MethodSummary& m : s.methods) {
      json entry{{"method", to_string(m.method)}, {"implemented", m.implemented}, {"runs", m.runs}};
      if (m.implemented) {
        entry["mean_rmse_percent"] = m.mean_rmse;
        entry["ci95_percent"] = m.ci95;
        entry["mean_seconds"] = m.mean_seconds;
      } else {
        entry["note"] = "not implemented";
      }
      row["methods"].push_back(entry);
    }
    doc["per_iso"].push_back(row);
  }
  json failures = json::array();
  for (const RunRecord& r : report.runs)
    if (!r.error.empty() && r.method != Method::btf_external)
      failures.push_back({{"scene", r.scene}, {"seed", r.seed}, {"iso", r.iso}, {"method", to_string(r.method)},
                          {"error", r.error}});
  doc["failures"] = failures;
  return doc.dump(2);
}

std::string report_to_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "iso";
  for (Method m : report.config.methods) out << ',' << to_string(m) << "_mean," << to_string(m) << "_ci95";
  out << '\n' << std::setprecision(8);
  for (const IsoSummary& s : report.per_iso) {
    out << s.iso;
    for (const MethodSummary& m : s.methods) {
      if (m.implemented)
        out << ',' << m.mean_rmse << ',' << m.ci95;
      else
        out << ",NA,NA";
    }
    out << '\n';
  }
  return out.str();
}

std::string report_to_gnuplot(const EvalReport& report) {
  std::ostringstream out;
  out << "# iso";
  for (Method m : report.config.methods) out << ' ' << to_string(m) << " ci95";
  out << '\n' << std::setprecision(8);
  for (const IsoSummary& s : report.per_iso) {
    out << s.iso;
    for (const MethodSummary& m : s.methods) {
      if (m.implemented)
        out << ' ' << m.mean_rmse << ' ' << m.ci95;
      else
        out << " NaN NaN";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace hdrexp
