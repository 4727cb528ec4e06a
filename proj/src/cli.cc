#include "dpcd/cli.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "dpcd/geometry.h"
#include "dpcd/io.h"
#include "dpcd/m2m.h"
#include "dpcd/metrics.h"
#include "dpcd/optimizer.h"
#include "dpcd/synthetic.h"

namespace dpcd {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

fs::path numbered(const fs::path& dir, const std::string& stem, std::size_t i) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%03zu.ply", stem.c_str(), i);
  return dir / buf;
}

std::string format_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

json metric_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json config_json(const DenoiseConfig& c) {
  std::ostringstream os;
  write_config(c, os);
  json j = json::object();
  std::istringstream is(os.str());
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) j[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return j;
}

std::vector<Frame> read_frames(const std::vector<std::string>& paths) {
  std::vector<Frame> frames;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    Frame f = read_point_cloud(paths[i]);
    f.frame_index = i;
    f.validate();
    frames.push_back(std::move(f));
  }
  return frames;
}

DenoiseConfig load_config(const std::string& config_path,
                          const std::vector<std::string>& overrides) {
  DenoiseConfig config;
  if (!config_path.empty()) config = read_config(config_path);
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw PreconditionError("--set expects key=value, got '" + kv + "'");
    }
    apply_config_value(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  config.validate();
  return config;
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Temporally consistent denoising of dynamic point clouds"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a clean synthetic sequence");
  std::string kind = "sinusoid-sheet";
  SyntheticSpec spec;
  std::string synth_dir;
  synth->add_option("--kind", kind, "plane | sphere-cap | sinusoid-sheet")->capture_default_str();
  synth->add_option("--points", spec.points, "Points per frame")->capture_default_str();
  synth->add_option("--frames", spec.frames, "Frame count")->capture_default_str();
  synth->add_option("--amplitude", spec.amplitude, "Deformation amplitude")->capture_default_str();
  synth->add_option("--phase-step", spec.phase_step, "Deformation phase per frame")->capture_default_str();
  synth->add_option("--height", spec.height, "Sinusoid sheet relief")->capture_default_str();
  synth->add_option("--frequency", spec.frequency, "Sinusoid frequency")->capture_default_str();
  synth->add_option("--seed", spec.seed, "Sampling seed")->capture_default_str();
  synth->add_option("--out-dir", synth_dir, "Output directory")->required();

  // noise
  auto* noise = app.add_subcommand("noise", "Add Gaussian noise to frames");
  std::vector<std::string> noise_inputs;
  double sigma = -1.0;
  double sigma_fraction = -1.0;
  std::uint64_t noise_seed = 1;
  std::string noise_dir;
  noise->add_option("inputs", noise_inputs, "Clean frames")->required();
  auto* sigma_opt = noise->add_option("--sigma", sigma, "Absolute standard deviation");
  noise->add_option("--sigma-fraction", sigma_fraction,
                    "Standard deviation as a fraction of each frame's bounding-box diagonal")
      ->excludes(sigma_opt);
  noise->add_option("--seed", noise_seed, "Noise seed (frame i uses seed + i)")->capture_default_str();
  noise->add_option("--out-dir", noise_dir, "Output directory")->required();

  // denoise
  auto* denoise = app.add_subcommand("denoise", "Denoise a sequence of frames");
  std::vector<std::string> denoise_inputs;
  std::string config_path;
  std::vector<std::string> overrides;
  std::string denoise_dir;
  denoise->add_option("inputs", denoise_inputs, "Noisy frames in temporal order")->required();
  denoise->add_option("--config", config_path, "key = value configuration file");
  denoise->add_option("--set", overrides, "Override a config key (key=value)");
  denoise->add_option("--out-dir", denoise_dir, "Output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Compare test frames with clean frames");
  std::vector<std::string> clean_paths;
  std::vector<std::string> test_paths;
  std::string csv_path;
  std::string manifest_path;
  double peak = kGpsnrPeak;
  eval->add_option("--clean", clean_paths, "Clean frames with normals")->required();
  eval->add_option("--test", test_paths, "Frames to evaluate")->required();
  eval->add_option("--csv", csv_path, "CSV output (default: stdout)");
  eval->add_option("--manifest", manifest_path, "JSON report");
  eval->add_option("--peak", peak, "GPSNR peak value")->capture_default_str();

  // match
  auto* match = app.add_subcommand("match", "Dump temporal patch matches as CSV");
  std::string prev_path;
  std::string cur_path;
  std::string match_config;
  std::vector<std::string> match_overrides;
  std::string match_csv;
  match->add_option("previous", prev_path, "Reference (previous, denoised) frame")->required();
  match->add_option("current", cur_path, "Current frame")->required();
  match->add_option("--config", match_config, "key = value configuration file");
  match->add_option("--set", match_overrides, "Override a config key (key=value)");
  match->add_option("--csv", match_csv, "CSV output (default: stdout)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*synth) {
      spec.kind = parse_surface_kind(kind);
      fs::create_directories(synth_dir);
      const Sequence seq = generate_sequence(spec);
      for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        const fs::path p = numbered(synth_dir, "clean", i);
        write_point_cloud(seq.frames[i], p);
        out << p.string() << '\n';
      }
      return kExitOk;
    }

    if (*noise) {
      if (sigma < 0.0 && sigma_fraction < 0.0) {
        err << "error: one of --sigma or --sigma-fraction is required\n";
        return kExitUsage;
      }
      fs::create_directories(noise_dir);
      const auto frames = read_frames(noise_inputs);
      for (std::size_t i = 0; i < frames.size(); ++i) {
        const double s = sigma >= 0.0 ? sigma : sigma_fraction * bounding_box_diagonal(frames[i]);
        const Frame noisy = add_gaussian_noise(frames[i], s, noise_seed + i);
        const fs::path p = numbered(noise_dir, "noisy", i);
        write_point_cloud(noisy, p);
        out << p.string() << '\n';
      }
      return kExitOk;
    }

    if (*denoise) {
      const DenoiseConfig config = load_config(config_path, overrides);
      fs::create_directories(denoise_dir);
      const auto start = Clock::now();
      Sequence noisy;
      noisy.frames = read_frames(denoise_inputs);

      json manifest;
      manifest["command"] = "denoise";
      manifest["config"] = config_json(config);
      manifest["inputs"] = denoise_inputs;
      manifest["seeds"] = {{"fps", config.seed}};
      json frames = json::array();
      std::optional<MatchReference> reference;
      std::vector<std::string> outputs;
      for (const Frame& frame : noisy.frames) {
        const auto t0 = Clock::now();
        FrameResult fr = denoise_frame(frame, reference ? &*reference : nullptr, config);
        if (config.lambda1 > 0.0) reference.emplace(prepare_reference(fr.output, config));
        const fs::path p = numbered(denoise_dir, "denoised", frame.frame_index);
        write_point_cloud(fr.output, p);
        outputs.push_back(p.string());
        json iters = json::array();
        for (const auto& rec : fr.trace) {
          iters.push_back({{"fidelity", rec.objective.fidelity},
                           {"temporal", rec.objective.temporal},
                           {"spatial", rec.objective.spatial},
                           {"total", rec.objective.total},
                           {"accepted", rec.accepted},
                           {"trace_R", rec.trace_r},
                           {"trace_M", rec.trace_m},
                           {"patches", rec.patch_count},
                           {"spatial_edges", rec.spatial_edges},
                           {"degenerate_normals", rec.degenerate_normals}});
        }
        frames.push_back({{"frame_index", frame.frame_index},
                          {"output", p.string()},
                          {"best_iteration", fr.best_iteration},
                          {"objective_trace", iters},
                          {"seconds", seconds_since(t0)}});
        out << p.string() << '\n';
      }
      manifest["outputs"] = outputs;
      manifest["frames"] = frames;
      manifest["wall_seconds"] = seconds_since(start);
      {
        std::ofstream cfg(fs::path(denoise_dir) / "config.txt");
        write_config(config, cfg);
      }
      write_json(manifest, fs::path(denoise_dir) / "manifest.json");
      return kExitOk;
    }

    if (*eval) {
      if (clean_paths.size() != test_paths.size()) {
        err << "error: --clean and --test need the same number of frames\n";
        return kExitUsage;
      }
      const auto clean = read_frames(clean_paths);
      const auto test = read_frames(test_paths);
      std::ostringstream csv;
      csv << "frame,mse_nn,mse_index,gpsnr_db\n";
      json rows = json::array();
      for (std::size_t i = 0; i < clean.size(); ++i) {
        if (!clean[i].normals) {
          throw PreconditionError("clean frame '" + clean_paths[i] + "' has no normals");
        }
        const FrameMetrics m = evaluate_frame(test[i], clean[i], peak);
        csv << i << ',' << format_metric(m.mse_nn) << ','
            << (m.mse_index ? format_metric(*m.mse_index) : std::string("nan")) << ','
            << format_metric(m.gpsnr_db) << '\n';
        rows.push_back({{"frame", i},
                        {"clean", clean_paths[i]},
                        {"test", test_paths[i]},
                        {"mse_nn", m.mse_nn},
                        {"mse_index", m.mse_index ? json(*m.mse_index) : json(nullptr)},
                        {"gpsnr_db", metric_json(m.gpsnr_db)}});
      }
      if (csv_path.empty()) {
        out << csv.str();
      } else {
        std::ofstream f(csv_path);
        if (!f) throw std::runtime_error("cannot open '" + csv_path + "' for writing");
        f << csv.str();
      }
      if (!manifest_path.empty()) {
        write_json({{"command", "eval"},
                    {"peak", peak},
                    {"gpsnr_symmetrization", "max of directional MSE"},
                    {"frames", rows}},
                   manifest_path);
      }
      return kExitOk;
    }

    if (*match) {
      const DenoiseConfig config = load_config(match_config, match_overrides);
      Frame prev = read_point_cloud(prev_path);
      prev.validate();
      Frame cur = read_point_cloud(cur_path);
      cur.validate();
      const MatchReference reference = prepare_reference(prev, config);
      const Frame cur_n = estimate_normals(
          cur, static_cast<int>(std::min<Index>(config.k_normal, cur.size() - 1)));
      const Index k = std::min<Index>(config.K, cur.size() - 1);
      const Index m = std::clamp<Index>(
          static_cast<Index>(std::llround(config.M.resolve(static_cast<double>(cur.size())))),
          1, cur.size());
      const PatchSet patches = build_patches(cur_n, m, k, config.seed);
      const auto desc = describe_patches(patches, cur_n, config.c, config.threads);
      std::ostringstream csv;
      csv << "target_patch,matched_patch,distance,target_center,matched_center\n";
      for (Index l = 0; l < patches.patch_count(); ++l) {
        const Vec3 center = cur_n.position(patches.patches[l].center_index);
        const TemporalMatch tm =
            temporal_match(l, desc[l], center, reference, config.xi, config.alpha);
        csv << l << ',' << tm.matched_patch << ',' << format_metric(tm.distance) << ','
            << patches.patches[l].center_index << ','
            << reference.patches().patches[tm.matched_patch].center_index << '\n';
      }
      if (match_csv.empty()) {
        out << csv.str();
      } else {
        std::ofstream f(match_csv);
        if (!f) throw std::runtime_error("cannot open '" + match_csv + "' for writing");
        f << csv.str();
      }
      return kExitOk;
    }
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace dpcd
