// Copyright 2026 The s2snet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "s2s/eval.hpp"
#include "s2s/grid.hpp"
#include "s2s/harness.hpp"
#include "s2s/s2snet.hpp"
#include "s2s/wire.hpp"

namespace s2s::cli {
namespace {

using nlohmann::json;

enum class Level { kDebug, kInfo, kWarn, kError };

Level level_from_env() {
  const char* v = std::getenv("S2S_LOG_LEVEL");
  if (v == nullptr) return Level::kWarn;
  const std::string s(v);
  if (s == "debug") return Level::kDebug;
  if (s == "info") return Level::kInfo;
  if (s == "error") return Level::kError;
  return Level::kWarn;
}

class Log {
 public:
  Log(std::ostream& err, Level level) : err_(err), level_(level) {}
  void info(const std::string& msg) const { emit(Level::kInfo, "info", msg); }
  void debug(const std::string& msg) const { emit(Level::kDebug, "debug", msg); }
  void set_level(Level l) { level_ = l; }

 private:
  void emit(Level l, const char* tag, const std::string& msg) const {
    if (l >= level_) err_ << "[" << tag << "] " << msg << '\n';
  }
  std::ostream& err_;
  Level level_;
};

// Comma-separated, no spaces: "0.05,0.05,0.10".
std::optional<Eigen::Vector3d> parse_triple(const std::string& s) {
  Eigen::Vector3d v;
  std::size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    const std::size_t end = i < 2 ? s.find(',', pos) : s.size();
    if (end == std::string::npos) return std::nullopt;
    const std::string part = s.substr(pos, end - pos);
    if (part.empty() || part.find(' ') != std::string::npos) return std::nullopt;
    std::size_t used = 0;
    try {
      v[i] = std::stod(part, &used);
    } catch (const std::exception&) {
      return std::nullopt;
    }
    if (used != part.size() || !std::isfinite(v[i])) return std::nullopt;
    pos = end + 1;
  }
  return v;
}

const CLI::Validator kTriple(
    [](std::string& s) -> std::string {
      return parse_triple(s) ? "" : "expected three comma-separated numbers, e.g. 0.05,0.05,0.10";
    },
    "X,Y,Z");

Eigen::Vector3d triple(const std::string& s) { return *parse_triple(s); }

std::string hex64(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

json config_json(const GridConfig& c) {
  return {{"origin", {c.origin.x(), c.origin.y(), c.origin.z()}},
          {"voxel_size", {c.voxel_size.x(), c.voxel_size.y(), c.voxel_size.z()}},
          {"dims", {c.dims.x(), c.dims.y(), c.dims.z()}}};
}

json bev_json(const BevFeatureMap<float>& bev) {
  return {{"nx", bev.nx},
          {"ny", bev.ny},
          {"channels", bev.channels()},
          {"nonzero_cells", (bev.data.array() != 0.0f).rowwise().any().count()},
          {"checksum", hex64(bev_checksum(bev))}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
}

struct GridArgs {
  std::string voxel = "0.05,0.05,0.10";
  std::string extent = "280,80,4";
  std::string origin = "-140,-40,-4";
  bool desk = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--voxel", voxel, "Voxel size in meters")->check(kTriple)->capture_default_str();
    cmd->add_option("--extent", extent, "Grid extent in meters")->check(kTriple)->capture_default_str();
    cmd->add_option("--origin", origin, "Grid minimum corner in meters")
        ->check(kTriple)
        ->capture_default_str();
    cmd->add_flag("--desk", desk, "Use the 64x64x8 desk grid instead");
  }

  GridConfig config() const {
    if (desk) return GridConfig::desk();
    const GridConfig c = GridConfig::from_extent(triple(origin), triple(extent), triple(voxel));
    grid_dims_check(c, triple(extent));
    return c;
  }
};

struct WeightArgs {
  std::string path;
  std::uint64_t seed = kDefaultSeed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--weights", path, "Weight file (S2SW); random weights from --seed if absent")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", seed, "Seed for generated weights")->capture_default_str();
  }

  ModelWeights<float> load() const { return path.empty() ? init_weights(seed) : load_weights(path); }
};

SparseTensor<float> random_tensor(std::mt19937_64& rng, const Dims& dims, std::size_t n, int width) {
  std::vector<Coord> coords;
  coords.reserve(n);
  std::uniform_int_distribution<int> ux(0, dims.x() - 1), uy(0, dims.y() - 1),
      uz(0, dims.z() - 1);
  for (std::size_t i = 0; i < n; ++i) coords.push_back({ux(rng), uy(rng), uz(rng)});
  std::sort(coords.begin(), coords.end());
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
  std::uniform_real_distribution<float> uf(-1.0f, 1.0f);
  SparseTensor<float>::FeatureMatrix f(static_cast<Eigen::Index>(coords.size()), width);
  for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = uf(rng);
  return SparseTensor<float>(dims, std::move(coords), std::move(f));
}

template <typename F>
double time_ms(int repeat, F&& fn) {
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < repeat; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best,
                    std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                        .count());
  }
  return best;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse voxel grid collective perception toolkit", "s2snet"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");
  int threads = 1;
  int verbose = 0;
  app.add_option("--threads", threads, "Cap on worker threads")->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", verbose, "More logging (also S2S_LOG_LEVEL=debug|info|warn|error)");
  Log log(err, level_from_env());

  // voxelize
  auto* vox = app.add_subcommand("voxelize", "Voxelize a point cloud into a wire file");
  std::string vox_in, vox_out;
  GridArgs vox_grid;
  vox->add_option("--in", vox_in, "Point cloud (.xyz text or raw f32 binary)")
      ->required()
      ->check(CLI::ExistingFile);
  vox->add_option("--out", vox_out, "Output wire file")->required();
  vox_grid.attach(vox);

  // inspect
  auto* insp = app.add_subcommand("inspect", "Print statistics of a wire file");
  std::string insp_in;
  insp->add_option("--in", insp_in, "Wire file")->required()->check(CLI::ExistingFile);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run a collective-perception scenario");
  std::string sim_scenario, sim_out;
  WeightArgs sim_weights;
  bool sim_csv = false, sim_bev = false, sim_dump = false, sim_timing = false;
  sim->add_option("--scenario", sim_scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--out-dir", sim_out, "Output directory")->required();
  sim_weights.attach(sim);
  sim->add_flag("--csv", sim_csv, "Also write cavs.csv");
  sim->add_flag("--bev", sim_bev, "Also write bev_<frame>.bin");
  sim->add_flag("--dump", sim_dump, "Also write per-CAV clouds and wire grids");
  sim->add_flag("--timing", sim_timing, "Include wall-clock timings in the report");

  // forward
  auto* fwd = app.add_subcommand("forward", "Run the fused network on wire files");
  std::string fwd_ego, fwd_out;
  std::vector<std::string> fwd_collective;
  WeightArgs fwd_weights;
  bool fwd_local_only = false;
  fwd->add_option("--ego", fwd_ego, "Ego wire file")->required()->check(CLI::ExistingFile);
  fwd->add_option("--collective", fwd_collective, "Shared wire file(s); merged before fusion")
      ->check(CLI::ExistingFile);
  fwd->add_option("--out", fwd_out, "BEV dump (S2SB)")->required();
  fwd_weights.attach(fwd);
  fwd->add_flag("--local-only", fwd_local_only, "Skip fusion entirely");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Per-class average precision");
  std::string ev_dets, ev_gts;
  std::string ev_min = "-140,-40,-4", ev_max = "140,40,1";
  bool ev_json = false, ev_no_range = false;
  ev->add_option("--dets", ev_dets, "Detections JSONL")->required()->check(CLI::ExistingFile);
  ev->add_option("--gts", ev_gts, "Ground truth JSONL")->required()->check(CLI::ExistingFile);
  ev->add_option("--range-min", ev_min, "Evaluation range minimum")->check(kTriple)->capture_default_str();
  ev->add_option("--range-max", ev_max, "Evaluation range maximum")->check(kTriple)->capture_default_str();
  ev->add_flag("--no-range-filter", ev_no_range, "Evaluate every box");
  ev->add_flag("--json", ev_json, "Print JSON instead of a table");

  // bench
  auto* bench = app.add_subcommand("bench", "Time voxelize, scatter and convolution");
  std::vector<std::size_t> bench_sizes{1000, 10000};
  int bench_repeat = 3, bench_channels = 16;
  std::uint64_t bench_seed = kDefaultSeed;
  bench->add_option("--sizes", bench_sizes, "Active voxel counts")->delimiter(',')->capture_default_str();
  bench->add_option("--repeat", bench_repeat, "Repetitions (best is reported)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--channels", bench_channels, "Feature width")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bench_seed, "Seed")->capture_default_str();

  // init-weights
  auto* initw = app.add_subcommand("init-weights", "Write seeded random weights");
  std::string initw_out;
  std::uint64_t initw_seed = kDefaultSeed;
  initw->add_option("--out", initw_out, "Weight file")->required();
  initw->add_option("--seed", initw_seed, "Seed")->capture_default_str();

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
    return 2;
  }
  if (verbose >= 2) {
    log.set_level(Level::kDebug);
  } else if (verbose == 1) {
    log.set_level(Level::kInfo);
  }

  try {
    if (*vox) {
      const GridConfig config = vox_grid.config();
      const PointCloud cloud = load_cloud(vox_in);
      std::size_t dropped = 0;
      const SparseVoxelGrid grid = voxelize(cloud, config, &dropped);
      wire::write_grid(vox_out, grid);
      const auto bw = wire::bandwidth_report(cloud, grid);
      log.info("voxelized " + std::to_string(cloud.size()) + " points");
      out << json{{"points", cloud.size()},
                  {"dropped", dropped},
                  {"voxels", grid.size()},
                  {"grid", config_json(config)},
                  {"raw_bytes", bw.raw_bytes},
                  {"wire_bytes", bw.wire_bytes},
                  {"reduction", std::isfinite(bw.reduction) ? json(bw.reduction) : json(nullptr)}}
                 .dump()
          << '\n';
    } else if (*insp) {
      const SparseVoxelGrid grid = wire::read_grid(insp_in);
      json j = {{"grid", config_json(grid.config())},
                {"count", grid.size()},
                {"bytes", wire::message_size(grid.size())}};
      if (!grid.empty()) {
        Coord lo = grid.coords().front(), hi = lo;
        for (const Coord& c : grid.coords()) {
          lo = {std::min(lo.x, c.x), std::min(lo.y, c.y), std::min(lo.z, c.z)};
          hi = {std::max(hi.x, c.x), std::max(hi.y, c.y), std::max(hi.z, c.z)};
        }
        j["min_coord"] = {lo.x, lo.y, lo.z};
        j["max_coord"] = {hi.x, hi.y, hi.z};
      }
      out << j.dump() << '\n';
    } else if (*sim) {
      const Scenario scenario = load_scenario(sim_scenario);
      const auto weights = sim_weights.load();
      RunOptions opts;
      opts.threads = threads;
      opts.keep_data = sim_dump;
      const ScenarioReport report = run_scenario(scenario, weights, opts);
      const std::filesystem::path dir(sim_out);
      std::filesystem::create_directories(dir);
      write_text(dir / "report.json", report_to_json(report, sim_timing).dump(2) + "\n");
      if (sim_csv) write_text(dir / "cavs.csv", report_to_csv(report));
      for (const auto& f : report.frames) {
        const std::string tag = std::to_string(f.frame);
        if (sim_bev) write_bev((dir / ("bev_" + tag + ".bin")).string(), f.bev);
        for (const auto& [id, cloud] : f.clouds) {
          save_raw((dir / (tag + "_" + id + ".cloud.bin")).string(), cloud);
        }
        for (const auto& [id, grid] : f.grids) {
          wire::write_grid((dir / (tag + "_" + id + ".grid.bin")).string(), grid);
        }
      }
      out << json{{"frames", report.frames.size()},
                  {"cavs", report.assignment.size()},
                  {"report", (dir / "report.json").string()}}
                 .dump()
          << '\n';
    } else if (*fwd) {
      const SparseVoxelGrid ego = wire::read_grid(fwd_ego);
      std::vector<SparseVoxelGrid> shared;
      for (const auto& p : fwd_collective) shared.push_back(wire::read_grid(p));
      const SparseVoxelGrid collective =
          shared.empty() ? SparseVoxelGrid(ego.config()) : merge_grids(shared);
      const auto weights = fwd_weights.load();
      const auto bev =
          fwd_local_only ? forward_local_only(ego, weights) : forward(ego, collective, weights);
      write_bev(fwd_out, bev);
      out << json{{"ego_voxels", ego.size()},
                  {"collective_voxels", collective.size()},
                  {"bev", bev_json(bev)}}
                 .dump()
          << '\n';
    } else if (*ev) {
      auto dets = load_box_jsonl(ev_dets);
      auto gts = load_box_jsonl(ev_gts);
      if (!ev_no_range) {
        EvalRange range{triple(ev_min), triple(ev_max)};
        range.validate();
        for (auto* frames : {&dets, &gts}) {
          for (auto& f : *frames) f.boxes = filter_range(f.boxes, range);
        }
      }
      json rows = json::array();
      std::ostringstream table;
      table << std::left << std::setw(12) << "class" << std::setw(6) << "iou" << std::setw(8)
            << "gts" << std::setw(8) << "dets" << "AP\n";
      for (ObjectClass cls : kAllClasses) {
        const double thr = iou_threshold(cls);
        const ApResult ap = average_precision(dets, gts, cls, thr);
        rows.push_back({{"class", class_name(cls)},
                        {"iou_threshold", thr},
                        {"num_gt", ap.num_gt},
                        {"num_det", ap.num_det},
                        {"defined", ap.defined},
                        {"ap", ap.defined ? json(ap.value) : json(nullptr)}});
        std::ostringstream val;
        if (ap.defined) {
          val << std::fixed << std::setprecision(4) << ap.value;
        } else {
          val << "nan (no ground truth)";
        }
        table << std::setw(12) << class_name(cls) << std::setw(6) << thr << std::setw(8)
              << ap.num_gt << std::setw(8) << ap.num_det << val.str() << '\n';
      }
      out << (ev_json ? json{{"classes", rows}}.dump(2) + "\n" : table.str());
    } else if (*bench) {
      std::mt19937_64 rng(bench_seed);
      json rows = json::array();
      for (std::size_t n : bench_sizes) {
        // Dims chosen so roughly n sites fill a few percent of the volume.
        const int side = std::max(8, static_cast<int>(std::cbrt(static_cast<double>(n) * 30.0)));
        const Dims dims(side, side, std::max(4, side / 4));
        const auto a = random_tensor(rng, dims, n, bench_channels);
        const auto b = random_tensor(rng, dims, n, bench_channels);
        PointCloud cloud;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
          cloud.points.emplace_back(280.0 * u(rng) - 140.0, 80.0 * u(rng) - 40.0, 4.0 * u(rng) - 4.0);
        }
        const GridConfig full = GridConfig::full_scale();
        auto subm = ConvParams<float>::zeros(bench_channels, bench_channels, ConvMode::kSubmanifold);
        auto strided = ConvParams<float>::zeros(bench_channels, bench_channels, ConvMode::kStrided, 2);
        for (auto* p : {&subm, &strided}) {
          for (auto& k : p->kernel) k.setConstant(0.01f);
        }
        rows.push_back(
            {{"sites", a.size()},
             {"dims", {dims.x(), dims.y(), dims.z()}},
             {"voxelize_ms", time_ms(bench_repeat, [&] { (void)voxelize(cloud, full); })},
             {"scatter_ms", time_ms(bench_repeat, [&] { (void)scatter(a, b); })},
             {"submanifold_ms", time_ms(bench_repeat, [&] { (void)submanifold_conv(a, subm); })},
             {"strided_ms", time_ms(bench_repeat, [&] { (void)sparse_conv(a, strided); })}});
      }
      out << json{{"channels", bench_channels}, {"results", rows}}.dump(2) << '\n';
    } else if (*initw) {
      save_weights(initw_out, init_weights(initw_seed));
      out << json{{"seed", initw_seed}, {"weights", initw_out}}.dump() << '\n';
    }
  } catch (const std::exception& e) {
    err << json{{"error", "data"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace s2s::cli
