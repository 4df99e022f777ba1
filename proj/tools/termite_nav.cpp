// termite-nav: rank | swarm | plan | simulate | render
//
// Exit codes: 0 success, 1 domain failure (no path, goal not reached), 2 usage or format error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "termite_nav/termite_nav.hpp"

namespace fs = std::filesystem;
using namespace termite_nav;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kDomain = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string scenario;
  std::string heightmap, soilmap, catmap;
  std::vector<double> start, goal;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  std::string out = ".";
  int jobs = 1;
  int scale = 4;
};

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFormat, path.string() + ": " + e.what());
  }
}

std::string absolute_from(const fs::path& base, const std::string& p) {
  if (p.empty() || fs::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

// Dotted override against a document whose shape is given by the default scenario.
void apply_override(json& doc, const std::string& assignment) {
  static const json reference = scenario_to_json(Scenario{});
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  json::json_pointer ptr;
  std::stringstream parts(key);
  std::string part;
  while (std::getline(parts, part, '.')) ptr /= part;
  if (!reference.contains(ptr)) throw UsageError("unknown parameter '" + key + "'");

  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  const json& expected = reference.at(ptr);
  const bool numeric = expected.is_number() && value.is_number();
  if (!numeric && expected.type() != value.type() && !expected.is_null()) {
    throw UsageError("parameter '" + key + "' expects " + std::string(expected.type_name()));
  }
  doc[ptr] = value;
}

// Defaults, then the scenario file, then explicit flags, then --set overrides.
Scenario resolve_scenario(const Options& o) {
  json doc = scenario_to_json(Scenario{});
  if (!o.scenario.empty()) {
    const fs::path file = fs::absolute(o.scenario);
    json given = read_json_file(file);
    if (!given.is_object()) throw Error(ErrorCode::MalformedFormat, "scenario must be a JSON object");
    scenario_from_json(given);  // rejects unknown keys and bad shapes before merging
    for (const char* key : {"heightmapPath", "soilmapPath"}) {
      if (given.contains(key)) given[key] = absolute_from(file.parent_path(), given[key].get<std::string>());
    }
    if (given.contains("groundTruthSoil") && given["groundTruthSoil"].is_string()) {
      given["groundTruthSoil"] = absolute_from(file.parent_path(), given["groundTruthSoil"].get<std::string>());
    }
    // A whole-array replacement for crates and soil patches; merge_patch handles the nested objects.
    doc.merge_patch(given);
  }
  const fs::path cwd = fs::current_path();
  if (!o.heightmap.empty()) doc["heightmapPath"] = absolute_from(cwd, o.heightmap);
  if (!o.soilmap.empty()) doc["soilmapPath"] = absolute_from(cwd, o.soilmap);
  if (!o.catmap.empty()) doc["catMapping"] = read_json_file(absolute_from(cwd, o.catmap));
  if (!o.start.empty()) doc["start"] = o.start;
  if (!o.goal.empty()) doc["goal"] = o.goal;
  if (o.seed) doc["swarm"]["seed"] = *o.seed;
  for (const std::string& assignment : o.overrides) apply_override(doc, assignment);
  return scenario_from_json(doc);
}

void require_inputs(const Scenario& s) {
  if (s.heightmapPath.empty()) throw UsageError("a heightmap is required (--heightmap or scenario heightmapPath)");
  if (s.soilmapPath.empty()) throw UsageError("a soil map is required (--soilmap or scenario soilmapPath)");
  for (const std::string& p : {s.heightmapPath, s.soilmapPath}) {
    if (!fs::exists(p)) throw UsageError("input file not found: " + p);
  }
  if (s.catMapping.empty()) throw UsageError("a cat mapping is required (--catmap or scenario catMapping)");
}

void require_endpoints(const Scenario& s) {
  if (s.start == s.goal) throw UsageError("--start and --goal are required and must differ");
}

fs::path out_dir(const Options& o) {
  const fs::path dir(o.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw UsageError("cannot create output directory '" + o.out + "'");
  return dir;
}

template <typename Fn>
void write_text(const fs::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  fn(out);
}

void write_json(const fs::path& path, const json& j) {
  write_text(path, [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

struct Corridor {
  World world;
  TerrainGrid grid;  // database with known crates stamped
  DualGrid dual;
  std::array<SwarmResult, 2> swarm;
};

Corridor build_corridor(const Scenario& s) {
  require_inputs(s);
  require_endpoints(s);
  Corridor c{load_world(s), {}, {}, {}};
  c.grid = c.world.database;
  stamp_known_crates(c.grid, s.crates);
  const Swathe swathe = build_swathe(c.grid, s.start, s.goal, s.swathe_half_width());
  c.dual = build_dual_grids(c.grid, swathe, s.robot.size);
  c.swarm = run_swarm_dual(c.dual, s.swarm);
  return c;
}

NestPair nests_of(const Corridor& c) { return {c.swarm[0].nests, c.swarm[1].nests}; }

json nests_json(const Scenario& s, const Corridor& c) {
  json j;
  j["seed"] = s.swarm.seed;
  j["grids"] = json::array();
  for (int g = 0; g < 2; ++g) {
    json gj = nest_map_to_json(c.swarm[g].nests, s.swarm.rankThreshold);
    gj["originOffset"] = c.dual.grids[g].originOffset;
    gj["coarseCellSize"] = c.dual.coarseCellSize;
    j["grids"].push_back(std::move(gj));
  }
  return j;
}

int cmd_rank(const Options& o) {
  const Scenario s = resolve_scenario(o);
  require_inputs(s);
  const World world = load_world(s);
  const fs::path dir = out_dir(o);
  write_text(dir / "terrain.csv", [&](std::ostream& out) { write_terrain_csv(out, world.database); });
  save_image((dir / "rank.pgm").string(), render_rank(world.database), write_pgm);
  return kOk;
}

int cmd_swarm(const Options& o) {
  const Scenario s = resolve_scenario(o);
  const Corridor c = build_corridor(s);
  const fs::path dir = out_dir(o);
  write_json(dir / "nests.json", nests_json(s, c));
  for (int g = 0; g < 2; ++g) {
    write_text(dir / ("pellets_grid" + std::to_string(g) + ".csv"),
               [&](std::ostream& out) { write_pellet_csv(out, c.swarm[g].pellets); });
  }
  save_image((dir / "nests.ppm").string(), render_nest_overlay(c.grid, c.dual, nests_of(c), o.scale), write_ppm);
  return kOk;
}

int cmd_plan(const Options& o) {
  const Scenario s = resolve_scenario(o);
  const Corridor c = build_corridor(s);
  const fs::path dir = out_dir(o);
  write_json(dir / "nests.json", nests_json(s, c));
  const GlobalPath path = plan_global(c.dual, nests_of(c), s.start, s.goal, s.planner);
  write_text(dir / "path.csv", [&](std::ostream& out) { write_path_csv(out, path); });
  write_json(dir / "path.json", path_to_json(path));
  save_image((dir / "path.ppm").string(), render_paths(c.grid, c.dual, nests_of(c), path, {}, s.crates, o.scale),
             write_ppm);
  return kOk;
}

// Runs one scenario and writes its artifacts. Returns the exit code for that scenario.
int simulate_one(const Scenario& s, const fs::path& dir) {
  require_inputs(s);
  s.validate();
  const World world = load_world(s);
  fs::create_directories(dir);
  SimResult r;
  try {
    r = run_scenario(s, world);
  } catch (const Error& e) {
    if (!is_domain_failure(e.code())) throw;
    Outcome none;
    json j = outcome_to_json(none);
    j["error"] = e.what();
    write_json(dir / "outcome.json", j);
    write_text(dir / "trace.csv", [&](std::ostream& out) { write_trace_csv(out, {}); });
    std::cerr << s.name << ": " << e.what() << '\n';
    return kDomain;
  }
  write_text(dir / "trace.csv", [&](std::ostream& out) { write_trace_csv(out, r.trace); });
  write_json(dir / "outcome.json", outcome_to_json(r.outcome));
  TerrainGrid shown = world.database;
  stamp_known_crates(shown, s.crates);
  save_image((dir / "paths.ppm").string(),
             render_paths(shown, r.dual, r.initialNests, r.initialPath, r.trace, s.crates), write_ppm);
  return r.outcome.reached ? kOk : kDomain;
}

int cmd_simulate(const Options& o) {
  if (o.scenario.empty()) throw UsageError("simulate needs a scenario file or directory");
  const fs::path dir = out_dir(o);
  if (!fs::is_directory(o.scenario)) return simulate_one(resolve_scenario(o), dir);

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(o.scenario)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw UsageError("no scenario JSON files in '" + o.scenario + "'");
  std::vector<Scenario> scenarios;
  for (const fs::path& f : files) {
    Options one = o;
    one.scenario = f.string();
    scenarios.push_back(resolve_scenario(one));
  }
  const auto codes = run_batch(scenarios.size(), o.jobs, [&](std::size_t i) {
    return simulate_one(scenarios[i], dir / files[i].stem());
  });
  json summary = json::array();
  int worst = kOk;
  for (std::size_t i = 0; i < files.size(); ++i) {
    summary.push_back({{"scenario", files[i].filename().string()}, {"exit", codes[i]}});
    worst = std::max(worst, codes[i]);
  }
  write_json(dir / "summary.json", summary);
  return worst;
}

int cmd_render(const Options& o) {
  const Scenario s = resolve_scenario(o);
  require_inputs(s);
  const World world = load_world(s);
  const fs::path dir = out_dir(o);
  save_image((dir / "rank.pgm").string(), render_rank(world.database), write_pgm);
  save_image((dir / "heights.pgm").string(), render_heights(world.database), write_pgm);
  save_image((dir / "soil.ppm").string(), render_soil(world.database, o.scale), write_ppm);
  if (s.start != s.goal) {
    const Corridor c = build_corridor(s);
    save_image((dir / "nests.ppm").string(), render_nest_overlay(c.grid, c.dual, nests_of(c), o.scale), write_ppm);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Terrain-aware navigation: rank maps, swarm nests, global and local planning"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool terrainFlags) {
    sub->add_option("--seed", o.seed, "Swarm seed");
    sub->add_option("--set", o.overrides, "Parameter override key=value (dotted keys, repeatable)");
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--scale", o.scale, "Pixels per terrain cell in color renders")->check(CLI::Range(1, 32));
    if (!terrainFlags) return;
    sub->add_option("--scenario", o.scenario, "Scenario JSON supplying inputs and parameters");
    sub->add_option("--heightmap", o.heightmap, "Heightmap PGM");
    sub->add_option("--soilmap", o.soilmap, "Soil category CSV");
    sub->add_option("--catmap", o.catmap, "JSON mapping cat values to soil categories");
    sub->add_option("--start", o.start, "Start point x y (meters)")->expected(2)->delimiter(',');
    sub->add_option("--goal", o.goal, "Goal point x y (meters)")->expected(2)->delimiter(',');
  };

  CLI::App* rank = app.add_subcommand("rank", "Write the terrain CSV and rank PGM");
  CLI::App* swarm = app.add_subcommand("swarm", "Run the swarm on both coarse grids");
  CLI::App* plan = app.add_subcommand("plan", "Swarm, then plan the global path");
  CLI::App* simulate = app.add_subcommand("simulate", "Run a closed-loop scenario (file or directory)");
  CLI::App* render = app.add_subcommand("render", "Write figure rasters");
  for (CLI::App* sub : {rank, swarm, plan, render}) common(sub, true);
  common(simulate, false);
  simulate->add_option("scenario", o.scenario, "Scenario JSON or directory of them")->required();
  simulate->add_option("--jobs", o.jobs, "Worker threads for scenario directories")->check(CLI::Range(1, 256));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*rank) return cmd_rank(o);
    if (*swarm) return cmd_swarm(o);
    if (*plan) return cmd_plan(o);
    if (*simulate) return cmd_simulate(o);
    if (*render) return cmd_render(o);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    const bool domain = is_domain_failure(e.code()) || e.code() == ErrorCode::EmptySwathe;
    return domain ? kDomain : kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
