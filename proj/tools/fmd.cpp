// fmd: command-line driver for simulation, estimation and data generation.
#include "fmd/archsim.hpp"
#include "fmd/integrate.hpp"
#include "fmd/io.hpp"
#include "fmd/lr.hpp"
#include "fmd/rl.hpp"
#include "fmd/validation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

namespace {

using namespace fmd;
namespace fs = std::filesystem;

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

io::RunConfig read_config(const std::string& path) {
  if (path.empty()) return io::parse_config("");
  auto in = open_in(path);
  try {
    return io::load_config(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

ParticleSet read_particles(const std::string& path, const SimulationBox& box, const io::RunConfig& cfg) {
  auto in = open_in(path);
  ParticleSet p;
  try {
    p = load_particles(in, box);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (!cfg.types.empty()) p.assign_masses(cfg.masses());
  return p;
}

BondedTopology read_topology(const std::string& path) {
  if (path.empty()) return {};
  auto in = open_in(path);
  try {
    return io::load_topology(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::optional<rl::InterpolationTableSet> make_tables(const io::RunConfig& cfg) {
  if (cfg.mode != rl::ForceMode::kInterpolated) return std::nullopt;
  return rl::build_tables(cfg.order, cfg.intervals, cfg.table_min, cfg.cutoff * cfg.cutoff);
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config, particles, topology, out, grid_dump;
  std::int64_t steps = -1;
};

int run_simulate(const SimulateArgs& a) {
  io::RunConfig cfg = read_config(a.config);
  if (a.steps >= 0) cfg.steps = a.steps;
  if (!a.out.empty()) cfg.output = a.out;
  const SimulationBox box = cfg.make_box();
  ParticleSet particles = read_particles(a.particles, box, cfg);
  BondedTopology topology = read_topology(a.topology);
  const auto tables = make_tables(cfg);
  const auto step_cfg = cfg.step_config(tables ? &*tables : nullptr);

  fs::create_directories(cfg.output);
  if (!a.grid_dump.empty()) {
    lr::ChargeGrid grid(cfg.grid, box);
    lr::spread_charges(particles, grid);
    auto dump = open_out(a.grid_dump);
    io::write_grid(dump, grid);
  }

  integrate::SimulationState state(std::move(particles), box, cfg.lj_table(), std::move(topology));
  auto energy = open_out(fs::path(cfg.output) / "energy.csv");
  io::write_energy_header(energy);
  std::ofstream traj;
  if (cfg.dump_every > 0) {
    traj = open_out(fs::path(cfg.output) / "trajectory.txt");
    io::write_frame(traj, 0, state.particles());
  }
  double wall = 0.0;
  std::size_t violations = 0;
  for (std::int64_t s = 0; s < cfg.steps; ++s) {
    const auto report = integrate::step(state, step_cfg);
    io::write_energy_row(energy, report.energy);
    wall += report.wall_seconds;
    violations += report.safety_violations;
    if (!report.particles_conserved) throw InvariantError("particle lost during migration at step " + std::to_string(s));
    if (cfg.dump_every > 0 && state.iteration() % cfg.dump_every == 0) {
      io::write_frame(traj, state.iteration(), state.particles());
    }
  }
  if (violations > 0) throw InvariantError(std::to_string(violations) + " scoreboard safety violations");
  std::cout << "steps " << cfg.steps << ", particles " << state.particles().size() << ", mean wall time per step "
            << std::setprecision(4) << (cfg.steps > 0 ? wall / static_cast<double>(cfg.steps) : 0.0) << " s\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct EstimateArgs {
  std::string particles, config, calibration;
  double count = 0.0;
  double cells = 0.0;
  bool json = false;
};

archsim::Calibration read_calibration(const std::string& path) {
  archsim::Calibration c;
  if (path.empty()) return c;
  auto in = open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  const auto take = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  take("filters_per_pipeline", c.filters_per_pipeline);
  take("pair_interval", c.pair_interval);
  take("mux_latency", c.mux_latency);
  take("startup_latency", c.startup_latency);
  take("global_port_reads", c.global_port_reads);
  take("cell_port_reads", c.cell_port_reads);
  take("pass_rate", c.pass_rate);
  return c;
}

std::string memory_name(archsim::Memory m) { return m == archsim::Memory::kGlobal ? "Mem1" : "Mem2"; }

int run_estimate(const EstimateArgs& a) {
  archsim::DatasetStats stats;
  if (!a.particles.empty()) {
    const io::RunConfig cfg = read_config(a.config);
    const SimulationBox box = cfg.make_box();
    const ParticleSet p = read_particles(a.particles, box, cfg);
    stats = {static_cast<double>(p.size()), static_cast<double>(box.cell_count())};
  } else {
    stats = {a.count, a.cells};
  }
  const auto cal = read_calibration(a.calibration);
  const auto ranked = archsim::rank_designs(stats, cal);
  double baseline = 0.0;
  for (const auto& e : ranked) {
    if (e.config.design == 1) baseline = e.cycles;
  }

  if (a.json) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : ranked) {
      out.push_back({{"design", e.config.design},
                     {"memory", memory_name(e.config.memory)},
                     {"distribution", static_cast<int>(e.config.distribution)},
                     {"pipelines", e.config.pipelines},
                     {"cycles", e.cycles},
                     {"utilization", e.utilization},
                     {"bottleneck", archsim::to_string(e.bottleneck)},
                     {"normalized_performance", baseline / e.cycles}});
    }
    std::cout << out.dump(2) << '\n';
    return 0;
  }
  std::cout << "N = " << stats.particles << ", C = " << stats.cells << ", n = " << std::setprecision(4)
            << stats.per_cell() << '\n';
  std::cout << std::left << std::setw(8) << "design" << std::setw(8) << "memory" << std::setw(6) << "dist"
            << std::setw(6) << "P" << std::setw(14) << "cycles" << std::setw(8) << "util" << std::setw(20)
            << "bottleneck" << "perf/D1\n";
  for (const auto& e : ranked) {
    std::cout << std::left << std::setw(8) << e.config.design << std::setw(8) << memory_name(e.config.memory)
              << std::setw(6) << static_cast<int>(e.config.distribution) << std::setw(6) << e.config.pipelines
              << std::setw(14) << std::fixed << std::setprecision(0) << e.cycles << std::setw(8)
              << std::setprecision(3) << e.utilization << std::setw(20) << archsim::to_string(e.bottleneck)
              << std::setprecision(2) << baseline / e.cycles << '\n'
              << std::defaultfloat;
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::size_t count = 0;
  std::vector<double> box;
  std::uint64_t seed = 1;
  std::string style = "lj-fluid";
  std::string out;
  double temperature = 0.0;
  double charge = 0.0;
  double sigma = 3.405;
  double mass = 39.948;
};

int run_gen(const GenArgs& a) {
  io::GenOptions o;
  o.count = a.count;
  o.box = a.box.size() == 1 ? Vec3::Constant(a.box[0]) : Vec3(a.box[0], a.box[1], a.box[2]);
  o.seed = a.seed;
  o.style = a.style == "uniform" ? io::DatasetStyle::kUniform : io::DatasetStyle::kLjFluid;
  o.temperature = a.temperature;
  o.charge = a.charge;
  o.sigma = a.sigma;
  o.mass = a.mass;
  const ParticleSet p = io::gen_dataset(o);
  if (a.out.empty() || a.out == "-") {
    write_particles(std::cout, p);
  } else {
    auto out = open_out(a.out);
    write_particles(out, p);
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct TablesArgs {
  int order = 1;
  int intervals = 256;
  double x_min = rl::kDefaultTableMin;
  double cutoff = 9.0;
  std::string out;
};

int run_tables(const TablesArgs& a) {
  const auto t = rl::build_tables(a.order, a.intervals, a.x_min, a.cutoff * a.cutoff);
  std::cout << "order " << t.order() << ", " << t.intervals() << " intervals x " << t.sections()
            << " sections, r^2 in [" << t.x_min() << ", " << t.x_max() << "]\n";
  // dense sweep of the relative error per term
  const int samples = 100000;
  for (std::size_t k = 0; k < rl::kTableExponents.size(); ++k) {
    double worst = 0.0;
    for (int i = 0; i <= samples; ++i) {
      const double x = t.x_min() + (t.x_max() - t.x_min()) * i / samples;
      const double exact = std::pow(x, 0.5 * rl::kTableExponents[k]);
      worst = std::max(worst, std::abs(t.eval(static_cast<int>(k), x) - exact) / exact);
    }
    std::cout << "r^" << rl::kTableExponents[k] << ": max relative error " << std::scientific << std::setprecision(3)
              << worst << std::defaultfloat << '\n';
  }
  if (!a.out.empty()) {
    auto out = open_out(a.out);
    out << "# term section interval c0..c" << t.order() << " (polynomial in x - a, x = r^2)\n";
    out << std::setprecision(17);
    for (std::size_t k = 0; k < rl::kTableExponents.size(); ++k) {
      for (int s = 0; s < t.sections(); ++s) {
        for (int i = 0; i < t.intervals(); ++i) {
          out << rl::kTableExponents[k] << ' ' << s << ' ' << i;
          const auto c = t.coefficients(static_cast<int>(k), s, i);
          for (Eigen::Index p = 0; p < c.size(); ++p) out << ' ' << c[p];
          out << '\n';
        }
      }
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct ValidateArgs {
  std::string config, particles, topology;
  int steps = 2;
};

int run_validate(const ValidateArgs& a) {
  const io::RunConfig cfg = read_config(a.config);
  const SimulationBox box = cfg.make_box();
  validation::Input in{read_particles(a.particles, box, cfg), box, cfg.lj_table(), read_topology(a.topology),
                       cfg.step_config(nullptr), cfg.order, cfg.intervals, cfg.table_min, a.steps};
  in.step.rl.mode = rl::ForceMode::kDirect;
  const auto checks = validation::run_suite(in);
  bool all = true;
  for (const auto& c : checks) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    all = all && c.passed;
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cell-list molecular dynamics with mapping-scheme throughput estimation"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run the integration loop");
  simulate->add_option("--config", sim.config, "Run configuration file")->check(CLI::ExistingFile);
  simulate->add_option("--particles", sim.particles, "Particles file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--topology", sim.topology, "Bonded topology file")->check(CLI::ExistingFile);
  simulate->add_option("--out", sim.out, "Output directory (overrides 'output')");
  simulate->add_option("--steps", sim.steps, "Iteration count (overrides 'steps')")->check(CLI::NonNegativeNumber);
  simulate->add_option("--grid-dump", sim.grid_dump, "Write the initial charge grid as 'i j k value' lines");

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Rank the six mapping designs for a dataset");
  auto* est_particles = estimate->add_option("--particles", est.particles, "Particles file")->check(CLI::ExistingFile);
  estimate->add_option("--config", est.config, "Configuration giving box and cutoff")->check(CLI::ExistingFile);
  auto* est_n = estimate->add_option("--n", est.count, "Particle count")->check(CLI::PositiveNumber);
  auto* est_c = estimate->add_option("--cells", est.cells, "Cell count")->check(CLI::PositiveNumber);
  est_n->needs(est_c);
  est_c->needs(est_n);
  est_particles->excludes(est_n);
  estimate->add_option("--calibration", est.calibration, "JSON file overriding model constants")
      ->check(CLI::ExistingFile);
  estimate->add_flag("--json", est.json, "Emit JSON records");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic particles file");
  gen_cmd->add_option("--n", gen.count, "Particle count")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--box", gen.box, "Box edge, or three edges")->required()->expected(1, 3);
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--style", gen.style, "uniform or lj-fluid")->check(CLI::IsMember({"uniform", "lj-fluid"}));
  gen_cmd->add_option("--temperature", gen.temperature, "Initial temperature (K)")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--charge", gen.charge, "Alternating charge magnitude (e)");
  gen_cmd->add_option("--sigma", gen.sigma, "LJ sigma for the separation rule (A)")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--mass", gen.mass, "Particle mass for thermal velocities (amu)")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", gen.out, "Output file (default: standard output)");

  TablesArgs tab;
  auto* tables = app.add_subcommand("tables", "Build interpolation tables and report their error");
  tables->add_option("--order", tab.order, "Polynomial order (1-3)")->check(CLI::Range(1, 3));
  tables->add_option("--intervals", tab.intervals, "Intervals per section (power of two)")
      ->check(CLI::PositiveNumber);
  tables->add_option("--min", tab.x_min, "Lower end of the r^2 domain")->check(CLI::PositiveNumber);
  tables->add_option("--cutoff", tab.cutoff, "Cutoff radius (A)")->check(CLI::PositiveNumber);
  tables->add_option("--out", tab.out, "Write coefficients to this file");

  ValidateArgs val;
  auto* validate = app.add_subcommand("validate", "Run the invariant suite on an input");
  validate->add_option("--config", val.config, "Run configuration file")->check(CLI::ExistingFile);
  validate->add_option("--particles", val.particles, "Particles file")->required()->check(CLI::ExistingFile);
  validate->add_option("--topology", val.topology, "Bonded topology file")->check(CLI::ExistingFile);
  validate->add_option("--steps", val.steps, "Iterations of the instrumented run")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (estimate->parsed() && est.particles.empty() && est.count <= 0.0) {
      std::cerr << "estimate: give --particles or both --n and --cells\n";
      return 2;
    }
    if (gen_cmd->parsed() && gen.box.size() == 2) {
      std::cerr << "gen: --box takes one or three values\n";
      return 2;
    }
    if (simulate->parsed()) return run_simulate(sim);
    if (estimate->parsed()) return run_estimate(est);
    if (gen_cmd->parsed()) return run_gen(gen);
    if (tables->parsed()) return run_tables(tab);
    if (validate->parsed()) return run_validate(val);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
