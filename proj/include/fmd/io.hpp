// Run configuration, text file formats and synthetic dataset generation.
#ifndef FMD_IO_HPP
#define FMD_IO_HPP

#include "fmd/integrate.hpp"
#include "fmd/lr.hpp"
#include "fmd/model.hpp"
#include "fmd/neighbor.hpp"
#include "fmd/rl.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace fmd::io {

/// LJ parameters and mass of one particle type, `type = index epsilon sigma mass`.
struct TypeEntry {
  int index;
  double epsilon;
  double sigma;
  double mass;
};

enum class MemoryScheme { kGlobal = 1, kPerCell = 2 };

struct RunConfig {
  Vec3 box = Vec3::Constant(62.23);
  double cutoff = 9.0;
  double timestep = 2.0;
  std::int64_t steps = 1000;
  int lr_every = 2;
  int order = 1;
  int intervals = 256;
  neighbor::FilterKind filter = neighbor::FilterKind::kPlanar;
  neighbor::Distribution distribution = neighbor::Distribution::kPerPipelineCell;
  MemoryScheme memory = MemoryScheme::kPerCell;
  int grid = 32;
  std::int64_t dump_every = 0;  // 0: no trajectory
  std::uint64_t seed = 1;
  std::string output = "out";
  std::vector<TypeEntry> types;
  rl::ForceMode mode = rl::ForceMode::kInterpolated;
  int workers = 1;
  double table_min = rl::kDefaultTableMin;
  MixingRule mixing = MixingRule::kLorentzBerthelot;
  lr::GatherMethod gather = lr::GatherMethod::kSpectralGradient;

  SimulationBox make_box() const { return SimulationBox::with_cutoff(box, cutoff); }
  /// LJ table over type indices 0..max; every index must be listed once.
  LJParamTable lj_table() const;
  /// Mass per type index.
  std::vector<double> masses() const;
  integrate::StepConfig step_config(const rl::InterpolationTableSet* tables) const;
};

/// `key = value` lines, `#` comments. Throws ParseError naming the line for
/// unknown keys, malformed values and non-positive physical quantities.
RunConfig parse_config(std::string_view text);
RunConfig load_config(std::istream& in);

/// Sections `[bonds]` (i j k r0), `[angles]` (i j k k_theta theta0 k_ub r_ub)
/// and `[dihedrals]` (i j k l k n phi). Angles in radians.
BondedTopology load_topology(std::istream& in);
void write_topology(std::ostream& out, const BondedTopology& topology);

inline constexpr std::string_view kEnergyHeader = "step,kinetic,rl,lr,bonded,total";
void write_energy_header(std::ostream& out);
void write_energy_row(std::ostream& out, const integrate::EnergyRow& row);
std::vector<integrate::EnergyRow> load_energy_log(std::istream& in);

struct Frame {
  std::int64_t step = 0;
  std::vector<ParticleRecord> particles;  // gid, position, velocity only
};

/// `frame N` followed by one `gid x y z vx vy vz` line per particle.
void write_frame(std::ostream& out, std::int64_t step, const ParticleSet& particles);
std::vector<Frame> load_trajectory(std::istream& in);

/// `i j k value` per grid node.
void write_grid(std::ostream& out, const lr::ChargeGrid& grid);

enum class DatasetStyle { kUniform, kLjFluid };

struct GenOptions {
  std::size_t count = 0;
  Vec3 box = Vec3::Zero();
  std::uint64_t seed = 1;
  DatasetStyle style = DatasetStyle::kLjFluid;
  double sigma = 3.405;        // A, sets the minimum separation
  double mass = 39.948;        // amu, used for thermal velocities
  double temperature = 0.0;    // K
  double charge = 0.0;         // alternating +q / -q when nonzero
};

/// Reproducible synthetic particle set. The lj-fluid style jitters a
/// lattice so every pair stays at least 0.8 sigma apart; throws DomainError
/// when the box cannot hold `count` particles at that separation.
ParticleSet gen_dataset(const GenOptions& options);

}  // namespace fmd::io

#endif  // FMD_IO_HPP
