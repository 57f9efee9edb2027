// Scoreboard-gated force summation, motion update, cell migration and the
// per-iteration driver.
#ifndef FMD_INTEGRATE_HPP
#define FMD_INTEGRATE_HPP

#include "fmd/bonded.hpp"
#include "fmd/lr.hpp"
#include "fmd/model.hpp"
#include "fmd/neighbor.hpp"
#include "fmd/rl.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace fmd::integrate {

/// Per-cell count of evaluated cells in its 27-cell periodic neighborhood.
class Scoreboard {
 public:
  static constexpr int kNeighborhood = 27;

  explicit Scoreboard(const SimulationBox& box);

  int cell_count() const { return static_cast<int>(counts_.size()); }

  /// Records that `cell` finished force evaluation. Adds one mark to the cell
  /// and each of its 26 neighbors. Throws InvariantError when `cell` was
  /// already marked this iteration.
  void mark_evaluated(int cell);

  int count(int cell) const { return counts_[static_cast<std::size_t>(cell)]; }
  bool ready(int cell) const { return count(cell) == kNeighborhood; }

  /// Cells that became ready since the previous call, ascending.
  std::vector<int> ready_cells();

  void reset();

 private:
  std::vector<std::array<int, kNeighborhood>> neighborhood_;
  std::vector<int> counts_;
  std::vector<char> marked_;
  std::vector<char> reported_;
};

/// F_RL + F_LR + F_bonded for dense index `i`.
inline Vec3 sum_forces(const ForceStore& store, std::size_t i) {
  const auto c = static_cast<Eigen::Index>(i);
  return store.rl.col(c) + store.lr.col(c) + store.bonded.col(c);
}

struct MotionResult {
  Vec3 position;
  Vec3 velocity;
  Vec3i cell;
};

/// v' = v + (F/m) dt, r' = r + v' dt, wrapped into the box. Throws
/// TimestepTooLargeError when the particle moves more than one cell along any
/// axis and DomainError for dt <= 0 or m <= 0.
MotionResult motion_update(const Vec3& position, const Vec3& velocity, const Vec3& force, double mass, double dt,
                           const SimulationBox& box);

struct ParticleUpdate {
  Gid gid;
  std::uint32_t index;
  Vec3 position;
  Vec3 velocity;
  int cell;
};

/// Fills the next buffer from `updates` (ascending gid within each cell) and
/// swaps buffers. Throws InvariantError when the updates do not cover every
/// particle of the current buffer exactly once.
void migrate(neighbor::CellGrid& grid, const std::vector<ParticleUpdate>& updates);

/// Sorted gids held by the current buffer.
std::vector<Gid> gid_multiset(const neighbor::CellGrid& grid);

struct StepConfig {
  double timestep = 2.0;  // fs
  int lr_every = 2;
  int grid_size = 32;
  rl::RlSettings rl;
  lr::GatherMethod gather = lr::GatherMethod::kSpectralGradient;
};

struct EnergyRow {
  std::int64_t step = 0;
  double kinetic = 0.0;
  double rl = 0.0;
  double lr = 0.0;
  double bonded = 0.0;
  double total = 0.0;
};

struct StepReport {
  EnergyRow energy;
  std::size_t pairs = 0;
  /// Motion updates issued for a cell whose neighborhood was incomplete, plus
  /// particles updated zero or several times.
  std::size_t safety_violations = 0;
  bool particles_conserved = true;
  double wall_seconds = 0.0;
};

class SimulationState {
 public:
  SimulationState(ParticleSet particles, const SimulationBox& box, LJParamTable lj, BondedTopology topology);

  const ParticleSet& particles() const { return particles_; }
  const SimulationBox& box() const { return box_; }
  const neighbor::CellGrid& grid() const { return grid_; }
  const bonded::GlobalParticleStore& store() const { return store_; }
  const ForceStore& forces() const { return forces_; }
  const LJParamTable& lj() const { return lj_; }
  const BondedTopology& topology() const { return topology_; }
  std::int64_t iteration() const { return iteration_; }

  /// One full iteration: bonded, LR (every lr_every), RL with per-cell
  /// scoreboard marks, gated motion update, migration, store refresh.
  friend StepReport step(SimulationState& state, const StepConfig& config);

 private:
  ParticleSet particles_;
  SimulationBox box_;
  neighbor::CellGrid grid_;
  bonded::GlobalParticleStore store_;
  ForceStore forces_;
  LJParamTable lj_;
  BondedTopology topology_;
  Scoreboard scoreboard_;
  std::int64_t iteration_ = 0;
  double lr_energy_ = 0.0;
};

StepReport step(SimulationState& state, const StepConfig& config);

}  // namespace fmd::integrate

#endif  // FMD_INTEGRATE_HPP
