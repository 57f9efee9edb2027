#include "fmd/integrate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace fmd::integrate {

// ---------------------------------------------------------------------------
// Scoreboard
// ---------------------------------------------------------------------------

Scoreboard::Scoreboard(const SimulationBox& box)
    : neighborhood_(static_cast<std::size_t>(box.cell_count())),
      counts_(neighborhood_.size(), 0),
      marked_(neighborhood_.size(), 0),
      reported_(neighborhood_.size(), 0) {
  for (int c = 0; c < box.cell_count(); ++c) {
    const Vec3i home = box.cell_coords(c);
    std::size_t n = 0;
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dz = -1; dz <= 1; ++dz) {
          neighborhood_[static_cast<std::size_t>(c)][n++] = box.linear_cell(box.wrap_cell(home + Vec3i(dx, dy, dz)));
        }
      }
    }
  }
}

void Scoreboard::mark_evaluated(int cell) {
  auto& marked = marked_[static_cast<std::size_t>(cell)];
  if (marked) throw InvariantError("cell " + std::to_string(cell) + " marked twice in one iteration");
  marked = 1;
  for (const int n : neighborhood_[static_cast<std::size_t>(cell)]) {
    int& count = counts_[static_cast<std::size_t>(n)];
    count = std::min(count + 1, kNeighborhood);
  }
}

std::vector<int> Scoreboard::ready_cells() {
  std::vector<int> out;
  for (std::size_t c = 0; c < counts_.size(); ++c) {
    if (counts_[c] == kNeighborhood && !reported_[c]) {
      reported_[c] = 1;
      out.push_back(static_cast<int>(c));
    }
  }
  return out;
}

void Scoreboard::reset() {
  std::fill(counts_.begin(), counts_.end(), 0);
  std::fill(marked_.begin(), marked_.end(), 0);
  std::fill(reported_.begin(), reported_.end(), 0);
}

// ---------------------------------------------------------------------------
// Motion update and migration
// ---------------------------------------------------------------------------

MotionResult motion_update(const Vec3& position, const Vec3& velocity, const Vec3& force, double mass, double dt,
                           const SimulationBox& box) {
  if (!(dt > 0.0)) throw DomainError("timestep must be positive");
  if (!(mass > 0.0)) throw DomainError("mass must be positive");
  const Vec3 v = velocity + force * (units::kAccelPerForcePerMass * dt / mass);
  const Vec3 moved = position + v * dt;
  const Vec3 edge = box.cell_edge();
  const Vec3i before = box.cell_of(position);
  for (int a = 0; a < 3; ++a) {
    const int after = static_cast<int>(std::floor(moved[a] / edge[a]));
    if (std::abs(after - before[a]) > 1) {
      throw TimestepTooLargeError("particle moved " + std::to_string(after - before[a]) + " cells along axis " +
                                  std::to_string(a) + " in one step");
    }
  }
  const Vec3 wrapped = box.wrap(moved);
  return {wrapped, v, box.cell_of(wrapped)};
}

void migrate(neighbor::CellGrid& grid, const std::vector<ParticleUpdate>& updates) {
  const std::size_t expected = grid.particle_count();
  if (updates.size() != expected) {
    throw InvariantError("migration received " + std::to_string(updates.size()) + " updates for " +
                         std::to_string(expected) + " particles");
  }
  std::vector<const ParticleUpdate*> order(updates.size());
  for (std::size_t i = 0; i < updates.size(); ++i) order[i] = &updates[i];
  std::sort(order.begin(), order.end(), [](const auto* a, const auto* b) { return a->gid < b->gid; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (order[i]->gid == order[i - 1]->gid) {
      throw InvariantError("particle " + std::to_string(order[i]->gid) + " updated twice before migration");
    }
  }
  for (int c = 0; c < grid.cell_count(); ++c) grid.mutable_next_cell(c).clear();
  for (const auto* u : order) grid.push_next(u->cell, {u->gid, u->index, u->position});
  grid.swap_buffers();
}

std::vector<Gid> gid_multiset(const neighbor::CellGrid& grid) {
  std::vector<Gid> out;
  out.reserve(grid.particle_count());
  for (int c = 0; c < grid.cell_count(); ++c) {
    for (const auto& s : grid.cell(c)) out.push_back(s.gid);
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

SimulationState::SimulationState(ParticleSet particles, const SimulationBox& box, LJParamTable lj,
                                 BondedTopology topology)
    : particles_(std::move(particles)),
      box_(box),
      grid_(box),
      lj_(std::move(lj)),
      topology_(std::move(topology)),
      scoreboard_(box) {
  particles_.wrap_into(box_);
  grid_ = neighbor::build_cell_grid(particles_, box_);
  store_.refresh(particles_);
  forces_.resize(particles_.size());
  topology_.validate(particles_);
  for (const int t : particles_.types()) {
    if (t < 0 || t >= lj_.type_count()) {
      throw InvariantError("particle type " + std::to_string(t) + " has no LJ parameters");
    }
  }
}

StepReport step(SimulationState& s, const StepConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  StepReport report;
  const std::size_t n = s.particles_.size();
  const std::vector<Gid> before = gid_multiset(s.grid_);
  const double kinetic_before = s.particles_.kinetic_energy();

  const auto bonded = bonded::bonded_pass(s.topology_, s.store_, s.box_, s.forces_.bonded);

  if (s.iteration_ % std::max(1, config.lr_every) == 0) {
    s.lr_energy_ = lr::lr_pass(s.particles_, config.grid_size, s.box_, s.forces_.lr, config.gather).energy;
  }

  s.scoreboard_.reset();
  std::vector<ParticleUpdate> updates;
  updates.reserve(n);
  std::vector<int> times_updated(n, 0);
  const auto on_done = [&](int cell) {
    s.scoreboard_.mark_evaluated(cell);
    for (const int ready : s.scoreboard_.ready_cells()) {
      for (const auto& slot : s.grid_.cell(ready)) {
        if (!s.scoreboard_.ready(ready)) ++report.safety_violations;
        const Vec3 f = sum_forces(s.forces_, slot.index);
        const auto col = static_cast<Eigen::Index>(slot.index);
        const auto m = motion_update(slot.position, s.particles_.velocities().col(col), f,
                                     s.particles_.masses()[col], config.timestep, s.box_);
        updates.push_back({slot.gid, slot.index, m.position, m.velocity, s.box_.linear_cell(m.cell)});
        ++times_updated[slot.index];
      }
    }
  };
  const auto rl = rl::rl_pass(s.grid_, s.particles_, s.lj_, config.rl, s.forces_.rl, on_done);
  for (const int t : times_updated) {
    if (t != 1) ++report.safety_violations;
  }

  for (const auto& u : updates) {
    const auto col = static_cast<Eigen::Index>(u.index);
    s.particles_.positions().col(col) = u.position;
    s.particles_.velocities().col(col) = u.velocity;
  }
  migrate(s.grid_, updates);
  report.particles_conserved = gid_multiset(s.grid_) == before;
  s.store_.refresh(s.particles_);

  EnergyRow& row = report.energy;
  row.step = s.iteration_;
  // velocities live on half steps; their mean kinetic energy pairs with x_n
  row.kinetic = 0.5 * (kinetic_before + s.particles_.kinetic_energy());
  row.rl = rl.energy;
  row.lr = s.lr_energy_;
  row.bonded = bonded.energy;
  row.total = row.kinetic + row.rl + row.lr + row.bonded;
  report.pairs = rl.pairs;
  ++s.iteration_;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace fmd::integrate
