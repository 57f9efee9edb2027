#include "doctest.h"

#include "fmd/integrate.hpp"
#include "support.hpp"

#include <algorithm>
#include <numeric>
#include <random>

using namespace fmd;
using namespace fmd::integrate;

namespace {

LJParamTable feeble_lj() {
  const std::vector<LJType> t = {{1e-12, 1.0}};
  return derive_lj_pairs(t);
}

}  // namespace

TEST_SUITE("integrate") {

TEST_CASE("scoreboard on a 3x3x3 grid") {
  const auto box = SimulationBox::cubic(30.0, 9.0);
  Scoreboard sb(box);
  for (int c = 0; c < 26; ++c) sb.mark_evaluated(c);
  CHECK(sb.ready_cells().empty());
  CHECK(sb.count(0) == 26);
  sb.mark_evaluated(26);
  const auto ready = sb.ready_cells();
  CHECK(ready.size() == 27);
  CHECK(sb.ready_cells().empty());
  CHECK_THROWS_AS(sb.mark_evaluated(3), InvariantError);
  sb.reset();
  CHECK(sb.count(5) == 0);
  CHECK_NOTHROW(sb.mark_evaluated(3));
}

TEST_CASE("cell becomes ready exactly when its neighborhood is marked") {
  const auto box = SimulationBox::cubic(50.0, 9.0);  // 5^3
  Scoreboard sb(box);
  const Vec3i home(2, 2, 2);
  std::vector<int> neighborhood;
  for (int dx = -1; dx <= 1; ++dx)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dz = -1; dz <= 1; ++dz) neighborhood.push_back(box.linear_cell(box.wrap_cell(home + Vec3i(dx, dy, dz))));
  for (std::size_t n = 0; n + 1 < neighborhood.size(); ++n) sb.mark_evaluated(neighborhood[n]);
  CHECK_FALSE(sb.ready(box.linear_cell(home)));
  sb.mark_evaluated(neighborhood.back());
  CHECK(sb.ready(box.linear_cell(home)));
  const auto ready = sb.ready_cells();
  CHECK(ready == std::vector<int>{box.linear_cell(home)});
}

TEST_CASE("ready set depends only on the marked set") {
  const auto box = SimulationBox::with_cutoff(Vec3(40, 40, 50), 9.0);
  std::mt19937_64 rng(3);
  std::vector<int> all(static_cast<std::size_t>(box.cell_count()));
  std::iota(all.begin(), all.end(), 0);
  for (int trial = 0; trial < 50; ++trial) {
    std::shuffle(all.begin(), all.end(), rng);
    const std::size_t m = std::uniform_int_distribution<std::size_t>(0, all.size())(rng);
    std::vector<int> subset(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(m));
    std::vector<int> first;
    std::vector<int> second;
    for (int pass = 0; pass < 2; ++pass) {
      Scoreboard sb(box);
      std::shuffle(subset.begin(), subset.end(), rng);
      std::vector<int> ready;
      for (const int c : subset) {
        sb.mark_evaluated(c);
        for (const int r : sb.ready_cells()) ready.push_back(r);
      }
      std::sort(ready.begin(), ready.end());
      (pass == 0 ? first : second) = ready;
    }
    CHECK(first == second);
  }
}

TEST_CASE("force summation") {
  ForceStore s(2);
  s.clear();
  CHECK(sum_forces(s, 0) == Vec3::Zero());
  s.rl.col(1) = Vec3(1, 0, 0);
  s.lr.col(1) = Vec3(0, 1, 0);
  s.bonded.col(1) = Vec3(0, 0, 1);
  CHECK(sum_forces(s, 1) == Vec3(1, 1, 1));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 10.0);
  ForceStore r(50);
  for (auto* m : {&r.rl, &r.lr, &r.bonded})
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = n(rng);
  for (std::size_t i = 0; i < 50; ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    Vec3 expect;
    for (int a = 0; a < 3; ++a) expect[a] = r.rl(a, c) + r.lr(a, c) + r.bonded(a, c);
    CHECK(sum_forces(r, i) == expect);
  }
}

TEST_CASE("motion update examples") {
  const auto box = SimulationBox::cubic(62.23, 9.0);
  const auto ballistic = motion_update(Vec3(5, 5, 5), Vec3(1, 0, 0), Vec3::Zero(), 12.0, 2.0, box);
  CHECK(ballistic.position.isApprox(Vec3(7, 5, 5)));
  CHECK(ballistic.velocity == Vec3(1, 0, 0));
  const auto still = motion_update(Vec3(5, 5, 5), Vec3::Zero(), Vec3::Zero(), 12.0, 2.0, box);
  CHECK(still.position == Vec3(5, 5, 5));
  const auto crossing = motion_update(Vec3(10.3, 1, 1), Vec3(0.05, 0, 0), Vec3::Zero(), 12.0, 2.0, box);
  CHECK(crossing.position.x() == doctest::Approx(10.4));
  CHECK(crossing.cell == Vec3i(1, 0, 0));
  const auto kick = motion_update(Vec3(5, 5, 5), Vec3::Zero(), Vec3(1, 0, 0), 1.0, 1.0, box);
  CHECK(kick.velocity.x() == doctest::Approx(units::kAccelPerForcePerMass));
  const auto wrapped = motion_update(Vec3(0.1, 5, 5), Vec3(-0.1, 0, 0), Vec3::Zero(), 1.0, 2.0, box);
  CHECK(wrapped.position.x() == doctest::Approx(62.13));
  CHECK(wrapped.cell.x() == 5);
  CHECK_THROWS_AS(motion_update(Vec3(5, 5, 5), Vec3(20, 0, 0), Vec3::Zero(), 1.0, 2.0, box), TimestepTooLargeError);
  CHECK_THROWS_AS(motion_update(Vec3(5, 5, 5), Vec3::Zero(), Vec3::Zero(), 1.0, 0.0, box), DomainError);
  CHECK_THROWS_AS(motion_update(Vec3(5, 5, 5), Vec3::Zero(), Vec3::Zero(), 0.0, 1.0, box), DomainError);
}

TEST_CASE("migration") {
  const auto box = SimulationBox::cubic(30.0, 9.0);
  const auto p = support::random_particles(200, box.lengths(), 5, 0.5);
  auto grid = neighbor::build_cell_grid(p, box);
  const auto before = gid_multiset(grid);

  SUBCASE("stationary particles keep their cells") {
    std::vector<ParticleUpdate> u;
    for (int c = 0; c < grid.cell_count(); ++c)
      for (const auto& s : grid.cell(c)) u.push_back({s.gid, s.index, s.position, Vec3::Zero(), c});
    std::vector<std::vector<Gid>> layout;
    for (int c = 0; c < grid.cell_count(); ++c) {
      layout.emplace_back();
      for (const auto& s : grid.cell(c)) layout.back().push_back(s.gid);
    }
    migrate(grid, u);
    for (int c = 0; c < grid.cell_count(); ++c) {
      std::vector<Gid> now;
      for (const auto& s : grid.cell(c)) now.push_back(s.gid);
      CHECK(now == layout[static_cast<std::size_t>(c)]);
    }
  }
  SUBCASE("one particle crosses into the +x neighbor") {
    std::vector<ParticleUpdate> u;
    Gid mover = -1;
    int target = -1;
    for (int c = 0; c < grid.cell_count(); ++c) {
      for (const auto& s : grid.cell(c)) {
        int cell = c;
        if (mover < 0) {
          mover = s.gid;
          target = box.linear_cell(box.wrap_cell(box.cell_coords(c) + Vec3i(1, 0, 0)));
          cell = target;
        }
        u.push_back({s.gid, s.index, s.position, Vec3::Zero(), cell});
      }
    }
    migrate(grid, u);
    const auto& moved = grid.cell(target);
    CHECK(std::any_of(moved.begin(), moved.end(), [&](const auto& s) { return s.gid == mover; }));
    CHECK(grid.particle_count() == 200);
  }
  SUBCASE("random reassignments conserve the gid multiset") {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> cell(0, grid.cell_count() - 1);
    for (int round = 0; round < 50; ++round) {
      std::vector<ParticleUpdate> u;
      for (int c = 0; c < grid.cell_count(); ++c)
        for (const auto& s : grid.cell(c)) u.push_back({s.gid, s.index, s.position, Vec3::Zero(), cell(rng)});
      std::shuffle(u.begin(), u.end(), rng);
      migrate(grid, u);
      REQUIRE(gid_multiset(grid) == before);
    }
  }
  SUBCASE("incomplete or repeated updates are rejected") {
    std::vector<ParticleUpdate> u;
    for (int c = 0; c < grid.cell_count(); ++c)
      for (const auto& s : grid.cell(c)) u.push_back({s.gid, s.index, s.position, Vec3::Zero(), c});
    auto missing = u;
    missing.pop_back();
    CHECK_THROWS_AS(migrate(grid, missing), InvariantError);
    auto twice = u;
    twice.back() = twice.front();
    CHECK_THROWS_AS(migrate(grid, twice), InvariantError);
    CHECK(gid_multiset(grid) == before);
  }
}

TEST_CASE("force free gas at rest stays put") {
  const auto box = SimulationBox::cubic(30.0, 9.0);
  std::vector<ParticleRecord> r;
  for (int c = 0; c < 27; ++c) {
    ParticleRecord rec;
    rec.gid = c;
    rec.position = (box.cell_coords(c).cast<double>() + Vec3::Constant(0.5)) * 10.0;
    r.push_back(rec);
  }
  const ParticleSet p(r);
  SimulationState state(p, box, feeble_lj(), {});
  StepConfig cfg;
  cfg.grid_size = 16;
  for (int s = 0; s < 5; ++s) {
    const auto rep = step(state, cfg);
    CHECK(rep.pairs == 0);
    CHECK(rep.safety_violations == 0);
    CHECK(rep.particles_conserved);
  }
  CHECK(state.iteration() == 5);
  CHECK(state.particles().positions() == p.positions());
  CHECK(state.particles().velocities().isZero(0.0));
}

TEST_CASE("bonded oscillator conserves energy") {
  const auto box = SimulationBox::cubic(20.0, 5.0);
  std::vector<ParticleRecord> r(2);
  r[0] = {1, Vec3(9.0, 10.0, 10.0), Vec3::Zero(), 0.0, 0};
  r[1] = {2, Vec3(11.3, 10.0, 10.0), Vec3::Zero(), 0.0, 0};
  ParticleSet p(r);
  const std::vector<double> mass = {12.0};
  p.assign_masses(mass);
  BondedTopology t;
  t.bonds = {{1, 2, 5.0, 1.5}};
  SimulationState state(p, box, feeble_lj(), t);
  StepConfig cfg;
  cfg.timestep = 2.0;
  cfg.grid_size = 8;
  double e0 = 0.0;
  double worst = 0.0;
  double min_sep = 1e9;
  double max_sep = 0.0;
  for (int s = 0; s < 10000; ++s) {
    const auto rep = step(state, cfg);
    if (s == 0) e0 = rep.energy.total;
    worst = std::max(worst, std::abs(rep.energy.total - e0) / std::abs(e0));
    const Vec3 d = state.particles().positions().col(1) - state.particles().positions().col(0);
    min_sep = std::min(min_sep, d.norm());
    max_sep = std::max(max_sep, d.norm());
  }
  CHECK(e0 == doctest::Approx(5.0 * 0.8 * 0.8).epsilon(5e-3));
  CHECK(worst < 0.01);
  CHECK(min_sep < 1.5);  // it oscillates through equilibrium
  CHECK(max_sep > 2.2);
}

TEST_CASE("trajectories are identical across schemes and workers") {
  const auto box = SimulationBox::cubic(31.0, 9.0);
  ParticleSet p = support::random_particles(300, box.lengths(), 17, 2.8, 0.2);
  const std::vector<double> mass = {39.948, 20.0};
  p.assign_masses(mass);
  const auto tables = rl::build_tables(1, 256, rl::kDefaultTableMin, 81.0);
  Eigen::Matrix3Xd reference;
  for (int id = 1; id <= 3; ++id) {
    for (const int workers : {1, 3}) {
      SimulationState state(p, box, support::two_type_lj(), {});
      StepConfig cfg;
      cfg.grid_size = 16;
      cfg.rl.mode = rl::ForceMode::kInterpolated;
      cfg.rl.tables = &tables;
      cfg.rl.distribution = neighbor::distribution_from_id(id);
      cfg.rl.workers = workers;
      for (int s = 0; s < 10; ++s) {
        const auto rep = step(state, cfg);
        REQUIRE(rep.safety_violations == 0);
        REQUIRE(rep.particles_conserved);
      }
      if (reference.size() == 0) {
        reference = state.particles().positions();
      } else {
        CHECK(state.particles().positions() == reference);
      }
    }
  }
}

TEST_CASE("state construction checks types and topology") {
  const auto box = SimulationBox::cubic(30.0, 9.0);
  std::vector<ParticleRecord> r(2);
  r[0] = {1, Vec3(1, 1, 1), Vec3::Zero(), 0.0, 0};
  r[1] = {2, Vec3(5, 1, 1), Vec3::Zero(), 0.0, 3};
  CHECK_THROWS_AS(SimulationState(ParticleSet(r), box, feeble_lj(), {}), InvariantError);
  r[1].type = 0;
  BondedTopology t;
  t.bonds = {{1, 9, 1.0, 1.0}};
  CHECK_THROWS_AS(SimulationState(ParticleSet(r), box, feeble_lj(), t), InvariantError);
}

}  // TEST_SUITE
