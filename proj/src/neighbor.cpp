#include "fmd/neighbor.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

namespace fmd::neighbor {

Distribution distribution_from_id(int id) {
  switch (id) {
    case 1: return Distribution::kSharedReference;
    case 2: return Distribution::kSharedHomeCell;
    case 3: return Distribution::kPerPipelineCell;
    default: throw DomainError("unknown distribution scheme " + std::to_string(id) + " (expected 1, 2 or 3)");
  }
}

// ---------------------------------------------------------------------------
// CellGrid
// ---------------------------------------------------------------------------

CellGrid::CellGrid(const SimulationBox& box)
    : box_(box),
      current_(static_cast<std::size_t>(box.cell_count())),
      next_(static_cast<std::size_t>(box.cell_count())) {}

std::size_t CellGrid::particle_count() const {
  std::size_t n = 0;
  for (const auto& c : current_) n += c.size();
  return n;
}

void CellGrid::swap_buffers() {
  std::swap(current_, next_);
  for (auto& c : next_) c.clear();
}

CellGrid build_cell_grid(const ParticleSet& particles, const SimulationBox& box) {
  CellGrid grid(box);
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const Vec3 r = particles.positions().col(static_cast<Eigen::Index>(i));
    if (!box.contains(r)) {
      throw DomainError("particle " + std::to_string(particles.gid(i)) + " lies outside the box; wrap first");
    }
    grid.push_current(box.linear_cell(box.cell_of(r)), {particles.gid(i), static_cast<std::uint32_t>(i), r});
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Half shell
// ---------------------------------------------------------------------------

const std::array<Vec3i, 14>& half_shell_offsets() {
  static const std::array<Vec3i, 14> offsets = [] {
    std::array<Vec3i, 14> out;
    out[0] = Vec3i::Zero();
    std::size_t n = 1;
    for (int dz = 0; dz <= 1; ++dz) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const bool positive = dz > 0 || (dz == 0 && (dy > 0 || (dy == 0 && dx > 0)));
          if (positive) out[n++] = Vec3i(dx, dy, dz);
        }
      }
    }
    return out;
  }();
  return offsets;
}

std::array<Vec3i, 14> half_shell(const Vec3i& cell, const SimulationBox& box) {
  std::array<Vec3i, 14> out;
  const auto& off = half_shell_offsets();
  for (std::size_t s = 0; s < off.size(); ++s) out[s] = box.wrap_cell(cell + off[s]);
  return out;
}

// ---------------------------------------------------------------------------
// Filters
// ---------------------------------------------------------------------------

PlanarFilter::PlanarFilter(double cutoff) {
  const auto threshold = [](double v) {
    return std::min<std::int64_t>(static_cast<std::int64_t>(std::ceil(std::ldexp(v, kFractionBits))),
                                  3 * kMaxMagnitude + 1);
  };
  axis_ = threshold(cutoff);
  plane_ = threshold(std::sqrt(2.0) * cutoff);
  cube_ = threshold(std::sqrt(3.0) * cutoff);
}

bool filter_planar(const Vec3& d, double cutoff) { return PlanarFilter(cutoff)(d); }

// ---------------------------------------------------------------------------
// Pair generation
// ---------------------------------------------------------------------------

namespace {

template <FilterKind Filter>
struct PairTester {
  double cutoff2;
  PlanarFilter planar;

  explicit PairTester(double cutoff) : cutoff2(cutoff * cutoff), planar(cutoff) {}

  // The planar pass is only a pre-filter; r^2 is recomputed and re-checked
  // before a pair is handed to the force stage.
  // `shift` is the periodic image offset of the neighbor cell; with at least
  // three cells per axis it equals the minimum image of every in-cutoff pair.
  void test(const Slot& ref, const Slot& nb, const Vec3& shift, const PairKey& key, PairStream& out) const {
    const Vec3 d = (ref.position - nb.position) + shift;
    if constexpr (Filter == FilterKind::kPlanar) {
      if (!planar(d)) return;
    }
    const double r2 = d.squaredNorm();
    if (!(r2 < cutoff2)) return;
    out.push_back({ref.gid, nb.gid, ref.index, nb.index, d, r2, key});
  }
};

template <FilterKind Filter>
void emit_home_cell(const CellGrid& grid, int home, Distribution scheme, PairStream& out) {
  const SimulationBox& box = grid.box();
  const PairTester<Filter> tester(box.cutoff());
  const Vec3i home_c = box.cell_coords(home);
  const auto shell = half_shell(home_c, box);
  std::array<const std::vector<Slot>*, 14> cells;
  std::array<Vec3, 14> shift;
  for (std::size_t s = 0; s < shell.size(); ++s) {
    cells[s] = &grid.cell(box.linear_cell(shell[s]));
    const Vec3i unwrapped = home_c + half_shell_offsets()[s];
    for (int a = 0; a < 3; ++a) {
      shift[s][a] = box.lengths()[a] * ((shell[s][a] - unwrapped[a]) / box.cells()[a]);
    }
  }
  const auto& refs = *cells[0];
  const auto home_u = static_cast<std::uint32_t>(home);

  if (scheme == Distribution::kSharedHomeCell) {
    // neighbor broadcast: every pipeline sees the same neighbor, each with its own reference
    for (std::uint32_t s = 0; s < 14; ++s) {
      const auto& nbs = *cells[s];
      for (std::uint32_t b = 0; b < nbs.size(); ++b) {
        const std::uint32_t ref_end = s == 0 ? b : static_cast<std::uint32_t>(refs.size());
        for (std::uint32_t a = 0; a < ref_end; ++a) tester.test(refs[a], nbs[b], shift[s], {home_u, a, s, b}, out);
      }
    }
    return;
  }
  // schemes 1 and 3: one reference at a time across all of its candidates
  for (std::uint32_t a = 0; a < refs.size(); ++a) {
    for (std::uint32_t s = 0; s < 14; ++s) {
      const auto& nbs = *cells[s];
      for (std::uint32_t b = s == 0 ? a + 1 : 0; b < nbs.size(); ++b) {
        tester.test(refs[a], nbs[b], shift[s], {home_u, a, s, b}, out);
      }
    }
  }
}

}  // namespace

void generate_home_cell_pairs(const CellGrid& grid, int home, Distribution scheme, FilterKind filter,
                              PairStream& out) {
  if (filter == FilterKind::kPlanar) {
    emit_home_cell<FilterKind::kPlanar>(grid, home, scheme, out);
  } else {
    emit_home_cell<FilterKind::kDirect>(grid, home, scheme, out);
  }
}

PairStream generate_pairs(const CellGrid& grid, Distribution scheme, FilterKind filter, int workers) {
  const int cells = grid.cell_count();
  if (scheme != Distribution::kPerPipelineCell || workers <= 1 || cells < 2) {
    PairStream out;
    for (int c = 0; c < cells; ++c) generate_home_cell_pairs(grid, c, scheme, filter, out);
    return out;
  }
  const int blocks = std::min(workers, cells);
  std::vector<PairStream> partial(static_cast<std::size_t>(blocks));
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(blocks));
    for (int b = 0; b < blocks; ++b) {
      pool.emplace_back([&, b] {
        const int begin = static_cast<int>(static_cast<long long>(cells) * b / blocks);
        const int end = static_cast<int>(static_cast<long long>(cells) * (b + 1) / blocks);
        for (int c = begin; c < end; ++c) {
          generate_home_cell_pairs(grid, c, scheme, filter, partial[static_cast<std::size_t>(b)]);
        }
      });
    }
  }
  std::size_t total = 0;
  for (const auto& p : partial) total += p.size();
  PairStream out;
  out.reserve(total);
  for (auto& p : partial) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace fmd::neighbor
