// Cell lists, periodic geometry, pair filtering and pair-stream generation.
#ifndef FMD_NEIGHBOR_HPP
#define FMD_NEIGHBOR_HPP

#include "fmd/model.hpp"

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <vector>

namespace fmd::neighbor {

/// Workload mapping of candidate pairs onto force pipelines.
enum class Distribution : int {
  kSharedReference = 1,  // all pipelines on one reference particle
  kSharedHomeCell = 2,   // one home cell, a different reference per pipeline
  kPerPipelineCell = 3,  // every pipeline owns its own home cell
};

Distribution distribution_from_id(int id);

enum class FilterKind { kDirect, kPlanar };

/// One particle entry in a cell buffer. `index` is the dense ParticleSet index.
struct Slot {
  Gid gid;
  std::uint32_t index;
  Vec3 position;
};

/// Double-buffered cell list.
///
/// The current buffer is read by force evaluation; migration fills the next
/// buffer and `swap_buffers` publishes it.
class CellGrid {
 public:
  explicit CellGrid(const SimulationBox& box);

  const SimulationBox& box() const { return box_; }
  int cell_count() const { return static_cast<int>(current_.size()); }
  std::size_t particle_count() const;

  const std::vector<Slot>& cell(int linear) const { return current_[static_cast<std::size_t>(linear)]; }
  const std::vector<Slot>& next_cell(int linear) const { return next_[static_cast<std::size_t>(linear)]; }
  void push_next(int linear, const Slot& slot) { next_[static_cast<std::size_t>(linear)].push_back(slot); }
  std::vector<Slot>& mutable_next_cell(int linear) { return next_[static_cast<std::size_t>(linear)]; }

  /// Next buffer becomes current; the old current buffer is cleared and reused.
  void swap_buffers();

  /// Used by build_cell_grid only.
  void push_current(int linear, const Slot& slot) { current_[static_cast<std::size_t>(linear)].push_back(slot); }

 private:
  SimulationBox box_;
  std::vector<std::vector<Slot>> current_;
  std::vector<std::vector<Slot>> next_;
};

/// Assigns every particle to the cell given by the floor rule; per-cell order
/// follows ParticleSet order. Throws DomainError for positions outside the box.
CellGrid build_cell_grid(const ParticleSet& particles, const SimulationBox& box);

/// Neighbor offsets of the half shell, home cell first. An offset belongs to
/// the half shell when (dz, dy, dx) is lexicographically positive.
const std::array<Vec3i, 14>& half_shell_offsets();

/// Home cell followed by its 13 half-shell neighbors, periodically wrapped.
std::array<Vec3i, 14> half_shell(const Vec3i& cell, const SimulationBox& box);

/// Maps each component of a displacement into (-L/2, L/2].
template <typename Derived>
Vec3 minimum_image(const Eigen::MatrixBase<Derived>& d, const SimulationBox& box) {
  Vec3 out;
  for (int a = 0; a < 3; ++a) {
    const double len = box.lengths()[a];
    double x = d[a] - len * std::round(d[a] / len);
    if (x <= -0.5 * len) x += len;
    if (x > 0.5 * len) x -= len;
    out[a] = x;
  }
  return out;
}

/// r^2 when strictly inside the cutoff.
inline std::optional<double> filter_direct(const Vec3& d, double cutoff) {
  const double r2 = d.squaredNorm();
  if (r2 < cutoff * cutoff) return r2;
  return std::nullopt;
}

/// Planar pre-filter on 28-bit fixed-point magnitudes (7 integer bits,
/// 20 fraction bits). Accepts a superset of the pairs inside the cutoff.
class PlanarFilter {
 public:
  static constexpr int kFractionBits = 20;
  static constexpr std::int64_t kMaxMagnitude = (std::int64_t{1} << 27) - 1;

  explicit PlanarFilter(double cutoff);

  /// floor(magnitude 2^20), saturated at kMaxMagnitude.
  static std::int64_t quantize(double magnitude) {
    // scaling by 2^20 is exact; truncation equals floor for magnitudes >= 0
    const double scaled = magnitude * static_cast<double>(std::int64_t{1} << kFractionBits);
    if (!(scaled < static_cast<double>(kMaxMagnitude))) return kMaxMagnitude;
    return static_cast<std::int64_t>(scaled);
  }

  bool operator()(const Vec3& d) const {
    const std::int64_t x = quantize(std::abs(d.x()));
    if (x >= axis_) return false;
    const std::int64_t y = quantize(std::abs(d.y()));
    if (y >= axis_ || x + y >= plane_) return false;
    const std::int64_t z = quantize(std::abs(d.z()));
    return z < axis_ && x + z < plane_ && y + z < plane_ && x + y + z < cube_;
  }

 private:
  std::int64_t axis_;
  std::int64_t plane_;
  std::int64_t cube_;
};

bool filter_planar(const Vec3& d, double cutoff);

/// Canonical position of a pair in the traversal: home cell, reference slot,
/// half-shell neighbor index, neighbor slot. Every scheme emits the same set
/// of keys; accumulation happens in key order.
struct PairKey {
  std::uint32_t home_cell;
  std::uint32_t ref_slot;
  std::uint32_t shell;
  std::uint32_t nb_slot;
  auto operator<=>(const PairKey&) const = default;
};

struct PairRecord {
  Gid ref_gid;
  Gid nb_gid;
  std::uint32_t ref_index;
  std::uint32_t nb_index;
  Vec3 disp;  // minimum image of r_ref - r_nb
  double r2;
  PairKey key;
};

using PairStream = std::vector<PairRecord>;

/// Emits each unordered pair inside the cutoff exactly once, in the traversal
/// order of `scheme`. Scheme 3 may split home cells over `workers` threads;
/// blocks are concatenated in ascending home-cell order.
PairStream generate_pairs(const CellGrid& grid, Distribution scheme, FilterKind filter, int workers = 1);

/// Appends the pairs of a single home cell in `scheme` order.
void generate_home_cell_pairs(const CellGrid& grid, int home, Distribution scheme, FilterKind filter,
                              PairStream& out);

}  // namespace fmd::neighbor

#endif  // FMD_NEIGHBOR_HPP
