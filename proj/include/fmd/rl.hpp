// Range-limited (LJ + short-range Coulomb) force evaluation.
#ifndef FMD_RL_HPP
#define FMD_RL_HPP

#include "fmd/model.hpp"
#include "fmd/neighbor.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace fmd::rl {

/// Powers of r tabulated for the force law, in table order.
inline constexpr std::array<int, 3> kTableExponents = {-14, -8, -3};

/// Default lower end of the table domain, (0.5 A)^2.
inline constexpr double kDefaultTableMin = 0.25;

struct PairCoefficients {
  double a;   // 48 eps sigma^12
  double b;   // -24 eps sigma^6
  double qq;  // k_C q_i q_j
};

/// F/r = A r^-14 + B r^-8 + QQ r^-3, evaluated from r^2.
template <typename Scalar>
Scalar force_over_r(Scalar r2, Scalar a, Scalar b, Scalar qq) {
  const Scalar inv = Scalar(1) / r2;
  const Scalar inv4 = (inv * inv) * (inv * inv);
  const Scalar inv7 = inv4 * inv * inv * inv;
  return a * inv7 + b * inv4 + qq * inv * std::sqrt(inv);
}

/// U = A/12 r^-12 + B/6 r^-6 + QQ / r; -dU/dr / r equals force_over_r.
template <typename Scalar>
Scalar pair_energy(Scalar r2, Scalar a, Scalar b, Scalar qq) {
  const Scalar inv = Scalar(1) / r2;
  const Scalar inv3 = inv * inv * inv;
  return a / Scalar(12) * inv3 * inv3 + b / Scalar(6) * inv3 + qq * std::sqrt(inv);
}

struct LookupIndex {
  int section;
  int interval;
  double offset;  // x - a, in [0, interval width)
};

/// Section-doubling piecewise polynomial tables indexed by x = r^2.
///
/// Section s covers [x_min 2^s, x_min 2^(s+1)) and holds `intervals` equal
/// intervals. Each interval stores coefficients C0..C_order of a polynomial
/// in the offset x - a, evaluated by Horner's rule.
class InterpolationTableSet {
 public:
  InterpolationTableSet(int order, int intervals, double x_min, int sections,
                        std::array<Eigen::MatrixXd, 3> coefficients);

  int order() const { return order_; }
  int intervals() const { return intervals_; }
  int sections() const { return sections_; }
  double x_min() const { return x_min_; }
  /// End of the last section, x_min 2^sections.
  double x_max() const { return x_max_; }

  double section_start(int s) const { return starts_[static_cast<std::size_t>(s)]; }
  double interval_width(int s) const { return widths_[static_cast<std::size_t>(s)]; }
  double interval_start(int s, int i) const { return section_start(s) + i * interval_width(s); }

  LookupIndex lookup(double x) const;

  /// Coefficients (C0..C_order) of term `t` (index into kTableExponents).
  auto coefficients(int t, int section, int interval) const {
    return coeffs_[static_cast<std::size_t>(t)].row(row(section, interval));
  }

  double eval(int t, double x) const { return eval(t, lookup(x)); }
  double eval(int t, const LookupIndex& at) const;

 private:
  Eigen::Index row(int section, int interval) const { return section * intervals_ + interval; }

  int order_;
  int intervals_;
  double x_min_;
  int sections_;
  double x_max_;
  double inv_x_min_;
  std::vector<double> starts_;
  std::vector<double> widths_;
  std::vector<double> inv_widths_;
  std::array<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>, 3> coeffs_;
};

/// Per-interval fit of x^(exponent/2) over the section-doubling layout that
/// covers [x_min, x_max]. Returns a (sections*intervals) x (order+1) matrix.
Eigen::MatrixXd fit_power_table(int exponent, int order, int intervals, double x_min, int sections);

/// Builds the three tables. `intervals` must be a power of two and the
/// covered domain is rounded up to a whole number of sections.
InterpolationTableSet build_tables(int order, int intervals, double x_min, double x_max);

/// Exact evaluation; throws SingularPairError when r^2 <= 0.
double eval_rl_direct(double r2, const PairCoefficients& c);

/// Table evaluation; throws SingularPairError below x_min and DomainError
/// above the table end.
double eval_rl_interp(double r2, const PairCoefficients& c, const InterpolationTableSet& tables);

enum class ForceMode { kDirect, kInterpolated };

struct RlSettings {
  neighbor::Distribution distribution = neighbor::Distribution::kPerPipelineCell;
  neighbor::FilterKind filter = neighbor::FilterKind::kPlanar;
  ForceMode mode = ForceMode::kDirect;
  const InterpolationTableSet* tables = nullptr;
  int workers = 1;
};

struct RlResult {
  double energy = 0.0;
  std::size_t pairs = 0;
};

/// Called after every home cell's pairs have been accumulated, in ascending
/// home-cell order (including cells that produced no pairs).
using HomeCellDone = std::function<void(int home_cell)>;

/// Range-limited pass over the current cell buffer.
///
/// `forces` is resized and zeroed, then every accepted pair adds +f to the
/// reference and -f to the neighbor. Accumulation always follows PairKey
/// order, so the result is bitwise identical for every distribution scheme
/// and worker count.
RlResult rl_pass(const neighbor::CellGrid& grid, const ParticleSet& particles, const LJParamTable& lj,
                 const RlSettings& settings, Eigen::Matrix3Xd& forces, const HomeCellDone& on_done = {});

}  // namespace fmd::rl

#endif  // FMD_RL_HPP
