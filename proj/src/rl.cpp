#include "fmd/rl.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace fmd::rl {

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

InterpolationTableSet::InterpolationTableSet(int order, int intervals, double x_min, int sections,
                                             std::array<Eigen::MatrixXd, 3> coefficients)
    : order_(order),
      intervals_(intervals),
      x_min_(x_min),
      sections_(sections),
      x_max_(std::ldexp(x_min, sections)),
      inv_x_min_(1.0 / x_min),
      coeffs_{coefficients[0], coefficients[1], coefficients[2]} {
  for (int s = 0; s <= sections; ++s) {
    starts_.push_back(std::ldexp(x_min, s));
    widths_.push_back(starts_.back() / intervals);
    inv_widths_.push_back(intervals / starts_.back());
  }
  for (const auto& c : coeffs_) {
    if (c.rows() != static_cast<Eigen::Index>(sections) * intervals || c.cols() != order + 1) {
      throw InvariantError("interpolation coefficient matrix has the wrong shape");
    }
  }
}

LookupIndex InterpolationTableSet::lookup(double x) const {
  if (!(x >= x_min_) || !(x <= x_max_)) {
    throw DomainError("r^2 = " + std::to_string(x) + " outside table domain [" + std::to_string(x_min_) +
                      ", " + std::to_string(x_max_) + "]");
  }
  // binary exponent of x / x_min; the ratio may be off by an ulp, settled below
  int s = static_cast<int>((std::bit_cast<std::uint64_t>(x * inv_x_min_) >> 52) & 0x7ff) - 1023;
  s = std::clamp(s, 0, sections_);
  if (s > 0 && x < section_start(s)) --s;
  if (s + 1 <= sections_ && x >= section_start(s + 1)) ++s;
  if (s >= sections_) return {sections_ - 1, intervals_ - 1, x - interval_start(sections_ - 1, intervals_ - 1)};
  const double start = section_start(s);
  const double width = interval_width(s);
  int i = std::clamp(static_cast<int>((x - start) * inv_widths_[static_cast<std::size_t>(s)]), 0, intervals_ - 1);
  if (x < start + i * width) --i;
  if (i + 1 < intervals_ && x >= start + (i + 1) * width) ++i;
  return {s, i, x - (start + i * width)};
}

double InterpolationTableSet::eval(int t, const LookupIndex& at) const {
  const auto c = coefficients(t, at.section, at.interval);
  double acc = c[order_];
  for (int p = order_ - 1; p >= 0; --p) acc = acc * at.offset + c[p];
  return acc;
}

Eigen::MatrixXd fit_power_table(int exponent, int order, int intervals, double x_min, int sections) {
  const int samples = 4 * (order + 1);
  // Chebyshev nodes on [0, 1]: least squares on them is close to the minimax fit
  Eigen::VectorXd u(samples);
  for (int j = 0; j < samples; ++j) {
    u[j] = 0.5 * (1.0 - std::cos(std::numbers::pi * (j + 0.5) / samples));
  }
  Eigen::MatrixXd vandermonde(samples, order + 1);
  for (int p = 0; p <= order; ++p) vandermonde.col(p) = u.array().pow(p);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(vandermonde);

  const double power = 0.5 * exponent;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(sections) * intervals, order + 1);
  for (int s = 0; s < sections; ++s) {
    const double start = std::ldexp(x_min, s);
    const double width = start / intervals;
    for (int i = 0; i < intervals; ++i) {
      const double a = start + i * width;
      const Eigen::VectorXd y = (a + width * u.array()).pow(power).matrix();
      const Eigen::VectorXd c = qr.solve(y);
      const Eigen::Index r = static_cast<Eigen::Index>(s) * intervals + i;
      for (int p = 0; p <= order; ++p) out(r, p) = c[p] / std::pow(width, p);
    }
  }
  return out;
}

InterpolationTableSet build_tables(int order, int intervals, double x_min, double x_max) {
  if (order < 1 || order > 3) throw DomainError("interpolation order must be 1, 2 or 3");
  if (intervals < 1 || !std::has_single_bit(static_cast<unsigned>(intervals))) {
    throw DomainError("intervals per section must be a power of two");
  }
  if (!(x_min > 0.0)) throw DomainError("table domain must start above r^2 = 0");
  if (!(x_max > x_min)) throw DomainError("table domain end must exceed its start");
  const int sections = std::max(1, static_cast<int>(std::ceil(std::log2(x_max / x_min) - 1e-12)));
  const int covered = std::ldexp(x_min, sections) >= x_max ? sections : sections + 1;
  std::array<Eigen::MatrixXd, 3> coeffs;
  for (std::size_t t = 0; t < kTableExponents.size(); ++t) {
    coeffs[t] = fit_power_table(kTableExponents[t], order, intervals, x_min, covered);
  }
  return InterpolationTableSet(order, intervals, x_min, covered, std::move(coeffs));
}

// ---------------------------------------------------------------------------
// Pair kernels
// ---------------------------------------------------------------------------

double eval_rl_direct(double r2, const PairCoefficients& c) {
  if (!(r2 > 0.0)) throw SingularPairError("coincident particles (r^2 = 0)");
  return force_over_r(r2, c.a, c.b, c.qq);
}

double eval_rl_interp(double r2, const PairCoefficients& c, const InterpolationTableSet& tables) {
  if (!(r2 >= tables.x_min())) {
    throw SingularPairError("pair distance below the interpolation table domain (r^2 = " + std::to_string(r2) + ")");
  }
  const LookupIndex at = tables.lookup(r2);
  return c.a * tables.eval(0, at) + c.b * tables.eval(1, at) + c.qq * tables.eval(2, at);
}

// ---------------------------------------------------------------------------
// Pass
// ---------------------------------------------------------------------------

RlResult rl_pass(const neighbor::CellGrid& grid, const ParticleSet& particles, const LJParamTable& lj,
                 const RlSettings& settings, Eigen::Matrix3Xd& forces, const HomeCellDone& on_done) {
  const bool interp = settings.mode == ForceMode::kInterpolated;
  if (interp) {
    if (settings.tables == nullptr) throw InvariantError("interpolated RL pass requires tables");
    const double rc2 = grid.box().cutoff() * grid.box().cutoff();
    if (settings.tables->x_max() < rc2) throw DomainError("interpolation tables do not reach the cutoff");
  }
  forces.setZero(3, static_cast<Eigen::Index>(particles.size()));

  const auto& q = particles.charges();
  const auto types = particles.types();
  RlResult result;
  std::vector<double> scalar;
  std::vector<double> energy;
  std::vector<std::uint32_t> order;

  // Accumulates one home cell's pairs in PairKey order.
  const auto consume = [&](const neighbor::PairStream& stream, std::size_t begin, std::size_t end) {
    const std::size_t n = end - begin;
    scalar.resize(n);
    energy.resize(n);
    for (std::size_t p = 0; p < n; ++p) {
      const auto& rec = stream[begin + p];
      const int ta = types[rec.ref_index];
      const int tb = types[rec.nb_index];
      const PairCoefficients c{lj.a(ta, tb), lj.b(ta, tb), units::kCoulomb * q[rec.ref_index] * q[rec.nb_index]};
      scalar[p] = interp ? eval_rl_interp(rec.r2, c, *settings.tables) : eval_rl_direct(rec.r2, c);
      energy[p] = pair_energy(rec.r2, c.a, c.b, c.qq);
    }
    order.resize(n);
    std::iota(order.begin(), order.end(), 0u);
    const auto by_key = [&](std::uint32_t x, std::uint32_t y) { return stream[begin + x].key < stream[begin + y].key; };
    if (!std::is_sorted(order.begin(), order.end(), by_key)) std::sort(order.begin(), order.end(), by_key);
    for (const std::uint32_t p : order) {
      const auto& rec = stream[begin + p];
      const Vec3 f = scalar[p] * rec.disp;
      forces.col(rec.ref_index) += f;
      forces.col(rec.nb_index) -= f;
      result.energy += energy[p];
    }
    result.pairs += n;
  };

  if (settings.workers > 1 && settings.distribution == neighbor::Distribution::kPerPipelineCell) {
    const neighbor::PairStream stream =
        neighbor::generate_pairs(grid, settings.distribution, settings.filter, settings.workers);
    std::size_t begin = 0;
    for (int cell = 0; cell < grid.cell_count(); ++cell) {
      std::size_t end = begin;
      while (end < stream.size() && stream[end].key.home_cell == static_cast<std::uint32_t>(cell)) ++end;
      consume(stream, begin, end);
      begin = end;
      if (on_done) on_done(cell);
    }
    return result;
  }

  neighbor::PairStream block;
  for (int cell = 0; cell < grid.cell_count(); ++cell) {
    block.clear();
    neighbor::generate_home_cell_pairs(grid, cell, settings.distribution, settings.filter, block);
    consume(block, 0, block.size());
    if (on_done) on_done(cell);
  }
  return result;
}

}  // namespace fmd::rl
