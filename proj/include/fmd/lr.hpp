// Long-range electrostatics on a periodic charge grid.
//
// Pipeline: spread charges with the third-order basis onto a K^3 grid,
// forward FFT, multiply by the Green's function 4 pi / |k|^2, inverse FFT,
// gather forces back onto the particles.
#ifndef FMD_LR_HPP
#define FMD_LR_HPP

#include "fmd/model.hpp"

#include <array>
#include <cmath>

namespace fmd::lr {

/// Interpolation weights on the four closest grid nodes (offsets -1, 0, +1,
/// +2 from floor(x/h)) for fractional offset t in [0, 1).
template <typename Scalar>
std::array<Scalar, 4> basis_weights(Scalar t) {
  const Scalar t2 = t * t;
  const Scalar t3 = t2 * t;
  return {Scalar(-0.5) * t3 + t2 - Scalar(0.5) * t,
          Scalar(1.5) * t3 - Scalar(2.5) * t2 + Scalar(1),
          Scalar(-1.5) * t3 + Scalar(2) * t2 + Scalar(0.5) * t,
          Scalar(0.5) * t3 - Scalar(0.5) * t2};
}

/// d/dt of basis_weights.
template <typename Scalar>
std::array<Scalar, 4> basis_derivatives(Scalar t) {
  const Scalar t2 = t * t;
  return {Scalar(-1.5) * t2 + Scalar(2) * t - Scalar(0.5),
          Scalar(4.5) * t2 - Scalar(5) * t,
          Scalar(-4.5) * t2 + Scalar(4) * t + Scalar(0.5),
          Scalar(1.5) * t2 - t};
}

/// One axis of a particle's 4x4x4 stencil.
struct AxisStencil {
  std::array<int, 4> nodes;
  std::array<double, 4> weight;
  std::array<double, 4> derivative;  // d weight / dx, per Angstrom
};

AxisStencil axis_stencil(double x, double spacing, int k);

/// K^3 real grid plus a complex workspace of the same shape. Row-major
/// (i, j, k) layout, i along x.
class ChargeGrid {
 public:
  ChargeGrid(int k, const SimulationBox& box);

  int size() const { return k_; }
  const Vec3& spacing() const { return spacing_; }
  const Vec3& lengths() const { return lengths_; }
  double node_volume() const { return spacing_.prod(); }

  Eigen::Index index(int i, int j, int k) const {
    return (static_cast<Eigen::Index>(i) * k_ + j) * k_ + k;
  }
  double& at(int i, int j, int k) { return values_[index(i, j, k)]; }
  double at(int i, int j, int k) const { return values_[index(i, j, k)]; }

  Eigen::VectorXd& values() { return values_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXcd& spectrum() { return spectrum_; }
  const Eigen::VectorXcd& spectrum() const { return spectrum_; }

  void zero();

 private:
  int k_;
  Vec3 spacing_;
  Vec3 lengths_;
  Eigen::VectorXd values_;
  Eigen::VectorXcd spectrum_;
};

/// Deposits q * wx * wy * wz on the 64 stencil nodes of every particle, in
/// particle (gid) order. The grid holds charge per node.
void spread_charges(const ParticleSet& particles, ChargeGrid& grid);

/// In-place 3-D DFT, one axis after another. The inverse is scaled by 1/K^3.
void fft3(Eigen::VectorXcd& data, int k, bool inverse);

/// values -> spectrum
void fft3_forward(ChargeGrid& grid);
/// spectrum -> values (real part)
void fft3_inverse(ChargeGrid& grid);

/// Angular wavenumber of FFT index m on an axis of length `length`.
inline double wavenumber(int m, int k, double length) {
  const int signed_m = m <= k / 2 ? m : m - k;
  return 2.0 * M_PI * signed_m / length;
}

/// Multiplies each nonzero mode by 4 pi / |k|^2 and clears the zero mode.
void apply_green(Eigen::VectorXcd& spectrum, int k, const SimulationBox& box);

enum class GatherMethod {
  /// E = -grad(phi) formed spectrally (i k phi), interpolated with the basis
  /// weights. Net force vanishes to rounding.
  kSpectralGradient,
  /// Analytic derivative of the basis weights applied to phi.
  kBasisDerivative,
};

/// F = -q k_C grad(phi) at each particle. `potential.values()` holds phi in
/// e/Angstrom (Gaussian units).
void gather_forces(const ChargeGrid& potential, const ParticleSet& particles, Eigen::Matrix3Xd& forces,
                   GatherMethod method = GatherMethod::kSpectralGradient);

struct LrResult {
  double energy = 0.0;  // 1/2 k_C sum_g Q_g phi_g, kcal/mol
};

/// Full long-range pass on a fixed position snapshot. `forces` is resized and
/// overwritten.
LrResult lr_pass(const ParticleSet& particles, int k, const SimulationBox& box, Eigen::Matrix3Xd& forces,
                 GatherMethod method = GatherMethod::kSpectralGradient);

}  // namespace fmd::lr

#endif  // FMD_LR_HPP
