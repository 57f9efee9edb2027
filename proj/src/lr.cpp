#include "fmd/lr.hpp"

#include <unsupported/Eigen/FFT>

#include <complex>
#include <string>
#include <vector>

namespace fmd::lr {

using Complex = std::complex<double>;

AxisStencil axis_stencil(double x, double spacing, int k) {
  const double u = x / spacing;
  double base = std::floor(u);
  double t = u - base;
  if (t >= 1.0) {
    base += 1.0;
    t = 0.0;
  }
  AxisStencil s;
  const int b = static_cast<int>(base);
  for (int n = 0; n < 4; ++n) s.nodes[static_cast<std::size_t>(n)] = (((b - 1 + n) % k) + k) % k;
  s.weight = basis_weights(t);
  const auto dw = basis_derivatives(t);
  for (std::size_t n = 0; n < 4; ++n) s.derivative[n] = dw[n] / spacing;
  return s;
}

ChargeGrid::ChargeGrid(int k, const SimulationBox& box)
    : k_(k), spacing_(box.lengths() / k), lengths_(box.lengths()) {
  if (k < 8 || k % 2 != 0) throw InvariantError("grid size K must be even and at least 8, got " + std::to_string(k));
  const Eigen::Index n = static_cast<Eigen::Index>(k) * k * k;
  values_.setZero(n);
  spectrum_.setZero(n);
}

void ChargeGrid::zero() {
  values_.setZero();
  spectrum_.setZero();
}

void spread_charges(const ParticleSet& particles, ChargeGrid& grid) {
  const int k = grid.size();
  const Vec3& h = grid.spacing();
  for (std::size_t p = 0; p < particles.size(); ++p) {
    const auto col = static_cast<Eigen::Index>(p);
    const double q = particles.charges()[col];
    if (q == 0.0) continue;
    const Vec3 r = particles.positions().col(col);
    const AxisStencil sx = axis_stencil(r.x(), h.x(), k);
    const AxisStencil sy = axis_stencil(r.y(), h.y(), k);
    const AxisStencil sz = axis_stencil(r.z(), h.z(), k);
    for (std::size_t a = 0; a < 4; ++a) {
      const double qx = q * sx.weight[a];
      for (std::size_t b = 0; b < 4; ++b) {
        const double qxy = qx * sy.weight[b];
        for (std::size_t c = 0; c < 4; ++c) grid.at(sx.nodes[a], sy.nodes[b], sz.nodes[c]) += qxy * sz.weight[c];
      }
    }
  }
}

void fft3(Eigen::VectorXcd& data, int k, bool inverse) {
  Eigen::FFT<double> fft;
  std::vector<Complex> in(static_cast<std::size_t>(k));
  std::vector<Complex> out(static_cast<std::size_t>(k));
  const Eigen::Index kk = k;
  const std::array<Eigen::Index, 3> strides = {kk * kk, kk, 1};
  for (int axis = 0; axis < 3; ++axis) {
    const Eigen::Index stride = strides[static_cast<std::size_t>(axis)];
    // the two axes orthogonal to `axis` enumerate the lines
    const Eigen::Index s1 = strides[static_cast<std::size_t>((axis + 1) % 3)];
    const Eigen::Index s2 = strides[static_cast<std::size_t>((axis + 2) % 3)];
    for (Eigen::Index a = 0; a < kk; ++a) {
      for (Eigen::Index b = 0; b < kk; ++b) {
        const Eigen::Index origin = a * s1 + b * s2;
        for (Eigen::Index n = 0; n < kk; ++n) in[static_cast<std::size_t>(n)] = data[origin + n * stride];
        if (inverse) {
          fft.inv(out, in);
        } else {
          fft.fwd(out, in);
        }
        for (Eigen::Index n = 0; n < kk; ++n) data[origin + n * stride] = out[static_cast<std::size_t>(n)];
      }
    }
  }
}

void fft3_forward(ChargeGrid& grid) {
  grid.spectrum() = grid.values().cast<Complex>();
  fft3(grid.spectrum(), grid.size(), false);
}

void fft3_inverse(ChargeGrid& grid) {
  Eigen::VectorXcd work = grid.spectrum();
  fft3(work, grid.size(), true);
  grid.values() = work.real();
}

void apply_green(Eigen::VectorXcd& spectrum, int k, const SimulationBox& box) {
  const Vec3& len = box.lengths();
  Eigen::Index idx = 0;
  for (int i = 0; i < k; ++i) {
    const double kx = wavenumber(i, k, len.x());
    for (int j = 0; j < k; ++j) {
      const double ky = wavenumber(j, k, len.y());
      for (int m = 0; m < k; ++m, ++idx) {
        const double kz = wavenumber(m, k, len.z());
        const double k2 = kx * kx + ky * ky + kz * kz;
        spectrum[idx] = k2 == 0.0 ? Complex(0.0) : spectrum[idx] * (4.0 * M_PI / k2);
      }
    }
  }
}

namespace {

// -grad(phi) on the grid, by i k multiplication. The Nyquist plane of each
// derivative axis is dropped so the operator stays antisymmetric.
std::array<Eigen::VectorXd, 3> spectral_field(const ChargeGrid& potential) {
  const int k = potential.size();
  Eigen::VectorXcd phi_hat = potential.values().cast<Complex>();
  fft3(phi_hat, k, false);
  std::array<Eigen::VectorXd, 3> field;
  for (int axis = 0; axis < 3; ++axis) {
    Eigen::VectorXcd work(phi_hat.size());
    Eigen::Index idx = 0;
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        for (int m = 0; m < k; ++m, ++idx) {
          const int n = axis == 0 ? i : (axis == 1 ? j : m);
          const double kv = n == k / 2 ? 0.0 : wavenumber(n, k, potential.lengths()[axis]);
          // E = -i k phi
          work[idx] = Complex(0.0, -kv) * phi_hat[idx];
        }
      }
    }
    fft3(work, k, true);
    field[static_cast<std::size_t>(axis)] = work.real();
  }
  return field;
}

}  // namespace

void gather_forces(const ChargeGrid& potential, const ParticleSet& particles, Eigen::Matrix3Xd& forces,
                   GatherMethod method) {
  const int k = potential.size();
  const Vec3& h = potential.spacing();
  forces.setZero(3, static_cast<Eigen::Index>(particles.size()));
  std::array<Eigen::VectorXd, 3> field;
  if (method == GatherMethod::kSpectralGradient) field = spectral_field(potential);

  for (std::size_t p = 0; p < particles.size(); ++p) {
    const auto col = static_cast<Eigen::Index>(p);
    const double q = particles.charges()[col];
    if (q == 0.0) continue;
    const Vec3 r = particles.positions().col(col);
    const AxisStencil sx = axis_stencil(r.x(), h.x(), k);
    const AxisStencil sy = axis_stencil(r.y(), h.y(), k);
    const AxisStencil sz = axis_stencil(r.z(), h.z(), k);
    Vec3 f = Vec3::Zero();
    if (method == GatherMethod::kSpectralGradient) {
      for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = 0; b < 4; ++b) {
          const double wxy = sx.weight[a] * sy.weight[b];
          for (std::size_t c = 0; c < 4; ++c) {
            const Eigen::Index g = potential.index(sx.nodes[a], sy.nodes[b], sz.nodes[c]);
            const double w = wxy * sz.weight[c];
            f += w * Vec3(field[0][g], field[1][g], field[2][g]);
          }
        }
      }
      f *= q * units::kCoulomb;
    } else {
      // Partial contractions along each axis. The derivative weights sum to
      // zero, so subtracting the first node's value leaves the gradient
      // unchanged and makes a constant potential give exactly zero.
      Eigen::Array4d along_x = Eigen::Array4d::Zero();
      Eigen::Array4d along_y = Eigen::Array4d::Zero();
      Eigen::Array4d along_z = Eigen::Array4d::Zero();
      for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = 0; b < 4; ++b) {
          for (std::size_t c = 0; c < 4; ++c) {
            const double phi = potential.at(sx.nodes[a], sy.nodes[b], sz.nodes[c]);
            along_x[static_cast<Eigen::Index>(a)] += sy.weight[b] * sz.weight[c] * phi;
            along_y[static_cast<Eigen::Index>(b)] += sx.weight[a] * sz.weight[c] * phi;
            along_z[static_cast<Eigen::Index>(c)] += sx.weight[a] * sy.weight[b] * phi;
          }
        }
      }
      Vec3 grad = Vec3::Zero();
      for (Eigen::Index n = 0; n < 4; ++n) {
        const auto un = static_cast<std::size_t>(n);
        grad.x() += sx.derivative[un] * (along_x[n] - along_x[0]);
        grad.y() += sy.derivative[un] * (along_y[n] - along_y[0]);
        grad.z() += sz.derivative[un] * (along_z[n] - along_z[0]);
      }
      f = -q * units::kCoulomb * grad;
    }
    forces.col(col) = f;
  }
}

LrResult lr_pass(const ParticleSet& particles, int k, const SimulationBox& box, Eigen::Matrix3Xd& forces,
                 GatherMethod method) {
  forces.setZero(3, static_cast<Eigen::Index>(particles.size()));
  ChargeGrid grid(k, box);
  // an uncharged system has no long-range field
  if (particles.empty() || (particles.charges().array() == 0.0).all()) return {};
  spread_charges(particles, grid);
  const Eigen::VectorXd charge = grid.values();

  fft3_forward(grid);
  grid.spectrum() /= grid.node_volume();  // charge per node -> density
  apply_green(grid.spectrum(), k, box);
  fft3_inverse(grid);

  gather_forces(grid, particles, forces, method);
  return {0.5 * units::kCoulomb * charge.dot(grid.values())};
}

}  // namespace fmd::lr
