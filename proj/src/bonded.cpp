#include "fmd/bonded.hpp"

#include "fmd/neighbor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace fmd::bonded {

void GlobalParticleStore::refresh(const ParticleSet& particles) {
  gids_.assign(particles.gids().begin(), particles.gids().end());
  positions_ = particles.positions();
}

bool GlobalParticleStore::contains(Gid gid) const { return std::binary_search(gids_.begin(), gids_.end(), gid); }

std::size_t GlobalParticleStore::slot(Gid gid) const {
  const auto it = std::lower_bound(gids_.begin(), gids_.end(), gid);
  if (it == gids_.end() || *it != gid) throw InvariantError("bonded term references unknown gid " + std::to_string(gid));
  return static_cast<std::size_t>(it - gids_.begin());
}

namespace {

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  return a <= -std::numbers::pi ? a + 2.0 * std::numbers::pi : a;
}

}  // namespace

double bond_energy(const Vec3& ri, const Vec3& rj, double k, double r0) {
  const double dr = (ri - rj).norm() - r0;
  return k * dr * dr;
}

double bond_angle(const Vec3& ri, const Vec3& rj, const Vec3& rk) {
  const Vec3 u = ri - rj;
  const Vec3 v = rk - rj;
  return std::atan2(u.cross(v).norm(), u.dot(v));
}

double angle_energy(const Vec3& ri, const Vec3& rj, const Vec3& rk, const Angle& term) {
  const double dt = bond_angle(ri, rj, rk) - term.theta0;
  const double du = (ri - rk).norm() - term.r_ub;
  return term.k_theta * dt * dt + term.k_ub * du * du;
}

double dihedral_angle(const Vec3& ri, const Vec3& rj, const Vec3& rk, const Vec3& rl) {
  const Vec3 b1 = rj - ri;
  const Vec3 b2 = rk - rj;
  const Vec3 b3 = rl - rk;
  const Vec3 m = b1.cross(b2);
  const Vec3 n = b2.cross(b3);
  return std::atan2(b2.norm() * b1.dot(n), m.dot(n));
}

double dihedral_energy(double psi, double k, int n, double phi) {
  if (n > 0) return k * (1.0 + std::cos(n * psi + phi));
  const double d = wrap_angle(psi - phi);
  return k * d * d;
}

TermResult<2> eval_bond(const Vec3& ri, const Vec3& rj, double k, double r0) {
  const Vec3 d = ri - rj;
  const double r = d.norm();
  if (!(r > 0.0)) throw SingularPairError("bond between coincident particles");
  const double dr = r - r0;
  const Vec3 fi = (-2.0 * k * dr / r) * d;
  return {{fi, -fi}, k * dr * dr};
}

TermResult<3> eval_angle(const Vec3& ri, const Vec3& rj, const Vec3& rk, const Angle& term) {
  const Vec3 u = ri - rj;
  const Vec3 v = rk - rj;
  const double lu = u.norm();
  const double lv = v.norm();
  if (!(lu > 0.0) || !(lv > 0.0)) throw DegenerateGeometryError("angle arm of zero length");
  const Vec3 eu = u / lu;
  const Vec3 ev = v / lv;
  const double sin_t = eu.cross(ev).norm();
  if (sin_t < 1e-8) throw DegenerateGeometryError("collinear angle (sin theta < 1e-8)");
  const double cos_t = eu.dot(ev);
  const double theta = std::atan2(sin_t, cos_t);

  const double dt = theta - term.theta0;
  const double dudt = 2.0 * term.k_theta * dt;
  // d theta / d ri and d theta / d rk
  const Vec3 gi = (cos_t * eu - ev) / (lu * sin_t);
  const Vec3 gk = (cos_t * ev - eu) / (lv * sin_t);

  TermResult<3> out;
  out.force[0] = -dudt * gi;
  out.force[2] = -dudt * gk;
  out.energy = term.k_theta * dt * dt;

  if (term.k_ub != 0.0) {
    const Vec3 w = ri - rk;
    const double r = w.norm();
    const double dr = r - term.r_ub;
    const Vec3 f = (-2.0 * term.k_ub * dr / r) * w;
    out.force[0] += f;
    out.force[2] -= f;
    out.energy += term.k_ub * dr * dr;
  }
  out.force[1] = -(out.force[0] + out.force[2]);
  return out;
}

TermResult<4> eval_dihedral(const Vec3& ri, const Vec3& rj, const Vec3& rk, const Vec3& rl,
                            const Dihedral& term) {
  const Vec3 b1 = rj - ri;
  const Vec3 b2 = rk - rj;
  const Vec3 b3 = rl - rk;
  const Vec3 m = b1.cross(b2);
  const Vec3 n = b2.cross(b3);
  const double m2 = m.squaredNorm();
  const double n2 = n.squaredNorm();
  const double lb2 = b2.norm();
  if (!(m2 > 1e-16 * b1.squaredNorm() * b2.squaredNorm()) || !(n2 > 1e-16 * b2.squaredNorm() * b3.squaredNorm())) {
    throw DegenerateGeometryError("dihedral plane undefined (collinear atoms)");
  }
  const double psi = std::atan2(lb2 * b1.dot(n), m.dot(n));

  double dudpsi = 0.0;
  double energy = 0.0;
  if (term.n > 0) {
    const double arg = term.n * psi + term.phi;
    dudpsi = -term.k_psi * term.n * std::sin(arg);
    energy = term.k_psi * (1.0 + std::cos(arg));
  } else {
    const double d = wrap_angle(psi - term.phi);
    dudpsi = 2.0 * term.k_psi * d;
    energy = term.k_psi * d * d;
  }

  const Vec3 gi = (-lb2 / m2) * m;
  const Vec3 gl = (lb2 / n2) * n;
  const double p = -b1.dot(b2) / (lb2 * lb2);
  const double q = -b3.dot(b2) / (lb2 * lb2);
  const Vec3 gj = (p - 1.0) * gi - q * gl;
  const Vec3 gk = (q - 1.0) * gl - p * gi;

  TermResult<4> out;
  out.force = {-dudpsi * gi, -dudpsi * gj, -dudpsi * gk, -dudpsi * gl};
  out.energy = energy;
  return out;
}

BondedResult bonded_pass(const BondedTopology& topology, const GlobalParticleStore& store, const SimulationBox& box,
                         Eigen::Matrix3Xd& forces) {
  forces.setZero(3, static_cast<Eigen::Index>(store.size()));
  BondedResult result;
  const auto col = [](std::size_t s) { return static_cast<Eigen::Index>(s); };
  // member positions relative to the first atom, so terms straddling the
  // periodic boundary see the compact geometry
  const auto near = [&](const Vec3& anchor, std::size_t s) {
    return Vec3(anchor + neighbor::minimum_image(store.positions().col(col(s)) - anchor, box));
  };

  for (const Bond& b : topology.bonds) {
    const std::size_t si = store.slot(b.i);
    const std::size_t sj = store.slot(b.j);
    const Vec3 ri = store.positions().col(col(si));
    const auto t = eval_bond(ri, near(ri, sj), b.k, b.r0);
    forces.col(col(si)) += t.force[0];
    forces.col(col(sj)) += t.force[1];
    result.energy += t.energy;
  }
  for (const Angle& a : topology.angles) {
    const std::array<std::size_t, 3> s = {store.slot(a.i), store.slot(a.j), store.slot(a.k)};
    const Vec3 ri = store.positions().col(col(s[0]));
    const auto t = eval_angle(ri, near(ri, s[1]), near(ri, s[2]), a);
    for (std::size_t m = 0; m < 3; ++m) forces.col(col(s[m])) += t.force[m];
    result.energy += t.energy;
  }
  for (const Dihedral& d : topology.dihedrals) {
    const std::array<std::size_t, 4> s = {store.slot(d.i), store.slot(d.j), store.slot(d.k), store.slot(d.l)};
    const Vec3 ri = store.positions().col(col(s[0]));
    const auto t = eval_dihedral(ri, near(ri, s[1]), near(ri, s[2]), near(ri, s[3]), d);
    for (std::size_t m = 0; m < 4; ++m) forces.col(col(s[m])) += t.force[m];
    result.energy += t.energy;
  }
  return result;
}

}  // namespace fmd::bonded
