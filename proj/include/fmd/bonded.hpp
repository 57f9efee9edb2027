// Bond, angle (with Urey-Bradley) and dihedral terms over a gid-addressed
// particle store.
#ifndef FMD_BONDED_HPP
#define FMD_BONDED_HPP

#include "fmd/model.hpp"

#include <Eigen/Geometry>

#include <array>
#include <vector>

namespace fmd::bonded {

/// Positions addressed by gid. Rebuilt from the ParticleSet after every
/// motion update.
class GlobalParticleStore {
 public:
  GlobalParticleStore() = default;
  explicit GlobalParticleStore(const ParticleSet& particles) { refresh(particles); }

  void refresh(const ParticleSet& particles);

  std::size_t size() const { return gids_.size(); }
  bool contains(Gid gid) const;
  /// Slot of `gid`; throws InvariantError when the gid is unknown.
  std::size_t slot(Gid gid) const;
  Vec3 position(Gid gid) const { return positions_.col(static_cast<Eigen::Index>(slot(gid))); }
  const Eigen::Matrix3Xd& positions() const { return positions_; }

 private:
  std::vector<Gid> gids_;  // ascending
  Eigen::Matrix3Xd positions_;
};

template <int N>
struct TermResult {
  std::array<Vec3, N> force;
  double energy = 0.0;
};

// Energies. Positions are taken as given (no periodic wrap).
double bond_energy(const Vec3& ri, const Vec3& rj, double k, double r0);
double bond_angle(const Vec3& ri, const Vec3& rj, const Vec3& rk);
double angle_energy(const Vec3& ri, const Vec3& rj, const Vec3& rk, const Angle& term);
/// Signed angle between the (i,j,k) and (j,k,l) planes, in (-pi, pi].
double dihedral_angle(const Vec3& ri, const Vec3& rj, const Vec3& rk, const Vec3& rl);
double dihedral_energy(double psi, double k, int n, double phi);

/// U = k (r - r0)^2. Force on i is -2k(r - r0) e, e the unit vector from j
/// to i. Throws SingularPairError for coincident particles.
TermResult<2> eval_bond(const Vec3& ri, const Vec3& rj, double k, double r0);

/// U = k_theta (theta - theta0)^2 + k_ub (r_ik - r_ub)^2, j the vertex.
/// Throws DegenerateGeometryError when sin(theta) < 1e-8.
TermResult<3> eval_angle(const Vec3& ri, const Vec3& rj, const Vec3& rk, const Angle& term);

/// U = k (1 + cos(n psi + phi)) for n > 0, k (psi - phi)^2 for n = 0 with the
/// difference wrapped into (-pi, pi]. Throws DegenerateGeometryError when
/// either plane is undefined.
TermResult<4> eval_dihedral(const Vec3& ri, const Vec3& rj, const Vec3& rk, const Vec3& rl,
                            const Dihedral& term);

struct BondedResult {
  double energy = 0.0;
};

/// Bonds, then angles, then dihedrals, each in file order. Member positions
/// are unwrapped by minimum image relative to the first atom of the term.
/// `forces` is resized to the store size and overwritten; column s belongs to
/// store slot s.
BondedResult bonded_pass(const BondedTopology& topology, const GlobalParticleStore& store, const SimulationBox& box,
                         Eigen::Matrix3Xd& forces);

}  // namespace fmd::bonded

#endif  // FMD_BONDED_HPP
