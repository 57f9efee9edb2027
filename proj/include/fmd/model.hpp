// Domain types shared by every stage of the MD pipeline.
#ifndef FMD_MODEL_HPP
#define FMD_MODEL_HPP

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fmd {

using Vec3 = Eigen::Vector3d;
using Vec3i = Eigen::Vector3i;
using Gid = std::int64_t;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (particles, topology, config).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A structural invariant of a domain type does not hold.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Two particles closer than the force kernels can represent.
class SingularPairError : public Error {
 public:
  using Error::Error;
};

/// Collinear angle or undefined dihedral plane.
class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain of a table or function.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A particle moved more than one cell in a single motion update.
class TimestepTooLargeError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Units: Angstrom, femtosecond, amu, elementary charge, kcal/mol.
// ---------------------------------------------------------------------------
namespace units {
/// (kcal/mol/Angstrom) / amu expressed in Angstrom/fs^2.
inline constexpr double kAccelPerForcePerMass = 4.184e-4;
/// Coulomb constant in kcal*Angstrom/(mol*e^2).
inline constexpr double kCoulomb = 332.0637;
}  // namespace units

// ---------------------------------------------------------------------------
// SimulationBox
// ---------------------------------------------------------------------------

/// Orthorhombic periodic box partitioned into cells no smaller than the cutoff.
class SimulationBox {
 public:
  SimulationBox(const Vec3& lengths, double cutoff, const Vec3i& cells);

  /// Largest cell count per axis compatible with the cutoff: floor(L / rc).
  static SimulationBox with_cutoff(const Vec3& lengths, double cutoff);
  static SimulationBox cubic(double length, double cutoff) {
    return with_cutoff(Vec3::Constant(length), cutoff);
  }

  const Vec3& lengths() const { return lengths_; }
  double cutoff() const { return cutoff_; }
  const Vec3i& cells() const { return cells_; }
  Vec3 cell_edge() const { return lengths_.cwiseQuotient(cells_.cast<double>()); }
  int cell_count() const { return cells_.prod(); }
  double volume() const { return lengths_.prod(); }

  int linear_cell(const Vec3i& c) const { return (c.x() * cells_.y() + c.y()) * cells_.z() + c.z(); }
  Vec3i cell_coords(int linear) const;
  Vec3i wrap_cell(const Vec3i& c) const;

  /// floor(r / edge) per axis; r must already lie inside the box.
  Vec3i cell_of(const Vec3& r) const;
  bool contains(const Vec3& r) const;

  /// Periodic wrap of a position into [0, L) per axis.
  Vec3 wrap(const Vec3& r) const;

 private:
  Vec3 lengths_;
  double cutoff_;
  Vec3i cells_;
};

// ---------------------------------------------------------------------------
// ParticleSet
// ---------------------------------------------------------------------------

struct ParticleRecord {
  Gid gid = 0;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  double charge = 0.0;
  int type = 0;
};

/// Structure-of-arrays particle store, kept sorted by gid.
///
/// The dense index of a particle is the rank of its gid; every force store,
/// cell slot and bonded lookup uses that index. Masses are not part of the
/// particles file and default to 1 amu until `assign_masses` is called.
class ParticleSet {
 public:
  ParticleSet() = default;
  explicit ParticleSet(std::vector<ParticleRecord> records);

  std::size_t size() const { return gids_.size(); }
  bool empty() const { return gids_.empty(); }

  std::span<const Gid> gids() const { return gids_; }
  Gid gid(std::size_t i) const { return gids_[i]; }

  const Eigen::Matrix3Xd& positions() const { return positions_; }
  Eigen::Matrix3Xd& positions() { return positions_; }
  const Eigen::Matrix3Xd& velocities() const { return velocities_; }
  Eigen::Matrix3Xd& velocities() { return velocities_; }
  const Eigen::VectorXd& charges() const { return charges_; }
  const Eigen::VectorXd& masses() const { return masses_; }
  std::span<const int> types() const { return types_; }

  /// Dense index of `gid`, or -1 when absent.
  std::ptrdiff_t find(Gid gid) const;
  std::size_t index_of(Gid gid) const;

  ParticleRecord record(std::size_t i) const;

  void assign_masses(std::span<const double> per_type_mass);
  void wrap_into(const SimulationBox& box);

  double total_charge() const { return charges_.sum(); }
  double kinetic_energy() const;

 private:
  std::vector<Gid> gids_;
  Eigen::Matrix3Xd positions_;
  Eigen::Matrix3Xd velocities_;
  Eigen::VectorXd charges_;
  Eigen::VectorXd masses_;
  std::vector<int> types_;
};

/// Reads the particles format: `natoms N` followed by N lines of
/// `gid x y z vx vy vz q type`. Positions are wrapped into `box`.
ParticleSet load_particles(std::istream& in, const SimulationBox& box);
void write_particles(std::ostream& out, const ParticleSet& particles);

// ---------------------------------------------------------------------------
// Lennard-Jones parameters
// ---------------------------------------------------------------------------

struct LJType {
  double epsilon;  // kcal/mol
  double sigma;    // Angstrom
};

enum class MixingRule { kLorentzBerthelot, kGeometric };

/// Pair coefficients of the range-limited force law, A = 48 eps sigma^12 and
/// B = -24 eps sigma^6, for every ordered pair of types.
class LJParamTable {
 public:
  LJParamTable(Eigen::MatrixXd epsilon, Eigen::MatrixXd sigma);

  int type_count() const { return static_cast<int>(a_.rows()); }
  double epsilon(int a, int b) const { return epsilon_(a, b); }
  double sigma(int a, int b) const { return sigma_(a, b); }
  double a(int ta, int tb) const { return a_(ta, tb); }
  double b(int ta, int tb) const { return b_(ta, tb); }

 private:
  Eigen::MatrixXd epsilon_;
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd a_;
  Eigen::MatrixXd b_;
};

LJParamTable derive_lj_pairs(std::span<const LJType> types,
                             MixingRule rule = MixingRule::kLorentzBerthelot);

// ---------------------------------------------------------------------------
// Bonded topology
// ---------------------------------------------------------------------------

struct Bond {
  Gid i, j;
  double k;   // kcal/mol/A^2
  double r0;  // A
};

struct Angle {
  Gid i, j, k;  // j is the vertex
  double k_theta;
  double theta0;  // rad
  double k_ub;
  double r_ub;
};

struct Dihedral {
  Gid i, j, k, l;
  double k_psi;  // kcal/mol, or kcal/mol/rad^2 when n = 0
  int n;       // periodicity; 0 selects the harmonic form
  double phi;  // rad
};

struct BondedTopology {
  std::vector<Bond> bonds;
  std::vector<Angle> angles;
  std::vector<Dihedral> dihedrals;

  bool empty() const { return bonds.empty() && angles.empty() && dihedrals.empty(); }
  /// Throws InvariantError on unknown gids, repeated gids inside a term, or
  /// duplicate terms (a term and its reverse count as the same term).
  void validate(const ParticleSet& particles) const;
};

// ---------------------------------------------------------------------------
// ForceStore
// ---------------------------------------------------------------------------

/// Per-particle partial forces, indexed by dense particle index.
struct ForceStore {
  Eigen::Matrix3Xd rl;
  Eigen::Matrix3Xd lr;
  Eigen::Matrix3Xd bonded;

  ForceStore() = default;
  explicit ForceStore(std::size_t n) { resize(n); }

  void resize(std::size_t n);
  void clear();
  std::size_t size() const { return static_cast<std::size_t>(rl.cols()); }
};

}  // namespace fmd

#endif  // FMD_MODEL_HPP
