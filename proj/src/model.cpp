#include "fmd/model.hpp"

#include "text.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <string>
#include <tuple>

namespace fmd {

// ---------------------------------------------------------------------------
// SimulationBox
// ---------------------------------------------------------------------------

SimulationBox::SimulationBox(const Vec3& lengths, double cutoff, const Vec3i& cells)
    : lengths_(lengths), cutoff_(cutoff), cells_(cells) {
  if (!(lengths.minCoeff() > 0.0) || !lengths.allFinite()) {
    throw InvariantError("box lengths must be positive and finite");
  }
  if (!(cutoff > 0.0) || !std::isfinite(cutoff)) throw InvariantError("cutoff must be positive");
  if (cells.minCoeff() < 3) {
    throw InvariantError("at least 3 cells per axis are required (box too small for the cutoff)");
  }
  for (int a = 0; a < 3; ++a) {
    if (lengths[a] / cells[a] < cutoff) {
      throw InvariantError("cell edge " + std::to_string(lengths[a] / cells[a]) +
                           " is smaller than the cutoff " + std::to_string(cutoff));
    }
  }
}

SimulationBox SimulationBox::with_cutoff(const Vec3& lengths, double cutoff) {
  if (!(cutoff > 0.0)) throw InvariantError("cutoff must be positive");
  Vec3i cells;
  for (int a = 0; a < 3; ++a) cells[a] = static_cast<int>(std::floor(lengths[a] / cutoff));
  return SimulationBox(lengths, cutoff, cells);
}

Vec3i SimulationBox::cell_coords(int linear) const {
  const int z = linear % cells_.z();
  const int rest = linear / cells_.z();
  return {rest / cells_.y(), rest % cells_.y(), z};
}

Vec3i SimulationBox::wrap_cell(const Vec3i& c) const {
  Vec3i out;
  for (int a = 0; a < 3; ++a) out[a] = ((c[a] % cells_[a]) + cells_[a]) % cells_[a];
  return out;
}

Vec3i SimulationBox::cell_of(const Vec3& r) const {
  Vec3i c;
  for (int a = 0; a < 3; ++a) {
    const double edge = lengths_[a] / cells_[a];
    c[a] = std::clamp(static_cast<int>(std::floor(r[a] / edge)), 0, cells_[a] - 1);
  }
  return c;
}

bool SimulationBox::contains(const Vec3& r) const {
  for (int a = 0; a < 3; ++a) {
    if (!(r[a] >= 0.0 && r[a] < lengths_[a])) return false;
  }
  return true;
}

Vec3 SimulationBox::wrap(const Vec3& r) const {
  Vec3 out;
  for (int a = 0; a < 3; ++a) {
    const double len = lengths_[a];
    double x = r[a];
    if (x < 0.0 || x >= len) {
      x = std::fmod(x, len);
      if (x < 0.0) x += len;
      // x + len can round up to len for tiny negative x
      if (x >= len) x = 0.0;
    }
    out[a] = x;
  }
  return out;
}

// ---------------------------------------------------------------------------
// ParticleSet
// ---------------------------------------------------------------------------

ParticleSet::ParticleSet(std::vector<ParticleRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const ParticleRecord& a, const ParticleRecord& b) { return a.gid < b.gid; });
  const std::size_t n = records.size();
  gids_.resize(n);
  types_.resize(n);
  positions_.resize(3, static_cast<Eigen::Index>(n));
  velocities_.resize(3, static_cast<Eigen::Index>(n));
  charges_.resize(static_cast<Eigen::Index>(n));
  masses_ = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = records[i];
    if (r.gid < 0) throw InvariantError("negative gid " + std::to_string(r.gid));
    if (i > 0 && records[i - 1].gid == r.gid) {
      throw InvariantError("duplicate gid " + std::to_string(r.gid));
    }
    if (!r.position.allFinite() || !r.velocity.allFinite() || !std::isfinite(r.charge)) {
      throw InvariantError("non-finite value for gid " + std::to_string(r.gid));
    }
    if (r.type < 0) throw InvariantError("negative type for gid " + std::to_string(r.gid));
    const auto col = static_cast<Eigen::Index>(i);
    gids_[i] = r.gid;
    types_[i] = r.type;
    positions_.col(col) = r.position;
    velocities_.col(col) = r.velocity;
    charges_[col] = r.charge;
  }
}

std::ptrdiff_t ParticleSet::find(Gid gid) const {
  const auto it = std::lower_bound(gids_.begin(), gids_.end(), gid);
  if (it == gids_.end() || *it != gid) return -1;
  return it - gids_.begin();
}

std::size_t ParticleSet::index_of(Gid gid) const {
  const auto i = find(gid);
  if (i < 0) throw InvariantError("unknown gid " + std::to_string(gid));
  return static_cast<std::size_t>(i);
}

ParticleRecord ParticleSet::record(std::size_t i) const {
  const auto col = static_cast<Eigen::Index>(i);
  return {gids_[i], positions_.col(col), velocities_.col(col), charges_[col], types_[i]};
}

void ParticleSet::assign_masses(std::span<const double> per_type_mass) {
  for (std::size_t i = 0; i < size(); ++i) {
    const auto t = static_cast<std::size_t>(types_[i]);
    if (t >= per_type_mass.size()) {
      throw InvariantError("particle " + std::to_string(gids_[i]) + " has undefined type " +
                           std::to_string(types_[i]));
    }
    if (!(per_type_mass[t] > 0.0)) throw InvariantError("masses must be positive");
    masses_[static_cast<Eigen::Index>(i)] = per_type_mass[t];
  }
}

void ParticleSet::wrap_into(const SimulationBox& box) {
  for (Eigen::Index i = 0; i < positions_.cols(); ++i) positions_.col(i) = box.wrap(positions_.col(i));
}

double ParticleSet::kinetic_energy() const {
  const Eigen::VectorXd v2 = velocities_.colwise().squaredNorm().transpose();
  return 0.5 * masses_.dot(v2) / units::kAccelPerForcePerMass;
}

ParticleSet load_particles(std::istream& in, const SimulationBox& box) {
  std::string line;
  std::size_t line_no = 0;
  long long declared = -1;
  std::vector<ParticleRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = text::trim(std::string_view(line).substr(0, line.find('#')));
    if (body.empty()) continue;
    const auto tok = text::split(body);
    if (declared < 0) {
      if (tok.size() != 2 || tok[0] != "natoms" || !text::parse_int(tok[1], declared) || declared < 0) {
        throw ParseError(text::where(line_no) + "expected header 'natoms N'");
      }
      records.reserve(static_cast<std::size_t>(declared));
      continue;
    }
    if (tok.size() != 9) {
      throw ParseError(text::where(line_no) + "expected 9 fields 'gid x y z vx vy vz q type', got " +
                       std::to_string(tok.size()));
    }
    ParticleRecord r;
    double v[7];
    bool ok = text::parse_int(tok[0], r.gid);
    for (int k = 0; k < 7; ++k) ok = ok && text::parse_double(tok[k + 1], v[k]);
    ok = ok && text::parse_double(tok[7], r.charge) && text::parse_int(tok[8], r.type);
    if (!ok) throw ParseError(text::where(line_no) + "malformed particle line");
    r.position = Vec3(v[0], v[1], v[2]);
    r.velocity = Vec3(v[3], v[4], v[5]);
    if (!r.position.allFinite()) throw ParseError(text::where(line_no) + "non-finite position");
    if (!r.velocity.allFinite() || !std::isfinite(r.charge)) {
      throw ParseError(text::where(line_no) + "non-finite velocity or charge");
    }
    if (r.gid < 0 || r.type < 0) throw ParseError(text::where(line_no) + "gid and type must be non-negative");
    r.position = box.wrap(r.position);
    records.push_back(r);
  }
  if (declared < 0) throw ParseError("missing 'natoms N' header");
  if (static_cast<long long>(records.size()) != declared) {
    throw ParseError("header declares " + std::to_string(declared) + " atoms but file has " +
                     std::to_string(records.size()));
  }
  std::vector<Gid> gids(records.size());
  std::transform(records.begin(), records.end(), gids.begin(), [](const auto& r) { return r.gid; });
  std::sort(gids.begin(), gids.end());
  if (const auto dup = std::adjacent_find(gids.begin(), gids.end()); dup != gids.end()) {
    throw ParseError("duplicate gid " + std::to_string(*dup));
  }
  return ParticleSet(std::move(records));
}

void write_particles(std::ostream& out, const ParticleSet& particles) {
  out << "natoms " << particles.size() << '\n';
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const auto r = particles.record(i);
    out << r.gid;
    for (int a = 0; a < 3; ++a) out << ' ' << text::format_double(r.position[a]);
    for (int a = 0; a < 3; ++a) out << ' ' << text::format_double(r.velocity[a]);
    out << ' ' << text::format_double(r.charge) << ' ' << r.type << '\n';
  }
}

// ---------------------------------------------------------------------------
// LJ parameters
// ---------------------------------------------------------------------------

LJParamTable::LJParamTable(Eigen::MatrixXd epsilon, Eigen::MatrixXd sigma)
    : epsilon_(std::move(epsilon)), sigma_(std::move(sigma)) {
  if (epsilon_.rows() != epsilon_.cols() || sigma_.rows() != sigma_.cols() ||
      epsilon_.rows() != sigma_.rows()) {
    throw InvariantError("LJ parameter matrices must be square and of equal size");
  }
  if (!epsilon_.isApprox(epsilon_.transpose(), 0.0) || !sigma_.isApprox(sigma_.transpose(), 0.0)) {
    throw InvariantError("LJ parameter matrices must be symmetric");
  }
  if (epsilon_.size() > 0 && (!(epsilon_.minCoeff() > 0.0) || !(sigma_.minCoeff() > 0.0))) {
    throw InvariantError("LJ epsilon and sigma must be positive");
  }
  const Eigen::ArrayXXd s6 = sigma_.array().pow(6);
  a_ = (48.0 * epsilon_.array() * s6 * s6).matrix();
  b_ = (-24.0 * epsilon_.array() * s6).matrix();
}

LJParamTable derive_lj_pairs(std::span<const LJType> types, MixingRule rule) {
  const auto n = static_cast<Eigen::Index>(types.size());
  for (const auto& t : types) {
    if (!(t.epsilon > 0.0) || !(t.sigma > 0.0)) {
      throw InvariantError("LJ epsilon and sigma must be positive");
    }
  }
  Eigen::MatrixXd eps(n, n), sig(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto& ta = types[static_cast<std::size_t>(a)];
      const auto& tb = types[static_cast<std::size_t>(b)];
      eps(a, b) = std::sqrt(ta.epsilon * tb.epsilon);
      sig(a, b) = rule == MixingRule::kLorentzBerthelot ? 0.5 * (ta.sigma + tb.sigma)
                                                        : std::sqrt(ta.sigma * tb.sigma);
    }
  }
  // sqrt(x*y) and (x+y)/2 are commutative, so both matrices are exactly symmetric
  return LJParamTable(std::move(eps), std::move(sig));
}

// ---------------------------------------------------------------------------
// Topology
// ---------------------------------------------------------------------------

namespace {

void require_known(const ParticleSet& p, Gid g, const char* what) {
  if (p.find(g) < 0) {
    throw InvariantError(std::string(what) + " references unknown gid " + std::to_string(g));
  }
}

template <std::size_t N>
void require_distinct(const std::array<Gid, N>& ids, const char* what) {
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = a + 1; b < N; ++b) {
      if (ids[a] == ids[b]) {
        throw InvariantError(std::string(what) + " repeats gid " + std::to_string(ids[a]));
      }
    }
  }
}

template <std::size_t N>
std::array<Gid, N> canonical(std::array<Gid, N> ids) {
  std::array<Gid, N> rev;
  std::reverse_copy(ids.begin(), ids.end(), rev.begin());
  return std::min(ids, rev);
}

template <std::size_t N>
void check_terms(const ParticleSet& p, const std::vector<std::array<Gid, N>>& terms, const char* what) {
  std::set<std::array<Gid, N>> seen;
  for (const auto& ids : terms) {
    for (Gid g : ids) require_known(p, g, what);
    require_distinct(ids, what);
    if (!seen.insert(canonical(ids)).second) {
      throw InvariantError(std::string("duplicate ") + what + " starting at gid " + std::to_string(ids[0]));
    }
  }
}

}  // namespace

void BondedTopology::validate(const ParticleSet& particles) const {
  std::vector<std::array<Gid, 2>> b;
  std::vector<std::array<Gid, 3>> a;
  std::vector<std::array<Gid, 4>> d;
  for (const auto& t : bonds) b.push_back({t.i, t.j});
  for (const auto& t : angles) a.push_back({t.i, t.j, t.k});
  for (const auto& t : dihedrals) d.push_back({t.i, t.j, t.k, t.l});
  check_terms(particles, b, "bond");
  check_terms(particles, a, "angle");
  check_terms(particles, d, "dihedral");
  for (const auto& t : dihedrals) {
    if (t.n < 0) throw InvariantError("dihedral periodicity must be non-negative");
  }
}

// ---------------------------------------------------------------------------
// ForceStore
// ---------------------------------------------------------------------------

void ForceStore::resize(std::size_t n) {
  const auto cols = static_cast<Eigen::Index>(n);
  rl.setZero(3, cols);
  lr.setZero(3, cols);
  bonded.setZero(3, cols);
}

void ForceStore::clear() {
  rl.setZero();
  lr.setZero();
  bonded.setZero();
}

}  // namespace fmd
