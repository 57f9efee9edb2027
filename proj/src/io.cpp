#include "fmd/io.hpp"

#include "text.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace fmd::io {

namespace {

[[noreturn]] void fail(std::size_t line_no, const std::string& msg) { throw ParseError(text::where(line_no) + msg); }

double positive_double(std::string_view tok, std::size_t line_no, std::string_view key) {
  double v = 0.0;
  if (!text::parse_double(tok, v)) fail(line_no, "cannot parse '" + std::string(tok) + "' as a number for " + std::string(key));
  if (!(v > 0.0) || !std::isfinite(v)) fail(line_no, std::string(key) + " must be positive");
  return v;
}

template <typename Int>
Int int_value(std::string_view tok, std::size_t line_no, std::string_view key, Int min_value) {
  Int v{};
  if (!text::parse_int(tok, v)) fail(line_no, "cannot parse '" + std::string(tok) + "' as an integer for " + std::string(key));
  if (v < min_value) fail(line_no, std::string(key) + " must be at least " + std::to_string(min_value));
  return v;
}

void expect_count(const std::vector<std::string_view>& tok, std::size_t n, std::size_t line_no, std::string_view key) {
  if (tok.size() != n) fail(line_no, std::string(key) + " expects " + std::to_string(n) + " value(s)");
}

}  // namespace

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

LJParamTable RunConfig::lj_table() const {
  if (types.empty()) throw InvariantError("configuration defines no particle types");
  const int count = std::max_element(types.begin(), types.end(), [](auto& a, auto& b) { return a.index < b.index; })
                        ->index + 1;
  std::vector<LJType> lj(static_cast<std::size_t>(count), LJType{0.0, 0.0});
  std::vector<int> seen(static_cast<std::size_t>(count), 0);
  for (const auto& t : types) {
    lj[static_cast<std::size_t>(t.index)] = {t.epsilon, t.sigma};
    ++seen[static_cast<std::size_t>(t.index)];
  }
  for (int i = 0; i < count; ++i) {
    if (seen[static_cast<std::size_t>(i)] != 1) {
      throw InvariantError("type " + std::to_string(i) + " must be defined exactly once");
    }
  }
  return derive_lj_pairs(lj, mixing);
}

std::vector<double> RunConfig::masses() const {
  std::vector<double> m;
  for (const auto& t : types) {
    if (static_cast<std::size_t>(t.index) >= m.size()) m.resize(static_cast<std::size_t>(t.index) + 1, 0.0);
    m[static_cast<std::size_t>(t.index)] = t.mass;
  }
  return m;
}

integrate::StepConfig RunConfig::step_config(const rl::InterpolationTableSet* tables) const {
  integrate::StepConfig c;
  c.timestep = timestep;
  c.lr_every = lr_every;
  c.grid_size = grid;
  c.rl.distribution = distribution;
  c.rl.filter = filter;
  c.rl.mode = mode;
  c.rl.tables = tables;
  c.rl.workers = workers;
  c.gather = gather;
  return c;
}

RunConfig parse_config(std::string_view text) {
  RunConfig c;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected 'key = value'");
    const std::string key(text::trim(line.substr(0, eq)));
    const auto tok = text::split(text::trim(line.substr(eq + 1)));
    if (tok.empty()) fail(line_no, "missing value for " + key);

    if (key == "box") {
      if (tok.size() == 1) {
        c.box = Vec3::Constant(positive_double(tok[0], line_no, key));
      } else if (tok.size() == 3) {
        for (int a = 0; a < 3; ++a) c.box[a] = positive_double(tok[static_cast<std::size_t>(a)], line_no, key);
      } else {
        fail(line_no, "box expects 1 or 3 values");
      }
    } else if (key == "cutoff") {
      expect_count(tok, 1, line_no, key);
      c.cutoff = positive_double(tok[0], line_no, key);
    } else if (key == "timestep") {
      expect_count(tok, 1, line_no, key);
      c.timestep = positive_double(tok[0], line_no, key);
    } else if (key == "steps") {
      expect_count(tok, 1, line_no, key);
      c.steps = int_value<std::int64_t>(tok[0], line_no, key, 0);
    } else if (key == "lr_every") {
      expect_count(tok, 1, line_no, key);
      c.lr_every = int_value<int>(tok[0], line_no, key, 1);
    } else if (key == "order") {
      expect_count(tok, 1, line_no, key);
      c.order = int_value<int>(tok[0], line_no, key, 1);
      if (c.order > 3) fail(line_no, "order must be 1, 2 or 3");
    } else if (key == "intervals") {
      expect_count(tok, 1, line_no, key);
      c.intervals = int_value<int>(tok[0], line_no, key, 1);
      if ((c.intervals & (c.intervals - 1)) != 0) fail(line_no, "intervals must be a power of two");
    } else if (key == "filter") {
      expect_count(tok, 1, line_no, key);
      if (tok[0] == "planar") {
        c.filter = neighbor::FilterKind::kPlanar;
      } else if (tok[0] == "direct") {
        c.filter = neighbor::FilterKind::kDirect;
      } else {
        fail(line_no, "filter must be 'planar' or 'direct', got '" + std::string(tok[0]) + "'");
      }
    } else if (key == "distribution") {
      expect_count(tok, 1, line_no, key);
      const int id = int_value<int>(tok[0], line_no, key, 1);
      if (id > 3) fail(line_no, "distribution must be 1, 2 or 3");
      c.distribution = neighbor::distribution_from_id(id);
    } else if (key == "memory") {
      expect_count(tok, 1, line_no, key);
      if (tok[0] == "1" || tok[0] == "global") {
        c.memory = MemoryScheme::kGlobal;
      } else if (tok[0] == "2" || tok[0] == "per-cell") {
        c.memory = MemoryScheme::kPerCell;
      } else {
        fail(line_no, "memory must be 1/global or 2/per-cell");
      }
    } else if (key == "grid") {
      expect_count(tok, 1, line_no, key);
      c.grid = int_value<int>(tok[0], line_no, key, 8);
      if (c.grid % 2 != 0) fail(line_no, "grid must be even");
    } else if (key == "dump_every") {
      expect_count(tok, 1, line_no, key);
      c.dump_every = int_value<std::int64_t>(tok[0], line_no, key, 0);
    } else if (key == "seed") {
      expect_count(tok, 1, line_no, key);
      c.seed = int_value<std::uint64_t>(tok[0], line_no, key, 0);
    } else if (key == "output") {
      expect_count(tok, 1, line_no, key);
      c.output = std::string(tok[0]);
    } else if (key == "type") {
      expect_count(tok, 4, line_no, key);
      TypeEntry t{};
      t.index = int_value<int>(tok[0], line_no, "type index", 0);
      t.epsilon = positive_double(tok[1], line_no, "epsilon");
      t.sigma = positive_double(tok[2], line_no, "sigma");
      t.mass = positive_double(tok[3], line_no, "mass");
      for (const auto& prev : c.types) {
        if (prev.index == t.index) fail(line_no, "type " + std::to_string(t.index) + " defined twice");
      }
      c.types.push_back(t);
    } else if (key == "mode") {
      expect_count(tok, 1, line_no, key);
      if (tok[0] == "direct") {
        c.mode = rl::ForceMode::kDirect;
      } else if (tok[0] == "interpolated") {
        c.mode = rl::ForceMode::kInterpolated;
      } else {
        fail(line_no, "mode must be 'direct' or 'interpolated'");
      }
    } else if (key == "workers") {
      expect_count(tok, 1, line_no, key);
      c.workers = int_value<int>(tok[0], line_no, key, 1);
    } else if (key == "table_min") {
      expect_count(tok, 1, line_no, key);
      c.table_min = positive_double(tok[0], line_no, key);
    } else if (key == "mixing") {
      expect_count(tok, 1, line_no, key);
      if (tok[0] == "lorentz-berthelot") {
        c.mixing = MixingRule::kLorentzBerthelot;
      } else if (tok[0] == "geometric") {
        c.mixing = MixingRule::kGeometric;
      } else {
        fail(line_no, "mixing must be 'lorentz-berthelot' or 'geometric'");
      }
    } else if (key == "gather") {
      expect_count(tok, 1, line_no, key);
      if (tok[0] == "spectral") {
        c.gather = lr::GatherMethod::kSpectralGradient;
      } else if (tok[0] == "basis") {
        c.gather = lr::GatherMethod::kBasisDerivative;
      } else {
        fail(line_no, "gather must be 'spectral' or 'basis'");
      }
    } else {
      fail(line_no, "unknown key '" + key + "'");
    }
    if (end == text.size()) break;
  }
  const Vec3 edge = c.box / c.cutoff;
  if ((edge.array() < 3.0).any()) {
    throw ParseError("box must span at least three cutoff lengths per axis");
  }
  return c;
}

RunConfig load_config(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// Topology
// ---------------------------------------------------------------------------

BondedTopology load_topology(std::istream& in) {
  enum class Section { kNone, kBonds, kAngles, kDihedrals };
  BondedTopology top;
  Section section = Section::kNone;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = text::trim(std::string_view(line).substr(0, line.find('#')));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body == "[bonds]") {
        section = Section::kBonds;
      } else if (body == "[angles]") {
        section = Section::kAngles;
      } else if (body == "[dihedrals]") {
        section = Section::kDihedrals;
      } else {
        fail(line_no, "unknown section " + std::string(body));
      }
      continue;
    }
    const auto tok = text::split(body);
    const auto gid = [&](std::size_t k) {
      Gid g = 0;
      if (!text::parse_int(tok[k], g) || g < 0) fail(line_no, "malformed gid '" + std::string(tok[k]) + "'");
      return g;
    };
    const auto num = [&](std::size_t k) {
      double v = 0.0;
      if (!text::parse_double(tok[k], v) || !std::isfinite(v)) fail(line_no, "malformed number '" + std::string(tok[k]) + "'");
      return v;
    };
    switch (section) {
      case Section::kNone: fail(line_no, "term outside any section");
      case Section::kBonds:
        if (tok.size() != 4) fail(line_no, "bond expects 'i j k r0'");
        top.bonds.push_back({gid(0), gid(1), num(2), num(3)});
        break;
      case Section::kAngles:
        if (tok.size() != 7) fail(line_no, "angle expects 'i j k k_theta theta0 k_ub r_ub'");
        top.angles.push_back({gid(0), gid(1), gid(2), num(3), num(4), num(5), num(6)});
        break;
      case Section::kDihedrals: {
        if (tok.size() != 7) fail(line_no, "dihedral expects 'i j k l k n phi'");
        int n = 0;
        if (!text::parse_int(tok[5], n) || n < 0) fail(line_no, "dihedral periodicity must be a non-negative integer");
        top.dihedrals.push_back({gid(0), gid(1), gid(2), gid(3), num(4), n, num(6)});
        break;
      }
    }
  }
  return top;
}

void write_topology(std::ostream& out, const BondedTopology& t) {
  using text::format_double;
  out << "[bonds]\n";
  for (const auto& b : t.bonds) out << b.i << ' ' << b.j << ' ' << format_double(b.k) << ' ' << format_double(b.r0) << '\n';
  out << "[angles]\n";
  for (const auto& a : t.angles) {
    out << a.i << ' ' << a.j << ' ' << a.k << ' ' << format_double(a.k_theta) << ' ' << format_double(a.theta0) << ' '
        << format_double(a.k_ub) << ' ' << format_double(a.r_ub) << '\n';
  }
  out << "[dihedrals]\n";
  for (const auto& d : t.dihedrals) {
    out << d.i << ' ' << d.j << ' ' << d.k << ' ' << d.l << ' ' << format_double(d.k_psi) << ' ' << d.n << ' '
        << format_double(d.phi) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Energy log and trajectory
// ---------------------------------------------------------------------------

void write_energy_header(std::ostream& out) { out << kEnergyHeader << '\n'; }

void write_energy_row(std::ostream& out, const integrate::EnergyRow& r) {
  using text::format_double;
  out << r.step << ',' << format_double(r.kinetic) << ',' << format_double(r.rl) << ',' << format_double(r.lr) << ','
      << format_double(r.bonded) << ',' << format_double(r.total) << '\n';
}

std::vector<integrate::EnergyRow> load_energy_log(std::istream& in) {
  std::vector<integrate::EnergyRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = text::trim(line);
    if (body.empty()) continue;
    if (line_no == 1) {
      if (body != kEnergyHeader) fail(line_no, "expected header '" + std::string(kEnergyHeader) + "'");
      continue;
    }
    std::vector<std::string_view> f;
    std::size_t start = 0;
    while (true) {
      const auto comma = body.find(',', start);
      f.push_back(body.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    integrate::EnergyRow r;
    if (f.size() != 6 || !text::parse_int(f[0], r.step) || !text::parse_double(f[1], r.kinetic) ||
        !text::parse_double(f[2], r.rl) || !text::parse_double(f[3], r.lr) || !text::parse_double(f[4], r.bonded) ||
        !text::parse_double(f[5], r.total)) {
      fail(line_no, "malformed energy row");
    }
    rows.push_back(r);
  }
  return rows;
}

void write_frame(std::ostream& out, std::int64_t step, const ParticleSet& particles) {
  using text::format_double;
  out << "frame " << step << '\n';
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    out << particles.gid(i);
    for (int a = 0; a < 3; ++a) out << ' ' << format_double(particles.positions()(a, c));
    for (int a = 0; a < 3; ++a) out << ' ' << format_double(particles.velocities()(a, c));
    out << '\n';
  }
}

std::vector<Frame> load_trajectory(std::istream& in) {
  std::vector<Frame> frames;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = text::trim(line);
    if (body.empty()) continue;
    const auto tok = text::split(body);
    if (tok[0] == "frame") {
      Frame f;
      if (tok.size() != 2 || !text::parse_int(tok[1], f.step)) fail(line_no, "expected 'frame N'");
      frames.push_back(std::move(f));
      continue;
    }
    if (frames.empty()) fail(line_no, "particle line before the first frame header");
    if (tok.size() != 7) fail(line_no, "expected 'gid x y z vx vy vz'");
    ParticleRecord r;
    double v[6];
    bool ok = text::parse_int(tok[0], r.gid);
    for (std::size_t k = 0; k < 6; ++k) ok = ok && text::parse_double(tok[k + 1], v[k]);
    if (!ok) fail(line_no, "malformed trajectory line");
    r.position = Vec3(v[0], v[1], v[2]);
    r.velocity = Vec3(v[3], v[4], v[5]);
    frames.back().particles.push_back(r);
  }
  return frames;
}

void write_grid(std::ostream& out, const lr::ChargeGrid& grid) {
  const int k = grid.size();
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      for (int m = 0; m < k; ++m) out << i << ' ' << j << ' ' << m << ' ' << text::format_double(grid.at(i, j, m)) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Dataset generation
// ---------------------------------------------------------------------------

ParticleSet gen_dataset(const GenOptions& o) {
  if (o.count < 1) throw DomainError("dataset needs at least one particle");
  if (!(o.box.array() > 0.0).all()) throw DomainError("box lengths must be positive");
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ParticleRecord> records(o.count);

  if (o.style == DatasetStyle::kUniform) {
    for (auto& r : records) {
      for (int a = 0; a < 3; ++a) r.position[a] = unit(rng) * o.box[a];
    }
  } else {
    // smallest lattice with spacing as even as the box allows
    const double spacing = std::cbrt(o.box.prod() / static_cast<double>(o.count));
    Vec3i sites;
    for (int a = 0; a < 3; ++a) sites[a] = std::max(1, static_cast<int>(std::floor(o.box[a] / spacing)));
    while (static_cast<std::size_t>(sites.prod()) < o.count) {
      int a = 0;
      for (int b = 1; b < 3; ++b) {
        if (o.box[b] / (sites[b] + 1) > o.box[a] / (sites[a] + 1)) a = b;
      }
      ++sites[a];
    }
    const Vec3 a_vec = o.box.cwiseQuotient(sites.cast<double>());
    const double min_sep = 0.8 * o.sigma;
    const double a_min = a_vec.minCoeff();
    if (a_min < min_sep) {
      throw DomainError("cannot place " + std::to_string(o.count) + " particles at a minimum separation of " +
                        text::format_double(min_sep) + " A in this box");
    }
    const double jitter = std::min(0.5 * (a_min - min_sep), 0.15 * a_min);
    std::vector<int> order(static_cast<std::size_t>(sites.prod()));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(o.count);
    std::sort(order.begin(), order.end());
    for (std::size_t p = 0; p < o.count; ++p) {
      const int s = order[p];
      const Vec3i c(s / (sites.y() * sites.z()), (s / sites.z()) % sites.y(), s % sites.z());
      Vec3 r = (c.cast<double>() + Vec3::Constant(0.5)).cwiseProduct(a_vec);
      for (int a = 0; a < 3; ++a) r[a] += jitter * (2.0 * unit(rng) - 1.0);
      records[p].position = r;
    }
  }

  if (o.temperature > 0.0) {
    constexpr double kBoltzmann = 0.0019872041;  // kcal/(mol K)
    std::normal_distribution<double> normal(0.0, std::sqrt(kBoltzmann * o.temperature / o.mass *
                                                           units::kAccelPerForcePerMass));
    Vec3 mean = Vec3::Zero();
    for (auto& r : records) {
      r.velocity = Vec3(normal(rng), normal(rng), normal(rng));
      mean += r.velocity;
    }
    mean /= static_cast<double>(records.size());
    for (auto& r : records) r.velocity -= mean;
  }
  for (std::size_t p = 0; p < records.size(); ++p) {
    records[p].gid = static_cast<Gid>(p);
    records[p].charge = o.charge == 0.0 ? 0.0 : (p % 2 == 0 ? o.charge : -o.charge);
  }
  return ParticleSet(std::move(records));
}

}  // namespace fmd::io
