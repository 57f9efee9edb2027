#include "fmd/validation.hpp"

#include "fmd/archsim.hpp"
#include "fmd/bonded.hpp"
#include "fmd/lr.hpp"
#include "fmd/neighbor.hpp"
#include "fmd/rl.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <sstream>
#include <tuple>

namespace fmd::validation {

namespace {

std::string sci(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << v;
  return s.str();
}

template <int N>
double term_imbalance(const bonded::TermResult<N>& t) {
  Vec3 sum = Vec3::Zero();
  double mag = 0.0;
  for (const auto& f : t.force) {
    sum += f;
    mag += f.norm();
  }
  return mag > 0.0 ? sum.norm() / mag : 0.0;
}

std::vector<std::tuple<Gid, Gid>> pair_set(const neighbor::PairStream& s) {
  std::vector<std::tuple<Gid, Gid>> out;
  out.reserve(s.size());
  for (const auto& p : s) out.emplace_back(std::min(p.ref_gid, p.nb_gid), std::max(p.ref_gid, p.nb_gid));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<Check> run_suite(const Input& in) {
  std::vector<Check> out;
  const auto run = [&](const std::string& name, const std::function<std::string(bool&)>& body) {
    Check c{name, false, {}};
    try {
      c.detail = body(c.passed);
    } catch (const std::exception& e) {
      c.passed = false;
      c.detail = std::string("exception: ") + e.what();
    }
    out.push_back(std::move(c));
  };

  const auto grid = neighbor::build_cell_grid(in.particles, in.box);

  run("topology", [&](bool& ok) {
    in.topology.validate(in.particles);
    ok = true;
    return std::to_string(in.topology.bonds.size()) + " bonds, " + std::to_string(in.topology.angles.size()) +
           " angles, " + std::to_string(in.topology.dihedrals.size()) + " dihedrals";
  });

  run("planar filter superset", [&](bool& ok) {
    const auto direct = pair_set(neighbor::generate_pairs(grid, neighbor::Distribution::kPerPipelineCell,
                                                          neighbor::FilterKind::kDirect));
    const auto planar = pair_set(neighbor::generate_pairs(grid, neighbor::Distribution::kPerPipelineCell,
                                                          neighbor::FilterKind::kPlanar));
    ok = direct == planar && std::adjacent_find(direct.begin(), direct.end()) == direct.end();
    return std::to_string(direct.size()) + " pairs";
  });

  run("scheme equivalence", [&](bool& ok) {
    rl::RlSettings s;
    s.mode = rl::ForceMode::kDirect;
    s.filter = in.step.rl.filter;
    Eigen::Matrix3Xd ref;
    ok = true;
    for (int id = 1; id <= 3; ++id) {
      s.distribution = neighbor::distribution_from_id(id);
      Eigen::Matrix3Xd f;
      rl::rl_pass(grid, in.particles, in.lj, s, f);
      if (id == 1) {
        ref = f;
      } else {
        ok = ok && std::equal(f.data(), f.data() + f.size(), ref.data());
      }
    }
    return ok ? "bitwise identical forces" : "forces differ between schemes";
  });

  run("rl momentum", [&](bool& ok) {
    rl::RlSettings s;
    s.mode = rl::ForceMode::kDirect;
    Eigen::Matrix3Xd f;
    rl::rl_pass(grid, in.particles, in.lj, s, f);
    const double total = f.colwise().norm().sum();
    const double net = f.rowwise().sum().norm();
    ok = net <= 1e-9 * total || total == 0.0;
    return "|sum F| / sum |F| = " + sci(total > 0.0 ? net / total : 0.0);
  });

  run("interpolation fidelity", [&](bool& ok) {
    const double rc2 = in.box.cutoff() * in.box.cutoff();
    const auto tables = rl::build_tables(in.table_order, in.table_intervals, in.table_min, rc2);
    double worst = 0.0;
    const int samples = 200000;
    const double lo = std::max(in.table_min, 1.0);
    for (int i = 0; i <= samples; ++i) {
      const double x = lo + (rc2 - lo) * i / samples;
      for (std::size_t t = 0; t < rl::kTableExponents.size(); ++t) {
        const double exact = std::pow(x, 0.5 * rl::kTableExponents[t]);
        worst = std::max(worst, std::abs(tables.eval(static_cast<int>(t), x) - exact) / exact);
      }
    }
    ok = worst <= 1e-4;
    return "max relative term error " + sci(worst);
  });

  run("bonded term balance", [&](bool& ok) {
    const bonded::GlobalParticleStore store(in.particles);
    double worst = 0.0;
    const auto pos = [&](Gid g, const Vec3& anchor) {
      return Vec3(anchor + neighbor::minimum_image(store.position(g) - anchor, in.box));
    };
    for (const auto& b : in.topology.bonds) {
      const Vec3 ri = store.position(b.i);
      worst = std::max(worst, term_imbalance(bonded::eval_bond(ri, pos(b.j, ri), b.k, b.r0)));
    }
    for (const auto& a : in.topology.angles) {
      const Vec3 ri = store.position(a.i);
      worst = std::max(worst, term_imbalance(bonded::eval_angle(ri, pos(a.j, ri), pos(a.k, ri), a)));
    }
    for (const auto& d : in.topology.dihedrals) {
      const Vec3 ri = store.position(d.i);
      worst = std::max(worst, term_imbalance(bonded::eval_dihedral(ri, pos(d.j, ri), pos(d.k, ri), pos(d.l, ri), d)));
    }
    ok = worst <= 1e-12;
    return "worst per-term imbalance " + sci(worst);
  });

  run("lr grid", [&](bool& ok) {
    lr::ChargeGrid g(in.step.grid_size, in.box);
    lr::spread_charges(in.particles, g);
    const double q = in.particles.charges().cwiseAbs().sum();
    const double drift = std::abs(g.values().sum() - in.particles.total_charge());
    const Eigen::VectorXd before = g.values();
    lr::fft3_forward(g);
    lr::fft3_inverse(g);
    const double scale = std::max(before.cwiseAbs().maxCoeff(), 1e-300);
    const double roundtrip = (g.values() - before).cwiseAbs().maxCoeff() / scale;
    ok = drift <= 1e-12 * std::max(q, 1.0) && roundtrip <= 1e-6;
    return "charge drift " + sci(drift) + ", FFT round trip " + sci(roundtrip);
  });

  run("lr momentum", [&](bool& ok) {
    const double q = in.particles.charges().cwiseAbs().sum();
    if (q == 0.0 || std::abs(in.particles.total_charge()) > 1e-12 * q) {
      ok = true;
      return std::string("skipped (system not neutral or uncharged)");
    }
    Eigen::Matrix3Xd f;
    lr::lr_pass(in.particles, in.step.grid_size, in.box, f, in.step.gather);
    const double total = f.colwise().norm().sum();
    const double net = f.rowwise().sum().norm();
    ok = net <= 1e-8 * total || total == 0.0;
    return "|sum F| / sum |F| = " + sci(total > 0.0 ? net / total : 0.0);
  });

  run("scoreboard safety", [&](bool& ok) {
    integrate::SimulationState state(in.particles, in.box, in.lj, in.topology);
    std::size_t violations = 0;
    bool conserved = true;
    for (int s = 0; s < in.steps; ++s) {
      const auto r = integrate::step(state, in.step);
      violations += r.safety_violations;
      conserved = conserved && r.particles_conserved;
    }
    ok = violations == 0 && conserved;
    return std::to_string(in.steps) + " iterations, " + std::to_string(violations) + " violations" +
           (conserved ? "" : ", particles lost");
  });

  run("arbiter", [&](bool& ok) {
    ok = true;
    for (std::uint32_t valid = 0; valid < 256; ++valid) {
      for (int g = -1; g < 8; ++g) {
        const std::uint32_t grant = g < 0 ? 0u : 1u << g;
        const auto next = archsim::arbiter_next(grant, valid, 8);
        ok = ok && (valid == 0 ? next == 0 : (std::popcount(next) == 1 && (next & valid) == next));
      }
    }
    return std::string("all 8-bit states");
  });

  return out;
}

}  // namespace fmd::validation
