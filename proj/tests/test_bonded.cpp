#include "doctest.h"

#include "fmd/bonded.hpp"
#include "oracles.hpp"

#include <numbers>
#include <random>

using namespace fmd;
using namespace fmd::bonded;

namespace {

constexpr double kPi = std::numbers::pi;

template <int N>
Eigen::Matrix3Xd as_matrix(const TermResult<N>& t) {
  Eigen::Matrix3Xd m(3, N);
  for (int i = 0; i < N; ++i) m.col(i) = t.force[static_cast<std::size_t>(i)];
  return m;
}

template <int N>
Eigen::Matrix3Xd cloud(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  Eigen::Matrix3Xd x(3, N);
  for (int i = 0; i < N; ++i) x.col(i) = Vec3(1.2 * i + u(rng), u(rng), u(rng));
  return x;
}

ParticleSet particles_at(const Eigen::Matrix3Xd& x, Gid first = 0) {
  std::vector<ParticleRecord> r;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    ParticleRecord rec;
    rec.gid = first + c;
    rec.position = x.col(c);
    r.push_back(rec);
  }
  return ParticleSet(r);
}

}  // namespace

TEST_SUITE("bonded") {

TEST_CASE("bond examples") {
  const auto eq = eval_bond(Vec3(1.5, 0, 0), Vec3::Zero(), 3.0, 1.5);
  CHECK(eq.force[0].norm() == 0.0);
  CHECK(eq.energy == 0.0);
  const auto stretched = eval_bond(Vec3(2, 0, 0), Vec3::Zero(), 1.0, 1.0);
  CHECK(stretched.force[0].isApprox(Vec3(-2, 0, 0)));
  CHECK(stretched.force[1].isApprox(Vec3(2, 0, 0)));
  CHECK(stretched.energy == 1.0);
  CHECK_THROWS_AS(eval_bond(Vec3::Ones(), Vec3::Ones(), 1.0, 1.0), SingularPairError);
}

TEST_CASE("angle examples") {
  Angle a{0, 1, 2, 40.0, 1.91, 0.0, 0.0};
  const Vec3 j = Vec3::Zero();
  const Vec3 i(1, 0, 0);
  const Vec3 k(std::cos(1.91), std::sin(1.91), 0);
  a.k_ub = 5.0;
  a.r_ub = (i - k).norm();
  const auto eq = eval_angle(i, j, k, a);
  for (const auto& f : eq.force) CHECK(f.norm() <= 1e-12);
  const Angle right{0, 1, 2, 10.0, kPi / 2, 0.0, 0.0};
  const auto r = eval_angle(Vec3(2, 0, 0), j, Vec3(0, 3, 0), right);
  for (const auto& f : r.force) CHECK(f.norm() <= 1e-12);
  CHECK_THROWS_AS(eval_angle(Vec3(1, 0, 0), j, Vec3(2, 0, 0), right), DegenerateGeometryError);
  CHECK(bond_angle(Vec3(1, 0, 0), j, Vec3(0, 1, 0)) == doctest::Approx(kPi / 2));
}

TEST_CASE("dihedral examples") {
  // trans: psi = pi
  const Vec3 i(1, 1, 0), j(0, 0, 0), k(0, 0, 1.5), l(-1, -1, 1.5);
  CHECK(std::abs(dihedral_angle(i, j, k, l)) == doctest::Approx(kPi));
  const Dihedral cosine{0, 1, 2, 3, 2.0, 1, 0.0};
  const auto stationary = eval_dihedral(i, j, k, l, cosine);
  for (const auto& f : stationary.force) CHECK(f.norm() <= 1e-12);
  CHECK(stationary.energy == doctest::Approx(0.0).scale(1.0));
  // harmonic at its minimum
  const Vec3 l2(-1, 1, 1.5);
  const double psi = dihedral_angle(i, j, k, l2);
  const Dihedral harmonic{0, 1, 2, 3, 5.0, 0, psi};
  const auto at_min = eval_dihedral(i, j, k, l2, harmonic);
  for (const auto& f : at_min.force) CHECK(f.norm() <= 1e-12);
  CHECK_THROWS_AS(eval_dihedral(Vec3(0, 0, -1), j, k, l, cosine), DegenerateGeometryError);
}

TEST_CASE("dihedral sign follows the reference convention") {
  std::mt19937_64 rng(40);
  for (int n = 0; n < 200; ++n) {
    const auto x = cloud<4>(rng);
    CHECK(dihedral_angle(x.col(0), x.col(1), x.col(2), x.col(3)) == doctest::Approx(oracle::torsion(x)).epsilon(1e-12));
  }
}

TEST_CASE("bond forces match finite differences") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> k(10.0, 500.0);
  std::uniform_real_distribution<double> r0(0.9, 1.8);
  for (int n = 0; n < 100; ++n) {
    const auto x = cloud<2>(rng);
    const double kk = k(rng);
    const double rr = r0(rng);
    const auto t = eval_bond(x.col(0), x.col(1), kk, rr);
    const auto fd = oracle::fd_forces([&](const Eigen::Matrix3Xd& y) { return oracle::bond_u(y, kk, rr); }, x);
    REQUIRE(oracle::rel_error(as_matrix(t), fd) <= 1e-5);
    CHECK(t.energy == doctest::Approx(oracle::bond_u(x, kk, rr)));
  }
}

TEST_CASE("angle forces match finite differences") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> k(10.0, 100.0);
  std::uniform_real_distribution<double> t0(1.5, 2.2);
  std::uniform_real_distribution<double> ub(0.0, 40.0);
  std::uniform_real_distribution<double> rub(1.5, 2.8);
  int done = 0;
  while (done < 100) {
    const auto x = cloud<3>(rng);
    if (std::sin(bond_angle(x.col(0), x.col(1), x.col(2))) < 1e-2) continue;
    const Angle a{0, 1, 2, k(rng), t0(rng), ub(rng), rub(rng)};
    const auto t = eval_angle(x.col(0), x.col(1), x.col(2), a);
    const auto fd = oracle::fd_forces(
        [&](const Eigen::Matrix3Xd& y) { return oracle::angle_u(y, a.k_theta, a.theta0, a.k_ub, a.r_ub); }, x);
    REQUIRE(oracle::rel_error(as_matrix(t), fd) <= 1e-5);
    CHECK(t.energy == doctest::Approx(oracle::angle_u(x, a.k_theta, a.theta0, a.k_ub, a.r_ub)));
    ++done;
  }
}

TEST_CASE("dihedral forces match finite differences") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> k(0.5, 5.0);
  std::uniform_int_distribution<int> n(0, 4);
  std::uniform_real_distribution<double> phi(-kPi, kPi);
  int done = 0;
  while (done < 100) {
    const auto x = cloud<4>(rng);
    const Vec3 b1 = x.col(1) - x.col(0), b2 = x.col(2) - x.col(1), b3 = x.col(3) - x.col(2);
    if (b1.cross(b2).norm() < 0.1 * b1.norm() * b2.norm() || b2.cross(b3).norm() < 0.1 * b2.norm() * b3.norm()) {
      continue;
    }
    const Dihedral d{0, 1, 2, 3, k(rng), n(rng), phi(rng)};
    const double psi = oracle::torsion(x);
    // keep the harmonic branch away from its wrap point
    if (d.n == 0 && std::abs(std::remainder(psi - d.phi, 2 * kPi)) > 0.9 * kPi) continue;
    const auto t = eval_dihedral(x.col(0), x.col(1), x.col(2), x.col(3), d);
    const auto fd = oracle::fd_forces([&](const Eigen::Matrix3Xd& y) { return oracle::dihedral_u(y, d.k_psi, d.n, d.phi); }, x);
    REQUIRE(oracle::rel_error(as_matrix(t), fd) <= 1e-5);
    CHECK(t.energy == doctest::Approx(oracle::dihedral_u(x, d.k_psi, d.n, d.phi)).scale(1.0));
    ++done;
  }
}

TEST_CASE("every term is force and torque free") {
  std::mt19937_64 rng(44);
  const auto balance = [](const auto& t, const Eigen::Matrix3Xd& x) {
    Vec3 sum = Vec3::Zero();
    Vec3 torque = Vec3::Zero();
    double mag = 0.0;
    for (std::size_t m = 0; m < t.force.size(); ++m) {
      sum += t.force[m];
      torque += x.col(static_cast<Eigen::Index>(m)).cross(t.force[m]);
      mag += t.force[m].norm();
    }
    CHECK(sum.norm() <= 1e-12 * mag);
    CHECK(torque.norm() <= 1e-11 * mag * x.cwiseAbs().maxCoeff());
  };
  for (int n = 0; n < 100; ++n) {
    const auto x2 = cloud<2>(rng);
    balance(eval_bond(x2.col(0), x2.col(1), 100.0, 1.0), x2);
    const auto x3 = cloud<3>(rng);
    balance(eval_angle(x3.col(0), x3.col(1), x3.col(2), Angle{0, 1, 2, 50.0, 1.9, 20.0, 2.0}), x3);
    const auto x4 = cloud<4>(rng);
    balance(eval_dihedral(x4.col(0), x4.col(1), x4.col(2), x4.col(3), Dihedral{0, 1, 2, 3, 1.4, 3, 0.3}), x4);
  }
}

TEST_CASE("translation leaves forces and energy unchanged") {
  std::mt19937_64 rng(45);
  const auto x = cloud<4>(rng);
  const Vec3 shift(13.0, -7.5, 2.25);
  const Dihedral d{0, 1, 2, 3, 1.1, 2, 0.7};
  const auto a = eval_dihedral(x.col(0), x.col(1), x.col(2), x.col(3), d);
  const auto b = eval_dihedral(x.col(0) + shift, x.col(1) + shift, x.col(2) + shift, x.col(3) + shift, d);
  CHECK(oracle::rel_error(as_matrix(a), as_matrix(b)) <= 1e-12);
  CHECK(a.energy == doctest::Approx(b.energy));
}

TEST_CASE("bonded pass over an empty topology") {
  const auto box = SimulationBox::cubic(30.0, 9.0);
  Eigen::Matrix3Xd x(3, 3);
  x << 1, 2, 3, 1, 2, 3, 1, 2, 3;
  const GlobalParticleStore store(particles_at(x));
  Eigen::Matrix3Xd f;
  CHECK(bonded_pass(BondedTopology{}, store, box, f).energy == 0.0);
  CHECK(f.cols() == 3);
  CHECK(f.isZero(0.0));
}

TEST_CASE("water fragment") {
  const auto box = SimulationBox::cubic(30.0, 9.0);
  // O at the origin, two hydrogens slightly off equilibrium
  Eigen::Matrix3Xd x(3, 3);
  x.col(0) = Vec3(10, 10, 10);
  x.col(1) = Vec3(10.99, 10, 10);
  x.col(2) = Vec3(10 + 0.95 * std::cos(1.85), 10 + 0.95 * std::sin(1.85), 10);
  const auto p = particles_at(x, 100);
  BondedTopology t;
  t.bonds = {{100, 101, 450.0, 0.9572}, {100, 102, 450.0, 0.9572}};
  t.angles = {{101, 100, 102, 55.0, 1.824, 0.0, 0.0}};
  t.validate(p);
  const GlobalParticleStore store(p);
  Eigen::Matrix3Xd f;
  const auto res = bonded_pass(t, store, box, f);
  const auto energy = [](const Eigen::Matrix3Xd& y) {
    Eigen::Matrix3Xd b1(3, 2), b2(3, 2), a(3, 3);
    b1 << y.col(0), y.col(1);
    b2 << y.col(0), y.col(2);
    a << y.col(1), y.col(0), y.col(2);
    return oracle::bond_u(b1, 450.0, 0.9572) + oracle::bond_u(b2, 450.0, 0.9572) +
           oracle::angle_u(a, 55.0, 1.824, 0.0, 0.0);
  };
  CHECK(res.energy == doctest::Approx(energy(x)));
  CHECK(oracle::rel_error(f, oracle::fd_forces(energy, x)) <= 1e-5);
  CHECK(f.rowwise().sum().norm() <= 1e-12 * f.colwise().norm().sum());
}

TEST_CASE("terms straddling the periodic boundary see the compact geometry") {
  const auto box = SimulationBox::cubic(30.0, 9.0);
  std::mt19937_64 rng(46);
  auto x = cloud<4>(rng);
  x.colwise() += Vec3(15, 15, 15);
  BondedTopology t;
  t.bonds = {{0, 1, 100.0, 1.2}};
  t.angles = {{0, 1, 2, 40.0, 1.9, 10.0, 2.1}};
  t.dihedrals = {{0, 1, 2, 3, 1.5, 3, 0.2}};
  Eigen::Matrix3Xd inside;
  const double e_inside = bonded_pass(t, GlobalParticleStore(particles_at(x)), box, inside).energy;
  // move the fragment so that it straddles the corner, then wrap
  Eigen::Matrix3Xd moved = x;
  moved.colwise() -= Vec3(15.5, 15.5, 15.5) - Vec3::Constant(0.3);
  for (Eigen::Index c = 0; c < moved.cols(); ++c) moved.col(c) = box.wrap(moved.col(c));
  Eigen::Matrix3Xd across;
  const double e_across = bonded_pass(t, GlobalParticleStore(particles_at(moved)), box, across).energy;
  CHECK(e_across == doctest::Approx(e_inside));
  CHECK(oracle::rel_error(across, inside) <= 1e-10);
}

TEST_CASE("store lookups") {
  Eigen::Matrix3Xd x(3, 2);
  x << 1, 2, 1, 2, 1, 2;
  const GlobalParticleStore store(particles_at(x, 40));
  CHECK(store.size() == 2);
  CHECK(store.contains(41));
  CHECK_FALSE(store.contains(42));
  CHECK(store.position(41) == Vec3(2, 2, 2));
  CHECK_THROWS_AS(store.slot(7), InvariantError);
  BondedTopology t;
  t.bonds = {{40, 77, 1.0, 1.0}};
  Eigen::Matrix3Xd f;
  CHECK_THROWS_AS(bonded_pass(t, store, SimulationBox::cubic(30.0, 9.0), f), InvariantError);
}

}  // TEST_SUITE
