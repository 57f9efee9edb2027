// Fixtures shared by the unit tests and the acceptance runner.
#ifndef FMD_TESTS_SUPPORT_HPP
#define FMD_TESTS_SUPPORT_HPP

#include "fmd/model.hpp"
#include "oracles.hpp"

#include <random>
#include <vector>

namespace support {

/// Random particles in `box` with pairwise minimum-image separation at least
/// `min_sep`. Types alternate 0/1; charges alternate +q/-q when q != 0.
inline fmd::ParticleSet random_particles(std::size_t n, const fmd::Vec3& box, std::uint64_t seed, double min_sep,
                                         double q = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<fmd::ParticleRecord> out;
  std::vector<fmd::Vec3> placed;
  while (out.size() < n) {
    const fmd::Vec3 r(unit(rng) * box.x(), unit(rng) * box.y(), unit(rng) * box.z());
    bool clash = false;
    for (const auto& p : placed) {
      if (oracle::min_image(r - p, box).norm() < min_sep) {
        clash = true;
        break;
      }
    }
    if (clash) continue;
    placed.push_back(r);
    fmd::ParticleRecord rec;
    rec.gid = static_cast<fmd::Gid>(out.size() * 3 + 1);  // sparse gids
    rec.position = r;
    rec.velocity = fmd::Vec3(unit(rng) - 0.5, unit(rng) - 0.5, unit(rng) - 0.5) * 0.01;
    rec.charge = out.size() % 2 == 0 ? q : -q;
    rec.type = static_cast<int>(out.size() % 2);
    out.push_back(rec);
  }
  return fmd::ParticleSet(std::move(out));
}

inline oracle::PointSet to_points(const fmd::ParticleSet& p) {
  oracle::PointSet s;
  s.r = p.positions();
  s.q = p.charges();
  s.type.assign(p.types().begin(), p.types().end());
  return s;
}

/// Argon-like type 0 and a smaller type 1.
inline fmd::LJParamTable two_type_lj() {
  const std::vector<fmd::LJType> types = {{0.238, 3.405}, {0.15, 2.8}};
  return fmd::derive_lj_pairs(types);
}

}  // namespace support

#endif  // FMD_TESTS_SUPPORT_HPP
