// Runtime invariant suite over a concrete input, used by `fmd validate`.
#ifndef FMD_VALIDATION_HPP
#define FMD_VALIDATION_HPP

#include "fmd/integrate.hpp"
#include "fmd/model.hpp"

#include <string>
#include <vector>

namespace fmd::validation {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Input {
  ParticleSet particles;
  SimulationBox box;
  LJParamTable lj;
  BondedTopology topology;
  integrate::StepConfig step;
  int table_order = 1;
  int table_intervals = 256;
  double table_min = 0.25;
  int steps = 2;  // iterations of the instrumented run
};

/// Every check runs even when an earlier one fails.
std::vector<Check> run_suite(const Input& input);

}  // namespace fmd::validation

#endif  // FMD_VALIDATION_HPP
