#include "fmd/archsim.hpp"

#include "fmd/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace fmd::archsim {

std::uint32_t arbiter_next(std::uint32_t grant, std::uint32_t valid, int width) {
  if (width < 1 || width > 32) throw DomainError("arbiter width must be in [1, 32]");
  if (std::popcount(grant) > 1) throw InvariantError("arbiter grant has more than one bit set");
  const std::uint32_t all = width == 32 ? ~0u : (1u << width) - 1u;
  valid &= all;
  if (valid == 0) return 0;
  const std::uint32_t mask = ~((grant << 1) - 1u) & all;
  std::uint32_t candidates = mask & valid;
  // wrap around once every requester above the previous grant is exhausted
  if (candidates == 0) candidates = valid;
  return candidates & (~candidates + 1u);
}

Calibration Calibration::scaled(double factor) const {
  Calibration c = *this;
  c.pair_interval *= factor;
  c.mux_latency *= factor;
  c.startup_latency *= factor;
  c.global_port_reads /= factor;
  c.cell_port_reads /= factor;
  return c;
}

std::array<MappingConfig, 6> standard_designs() {
  return {{
      {1, Memory::kGlobal, Dist::kSharedReference, 52, 0.0},
      {2, Memory::kPerCell, Dist::kSharedReference, 35, 0.0},
      {3, Memory::kGlobal, Dist::kSharedHomeCell, 52, 0.0},
      {4, Memory::kPerCell, Dist::kSharedHomeCell, 35, 0.0},
      {5, Memory::kGlobal, Dist::kPerPipelineCell, 51, 0.0},
      {6, Memory::kPerCell, Dist::kPerPipelineCell, 41, 0.0},
  }};
}

std::string to_string(Bottleneck b) {
  switch (b) {
    case Bottleneck::kMemoryBandwidth: return "memory-bandwidth";
    case Bottleneck::kFilterThroughput: return "filter-throughput";
    case Bottleneck::kLoadBalance: return "load-balance";
  }
  return "unknown";
}

double utilization(Dist dist, int pipelines, const DatasetStats& stats) {
  const double p = pipelines;
  switch (dist) {
    case Dist::kSharedReference: return 1.0;
    case Dist::kSharedHomeCell: {
      const double n = stats.per_cell();
      return n / (p * std::ceil(n / p));
    }
    case Dist::kPerPipelineCell: return stats.cells / (p * std::ceil(stats.cells / p));
  }
  return 1.0;
}

ThroughputEstimate estimate(const MappingConfig& config, const DatasetStats& stats, const Calibration& cal) {
  if (config.pipelines < 1) throw DomainError("pipeline count must be at least 1");
  if (!(cal.pair_interval > 0.0)) throw DomainError("pair interval must be positive");
  if (cal.filters_per_pipeline < 1) throw DomainError("filters per pipeline must be at least 1");
  if (!(stats.particles >= 1.0) || !(stats.cells >= 1.0)) throw DomainError("dataset needs N >= 1 and C >= 1");

  const double n = stats.per_cell();
  const double p = config.pipelines;
  const double f = cal.filters_per_pipeline;
  // half shell under N3L: 14 cells of n candidates, counted once per pair
  const double candidates = 7.0 * stats.particles * n;
  const double per_reference = candidates / stats.particles;

  ThroughputEstimate e;
  e.config = config;
  e.candidate_pairs = candidates;
  e.ideal_bound = candidates / (p * f);
  // a pipeline retires at most one in-cutoff pair per cycle
  const double rate = std::min(f, 1.0 / cal.pass_rate) / cal.pair_interval;
  e.filter_bound = candidates / (p * rate);
  e.utilization = utilization(config.distribution, config.pipelines, stats);

  double reads = 0.0;
  switch (config.distribution) {
    case Dist::kSharedReference:
      // every candidate neighbor is fetched for a single shared reference
      reads = candidates;
      break;
    case Dist::kSharedHomeCell:
      // each batch of P references streams the home cell's neighbors once
      reads = stats.cells * std::ceil(n / p) * per_reference;
      break;
    case Dist::kPerPipelineCell:
      // cells are loaded into pipeline-local caches
      reads = config.memory == Memory::kGlobal ? stats.particles : 14.0 * n * stats.cells;
      break;
  }
  if (config.memory == Memory::kGlobal) {
    e.memory_bound = reads / cal.global_port_reads;
  } else {
    // cell memories serve their own reads in parallel
    e.memory_bound = reads / (stats.cells * cal.cell_port_reads);
  }

  // busy rounds times the per-round cost; equals filter_bound / utilization
  double compute = e.filter_bound;
  if (config.distribution == Dist::kSharedHomeCell) compute = candidates * std::ceil(n / p) / (n * rate);
  if (config.distribution == Dist::kPerPipelineCell) {
    compute = candidates * std::ceil(stats.cells / p) / (stats.cells * rate);
  }
  e.cycles = std::max(compute, e.memory_bound);
  if (config.distribution != Dist::kPerPipelineCell) e.cycles += cal.mux_latency;
  if (config.distribution == Dist::kPerPipelineCell && config.memory == Memory::kGlobal) {
    e.cycles += cal.startup_latency;
  }

  if (e.memory_bound > compute) {
    e.bottleneck = Bottleneck::kMemoryBandwidth;
  } else if (e.utilization < 0.9) {
    e.bottleneck = Bottleneck::kLoadBalance;
  } else {
    e.bottleneck = Bottleneck::kFilterThroughput;
  }
  return e;
}

std::vector<ThroughputEstimate> rank_designs(const DatasetStats& stats, const std::vector<MappingConfig>& designs,
                                             const Calibration& cal) {
  std::vector<ThroughputEstimate> out;
  out.reserve(designs.size());
  for (const auto& d : designs) out.push_back(estimate(d, stats, cal));
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    // equal up to rounding counts as a tie, so scaled calibrations rank alike
    if (std::abs(a.cycles - b.cycles) > 1e-12 * std::max(a.cycles, b.cycles)) return a.cycles < b.cycles;
    return a.config.design < b.config.design;
  });
  return out;
}

std::vector<ThroughputEstimate> rank_designs(const DatasetStats& stats, const Calibration& cal) {
  const auto designs = standard_designs();
  return rank_designs(stats, std::vector<MappingConfig>(designs.begin(), designs.end()), cal);
}

ThroughputEstimate recommend(const DatasetStats& stats, const Calibration& cal) {
  return rank_designs(stats, cal).front();
}

}  // namespace fmd::archsim
