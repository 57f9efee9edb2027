// Analytic throughput model of the memory/distribution design points and the
// round-robin filter arbiter.
#ifndef FMD_ARCHSIM_HPP
#define FMD_ARCHSIM_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace fmd::archsim {

/// Round-robin grant over `width` requesters (width <= 32).
///
/// mask = ~((grant << 1) - 1); candidates = mask & valid; the new grant is
/// the lowest set bit of candidates, or of valid when no candidate lies above
/// the previous grant. Throws InvariantError on a grant with several bits set.
std::uint32_t arbiter_next(std::uint32_t grant, std::uint32_t valid, int width);

enum class Memory { kGlobal = 1, kPerCell = 2 };
enum class Dist { kSharedReference = 1, kSharedHomeCell = 2, kPerPipelineCell = 3 };

/// Cost constants of the model. Every value is calibration, not derivation.
struct Calibration {
  int filters_per_pipeline = 8;
  double pair_interval = 1.0;        // cycles per force evaluation in a pipeline
  double mux_latency = 3.0;         // cycles, paid by the broadcast schemes
  double startup_latency = 15000.0;  // cycles, global memory + per-pipeline cells
  double global_port_reads = 1.0;   // reads per cycle of the single memory
  double cell_port_reads = 1.0;     // reads per cycle of each cell memory
  /// Fraction of half-shell candidates inside the cutoff, 4 pi / 81.
  double pass_rate = 0.15514037795505152;

  /// Multiplies every cycle cost by `factor` (port rates are divided).
  Calibration scaled(double factor) const;
};

struct MappingConfig {
  int design = 0;  // 1..6 for the standard designs, 0 otherwise
  Memory memory = Memory::kGlobal;
  Dist distribution = Dist::kSharedReference;
  int pipelines = 1;
  double clock_mhz = 0.0;  // informational
};

/// The six standard designs with their default pipeline counts
/// (52, 35, 52, 35, 51, 41).
std::array<MappingConfig, 6> standard_designs();

struct DatasetStats {
  double particles = 1.0;  // N
  double cells = 1.0;      // C
  double per_cell() const { return particles / cells; }
};

enum class Bottleneck { kMemoryBandwidth, kFilterThroughput, kLoadBalance };
std::string to_string(Bottleneck b);

struct ThroughputEstimate {
  MappingConfig config;
  double cycles = 0.0;
  double candidate_pairs = 0.0;
  double filter_bound = 0.0;  // cycles at full utilization
  double memory_bound = 0.0;
  double utilization = 1.0;
  double ideal_bound = 0.0;  // candidates / (P F)
  Bottleneck bottleneck = Bottleneck::kFilterThroughput;
};

/// Fraction of pipelines kept busy by the distribution scheme.
double utilization(Dist dist, int pipelines, const DatasetStats& stats);

ThroughputEstimate estimate(const MappingConfig& config, const DatasetStats& stats, const Calibration& cal = {});

/// Designs sorted by cycles, ties by design index (then input position).
std::vector<ThroughputEstimate> rank_designs(const DatasetStats& stats, const std::vector<MappingConfig>& designs,
                                             const Calibration& cal = {});
std::vector<ThroughputEstimate> rank_designs(const DatasetStats& stats, const Calibration& cal = {});

/// Top-ranked standard design.
ThroughputEstimate recommend(const DatasetStats& stats, const Calibration& cal = {});

}  // namespace fmd::archsim

#endif  // FMD_ARCHSIM_HPP
