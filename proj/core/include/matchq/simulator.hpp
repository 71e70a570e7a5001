#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "matchq/blocks.hpp"
#include "matchq/model.hpp"

namespace matchq {

/// Discrete-event oracle configuration.  A replication runs either a fixed
/// number of events (arrivals and reneges, matches ride along) or a fixed
/// simulated-time span; the first warmup_fraction of the budget is discarded.
struct SimConfig {
  Params params;
  std::uint64_t events = 1'000'000;  // per replication; 0 selects time_horizon
  double time_horizon = 0.0;
  double warmup_fraction = 0.2;
  std::uint64_t seed = 1;            // replication r uses seed + r
  int replications = 10;
  int mark_sequence_kmax = 3;        // consecutive-mark lengths recorded
  int mark_samples = 100'000;        // stationary time points sampled per rep
  int arrival_state_cap = 64;        // seen-at-arrival histogram bound
  bool retain_mark_log = false;
};

struct EstimateCI {
  double mean = 0.0;
  double half_width = 0.0;

  bool contains(double x) const;
  double lo() const { return mean - half_width; }
  double hi() const { return mean + half_width; }
};

/// Student-t confidence interval over independent replication estimates.
EstimateCI student_t_ci(const std::vector<double>& samples, double confidence = 0.99);

struct MarkEvent {
  double time = 0.0;
  Mark mark = Mark::None;
};

using SequenceFreq = std::map<std::string, double>;

std::string sequence_key(const std::vector<Mark>& seq);
std::vector<std::vector<Mark>> all_mark_sequences(int length);

struct ReplicationResult {
  double warmup_end = 0.0;
  double end_time = 0.0;
  double observed_time = 0.0;

  double mean_q1 = 0.0;
  double mean_q2 = 0.0;

  double mean_sojourn_A = 0.0;
  double mean_sojourn_B = 0.0;
  std::uint64_t sojourn_count_A = 0;
  std::uint64_t sojourn_count_B = 0;
  std::uint64_t censored_A = 0;
  std::uint64_t censored_B = 0;

  std::uint64_t departures_A_imp = 0;
  std::uint64_t departures_B_imp = 0;
  std::uint64_t departures_AB = 0;  // matched groups
  double rate_A_imp = 0.0;
  double rate_B_imp = 0.0;
  double rate_AB = 0.0;

  Matrix seen_at_arrival;  // counts over (i, j) up to the cap
  std::uint64_t arrivals_A_seen = 0;

  std::array<double, 3> at_departure_freq{};  // order A, B, AB
  SequenceFreq backward_freq;  // keyed "i1,i2,..." for lengths 1..kmax
  SequenceFreq forward_freq;

  std::vector<MarkEvent> mark_log;  // kept only on request
};

struct SimResult {
  SimConfig config;
  std::vector<ReplicationResult> reps;

  EstimateCI mean_q1, mean_q2;
  EstimateCI sojourn_A, sojourn_B;
  EstimateCI rate_A_imp, rate_B_imp, rate_AB;
  Matrix seen_at_arrival_freq;  // pooled, normalized
};

/// Deterministic given the seed: identical configs produce bit-identical
/// results.
ReplicationResult simulate_replication(const SimConfig& cfg, std::uint64_t seed);
SimResult simulate(const SimConfig& cfg);

struct SequenceTable {
  int k_max = 0;
  std::map<std::string, EstimateCI> backward;
  std::map<std::string, EstimateCI> forward;
};

/// Aggregates the per-replication consecutive-mark frequencies.  Throws when
/// k_max exceeds what the replications recorded or any replication logged
/// fewer than k_max departures.
SequenceTable empirical_mark_sequences(const SimResult& result, int k_max);

EstimateCI at_departure_ci(const SimResult& result, Mark mark);

}  // namespace matchq
