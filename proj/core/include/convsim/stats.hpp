#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <set>
#include <span>
#include <string>

#include "convsim/corpus_io.hpp"
#include "convsim/turntaking.hpp"

namespace convsim {

struct StatsReport {
  double total_speech = 0.0;   // union of speech activity, seconds
  double total_silence = 0.0;  // session time with no active speaker
  double overlap_time = 0.0;   // time with at least two active speakers
  double overlap_ratio = 0.0;  // overlap_time / total_speech
  std::array<std::int64_t, kNumTransitionTypes> transition_histogram{};
  double mean_gap_th = 0.0;
  double mean_gap_ts = 0.0;
  double mean_overlap_ratio_ir = 0.0;
  int num_sessions = 0;
  int speakers = 0;  // distinct speaker ids across all sessions
};

// Per-session accumulation with an associative merge, so sessions can be
// processed in any grouping (map-reduce safe). Times come from an exact
// interval sweep; transitions from classify_transitions.
class StatsAccumulator {
 public:
  void add(const SessionManifest& manifest, double bc_max_duration);
  void merge(const StatsAccumulator& other);
  StatsReport finalize() const;

 private:
  double union_time_ = 0.0;
  double silence_time_ = 0.0;
  double overlap_time_ = 0.0;
  std::array<std::int64_t, kNumTransitionTypes> histogram_{};
  double gap_th_sum_ = 0.0;
  double gap_ts_sum_ = 0.0;
  double ratio_ir_sum_ = 0.0;
  std::int64_t gap_th_count_ = 0;
  std::int64_t gap_ts_count_ = 0;
  std::int64_t ratio_ir_count_ = 0;
  int sessions_ = 0;
  std::set<std::string> speakers_;
};

StatsReport compute_stats(std::span<const SessionManifest> manifests, double bc_max_duration);

void print_stats_table(const StatsReport& report, std::ostream& out);
std::string stats_report_to_json(const StatsReport& report);

}  // namespace convsim
