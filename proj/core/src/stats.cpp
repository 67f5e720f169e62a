#include "convsim/stats.hpp"

#include <algorithm>
#include <cstdio>
#include <vector>

#include "json.hpp"

namespace convsim {

void StatsAccumulator::add(const SessionManifest& manifest, double bc_max_duration) {
  manifest.validate();

  // Exact sweep over interval boundaries: between consecutive event times the
  // active-speaker count is constant.
  std::vector<std::pair<double, int>> events;
  events.reserve(manifest.supervisions.size() * 2);
  for (const Supervision& s : manifest.supervisions) {
    events.emplace_back(s.onset, +1);
    events.emplace_back(s.onset + s.duration, -1);
  }
  std::sort(events.begin(), events.end());
  int active = 0;
  double prev_t = 0.0;
  double union_time = 0.0;
  double overlap_time = 0.0;
  for (const auto& [t, delta] : events) {
    if (t > prev_t) {
      if (active >= 1) union_time += t - prev_t;
      if (active >= 2) overlap_time += t - prev_t;
      prev_t = t;
    }
    active += delta;
  }
  union_time_ += union_time;
  overlap_time_ += overlap_time;
  silence_time_ += std::max(0.0, manifest.duration - union_time);
  ++sessions_;

  std::vector<TimelineEntry> timeline;
  timeline.reserve(manifest.supervisions.size());
  for (const Supervision& s : manifest.supervisions) {
    speakers_.insert(s.speaker_id);
    timeline.push_back(TimelineEntry{s.speaker_id, s.onset, s.onset + s.duration});
  }
  for (const TransitionEvent& ev : classify_transitions(timeline, bc_max_duration)) {
    ++histogram_[static_cast<std::size_t>(ev.type)];
    switch (ev.type) {
      case TransitionType::TurnHold:
        gap_th_sum_ += ev.gap.value_or(0.0);
        ++gap_th_count_;
        break;
      case TransitionType::TurnSwitch:
        gap_ts_sum_ += ev.gap.value_or(0.0);
        ++gap_ts_count_;
        break;
      case TransitionType::Interruption:
        ratio_ir_sum_ += ev.overlap_ratio.value_or(0.0);
        ++ratio_ir_count_;
        break;
      case TransitionType::Backchannel:
        break;
    }
  }
}

void StatsAccumulator::merge(const StatsAccumulator& other) {
  union_time_ += other.union_time_;
  silence_time_ += other.silence_time_;
  overlap_time_ += other.overlap_time_;
  for (std::size_t i = 0; i < histogram_.size(); ++i) histogram_[i] += other.histogram_[i];
  gap_th_sum_ += other.gap_th_sum_;
  gap_ts_sum_ += other.gap_ts_sum_;
  ratio_ir_sum_ += other.ratio_ir_sum_;
  gap_th_count_ += other.gap_th_count_;
  gap_ts_count_ += other.gap_ts_count_;
  ratio_ir_count_ += other.ratio_ir_count_;
  sessions_ += other.sessions_;
  speakers_.insert(other.speakers_.begin(), other.speakers_.end());
}

StatsReport StatsAccumulator::finalize() const {
  StatsReport r;
  r.total_speech = union_time_;
  r.total_silence = silence_time_;
  r.overlap_time = overlap_time_;
  r.overlap_ratio = union_time_ > 0.0 ? overlap_time_ / union_time_ : 0.0;
  r.transition_histogram = histogram_;
  r.mean_gap_th = gap_th_count_ > 0 ? gap_th_sum_ / static_cast<double>(gap_th_count_) : 0.0;
  r.mean_gap_ts = gap_ts_count_ > 0 ? gap_ts_sum_ / static_cast<double>(gap_ts_count_) : 0.0;
  r.mean_overlap_ratio_ir = ratio_ir_count_ > 0 ? ratio_ir_sum_ / static_cast<double>(ratio_ir_count_) : 0.0;
  r.num_sessions = sessions_;
  r.speakers = static_cast<int>(speakers_.size());
  return r;
}

StatsReport compute_stats(std::span<const SessionManifest> manifests, double bc_max_duration) {
  StatsAccumulator acc;
  for (const SessionManifest& m : manifests) acc.add(m, bc_max_duration);
  return acc.finalize();
}

void print_stats_table(const StatsReport& r, std::ostream& out) {
  char line[160];
  auto row = [&](const char* label, const char* fmt, auto... args) {
    std::snprintf(line, sizeof(line), fmt, args...);
    out << "  " << label << line << "\n";
  };
  out << "session statistics\n";
  row("sessions            ", "%d", r.num_sessions);
  row("speakers            ", "%d", r.speakers);
  row("total speech (s)    ", "%.3f", r.total_speech);
  row("total silence (s)   ", "%.3f", r.total_silence);
  row("overlap time (s)    ", "%.3f", r.overlap_time);
  row("overlap ratio       ", "%.4f", r.overlap_ratio);
  for (TransitionType t : kAllTransitionTypes) {
    const std::string label(to_string(t));
    std::snprintf(line, sizeof(line), "  transitions %s      %lld", label.c_str(),
                  static_cast<long long>(r.transition_histogram[static_cast<std::size_t>(t)]));
    out << line << "\n";
  }
  row("mean gap TH (s)     ", "%.4f", r.mean_gap_th);
  row("mean gap TS (s)     ", "%.4f", r.mean_gap_ts);
  row("mean IR overlap     ", "%.4f", r.mean_overlap_ratio_ir);
}

std::string stats_report_to_json(const StatsReport& r) {
  nlohmann::ordered_json j;
  j["num_sessions"] = r.num_sessions;
  j["speakers"] = r.speakers;
  j["total_speech"] = r.total_speech;
  j["total_silence"] = r.total_silence;
  j["overlap_time"] = r.overlap_time;
  j["overlap_ratio"] = r.overlap_ratio;
  nlohmann::ordered_json hist;
  for (TransitionType t : kAllTransitionTypes) {
    hist[to_string(t)] = r.transition_histogram[static_cast<std::size_t>(t)];
  }
  j["transition_histogram"] = std::move(hist);
  j["mean_gap_th"] = r.mean_gap_th;
  j["mean_gap_ts"] = r.mean_gap_ts;
  j["mean_overlap_ratio_ir"] = r.mean_overlap_ratio_ir;
  return j.dump(2);
}

}  // namespace convsim
