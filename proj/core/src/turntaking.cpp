#include "convsim/turntaking.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "convsim/error.hpp"
#include "convsim/keyvalue.hpp"

namespace convsim {

namespace {

constexpr double kProbSumTol = 1e-9;

void validate_prob_vector(const ProbVector& p, const std::string& what) {
  double sum = 0;
  for (double v : p) {
    if (!(v >= 0.0)) throw ValidationError(what + " has a negative or NaN entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kProbSumTol) {
    throw ValidationError(what + " sums to " + std::to_string(sum) + ", expected 1");
  }
}

int type_index(TransitionType t) { return static_cast<int>(t); }

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_vector(const ProbVector& p) {
  std::string s = "[";
  for (int i = 0; i < kNumTransitionTypes; ++i) {
    if (i) s += ", ";
    s += fmt_double(p[static_cast<std::size_t>(i)]);
  }
  return s + "]";
}

}  // namespace

std::string_view to_string(TransitionType t) {
  switch (t) {
    case TransitionType::TurnHold: return "TH";
    case TransitionType::TurnSwitch: return "TS";
    case TransitionType::Interruption: return "IR";
    case TransitionType::Backchannel: return "BC";
  }
  return "??";
}

std::optional<TransitionType> transition_from_string(std::string_view s) {
  if (s == "TH") return TransitionType::TurnHold;
  if (s == "TS") return TransitionType::TurnSwitch;
  if (s == "IR") return TransitionType::Interruption;
  if (s == "BC") return TransitionType::Backchannel;
  return std::nullopt;
}

void TurnTakingParams::validate() const {
  validate_prob_vector(prior, "prior p");
  for (int i = 0; i < kNumTransitionTypes; ++i) {
    validate_prob_vector(matrix[static_cast<std::size_t>(i)],
                         "matrix row " + std::string(to_string(kAllTransitionTypes[static_cast<std::size_t>(i)])));
  }
  if (!(beta_th > 0)) throw ValidationError("beta_th must be > 0");
  if (!(beta_ts > 0)) throw ValidationError("beta_ts must be > 0");
  if (!(beta_ir > 0)) throw ValidationError("beta_ir must be > 0");
  if (!(bc_max_duration > 0)) throw ValidationError("bc_max_duration must be > 0");
}

TransitionEvent TransitionEvent::turn_hold(double gap) {
  TransitionEvent e;
  e.type = TransitionType::TurnHold;
  e.gap = gap;
  return e;
}

TransitionEvent TransitionEvent::turn_switch(double gap) {
  TransitionEvent e;
  e.type = TransitionType::TurnSwitch;
  e.gap = gap;
  return e;
}

TransitionEvent TransitionEvent::interruption(double ratio) {
  TransitionEvent e;
  e.type = TransitionType::Interruption;
  e.overlap_ratio = ratio;
  return e;
}

TransitionEvent TransitionEvent::backchannel(double offset_fraction) {
  TransitionEvent e;
  e.type = TransitionType::Backchannel;
  e.bc_offset_fraction = offset_fraction;
  return e;
}

TransitionType transition_from_unit(const ProbVector& probs, double u) {
  // Inverse CDF in the fixed order (TH, TS, IR, BC). Strict < so that
  // zero-probability types are never returned.
  double cum = 0;
  TransitionType last_positive = TransitionType::TurnHold;
  bool any = false;
  for (int i = 0; i < kNumTransitionTypes; ++i) {
    double p = probs[static_cast<std::size_t>(i)];
    if (p <= 0) continue;
    cum += p;
    last_positive = kAllTransitionTypes[static_cast<std::size_t>(i)];
    any = true;
    if (u < cum) return last_positive;
  }
  if (!any) throw ValidationError("all transition probabilities are zero");
  return last_positive;  // absorbs rounding at the top of the CDF
}

double gap_from_unit(double beta, double u) { return -std::log1p(-u) / beta; }

double overlap_ratio_from_unit(double beta, double u) {
  // Exponential with rate beta truncated to (0, 1]:
  //   r = -ln(1 - u * (1 - e^{-beta})) / beta
  double r = -std::log1p(-u * (1.0 - std::exp(-beta))) / beta;
  if (r <= 0) r = std::nextafter(0.0, 1.0);  // u == 0 maps into the open interval
  if (r > 1) r = 1;
  return r;
}

TransitionType sample_transition(const TurnTakingParams& params,
                                 std::optional<TransitionType> prev, Rng& rng) {
  double u = rng.uniform();
  if (params.mode == TurnTakingMode::Markov && prev.has_value()) {
    return transition_from_unit(params.matrix[static_cast<std::size_t>(type_index(*prev))], u);
  }
  return transition_from_unit(params.prior, u);
}

double sample_gap(const TurnTakingParams& params, TransitionType kind, Rng& rng) {
  double beta;
  if (kind == TransitionType::TurnHold) {
    beta = params.beta_th;
  } else if (kind == TransitionType::TurnSwitch) {
    beta = params.beta_ts;
  } else {
    throw std::invalid_argument("sample_gap: kind must be TH or TS");
  }
  return gap_from_unit(beta, rng.uniform());
}

double sample_overlap_ratio(const TurnTakingParams& params, Rng& rng) {
  return overlap_ratio_from_unit(params.beta_ir, rng.uniform());
}

std::vector<TransitionEvent> classify_transitions(std::vector<TimelineEntry> timeline,
                                                  double bc_max_duration) {
  // Equal onsets sort the longer entry first: a short utterance starting
  // exactly with a longer one lies inside it, so the long one is the anchor.
  std::stable_sort(timeline.begin(), timeline.end(),
                   [](const TimelineEntry& a, const TimelineEntry& b) {
                     if (a.start != b.start) return a.start < b.start;
                     if (a.end != b.end) return a.end > b.end;
                     return a.speaker_id < b.speaker_id;
                   });

  // Detect same-speaker overlap: per speaker, sorted segments must not
  // intersect. A slack of 1 us absorbs annotation rounding.
  std::vector<std::pair<std::string, double>> last_end;
  for (const auto& e : timeline) {
    if (!(e.end > e.start)) {
      throw ValidationError("timeline entry for " + e.speaker_id + " has non-positive duration");
    }
    auto it = std::find_if(last_end.begin(), last_end.end(),
                           [&](const auto& kv) { return kv.first == e.speaker_id; });
    if (it == last_end.end()) {
      last_end.emplace_back(e.speaker_id, e.end);
    } else {
      if (e.start < it->second - 1e-6) {
        throw ValidationError("speaker " + e.speaker_id + " overlaps with themselves at " +
                              std::to_string(e.start));
      }
      it->second = std::max(it->second, e.end);
    }
  }

  std::vector<TransitionEvent> events;
  if (timeline.size() < 2) return events;
  events.reserve(timeline.size() - 1);

  std::size_t anchor = 0;
  for (std::size_t k = 1; k < timeline.size(); ++k) {
    const TimelineEntry& prev = timeline[anchor];
    const TimelineEntry& cur = timeline[k];
    double prev_dur = prev.end - prev.start;
    double cur_dur = cur.end - cur.start;
    bool advances_anchor = true;

    if (cur.speaker_id == prev.speaker_id) {
      events.push_back(TransitionEvent::turn_hold(std::max(0.0, cur.start - prev.end)));
    } else if (cur.start >= prev.end) {
      events.push_back(TransitionEvent::turn_switch(cur.start - prev.end));
    } else if (cur_dur <= bc_max_duration && cur.end <= prev.end) {
      events.push_back(TransitionEvent::backchannel((cur.start - prev.start) / prev_dur));
      advances_anchor = false;
    } else {
      double ratio = (prev.end - cur.start) / std::min(prev_dur, cur_dur);
      if (ratio > 1) ratio = 1;
      if (ratio <= 0) ratio = std::nextafter(0.0, 1.0);
      events.push_back(TransitionEvent::interruption(ratio));
    }
    if (advances_anchor) anchor = k;
  }
  return events;
}

namespace {

// dL/dbeta of the truncated-exponential log likelihood, divided by n:
//   g(beta) = 1/beta - 1/(e^beta - 1) - mean(r)
// g is strictly decreasing in beta with limits 1/2 - mean (beta -> 0+) and
// -mean (beta -> inf), so the MLE is the unique positive root when
// mean(r) < 1/2.
double truncated_exp_score(double beta, double mean_ratio) {
  return 1.0 / beta - 1.0 / std::expm1(beta) - mean_ratio;
}

double fit_truncated_exp_rate(const std::vector<double>& ratios) {
  double mean = 0;
  for (double r : ratios) mean += r;
  mean /= static_cast<double>(ratios.size());
  if (mean >= 0.5) {
    throw ValidationError("IR overlap ratios have mean " + std::to_string(mean) +
                          " >= 0.5, no positive rate fits a truncated exponential");
  }
  if (mean <= 0) {
    throw ValidationError("IR overlap ratios must be positive");
  }
  double lo = 1e-12, hi = 1.0;
  while (truncated_exp_score(hi, mean) > 0) {
    hi *= 2;
    if (hi > 1e12) return hi;
  }
  while (hi - lo > 1e-8) {
    double mid = 0.5 * (lo + hi);
    if (truncated_exp_score(mid, mean) > 0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double fit_exponential_rate(const std::vector<double>& gaps, std::string_view kind) {
  double mean = 0;
  for (double g : gaps) mean += g;
  mean /= static_cast<double>(gaps.size());
  if (mean <= 0) {
    throw ValidationError("all " + std::string(kind) +
                          " gaps are zero, exponential rate would be infinite");
  }
  return 1.0 / mean;
}

TurnTakingParams fit_from_sequences(std::span<const std::vector<TransitionEvent>> sequences,
                                    TurnTakingMode mode) {
  std::array<std::int64_t, kNumTransitionTypes> counts{};
  std::array<std::array<std::int64_t, kNumTransitionTypes>, kNumTransitionTypes> bigrams{};
  std::vector<double> th_gaps, ts_gaps, ir_ratios;
  std::int64_t total = 0;

  for (const auto& seq : sequences) {
    std::optional<TransitionType> prev;
    for (const auto& e : seq) {
      int t = static_cast<int>(e.type);
      ++counts[static_cast<std::size_t>(t)];
      ++total;
      if (prev.has_value()) {
        ++bigrams[static_cast<std::size_t>(static_cast<int>(*prev))][static_cast<std::size_t>(t)];
      }
      prev = e.type;
      switch (e.type) {
        case TransitionType::TurnHold:
          if (e.gap) th_gaps.push_back(*e.gap);
          break;
        case TransitionType::TurnSwitch:
          if (e.gap) ts_gaps.push_back(*e.gap);
          break;
        case TransitionType::Interruption:
          if (e.overlap_ratio) ir_ratios.push_back(*e.overlap_ratio);
          break;
        case TransitionType::Backchannel:
          break;
      }
    }
  }
  if (total == 0) throw ValidationError("cannot fit turn-taking parameters from zero events");
  if (th_gaps.empty()) throw ValidationError("no TH gap samples, cannot estimate beta_th");
  if (ts_gaps.empty()) throw ValidationError("no TS gap samples, cannot estimate beta_ts");
  if (ir_ratios.empty()) throw ValidationError("no IR ratio samples, cannot estimate beta_ir");

  TurnTakingParams fitted;
  fitted.mode = mode;
  for (int i = 0; i < kNumTransitionTypes; ++i) {
    fitted.prior[static_cast<std::size_t>(i)] =
        static_cast<double>(counts[static_cast<std::size_t>(i)]) / static_cast<double>(total);
  }
  for (int i = 0; i < kNumTransitionTypes; ++i) {
    std::int64_t row_total = 0;
    for (int j = 0; j < kNumTransitionTypes; ++j) {
      row_total += bigrams[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    if (mode == TurnTakingMode::Markov && row_total > 0) {
      for (int j = 0; j < kNumTransitionTypes; ++j) {
        fitted.matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            static_cast<double>(bigrams[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) /
            static_cast<double>(row_total);
      }
    } else {
      // unseen predecessor type: fall back to the marginal distribution
      fitted.matrix[static_cast<std::size_t>(i)] = fitted.prior;
    }
  }
  fitted.beta_th = fit_exponential_rate(th_gaps, "TH");
  fitted.beta_ts = fit_exponential_rate(ts_gaps, "TS");
  fitted.beta_ir = fit_truncated_exp_rate(ir_ratios);
  return fitted;
}

}  // namespace

TurnTakingParams fit_params(std::span<const TransitionEvent> events, TurnTakingMode mode) {
  std::vector<TransitionEvent> seq(events.begin(), events.end());
  std::vector<std::vector<TransitionEvent>> one{std::move(seq)};
  return fit_from_sequences(one, mode);
}

TurnTakingParams fit_params(std::span<const std::vector<TransitionEvent>> sequences,
                            TurnTakingMode mode) {
  return fit_from_sequences(sequences, mode);
}

namespace {

ProbVector boost_vector(const ProbVector& p, double factor) {
  ProbVector out = p;
  out[static_cast<std::size_t>(TransitionType::Interruption)] *= factor;
  out[static_cast<std::size_t>(TransitionType::Backchannel)] *= factor;
  double sum = 0;
  for (double v : out) sum += v;
  if (sum <= 0) throw ValidationError("boost_overlap: probability vector sums to zero");
  for (double& v : out) v /= sum;
  return out;
}

}  // namespace

TurnTakingParams boost_overlap(const TurnTakingParams& params, double factor) {
  if (!(factor > 0)) throw std::invalid_argument("boost_overlap: factor must be > 0");
  TurnTakingParams out = params;
  out.prior = boost_vector(params.prior, factor);
  for (auto& row : out.matrix) row = boost_vector(row, factor);
  return out;
}

TurnTakingParams params_from_keyvalue(KeyValueConfig& cfg, const std::string& prefix, const std::string& origin) {
  TurnTakingParams p;
  std::string mode = cfg.get_string(prefix + "mode", "categorical");
  if (mode == "categorical") {
    p.mode = TurnTakingMode::Categorical;
  } else if (mode == "markov") {
    p.mode = TurnTakingMode::Markov;
  } else {
    throw ParseError(origin + ": unknown mode '" + mode + "'");
  }
  auto pv = cfg.get_double_array(prefix + "p");
  if (pv.size() != kNumTransitionTypes) {
    throw ParseError(origin + ": " + prefix + "p must have 4 entries");
  }
  std::copy(pv.begin(), pv.end(), p.prior.begin());

  const std::array<std::string, 4> row_keys = {"P.th", "P.ts", "P.ir", "P.bc"};
  bool any_row = false;
  for (int i = 0; i < kNumTransitionTypes; ++i) {
    const std::string key = prefix + row_keys[static_cast<std::size_t>(i)];
    if (cfg.has(key)) {
      auto row = cfg.get_double_array(key);
      if (row.size() != kNumTransitionTypes) {
        throw ParseError(origin + ": " + key + " must have 4 entries");
      }
      std::copy(row.begin(), row.end(), p.matrix[static_cast<std::size_t>(i)].begin());
      any_row = true;
    }
  }
  if (!any_row) {
    // categorical recipes usually omit the matrix; every row defaults to p
    for (auto& row : p.matrix) row = p.prior;
  } else {
    for (const auto& suffix : row_keys) {
      const std::string key = prefix + suffix;
      if (!cfg.has(key)) throw ParseError(origin + ": incomplete matrix, missing " + key);
    }
  }
  p.beta_th = cfg.get_double(prefix + "beta_th");
  p.beta_ts = cfg.get_double(prefix + "beta_ts");
  p.beta_ir = cfg.get_double(prefix + "beta_ir");
  p.bc_max_duration = cfg.get_double(prefix + "bc_max_duration", 1.0);
  p.validate();
  return p;
}

TurnTakingParams load_params_file(const std::filesystem::path& path) {
  KeyValueConfig cfg = KeyValueConfig::parse_file(path);
  TurnTakingParams p = params_from_keyvalue(cfg, "", path.string());
  cfg.reject_unused();
  return p;
}

void save_params_file(const std::filesystem::path& path, const TurnTakingParams& params) {
  params.validate();
  std::ostringstream out;
  out << "# turn-taking model parameters\n";
  out << "mode = " << (params.mode == TurnTakingMode::Markov ? "markov" : "categorical") << "\n";
  out << "p = " << fmt_vector(params.prior) << "\n";
  if (params.mode == TurnTakingMode::Markov) {
    const std::array<std::string, 4> row_keys = {"P.th", "P.ts", "P.ir", "P.bc"};
    for (int i = 0; i < kNumTransitionTypes; ++i) {
      out << row_keys[static_cast<std::size_t>(i)] << " = "
          << fmt_vector(params.matrix[static_cast<std::size_t>(i)]) << "\n";
    }
  }
  out << "beta_th = " << fmt_double(params.beta_th) << "\n";
  out << "beta_ts = " << fmt_double(params.beta_ts) << "\n";
  out << "beta_ir = " << fmt_double(params.beta_ir) << "\n";
  out << "bc_max_duration = " << fmt_double(params.bc_max_duration) << "\n";

  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f << out.str();
  if (!f.flush()) throw IoError("write failed: " + path.string());
}

}  // namespace convsim
