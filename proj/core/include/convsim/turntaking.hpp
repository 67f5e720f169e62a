#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "convsim/rng.hpp"

namespace convsim {

// Utterance transition types of the turn-taking model. The integer codes are
// stable and used on disk: TH=0, TS=1, IR=2, BC=3.
enum class TransitionType : int {
  TurnHold = 0,      // same speaker continues after a pause
  TurnSwitch = 1,    // different speaker after a gap
  Interruption = 2,  // different speaker with overlap
  Backchannel = 3,   // short utterance inside another speaker's span
};

inline constexpr int kNumTransitionTypes = 4;
inline constexpr std::array<TransitionType, 4> kAllTransitionTypes = {
    TransitionType::TurnHold, TransitionType::TurnSwitch, TransitionType::Interruption,
    TransitionType::Backchannel};

std::string_view to_string(TransitionType t);  // "TH", "TS", "IR", "BC"
std::optional<TransitionType> transition_from_string(std::string_view s);

enum class TurnTakingMode { Categorical, Markov };

using ProbVector = std::array<double, kNumTransitionTypes>;
using ProbMatrix = std::array<ProbVector, kNumTransitionTypes>;

// Full parameter set of the turn-taking model.
//
// `prior` is the categorical distribution over transition types, in the fixed
// order (TH, TS, IR, BC); in Markov mode it also seeds the first step. Each
// row of `matrix` conditions on the previous type. Gap durations for TH/TS
// are exponential with rates beta_th/beta_ts (1/seconds); the IR overlap
// ratio is exponential with rate beta_ir truncated to (0, 1].
struct TurnTakingParams {
  TurnTakingMode mode = TurnTakingMode::Categorical;
  ProbVector prior{};
  ProbMatrix matrix{};
  double beta_th = 1.0;
  double beta_ts = 1.0;
  double beta_ir = 1.0;
  double bc_max_duration = 1.0;

  // Throws ValidationError unless prior and every matrix row are probability
  // vectors (sum 1 within 1e-9, entries >= 0) and all rates are positive.
  void validate() const;
};

// key = value serialization (docs/file_formats.md). Checked-in recipes under
// recipes/ use this format.
TurnTakingParams load_params_file(const std::filesystem::path& path);
void save_params_file(const std::filesystem::path& path, const TurnTakingParams& params);

// Reads the same keys from an already-parsed config, each prefixed (e.g.
// "turntaking."), so simulation configs can embed the model inline. `origin`
// names the source in error messages. Does not call reject_unused().
class KeyValueConfig;
TurnTakingParams params_from_keyvalue(KeyValueConfig& cfg, const std::string& prefix, const std::string& origin);

// One observed or sampled transition. Exactly the field matching `type` is
// engaged: gap for TH/TS, overlap_ratio for IR, bc_offset_fraction for BC.
struct TransitionEvent {
  TransitionType type = TransitionType::TurnHold;
  std::optional<double> gap;                 // seconds, >= 0
  std::optional<double> overlap_ratio;       // in (0, 1]
  std::optional<double> bc_offset_fraction;  // in [0, 1]

  static TransitionEvent turn_hold(double gap);
  static TransitionEvent turn_switch(double gap);
  static TransitionEvent interruption(double ratio);
  static TransitionEvent backchannel(double offset_fraction);
};

// Inverse-CDF kernels over one unit variate, exposed so tests can pin exact
// draws. The rng-taking wrappers below consume exactly one uniform each.
TransitionType transition_from_unit(const ProbVector& probs, double u);
double gap_from_unit(double beta, double u);            // -ln(1-u)/beta
double overlap_ratio_from_unit(double beta, double u);  // truncated-exp inverse CDF

TransitionType sample_transition(const TurnTakingParams& params,
                                 std::optional<TransitionType> prev, Rng& rng);
// kind must be TurnHold or TurnSwitch.
double sample_gap(const TurnTakingParams& params, TransitionType kind, Rng& rng);
double sample_overlap_ratio(const TurnTakingParams& params, Rng& rng);

// One speech segment of an annotated timeline.
struct TimelineEntry {
  std::string speaker_id;
  double start = 0;
  double end = 0;
};

// Classifies the transition between consecutive utterances of a timeline.
//
// Entries are sorted by start (on ties the longer entry first, so a segment
// beginning exactly with a longer one is judged inside it). Each is classified
// against the current anchor, which is the most recent non-backchannel
// utterance; backchannels never advance the anchor. This mirrors the
// planner's placement rule, so statistics fitted from generated sessions
// recover the generating parameters. Same-speaker overlap in the input
// raises ValidationError.
std::vector<TransitionEvent> classify_transitions(std::vector<TimelineEntry> timeline,
                                                  double bc_max_duration);

// Maximum-likelihood fit from one event sequence. The categorical prior is
// the normalized type histogram; in Markov mode, rows are normalized bigram
// counts (rows with no observations fall back to the prior). beta_th/beta_ts
// are 1/mean(gap); beta_ir maximizes the truncated-exponential likelihood by
// bisection on its derivative (tolerance 1e-8). A rate whose kind has no
// samples raises ValidationError naming the kind.
TurnTakingParams fit_params(std::span<const TransitionEvent> events, TurnTakingMode mode);

// Same fit over several independent sequences (e.g. one per session);
// bigram counts do not cross sequence boundaries.
TurnTakingParams fit_params(std::span<const std::vector<TransitionEvent>> sequences,
                            TurnTakingMode mode);

// Multiplies the IR and BC probabilities by `factor` and re-normalizes; the
// prior and every matrix row are transformed alike. Rates are unchanged.
TurnTakingParams boost_overlap(const TurnTakingParams& params, double factor);

}  // namespace convsim
