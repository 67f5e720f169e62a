#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "convsim/corpus_io.hpp"
#include "convsim/rng.hpp"
#include "convsim/turntaking.hpp"

namespace convsim {

struct PlacedUtterance {
  std::string source_id;
  std::string speaker_id;
  double onset = 0.0;
  double duration = 0.0;
  TransitionType transition = TransitionType::TurnHold;
  double gain_db = 0.0;
  std::string text;
};

struct ConversationPlan {
  std::string session_id;
  int num_speakers = 0;
  double target_duration = 0.0;
  std::uint64_t seed = 0;
  std::vector<PlacedUtterance> placements;  // sorted by onset
  // Demotion bookkeeping: backchannel draws with no collision-free feedback
  // token inside the anchor for any candidate speaker (retried as
  // interruptions), and draws that ended up as plain switches because
  // interruption placement failed too. Both should stay near zero for a
  // corpus that gives every speaker some clips under the backchannel cap and
  // some above it.
  int bc_to_ir_fallbacks = 0;
  int exclusion_demotions = 0;
};

// Onset rules, exposed for direct testing.
double interruption_onset(double prev_end, double prev_duration, double new_duration, double overlap_ratio);
double backchannel_onset(double prev_start, double prev_duration, double bc_duration, double offset_fraction);

// Runs the generative turn-taking loop until the conversation frontier (the
// max placement end) reaches target_duration. Draw order per event is fixed
// and documented in docs/determinism.md; identical inputs give identical
// plans. gain_range_db is inclusive (low, high).
ConversationPlan build_plan(const std::string& session_id,
                            std::uint64_t seed,
                            const TurnTakingParams& params,
                            const std::vector<SpeakerPool>& pools,
                            int num_speakers,
                            double target_duration,
                            std::pair<double, double> gain_range_db,
                            Rng& rng);

// Brute-force O(n^2) invariant check. Empty result means the plan is valid;
// otherwise each string describes one violation (self-overlap pair, BC not
// contained in its anchor, bad ordering, bad spans).
std::vector<std::string> validate_plan(const ConversationPlan& plan);

// Converts a plan to the session-manifest schema. audio_path stays empty
// until the renderer fills it in; duration is the plan frontier.
SessionManifest plan_to_manifest(const ConversationPlan& plan, int sample_rate);

}  // namespace convsim
