#include "convsim/planner.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <set>

#include "convsim/error.hpp"

namespace convsim {

double interruption_onset(double prev_end, double prev_duration, double new_duration, double overlap_ratio) {
  return std::max(0.0, prev_end - overlap_ratio * std::min(prev_duration, new_duration));
}

double backchannel_onset(double prev_start, double prev_duration, double bc_duration, double offset_fraction) {
  return prev_start + offset_fraction * (prev_duration - bc_duration);
}

namespace {

struct Span {
  double onset;
  double end;
};

// Utterances split by role: clips longer than the backchannel cap carry
// turns, clips at or under it are feedback tokens. A turn anchored on a
// feedback-sized clip could never host a backchannel (backchannels nest
// strictly inside their anchor), so turn placements avoid them whenever the
// speaker has longer material.
struct SpeakerState {
  const SpeakerPool* pool = nullptr;
  std::vector<std::size_t> turn_ids;     // indices into pool->utterances
  std::vector<std::size_t> token_ids;
  std::vector<std::size_t> unused_turn;  // not-yet-placed subset of each
  std::vector<std::size_t> unused_token;
  std::vector<Span> spans;
};

// A candidate utterance chosen but not yet removed from its unused list, so
// a rejected candidate leaves the bookkeeping untouched.
struct Candidate {
  std::size_t utterance;                   // index into pool->utterances
  std::vector<std::size_t>* unused = nullptr;
  std::optional<std::size_t> unused_pos;   // position to swap-remove on commit
};

void refill_if_empty(std::vector<std::size_t>& unused, const std::vector<std::size_t>& ids) {
  if (unused.empty()) unused = ids;
}

// Uniform pick for a turn-carrying placement; speakers with nothing longer
// than the cap fall back to their feedback tokens.
Candidate peek_turn(SpeakerState& st, Rng& rng) {
  const bool has_turns = !st.turn_ids.empty();
  const std::vector<std::size_t>& ids = has_turns ? st.turn_ids : st.token_ids;
  std::vector<std::size_t>& unused = has_turns ? st.unused_turn : st.unused_token;
  refill_if_empty(unused, ids);
  const std::size_t pos = rng.next_index(unused.size());
  return Candidate{unused[pos], &unused, pos};
}

void commit(const Candidate& c) {
  if (!c.unused || !c.unused_pos) return;
  (*c.unused)[*c.unused_pos] = c.unused->back();
  c.unused->pop_back();
}

bool span_free(const SpeakerState& st, double onset, double end) {
  for (const Span& s : st.spans) {
    if (onset < s.end && s.onset < end) return false;
  }
  return true;
}

struct Anchor {
  int speaker = -1;
  double onset = 0.0;
  double end = 0.0;
  double duration = 0.0;
};

// Feasible onset sub-intervals (possibly single points) for a span of length
// dur whose onset must lie in [lo, hi - dur], avoiding the speaker's own
// spans. Endpoints that merely touch an existing span stay feasible, matching
// the strict inequalities in span_free.
std::vector<Span> free_onsets(const SpeakerState& st, double lo, double hi, double dur) {
  std::vector<Span> segs;
  const double max_onset = hi - dur;
  if (max_onset < lo) return segs;
  segs.push_back(Span{lo, max_onset});
  for (const Span& s : st.spans) {
    const double block_lo = s.onset - dur;  // onsets in (block_lo, s.end) collide
    std::vector<Span> next;
    for (const Span& seg : segs) {
      if (seg.end <= block_lo || seg.onset >= s.end) {
        next.push_back(seg);
        continue;
      }
      if (seg.onset <= block_lo) next.push_back(Span{seg.onset, block_lo});
      if (seg.end >= s.end) next.push_back(Span{s.end, seg.end});
    }
    segs = std::move(next);
  }
  return segs;
}

// Maps a unit draw onto the union of feasible onsets, weighted by length.
// When only exact-fit points remain, the draw indexes one of them.
double pick_onset(const std::vector<Span>& segs, double u) {
  double total = 0.0;
  for (const Span& s : segs) total += s.end - s.onset;
  if (total > 0.0) {
    double x = u * total;
    for (const Span& s : segs) {
      const double len = s.end - s.onset;
      if (x <= len) return std::min(s.onset + x, s.end);
      x -= len;
    }
    return segs.back().end;
  }
  const auto k = static_cast<std::size_t>(u * static_cast<double>(segs.size()));
  return segs[std::min(k, segs.size() - 1)].onset;
}

// Uniform pick among the feasible members of one role list, unused entries
// first; reuse is allowed when nothing unused fits.
template <typename Feasible>
std::optional<Candidate> pick_feasible(std::vector<std::size_t>& unused,
                                       const std::vector<std::size_t>& ids,
                                       Feasible&& feasible, Rng& rng) {
  std::vector<std::size_t> fits;
  for (std::size_t pos = 0; pos < unused.size(); ++pos) {
    if (feasible(unused[pos])) fits.push_back(pos);
  }
  if (!fits.empty()) {
    const std::size_t pos = fits[rng.next_index(fits.size())];
    return Candidate{unused[pos], &unused, pos};
  }
  std::vector<std::size_t> any;
  for (std::size_t id : ids) {
    if (feasible(id)) any.push_back(id);
  }
  if (any.empty()) return std::nullopt;
  return Candidate{any[rng.next_index(any.size())], nullptr, std::nullopt};
}

struct BcChoice {
  Candidate cand;
  double onset;
};

// Backchannel choice: uniform among the feedback tokens that nest strictly
// inside the anchor and still have a collision-free position there. The
// nesting is strict (token duration below the anchor's) because a token
// covering its anchor exactly would be indistinguishable from it in the
// annotation. The offset draw is then mapped onto the free positions, so
// failure means no token fits anywhere in the anchor.
std::optional<BcChoice> choose_backchannel(SpeakerState& st, double bc_max, const Anchor& anchor,
                                           double fraction, Rng& rng) {
  const auto& utts = st.pool->utterances;
  auto feasible = [&](std::size_t utt) {
    const double dur = utts[utt].audio.duration;
    return dur <= bc_max && dur < anchor.duration &&
           !free_onsets(st, anchor.onset, anchor.end, dur).empty();
  };
  const auto cand = pick_feasible(st.unused_token, st.token_ids, feasible, rng);
  if (!cand) return std::nullopt;
  const double dur = utts[cand->utterance].audio.duration;
  const double onset = pick_onset(free_onsets(st, anchor.onset, anchor.end, dur), fraction);
  return BcChoice{*cand, onset};
}

// Interruption choice: the sampled overlap ratio fixes the onset for each
// candidate duration, so this only filters for self-overlap; uniform among
// the collision-free turn clips, with feedback tokens as a last resort.
std::optional<Candidate> choose_interruption(SpeakerState& st, const Anchor& anchor, double ratio,
                                             double* onset_out, Rng& rng) {
  const auto& utts = st.pool->utterances;
  auto feasible = [&](std::size_t utt) {
    const double onset = interruption_onset(anchor.end, anchor.duration, utts[utt].audio.duration, ratio);
    return span_free(st, onset, onset + utts[utt].audio.duration);
  };
  auto cand = pick_feasible(st.unused_turn, st.turn_ids, feasible, rng);
  if (!cand) cand = pick_feasible(st.unused_token, st.token_ids, feasible, rng);
  if (!cand) return std::nullopt;
  *onset_out = interruption_onset(anchor.end, anchor.duration, utts[cand->utterance].audio.duration, ratio);
  return cand;
}

}  // namespace

ConversationPlan build_plan(const std::string& session_id,
                            std::uint64_t seed,
                            const TurnTakingParams& params,
                            const std::vector<SpeakerPool>& pools,
                            int num_speakers,
                            double target_duration,
                            std::pair<double, double> gain_range_db,
                            Rng& rng) {
  params.validate();
  if (num_speakers < 1) throw ValidationError("num_speakers must be at least 1");
  if (!(target_duration > 0.0)) throw ValidationError("target_duration must be positive");
  if (gain_range_db.first > gain_range_db.second) throw ValidationError("gain range is inverted");
  {
    std::set<std::string> ids;
    for (const SpeakerPool& p : pools) ids.insert(p.speaker_id);
    if (ids.size() != pools.size()) throw ValidationError("duplicate speaker in pools");
  }
  if (static_cast<std::size_t>(num_speakers) > pools.size()) {
    throw ValidationError("requested " + std::to_string(num_speakers) + " speakers but only " +
                          std::to_string(pools.size()) + " are available");
  }

  // Participants: uniform subset without replacement (partial Fisher-Yates).
  std::vector<std::size_t> pool_order(pools.size());
  std::iota(pool_order.begin(), pool_order.end(), std::size_t{0});
  for (int i = 0; i < num_speakers; ++i) {
    const std::size_t j = i + rng.next_index(pool_order.size() - i);
    std::swap(pool_order[i], pool_order[j]);
  }
  std::vector<SpeakerState> speakers(num_speakers);
  for (int i = 0; i < num_speakers; ++i) {
    speakers[i].pool = &pools[pool_order[i]];
    const auto& utts = speakers[i].pool->utterances;
    if (utts.empty()) {
      throw ValidationError("speaker '" + speakers[i].pool->speaker_id + "' has no utterances");
    }
    for (std::size_t u = 0; u < utts.size(); ++u) {
      auto& ids = utts[u].audio.duration > params.bc_max_duration ? speakers[i].turn_ids
                                                                  : speakers[i].token_ids;
      ids.push_back(u);
    }
  }

  ConversationPlan plan;
  plan.session_id = session_id;
  plan.num_speakers = num_speakers;
  plan.target_duration = target_duration;
  plan.seed = seed;

  Anchor anchor;
  double frontier = 0.0;
  std::optional<TransitionType> prev_type;

  // Commits one placement: utterance bookkeeping, gain draw, span record,
  // anchor/frontier advance (backchannels advance neither).
  auto place = [&](int spk, const Candidate& cand, double onset, TransitionType type) {
    SpeakerState& st = speakers[spk];
    const SourceUtterance& utt = st.pool->utterances[cand.utterance];
    commit(cand);
    const double gain = rng.uniform(gain_range_db.first, gain_range_db.second);
    const double end = onset + utt.audio.duration;
    st.spans.push_back(Span{onset, end});
    plan.placements.push_back(PlacedUtterance{utt.id, st.pool->speaker_id, onset,
                                              utt.audio.duration, type, gain, utt.text});
    if (type != TransitionType::Backchannel) {
      anchor = Anchor{spk, onset, end, utt.audio.duration};
      frontier = end;
    }
    prev_type = type;
  };

  // First utterance: uniform speaker, uniform utterance, onset 0. Labeled TH
  // by convention (there is no prior turn; single-speaker sessions are all-TH
  // and classification skips the first utterance either way).
  {
    const int first = static_cast<int>(rng.next_index(num_speakers));
    const Candidate cand = peek_turn(speakers[first], rng);
    place(first, cand, 0.0, TransitionType::TurnHold);
    // The opening utterance is not a sampled transition; in Markov mode the
    // first real event draws from the initial distribution.
    prev_type.reset();
  }

  // Candidate speakers for a non-TH event: everyone but the anchor speaker,
  // probed cyclically from a uniform start so the accepted one is uniform
  // among those whose span stays self-overlap free.
  auto candidate_order = [&]() {
    std::vector<int> others;
    others.reserve(num_speakers - 1);
    for (int i = 0; i < num_speakers; ++i) {
      if (i != anchor.speaker) others.push_back(i);
    }
    const std::size_t start = rng.next_index(others.size());
    std::vector<int> order(others.size());
    for (std::size_t k = 0; k < others.size(); ++k) {
      order[k] = others[(start + k) % others.size()];
    }
    return order;
  };

  // Turn hold / turn switch land at the frontier plus a non-negative gap, so
  // they can never collide with anything already placed.
  auto place_after_gap = [&](int spk, double gap, TransitionType type) {
    const Candidate cand = peek_turn(speakers[spk], rng);
    place(spk, cand, anchor.end + gap, type);
  };

  auto demote_to_switch = [&](const std::vector<int>& order) {
    ++plan.exclusion_demotions;
    const double gap = sample_gap(params, TransitionType::TurnSwitch, rng);
    place_after_gap(order.front(), gap, TransitionType::TurnSwitch);
  };

  auto try_interruption = [&](double ratio, const std::vector<int>& order) {
    for (int spk : order) {
      double onset = 0.0;
      if (const auto cand = choose_interruption(speakers[spk], anchor, ratio, &onset, rng)) {
        place(spk, *cand, onset, TransitionType::Interruption);
        return true;
      }
    }
    return false;
  };

  constexpr int kStallLimit = 100000;
  constexpr std::size_t kEventLimit = 2000000;
  int stalled = 0;

  while (frontier < target_duration) {
    if (plan.placements.size() >= kEventLimit) {
      throw ValidationError("plan for '" + session_id + "' exceeded the event limit before reaching its target duration");
    }
    const double frontier_before = frontier;

    const TransitionType type = (num_speakers == 1)
                                    ? TransitionType::TurnHold
                                    : sample_transition(params, prev_type, rng);
    switch (type) {
      case TransitionType::TurnHold: {
        const double gap = sample_gap(params, TransitionType::TurnHold, rng);
        place_after_gap(anchor.speaker, gap, TransitionType::TurnHold);
        break;
      }
      case TransitionType::TurnSwitch: {
        const double gap = sample_gap(params, TransitionType::TurnSwitch, rng);
        const std::vector<int> order = candidate_order();
        place_after_gap(order.front(), gap, TransitionType::TurnSwitch);
        break;
      }
      case TransitionType::Interruption: {
        const double ratio = sample_overlap_ratio(params, rng);
        const std::vector<int> order = candidate_order();
        if (!try_interruption(ratio, order)) demote_to_switch(order);
        break;
      }
      case TransitionType::Backchannel: {
        const double fraction = rng.uniform();
        const std::vector<int> order = candidate_order();
        bool placed = false;
        for (int spk : order) {
          if (const auto choice =
                  choose_backchannel(speakers[spk], params.bc_max_duration, anchor, fraction, rng)) {
            place(spk, choice->cand, choice->onset, TransitionType::Backchannel);
            placed = true;
            break;
          }
        }
        if (!placed) {
          // No speaker can fit any backchannel inside the anchor: fall back
          // to an interruption with a fresh ratio, then to a plain switch.
          ++plan.bc_to_ir_fallbacks;
          const double ratio = sample_overlap_ratio(params, rng);
          if (!try_interruption(ratio, order)) demote_to_switch(order);
        }
        break;
      }
    }

    if (frontier > frontier_before) {
      stalled = 0;
    } else if (++stalled > kStallLimit) {
      throw ValidationError("plan for '" + session_id + "' stalled: the frontier stopped advancing (transition probabilities may make progress impossible)");
    }
  }

  std::stable_sort(plan.placements.begin(), plan.placements.end(),
                   [](const PlacedUtterance& a, const PlacedUtterance& b) { return a.onset < b.onset; });
  return plan;
}

std::vector<std::string> validate_plan(const ConversationPlan& plan) {
  std::vector<std::string> violations;
  const auto& p = plan.placements;
  auto name = [&](std::size_t i) {
    return "placement " + std::to_string(i) + " ('" + p[i].source_id + "' by '" + p[i].speaker_id + "')";
  };

  if (p.empty()) {
    violations.push_back("plan has no placements");
    return violations;
  }
  if (p.front().onset != 0.0) {
    violations.push_back("first onset is " + std::to_string(p.front().onset) + ", expected 0");
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].onset < 0.0) violations.push_back(name(i) + " has negative onset");
    if (!(p[i].duration > 0.0)) violations.push_back(name(i) + " has non-positive duration");
    if (i + 1 < p.size() && p[i + 1].onset < p[i].onset) {
      violations.push_back("placements " + std::to_string(i) + " and " + std::to_string(i + 1) +
                           " are not sorted by onset");
    }
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) {
      if (p[i].speaker_id != p[j].speaker_id) continue;
      const double end_i = p[i].onset + p[i].duration;
      const double end_j = p[j].onset + p[j].duration;
      if (p[i].onset < end_j && p[j].onset < end_i) {
        violations.push_back(name(i) + " and " + name(j) + " self-overlap");
      }
    }
  }
  // A backchannel must sit inside its anchor: the latest earlier non-BC
  // placement. Earlier BCs are skipped; they never anchor anything.
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i].transition != TransitionType::Backchannel) continue;
    std::optional<std::size_t> anchor;
    for (std::size_t j = 0; j < i; ++j) {
      if (p[j].transition != TransitionType::Backchannel) anchor = j;
    }
    if (!anchor) {
      violations.push_back(name(i) + " is a backchannel with no preceding anchor");
      continue;
    }
    const double slack = 1e-9;
    const double bc_end = p[i].onset + p[i].duration;
    const double anchor_end = p[*anchor].onset + p[*anchor].duration;
    if (p[i].onset < p[*anchor].onset - slack || bc_end > anchor_end + slack) {
      violations.push_back(name(i) + " is a backchannel not contained in its anchor " + name(*anchor));
    }
    if (p[i].onset == p[*anchor].onset && bc_end == anchor_end) {
      // An exact cover leaves the annotation unable to tell token from anchor.
      violations.push_back(name(i) + " is a backchannel covering its anchor " + name(*anchor) + " exactly");
    }
  }
  return violations;
}

SessionManifest plan_to_manifest(const ConversationPlan& plan, int sample_rate) {
  SessionManifest m;
  m.session_id = plan.session_id;
  m.sample_rate = sample_rate;
  double end = 0.0;
  for (const PlacedUtterance& u : plan.placements) {
    end = std::max(end, u.onset + u.duration);
    Supervision s;
    s.speaker_id = u.speaker_id;
    s.onset = u.onset;
    s.duration = u.duration;
    s.source_utterance_id = u.source_id;
    s.transition = to_string(u.transition);
    s.text = u.text;
    m.supervisions.push_back(std::move(s));
  }
  m.duration = end;
  return m;
}

}  // namespace convsim
