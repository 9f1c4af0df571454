#pragma once

#include <span>

#include "revdec/core.hpp"
#include "revdec/scoring.hpp"

namespace revdec {

// One frame of transducer beam search.
//
// Every hypothesis in `beam` is expanded frame-synchronously: at each emission
// step it either takes blank (finishing the frame, score += log p(blank)) or
// emits a non-blank token (score += log p(token) + word_reward) and is
// re-scored at the same frame with the extended context. A hypothesis that has
// emitted max_symbols_per_frame tokens finishes the frame without a blank
// cost. bos is never emitted.
//
// Finished and still-emitting candidates compete in one pool that is cut to
// the beam size after every emission step, so b=1 reduces to per-step greedy
// argmax. Duplicate token sequences keep their best path (no log-sum).
Beam expand_frame(const Beam& beam, const ScoringSource& src, int frame, const DecoderConfig& cfg,
                  double word_reward);

// Convenience overload resolving the word reward for an unpruned search.
Beam expand_frame(const Beam& beam, const ScoringSource& src, int frame, const DecoderConfig& cfg);

// True iff `candidate` agrees with `best` on its first len(best) - rw tokens.
bool accept(std::span<const TokenId> candidate, std::span<const TokenId> best, int rw);

// Keeps the entries that accept() against the current top-1, in order.
Beam prune_revision_window(const Beam& beam, int rw);

bool commit_fires(CommitPolicy policy, int frame, int chunk_size, int frame_count);

DecodeTrace decode_stream(const ScoringSource& src, const DecoderConfig& cfg, CommitPolicy commit,
                          PrunePolicy prune);

// Beam states observed after each frame, for inspecting search evolution.
struct DecodeObserver {
  virtual ~DecodeObserver() = default;
  virtual void on_frame(int frame, const Beam& beam, bool committed) = 0;
};

DecodeTrace decode_stream(const ScoringSource& src, const DecoderConfig& cfg, CommitPolicy commit,
                          PrunePolicy prune, DecodeObserver* observer);

}  // namespace revdec
