#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "revdec/core.hpp"
#include "revdec/scoring.hpp"

namespace revdec {

// Refusal raised when vocab_size^(T * max_symbols_per_frame) exceeds the
// enumeration limit.
class SearchTooLarge : public std::length_error {
 public:
  SearchTooLarge(double bound, double limit);
  double bound() const { return bound_; }

 private:
  double bound_;
};

inline constexpr double kOracleLimit = 1e7;

double oracle_search_bound(const ScoringSource& src, const DecoderConfig& cfg);

struct OracleResult {
  Hypothesis best;
  // Best path for every distinct reachable token sequence.
  std::map<TokenSeq, Hypothesis> finals;
  std::size_t paths = 0;
};

// Depth-first enumeration of every emission path under the decoder's rules
// (blank or token per step, free frame advance at the symbol cap, bos never
// emitted). Shares only scoring and tie-break with the beam search.
OracleResult exhaustive_search(const ScoringSource& src, const DecoderConfig& cfg, double word_reward);

// Uses the word reward an unpruned decode would use.
Hypothesis exhaustive_best(const ScoringSource& src, const DecoderConfig& cfg);

struct FrontierPoint {
  std::optional<int> rw;
  double ne = 0.0;
  double final_score = 0.0;
  TokenSeq final_tokens;
};

struct RevisionFrontier {
  FrontierPoint unconstrained;
  // One point per rw in 0..max commit length of the unconstrained decode.
  std::vector<FrontierPoint> by_rw;
};

// Decodes the instance once per revision window with chunk commits and a
// word reward held fixed across points (cfg.word_reward, default 0).
RevisionFrontier revision_frontier(const ScoringSource& src, const DecoderConfig& cfg);

}  // namespace revdec
