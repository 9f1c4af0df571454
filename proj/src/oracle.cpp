#include "revdec/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "revdec/decoder.hpp"
#include "revdec/metrics.hpp"

namespace revdec {

namespace {

std::string too_large_message(double bound, double limit) {
  std::ostringstream os;
  os << "search space bound " << bound << " exceeds oracle limit " << limit;
  return os.str();
}

class Enumerator {
 public:
  Enumerator(const ScoringSource& src, const DecoderConfig& cfg, double word_reward)
      : src_(src), cap_(cfg.max_symbols_per_frame), reward_(word_reward) {}

  OracleResult run() {
    Hypothesis seed = Hypothesis::seed(src_.vocab().bos_id());
    visit(1, seed, 0);
    OracleResult out;
    out.paths = paths_;
    out.finals = std::move(finals_);
    const Hypothesis* best = nullptr;
    for (const auto& [_, h] : out.finals)
      if (!best || ranks_before(h, *best)) best = &h;
    out.best = best ? *best : seed;
    return out;
  }

 private:
  void visit(int frame, Hypothesis& hyp, int emitted) {
    if (frame > src_.frame_count()) {
      ++paths_;
      auto [it, inserted] = finals_.try_emplace(hyp.tokens, hyp);
      if (!inserted) it->second = better_path(it->second, hyp);
      return;
    }
    if (emitted == cap_) {
      visit(frame + 1, hyp, 0);
      return;
    }
    const LogProbRow row = src_.score_next(frame, hyp.tokens);
    const auto& vocab = src_.vocab();

    const double saved = hyp.log_score;
    hyp.log_score = saved + row[static_cast<std::size_t>(vocab.blank_id())];
    visit(frame + 1, hyp, 0);
    hyp.log_score = saved;

    for (TokenId t = 0; t < vocab.size(); ++t) {
      if (t == vocab.blank_id() || t == vocab.bos_id()) continue;
      const double lp = row[static_cast<std::size_t>(t)];
      if (!std::isfinite(lp)) continue;
      hyp.tokens.push_back(t);
      hyp.emit_frames.push_back(frame);
      hyp.log_score = saved + (lp + reward_);
      visit(frame, hyp, emitted + 1);
      hyp.tokens.pop_back();
      hyp.emit_frames.pop_back();
      hyp.log_score = saved;
    }
  }

  const ScoringSource& src_;
  int cap_;
  double reward_;
  std::size_t paths_ = 0;
  std::map<TokenSeq, Hypothesis> finals_;
};

}  // namespace

SearchTooLarge::SearchTooLarge(double bound, double limit)
    : std::length_error(too_large_message(bound, limit)), bound_(bound) {}

double oracle_search_bound(const ScoringSource& src, const DecoderConfig& cfg) {
  return std::pow(static_cast<double>(src.vocab().size()),
                  static_cast<double>(src.frame_count()) * cfg.max_symbols_per_frame);
}

OracleResult exhaustive_search(const ScoringSource& src, const DecoderConfig& cfg, double word_reward) {
  cfg.validate();
  const double bound = oracle_search_bound(src, cfg);
  if (bound > kOracleLimit) throw SearchTooLarge(bound, kOracleLimit);
  return Enumerator(src, cfg, word_reward).run();
}

Hypothesis exhaustive_best(const ScoringSource& src, const DecoderConfig& cfg) {
  return exhaustive_search(src, cfg, effective_word_reward(cfg, PrunePolicy{})).best;
}

RevisionFrontier revision_frontier(const ScoringSource& src, const DecoderConfig& cfg) {
  const double bound = oracle_search_bound(src, cfg);
  if (bound > kOracleLimit) throw SearchTooLarge(bound, kOracleLimit);

  DecoderConfig base = cfg;
  base.word_reward = cfg.word_reward.value_or(0.0);
  base.revision_window.reset();

  auto run = [&](std::optional<int> rw) {
    DecoderConfig c = base;
    c.revision_window = rw;
    const PrunePolicy prune{rw ? PruneMode::revision_window : PruneMode::none};
    return decode_stream(src, c, CommitPolicy{CommitMode::chunk}, prune);
  };
  auto point = [](std::optional<int> rw, const DecodeTrace& trace) {
    return FrontierPoint{rw, normalized_erasure(trace).value, trace.final.log_score, trace.final.displayed()};
  };

  RevisionFrontier out;
  const DecodeTrace free_trace = run(std::nullopt);
  out.unconstrained = point(std::nullopt, free_trace);
  std::size_t longest = 0;
  for (const auto& c : free_trace.commits) longest = std::max(longest, c.displayed.size());
  for (int rw = 0; rw <= static_cast<int>(longest); ++rw) out.by_rw.push_back(point(rw, run(rw)));
  return out;
}

}  // namespace revdec
