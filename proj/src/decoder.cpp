#include "revdec/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <compare>
#include <stdexcept>

namespace revdec {

namespace {

struct Candidate {
  Hypothesis hyp;
  int emitted = 0;
  bool finished = false;
};

// A pool entry that has not been copied yet: its parent plus at most one
// extra token emitted at the current frame.
struct Pending {
  std::size_t parent = 0;
  TokenId extra = -1;
  double score = 0.0;
  int emitted = 0;
  bool finished = false;

  bool extended() const { return extra >= 0; }
};

// Three-way compare of `a ++ [ea]` against `b ++ [eb]` (extras optional),
// given the length of the common prefix of `a` and `b`.
template <class T>
std::strong_ordering compare_extended(const std::vector<T>& a, bool has_a, T ea, const std::vector<T>& b, bool has_b,
                                      T eb, std::size_t lcp) {
  const std::size_t m = std::min(a.size(), b.size());
  if (lcp < m) return a[lcp] <=> b[lcp];
  const std::size_t la = a.size() + has_a, lb = b.size() + has_b;
  for (std::size_t i = m; i < std::min(la, lb); ++i) {
    const T x = i < a.size() ? a[i] : ea;
    const T y = i < b.size() ? b[i] : eb;
    if (x != y) return x <=> y;
  }
  return la <=> lb;
}

class PoolView {
 public:
  PoolView(const std::vector<Candidate>& pool, int frame)
      : pool_(pool), frame_(frame), n_(pool.size()), token_lcp_(n_ * n_), frame_lcp_(n_ * n_) {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i; j < n_; ++j) {
        const auto& a = pool[i].hyp;
        const auto& b = pool[j].hyp;
        token_lcp_[i * n_ + j] = token_lcp_[j * n_ + i] = common_prefix(a.tokens, b.tokens);
        frame_lcp_[i * n_ + j] = frame_lcp_[j * n_ + i] = common_prefix(a.emit_frames, b.emit_frames);
      }
  }

  std::strong_ordering tokens(const Pending& a, const Pending& b) const {
    return compare_extended(pool_[a.parent].hyp.tokens, a.extended(), a.extra, pool_[b.parent].hyp.tokens,
                            b.extended(), b.extra, token_lcp_[a.parent * n_ + b.parent]);
  }
  std::strong_ordering frames(const Pending& a, const Pending& b) const {
    return compare_extended(pool_[a.parent].hyp.emit_frames, a.extended(), frame_, pool_[b.parent].hyp.emit_frames,
                            b.extended(), frame_, frame_lcp_[a.parent * n_ + b.parent]);
  }

  // Merge key: finished entries by sequence, active ones by sequence and count.
  std::strong_ordering key(const Pending& a, const Pending& b) const {
    if (a.finished != b.finished) return a.finished <=> b.finished;
    if (!a.finished && a.emitted != b.emitted) return a.emitted <=> b.emitted;
    return tokens(a, b);
  }

  // Among equal keys the kept path has the higher score, then earlier frames.
  bool merge_before(const Pending& a, const Pending& b) const {
    if (auto k = key(a, b); k != 0) return k < 0;
    if (a.score != b.score) return a.score > b.score;
    return frames(a, b) < 0;
  }

  bool ranks_before(const Pending& a, const Pending& b) const {
    if (a.score != b.score) return a.score > b.score;
    if (auto t = tokens(a, b); t != 0) return t < 0;
    if (a.finished != b.finished) return a.finished;
    return a.emitted < b.emitted;
  }

  Candidate materialize(const Pending& p) const {
    Candidate c{pool_[p.parent].hyp, p.emitted, p.finished};
    c.hyp.log_score = p.score;
    if (p.extended()) {
      c.hyp.tokens.push_back(p.extra);
      c.hyp.emit_frames.push_back(frame_);
    }
    return c;
  }

 private:
  static std::size_t common_prefix(const std::vector<int>& a, const std::vector<int>& b) {
    const auto [ia, ib] = std::mismatch(a.begin(), a.end(), b.begin(), b.end());
    return static_cast<std::size_t>(ia - a.begin());
  }

  const std::vector<Candidate>& pool_;
  int frame_;
  std::size_t n_;
  std::vector<std::size_t> token_lcp_, frame_lcp_;
};

// Merge duplicates, then keep the best `capacity`.
std::vector<Candidate> select_pool(const std::vector<Candidate>& pool, std::vector<Pending> pending, int frame,
                                   std::size_t capacity) {
  const PoolView view(pool, frame);
  std::sort(pending.begin(), pending.end(),
            [&](const Pending& a, const Pending& b) { return view.merge_before(a, b); });
  auto last = std::unique(pending.begin(), pending.end(),
                          [&](const Pending& a, const Pending& b) { return view.key(a, b) == 0; });
  pending.erase(last, pending.end());
  const auto keep = std::min(capacity, pending.size());
  std::partial_sort(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(keep), pending.end(),
                    [&](const Pending& a, const Pending& b) { return view.ranks_before(a, b); });
  std::vector<Candidate> out;
  out.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) out.push_back(view.materialize(pending[i]));
  return out;
}

}  // namespace

Beam expand_frame(const Beam& beam, const ScoringSource& src, int frame, const DecoderConfig& cfg,
                  double word_reward) {
  if (beam.empty()) throw std::logic_error("expand_frame: empty input beam");
  const auto capacity = static_cast<std::size_t>(cfg.beam_size);
  const int cap = cfg.max_symbols_per_frame;
  const Vocabulary& vocab = src.vocab();
  const TokenId blank = vocab.blank_id();
  const TokenId bos = vocab.bos_id();

  std::vector<Candidate> pool;
  for (const auto& h : beam.entries()) pool.push_back({h, 0, false});

  auto has_active = [](const std::vector<Candidate>& p) {
    return std::any_of(p.begin(), p.end(), [](const Candidate& c) { return !c.finished; });
  };

  std::vector<Pending> next;
  while (has_active(pool)) {
    next.clear();
    for (std::size_t i = 0; i < pool.size(); ++i) {
      const Candidate& c = pool[i];
      if (c.finished) {
        next.push_back({i, -1, c.hyp.log_score, c.emitted, true});
        continue;
      }
      const LogProbRow row = src.score_next(frame, c.hyp.tokens);
      next.push_back({i, -1, c.hyp.log_score + row[static_cast<std::size_t>(blank)], c.emitted, true});
      for (TokenId t = 0; t < vocab.size(); ++t) {
        if (t == blank || t == bos) continue;
        const double lp = row[static_cast<std::size_t>(t)];
        if (!std::isfinite(lp)) continue;
        const int emitted = c.emitted + 1;
        next.push_back({i, t, c.hyp.log_score + (lp + word_reward), emitted, emitted >= cap});
      }
    }
    pool = select_pool(pool, next, frame, capacity);
  }

  std::vector<Hypothesis> hyps;
  hyps.reserve(pool.size());
  for (auto& c : pool) hyps.push_back(std::move(c.hyp));
  return Beam(cfg.beam_size, std::move(hyps));
}

Beam expand_frame(const Beam& beam, const ScoringSource& src, int frame, const DecoderConfig& cfg) {
  return expand_frame(beam, src, frame, cfg, effective_word_reward(cfg, PrunePolicy{}));
}

bool accept(std::span<const TokenId> candidate, std::span<const TokenId> best, int rw) {
  const auto keep = static_cast<std::ptrdiff_t>(best.size()) - rw;
  if (keep <= 0) return true;
  const auto len = static_cast<std::size_t>(keep);
  return candidate.size() >= len && std::equal(best.begin(), best.begin() + keep, candidate.begin());
}

Beam prune_revision_window(const Beam& beam, int rw) {
  const auto& best = beam.best().tokens;
  std::vector<Hypothesis> kept;
  for (const auto& h : beam.entries())
    if (accept(h.tokens, best, rw)) kept.push_back(h);
  return Beam(beam.capacity(), std::move(kept));
}

bool commit_fires(CommitPolicy policy, int frame, int chunk_size, int frame_count) {
  if (frame == frame_count) return true;
  return policy.mode == CommitMode::every_frame || frame % chunk_size == 0;
}

DecodeTrace decode_stream(const ScoringSource& src, const DecoderConfig& cfg, CommitPolicy commit,
                          PrunePolicy prune) {
  return decode_stream(src, cfg, commit, prune, nullptr);
}

DecodeTrace decode_stream(const ScoringSource& src, const DecoderConfig& cfg, CommitPolicy commit,
                          PrunePolicy prune, DecodeObserver* observer) {
  cfg.validate();
  if (prune.mode == PruneMode::revision_window && !cfg.revision_window)
    throw std::invalid_argument("revision_window pruning requested without a window size");

  DecodeTrace trace;
  trace.config = cfg;
  trace.config.word_reward = effective_word_reward(cfg, prune);
  trace.commit = commit;
  trace.prune = prune;
  trace.vocab = src.vocab();
  trace.source_frames = src.frame_count();

  const double reward = *trace.config.word_reward;
  Beam beam(cfg.beam_size, {Hypothesis::seed(src.vocab().bos_id())});
  const int frames = src.frame_count();
  if (frames == 0) trace.commits.push_back({0, {}});

  for (int i = 1; i <= frames; ++i) {
    beam = expand_frame(beam, src, i, cfg, reward);
    const bool fires = commit_fires(commit, i, cfg.chunk_size, frames);
    if (fires) {
      // The committed top-1 is also the reference the window prunes against.
      trace.commits.push_back({i, beam.best().displayed()});
      if (prune.mode == PruneMode::revision_window) beam = prune_revision_window(beam, *cfg.revision_window);
    }
    if (observer) observer->on_frame(i, beam, fires);
  }
  trace.final = beam.best();
  return trace;
}

}  // namespace revdec
