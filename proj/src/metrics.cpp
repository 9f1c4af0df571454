#include "revdec/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace revdec {

std::size_t erasure(std::span<const TokenId> prev, std::span<const TokenId> next) {
  return prev.size() - longest_common_prefix(prev, next);
}

NormalizedErasure normalized_erasure(std::span<const CommitEvent> commits, std::span<const TokenId> final_tokens) {
  if (commits.empty()) throw std::invalid_argument("normalized_erasure needs at least one commit");
  NormalizedErasure out;
  for (std::size_t i = 1; i < commits.size(); ++i)
    out.erased_total += erasure(commits[i - 1].displayed, commits[i].displayed);
  out.final_length = final_tokens.size();
  if (out.final_length > 0) {
    out.value = static_cast<double>(out.erased_total) / static_cast<double>(out.final_length);
  } else if (out.erased_total > 0) {
    out.value = std::numeric_limits<double>::infinity();
    out.degenerate = true;
  }
  return out;
}

NormalizedErasure normalized_erasure(const DecodeTrace& trace) {
  const TokenSeq final_tokens = trace.final.displayed();
  return normalized_erasure(trace.commits, final_tokens);
}

std::vector<int> finalization_frames(std::span<const CommitEvent> commits, std::span<const TokenId> final_tokens) {
  // Walk backwards: position t is final from the earliest commit after which
  // every display starts with final[:t]. A position erased and restored later
  // counts from the restoring commit.
  std::vector<int> g(final_tokens.size(), 0);
  std::size_t stable = final_tokens.size();
  for (std::size_t c = commits.size(); c-- > 0;) {
    stable = std::min(stable, longest_common_prefix(commits[c].displayed, final_tokens));
    for (std::size_t t = 0; t < stable; ++t) g[t] = commits[c].frame_index;
  }
  return g;
}

std::optional<Lagging> average_lagging(std::span<const int> finalization, int source_frames, double frame_span_ms) {
  if (finalization.empty() || source_frames <= 0) return std::nullopt;
  const double len = static_cast<double>(finalization.size());
  const double rate = len / static_cast<double>(source_frames);
  std::size_t cutoff = finalization.size();
  for (std::size_t t = 0; t < finalization.size(); ++t) {
    if (finalization[t] >= source_frames) {
      cutoff = t + 1;
      break;
    }
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < cutoff; ++t)
    sum += static_cast<double>(finalization[t]) - static_cast<double>(t) / rate;
  Lagging out;
  out.frames = sum / static_cast<double>(cutoff);
  out.ms = out.frames * frame_span_ms;
  return out;
}

std::optional<Lagging> average_lagging(const DecodeTrace& trace) {
  const TokenSeq final_tokens = trace.final.displayed();
  const auto g = finalization_frames(trace.commits, final_tokens);
  return average_lagging(g, trace.source_frames, trace.config.frame_span_ms);
}

std::map<int, int> revision_histogram(std::span<const CommitEvent> commits) {
  std::map<int, int> hist;
  for (std::size_t i = 1; i < commits.size(); ++i)
    ++hist[static_cast<int>(erasure(commits[i - 1].displayed, commits[i].displayed))];
  return hist;
}

double bleu(std::span<const std::string> candidate, std::span<const std::string> reference) {
  if (reference.empty()) throw std::invalid_argument("bleu: empty reference");
  if (candidate.empty()) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    std::map<std::vector<std::string>, int> ref_counts;
    for (std::size_t i = 0; i + n <= reference.size(); ++i)
      ++ref_counts[{reference.begin() + static_cast<std::ptrdiff_t>(i),
                    reference.begin() + static_cast<std::ptrdiff_t>(i + n)}];
    std::map<std::vector<std::string>, int> cand_counts;
    for (std::size_t i = 0; i + n <= candidate.size(); ++i)
      ++cand_counts[{candidate.begin() + static_cast<std::ptrdiff_t>(i),
                     candidate.begin() + static_cast<std::ptrdiff_t>(i + n)}];
    double matches = 0.0;
    for (const auto& [gram, count] : cand_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matches += std::min(count, it->second);
    }
    const double total = candidate.size() >= n ? static_cast<double>(candidate.size() - n + 1) : 0.0;
    const double p = n == 1 ? matches / total : (matches + 1.0) / (total + 1.0);
    if (p <= 0.0) return 0.0;
    log_sum += std::log(p);
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double bp = std::min(1.0, std::exp(1.0 - r / c));
  return 100.0 * bp * std::exp(log_sum / 4.0);
}

MetricsReport compute_metrics(const DecodeTrace& trace) {
  MetricsReport rep;
  const auto ne = normalized_erasure(trace);
  rep.ne = ne.value;
  rep.erased_total = ne.erased_total;
  rep.final_length = ne.final_length;
  rep.degenerate = ne.degenerate;
  if (auto al = average_lagging(trace)) {
    rep.al_frames = al->frames;
    rep.al_ms = al->ms;
  }
  rep.revision_histogram = revision_histogram(trace.commits);
  if (trace.reference && !trace.reference->empty()) {
    const auto cand = trace.vocab.render(trace.final.displayed());
    rep.bleu = bleu(cand, *trace.reference);
  }
  return rep;
}

}  // namespace revdec
