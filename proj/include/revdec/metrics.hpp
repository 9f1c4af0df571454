#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "revdec/core.hpp"

namespace revdec {

// Tokens removed from the display when `prev` is replaced by `next`.
std::size_t erasure(std::span<const TokenId> prev, std::span<const TokenId> next);

struct NormalizedErasure {
  double value = 0.0;
  std::size_t erased_total = 0;
  std::size_t final_length = 0;
  // Set when tokens were erased but the final output is empty; value is +inf.
  bool degenerate = false;
};

NormalizedErasure normalized_erasure(std::span<const CommitEvent> commits, std::span<const TokenId> final_tokens);
NormalizedErasure normalized_erasure(const DecodeTrace& trace);

// Frame at which each final token position stopped changing (1-based
// positions map to index t-1).
std::vector<int> finalization_frames(std::span<const CommitEvent> commits, std::span<const TokenId> final_tokens);

struct Lagging {
  double frames = 0.0;
  double ms = 0.0;
};

// Average lagging computed from finalization frames; nullopt for an empty
// final output.
std::optional<Lagging> average_lagging(std::span<const int> finalization, int source_frames, double frame_span_ms);
std::optional<Lagging> average_lagging(const DecodeTrace& trace);

// erased-token count -> number of commit transitions.
std::map<int, int> revision_histogram(std::span<const CommitEvent> commits);

// Sentence BLEU, 4-gram, add-one smoothing for n >= 2, brevity penalty.
double bleu(std::span<const std::string> candidate, std::span<const std::string> reference);

struct MetricsReport {
  double ne = 0.0;
  std::optional<double> al_ms;
  std::optional<double> al_frames;
  std::map<int, int> revision_histogram;
  std::optional<double> bleu;
  std::size_t erased_total = 0;
  std::size_t final_length = 0;
  bool degenerate = false;

  int max_erasure() const { return revision_histogram.empty() ? 0 : revision_histogram.rbegin()->first; }
};

MetricsReport compute_metrics(const DecodeTrace& trace);

}  // namespace revdec
