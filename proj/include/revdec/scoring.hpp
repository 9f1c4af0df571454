#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "revdec/core.hpp"

namespace revdec {

// Natural-log probabilities over the full vocabulary, blank included.
using LogProbRow = std::vector<double>;

// p(next token | frames up to `frame`, last k emitted tokens).
// Implementations are immutable after construction and safe to query from
// several threads at once.
class ScoringSource {
 public:
  virtual ~ScoringSource() = default;

  virtual const Vocabulary& vocab() const = 0;
  virtual int frame_count() const = 0;
  virtual int context_order() const = 0;

  // frame is 1-based. Throws std::out_of_range for a bad frame and
  // std::invalid_argument if the context holds a blank.
  LogProbRow score_next(int frame, std::span<const TokenId> context) const;

 protected:
  // Receives the context already truncated to the last k tokens.
  virtual LogProbRow row(int frame, std::span<const TokenId> context) const = 0;
};

struct SyntheticSourceSpec {
  std::uint64_t seed = 0;
  int vocab_size = 8;
  int frame_count = 32;
  int context_order = 2;
  // Exponent on the exponential variates; 0 yields a uniform source.
  double concentration = 2.0;
  double instability = 0.3;
  double blank_bias = 0.3;

  void validate() const;
  bool operator==(const SyntheticSourceSpec&) const = default;
};

// Counter-based generator: every row is a pure function of
// (seed, frame, swap salt, hash of the truncated context).
class SyntheticSource final : public ScoringSource {
 public:
  explicit SyntheticSource(SyntheticSourceSpec spec);

  const Vocabulary& vocab() const override { return vocab_; }
  int frame_count() const override { return spec_.frame_count; }
  int context_order() const override { return spec_.context_order; }
  const SyntheticSourceSpec& spec() const { return spec_; }

  // Frames at which a swap event fires, ascending.
  std::vector<int> swap_frames() const;

 protected:
  LogProbRow row(int frame, std::span<const TokenId> context) const override;

 private:
  SyntheticSourceSpec spec_;
  Vocabulary vocab_;
  std::vector<std::uint64_t> salt_;  // cumulative salt, indexed by frame (1..T)
};

namespace prng {
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t mix3(std::uint64_t a, std::uint64_t b, std::uint64_t c);
// Uniform on the open interval (0, 1).
double unit_open(std::uint64_t bits);
std::uint64_t context_hash(std::span<const TokenId> context);
}  // namespace prng

class LatticeParseError : public std::runtime_error {
 public:
  LatticeParseError(int line, const std::string& what);
  int line() const { return line_; }

 private:
  int line_;
};

// Probability table for (frame, context) pairs with a fallback row. Keeps the
// decimal probabilities as read so that saving reproduces the input.
class LatticeSource final : public ScoringSource {
 public:
  using Key = std::pair<int, TokenSeq>;

  LatticeSource(Vocabulary vocab, int frame_count, int context_order, std::vector<double> default_probs,
                std::map<Key, std::vector<double>> rows);

  const Vocabulary& vocab() const override { return vocab_; }
  int frame_count() const override { return frame_count_; }
  int context_order() const override { return context_order_; }

  const std::vector<double>& default_probs() const { return default_probs_; }
  const std::map<Key, std::vector<double>>& probs() const { return probs_; }

 protected:
  LogProbRow row(int frame, std::span<const TokenId> context) const override;

 private:
  Vocabulary vocab_;
  int frame_count_;
  int context_order_;
  std::vector<double> default_probs_;
  LogProbRow default_row_;
  std::map<Key, std::vector<double>> probs_;
  std::map<Key, LogProbRow> rows_;
};

std::unique_ptr<LatticeSource> parse_lattice(const std::string& text);
std::unique_ptr<LatticeSource> load_lattice(const std::filesystem::path& path);
std::string format_lattice(const LatticeSource& src);
void save_lattice(const LatticeSource& src, const std::filesystem::path& path);

// Dumps every (frame, context) row reachable from bos into lattice form.
// Only practical for small vocabularies and context orders.
LatticeSource tabulate(const ScoringSource& src);

}  // namespace revdec
