#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace revdec {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

// Indexed token inventory. Index 0..N-1 are dense; blank and bos are regular
// entries that the decoder treats specially.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> tokens, TokenId blank_id, TokenId bos_id);

  // "<b>", "<s>", "t2", ..., "t{N-1}" with blank=0 and bos=1.
  static Vocabulary synthetic(int size);

  int size() const { return static_cast<int>(tokens_.size()); }
  TokenId blank_id() const { return blank_id_; }
  TokenId bos_id() const { return bos_id_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(const std::string& tok) const;

  // FNV-1a over newline-joined token strings and the two special ids.
  std::string hash() const;

  // Maps ids to strings, dropping bos and blank.
  std::vector<std::string> render(std::span<const TokenId> ids) const;

  bool operator==(const Vocabulary&) const = default;

 private:
  std::vector<std::string> tokens_;
  TokenId blank_id_ = 0;
  TokenId bos_id_ = 1;
};

// A partial translation. tokens[0] is bos; emit_frames[0] is 0 for bos.
struct Hypothesis {
  TokenSeq tokens;
  double log_score = 0.0;
  std::vector<int> emit_frames;

  static Hypothesis seed(TokenId bos);

  // tokens without the leading bos.
  TokenSeq displayed() const;
  std::vector<int> displayed_frames() const;

  bool operator==(const Hypothesis&) const = default;
};

// Strict ranking: higher score first, then lexicographically smaller token
// sequence. Used by every top-b selection in the project.
bool ranks_before(const Hypothesis& a, const Hypothesis& b);

// Keeps the better of two hypotheses with identical token sequences: higher
// score, then earlier emission frames.
const Hypothesis& better_path(const Hypothesis& a, const Hypothesis& b);

class Beam {
 public:
  explicit Beam(int capacity);
  Beam(int capacity, std::vector<Hypothesis> entries);

  int capacity() const { return capacity_; }
  const std::vector<Hypothesis>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  const Hypothesis& best() const;

 private:
  int capacity_;
  std::vector<Hypothesis> entries_;
};

// Merges duplicate token sequences, sorts by ranks_before, truncates to
// `capacity`.
std::vector<Hypothesis> top_unique(std::vector<Hypothesis> candidates, std::size_t capacity);

struct CommitEvent {
  int frame_index = 0;
  TokenSeq displayed;

  bool operator==(const CommitEvent&) const = default;
};

struct DecoderConfig {
  int beam_size = 7;
  int chunk_size = 4;
  std::optional<int> revision_window;
  // Unset means: 1.0 without a revision window, 0.0 with one.
  std::optional<double> word_reward;
  int max_symbols_per_frame = 5;
  double frame_span_ms = 40.0;

  void validate() const;
  bool operator==(const DecoderConfig&) const = default;
};

enum class CommitMode { every_frame, chunk };
enum class PruneMode { none, revision_window };

struct CommitPolicy {
  CommitMode mode = CommitMode::chunk;
  bool operator==(const CommitPolicy&) const = default;
};

struct PrunePolicy {
  PruneMode mode = PruneMode::none;
  bool operator==(const PrunePolicy&) const = default;
};

double effective_word_reward(const DecoderConfig& cfg, PrunePolicy prune);

struct DecodeTrace {
  DecoderConfig config;
  CommitPolicy commit;
  PrunePolicy prune;
  Vocabulary vocab;
  std::vector<CommitEvent> commits;
  Hypothesis final;
  int source_frames = 0;
  std::optional<std::vector<std::string>> reference;

  // Throws std::invalid_argument naming the violated invariant.
  void validate() const;
  bool operator==(const DecodeTrace&) const = default;
};

std::size_t longest_common_prefix(std::span<const TokenId> a, std::span<const TokenId> b);

std::string to_string(CommitMode mode);
std::string to_string(PruneMode mode);
CommitMode parse_commit_mode(const std::string& s);

}  // namespace revdec
