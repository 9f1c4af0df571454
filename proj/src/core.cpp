#include "revdec/core.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>

namespace revdec {

Vocabulary::Vocabulary(std::vector<std::string> tokens, TokenId blank_id, TokenId bos_id)
    : tokens_(std::move(tokens)), blank_id_(blank_id), bos_id_(bos_id) {
  const auto n = static_cast<TokenId>(tokens_.size());
  if (blank_id_ < 0 || blank_id_ >= n || bos_id_ < 0 || bos_id_ >= n)
    throw std::invalid_argument("vocabulary: blank/bos id out of range");
  if (blank_id_ == bos_id_)
    throw std::invalid_argument("vocabulary: blank and bos must differ");
  std::set<std::string> seen;
  for (const auto& t : tokens_) {
    if (t.empty()) throw std::invalid_argument("vocabulary: empty token string");
    if (!seen.insert(t).second)
      throw std::invalid_argument("vocabulary: duplicate token '" + t + "'");
  }
}

Vocabulary Vocabulary::synthetic(int size) {
  if (size < 3) throw std::invalid_argument("synthetic vocabulary needs at least 3 tokens");
  std::vector<std::string> toks{"<b>", "<s>"};
  for (int i = 2; i < size; ++i) toks.push_back("t" + std::to_string(i));
  return Vocabulary(std::move(toks), 0, 1);
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || id >= size()) throw std::out_of_range("token id " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(const std::string& tok) const {
  auto it = std::find(tokens_.begin(), tokens_.end(), tok);
  if (it == tokens_.end()) return std::nullopt;
  return static_cast<TokenId>(it - tokens_.begin());
}

std::string Vocabulary::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (const auto& t : tokens_) {
    for (unsigned char c : t) feed(c);
    feed('\n');
  }
  for (char c : std::to_string(blank_id_) + "," + std::to_string(bos_id_)) feed(static_cast<unsigned char>(c));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> Vocabulary::render(std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId id : ids)
    if (id != bos_id_ && id != blank_id_) out.push_back(token(id));
  return out;
}

Hypothesis Hypothesis::seed(TokenId bos) { return Hypothesis{{bos}, 0.0, {0}}; }

TokenSeq Hypothesis::displayed() const {
  if (tokens.empty()) return {};
  return TokenSeq(tokens.begin() + 1, tokens.end());
}

std::vector<int> Hypothesis::displayed_frames() const {
  if (emit_frames.empty()) return {};
  return std::vector<int>(emit_frames.begin() + 1, emit_frames.end());
}

bool ranks_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.log_score != b.log_score) return a.log_score > b.log_score;
  return a.tokens < b.tokens;
}

const Hypothesis& better_path(const Hypothesis& a, const Hypothesis& b) {
  if (a.log_score != b.log_score) return a.log_score > b.log_score ? a : b;
  return b.emit_frames < a.emit_frames ? b : a;
}

Beam::Beam(int capacity) : capacity_(capacity) {
  if (capacity < 1) throw std::invalid_argument("beam capacity must be >= 1");
}

Beam::Beam(int capacity, std::vector<Hypothesis> entries) : Beam(capacity) {
  entries_ = top_unique(std::move(entries), static_cast<std::size_t>(capacity));
}

const Hypothesis& Beam::best() const {
  if (entries_.empty()) throw std::logic_error("best() on empty beam");
  return entries_.front();
}

std::vector<Hypothesis> top_unique(std::vector<Hypothesis> candidates, std::size_t capacity) {
  std::map<TokenSeq, Hypothesis> merged;
  for (auto& h : candidates) {
    auto [it, inserted] = merged.try_emplace(h.tokens, h);
    if (!inserted) it->second = better_path(it->second, h);
  }
  std::vector<Hypothesis> out;
  out.reserve(merged.size());
  for (auto& [_, h] : merged) out.push_back(std::move(h));
  std::sort(out.begin(), out.end(), ranks_before);
  if (out.size() > capacity) out.resize(capacity);
  return out;
}

void DecoderConfig::validate() const {
  if (beam_size < 1) throw std::invalid_argument("beam_size must be >= 1");
  if (chunk_size < 1) throw std::invalid_argument("chunk_size must be >= 1");
  if (max_symbols_per_frame < 1) throw std::invalid_argument("max_symbols_per_frame must be >= 1");
  if (revision_window && *revision_window < 0)
    throw std::invalid_argument("revision_window must be >= 0");
  if (word_reward && !(*word_reward >= 0.0)) throw std::invalid_argument("word_reward must be >= 0");
  if (!(frame_span_ms > 0.0)) throw std::invalid_argument("frame_span_ms must be > 0");
}

double effective_word_reward(const DecoderConfig& cfg, PrunePolicy prune) {
  if (cfg.word_reward) return *cfg.word_reward;
  return prune.mode == PruneMode::revision_window ? 0.0 : 1.0;
}

void DecodeTrace::validate() const {
  config.validate();
  if (commits.empty()) throw std::invalid_argument("trace has no commits");
  for (std::size_t i = 1; i < commits.size(); ++i)
    if (commits[i].frame_index <= commits[i - 1].frame_index)
      throw std::invalid_argument("commit frame indices not strictly increasing at commit " +
                                  std::to_string(i));
  if (commits.back().displayed != final.displayed())
    throw std::invalid_argument("last commit does not equal final hypothesis");
  if (source_frames < commits.back().frame_index)
    throw std::invalid_argument("source_frames smaller than last commit frame");
  if (final.tokens.size() != final.emit_frames.size())
    throw std::invalid_argument("final emit_frames length mismatch");
  if (!std::is_sorted(final.emit_frames.begin(), final.emit_frames.end()))
    throw std::invalid_argument("final emit_frames not non-decreasing");
  for (const auto& c : commits)
    for (TokenId t : c.displayed)
      if (t < 0 || t >= vocab.size() || t == vocab.blank_id() || t == vocab.bos_id())
        throw std::invalid_argument("commit at frame " + std::to_string(c.frame_index) +
                                    " holds an invalid token id");
}

std::size_t longest_common_prefix(std::span<const TokenId> a, std::span<const TokenId> b) {
  auto [ia, ib] = std::mismatch(a.begin(), a.end(), b.begin(), b.end());
  return static_cast<std::size_t>(ia - a.begin());
}

std::string to_string(CommitMode mode) { return mode == CommitMode::chunk ? "chunk" : "frame"; }

std::string to_string(PruneMode mode) {
  return mode == PruneMode::revision_window ? "revision_window" : "none";
}

CommitMode parse_commit_mode(const std::string& s) {
  if (s == "chunk") return CommitMode::chunk;
  if (s == "frame" || s == "every_frame") return CommitMode::every_frame;
  throw std::invalid_argument("unknown commit mode '" + s + "' (expected frame|chunk)");
}

}  // namespace revdec
