#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "revdec/io.hpp"

namespace revdec {

// Deterministic scenario for seed `seed` drawn from a mixed family:
// vocab 6..20, frames 8..64, instability 0..1, b=7, u=4. The reference is
// the output of an unpruned b=16 decode.
Scenario mixed_scenario(std::uint64_t seed);

// Each axis left empty keeps the scenario's own value. rw entries of nullopt
// mean no revision window; word_reward nullopt means the prune-dependent
// default.
struct SweepGrid {
  std::vector<int> beam;
  std::vector<int> chunk;
  std::vector<std::optional<int>> rw;
  std::vector<CommitMode> commit;
  std::vector<std::optional<double>> word_reward;
};

struct SweepManifest {
  std::vector<Scenario> scenarios;
  SweepGrid grid;
};

SweepManifest parse_manifest(const Json& j, const std::filesystem::path& base_dir);
SweepManifest read_manifest(const std::filesystem::path& path);

struct SweepRow {
  std::string id;
  int beam = 0;
  int chunk = 0;
  std::optional<int> rw;
  CommitMode commit = CommitMode::chunk;
  double word_reward = 0.0;
  std::optional<MetricsReport> metrics;
  std::string error;
};

// Cells in manifest order, grid axes nested beam > chunk > rw > commit >
// word_reward. Cells run on `threads` workers; output order does not depend on
// completion order.
std::vector<SweepRow> run_sweep(const SweepManifest& m, unsigned threads);

std::string format_sweep_csv(const std::vector<SweepRow>& rows);
Json sweep_summary(const std::vector<SweepRow>& rows);

}  // namespace revdec
