#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "revdec/core.hpp"
#include "revdec/metrics.hpp"
#include "revdec/scoring.hpp"

namespace revdec {

using Json = nlohmann::ordered_json;

// Malformed or inconsistent input file. Maps to exit code 2 in the CLI.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LatticeRef {
  std::filesystem::path path;
  bool operator==(const LatticeRef&) const = default;
};

struct Scenario {
  std::string id;
  std::variant<SyntheticSourceSpec, LatticeRef> source;
  DecoderConfig config;
  CommitPolicy commit;
  PrunePolicy prune;
  std::optional<std::vector<std::string>> reference;
  // Directory relative lattice paths resolve against; not serialized.
  std::filesystem::path base_dir;

  // Sets or clears the revision window together with the prune mode.
  void set_revision_window(std::optional<int> rw);
};

Json scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const Json& j, const std::filesystem::path& base_dir);
Scenario read_scenario(const std::filesystem::path& path);
void write_scenario(const Scenario& s, const std::filesystem::path& path);

std::unique_ptr<ScoringSource> make_source(const Scenario& s);
DecodeTrace run_scenario(const Scenario& s, const ScoringSource& src);

// Best output of an unpruned decode with the given beam, rendered as strings.
std::vector<std::string> reference_decode(const Scenario& s, const ScoringSource& src, int beam_size);

// Trace JSONL: header line, one line per commit, final line.
std::string format_trace(const DecodeTrace& t);
DecodeTrace parse_trace(const std::string& text);
DecodeTrace read_trace(const std::filesystem::path& path);
void write_trace(const DecodeTrace& t, const std::filesystem::path& path);

Json metrics_to_json(const MetricsReport& r);
std::string format_metrics(const MetricsReport& r);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace revdec
