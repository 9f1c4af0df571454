// revdec: generate scenarios, decode them, recompute metrics, run sweeps.
//
// Exit codes: 0 success, 1 some sweep cells failed, 2 input or usage error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "revdec/decoder.hpp"
#include "revdec/io.hpp"
#include "revdec/metrics.hpp"
#include "revdec/sweep.hpp"

namespace fs = std::filesystem;
using namespace revdec;

namespace {

constexpr int kExitPartial = 1;
constexpr int kExitInput = 2;

std::optional<int> parse_rw(const std::string& text) {
  if (text == "none") return std::nullopt;
  std::size_t used = 0;
  int v = -1;
  try {
    v = std::stoi(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || v < 0) throw InputError("--rw expects a non-negative integer or 'none'");
  return v;
}

struct ConfigFlags {
  std::optional<int> beam, chunk, max_symbols;
  std::optional<std::string> rw, commit;
  std::optional<double> word_reward, frame_span;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--beam", beam, "beam size b")->check(CLI::PositiveNumber);
    cmd->add_option("--chunk", chunk, "frames per chunk u")->check(CLI::PositiveNumber);
    cmd->add_option("--rw", rw, "revision window RW (integer or 'none')");
    cmd->add_option("--word-reward", word_reward, "per-token reward (default 1 without RW, 0 with RW)");
    cmd->add_option("--commit", commit, "commit policy: frame | chunk");
    cmd->add_option("--max-symbols", max_symbols, "max non-blank emissions per frame")->check(CLI::PositiveNumber);
    cmd->add_option("--frame-span", frame_span, "milliseconds per frame");
  }

  void apply(Scenario& s) const {
    if (beam) s.config.beam_size = *beam;
    if (chunk) s.config.chunk_size = *chunk;
    if (max_symbols) s.config.max_symbols_per_frame = *max_symbols;
    if (frame_span) s.config.frame_span_ms = *frame_span;
    if (word_reward) s.config.word_reward = *word_reward;
    if (rw) s.set_revision_window(parse_rw(*rw));
    if (commit) s.commit.mode = parse_commit_mode(*commit);
    s.config.validate();
  }
};

struct GenFlags {
  SyntheticSourceSpec spec;
  std::optional<std::string> lattice;
  std::string id;
  std::string out;
  int reference_beam = 16;
  ConfigFlags config;
};

int cmd_gen(const GenFlags& f) {
  Scenario s;
  if (f.lattice) {
    // Stored relative to the scenario file's directory.
    const fs::path dir = fs::absolute(fs::path(f.out)).parent_path();
    s.source = LatticeRef{fs::absolute(*f.lattice).lexically_relative(dir)};
    s.base_dir = dir;
  } else {
    f.spec.validate();
    s.source = f.spec;
  }
  s.id = !f.id.empty() ? f.id : f.lattice ? fs::path(*f.lattice).stem().string() : "seed" + std::to_string(f.spec.seed);
  f.config.apply(s);
  if (f.reference_beam > 0) {
    const auto src = make_source(s);
    s.reference = reference_decode(s, *src, f.reference_beam);
  }
  write_scenario(s, f.out);
  return 0;
}

int cmd_decode(const std::string& scenario_path, const ConfigFlags& flags, std::string trace_out) {
  Scenario s = read_scenario(scenario_path);
  flags.apply(s);
  const auto src = make_source(s);
  const DecodeTrace trace = run_scenario(s, *src);
  if (trace_out.empty()) {
    fs::path p(scenario_path);
    trace_out = (p.parent_path() / p.stem()).string() + ".trace.jsonl";
  }
  write_trace(trace, trace_out);
  const MetricsReport rep = compute_metrics(trace);
  if (rep.degenerate) std::cerr << "warning: tokens were erased but the final output is empty (ne = inf)\n";
  std::cout << format_metrics(rep);
  return 0;
}

int cmd_metrics(const std::string& trace_path) {
  const DecodeTrace trace = read_trace(trace_path);
  const MetricsReport rep = compute_metrics(trace);
  if (rep.degenerate) std::cerr << "warning: tokens were erased but the final output is empty (ne = inf)\n";
  std::cout << format_metrics(rep);
  return 0;
}

int cmd_sweep(const std::string& manifest_path, const std::string& csv_out, const std::string& summary_out,
              unsigned threads) {
  const SweepManifest m = read_manifest(manifest_path);
  const auto rows = run_sweep(m, threads);
  const std::string csv = format_sweep_csv(rows);
  if (csv_out.empty() || csv_out == "-")
    std::cout << csv;
  else
    write_file(csv_out, csv);
  const Json summary = sweep_summary(rows);
  if (!summary_out.empty()) write_file(summary_out, summary.dump(2) + "\n");
  bool failed = false;
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      std::cerr << "cell " << r.id << " failed: " << r.error << "\n";
      failed = true;
    }
  }
  return failed ? kExitPartial : 0;
}

int cmd_export_lattice(const std::string& scenario_path, const std::string& out) {
  const Scenario s = read_scenario(scenario_path);
  const auto src = make_source(s);
  save_lattice(tabulate(*src), out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Revision-controllable streaming beam-search decoder"};
  app.require_subcommand(1);

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen", "write a scenario file");
  gen_cmd->add_option("--seed", gen.spec.seed, "synthetic source seed");
  gen_cmd->add_option("--vocab", gen.spec.vocab_size, "vocabulary size including blank and bos");
  gen_cmd->add_option("--frames", gen.spec.frame_count, "number of source frames T");
  gen_cmd->add_option("--context-order", gen.spec.context_order, "tokens of target context k");
  gen_cmd->add_option("--concentration", gen.spec.concentration, "peakiness of generated rows (0 = uniform)");
  gen_cmd->add_option("--instability", gen.spec.instability, "per-frame swap probability in [0,1]");
  gen_cmd->add_option("--blank-bias", gen.spec.blank_bias, "extra mass on blank in [0,1]");
  gen_cmd->add_option("--from-lattice", gen.lattice, "use a lattice file instead of a synthetic source");
  gen_cmd->add_option("--id", gen.id, "scenario id");
  gen_cmd->add_option("--reference-beam", gen.reference_beam,
                      "beam for the stored pseudo-reference (0 = no reference)");
  gen_cmd->add_option("-o,--output", gen.out, "scenario file to write")->required();
  gen.config.add_to(gen_cmd);

  std::string decode_scenario, decode_out;
  ConfigFlags decode_flags;
  auto* decode_cmd = app.add_subcommand("decode", "decode a scenario; trace to file, metrics to stdout");
  decode_cmd->add_option("scenario", decode_scenario, "scenario JSON")->required();
  decode_cmd->add_option("-o,--trace", decode_out, "trace JSONL path (default <scenario>.trace.jsonl)");
  decode_flags.add_to(decode_cmd);

  std::string metrics_trace;
  auto* metrics_cmd = app.add_subcommand("metrics", "recompute metrics from a trace");
  metrics_cmd->add_option("trace", metrics_trace, "trace JSONL")->required();

  std::string sweep_manifest, sweep_csv, sweep_summary_path;
  unsigned sweep_threads = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep_cmd = app.add_subcommand("sweep", "decode a scenario x config grid");
  sweep_cmd->add_option("manifest", sweep_manifest, "manifest JSON")->required();
  sweep_cmd->add_option("-o,--csv", sweep_csv, "CSV output (default stdout)");
  sweep_cmd->add_option("--summary", sweep_summary_path, "JSON summary output");
  sweep_cmd->add_option("--threads", sweep_threads, "worker threads")->check(CLI::PositiveNumber);

  std::string export_scenario, export_out;
  auto* export_cmd = app.add_subcommand("export-lattice", "tabulate a scenario's source as a lattice file");
  export_cmd->add_option("scenario", export_scenario, "scenario JSON")->required();
  export_cmd->add_option("-o,--output", export_out, "lattice file to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen);
    if (*decode_cmd) return cmd_decode(decode_scenario, decode_flags, decode_out);
    if (*metrics_cmd) return cmd_metrics(metrics_trace);
    if (*sweep_cmd) return cmd_sweep(sweep_manifest, sweep_csv, sweep_summary_path, sweep_threads);
    if (*export_cmd) return cmd_export_lattice(export_scenario, export_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
