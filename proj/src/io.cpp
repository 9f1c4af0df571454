#include "revdec/io.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include "revdec/decoder.hpp"

namespace revdec {

namespace {

constexpr const char* kTraceFormat = "revdec-trace-v1";

Json config_to_json(const DecoderConfig& c) {
  Json j;
  j["beam_size"] = c.beam_size;
  j["chunk_size"] = c.chunk_size;
  j["revision_window"] = c.revision_window ? Json(*c.revision_window) : Json(nullptr);
  j["word_reward"] = c.word_reward ? Json(*c.word_reward) : Json(nullptr);
  j["max_symbols_per_frame"] = c.max_symbols_per_frame;
  j["frame_span_ms"] = c.frame_span_ms;
  return j;
}

DecoderConfig config_from_json(const Json& j) {
  DecoderConfig c;
  c.beam_size = j.value("beam_size", c.beam_size);
  c.chunk_size = j.value("chunk_size", c.chunk_size);
  if (j.contains("revision_window") && !j.at("revision_window").is_null())
    c.revision_window = j.at("revision_window").get<int>();
  if (j.contains("word_reward") && !j.at("word_reward").is_null())
    c.word_reward = j.at("word_reward").get<double>();
  c.max_symbols_per_frame = j.value("max_symbols_per_frame", c.max_symbols_per_frame);
  c.frame_span_ms = j.value("frame_span_ms", c.frame_span_ms);
  c.validate();
  return c;
}

std::optional<std::vector<std::string>> optional_strings(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::vector<std::string>>();
}

// Runs `fn`, rethrowing JSON and argument errors as InputError with context.
template <typename Fn>
auto guarded(const std::string& what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const InputError&) {
    throw;
  } catch (const std::exception& e) {
    throw InputError(what + ": " + e.what());
  }
}

}  // namespace

void Scenario::set_revision_window(std::optional<int> rw) {
  config.revision_window = rw;
  prune.mode = rw ? PruneMode::revision_window : PruneMode::none;
}

Json scenario_to_json(const Scenario& s) {
  Json j;
  j["id"] = s.id;
  Json src;
  if (const auto* syn = std::get_if<SyntheticSourceSpec>(&s.source)) {
    src["type"] = "synthetic";
    src["seed"] = syn->seed;
    src["vocab_size"] = syn->vocab_size;
    src["frame_count"] = syn->frame_count;
    src["context_order"] = syn->context_order;
    src["concentration"] = syn->concentration;
    src["instability"] = syn->instability;
    src["blank_bias"] = syn->blank_bias;
  } else {
    src["type"] = "lattice";
    src["path"] = std::get<LatticeRef>(s.source).path.generic_string();
  }
  j["source"] = std::move(src);
  j["config"] = config_to_json(s.config);
  j["commit"] = to_string(s.commit.mode);
  j["prune"] = to_string(s.prune.mode);
  j["reference"] = s.reference ? Json(*s.reference) : Json(nullptr);
  return j;
}

Scenario scenario_from_json(const Json& j, const std::filesystem::path& base_dir) {
  return guarded("scenario", [&] {
    Scenario s;
    s.id = j.at("id").get<std::string>();
    s.base_dir = base_dir;
    const Json& src = j.at("source");
    const auto type = src.at("type").get<std::string>();
    if (type == "synthetic") {
      SyntheticSourceSpec spec;
      spec.seed = src.at("seed").get<std::uint64_t>();
      spec.vocab_size = src.at("vocab_size").get<int>();
      spec.frame_count = src.at("frame_count").get<int>();
      spec.context_order = src.value("context_order", spec.context_order);
      spec.concentration = src.value("concentration", spec.concentration);
      spec.instability = src.value("instability", spec.instability);
      spec.blank_bias = src.value("blank_bias", spec.blank_bias);
      spec.validate();
      s.source = spec;
    } else if (type == "lattice") {
      s.source = LatticeRef{src.at("path").get<std::string>()};
    } else {
      throw InputError("scenario: unknown source type '" + type + "'");
    }
    s.config = config_from_json(j.value("config", Json::object()));
    s.commit.mode = parse_commit_mode(j.value("commit", std::string("chunk")));
    const auto prune = j.value("prune", std::string(s.config.revision_window ? "revision_window" : "none"));
    if (prune == "revision_window") {
      if (!s.config.revision_window) throw InputError("scenario: revision_window prune without a window");
      s.prune.mode = PruneMode::revision_window;
    } else if (prune == "none") {
      s.prune.mode = PruneMode::none;
    } else {
      throw InputError("scenario: unknown prune mode '" + prune + "'");
    }
    s.reference = optional_strings(j, "reference");
    return s;
  });
}

Scenario read_scenario(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return scenario_from_json(j, path.parent_path());
}

void write_scenario(const Scenario& s, const std::filesystem::path& path) {
  write_file(path, scenario_to_json(s).dump(2) + "\n");
}

std::unique_ptr<ScoringSource> make_source(const Scenario& s) {
  if (const auto* syn = std::get_if<SyntheticSourceSpec>(&s.source)) return std::make_unique<SyntheticSource>(*syn);
  const auto& rel = std::get<LatticeRef>(s.source).path;
  const auto path = rel.is_absolute() ? rel : s.base_dir / rel;
  return guarded("lattice " + path.string(), [&]() -> std::unique_ptr<ScoringSource> { return load_lattice(path); });
}

DecodeTrace run_scenario(const Scenario& s, const ScoringSource& src) {
  DecodeTrace t = decode_stream(src, s.config, s.commit, s.prune);
  t.reference = s.reference;
  return t;
}

std::vector<std::string> reference_decode(const Scenario& s, const ScoringSource& src, int beam_size) {
  DecoderConfig cfg = s.config;
  cfg.beam_size = beam_size;
  cfg.revision_window.reset();
  const DecodeTrace t = decode_stream(src, cfg, s.commit, PrunePolicy{PruneMode::none});
  return src.vocab().render(t.final.displayed());
}

std::string format_trace(const DecodeTrace& t) {
  Json header;
  header["format"] = kTraceFormat;
  header["T"] = t.source_frames;
  header["vocab_hash"] = t.vocab.hash();
  header["vocab"] = t.vocab.tokens();
  header["blank_id"] = t.vocab.blank_id();
  header["bos_id"] = t.vocab.bos_id();
  header["config"] = config_to_json(t.config);
  header["commit"] = to_string(t.commit.mode);
  header["prune"] = to_string(t.prune.mode);
  header["reference"] = t.reference ? Json(*t.reference) : Json(nullptr);

  std::string out = header.dump() + "\n";
  for (const auto& c : t.commits) {
    Json line;
    line["frame"] = c.frame_index;
    line["tokens"] = c.displayed;
    out += line.dump() + "\n";
  }
  Json fin;
  fin["final"] = t.final.displayed();
  fin["emit_frames"] = t.final.displayed_frames();
  fin["log_score"] = t.final.log_score;
  out += fin.dump() + "\n";
  return out;
}

DecodeTrace parse_trace(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<Json> lines;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      lines.push_back(Json::parse(line));
    } catch (const std::exception& e) {
      throw InputError("trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (lines.size() < 2) throw InputError("trace: expected header and final lines");

  return guarded("trace", [&] {
    const Json& h = lines.front();
    if (h.value("format", std::string()) != kTraceFormat) throw InputError("trace: missing or unknown format tag");
    DecodeTrace t;
    t.vocab = Vocabulary(h.at("vocab").get<std::vector<std::string>>(), h.at("blank_id").get<TokenId>(),
                         h.at("bos_id").get<TokenId>());
    if (h.at("vocab_hash").get<std::string>() != t.vocab.hash()) throw InputError("trace: vocab_hash mismatch");
    t.source_frames = h.at("T").get<int>();
    t.config = config_from_json(h.at("config"));
    t.commit.mode = parse_commit_mode(h.at("commit").get<std::string>());
    const auto prune = h.at("prune").get<std::string>();
    t.prune.mode = prune == "revision_window" ? PruneMode::revision_window : PruneMode::none;
    t.reference = optional_strings(h, "reference");

    for (std::size_t i = 1; i + 1 < lines.size(); ++i) {
      const Json& c = lines[i];
      if (!c.contains("frame")) throw InputError("trace: line " + std::to_string(i + 1) + " is not a commit");
      t.commits.push_back({c.at("frame").get<int>(), c.at("tokens").get<TokenSeq>()});
    }
    const Json& fin = lines.back();
    if (!fin.contains("final")) throw InputError("trace: last line must carry \"final\"");
    t.final = Hypothesis::seed(t.vocab.bos_id());
    for (TokenId id : fin.at("final").get<TokenSeq>()) t.final.tokens.push_back(id);
    for (int f : fin.at("emit_frames").get<std::vector<int>>()) t.final.emit_frames.push_back(f);
    const Json& score = fin.at("log_score");
    t.final.log_score = score.is_null() ? -std::numeric_limits<double>::infinity() : score.get<double>();
    t.validate();
    return t;
  });
}

DecodeTrace read_trace(const std::filesystem::path& path) { return parse_trace(read_file(path)); }

void write_trace(const DecodeTrace& t, const std::filesystem::path& path) { write_file(path, format_trace(t)); }

Json metrics_to_json(const MetricsReport& r) {
  Json j;
  j["ne"] = r.ne;  // +inf serializes as null
  j["al_ms"] = r.al_ms ? Json(*r.al_ms) : Json(nullptr);
  j["al_frames"] = r.al_frames ? Json(*r.al_frames) : Json(nullptr);
  Json hist = Json::object();
  for (const auto& [k, v] : r.revision_histogram) hist[std::to_string(k)] = v;
  j["revision_histogram"] = std::move(hist);
  j["bleu"] = r.bleu ? Json(*r.bleu) : Json(nullptr);
  j["erased_total"] = r.erased_total;
  j["final_length"] = r.final_length;
  return j;
}

std::string format_metrics(const MetricsReport& r) { return metrics_to_json(r).dump() + "\n"; }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << content;
}

}  // namespace revdec
