#include "revdec/sweep.hpp"

#include <atomic>
#include <charconv>
#include <map>
#include <set>
#include <thread>

namespace revdec {

Scenario mixed_scenario(std::uint64_t seed) {
  Scenario s;
  char id[32];
  std::snprintf(id, sizeof id, "mixed-%03llu", static_cast<unsigned long long>(seed));
  s.id = id;
  SyntheticSourceSpec spec;
  spec.seed = 1000 + seed;
  spec.vocab_size = 6 + static_cast<int>(seed % 15);
  spec.frame_count = 8 + static_cast<int>((seed * 13) % 57);
  spec.context_order = 2;
  spec.concentration = 3.0 + 0.5 * static_cast<double>(seed % 5);
  spec.instability = static_cast<double>(seed % 11) / 10.0;
  spec.blank_bias = 0.10 + 0.05 * static_cast<double>(seed % 4);
  s.source = spec;
  s.config.beam_size = 7;
  s.config.chunk_size = 4;
  s.config.max_symbols_per_frame = 5;
  const SyntheticSource src(spec);
  s.reference = reference_decode(s, src, 16);
  return s;
}

namespace {

std::vector<int> int_axis(const Json& grid, const char* key) {
  if (!grid.contains(key)) return {};
  return grid.at(key).get<std::vector<int>>();
}

struct Cell {
  std::size_t scenario = 0;
  Scenario configured;
};

std::vector<Cell> expand(const SweepManifest& m) {
  std::vector<Cell> cells;
  const auto& g = m.grid;
  for (std::size_t i = 0; i < m.scenarios.size(); ++i) {
    const Scenario& base = m.scenarios[i];
    auto or_own = [](const auto& axis, auto own) {
      using T = std::decay_t<decltype(own)>;
      return axis.empty() ? std::vector<T>{own} : std::vector<T>(axis.begin(), axis.end());
    };
    for (int b : or_own(g.beam, base.config.beam_size))
      for (int u : or_own(g.chunk, base.config.chunk_size))
        for (auto rw : or_own(g.rw, base.config.revision_window))
          for (auto commit : or_own(g.commit, base.commit.mode))
            for (auto wr : or_own(g.word_reward, base.config.word_reward)) {
              Scenario s = base;
              s.config.beam_size = b;
              s.config.chunk_size = u;
              s.set_revision_window(rw);
              s.commit.mode = commit;
              s.config.word_reward = wr;
              cells.push_back({i, std::move(s)});
            }
  }
  return cells;
}

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string rw_label(std::optional<int> rw) { return rw ? std::to_string(*rw) : "none"; }

}  // namespace

SweepManifest parse_manifest(const Json& j, const std::filesystem::path& base_dir) {
  SweepManifest m;
  try {
    if (j.contains("scenarios")) {
      for (const auto& entry : j.at("scenarios")) {
        if (entry.is_string()) {
          const std::filesystem::path p = entry.get<std::string>();
          m.scenarios.push_back(read_scenario(p.is_absolute() ? p : base_dir / p));
        } else {
          m.scenarios.push_back(scenario_from_json(entry, base_dir));
        }
      }
    }
    if (j.contains("generate")) {
      const Json& gen = j.at("generate");
      const auto family = gen.value("family", std::string("mixed"));
      if (family != "mixed") throw InputError("manifest: unknown scenario family '" + family + "'");
      const auto begin = gen.value("seed_begin", std::uint64_t{0});
      const auto count = gen.at("count").get<std::uint64_t>();
      for (std::uint64_t s = begin; s < begin + count; ++s) m.scenarios.push_back(mixed_scenario(s));
    }
    const Json grid = j.value("grid", Json::object());
    m.grid.beam = int_axis(grid, "beam");
    m.grid.chunk = int_axis(grid, "chunk");
    if (grid.contains("rw"))
      for (const auto& v : grid.at("rw")) {
        if (v.is_null() || (v.is_string() && v.get<std::string>() == "none"))
          m.grid.rw.emplace_back(std::nullopt);
        else
          m.grid.rw.emplace_back(v.get<int>());
      }
    if (grid.contains("commit"))
      for (const auto& v : grid.at("commit")) m.grid.commit.push_back(parse_commit_mode(v.get<std::string>()));
    if (grid.contains("word_reward"))
      for (const auto& v : grid.at("word_reward"))
        m.grid.word_reward.push_back(v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()));
  } catch (const InputError&) {
    throw;
  } catch (const std::exception& e) {
    throw InputError(std::string("manifest: ") + e.what());
  }
  std::set<std::string> ids;
  for (const auto& s : m.scenarios)
    if (!ids.insert(s.id).second) throw InputError("manifest: duplicate scenario id '" + s.id + "'");
  return m;
}

SweepManifest read_manifest(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const InputError&) {
    throw;
  } catch (const std::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return parse_manifest(j, path.parent_path());
}

std::vector<SweepRow> run_sweep(const SweepManifest& m, unsigned threads) {
  std::vector<std::unique_ptr<ScoringSource>> sources(m.scenarios.size());
  std::vector<std::string> source_errors(m.scenarios.size());
  for (std::size_t i = 0; i < m.scenarios.size(); ++i) {
    try {
      sources[i] = make_source(m.scenarios[i]);
    } catch (const std::exception& e) {
      source_errors[i] = e.what();
    }
  }

  const std::vector<Cell> cells = expand(m);
  std::vector<SweepRow> rows(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& cell = cells[i];
      const Scenario& s = cell.configured;
      SweepRow& row = rows[i];
      row.id = s.id;
      row.beam = s.config.beam_size;
      row.chunk = s.config.chunk_size;
      row.rw = s.config.revision_window;
      row.commit = s.commit.mode;
      row.word_reward = effective_word_reward(s.config, s.prune);
      if (!source_errors[cell.scenario].empty()) {
        row.error = source_errors[cell.scenario];
        continue;
      }
      try {
        row.metrics = compute_metrics(run_scenario(s, *sources[cell.scenario]));
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };

  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(cells.size())));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }
  return rows;
}

std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "id,b,u,rw,commit_mode,ne,al_ms,harness_bleu,max_erasure,error\n";
  for (const auto& r : rows) {
    out += csv_escape(r.id) + "," + std::to_string(r.beam) + "," + std::to_string(r.chunk) + "," +
           rw_label(r.rw) + "," + to_string(r.commit) + ",";
    if (r.metrics) {
      const auto& m = *r.metrics;
      out += num(m.ne) + "," + (m.al_ms ? num(*m.al_ms) : "") + "," + (m.bleu ? num(*m.bleu) : "") + "," +
             std::to_string(m.max_erasure()) + ",";
    } else {
      out += ",,,,";
    }
    out += csv_escape(r.error) + "\n";
  }
  return out;
}

Json sweep_summary(const std::vector<SweepRow>& rows) {
  struct Group {
    Json key;
    std::size_t count = 0, failed = 0, with_al = 0, with_bleu = 0;
    double ne = 0, al_ms = 0, al_frames = 0, bleu = 0;
    int max_erasure = 0;
  };
  std::vector<Group> groups;
  std::map<std::string, std::size_t> index;
  std::size_t failed = 0;
  for (const auto& r : rows) {
    Json key;
    key["b"] = r.beam;
    key["u"] = r.chunk;
    key["rw"] = r.rw ? Json(*r.rw) : Json(nullptr);
    key["commit_mode"] = to_string(r.commit);
    key["word_reward"] = r.word_reward;
    auto [it, inserted] = index.try_emplace(key.dump(), groups.size());
    if (inserted) groups.push_back({key});
    Group& g = groups[it->second];
    ++g.count;
    if (!r.metrics) {
      ++g.failed;
      ++failed;
      continue;
    }
    const auto& m = *r.metrics;
    g.ne += m.ne;
    if (m.al_ms) {
      g.al_ms += *m.al_ms;
      g.al_frames += *m.al_frames;
      ++g.with_al;
    }
    if (m.bleu) {
      g.bleu += *m.bleu;
      ++g.with_bleu;
    }
    g.max_erasure = std::max(g.max_erasure, m.max_erasure());
  }
  auto mean = [](double sum, std::size_t n) { return n ? Json(sum / static_cast<double>(n)) : Json(nullptr); };
  Json out;
  out["cells"] = rows.size();
  out["failed"] = failed;
  Json arr = Json::array();
  for (const auto& g : groups) {
    Json j = g.key;
    j["count"] = g.count;
    j["failed"] = g.failed;
    j["mean_ne"] = mean(g.ne, g.count - g.failed);
    j["mean_al_ms"] = mean(g.al_ms, g.with_al);
    j["mean_al_frames"] = mean(g.al_frames, g.with_al);
    j["mean_harness_bleu"] = mean(g.bleu, g.with_bleu);
    j["max_erasure"] = g.max_erasure;
    arr.push_back(std::move(j));
  }
  out["groups"] = std::move(arr);
  return out;
}

}  // namespace revdec
