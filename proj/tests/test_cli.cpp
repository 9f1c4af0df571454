#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "revdec/io.hpp"

using namespace revdec;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

fs::path workdir() {
  fs::path p = fs::path(REVDEC_TEST_TMP) / "cli";
  fs::create_directories(p);
  return p;
}

Run cli(const std::string& args) {
  const fs::path dir = workdir();
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + REVDEC_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(out), read_file(err)};
}

std::string at(const std::string& name) { return "\"" + (workdir() / name).string() + "\""; }

std::string last_line(const std::string& text) {
  const auto end = text.find_last_not_of('\n');
  const auto start = text.rfind('\n', end);
  return text.substr(start == std::string::npos ? 0 : start + 1, end - (start == std::string::npos ? 0 : start + 1) + 1);
}

}  // namespace

TEST_CASE("gen is deterministic") {
  REQUIRE(cli("gen --seed 7 --vocab 9 --frames 24 -o " + at("g1.json")).code == 0);
  REQUIRE(cli("gen --seed 7 --vocab 9 --frames 24 -o " + at("g2.json")).code == 0);
  CHECK(read_file(workdir() / "g1.json") == read_file(workdir() / "g2.json"));
  REQUIRE(cli("gen --seed 8 --vocab 9 --frames 24 -o " + at("g3.json")).code == 0);
  CHECK(read_file(workdir() / "g1.json") != read_file(workdir() / "g3.json"));
}

TEST_CASE("gen rejects out-of-range parameters") {
  const Run r = cli("gen --seed 1 --instability 1.5 -o " + at("bad.json"));
  CHECK(r.code == 2);
  CHECK(r.err.find("instability must be in [0,1]") != std::string::npos);
  CHECK(cli("gen --seed 1 --rw banana -o " + at("bad.json")).code == 2);
  CHECK(cli("gen --beam 0 -o " + at("bad.json")).code == 2);
  CHECK(cli("frobnicate").code == 2);
}

TEST_CASE("decode writes a trace and prints metrics") {
  REQUIRE(cli("gen --seed 11 --vocab 10 --frames 40 --instability 0.7 -o " + at("d.json")).code == 0);

  const Run rw0 = cli("decode " + at("d.json") + " --rw 0 -o " + at("d_rw0.jsonl"));
  REQUIRE(rw0.code == 0);
  const Json m0 = Json::parse(rw0.out);
  CHECK(m0.at("ne") == 0.0);
  CHECK(m0.at("revision_histogram").size() <= 1);
  CHECK(rw0.out.find("\"ne\":0.0") != std::string::npos);

  const Run b1 = cli("decode " + at("d.json") + " --beam 1 -o " + at("d_b1.jsonl"));
  REQUIRE(b1.code == 0);
  CHECK(Json::parse(b1.out).at("ne") == 0.0);

  // Default trace path sits next to the scenario.
  REQUIRE(cli("decode " + at("d.json")).code == 0);
  CHECK(fs::exists(workdir() / "d.trace.jsonl"));
}

TEST_CASE("metrics recomputed from a trace match decode output") {
  REQUIRE(cli("gen --seed 12 --vocab 8 --frames 30 --instability 0.5 -o " + at("m.json")).code == 0);
  const Run d = cli("decode " + at("m.json") + " --rw 2 -o " + at("m.jsonl"));
  REQUIRE(d.code == 0);
  const Run m = cli("metrics " + at("m.jsonl"));
  REQUIRE(m.code == 0);
  CHECK(m.out == d.out);
}

TEST_CASE("commit policy does not change the final output") {
  REQUIRE(cli("gen --seed 13 --vocab 12 --frames 37 -o " + at("c.json")).code == 0);
  REQUIRE(cli("decode " + at("c.json") + " --commit frame -o " + at("c_frame.jsonl")).code == 0);
  REQUIRE(cli("decode " + at("c.json") + " --commit chunk --chunk 5 -o " + at("c_chunk.jsonl")).code == 0);
  const std::string a = read_file(workdir() / "c_frame.jsonl");
  const std::string b = read_file(workdir() / "c_chunk.jsonl");
  CHECK(last_line(a) == last_line(b));
  CHECK(a != b);
}

TEST_CASE("metrics on a hand-built trace") {
  const std::string header =
      R"({"format":"revdec-trace-v1","T":4,"vocab_hash":"HASH","vocab":["<b>","<s>","American","West","central","US","has","many","there","are","big","mountains","in","west"],"blank_id":0,"bos_id":1,"config":{"beam_size":7,"chunk_size":1,"revision_window":null,"word_reward":1.0,"max_symbols_per_frame":5,"frame_span_ms":40.0},"commit":"chunk","prune":"none","reference":null})";
  const Vocabulary v({"<b>", "<s>", "American", "West", "central", "US", "has", "many", "there", "are", "big",
                      "mountains", "in", "west"},
                     0, 1);
  std::string h = header;
  h.replace(h.find("HASH"), 4, v.hash());
  const std::string body = h + "\n" +
                           R"({"frame":1,"tokens":[2]}
{"frame":2,"tokens":[3,4,5]}
{"frame":3,"tokens":[3,4,5,6,7]}
{"frame":4,"tokens":[8,9,7,10,11,12,13,4,5]}
{"final":[8,9,7,10,11,12,13,4,5],"emit_frames":[4,4,4,4,4,4,4,4,4],"log_score":-3.5}
)";
  write_file(workdir() / "flicker.jsonl", body);
  const Run r = cli("metrics " + at("flicker.jsonl"));
  REQUIRE(r.code == 0);
  const Json j = Json::parse(r.out);
  CHECK(j.at("ne").get<double>() == doctest::Approx(6.0 / 9.0).epsilon(1e-12));
  CHECK(j.at("revision_histogram") == Json::parse(R"({"0":1,"1":1,"5":1})"));
  CHECK(j.at("al_ms").get<double>() == doctest::Approx(160.0));

  const std::string single = h + "\n" + R"({"frame":4,"tokens":[5]}
{"final":[5],"emit_frames":[2],"log_score":-1.0}
)";
  write_file(workdir() / "single.jsonl", single);
  const Run s = cli("metrics " + at("single.jsonl"));
  REQUIRE(s.code == 0);
  CHECK(Json::parse(s.out).at("revision_histogram") == Json::object());

  std::string broken = body;
  broken.replace(broken.find("{\"frame\":3"), 10, "{\"frame\":1");
  write_file(workdir() / "broken.jsonl", broken);
  const Run b = cli("metrics " + at("broken.jsonl"));
  CHECK(b.code == 2);
  CHECK(b.err.find("strictly increasing") != std::string::npos);
}

TEST_CASE("lattice export and replay") {
  REQUIRE(cli("gen --seed 21 --vocab 6 --frames 10 -o " + at("l.json")).code == 0);
  REQUIRE(cli("export-lattice " + at("l.json") + " -o " + at("l.lat")).code == 0);
  REQUIRE(cli("gen --from-lattice " + at("l.lat") + " -o " + at("l_replay.json")).code == 0);
  const Json scen = Json::parse(read_file(workdir() / "l_replay.json"));
  CHECK(scen.at("source").at("path") == "l.lat");
  const Run a = cli("decode " + at("l.json") + " -o " + at("l_a.jsonl"));
  const Run b = cli("decode " + at("l_replay.json") + " -o " + at("l_b.jsonl"));
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(Json::parse(a.out).at("ne") == Json::parse(b.out).at("ne"));
  CHECK(Json::parse(last_line(read_file(workdir() / "l_a.jsonl"))).at("final") ==
        Json::parse(last_line(read_file(workdir() / "l_b.jsonl"))).at("final"));

  write_file(workdir() / "garbage.lat", "LATTICE v1 N=3\nnonsense\n");
  const Run g = cli("gen --from-lattice " + at("garbage.lat") + " -o " + at("g.json"));
  CHECK(g.code == 2);
  CHECK(g.err.find("line") != std::string::npos);
}

TEST_CASE("sweep command") {
  write_file(workdir() / "empty.json", "{}");
  const Run e = cli("sweep " + at("empty.json"));
  CHECK(e.code == 0);
  CHECK(e.out == "id,b,u,rw,commit_mode,ne,al_ms,harness_bleu,max_erasure,error\n");

  write_file(workdir() / "small.json", R"({"generate": {"count": 3}, "grid": {"rw": [null, 0]}})");
  const Run s = cli("sweep " + at("small.json") + " --threads 2 --summary " + at("small_summary.json"));
  CHECK(s.code == 0);
  CHECK(std::count(s.out.begin(), s.out.end(), '\n') == 7);
  CHECK(Json::parse(read_file(workdir() / "small_summary.json")).at("cells") == 6);

  write_file(workdir() / "partial.json",
             R"({"scenarios": [{"id": "gone", "source": {"type": "lattice", "path": "gone.lat"}},
                               {"id": "ok", "source": {"type": "synthetic", "seed": 3, "vocab_size": 6, "frame_count": 9}}]})");
  const Run p = cli("sweep " + at("partial.json"));
  CHECK(p.code == 1);
  CHECK(std::count(p.out.begin(), p.out.end(), '\n') == 3);

  CHECK(cli("sweep " + at("missing-manifest.json")).code == 2);
}
