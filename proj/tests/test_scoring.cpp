#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "revdec/scoring.hpp"

using namespace revdec;

namespace {

double prob_sum(const LogProbRow& r) {
  return std::accumulate(r.begin(), r.end(), 0.0, [](double acc, double lp) { return acc + std::exp(lp); });
}

SyntheticSourceSpec golden_spec() {
  SyntheticSourceSpec s;
  s.seed = 42;
  s.vocab_size = 6;
  s.frame_count = 8;
  s.context_order = 2;
  s.concentration = 5;
  s.instability = 0.3;
  s.blank_bias = 0.5;
  return s;
}

}  // namespace

TEST_CASE("uniform synthetic source") {
  SyntheticSourceSpec s;
  s.vocab_size = 4;
  s.frame_count = 3;
  s.concentration = 0.0;
  s.blank_bias = 0.0;
  SyntheticSource src(s);
  for (int f = 1; f <= 3; ++f)
    for (double lp : src.score_next(f, TokenSeq{1, 2}))
      CHECK(lp == doctest::Approx(std::log(0.25)).epsilon(1e-12));
}

TEST_CASE("synthetic rows match the independent reference generator") {
  // Frozen from tests/oracles/synthetic_reference.py.
  SyntheticSource src(golden_spec());
  const LogProbRow bos_row{-0.65187179303195497, -1.4131838217491934, -4.3498593515437332,
                           -9.0718545768758307,  -1.5098214054029189, -6.4438048065581528};
  const LogProbRow late_row{-0.68887858201820684, -32.63848207136224,  -3.2941176659000377,
                            -0.78881266362313185, -10.533802897553841, -5.0593366586822546};
  const auto r1 = src.score_next(1, TokenSeq{1});
  const auto r7 = src.score_next(7, TokenSeq{1, 3, 4});
  for (std::size_t j = 0; j < 6; ++j) {
    CHECK(r1[j] == doctest::Approx(bos_row[j]).epsilon(1e-12));
    CHECK(r7[j] == doctest::Approx(late_row[j]).epsilon(1e-12));
  }
  CHECK(src.swap_frames() == std::vector<int>{1, 4, 5, 8});
}

TEST_CASE("synthetic source is deterministic and truncates context") {
  SyntheticSource src(golden_spec());
  SyntheticSource twin(golden_spec());
  const auto first = src.score_next(3, TokenSeq{1, 2});
  for (int i = 0; i < 1000; ++i) REQUIRE(src.score_next(3, TokenSeq{1, 2}) == first);
  CHECK(twin.score_next(3, TokenSeq{1, 2}) == first);

  std::mt19937 rng(3);
  std::uniform_int_distribution<int> tok(2, 5), len(0, 6), frame(1, 8);
  for (int i = 0; i < 300; ++i) {
    TokenSeq ctx{1};
    for (int n = len(rng); n > 0; --n) ctx.push_back(tok(rng));
    const int f = frame(rng);
    const TokenSeq last(ctx.end() - std::min<std::ptrdiff_t>(2, static_cast<std::ptrdiff_t>(ctx.size())), ctx.end());
    const auto row = src.score_next(f, ctx);
    CHECK(row == src.score_next(f, last));
    CHECK(prob_sum(row) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("swap events change later rows only") {
  auto spec = golden_spec();
  spec.instability = 0.0;
  SyntheticSource calm(spec);
  spec.instability = 1.0;
  SyntheticSource wild(spec);
  CHECK(calm.swap_frames().empty());
  CHECK(wild.swap_frames().size() == 8);
  CHECK(calm.score_next(2, TokenSeq{1}) != wild.score_next(2, TokenSeq{1}));
}

TEST_CASE("score_next preconditions") {
  SyntheticSource src(golden_spec());
  CHECK_THROWS_AS(src.score_next(0, TokenSeq{1}), std::out_of_range);
  CHECK_THROWS_AS(src.score_next(9, TokenSeq{1}), std::out_of_range);
  CHECK_THROWS_AS(src.score_next(1, TokenSeq{1, 0}), std::invalid_argument);
}

TEST_CASE("synthetic source parameter validation") {
  auto s = golden_spec();
  s.instability = 1.5;
  CHECK_THROWS_WITH_AS(s.validate(), "instability must be in [0,1]", std::invalid_argument);
  s = golden_spec();
  s.blank_bias = -0.1;
  CHECK_THROWS(s.validate());
  s = golden_spec();
  s.vocab_size = 2;
  CHECK_THROWS(s.validate());
}

TEST_CASE("minimal lattice") {
  auto src = parse_lattice(
      "LATTICE v1 N=3 T=1 K=0 BLANK=0 BOS=1\n"
      "VOCAB <b> <s> a\n"
      "DEFAULT 0.5 0 0.5\n"
      "ROW f=1 ctx=- 0.25 0 0.75\n");
  CHECK(src->frame_count() == 1);
  CHECK(src->context_order() == 0);
  const auto row = src->score_next(1, TokenSeq{1});
  CHECK(row[0] == std::log(0.25));
  CHECK(row[2] == std::log(0.75));
  CHECK(std::isinf(row[1]));
}

TEST_CASE("lattice lookup miss returns the default row") {
  auto src = parse_lattice(
      "LATTICE v1 N=3 T=2 K=1 BLANK=0 BOS=1\n"
      "VOCAB <b> <s> a\n"
      "DEFAULT 0.5 0 0.5\n"
      "ROW f=1 ctx=1 0.25 0 0.75\n");
  const auto miss = src->score_next(2, TokenSeq{1});
  CHECK(miss[0] == std::log(0.5));
  CHECK(miss[2] == std::log(0.5));
  CHECK(src->score_next(1, TokenSeq{1, 2}) == miss);  // truncated context [a] is not listed
  CHECK(src->score_next(1, TokenSeq{1})[2] == std::log(0.75));
}

TEST_CASE("lattice parse errors") {
  const std::string head = "LATTICE v1 N=3 T=1 K=1 BLANK=0 BOS=1\nVOCAB <b> <s> a\n";
  auto fails_with = [](const std::string& text, const std::string& needle, int line) {
    try {
      parse_lattice(text);
      FAIL("expected parse error");
    } catch (const LatticeParseError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
      CHECK(e.line() == line);
    }
  };
  fails_with(head + "DEFAULT 0.5 0 0.4\n", "row not normalized", 3);
  fails_with(head + "DEFAULT 0.5 0 0.5\nROW f=1 ctx=- 0.5 0.3 0.1\n", "row not normalized", 4);
  fails_with(head + "DEFAULT 0.5 0 0.5\nROW f=1 ctx=7 0.5 0 0.5\n", "out of range", 4);
  fails_with(head + "DEFAULT 0.5 0 0.5\nROW f=2 ctx=- 0.5 0 0.5\n", "out of range", 4);
  fails_with(head + "DEFAULT 0.5 0 0.5\nROW f=1 ctx=1,2 0.5 0 0.5\n", "longer than K", 4);
  fails_with(head + "DEFAULT 0.5 0 0.5\nBOGUS 1\n", "unknown directive", 4);
  fails_with(head + "DEFAULT 0.5 0.5\n", "expected 3", 3);
  fails_with("LATTICE v2 N=3 T=1 K=0 BLANK=0 BOS=1\n", "version", 1);
  fails_with("LATTICE v1 N=3 T=1 K=0 BLANK=0 BOS=0\n", "BLANK/BOS", 1);
  fails_with("LATTICE v1 N=3 T=1 K=0 BLANK=0 BOS=1\nVOCAB <b> <s>\n", "VOCAB has 2", 2);
}

TEST_CASE("canonical lattice text round-trips byte-identically") {
  SyntheticSourceSpec spec = golden_spec();
  spec.frame_count = 3;
  const LatticeSource tab = tabulate(SyntheticSource(spec));
  const std::string text = format_lattice(tab);
  const auto reparsed = parse_lattice(text);
  CHECK(format_lattice(*reparsed) == text);

  const std::string hand =
      "LATTICE v1 N=3 T=2 K=1 BLANK=0 BOS=1\n"
      "VOCAB <b> <s> a\n"
      "DEFAULT 0.5 0 0.5\n"
      "ROW f=1 ctx=1 0.1 0.2 0.7\n"
      "ROW f=2 ctx=- 0.3333333333333333 0.3333333333333333 0.3333333333333334\n";
  CHECK(format_lattice(*parse_lattice(hand)) == hand);
}

TEST_CASE("tabulated lattice replays the synthetic source") {
  const SyntheticSource syn(golden_spec());
  const LatticeSource lat = tabulate(syn);
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> tok(2, 5), len(0, 4), frame(1, 8);
  for (int i = 0; i < 200; ++i) {
    TokenSeq ctx{1};
    for (int n = len(rng); n > 0; --n) ctx.push_back(tok(rng));
    const int f = frame(rng);
    const auto a = syn.score_next(f, ctx);
    const auto b = lat.score_next(f, ctx);
    for (std::size_t j = 0; j < a.size(); ++j) CHECK(b[j] == doctest::Approx(a[j]).epsilon(1e-12));
  }
}
