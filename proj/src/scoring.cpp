#include "revdec/scoring.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace revdec {

LogProbRow ScoringSource::score_next(int frame, std::span<const TokenId> context) const {
  if (frame < 1 || frame > frame_count())
    throw std::out_of_range("frame " + std::to_string(frame) + " outside 1.." +
                            std::to_string(frame_count()));
  const TokenId blank = vocab().blank_id();
  if (std::find(context.begin(), context.end(), blank) != context.end())
    throw std::invalid_argument("scoring context contains blank");
  const auto k = static_cast<std::size_t>(context_order());
  if (context.size() > k) context = context.last(k);
  return row(frame, context);
}

// ---------------------------------------------------------------------------
// Synthetic source

namespace prng {

std::uint64_t splitmix64(std::uint64_t x) {
  std::uint64_t z = x + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t mix3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return splitmix64(splitmix64(splitmix64(a) ^ b) ^ c);
}

double unit_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t context_hash(std::span<const TokenId> context) {
  std::uint64_t h = splitmix64(0xcbf29ce484222325ULL ^ static_cast<std::uint64_t>(context.size()));
  for (TokenId t : context) h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(t)));
  return h;
}

}  // namespace prng

namespace {
constexpr std::uint64_t kSwapTag = 0x53574150;  // "SWAP"
constexpr std::uint64_t kSaltTag = 0x53414C54;  // "SALT"
}  // namespace

void SyntheticSourceSpec::validate() const {
  if (vocab_size < 3) throw std::invalid_argument("vocab_size must be >= 3");
  if (frame_count < 0) throw std::invalid_argument("frame_count must be >= 0");
  if (context_order < 0) throw std::invalid_argument("context_order must be >= 0");
  if (!(concentration >= 0.0) || !std::isfinite(concentration))
    throw std::invalid_argument("concentration must be a finite value >= 0");
  if (!(instability >= 0.0 && instability <= 1.0))
    throw std::invalid_argument("instability must be in [0,1]");
  if (!(blank_bias >= 0.0 && blank_bias <= 1.0))
    throw std::invalid_argument("blank_bias must be in [0,1]");
}

SyntheticSource::SyntheticSource(SyntheticSourceSpec spec)
    : spec_(spec), vocab_((spec.validate(), Vocabulary::synthetic(spec.vocab_size))) {
  salt_.assign(static_cast<std::size_t>(spec_.frame_count) + 1, 0);
  std::uint64_t salt = 0;
  for (int f = 1; f <= spec_.frame_count; ++f) {
    const auto uf = static_cast<std::uint64_t>(f);
    if (prng::unit_open(prng::mix3(spec_.seed, uf, kSwapTag)) < spec_.instability)
      salt ^= prng::mix3(spec_.seed, uf, kSaltTag);
    salt_[static_cast<std::size_t>(f)] = salt;
  }
}

std::vector<int> SyntheticSource::swap_frames() const {
  std::vector<int> out;
  for (int f = 1; f <= spec_.frame_count; ++f)
    if (salt_[static_cast<std::size_t>(f)] != salt_[static_cast<std::size_t>(f - 1)]) out.push_back(f);
  return out;
}

LogProbRow SyntheticSource::row(int frame, std::span<const TokenId> context) const {
  const auto n = static_cast<std::size_t>(spec_.vocab_size);
  const std::uint64_t key = prng::mix3(spec_.seed ^ salt_[static_cast<std::size_t>(frame)],
                                       static_cast<std::uint64_t>(frame), prng::context_hash(context));
  std::vector<double> w(n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double e = -std::log(prng::unit_open(prng::splitmix64(key + j + 1)));
    w[j] = spec_.concentration == 0.0 ? 1.0 : std::pow(e, spec_.concentration);
    total += w[j];
  }
  const double keep = 1.0 - spec_.blank_bias;
  const auto blank = static_cast<std::size_t>(vocab_.blank_id());
  LogProbRow out(n);
  for (std::size_t j = 0; j < n; ++j) {
    double q = keep * (w[j] / total);
    if (j == blank) q += spec_.blank_bias;
    out[j] = std::log(q);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lattice source

LatticeParseError::LatticeParseError(int line, const std::string& what)
    : std::runtime_error("lattice line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

LogProbRow to_logs(const std::vector<double>& probs) {
  LogProbRow out(probs.size());
  std::transform(probs.begin(), probs.end(), out.begin(), [](double p) { return std::log(p); });
  return out;
}

// Empty string when the row is acceptable, else the reason.
std::string check_row(const std::vector<double>& probs, int n) {
  if (static_cast<int>(probs.size()) != n)
    return "row has " + std::to_string(probs.size()) + " entries, expected " + std::to_string(n);
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) return "row has a negative or non-finite probability";
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    std::ostringstream os;
    os << "row not normalized (sum=" << sum << ")";
    return os.str();
  }
  return {};
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

LatticeSource::LatticeSource(Vocabulary vocab, int frame_count, int context_order,
                             std::vector<double> default_probs, std::map<Key, std::vector<double>> rows)
    : vocab_(std::move(vocab)),
      frame_count_(frame_count),
      context_order_(context_order),
      default_probs_(std::move(default_probs)),
      probs_(std::move(rows)) {
  if (frame_count_ < 0) throw std::invalid_argument("lattice frame count must be >= 0");
  if (context_order_ < 0) throw std::invalid_argument("lattice context order must be >= 0");
  if (auto err = check_row(default_probs_, vocab_.size()); !err.empty())
    throw std::invalid_argument("default " + err);
  default_row_ = to_logs(default_probs_);
  for (const auto& [key, probs] : probs_) {
    const auto& [frame, ctx] = key;
    if (frame < 1 || frame > frame_count_) throw std::invalid_argument("row frame out of range");
    if (static_cast<int>(ctx.size()) > context_order_)
      throw std::invalid_argument("row context longer than context order");
    for (TokenId t : ctx)
      if (t < 0 || t >= vocab_.size()) throw std::invalid_argument("row context token out of range");
    if (auto err = check_row(probs, vocab_.size()); !err.empty()) throw std::invalid_argument(err);
    rows_.emplace(key, to_logs(probs));
  }
}

LogProbRow LatticeSource::row(int frame, std::span<const TokenId> context) const {
  auto it = rows_.find(Key{frame, TokenSeq(context.begin(), context.end())});
  return it == rows_.end() ? default_row_ : it->second;
}

namespace {

class LineReader {
 public:
  LineReader(int line, const std::string& text) : line_(line), in_(text) {}

  bool next(std::string& word) { return static_cast<bool>(in_ >> word); }

  std::string expect_word() {
    std::string w;
    if (!next(w)) fail("unexpected end of line");
    return w;
  }

  // Parses "<name>=<int>".
  long long keyed_int(const std::string& name) {
    const std::string w = expect_word();
    const std::string prefix = name + "=";
    if (w.rfind(prefix, 0) != 0) fail("expected " + prefix + "<int>, got '" + w + "'");
    return parse_int(w.substr(prefix.size()));
  }

  long long parse_int(const std::string& s) {
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) fail("bad integer '" + s + "'");
    return v;
  }

  std::vector<double> probs(int n) {
    std::vector<double> out;
    std::string w;
    while (next(w)) {
      double v = 0.0;
      auto res = std::from_chars(w.data(), w.data() + w.size(), v);
      if (res.ec != std::errc{} || res.ptr != w.data() + w.size()) fail("bad probability '" + w + "'");
      out.push_back(v);
    }
    if (auto err = check_row(out, n); !err.empty()) fail(err);
    return out;
  }

  [[noreturn]] void fail(const std::string& what) const { throw LatticeParseError(line_, what); }

 private:
  int line_;
  std::istringstream in_;
};

}  // namespace

std::unique_ptr<LatticeSource> parse_lattice(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;

  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  };

  if (!next_line()) throw LatticeParseError(1, "empty file");
  LineReader header(lineno, line);
  if (header.expect_word() != "LATTICE") header.fail("missing LATTICE header");
  if (header.expect_word() != "v1") header.fail("unsupported lattice version");
  const auto n = header.keyed_int("N");
  const auto t = header.keyed_int("T");
  const auto k = header.keyed_int("K");
  const auto blank = header.keyed_int("BLANK");
  const auto bos = header.keyed_int("BOS");
  if (n < 3 || n > 1'000'000) header.fail("N out of range");
  if (t < 0 || t > 10'000'000) header.fail("T out of range");
  if (k < 0 || k > 64) header.fail("K out of range");
  if (blank < 0 || blank >= n || bos < 0 || bos >= n || blank == bos) header.fail("bad BLANK/BOS ids");
  if (std::string extra; header.next(extra)) header.fail("unexpected header field '" + extra + "'");
  const int ni = static_cast<int>(n);

  if (!next_line()) throw LatticeParseError(lineno + 1, "missing VOCAB line");
  LineReader vline(lineno, line);
  if (vline.expect_word() != "VOCAB") vline.fail("expected VOCAB");
  std::vector<std::string> toks;
  for (std::string w; vline.next(w);) toks.push_back(w);
  if (static_cast<long long>(toks.size()) != n)
    vline.fail("VOCAB has " + std::to_string(toks.size()) + " entries, expected " + std::to_string(n));
  std::optional<Vocabulary> vocab;
  try {
    vocab.emplace(std::move(toks), static_cast<TokenId>(blank), static_cast<TokenId>(bos));
  } catch (const std::invalid_argument& e) {
    vline.fail(e.what());
  }

  if (!next_line()) throw LatticeParseError(lineno + 1, "missing DEFAULT line");
  LineReader dline(lineno, line);
  if (dline.expect_word() != "DEFAULT") dline.fail("expected DEFAULT");
  std::vector<double> default_probs = dline.probs(ni);

  std::map<LatticeSource::Key, std::vector<double>> rows;
  while (next_line()) {
    LineReader r(lineno, line);
    const std::string directive = r.expect_word();
    if (directive != "ROW") r.fail("unknown directive '" + directive + "'");
    const auto frame = r.keyed_int("f");
    if (frame < 1 || frame > t) r.fail("frame " + std::to_string(frame) + " out of range");
    const std::string ctx_word = r.expect_word();
    if (ctx_word.rfind("ctx=", 0) != 0) r.fail("expected ctx=<ids>");
    const std::string ctx_text = ctx_word.substr(4);
    TokenSeq ctx;
    if (ctx_text != "-") {
      std::size_t pos = 0;
      while (pos <= ctx_text.size()) {
        const std::size_t comma = std::min(ctx_text.find(',', pos), ctx_text.size());
        const auto id = r.parse_int(ctx_text.substr(pos, comma - pos));
        if (id < 0 || id >= n) r.fail("context token " + std::to_string(id) + " out of range");
        ctx.push_back(static_cast<TokenId>(id));
        pos = comma + 1;
      }
    }
    if (static_cast<long long>(ctx.size()) > k) r.fail("context longer than K");
    auto probs = r.probs(ni);
    if (!rows.emplace(LatticeSource::Key{static_cast<int>(frame), ctx}, std::move(probs)).second)
      r.fail("duplicate row");
  }
  return std::make_unique<LatticeSource>(std::move(*vocab), static_cast<int>(t), static_cast<int>(k),
                                         std::move(default_probs), std::move(rows));
}

std::unique_ptr<LatticeSource> load_lattice(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open lattice file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_lattice(ss.str());
}

std::string format_lattice(const LatticeSource& src) {
  const auto& v = src.vocab();
  std::string out = "LATTICE v1 N=" + std::to_string(v.size()) + " T=" + std::to_string(src.frame_count()) +
                    " K=" + std::to_string(src.context_order()) + " BLANK=" + std::to_string(v.blank_id()) +
                    " BOS=" + std::to_string(v.bos_id()) + "\nVOCAB";
  for (const auto& t : v.tokens()) out += " " + t;
  out += "\nDEFAULT";
  for (double p : src.default_probs()) out += " " + format_double(p);
  out += "\n";
  for (const auto& [key, probs] : src.probs()) {
    out += "ROW f=" + std::to_string(key.first) + " ctx=";
    if (key.second.empty()) out += "-";
    for (std::size_t i = 0; i < key.second.size(); ++i)
      out += (i ? "," : "") + std::to_string(key.second[i]);
    for (double p : probs) out += " " + format_double(p);
    out += "\n";
  }
  return out;
}

void save_lattice(const LatticeSource& src, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write lattice file " + path.string());
  out << format_lattice(src);
}

LatticeSource tabulate(const ScoringSource& src) {
  const auto& v = src.vocab();
  const int k = src.context_order();
  std::vector<TokenId> emittable;
  for (TokenId t = 0; t < v.size(); ++t)
    if (t != v.blank_id() && t != v.bos_id()) emittable.push_back(t);

  // Every context a decode can present: bos followed by < k tokens, or k
  // emittable tokens (k == 0 means only the empty context).
  std::vector<TokenSeq> contexts;
  if (k == 0) {
    contexts.push_back({});
  } else {
    std::function<void(TokenSeq&, int)> grow = [&](TokenSeq& cur, int len) {
      if (static_cast<int>(cur.size()) == len) {
        contexts.push_back(cur);
        return;
      }
      for (TokenId t : emittable) {
        cur.push_back(t);
        grow(cur, len);
        cur.pop_back();
      }
    };
    for (int len = 1; len <= k; ++len) {
      TokenSeq cur{v.bos_id()};
      grow(cur, len);
    }
    TokenSeq cur;
    grow(cur, k);
  }

  std::vector<double> uniform(static_cast<std::size_t>(v.size()), 1.0 / v.size());
  std::map<LatticeSource::Key, std::vector<double>> rows;
  for (int f = 1; f <= src.frame_count(); ++f) {
    for (const auto& ctx : contexts) {
      LogProbRow lr = src.score_next(f, ctx);
      std::vector<double> p(lr.size());
      std::transform(lr.begin(), lr.end(), p.begin(), [](double x) { return std::exp(x); });
      rows.emplace(LatticeSource::Key{f, ctx}, std::move(p));
    }
  }
  return LatticeSource(v, src.frame_count(), k, std::move(uniform), std::move(rows));
}

}  // namespace revdec
