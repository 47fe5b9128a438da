#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "poprec/channel.hpp"
#include "poprec/stats.hpp"
#include "poprec/trace_io.hpp"

using namespace poprec;

namespace {

// Histogram key for short traces: (length, value) packed into one word.
std::uint64_t trace_key(const Trace& t, std::size_t max_len) {
  if (t.size() > max_len) return ~std::uint64_t{0};
  std::uint64_t key = t.size() << 32;
  for (std::size_t i = 0; i < t.size(); ++i) key |= std::uint64_t{t.get(i)} << i;
  return key;
}

// Two matched histograms over all traces of length <= max_len plus one
// overflow bin.
std::pair<std::vector<std::uint64_t>, std::vector<std::uint64_t>> paired_histograms(
    const std::vector<Trace>& a, const std::vector<Trace>& b, std::size_t max_len) {
  std::map<std::uint64_t, std::size_t> index;
  for (const auto& t : a) index.emplace(trace_key(t, max_len), 0);
  for (const auto& t : b) index.emplace(trace_key(t, max_len), 0);
  std::size_t next = 0;
  for (auto& [key, slot] : index) slot = next++;
  std::vector<std::uint64_t> ha(next, 0), hb(next, 0);
  for (const auto& t : a) ++ha[index[trace_key(t, max_len)]];
  for (const auto& t : b) ++hb[index[trace_key(t, max_len)]];
  return {ha, hb};
}

}  // namespace

TEST_SUITE_BEGIN("channel");

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(ChannelParams(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ChannelParams(-0.1, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(ChannelParams(0.0, 1.0), std::invalid_argument);
  const ChannelParams c(0.1, 0.2);
  CHECK(c.p() == doctest::Approx(0.9));
  CHECK(c.pp() == doctest::Approx(0.8));
  CHECK(c.alpha() == doctest::Approx(1.125));
}

TEST_CASE("geometric sampling") {
  Rng rng(1);
  SUBCASE("p=1 is always 1") {
    for (int i = 0; i < 1000; ++i) CHECK(sample_geometric(1.0, rng) == 1);
  }
  SUBCASE("bad parameters") {
    CHECK_THROWS_AS(sample_geometric(0.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_geometric(1.5, rng), std::invalid_argument);
    CHECK_THROWS_AS(sample_geometric(-1.0, rng), std::invalid_argument);
  }
  SUBCASE("mean of Geometric(1/2) is 2") {
    const int draws = 1000000;
    double sum = 0.0;
    for (int i = 0; i < draws; ++i) sum += static_cast<double>(sample_geometric(0.5, rng));
    CHECK(sum / draws == doctest::Approx(2.0).epsilon(0.01));
  }
  SUBCASE("pmf at 2 for p=0.9") {
    const int draws = 1000000;
    int twos = 0;
    for (int i = 0; i < draws; ++i) twos += sample_geometric(0.9, rng) == 2;
    // 0.1 * 0.9 = 0.09, sd ~ 2.9e-4
    CHECK(static_cast<double>(twos) / draws == doctest::Approx(0.09).epsilon(0.012));
  }
}

TEST_CASE("apply_channel basics") {
  Rng rng(2);
  SUBCASE("identity channel") {
    const auto x = Bits::from_string("1011010011");
    for (int i = 0; i < 20; ++i) CHECK(apply_channel(x, ChannelParams(0, 0), rng) == x);
  }
  SUBCASE("empty source rejected") {
    CHECK_THROWS_AS(apply_channel(Bits(), ChannelParams(0, 0), rng),
                    std::invalid_argument);
  }
  SUBCASE("deletion-only mean length") {
    const ChannelParams params(0.5, 0.0);
    const auto x = Bits::random(1000, rng);
    const int trials = 10000;
    double sum = 0.0;
    for (int i = 0; i < trials; ++i)
      sum += static_cast<double>(apply_channel(x, params, rng).size());
    // Binomial(1000, 0.5): se of the mean over 1e4 trials is 0.158.
    CHECK(sum / trials == doctest::Approx(500.0).epsilon(0.002));
  }
  SUBCASE("insertion/deletion mean length is alpha*n") {
    const ChannelParams params(0.1, 0.1);
    const std::size_t n = 1000;
    const auto x = Bits::random(n, rng);
    const int trials = 10000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < trials; ++i) {
      const auto len = static_cast<double>(apply_channel(x, params, rng).size());
      sum += len;
      sumsq += len * len;
    }
    const double mean = sum / trials;
    const double sd = std::sqrt(sumsq / trials - mean * mean);
    const double expected = params.alpha() * static_cast<double>(n);
    CHECK(std::abs(mean - expected) <= 3.0 * sd / std::sqrt(trials));
  }
}

TEST_CASE("pattern sampling") {
  Rng rng(3);
  SUBCASE("noiseless pattern is the identity") {
    const Pattern r = sample_pattern(8, ChannelParams(0, 0), rng);
    REQUIRE(r.size() == 8);
    for (int i = 0; i < 8; ++i) CHECK(r.entries[i] == i);
  }
  SUBCASE("ascending index invariant") {
    for (int iter = 0; iter < 300; ++iter) {
      const double q = rng.next_unit() * 0.9;
      const double qp = rng.next_unit() * 0.9;
      const Pattern r = sample_pattern(50, ChannelParams(q, qp), rng);
      std::int32_t last = -1;
      for (const auto e : r.entries) {
        if (e == Pattern::kStar) continue;
        CHECK(e > last);
        last = e;
      }
    }
  }
  SUBCASE("survivor count under deletion") {
    const ChannelParams params(0.5, 0.0);
    const int trials = 10000;
    double survivors = 0;
    for (int i = 0; i < trials; ++i)
      survivors += static_cast<double>(sample_pattern(100, params, rng).size());
    CHECK(survivors / trials == doctest::Approx(50.0).epsilon(0.01));
  }
}

TEST_CASE("pattern realization") {
  Rng rng(4);
  SUBCASE("no stars reproduces the source") {
    Pattern r;
    r.n = 5;
    r.entries = {0, 1, 2, 3, 4};
    const auto x = Bits::from_string("10110");
    CHECK(realize_pattern(r, x, rng) == x);
  }
  SUBCASE("single star is a fair coin") {
    Pattern r;
    r.n = 1;
    r.entries = {Pattern::kStar};
    const auto x = Bits::from_string("0");
    int ones = 0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i) ones += realize_pattern(r, x, rng).get(0);
    // 3 sigma = 3*sqrt(.25/1e5) ~ 0.0047
    CHECK(static_cast<double>(ones) / trials == doctest::Approx(0.5).epsilon(0.01));
  }
  SUBCASE("length mismatch rejected") {
    Pattern r;
    r.n = 3;
    r.entries = {0, 1, 2};
    CHECK_THROWS_AS(realize_pattern(r, Bits::from_string("10"), rng),
                    std::invalid_argument);
  }
}

TEST_CASE("pattern decomposition distributionally matches the direct channel") {
  // Smaller sibling of the acceptance run: n=6, q=q'=0.2, 1e5 samples/side.
  const ChannelParams params(0.2, 0.2);
  const auto x = Bits::from_string("101100");
  Rng rng_direct(5), rng_pattern(6);
  const int samples = 100000;
  std::vector<Trace> direct, via_pattern;
  direct.reserve(samples);
  via_pattern.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    direct.push_back(apply_channel(x, params, rng_direct));
    const Pattern r = sample_pattern(6, params, rng_pattern);
    via_pattern.push_back(realize_pattern(r, x, rng_pattern));
  }
  const auto [ha, hb] = paired_histograms(direct, via_pattern, 10);
  const auto result = chi_square_two_sample(ha, hb);
  CHECK(result.p_value > 0.001);
}

TEST_CASE("channel concatenates") {
  // apply_channel(x concat z) should match apply_channel(x) concat apply_channel(z).
  const ChannelParams params(0.2, 0.2);
  const auto x = Bits::from_string("101");
  const auto z = Bits::from_string("010");
  Rng rng_joint(7), rng_split(8);
  const int samples = 100000;
  std::vector<Trace> joint, split;
  for (int i = 0; i < samples; ++i) {
    joint.push_back(apply_channel(concat(x, z), params, rng_joint));
    split.push_back(concat(apply_channel(x, params, rng_split),
                           apply_channel(z, params, rng_split)));
  }
  const auto [ha, hb] = paired_histograms(joint, split, 10);
  const auto result = chi_square_two_sample(ha, hb);
  CHECK(result.p_value > 0.001);
}

TEST_CASE("likelihood special cases") {
  SUBCASE("noiseless is an indicator") {
    const ChannelParams none(0, 0);
    CHECK(trace_likelihood(Bits::from_string("101"), Bits::from_string("101"), none) ==
          doctest::Approx(1.0));
    CHECK(trace_likelihood(Bits::from_string("101"), Bits::from_string("100"), none) ==
          doctest::Approx(0.0));
    CHECK(trace_likelihood(Bits::from_string("101"), Bits::from_string("10"), none) ==
          doctest::Approx(0.0));
  }
  SUBCASE("single deleted bit") {
    CHECK(trace_likelihood(Bits::from_string("1"), Bits(), ChannelParams(0.35, 0)) ==
          doctest::Approx(0.35));
  }
  SUBCASE("source length guard") {
    Rng rng(1);
    CHECK_THROWS_AS(
        trace_likelihood(Bits::random(25, rng), Bits(), ChannelParams(0, 0)),
        std::invalid_argument);
  }
}

TEST_CASE("likelihood matches an independent enumeration oracle") {
  // Frozen from exhaustive enumeration over insertion counts and deletion
  // masks (exact rational arithmetic, truncation below 1e-30).
  struct Case {
    const char* x;
    const char* y;
    double q, qp, expected;
  };
  const Case cases[] = {
      {"1", "", 0.3, 0.2, 0.25531914893617019},
      {"1", "1", 0.3, 0.2, 0.61475780896333188},
      {"1", "0", 0.3, 0.2, 0.019013128112267994},
      {"1", "01", 0.3, 0.2, 0.045779836837694925},
      {"10", "10", 0.25, 0.15, 0.46482841271115066},
      {"10", "0", 0.25, 0.15, 0.15192768102196336},
      {"10", "1100", 0.25, 0.15, 0.0031745959708355739},
      {"0110", "011", 0.2, 0.2, 0.058093635688157293},
      {"0110", "", 0.2, 0.2, 0.00077160493827160511},
  };
  for (const auto& c : cases) {
    const double got = trace_likelihood(Bits::from_string(c.x), Bits::from_string(c.y),
                                        ChannelParams(c.q, c.qp));
    CHECK(got == doctest::Approx(c.expected).epsilon(1e-12));
  }
}

TEST_CASE("likelihood sums to one over all traces") {
  SUBCASE("deletion-only: exact over all traces up to length n") {
    const ChannelParams params(0.3, 0.0);
    for (const char* xs : {"1", "10", "1101", "011010"}) {
      const auto x = Bits::from_string(xs);
      double total = 0.0;
      for (std::size_t len = 0; len <= x.size(); ++len) {
        for (std::uint64_t v = 0; v < (std::uint64_t{1} << len); ++v) {
          total += trace_likelihood(x, Bits::from_uint(v, len), params);
        }
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  SUBCASE("with insertions: converges to one as the length cap grows") {
    const ChannelParams params(0.2, 0.2);
    const auto x = Bits::from_string("101");
    double previous = 0.0;
    double total = 0.0;
    for (std::size_t len = 0; len <= 14; ++len) {
      double layer = 0.0;
      for (std::uint64_t v = 0; v < (std::uint64_t{1} << len); ++v) {
        layer += trace_likelihood(x, Bits::from_uint(v, len), params);
      }
      total += layer;
      CHECK(total >= previous);
      previous = total;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(total <= 1.0 + 1e-12);
  }
}

TEST_CASE("likelihood agrees with sampled trace frequencies") {
  const ChannelParams params(0.25, 0.0);
  const auto x = Bits::from_string("110100");
  Rng rng(9);
  const int samples = 1000000;
  std::map<std::string, int> counts;
  for (int i = 0; i < samples; ++i) ++counts[apply_channel(x, params, rng).to_string()];
  int checked = 0;
  for (const auto& [trace, count] : counts) {
    if (count < 2000) continue;  // keep the normal approximation honest
    const double expected = trace_likelihood(x, Bits::from_string(trace), params);
    const double se = std::sqrt(expected * (1.0 - expected) / samples);
    CHECK(std::abs(static_cast<double>(count) / samples - expected) <= 3.5 * se);
    ++checked;
  }
  CHECK(checked >= 10);
}

TEST_CASE("determinism across identical seeds") {
  const ChannelParams params(0.15, 0.1);
  const auto x = Bits::from_string("1011001101");
  Rng a(1234), b(1234), c(1235);
  bool any_difference = false;
  for (int i = 0; i < 50; ++i) {
    const auto ta = apply_channel(x, params, a);
    CHECK(ta == apply_channel(x, params, b));
    if (!(ta == apply_channel(x, params, c))) any_difference = true;
  }
  CHECK(any_difference);
}

TEST_CASE("trace file round trip") {
  Rng rng(10);
  const ChannelParams params(0.1, 0.2);
  std::vector<Trace> traces;
  const auto x = Bits::random(40, rng);
  traces.push_back(Bits());  // empty trace is legal
  for (int i = 0; i < 10; ++i) traces.push_back(apply_channel(x, params, rng));

  std::stringstream buffer;
  write_traces(buffer, TraceFileHeader{40, params, 777}, traces);
  const std::string text = buffer.str();
  CHECK(text.rfind("#n=40 q=0.1 q'=0.2 seed=777", 0) == 0);

  std::stringstream reread(text);
  const TraceFile parsed = read_traces(reread);
  CHECK(parsed.header.n == 40);
  CHECK(parsed.header.seed == 777);
  CHECK(parsed.header.channel.q == doctest::Approx(0.1));
  CHECK(parsed.header.channel.qp == doctest::Approx(0.2));
  REQUIRE(parsed.traces.size() == traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) CHECK(parsed.traces[i] == traces[i]);

  std::stringstream bad("no header\n0101\n");
  CHECK_THROWS(read_traces(bad));
}

TEST_SUITE_END();
