#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "twr/ini.hpp"
#include "twr/rng.hpp"
#include "twr/textio.hpp"

using namespace twr;

TEST_CASE("draws are pure functions of key and counter") {
  StreamRng a(42), b(42);
  for (uint64_t c = 0; c < 100; ++c) {
    CHECK(a.bits(c) == b.bits(c));
    CHECK(a.uniform01(c) == b.uniform01(c));
  }
  // Evaluation order does not matter.
  std::vector<uint64_t> fwd, rev;
  for (uint64_t c = 0; c < 50; ++c) fwd.push_back(a.bits(c));
  for (uint64_t c = 50; c-- > 0;) rev.push_back(a.bits(c));
  std::reverse(rev.begin(), rev.end());
  CHECK(fwd == rev);
}

TEST_CASE("different seeds and derived streams disagree") {
  StreamRng a(1), b(2);
  CHECK(a.key() != b.key());
  CHECK(a.bits(0) != b.bits(0));

  StreamRng c1 = a.derive(0), c2 = a.derive(1);
  CHECK(c1.key() != c2.key());
  CHECK(c1.key() != a.key());
  CHECK(c1.bits(0) != c2.bits(0));

  // derive is deterministic.
  CHECK(a.derive(7).key() == a.derive(7).key());
}

TEST_CASE("uniform01 stays in (0,1] and looks uniform") {
  StreamRng rng(9001);
  double sum = 0.0, mn = 2.0, mx = -1.0;
  const int N = 20000;
  for (int i = 0; i < N; ++i) {
    double u = rng.uniform01(i);
    sum += u;
    mn = std::min(mn, u);
    mx = std::max(mx, u);
  }
  CHECK(mn > 0.0);
  CHECK(mx <= 1.0);
  CHECK(sum / N == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("exponential has unit mean and stays finite") {
  StreamRng rng(7);
  double sum = 0.0;
  const int N = 20000;
  for (int i = 0; i < N; ++i) {
    double e = rng.exponential(i);
    CHECK(std::isfinite(e));
    CHECK(e >= 0.0);
    sum += e;
  }
  CHECK(sum / N == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("bits spread over the counter space") {
  StreamRng rng(3);
  std::set<uint64_t> seen;
  for (uint64_t c = 0; c < 4096; ++c) seen.insert(rng.bits(c));
  CHECK(seen.size() == 4096);
}

TEST_CASE("sequence adapter walks counters in order") {
  StreamRng stream(11);
  RngSequence seq(stream);
  CHECK(seq.bits() == stream.bits(0));
  CHECK(seq.bits() == stream.bits(1));
  CHECK(seq.uniform01() == stream.uniform01(2));
}

TEST_CASE("fmt_double round trips exactly") {
  for (double v : {0.1, 1.0 / 3.0, 6e6, 1e-300, 123456789.123456789, -0.25}) {
    CHECK(parse_double(fmt_double(v), "v") == v);
  }
  CHECK(fmt_double(0.0) == "0");
}

TEST_CASE("fnv1a64 matches the reference vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("number parsing rejects trailing garbage") {
  CHECK(parse_double("1.5", "x") == 1.5);
  CHECK(parse_int("-12", "x") == -12);
  CHECK_THROWS_AS(parse_double("1.5x", "x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_double("", "x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_int("7.5", "x"), std::invalid_argument);
}

TEST_CASE("split helpers") {
  CHECK(split_ws("  a  b\tc ") == std::vector<std::string>{"a", "b", "c"});
  CHECK(split_ws("") == std::vector<std::string>{});
  CHECK(split_csv_line("a,b,,c") == std::vector<std::string>{"a", "b", "", "c"});
  CHECK(split_csv_line("x") == std::vector<std::string>{"x"});
  CHECK(trim("  hi \r\n") == "hi");
}

TEST_CASE("ini parsing") {
  IniFile ini = IniFile::from_string(
      "# comment\n"
      "top = 1\n"
      "[system]\n"
      "beta = 0.1\n"
      "rates = 6e6 9e6\n"
      "flag = yes\n"
      "; another comment\n"
      "[psnr]\n"
      "foreman = a.csv\n"
      "news = b.csv\n");
  CHECK(ini.has("top"));
  CHECK(ini.get_double("system.beta", 0) == 0.1);
  CHECK(ini.get_double("system.missing", 7.5) == 7.5);
  CHECK(ini.get_double_list("system.rates", {}) == std::vector<double>{6e6, 9e6});
  CHECK(ini.get_bool("system.flag", false) == true);
  CHECK(ini.section_keys("psnr") == std::vector<std::string>{"foreman", "news"});
  CHECK(ini.require_string("psnr.foreman") == "a.csv");
  CHECK_THROWS(ini.require_string("psnr.zebra"));
  CHECK_THROWS(IniFile::from_string("no equals sign\n"));
  CHECK_THROWS(IniFile::from_string("[unterminated\n"));
  IniFile neg = IniFile::from_string("n = -3\nb = maybe\n");
  CHECK_THROWS(neg.get_uint("n", 0));
  CHECK_THROWS(neg.get_bool("b", false));
  CHECK(neg.get_int("n", 0) == -3);
}
