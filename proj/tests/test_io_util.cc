#include "parsel/io_util.h"

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"

using namespace parsel;

TEST_CASE("split and join") {
  CHECK(split("a\tb\tc", '\t') == std::vector<std::string>{"a", "b", "c"});
  CHECK(split("a,,b", ',') == std::vector<std::string>{"a", "", "b"});
  CHECK(split("", ',') == std::vector<std::string>{""});
  CHECK(split("x,", ',') == std::vector<std::string>{"x", ""});
  CHECK(join({"a", "b", "c"}, ", ") == "a, b, c");
  CHECK(join({}, ",").empty());
  CHECK(join({"solo"}, ",") == "solo");
}

TEST_CASE("trim") {
  CHECK(trim("  x  ") == "x");
  CHECK(trim("\t a b \r\n") == "a b");
  CHECK(trim("") == "");
  CHECK(trim(" \t ") == "");
  CHECK(trim("none") == "none");
}

TEST_CASE("format_double round-trips") {
  for (double v : {0.0, 1.0, -1.5, 0.1, 1e-12, 3.141592653589793,
                   123456789.123456789, -2.2250738585072014e-308}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("format_fixed") {
  CHECK(format_fixed(1.0, 2) == "1.00");
  CHECK(format_fixed(0.126, 2) == "0.13");
  CHECK(format_fixed(87.654, 2) == "87.65");
  CHECK(format_fixed(-0.5, 3) == "-0.500");
}

TEST_CASE("binary primitives round-trip little-endian") {
  std::stringstream ss;
  write_u32(ss, 0x01020304u);
  write_u64(ss, 0x0102030405060708ull);
  write_f64(ss, -0.1);
  write_string(ss, "hello");
  write_string(ss, "");

  const std::string bytes = ss.str();
  CHECK(static_cast<unsigned char>(bytes[0]) == 0x04);
  CHECK(static_cast<unsigned char>(bytes[3]) == 0x01);
  CHECK(static_cast<unsigned char>(bytes[4]) == 0x08);
  CHECK(static_cast<unsigned char>(bytes[11]) == 0x01);

  CHECK(read_u32(ss) == 0x01020304u);
  CHECK(read_u64(ss) == 0x0102030405060708ull);
  CHECK(read_f64(ss) == -0.1);
  CHECK(read_string(ss) == "hello");
  CHECK(read_string(ss) == "");
}

TEST_CASE("read past end throws") {
  std::stringstream ss;
  write_u32(ss, 7);
  CHECK(read_u32(ss) == 7);
  CHECK_THROWS_AS(read_u32(ss), io_error);
}

TEST_CASE("artifact header check") {
  std::stringstream ok(artifact_header("scores", 2) + "\nrest\n");
  CHECK_NOTHROW(expect_artifact_header(ok, "scores", 2, "f.tsv"));
  std::string rest;
  std::getline(ok, rest);
  CHECK(rest == "rest");

  std::stringstream wrong_kind(artifact_header("labels", 2) + "\n");
  CHECK_THROWS_AS(expect_artifact_header(wrong_kind, "scores", 2, "f.tsv"),
                  io_error);
  std::stringstream wrong_version(artifact_header("scores", 1) + "\n");
  CHECK_THROWS_AS(expect_artifact_header(wrong_version, "scores", 2, "f.tsv"),
                  io_error);
  std::stringstream empty("");
  CHECK_THROWS_AS(expect_artifact_header(empty, "scores", 2, "f.tsv"),
                  io_error);
}

TEST_CASE("kv parsing") {
  const auto kv = parse_kv_text(
      "# comment\n"
      "a = 1\n"
      "\n"
      "b=  two words  \n"
      "a = 3\n");
  CHECK(kv.size() == 2);
  CHECK(kv.at("a") == "3");
  CHECK(kv.at("b") == "two words");
  CHECK_THROWS_AS(parse_kv_text("novalue\n"), io_error);
}

TEST_CASE("kv file round-trip") {
  const auto dir = testutil::scratch_dir("io_util");
  write_text_file(dir + "/a.conf", "x = 1\ny = z\n");
  const auto kv = read_kv_file(dir + "/a.conf");
  CHECK(kv.at("x") == "1");
  CHECK(kv.at("y") == "z");
  CHECK_THROWS_AS(read_kv_file(dir + "/missing.conf"), io_error);
}

TEST_CASE("text file helpers") {
  const auto dir = testutil::scratch_dir("io_text");
  CHECK_FALSE(file_exists(dir + "/t.txt"));
  write_text_file(dir + "/t.txt", "line\n");
  CHECK(file_exists(dir + "/t.txt"));
  CHECK(read_text_file(dir + "/t.txt") == "line\n");
  ensure_dir(dir + "/sub/deep");
  CHECK(file_exists(dir + "/sub/deep"));
}

TEST_CASE("fnv1a64 reference values") {
  // Standard FNV-1a 64-bit test vectors.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
  CHECK(fnv1a64("hpos=NOUN") != fnv1a64("hpos=VERB"));
}

TEST_CASE("mix_seed is deterministic and tag-sensitive") {
  CHECK(mix_seed(1, "parsers") == mix_seed(1, "parsers"));
  CHECK(mix_seed(1, "parsers") != mix_seed(2, "parsers"));
  CHECK(mix_seed(1, "parsers") != mix_seed(1, "mlm"));
  CHECK(mix_seed(0, "") != 0);
}

TEST_CASE("parallel_for covers every index once") {
  for (int jobs : {1, 3, 8}) {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), jobs, [&](size_t i) { hits[i] += 1; });
    for (const auto& h : hits) CHECK(h.load() == 1);
  }
  parallel_for(0, 4, [](size_t) { FAIL("must not run"); });
}

TEST_CASE("parallel_for result independent of job count") {
  std::vector<double> a(100), b(100);
  parallel_for(a.size(), 1, [&](size_t i) { a[i] = std::sqrt(double(i)); });
  parallel_for(b.size(), 7, [&](size_t i) { b[i] = std::sqrt(double(i)); });
  CHECK(a == b);
}

TEST_CASE("parallel_for rethrows worker exceptions") {
  CHECK_THROWS_AS(parallel_for(64, 4,
                               [](size_t i) {
                                 if (i == 13) throw io_error("boom");
                               }),
                  io_error);
  CHECK_THROWS_AS(parallel_for(8, 1, [](size_t) { throw io_error("x"); }),
                  io_error);
}
