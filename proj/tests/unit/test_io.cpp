#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>

#include "helpers.hpp"
#include "tupi/error.hpp"
#include "tupi/io.hpp"

using namespace tupi;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "tupi_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write(const std::string& name, const std::string& text) {
  const fs::path p = scratch(name);
  std::ofstream(p) << text;
  return p;
}

std::string error_message(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("features without a header") {
    const FeatureSet f = ingest_features(write("plain.csv", "1,2\n3,4\n5,6\n"));
    CHECK(f.rows() == 3);
    CHECK(f.dims() == 2);
    CHECK(f.values(2, 1) == 6.0);
  }

  TEST_CASE("a header line is skipped") {
    const FeatureSet f = ingest_features(write("header.csv", "a,b\n1,2\n3,4\n"));
    CHECK(f.rows() == 2);
    CHECK(f.values(0, 0) == 1.0);
    const Predictions p = ingest_predictions(write("preds.csv", "score\n0.5\n-1e-3\n"));
    CHECK(p.size() == 2);
    CHECK(p(1) == -1e-3);
  }

  TEST_CASE("bad cells name the offending line") {
    const fs::path nan = write("nan.csv", "1,2\n3,NaN\n5,6\n");
    CHECK_THROWS_AS(ingest_features(nan), ParseError);
    CHECK(error_message([&] { ingest_features(nan); }).find(":2") != std::string::npos);

    const fs::path ragged = write("ragged.csv", "1,2\n3\n");
    CHECK_THROWS_AS(ingest_features(ragged), ParseError);
    CHECK(error_message([&] { ingest_features(ragged); }).find(":2") != std::string::npos);

    CHECK_THROWS_AS(ingest_features(write("word.csv", "1,2\n3,x\n")), ParseError);
    CHECK_THROWS_AS(ingest_features(write("inf.csv", "1,inf\n")), ParseError);
    CHECK_THROWS_AS(ingest_features(write("empty.csv", "")), ParseError);
    CHECK_THROWS_AS(ingest_predictions(write("wide.csv", "1,2\n3,4\n")), ParseError);
  }

  TEST_CASE("missing files are io errors") {
    CHECK_THROWS_AS(ingest_features("/nonexistent/dir/f.csv"), IoError);
    CHECK_THROWS_AS(ingest_pairs("/nonexistent/p.csv"), IoError);
    CHECK(error_message([] { read_text("/nonexistent/x.json"); }).find("/nonexistent/x.json") !=
          std::string::npos);
  }

  TEST_CASE("pairs") {
    const RankPairs p = ingest_pairs(write("pairs.csv", "q,r\n0,1\n2,0\n"), 3);
    REQUIRE(p.size() == 2);
    CHECK(p[1] == RankPair{2, 0});
    CHECK_THROWS_AS(ingest_pairs(write("self.csv", "1,1\n"), 3), ParseError);
    CHECK_THROWS_AS(ingest_pairs(write("range.csv", "0,1\n0,3\n"), 3), ParseError);
    CHECK(error_message([&] { ingest_pairs(scratch("range.csv"), 3); }).find(":2") !=
          std::string::npos);
    CHECK_THROWS_AS(ingest_pairs(write("dup.csv", "0,1\n0,1\n"), 3), ParseError);
    CHECK_THROWS_AS(ingest_pairs(write("neg.csv", "-1,1\n"), 3), ParseError);
    CHECK_NOTHROW(ingest_pairs(scratch("range.csv")));
  }

  TEST_CASE("written files read back exactly") {
    std::mt19937_64 rng(1);
    const FeatureSet f("f", testing::random_matrix(rng, 7, 3, 1e3));
    write_features(scratch("nested/round.csv"), f);
    CHECK(ingest_features(scratch("nested/round.csv")).values == f.values);

    const Predictions p = testing::random_vector(rng, 9, 1e-7);
    write_predictions(scratch("round_p.csv"), p);
    CHECK(ingest_predictions(scratch("round_p.csv")) == p);

    const RankPairs pairs = {{3, 1}, {0, 2}};
    write_pairs(scratch("round_pairs.csv"), pairs);
    CHECK(ingest_pairs(scratch("round_pairs.csv"), 4) == pairs);

    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  }
}
