#include "mmspace/io.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mmspace;
using oracle::R;

namespace {

std::string data(const std::string& name) { return std::string(MMSPACE_DATA_DIR) + "/" + name; }

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Io, SpaceRoundTripsThroughText) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto s = sample_mm_space(seed, 6);
    auto text = io::dump(io::to_json(s));
    EXPECT_EQ(io::space_from_json(io::json::parse(text)), s);
  }
}

TEST(Io, ExcursionRoundTripsThroughText) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 40; ++i) {
    auto kind = i % 2 ? excursion_kind::piecewise_linear : excursion_kind::piecewise_constant;
    auto h = random_excursion(rng, kind);
    EXPECT_EQ(io::excursion_from_json(io::json::parse(io::dump(io::to_json(h)))), h);
  }
  auto h3 = grid_indicator(3);
  EXPECT_EQ(io::excursion_from_json(io::to_json(h3)), h3);
}

TEST(Io, MeasureRoundTripAndBareArray) {
  std::vector<Rational> w{R("1/3"), R("2/3")};
  EXPECT_EQ(io::measure_from_json(io::measure_json(w)), w);
  EXPECT_EQ(io::measure_from_json(io::json::parse(R"(["1/3", 0.6666666666666666])"))[0], R("1/3"));
}

TEST(Io, ReadsDecimalsAndNumbersExactly) {
  EXPECT_EQ(io::read_rational(io::json::parse("0.1"), "x"), R("1/10"));
  EXPECT_EQ(io::read_rational(io::json::parse("3"), "x"), Rational(3));
  EXPECT_EQ(io::read_rational(io::json::parse("\"0.25\""), "x"), R("1/4"));
  EXPECT_EQ(io::read_rational(io::json::parse("\"-2/6\""), "x"), R("-1/3"));
  EXPECT_THROW(io::read_rational(io::json::parse("true"), "x"), io::format_error);
}

TEST(Io, ValueJsonAnnotatesRounding) {
  auto v = io::value_json(R("1/3"));
  EXPECT_EQ(v["exact"], "1/3");
  EXPECT_EQ(v["decimal"], "0.333333333333");
  EXPECT_EQ(v["rounding"], "half-even, 12 places");
}

TEST(Io, SampleDataFilesLoad) {
  auto two = io::space_from_json(io::read_json_file(data("two_point.json")));
  EXPECT_TRUE(validate(two).empty());
  EXPECT_EQ(two.weights, (std::vector<Rational>{R("3/4"), R("1/4")}));
  auto path = io::space_from_json(io::read_json_file(data("path4.json")));
  EXPECT_TRUE(validate(path).empty());
  auto tent_file = io::excursion_from_json(io::read_json_file(data("tent.json")));
  EXPECT_EQ(tent_file, tent());
  auto h3 = io::excursion_from_json(io::read_json_file(data("h3.json")));
  EXPECT_EQ(h3, grid_indicator(3));
  auto step = io::excursion_from_json(io::read_json_file(data("step.json")));
  EXPECT_EQ(eval(step, R("1/2")), R("1/2"));
  EXPECT_EQ(io::measure_from_json(io::read_json_file(data("mu.json"))), (std::vector<Rational>{R("9/10"), R("1/10")}));
}

TEST(Io, BadTriangleLoadsButFailsValidation) {
  auto s = io::space_from_json(io::read_json_file(data("bad_triangle.json")));
  auto v = validate(s);
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v[0].axiom, "triangle");
}

TEST(Io, MalformedJsonReportsByteOffset) {
  auto msg = error_of([] { io::read_json_file(data("malformed.json")); });
  EXPECT_NE(msg.find("malformed JSON at byte"), std::string::npos) << msg;
  auto missing = error_of([] { io::read_json_file(data("no_such_file.json")); });
  EXPECT_NE(missing.find("cannot open"), std::string::npos);
}

TEST(Io, ErrorsNameTheField) {
  auto doc = io::to_json(sample_mm_space(3, 3));
  auto no_weights = doc;
  no_weights.erase("weights");
  EXPECT_NE(error_of([&] { io::space_from_json(no_weights); }).find("weights"), std::string::npos);

  auto bad_entry = doc;
  bad_entry["dist"][0][0] = "x/y";
  EXPECT_NE(error_of([&] { io::space_from_json(bad_entry); }).find("space.dist[0][0]"), std::string::npos);

  auto wrong_format = doc;
  wrong_format["format"] = "mmspace/2";
  EXPECT_NE(error_of([&] { io::space_from_json(wrong_format); }).find("space.format"), std::string::npos);

  auto exc = io::to_json(tent());
  exc["values"].push_back("1");
  EXPECT_NE(error_of([&] { io::excursion_from_json(exc); }).find("excursion.values"), std::string::npos);

  auto kind = io::to_json(tent());
  kind["kind"] = "spline";
  EXPECT_NE(error_of([&] { io::excursion_from_json(kind); }).find("excursion.kind"), std::string::npos);

  auto lifted = io::to_json(tent());
  lifted["values"][0] = "1";
  EXPECT_NE(error_of([&] { io::excursion_from_json(lifted); }).find("h(0)"), std::string::npos);
}

TEST(Io, PairsRoundTripAndRejectNegatives) {
  std::vector<point_pair> k{{0, 1}, {2, 0}};
  EXPECT_EQ(io::pairs_from_json(io::pairs_json(k)), k);
  EXPECT_THROW(io::pairs_from_json(io::json::parse("[[0, -1]]")), io::format_error);
  EXPECT_THROW(io::pairs_from_json(io::json::parse("[[0]]")), io::format_error);
}

TEST(Io, DumpIsStable) {
  auto s = sample_mm_space(12, 5);
  EXPECT_EQ(io::dump(io::to_json(s)), io::dump(io::to_json(io::space_from_json(io::to_json(s)))));
}
