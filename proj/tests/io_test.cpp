#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fpeval/io/image_io.hpp"
#include "fpeval/io/manifest.hpp"
#include "fpeval/io/report.hpp"
#include "fpeval/io/template_io.hpp"
#include "oracles.hpp"
#include "test_files.hpp"

namespace fpeval::io {
namespace {

ParseError parse_error(const std::string& text) {
  try {
    parse_template(text);
  } catch (const ParseError& e) {
    return e;
  }
  ADD_FAILURE() << "no parse error for:\n" << text;
  return ParseError(ParseError::Kind::kIo, 0, "none");
}

TEST(TemplateFormat, HeaderOnlyIsEmptySet) {
  const auto s = parse_template("MINUTIAE 0 300 400 500\n");
  EXPECT_TRUE(s.empty());
  EXPECT_EQ(s.width(), 300);
  EXPECT_EQ(s.height(), 400);
  EXPECT_EQ(s.resolution(), 500);
}

TEST(TemplateFormat, ParsesMinutiaeCommentsAndQuality) {
  const auto s = parse_template(
      "# annotated by hand\n"
      "MINUTIAE 2 100 80 500\n"
      "\n"
      "10 20 1.5\n"
      "# second one\n"
      "99 79 0 0.25\n");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].x, 10);
  EXPECT_EQ(s[0].y, 20);
  EXPECT_EQ(s[0].theta, 1.5);
  EXPECT_FALSE(s[0].quality);
  EXPECT_EQ(s[1].x, 99);
  EXPECT_EQ(*s[1].quality, 0.25);
}

TEST(TemplateFormat, WrapsAngles) {
  const auto s = parse_template("MINUTIAE 2 50 50 500\n1 1 -1\n2 2 7\n");
  EXPECT_NEAR(s[0].theta, kTwoPi - 1.0, 1e-12);
  EXPECT_NEAR(s[1].theta, 7.0 - kTwoPi, 1e-12);
}

TEST(TemplateFormat, CountMismatch) {
  auto e = parse_error("MINUTIAE 2 50 50 500\n1 1 0\n2 2 0\n3 3 0\n");
  EXPECT_EQ(e.kind(), ParseError::Kind::kCountMismatch);
  EXPECT_EQ(e.line(), 4u);
  e = parse_error("MINUTIAE 3 50 50 500\n1 1 0\n");
  EXPECT_EQ(e.kind(), ParseError::Kind::kCountMismatch);
  EXPECT_EQ(e.line(), 1u);
}

TEST(TemplateFormat, MalformedHeader) {
  for (const char* text : {"", "MINUTIA 0 10 10 500\n", "MINUTIAE 0 10 10\n", "MINUTIAE -1 10 10 500\n",
                           "MINUTIAE 0 0 10 500\n", "MINUTIAE x 10 10 500\n", "# only a comment\n"}) {
    const auto e = parse_error(text);
    EXPECT_EQ(e.kind(), ParseError::Kind::kMalformedHeader) << text;
  }
}

TEST(TemplateFormat, MalformedLine) {
  for (const char* line : {"1 1", "1 1 0 0.5 9", "1.5 1 0", "a 1 0", "1 1 nan", "1 1 0 1.5"}) {
    const auto e = parse_error(std::string("MINUTIAE 1 50 50 500\n") + line + "\n");
    EXPECT_EQ(e.kind(), ParseError::Kind::kMalformedLine) << line;
    EXPECT_EQ(e.line(), 2u) << line;
  }
}

TEST(TemplateFormat, OutOfBoundsCarriesLineNumber) {
  const auto e = parse_error("MINUTIAE 3 50 40 500\n# c\n1 1 0\n5 5 0\n50 3 0\n");
  EXPECT_EQ(e.kind(), ParseError::Kind::kOutOfBounds);
  EXPECT_EQ(e.line(), 5u);
  EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos);
  EXPECT_EQ(parse_error("MINUTIAE 1 50 40 500\n3 40 0\n").kind(), ParseError::Kind::kOutOfBounds);
  EXPECT_EQ(parse_error("MINUTIAE 1 50 40 500\n-1 4 0\n").kind(), ParseError::Kind::kOutOfBounds);
}

TEST(TemplateFormat, AcceptsCrLf) {
  const auto s = parse_template("MINUTIAE 1 50 40 500\r\n3 4 0.5\r\n");
  EXPECT_EQ(s.size(), 1u);
}

TEST(TemplateFormat, RoundTripIsIdentity) {
  std::mt19937_64 rng(17);
  const auto dir = stub::scratch("template_round_trip");
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<int> px(0, 299);
    std::uniform_real_distribution<double> th(0.0, kTwoPi), q(0.0, 1.0);
    std::vector<Minutia> ms;
    const int n = trial % 40;
    for (int i = 0; i < n; ++i) {
      Minutia m(px(rng), px(rng), th(rng));
      if (i % 3 == 0) m.quality = q(rng);
      ms.push_back(m);
    }
    const MinutiaeSet s(std::move(ms), 300, 300, 500 + trial % 2 * 500);
    const auto path = (dir / ("t" + std::to_string(trial) + ".txt")).string();
    save_template(s, path);
    const auto back = load_template(path);
    ASSERT_EQ(back, s) << "trial " << trial;
    ASSERT_EQ(back.resolution(), s.resolution());
  }
}

TEST(TemplateFormat, SaveRoundsAndDropsOutside) {
  const auto s = MinutiaeSet::relaxed({Minutia(1.4, 2.6, 0.1), Minutia(-3, 5, 0.2), Minutia(9.6, 3, 0.3)}, 10, 10);
  const auto back = parse_template(format_template(s));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].x, 1);
  EXPECT_EQ(back[0].y, 3);
}

TEST(TemplateFormat, MissingFile) {
  try {
    load_template("/nonexistent/t.txt");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::kIo);
  }
}

TEST(TemplateFormat, LoadReportsPath) {
  const auto dir = stub::scratch("template_bad");
  stub::write_file(dir / "bad.txt", "MINUTIAE 1 5 5 500\n9 9 0\n");
  try {
    load_template((dir / "bad.txt").string());
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::kOutOfBounds);
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("bad.txt"), std::string::npos);
  }
}

TEST(Images, PngRoundTrip) {
  const auto dir = stub::scratch("png");
  const auto img = oracle::noise_image(37, 23, 5);
  save_png(img, (dir / "a.png").string());
  const auto back = load_image((dir / "a.png").string(), 1000);
  EXPECT_EQ(back.width(), 37);
  EXPECT_EQ(back.height(), 23);
  EXPECT_EQ(back.resolution(), 1000);
  for (int y = 0; y < 23; ++y)
    for (int x = 0; x < 37; ++x) ASSERT_EQ(back.at(x, y), img.at(x, y));
}

TEST(Images, PgmBinaryAndAscii) {
  const auto dir = stub::scratch("pgm");
  const auto img = oracle::noise_image(11, 7, 9);
  save_pgm(img, (dir / "a.pgm").string());
  const auto back = load_image((dir / "a.pgm").string());
  for (int y = 0; y < 7; ++y)
    for (int x = 0; x < 11; ++x) ASSERT_EQ(back.at(x, y), img.at(x, y));

  stub::write_file(dir / "b.pgm", "P2\n# comment\n3 2\n255\n0 1 2\n3 4 255\n");
  const auto ascii = load_image((dir / "b.pgm").string());
  EXPECT_EQ(ascii.width(), 3);
  EXPECT_EQ(ascii.at(2, 1), 255);
  EXPECT_EQ(ascii.at(1, 0), 1);
}

TEST(Images, Errors) {
  const auto dir = stub::scratch("bad_images");
  stub::write_file(dir / "x.pgm", "P5\n4 4\n255\nab");
  EXPECT_THROW(load_image((dir / "x.pgm").string()), DataError);
  stub::write_file(dir / "y.png", "not a png");
  EXPECT_THROW(load_image((dir / "y.png").string()), DataError);
  EXPECT_THROW(load_image((dir / "missing.pgm").string()), DataError);
}

class ManifestTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = stub::scratch(::testing::UnitTest::GetInstance()->current_test_info()->name());
    stub::write_file(dir_ / "data/a.txt", "MINUTIAE 0 10 10 500\n");
    stub::write_file(dir_ / "data/b.txt", "MINUTIAE 0 10 10 500\n");
    stub::script("manifest_matcher.sh", "echo 0.5");
  }

  Json base() const {
    return Json::parse(R"({
      "kind": "blackbox",
      "dataset_root": "data",
      "seed": 11,
      "records": [
        {"id": "r2", "finger": "f1", "condition": "dry_finger", "template": "b.txt",
         "metadata": {"moisture_percent": 8.5}},
        {"id": "r1", "finger": "f1", "condition": "normal", "template": "a.txt"}
      ],
      "perturbations": [{"kind": "rotate_global", "degrees": 10}, {"kind": "occlude_block", "box_side": 64}],
      "systems": [{"name": "baseline", "role": "matcher", "builtin": "baseline"}]
    })");
  }

  RunManifest parse(const Json& j) const { return manifest_from_json(j, dir_); }

  fs::path dir_;
};

TEST_F(ManifestTest, ParsesAndResolvesPaths) {
  const auto m = parse(base());
  EXPECT_EQ(m.kind, EvalKind::kBlackbox);
  EXPECT_EQ(m.seed, 11u);
  EXPECT_EQ(m.resolution, 500);
  EXPECT_EQ(m.far, 0.001);
  ASSERT_EQ(m.records.size(), 2u);
  EXPECT_EQ(m.records[0].id, "r1");  // sorted by id
  EXPECT_EQ(m.records[1].condition(), Condition::kDryFinger);
  EXPECT_EQ(*m.records[1].capture.metadata.moisture_percent, 8.5);
  EXPECT_EQ(*m.records[0].template_path, (dir_ / "data/a.txt").lexically_normal());
  EXPECT_EQ(m.output_dir, (dir_ / "out").lexically_normal());
  ASSERT_EQ(m.perturbations.size(), 2u);
  EXPECT_EQ(m.perturbations[1].box_side, 64);
  ASSERT_EQ(m.systems.size(), 1u);
  EXPECT_TRUE(m.systems[0].is_builtin());
}

TEST_F(ManifestTest, SerializationRoundTrip) {
  auto j = base();
  j["systems"].push_back({{"name", "ext"}, {"role", "matcher"}, {"executable", stub::script("manifest_matcher.sh", "echo 0.5")},
                          {"score_min", 0}, {"score_max", 100}, {"timeout", 2.5}});
  const auto m = parse(j);
  const auto again = parse(to_json(m, dir_));
  EXPECT_EQ(to_json(again, dir_), to_json(m, dir_));
  EXPECT_EQ(again.systems[1].system.score_max, 100.0);
  EXPECT_EQ(again.systems[1].system.timeout_seconds, 2.5);
}

TEST_F(ManifestTest, RejectsInvalidDocuments) {
  auto expect_data_error = [&](Json j, const char* what) { EXPECT_THROW(parse(j), DataError) << what; };
  Json j = base();
  j["records"][0]["finger"] = "";
  expect_data_error(j, "empty finger");
  j = base();
  j["records"][0]["template"] = "missing.txt";
  expect_data_error(j, "missing file");
  j = base();
  j["records"][1]["id"] = "r2";
  expect_data_error(j, "duplicate id");
  j = base();
  j["records"][0]["condition"] = "sweaty";
  expect_data_error(j, "unknown condition");
  j = base();
  j["records"][0]["metadata"]["moisture_percent"] = -1;
  expect_data_error(j, "negative metadata");
  j = base();
  j["kind"] = "everything";
  expect_data_error(j, "unknown kind");
  j = base();
  j.erase("kind");
  expect_data_error(j, "no kind");
  j = base();
  j["systems"][0]["builtin"] = "magic";
  expect_data_error(j, "unknown builtin");
  j = base();
  j["systems"][0]["executable"] = "x";
  expect_data_error(j, "builtin and executable");
  j = base();
  j["systems"].push_back(j["systems"][0]);
  expect_data_error(j, "duplicate system");
  j = base();
  j["systems"][0]["extractor"] = "nobody";
  expect_data_error(j, "unknown extractor");
  j = base();
  j["perturbations"][0]["kind"] = "melt";
  expect_data_error(j, "unknown perturbation");
  j = base();
  j["perturbations"][0]["box_side"] = -4;
  expect_data_error(j, "negative side");
  j = base();
  j["seed"] = "eleven";
  expect_data_error(j, "wrong type");
  j = base();
  j["dataset_root"] = "nowhere";
  expect_data_error(j, "missing root");
}

TEST_F(ManifestTest, LoadFromFile) {
  stub::write_file(dir_ / "m.json", base().dump());
  const auto m = load_manifest(dir_ / "m.json");
  EXPECT_EQ(m.records.size(), 2u);
  stub::write_file(dir_ / "bad.json", "{ not json");
  EXPECT_THROW(load_manifest(dir_ / "bad.json"), DataError);
  EXPECT_THROW(load_manifest(dir_ / "none.json"), DataError);
}

TEST(Report, CsvEscapingAndNumbers) {
  Table t{"t", {"name", "value"}, {}};
  t.add_row({"plain", cell(0.1)});
  t.add_row({"with, comma", cell(std::nan(""))});
  t.add_row({"with \"quote\"", cell(std::optional<double>{})});
  EXPECT_EQ(to_csv(t), "name,value\nplain,0.1\n\"with, comma\",nan\n\"with \"\"quote\"\"\",\n");
  EXPECT_THROW(t.add_row({"short"}), InvalidArgument);
}

TEST(Report, WritesDeterministicFiles) {
  const auto dir = stub::scratch("report");
  Report r;
  r.kind = "demo";
  r.document["zeta"] = 1;
  r.document["alpha"] = number(std::numeric_limits<double>::infinity());
  r.tables.push_back({"grid", {"row", "col"}, {{"a", "1"}}});
  const auto paths = r.write(dir);
  ASSERT_EQ(paths.size(), 2u);
  const auto json = stub::read_file(dir / "demo_report.json");
  EXPECT_LT(json.find("\"alpha\": null"), json.find("\"zeta\""));
  EXPECT_EQ(stub::read_file(dir / "grid.csv"), "row,col\na,1\n");
  r.write(dir);
  EXPECT_EQ(stub::read_file(dir / "demo_report.json"), json);
}

}  // namespace
}  // namespace fpeval::io
