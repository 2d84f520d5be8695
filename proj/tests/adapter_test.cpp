#include <gtest/gtest.h>

#include <chrono>

#include "fpeval/adapter.hpp"
#include "test_files.hpp"

namespace fpeval {
namespace {

ExternalSystem system_for(const std::string& exe, double lo = 0.0, double hi = 1.0, double timeout = 5.0) {
  ExternalSystem s;
  s.name = "stub";
  s.executable = exe;
  s.score_min = lo;
  s.score_max = hi;
  s.timeout_seconds = timeout;
  return s;
}

TEST(ParseScore, AcceptsDecimalNumbers) {
  EXPECT_EQ(parse_score_output("0.75\n"), 0.75);
  EXPECT_EQ(parse_score_output("  42 "), 42.0);
  EXPECT_EQ(parse_score_output("-1.5e-2"), -0.015);
  EXPECT_EQ(parse_score_output(".5"), 0.5);
}

TEST(ParseScore, RejectsOtherOutput) {
  EXPECT_FALSE(parse_score_output("abc"));
  EXPECT_FALSE(parse_score_output(""));
  EXPECT_FALSE(parse_score_output("0.5 0.6"));
  EXPECT_FALSE(parse_score_output("score: 0.5"));
  EXPECT_FALSE(parse_score_output("nan"));
}

TEST(External, SuccessfulCall) {
  auto s = system_for(stub::script("ok.sh", "echo 0.75"));
  auto r = match_external(s, "a.txt", "b.txt");
  ASSERT_TRUE(r.ok()) << r.detail;
  EXPECT_DOUBLE_EQ(r.value, 0.75);
  EXPECT_FALSE(r.clamped);
}

TEST(External, ReceivesArguments) {
  auto s = system_for(stub::script("args.sh", "[ \"$1\" = a.txt ] && [ \"$2\" = b.txt ] && echo 1"));
  EXPECT_TRUE(match_external(s, "a.txt", "b.txt").ok());
  EXPECT_FALSE(match_external(s, "b.txt", "a.txt").ok());
}

TEST(External, UnparseableOutput) {
  auto s = system_for(stub::script("abc.sh", "echo abc"));
  auto r = match_external(s, "a", "b");
  EXPECT_EQ(r.status, CallStatus::kUnparseable);
  EXPECT_FALSE(r.ok());
}

TEST(External, NonzeroExit) {
  auto s = system_for(stub::script("fail.sh", "echo 0.5; exit 3"));
  auto r = match_external(s, "a", "b");
  EXPECT_EQ(r.status, CallStatus::kNonzeroExit);
}

TEST(External, MissingExecutable) {
  auto s = system_for("/nonexistent/fpeval-matcher");
  auto r = match_external(s, "a", "b");
  EXPECT_FALSE(r.ok());
}

TEST(External, TimeoutKillsProcessGroup) {
  auto s = system_for(stub::script("slow.sh", "sleep 30 & sleep 30; echo 0.5"), 0.0, 1.0, 0.3);
  const auto t0 = std::chrono::steady_clock::now();
  auto r = match_external(s, "a", "b");
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(r.status, CallStatus::kTimeout);
  EXPECT_LT(elapsed, 5.0);
}

TEST(External, ClampsOutOfRange) {
  auto hi = system_for(stub::script("hi.sh", "echo 1.7"));
  auto r = match_external(hi, "a", "b");
  ASSERT_TRUE(r.ok());
  EXPECT_DOUBLE_EQ(r.value, 1.0);
  EXPECT_DOUBLE_EQ(r.raw, 1.7);
  EXPECT_TRUE(r.clamped);

  auto lo = system_for(stub::script("lo.sh", "echo -20"), 0.0, 100.0);
  auto q = quality_external(lo, "img.png");
  ASSERT_TRUE(q.ok());
  EXPECT_DOUBLE_EQ(q.value, 0.0);
  EXPECT_TRUE(q.clamped);
}

TEST(External, ExtractorWritesTemplate) {
  const auto out = (std::filesystem::temp_directory_path() / "fpeval_stubs" / "out.txt").string();
  auto s = system_for(stub::script("extract.sh", "echo 'MINUTIAE 1 100 100 500' > \"$2\"; echo '10 10 0.5' >> \"$2\""));
  auto r = extract_external(s, "img.png", out);
  ASSERT_EQ(r.status, CallStatus::kOk);
  EXPECT_TRUE(std::filesystem::exists(out));
}

TEST(ExternalSystem, Validation) {
  EXPECT_THROW(system_for("x", 1.0, 1.0).validate(), InvalidArgument);
  EXPECT_THROW(system_for("x", 0.0, 1.0, 0.0).validate(), InvalidArgument);
  EXPECT_THROW(system_for("").validate(), InvalidArgument);
  EXPECT_NO_THROW(system_for("x").validate());
}

TEST(FailureTally, ExceedsAboveTenPercent) {
  FailureTally t;
  for (int i = 0; i < 9; ++i) t.record(true);
  t.record(false);
  EXPECT_DOUBLE_EQ(t.rate(), 0.1);
  EXPECT_FALSE(t.exceeded());
  FailureTally u;
  for (int i = 0; i < 8; ++i) u.record(true);
  u.record(false);
  u.record(false, false);
  EXPECT_TRUE(u.exceeded());
  t += u;
  EXPECT_EQ(t.attempted, 20u);
  EXPECT_EQ(t.failed, 3u);
  EXPECT_TRUE(t.exceeded());
  FailureTally empty;
  EXPECT_FALSE(empty.exceeded());
}

}  // namespace
}  // namespace fpeval
