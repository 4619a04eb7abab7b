#include <gtest/gtest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dcl/trace_io.hpp"

namespace {

using dcl::TraceRecord;
using dcl::TrainTrace;
using dcl::Vec;

class TraceIoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("dcl_trace_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write_lines(const std::string& p, const std::vector<std::string>& lines) {
    std::ofstream out(p);
    for (const auto& l : lines) out << l << '\n';
  }

  std::filesystem::path dir_;
};

TraceRecord make_record(long t, int epoch, Vec w, Vec g, Vec gt, double loss, double lr,
                        bool corrected) {
  TraceRecord r;
  r.t = t;
  r.epoch = epoch;
  r.w = std::move(w);
  r.g = std::move(g);
  r.g_tilde = std::move(gt);
  r.loss = loss;
  r.lr = lr;
  r.corrected = corrected;
  return r;
}

TEST_F(TraceIoTest, RoundTripsRecordsBitwise) {
  TrainTrace tr;
  const double pi = 3.14159265358979323846;
  tr.records.push_back(make_record(0, 1, {1e308, -1e-308}, {pi, 0.1}, {pi, 0.0}, 1.0 / 3.0,
                                   0.0123456789012345678, false));
  tr.records.push_back(
      make_record(7, 2, {-2.5, 4.0}, {0.3, -0.7}, {0.25, -0.7}, 9.99e-99, 1e-12, true));
  nlohmann::json cfg;
  cfg["optimizer"] = "sgd";
  cfg["lr"] = 0.05;

  const std::string p = path("roundtrip.trace.jsonl");
  dcl::write_trace(p, cfg, tr);
  const auto tf = dcl::read_trace(p);

  EXPECT_EQ(tf.config["optimizer"], "sgd");
  EXPECT_DOUBLE_EQ(tf.config["lr"].get<double>(), 0.05);
  EXPECT_FALSE(tf.trace.diverged);
  ASSERT_EQ(tf.trace.records.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& a = tr.records[i];
    const auto& b = tf.trace.records[i];
    EXPECT_EQ(a.t, b.t);
    EXPECT_EQ(a.epoch, b.epoch);
    EXPECT_EQ(a.w, b.w);
    EXPECT_EQ(a.g, b.g);
    EXPECT_EQ(a.g_tilde, b.g_tilde);
    EXPECT_EQ(a.loss, b.loss);
    EXPECT_EQ(a.lr, b.lr);
    EXPECT_EQ(a.corrected, b.corrected);
  }
}

TEST_F(TraceIoTest, DivergedFlagSurvives) {
  TrainTrace tr;
  tr.diverged = true;
  tr.records.push_back(make_record(0, 1, {1.0}, {2.0}, {2.0}, 0.5, 0.1, false));
  const std::string p = path("diverged.trace.jsonl");
  dcl::write_trace(p, nlohmann::json::object(), tr);
  EXPECT_TRUE(dcl::read_trace(p).trace.diverged);
}

TEST_F(TraceIoTest, EmptyTraceKeepsHeaderOnly) {
  const std::string p = path("empty.trace.jsonl");
  dcl::write_trace(p, nlohmann::json::object(), TrainTrace{});
  const auto tf = dcl::read_trace(p);
  EXPECT_TRUE(tf.trace.records.empty());
}

TEST_F(TraceIoTest, MalformedLineReportsItsNumber) {
  const std::string p = path("bad3.trace.jsonl");
  write_lines(p, {R"({"schema":1,"config":{},"diverged":false})",
                  R"({"t":0,"epoch":1,"w":[1.0],"g":[1.0],"g_tilde":[1.0],"loss":0.5,"lr":0.1,"corrected":false})",
                  R"(this is not json)"});
  try {
    dcl::read_trace(p);
    FAIL() << "expected ParseError";
  } catch (const dcl::ParseError& e) {
    EXPECT_EQ(e.line, 3u);
    EXPECT_NE(std::string(e.what()).find("(line 3)"), std::string::npos);
  }
}

TEST_F(TraceIoTest, WrongSchemaRejected) {
  const std::string p = path("schema.trace.jsonl");
  write_lines(p, {R"({"schema":2,"config":{},"diverged":false})"});
  try {
    dcl::read_trace(p);
    FAIL() << "expected ParseError";
  } catch (const dcl::ParseError& e) {
    EXPECT_EQ(e.line, 1u);
  }
}

TEST_F(TraceIoTest, NonIncreasingStepRejected) {
  const std::string p = path("order.trace.jsonl");
  const std::string rec =
      R"({"t":5,"epoch":1,"w":[1.0],"g":[1.0],"g_tilde":[1.0],"loss":0.5,"lr":0.1,"corrected":false})";
  write_lines(p, {R"({"schema":1,"config":{},"diverged":false})", rec, rec});
  try {
    dcl::read_trace(p);
    FAIL() << "expected ParseError";
  } catch (const dcl::ParseError& e) {
    EXPECT_EQ(e.line, 3u);
  }
}

TEST_F(TraceIoTest, MissingKeyRejected) {
  const std::string p = path("missing.trace.jsonl");
  write_lines(p, {R"({"schema":1,"config":{},"diverged":false})",
                  R"({"t":0,"epoch":1,"w":[1.0],"g":[1.0],"loss":0.5,"lr":0.1,"corrected":false})"});
  try {
    dcl::read_trace(p);
    FAIL() << "expected ParseError";
  } catch (const dcl::ParseError& e) {
    EXPECT_EQ(e.line, 2u);
  }
}

TEST_F(TraceIoTest, LengthMismatchRejected) {
  const std::string p = path("lens.trace.jsonl");
  write_lines(p, {R"({"schema":1,"config":{},"diverged":false})",
                  R"({"t":0,"epoch":1,"w":[1.0,2.0],"g":[1.0],"g_tilde":[1.0,2.0],"loss":0.5,"lr":0.1,"corrected":false})"});
  try {
    dcl::read_trace(p);
    FAIL() << "expected ParseError";
  } catch (const dcl::ParseError& e) {
    EXPECT_EQ(e.line, 2u);
  }
}

TEST_F(TraceIoTest, EmptyFileRejectedAtLineOne) {
  const std::string p = path("void.trace.jsonl");
  std::ofstream(p).flush();
  try {
    dcl::read_trace(p);
    FAIL() << "expected ParseError";
  } catch (const dcl::ParseError& e) {
    EXPECT_EQ(e.line, 1u);
  }
}

TEST_F(TraceIoTest, MissingFileThrowsRuntimeError) {
  EXPECT_THROW(dcl::read_trace(path("no_such_file.jsonl")), std::runtime_error);
}

TEST(Fmt, G17RoundTripsDoubles) {
  // strtod instead of stod: libstdc++'s stod throws out_of_range on subnormals.
  for (double x : {0.1, 1.0 / 3.0, 3.14159265358979323846, 1e308, 5e-324, -7.25, 0.0}) {
    EXPECT_EQ(std::strtod(dcl::fmt_g17(x).c_str(), nullptr), x);
  }
  EXPECT_EQ(dcl::fmt_g17(2.0), "2");
  EXPECT_EQ(dcl::fmt_g17(0.5), "0.5");
}

TEST(Csv, EscapeQuotesOnlyWhenNeeded) {
  EXPECT_EQ(dcl::csv_escape("plain"), "plain");
  EXPECT_EQ(dcl::csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(dcl::csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(dcl::csv_escape("line\nbreak"), "\"line\nbreak\"");
}

TEST(Csv, RowJoinsWithCommas) {
  std::ostringstream out;
  dcl::csv_row(out, {"a", "b,c", "3"});
  EXPECT_EQ(out.str(), "a,\"b,c\",3\n");
}

}  // namespace
