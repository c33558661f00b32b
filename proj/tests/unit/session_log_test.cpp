#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "coachlab/session_log.hpp"

using namespace coachlab;
namespace fs = std::filesystem;

namespace {

SessionLog sample_log() {
  LogHeader h;
  h.config_digest = "abc123";
  h.seed = 42;
  h.learner = "coach";
  h.steps_requested = 3;
  SessionLog log(h);
  log.append({0, 0, 3, 1, std::nullopt, "", "00ff00ff00ff00ff", std::nullopt});
  log.append({1, 0, 8, 0, 2.0, "short", "1111222233334444", std::nullopt});
  log.append({2, 1, 3, 3, -0.1 / 3.0, "long", "aaaabbbbccccdddd", 4.608906009999999});
  return log;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path = fs::temp_directory_path() / ("coachlab_log_test_" + std::to_string(::getpid()));
  TempDir() { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(SessionLog, AppendRequiresIncreasingT) {
  SessionLog log;
  log.append({5, 0, 0, 0, std::nullopt, "", "", std::nullopt});
  EXPECT_THROW(log.append({5, 0, 0, 0, std::nullopt, "", "", std::nullopt}), std::invalid_argument);
  EXPECT_THROW(log.append({4, 0, 0, 0, std::nullopt, "", "", std::nullopt}), std::invalid_argument);
  EXPECT_EQ(log.records().size(), 1u);
}

TEST(SessionLog, JsonlRoundTrip) {
  const SessionLog log = sample_log();
  EXPECT_EQ(from_jsonl(to_jsonl(log)), log);
}

TEST(SessionLog, CsvRoundTripIsExact) {
  const SessionLog log = sample_log();
  const std::string csv = to_csv(log);
  EXPECT_NE(csv.find("t,episode,state,action,feedback,trace_id,policy_hash,eval_return"), std::string::npos);
  EXPECT_EQ(from_csv(csv), log);
}

TEST(SessionLog, AbortFlagSurvivesRoundTrip) {
  SessionLog log = sample_log();
  log.mutable_header().aborted = true;
  log.mutable_header().abort_reason = "trainer fault: \"x\", y";
  EXPECT_EQ(from_jsonl(to_jsonl(log)), log);
  EXPECT_EQ(from_csv(to_csv(log)), log);
}

TEST(SessionLog, EmptyLogExportsHeaderOnly) {
  const SessionLog empty(LogHeader{});
  const std::string jsonl = to_jsonl(empty);
  EXPECT_EQ(std::count(jsonl.begin(), jsonl.end(), '\n'), 1);
  EXPECT_EQ(from_jsonl(jsonl), empty);
  EXPECT_EQ(from_csv(to_csv(empty)), empty);
}

TEST(SessionLog, ExportsAreByteStable) {
  TempDir dir;
  const SessionLog log = sample_log();
  for (auto [name, fmt] : {std::pair{"a.jsonl", LogFormat::jsonl}, {"a.csv", LogFormat::csv}}) {
    export_log(log, (dir.path / name).string(), fmt);
    const std::string first = read_file(dir.path / name);
    export_log(log, (dir.path / name).string(), fmt);
    EXPECT_EQ(read_file(dir.path / name), first);
    EXPECT_EQ(import_log((dir.path / name).string()), log);
  }
}

TEST(SessionLog, DigestIsSha256OfJsonl) {
  const SessionLog log = sample_log();
  EXPECT_EQ(log.digest().size(), 64u);
  SessionLog other = log;
  other.mutable_header().seed = 43;
  EXPECT_NE(other.digest(), log.digest());
}

TEST(SessionLog, IoAndParseFailuresSurface) {
  EXPECT_THROW(export_log(sample_log(), "/nonexistent/dir/x.jsonl", LogFormat::jsonl), std::runtime_error);
  EXPECT_THROW(import_log("/nonexistent/x.jsonl"), std::runtime_error);
  EXPECT_THROW(from_jsonl("{not json"), LogParseError);
  EXPECT_THROW(from_jsonl(R"({"type":"step"})"), LogParseError);
  EXPECT_THROW(from_csv("t,episode\n1,2\n"), LogParseError);
  EXPECT_THROW(parse_log_format("xml"), std::invalid_argument);
}
