#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "coachlab/mdp.hpp"

namespace coachlab {

/// A log file that does not match either export format.
class LogParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kCodeVersion = "coachlab 0.1.0";

struct StepRecord {
  std::size_t t = 0;
  std::size_t episode = 0;
  StateId state = 0;
  ActionId action = 0;
  /// Summed feedback delivered this step; empty when none arrived.
  std::optional<double> feedback;
  std::string trace_id;
  /// values_hash of pi(s, .) (or the reward estimates) at decision time.
  std::string policy_hash;
  /// Exact discounted return of the greedy policy from the start state.
  std::optional<double> eval_return;

  bool operator==(const StepRecord&) const = default;
};

struct LogHeader {
  int format_version = 1;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::string code_version{kCodeVersion};
  std::string learner;
  std::size_t steps_requested = 0;
  bool aborted = false;
  std::string abort_reason;

  bool operator==(const LogHeader&) const = default;
};

class SessionLog {
 public:
  SessionLog() = default;
  explicit SessionLog(LogHeader header) : header_(std::move(header)) {}

  const LogHeader& header() const { return header_; }
  LogHeader& mutable_header() { return header_; }
  const std::vector<StepRecord>& records() const { return records_; }

  /// Throws std::invalid_argument unless record.t exceeds the last t.
  void append(StepRecord record);

  /// SHA-256 of the JSONL export.
  std::string digest() const;

  bool operator==(const SessionLog&) const = default;

 private:
  LogHeader header_;
  std::vector<StepRecord> records_;
};

enum class LogFormat { csv, jsonl };
LogFormat parse_log_format(std::string_view name);

/// One JSON object per line: a header object, then one object per step.
std::string to_jsonl(const SessionLog& log);
/// Throws LogParseError.
SessionLog from_jsonl(std::string_view text);

/// `#`-prefixed header lines, a column header row, then one row per step.
/// Missing optionals are empty cells.
std::string to_csv(const SessionLog& log);
SessionLog from_csv(std::string_view text);

/// Throws std::runtime_error on IO failure.
void export_log(const SessionLog& log, const std::string& path, LogFormat format);
/// Format chosen by extension (.csv or .jsonl).
SessionLog import_log(const std::string& path);

}  // namespace coachlab
