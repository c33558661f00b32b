#include "coachlab/session_log.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "coachlab/digest.hpp"

namespace coachlab {

using nlohmann::json;

namespace {

constexpr std::string_view kCsvColumns = "t,episode,state,action,feedback,trace_id,policy_hash,eval_return";

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

void SessionLog::append(StepRecord record) {
  if (!records_.empty() && record.t <= records_.back().t) throw std::invalid_argument("step ids must strictly increase");
  records_.push_back(std::move(record));
}

std::string SessionLog::digest() const { return sha256_hex(to_jsonl(*this)); }

LogFormat parse_log_format(std::string_view name) {
  if (name == "csv") return LogFormat::csv;
  if (name == "jsonl") return LogFormat::jsonl;
  throw std::invalid_argument("unknown log format '" + std::string(name) + "'");
}

std::string to_jsonl(const SessionLog& log) {
  const LogHeader& h = log.header();
  std::string out = json{{"type", "header"},
                         {"format_version", h.format_version},
                         {"config_digest", h.config_digest},
                         {"seed", h.seed},
                         {"code_version", h.code_version},
                         {"learner", h.learner},
                         {"steps_requested", h.steps_requested},
                         {"aborted", h.aborted},
                         {"abort_reason", h.abort_reason}}
                        .dump();
  out.push_back('\n');
  for (const StepRecord& r : log.records()) {
    out += json{{"type", "step"},
                {"t", r.t},
                {"episode", r.episode},
                {"state", r.state},
                {"action", r.action},
                {"feedback", optional_json(r.feedback)},
                {"trace_id", r.trace_id},
                {"policy_hash", r.policy_hash},
                {"eval_return", optional_json(r.eval_return)}}
               .dump();
    out.push_back('\n');
  }
  return out;
}

static SessionLog parse_jsonl(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty session log");
  const json jh = json::parse(line);
  if (jh.at("type") != "header") throw std::invalid_argument("session log must start with a header");
  LogHeader h;
  h.format_version = jh.at("format_version").get<int>();
  h.config_digest = jh.at("config_digest").get<std::string>();
  h.seed = jh.at("seed").get<std::uint64_t>();
  h.code_version = jh.at("code_version").get<std::string>();
  h.learner = jh.at("learner").get<std::string>();
  h.steps_requested = jh.at("steps_requested").get<std::size_t>();
  h.aborted = jh.at("aborted").get<bool>();
  h.abort_reason = jh.at("abort_reason").get<std::string>();
  SessionLog log(h);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    if (j.at("type") != "step") throw std::invalid_argument("unexpected record type in session log");
    StepRecord r;
    r.t = j.at("t").get<std::size_t>();
    r.episode = j.at("episode").get<std::size_t>();
    r.state = j.at("state").get<StateId>();
    r.action = j.at("action").get<ActionId>();
    r.feedback = optional_from(j.at("feedback"));
    r.trace_id = j.at("trace_id").get<std::string>();
    r.policy_hash = j.at("policy_hash").get<std::string>();
    r.eval_return = optional_from(j.at("eval_return"));
    log.append(std::move(r));
  }
  return log;
}

std::string to_csv(const SessionLog& log) {
  const LogHeader& h = log.header();
  std::string out = "# coachlab session log\n";
  out += "# format_version=" + std::to_string(h.format_version) + "\n";
  out += "# config_digest=" + h.config_digest + "\n";
  out += "# seed=" + std::to_string(h.seed) + "\n";
  out += "# code_version=" + h.code_version + "\n";
  out += "# learner=" + h.learner + "\n";
  out += "# steps_requested=" + std::to_string(h.steps_requested) + "\n";
  out += std::string("# aborted=") + (h.aborted ? "true" : "false") + "\n";
  out += "# abort_reason=" + h.abort_reason + "\n";
  out += std::string(kCsvColumns) + "\n";
  for (const StepRecord& r : log.records()) {
    out += std::to_string(r.t) + "," + std::to_string(r.episode) + "," + std::to_string(r.state) + "," +
           std::to_string(r.action) + "," + (r.feedback ? format_double(*r.feedback) : "") + "," + r.trace_id + "," +
           r.policy_hash + "," + (r.eval_return ? format_double(*r.eval_return) : "") + "\n";
  }
  return out;
}

static SessionLog parse_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  LogHeader h;
  std::string line;
  bool seen_columns = false;
  SessionLog log;
  while (std::getline(in, line)) {
    if (!seen_columns) {
      if (line.rfind("# ", 0) == 0) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(2, eq - 2);
        const std::string value = line.substr(eq + 1);
        if (key == "format_version") h.format_version = std::stoi(value);
        else if (key == "config_digest") h.config_digest = value;
        else if (key == "seed") h.seed = std::stoull(value);
        else if (key == "code_version") h.code_version = value;
        else if (key == "learner") h.learner = value;
        else if (key == "steps_requested") h.steps_requested = std::stoull(value);
        else if (key == "aborted") h.aborted = value == "true";
        else if (key == "abort_reason") h.abort_reason = value;
        continue;
      }
      if (line != kCsvColumns) throw std::invalid_argument("unexpected CSV column header");
      seen_columns = true;
      log = SessionLog(h);
      continue;
    }
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 8) throw std::invalid_argument("CSV row has wrong number of cells");
    StepRecord r;
    r.t = std::stoull(cells[0]);
    r.episode = std::stoull(cells[1]);
    r.state = std::stoull(cells[2]);
    r.action = std::stoull(cells[3]);
    if (!cells[4].empty()) r.feedback = std::stod(cells[4]);
    r.trace_id = cells[5];
    r.policy_hash = cells[6];
    if (!cells[7].empty()) r.eval_return = std::stod(cells[7]);
    log.append(std::move(r));
  }
  if (!seen_columns) throw std::invalid_argument("CSV log has no column header");
  return log;
}

SessionLog from_jsonl(std::string_view text) {
  try {
    return parse_jsonl(text);
  } catch (const LogParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw LogParseError(std::string("malformed JSONL session log: ") + e.what());
  }
}

SessionLog from_csv(std::string_view text) {
  try {
    return parse_csv(text);
  } catch (const LogParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw LogParseError(std::string("malformed CSV session log: ") + e.what());
  }
}

void export_log(const SessionLog& log, const std::string& path, LogFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << (format == LogFormat::csv ? to_csv(log) : to_jsonl(log));
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path);
}

SessionLog import_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
  return csv ? from_csv(buf.str()) : from_jsonl(buf.str());
}

}  // namespace coachlab
