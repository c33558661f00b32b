#include "coachlab/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "coachlab/digest.hpp"
#include "coachlab/tamer.hpp"

namespace coachlab {

std::string_view to_string(Scenario s) { return s == Scenario::dog_grid ? "dog_grid" : "policy_shaping"; }
std::string_view to_string(LearnerKind k) { return k == LearnerKind::coach ? "coach" : "tamer"; }
std::string_view to_string(FeatureKind k) { return k == FeatureKind::tabular ? "tabular" : "visual"; }

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const char* end = value.data() + value.size();
  const char* begin = value.data();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) throw ConfigError(key + ": expected a number, got '" + value + "'");
  return out;
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

std::string layout_string(const GridConfig& grid) {
  std::string map = format_grid_map(grid);
  map.pop_back();
  for (char& c : map) {
    if (c == '\n') c = '/';
  }
  return map;
}

template <typename F>
auto wrap(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

using Setter = std::function<void(SessionConfig&, const std::string&)>;

const std::map<std::string, Setter>& fixed_keys() {
  static const std::map<std::string, Setter> keys = [] {
    std::map<std::string, Setter> k;
    k["scenario"] = [](SessionConfig& c, const std::string& v) {
      if (v == "dog_grid") c.scenario = Scenario::dog_grid;
      else if (v == "policy_shaping") c.scenario = Scenario::policy_shaping;
      else throw ConfigError("scenario: unknown scenario '" + v + "'");
    };
    k["learner"] = [](SessionConfig& c, const std::string& v) {
      if (v == "coach") c.learner = LearnerKind::coach;
      else if (v == "tamer") c.learner = LearnerKind::tamer;
      else throw ConfigError("learner: unknown learner '" + v + "'");
    };
    k["features"] = [](SessionConfig& c, const std::string& v) {
      if (v == "tabular") c.features = FeatureKind::tabular;
      else if (v == "visual") c.features = FeatureKind::visual;
      else throw ConfigError("features: unknown feature map '" + v + "'");
    };
    k["steps"] = [](SessionConfig& c, const std::string& v) { c.steps = parse_size("steps", v); };
    k["alpha"] = [](SessionConfig& c, const std::string& v) { c.coach.alpha = parse_double("alpha", v); };
    k["delay_steps"] = [](SessionConfig& c, const std::string& v) { c.coach.delay_steps = parse_size("delay_steps", v); };
    k["default_trace"] = [](SessionConfig& c, const std::string& v) { c.coach.default_trace = v; };
    k["update_mode"] = [](SessionConfig& c, const std::string& v) {
      c.coach.update_mode = wrap("update_mode", [&] { return parse_update_mode(v); });
    };
    k["reset_traces_on_episode"] = [](SessionConfig& c, const std::string& v) {
      c.coach.reset_traces_on_episode = parse_bool("reset_traces_on_episode", v);
    };
    k["bias_mode"] = [](SessionConfig& c, const std::string& v) {
      c.bias_mode = wrap("bias_mode", [&] { return parse_bias_mode(v); });
    };
    k["tamer.alpha"] = [](SessionConfig& c, const std::string& v) { c.tamer.alpha = parse_double("tamer.alpha", v); };
    k["tamer.window_min"] = [](SessionConfig& c, const std::string& v) {
      c.tamer.window_min = parse_double("tamer.window_min", v);
    };
    k["tamer.window_max"] = [](SessionConfig& c, const std::string& v) {
      c.tamer.window_max = parse_double("tamer.window_max", v);
    };
    k["tamer.initial_estimate"] = [](SessionConfig& c, const std::string& v) {
      c.tamer.initial_estimate = parse_double("tamer.initial_estimate", v);
    };
    k["trainer.kind"] = [](SessionConfig& c, const std::string& v) {
      c.trainer.kind = wrap("trainer.kind", [&] { return parse_trainer_kind(v); });
    };
    k["trainer.sparsity"] = [](SessionConfig& c, const std::string& v) {
      c.trainer.sparsity = parse_double("trainer.sparsity", v);
    };
    k["trainer.quantize"] = [](SessionConfig& c, const std::string& v) {
      c.trainer.quantize = wrap("trainer.quantize", [&] { return parse_quantizer(v); });
    };
    k["trainer.quantize_epsilon"] = [](SessionConfig& c, const std::string& v) {
      c.trainer.quantize_epsilon = parse_double("trainer.quantize_epsilon", v);
    };
    k["trainer.quantize_big"] = [](SessionConfig& c, const std::string& v) {
      c.trainer.quantize_big = parse_double("trainer.quantize_big", v);
    };
    k["trainer.scale"] = [](SessionConfig& c, const std::string& v) { c.trainer.scale = parse_double("trainer.scale", v); };
    k["trainer.delay_steps"] = [](SessionConfig& c, const std::string& v) {
      c.trainer.delay_steps = parse_size("trainer.delay_steps", v);
    };
    k["trainer.staleness"] = [](SessionConfig& c, const std::string& v) {
      c.trainer.staleness = parse_size("trainer.staleness", v);
    };
    k["trainer.eval_tol"] = [](SessionConfig& c, const std::string& v) {
      c.trainer.eval_tol = parse_double("trainer.eval_tol", v);
    };
    k["session.eval_every"] = [](SessionConfig& c, const std::string& v) {
      c.eval_every = parse_size("session.eval_every", v);
    };
    k["session.step_period"] = [](SessionConfig& c, const std::string& v) {
      c.step_period = parse_double("session.step_period", v);
    };
    k["session.max_episode_steps"] = [](SessionConfig& c, const std::string& v) {
      c.max_episode_steps = parse_size("session.max_episode_steps", v);
    };
    k["grid.layout"] = [](SessionConfig& c, const std::string& v) {
      std::string text = v;
      for (char& ch : text) {
        if (ch == '/') ch = '\n';
      }
      c.grid = wrap("grid.layout", [&] { return parse_grid_map(text, c.grid.rewards, c.grid.gamma); });
    };
    k["grid.gamma"] = [](SessionConfig& c, const std::string& v) { c.grid.gamma = parse_double("grid.gamma", v); };
    k["grid.step_reward"] = [](SessionConfig& c, const std::string& v) {
      c.grid.rewards.step = parse_double("grid.step_reward", v);
    };
    k["grid.penalty_reward"] = [](SessionConfig& c, const std::string& v) {
      c.grid.rewards.penalty = parse_double("grid.penalty_reward", v);
    };
    k["grid.goal_reward"] = [](SessionConfig& c, const std::string& v) {
      c.grid.rewards.goal = parse_double("grid.goal_reward", v);
    };
    k["service.cycle_ms"] = [](SessionConfig& c, const std::string& v) {
      c.service.cycle_ms = parse_size("service.cycle_ms", v);
    };
    k["service.strong_threshold"] = [](SessionConfig& c, const std::string& v) {
      c.service.strong_threshold = parse_double("service.strong_threshold", v);
    };
    k["service.client_queue_limit"] = [](SessionConfig& c, const std::string& v) {
      c.service.client_queue_limit = parse_size("service.client_queue_limit", v);
    };
    return k;
  }();
  return keys;
}

}  // namespace

void SessionConfig::validate() const {
  try {
    grid.validate();
    coach.validate();
    trainer.validate();
    CreditWindow window;
    window.min_age = std::chrono::nanoseconds(std::llround(tamer.window_min * 1e9));
    window.max_age = std::chrono::nanoseconds(std::llround(tamer.window_max * 1e9));
    window.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(tamer.alpha > 0.0)) throw ConfigError("tamer.alpha must be positive");
  if (eval_every == 0) throw ConfigError("session.eval_every must be positive");
  if (!(step_period > 0.0)) throw ConfigError("session.step_period must be positive");
  if (max_episode_steps == 0) throw ConfigError("session.max_episode_steps must be positive");
  if (service.cycle_ms == 0) throw ConfigError("service.cycle_ms must be positive");
  if (service.client_queue_limit == 0) throw ConfigError("service.client_queue_limit must be positive");
  if (scenario == Scenario::policy_shaping && features == FeatureKind::visual) {
    throw ConfigError("the policy_shaping scenario has no visual rendering");
  }
}

SessionConfig parse_session_config(std::string_view text, const std::string& base_dir) {
  std::map<std::string, std::string> entries;
  std::map<std::string, std::size_t> line_of;
  std::istringstream in{std::string(text)};
  std::string section;
  std::size_t lineno = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++lineno;
    std::string line = raw;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (!section.empty()) key = section + "." + key;
    if (entries.count(key)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    entries[key] = value;
    line_of[key] = lineno;
  }

  SessionConfig config;
  std::map<std::string, double> traces;
  std::map<double, std::string> feedback_map;
  std::string layout;
  std::string map_path;
  for (const auto& [key, value] : entries) {
    const std::string where = "line " + std::to_string(line_of[key]) + ": ";
    try {
      if (key == "grid.layout") {
        layout = value;
      } else if (key == "map") {
        map_path = value;
      } else if (key.rfind("traces.", 0) == 0) {
        const auto last = key.rfind('.');
        if (last <= 7 || key.substr(last) != ".lambda") throw ConfigError("unknown key '" + key + "'");
        traces[key.substr(7, last - 7)] = parse_double(key, value);
      } else if (key.rfind("feedback_map.", 0) == 0) {
        feedback_map[parse_double(key, key.substr(13))] = value;
      } else {
        const auto it = fixed_keys().find(key);
        if (it == fixed_keys().end()) throw ConfigError("unknown key '" + key + "'");
        it->second(config, value);
      }
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  if (!layout.empty() && !map_path.empty()) throw ConfigError("map and grid.layout are mutually exclusive");
  if (!layout.empty()) fixed_keys().at("grid.layout")(config, layout);
  if (!map_path.empty()) {
    std::filesystem::path p(map_path);
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    config.grid = wrap("map", [&] { return load_grid_map(p.string(), config.grid.rewards, config.grid.gamma); });
  }
  if (!traces.empty()) config.coach.traces = traces;
  if (!feedback_map.empty()) config.coach.feedback_map = feedback_map;
  config.validate();
  return config;
}

SessionConfig load_session_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_session_config(buf.str(), std::filesystem::path(path).parent_path().string());
}

std::string to_config_text(const SessionConfig& c) {
  std::map<std::string, std::string> kv;
  kv["scenario"] = to_string(c.scenario);
  kv["learner"] = to_string(c.learner);
  kv["features"] = to_string(c.features);
  kv["steps"] = std::to_string(c.steps);
  kv["alpha"] = format_double(c.coach.alpha);
  kv["delay_steps"] = std::to_string(c.coach.delay_steps);
  kv["default_trace"] = c.coach.default_trace;
  kv["update_mode"] = to_string(c.coach.update_mode);
  kv["reset_traces_on_episode"] = c.coach.reset_traces_on_episode ? "true" : "false";
  for (const auto& [id, lambda] : c.coach.traces) kv["traces." + id + ".lambda"] = format_double(lambda);
  for (const auto& [value, id] : c.coach.feedback_map) kv["feedback_map." + format_double(value)] = id;
  kv["bias_mode"] = to_string(c.bias_mode);
  kv["tamer.alpha"] = format_double(c.tamer.alpha);
  kv["tamer.window_min"] = format_double(c.tamer.window_min);
  kv["tamer.window_max"] = format_double(c.tamer.window_max);
  kv["tamer.initial_estimate"] = format_double(c.tamer.initial_estimate);
  kv["trainer.kind"] = to_string(c.trainer.kind);
  kv["trainer.sparsity"] = format_double(c.trainer.sparsity);
  kv["trainer.quantize"] = to_string(c.trainer.quantize);
  kv["trainer.quantize_epsilon"] = format_double(c.trainer.quantize_epsilon);
  kv["trainer.quantize_big"] = format_double(c.trainer.quantize_big);
  kv["trainer.scale"] = format_double(c.trainer.scale);
  kv["trainer.delay_steps"] = std::to_string(c.trainer.delay_steps);
  kv["trainer.staleness"] = std::to_string(c.trainer.staleness);
  kv["trainer.eval_tol"] = format_double(c.trainer.eval_tol);
  kv["session.eval_every"] = std::to_string(c.eval_every);
  kv["session.step_period"] = format_double(c.step_period);
  kv["session.max_episode_steps"] = std::to_string(c.max_episode_steps);
  kv["grid.layout"] = layout_string(c.grid);
  kv["grid.gamma"] = format_double(c.grid.gamma);
  kv["grid.step_reward"] = format_double(c.grid.rewards.step);
  kv["grid.penalty_reward"] = format_double(c.grid.rewards.penalty);
  kv["grid.goal_reward"] = format_double(c.grid.rewards.goal);
  kv["service.cycle_ms"] = std::to_string(c.service.cycle_ms);
  kv["service.strong_threshold"] = format_double(c.service.strong_threshold);
  kv["service.client_queue_limit"] = std::to_string(c.service.client_queue_limit);

  std::string out;
  for (const auto& [key, value] : kv) out += key + " = " + value + "\n";
  return out;
}

std::string config_digest(const SessionConfig& config) { return sha256_hex(to_config_text(config)); }

}  // namespace coachlab
