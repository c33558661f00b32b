#include "coachlab/training_session.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <thread>
#include <type_traits>

namespace coachlab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

LearnerKind parse_learner(std::string_view name) {
  if (name == "coach") return LearnerKind::coach;
  if (name == "tamer") return LearnerKind::tamer;
  throw ProtocolError("unknown learner '" + std::string(name) + "'");
}

}  // namespace

const std::string& long_trace_id(const CoachConfig& config) {
  if (const auto it = config.feedback_map.find(4.0); it != config.feedback_map.end()) return it->second;
  const auto slowest = std::max_element(config.traces.begin(), config.traces.end(),
                                        [](const auto& a, const auto& b) { return a.second < b.second; });
  return slowest->first;
}

std::optional<MappedFeedback> map_client_feedback(const FeedbackMessage& message, const SessionConfig& config) {
  const CoachConfig& coach = config.coach;
  if (message.trace) {
    if (coach.traces.count(*message.trace) == 0) throw ProtocolError("unknown trace '" + *message.trace + "'");
    if (message.value == 0.0) return std::nullopt;
    return MappedFeedback{message.value, *message.trace};
  }
  if (message.value == 0.0) return std::nullopt;
  if (const auto it = coach.feedback_map.find(message.value); it != coach.feedback_map.end()) {
    return MappedFeedback{message.value, it->second};
  }
  const double sign = message.value > 0.0 ? 1.0 : -1.0;
  if (std::abs(message.value) >= config.service.strong_threshold) {
    return MappedFeedback{4.0 * sign, long_trace_id(coach)};
  }
  return MappedFeedback{sign, coach.default_trace};
}

ServiceScenario ServiceScenario::parse(std::string_view name) {
  if (name == "dog_grid") return {};
  const auto colon = name.find(':');
  if (colon != std::string_view::npos) {
    const std::string_view prefix = name.substr(0, colon);
    const std::string_view kind = name.substr(colon + 1);
    ServiceScenario s;
    if (prefix == "scripted") {
      s.kind = Kind::scripted;
    } else if (prefix == "amt") {
      s.kind = Kind::amt;
    } else {
      throw ProtocolError("unknown scenario '" + std::string(name) + "'");
    }
    try {
      s.behavior = parse_dog_behavior(kind);
    } catch (const std::invalid_argument&) {
      throw ProtocolError("unknown scripted behaviour '" + std::string(kind) + "'");
    }
    return s;
  }
  throw ProtocolError("unknown scenario '" + std::string(name) + "'");
}

std::string ServiceScenario::name() const {
  switch (kind) {
    case Kind::train:
      return "dog_grid";
    case Kind::scripted:
      return "scripted:" + std::string(to_string(behavior));
    case Kind::amt:
      return "amt:" + std::string(to_string(behavior));
  }
  return "?";
}

TrainingSession::TrainingSession(SessionConfig config, std::uint64_t seed)
    : config_(std::move(config)),
      seed_(seed),
      env_([this]() {
        if (config_.scenario != Scenario::dog_grid) throw ConfigError("the training service hosts the dog grid only");
        return make_environment(config_);
      }()),
      rng_(seed),
      state_(env_.start),
      epoch_(std::chrono::steady_clock::now()) {
  LogHeader header;
  header.config_digest = config_digest(config_);
  header.seed = seed;
  header.learner = std::string(to_string(config_.learner));
  log_ = SessionLog(header);
  rebuild_agent();
  publish_state();
}

Timestamp TrainingSession::clock_now() const {
  return std::chrono::duration_cast<Timestamp>(std::chrono::steady_clock::now() - epoch_);
}

void TrainingSession::log(std::string_view line) const {
  if (logger_) logger_(line);
}

ServiceStats TrainingSession::stats() const {
  std::lock_guard lock(queue_mutex_);
  return stats_;
}

std::string TrainingSession::handle_message(std::string_view text, Timestamp receipt) {
  try {
    const ClientMessage message = parse_client_message(text);
    return std::visit(
        Overloaded{
            [&](const FeedbackMessage& m) -> std::string {
              const auto mapped = map_client_feedback(m, config_);
              std::lock_guard lock(queue_mutex_);
              ++stats_.feedback_received;
              if (paused_.load()) {
                ++stats_.discarded_while_paused;
                log("feedback discarded while paused");
                return ack_message("feedback", next_step_.load(), false);
              }
              if (!mapped) return ack_message("feedback", next_step_.load(), false);
              queue_.push_back({mapped->value, mapped->trace_id, receipt});
              return ack_message("feedback", next_step_.load(), true);
            },
            [&](const ControlMessage& m) -> std::string {
              std::lock_guard lock(queue_mutex_);
              switch (m.cmd) {
                case ControlCommand::pause:
                  paused_.store(true);
                  // Queued feedback would be stale by the time the loop resumes.
                  stats_.discarded_while_paused += queue_.size();
                  queue_.clear();
                  break;
                case ControlCommand::resume:
                  paused_.store(false);
                  break;
                case ControlCommand::reset:
                  mailbox_.push_back({Command::Kind::reset, std::nullopt, std::nullopt});
                  break;
              }
              return ack_message(to_string(m.cmd), next_step_.load());
            },
            [&](const ConfigureMessage& m) -> std::string {
              Command command{Command::Kind::configure, std::nullopt, std::nullopt};
              if (m.scenario) command.scenario = ServiceScenario::parse(*m.scenario);
              if (m.learner) command.learner = parse_learner(*m.learner);
              std::lock_guard lock(queue_mutex_);
              mailbox_.push_back(std::move(command));
              return ack_message("configure", next_step_.load());
            },
            [&](const QueryMessage&) -> std::string { return snapshot(); },
        },
        message);
  } catch (const ProtocolError& e) {
    std::lock_guard lock(queue_mutex_);
    ++stats_.bad_messages;
    return error_message("bad_message", e.what());
  }
}

void TrainingSession::rebuild_agent() {
  agent_ = make_agent(config_, env_);
  log_.mutable_header().learner = std::string(to_string(config_.learner));
}

void TrainingSession::restart_episode() {
  state_ = env_.start;
  episode_steps_ = 0;
  agent_->begin_episode();
  scripted_.reset();
  if (scenario_.kind == ServiceScenario::Kind::scripted) {
    scripted_ = scripted_dog_policy(*env_.world, scenario_.behavior);
  } else if (scenario_.kind == ServiceScenario::Kind::amt) {
    // Two conditioning episodes of the chosen behaviour, then one alright
    // episode; the session pauses when the preset is over.
    if (amt_episodes_ < 2) {
      scripted_ = scripted_dog_policy(*env_.world, scenario_.behavior);
    } else if (amt_episodes_ == 2) {
      scripted_ = scripted_dog_policy(*env_.world, DogBehavior::alright);
    } else {
      scenario_ = ServiceScenario{};
      paused_.store(true);
      log("scripted preset finished; session paused");
    }
  }
}

void TrainingSession::apply_command(const Command& command) {
  if (command.kind == Command::Kind::configure) {
    if (command.scenario) scenario_ = *command.scenario;
    if (command.learner) config_.learner = *command.learner;
  }
  rebuild_agent();
  amt_episodes_ = 0;
  ++episode_;
  restart_episode();
}

CycleReport TrainingSession::run_cycle(Timestamp boundary) {
  std::deque<Command> commands;
  {
    std::lock_guard lock(queue_mutex_);
    commands.swap(mailbox_);
  }
  for (const Command& c : commands) apply_command(c);
  if (!commands.empty()) publish_state();

  CycleReport report;
  if (paused_.load()) return report;

  const std::uint64_t t = next_step_.load();
  Decision decision;
  if (scripted_) {
    const auto row = scripted_->row(state_);
    const auto action = static_cast<ActionId>(std::max_element(row.begin(), row.end()) - row.begin());
    decision = agent_->impose(state_, action, boundary);
  } else {
    decision = agent_->decide(state_, boundary, rng_);
  }

  std::vector<FeedbackEvent> events;
  {
    std::lock_guard lock(queue_mutex_);
    auto late = std::stable_partition(queue_.begin(), queue_.end(),
                                      [&](const Pending& p) { return p.arrival <= boundary; });
    for (auto it = queue_.begin(); it != late; ++it) {
      events.push_back({it->value, it->trace_id, it->arrival, FeedbackSource::human});
    }
    queue_.erase(queue_.begin(), late);
    stats_.feedback_applied += events.size();
    ++stats_.steps;
  }
  agent_->feedback(events, boundary);

  StepRecord record;
  record.t = t;
  record.episode = episode_;
  record.state = state_;
  record.action = decision.action;
  if (!events.empty()) {
    const AggregatedFeedback agg = aggregate_feedback(events, config_.coach);
    record.feedback = agg.value;
    record.trace_id = agg.trace_id;
    if (agg.mixed_traces) log("mixed traces in one cycle; last event's trace used");
  }
  record.policy_hash = decision.policy_hash;

  const Outcome next = env_.sample(state_, decision.action, rng_);
  state_ = next.next;
  ++episode_steps_;
  report.broadcasts.push_back(action_message(t, decision.action));
  if (config_.eval_every != 0 && (t + 1) % config_.eval_every == 0) {
    const double ret = evaluate_return(env_, agent_->greedy_policy());
    record.eval_return = ret;
    report.broadcasts.push_back(metric_message(t, ret));
  }
  log_.append(std::move(record));

  if (env_.mdp.is_terminal(state_) || episode_steps_ >= config_.max_episode_steps) {
    if (scenario_.kind == ServiceScenario::Kind::amt) ++amt_episodes_;
    ++episode_;
    restart_episode();
  }
  next_step_.store(t + 1);
  publish_state();
  report.broadcasts.push_back(snapshot());
  report.stepped = true;
  report.feedback_events = events.size();
  return report;
}

void TrainingSession::publish_state() {
  StateView view;
  const std::uint64_t steps = next_step_.load();
  view.t = steps == 0 ? 0 : steps - 1;
  view.episode = episode_;
  view.agent = env_.world->cell_of(state_);
  view.scenario = scenario_.name();
  view.learner = std::string(to_string(config_.learner));
  std::lock_guard lock(state_mutex_);
  latest_state_ = std::move(view);
}

std::string TrainingSession::snapshot() const {
  std::lock_guard lock(state_mutex_);
  StateView view = latest_state_;
  view.mode = mode();
  return state_message(view, env_.world->config());
}

CycleLoop::CycleLoop(TrainingSession& session, std::chrono::nanoseconds period, Sink sink)
    : session_(session), period_(period), sink_(std::move(sink)) {
  if (period <= std::chrono::nanoseconds::zero()) throw std::invalid_argument("cycle period must be positive");
}

void CycleLoop::run(std::uint64_t max_cycles) {
  using Clock = std::chrono::steady_clock;
  Clock::time_point boundary = Clock::now() + period_;
  while (!stop_.load() && (max_cycles == 0 || cycles_.load() < max_cycles)) {
    std::this_thread::sleep_until(boundary);
    const auto work_start = Clock::now();
    const CycleReport report =
        session_.run_cycle(std::chrono::duration_cast<Timestamp>(boundary - session_.epoch()));
    if (sink_) {
      for (const std::string& m : report.broadcasts) sink_(m);
    }
    const auto work_end = Clock::now();
    const auto work = std::chrono::duration_cast<std::chrono::nanoseconds>(work_end - work_start).count();
    if (work > max_work_.load()) max_work_.store(work);
    cycles_.fetch_add(1);
    if (work > period_.count()) {
      overruns_.fetch_add(1);
      std::fprintf(stderr, "cycle overrun: %.3f ms of work at step %llu\n", double(work) / 1e6,
                   static_cast<unsigned long long>(session_.next_step()));
    } else if (work_start - boundary >= period_) {
      late_wakeups_.fetch_add(1);
      std::fprintf(stderr, "late wake-up: cycle started %.3f ms after its boundary\n",
                   double(std::chrono::duration_cast<std::chrono::nanoseconds>(work_start - boundary).count()) / 1e6);
    }
    boundary += period_;
    if (work_end > boundary) boundary = work_end + period_;
  }
}

ExperimentResult soak_experiment(std::uint64_t cycles, std::uint64_t visual_cycles) {
  const auto start = std::chrono::steady_clock::now();
  SessionConfig config;
  TrainingSession session(config, 1);
  std::uint64_t broadcasts = 0;
  CycleLoop loop(session, std::chrono::milliseconds(config.service.cycle_ms),
                 [&](const std::string&) { ++broadcasts; });

  // A simulated trainer pressing buttons and moving the slider.
  std::atomic<bool> done{false};
  std::thread trainer([&] {
    const char* messages[] = {R"({"type":"feedback","value":1})", R"({"type":"feedback","value":-1})",
                              R"({"type":"feedback","value":4,"trace":"long"})", R"({"type":"feedback","value":-45})",
                              R"({"type":"feedback","value":12})"};
    std::size_t i = 0;
    while (!done.load()) {
      session.handle_message(messages[i++ % 5], session.clock_now());
      std::this_thread::sleep_for(std::chrono::milliseconds(70));
    }
  });
  loop.run(cycles);
  done.store(true);
  trainer.join();
  const ServiceStats stats = session.stats();

  SessionConfig visual_config;
  visual_config.features = FeatureKind::visual;
  TrainingSession visual(visual_config, 1);
  std::chrono::nanoseconds worst{0};
  for (std::uint64_t c = 0; c < visual_cycles; ++c) {
    if (c % 3 == 0) visual.handle_message(R"({"type":"feedback","value":1})", step_time(c, 0.033));
    const auto t0 = std::chrono::steady_clock::now();
    visual.run_cycle(step_time(c, 0.033));
    worst = std::max(worst, std::chrono::steady_clock::now() - t0);
  }

  const double worst_ms = double(worst.count()) / 1e6;
  const bool ok = loop.cycles() == cycles && loop.overruns() == 0 && stats.steps == cycles && worst_ms < 33.0;
  char detail[256];
  std::snprintf(detail, sizeof detail,
                "%llu cycles at %zu ms, %llu overruns, %llu late wake-ups, max work %.3f ms, %llu feedback applied, %llu broadcasts; "
                "visual max cycle %.3f ms",
                static_cast<unsigned long long>(loop.cycles()), config.service.cycle_ms,
                static_cast<unsigned long long>(loop.overruns()),
                static_cast<unsigned long long>(loop.late_wakeups()), double(loop.max_work().count()) / 1e6,
                static_cast<unsigned long long>(stats.feedback_applied), static_cast<unsigned long long>(broadcasts),
                worst_ms);
  return {"soak", ok, detail, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
}

}  // namespace coachlab
