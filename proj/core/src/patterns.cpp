#include "fields/patterns.hpp"

#include <algorithm>
#include <cmath>

#include "fields/geometry.hpp"

namespace fields {

namespace {

bool is_ratio(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

void check_dwell(double dwell) {
  if (!std::isfinite(dwell) || dwell < 0.0) throw DomainError("dwell must be >= 0");
}

void check_time(const PatternState& state, double t) {
  if (!std::isfinite(t)) throw TimeOrderError("timestamp must be finite");
  if (state.last_t && t < *state.last_t) {
    throw TimeOrderError("timestamp " + std::to_string(t) + " precedes previous step at " +
                         std::to_string(*state.last_t));
  }
}

// Debounces a request to move from `current` to `target`. Returns true when
// the transition commits at time t.
bool debounce(PatternState& state, int current, int target, double t, double dwell) {
  if (target == current) {
    state.pending.reset();
    return false;
  }
  if (!state.pending || state.pending->target != target) state.pending = PendingTransition{target, t};
  if (t - state.pending->since + kDwellSlack >= dwell) {
    state.pending.reset();
    return true;
  }
  return false;
}

template <typename Machine>
Machine& expect(PatternState& state, const char* name) {
  auto* m = std::get_if<Machine>(&state.machine);
  if (!m) throw DomainError(std::string("pattern state is not a ") + name + " state");
  return *m;
}

}  // namespace

void GreetingConfig::validate() const {
  if (!is_ratio(t1) || !is_ratio(t2)) throw DomainError("greeting thresholds must be in [0, 1]");
  if (t2 > t1) throw DomainError("t2 must be <= t1");
  check_dwell(dwell);
}

void TurnTakingConfig::validate() const {
  if (!is_ratio(t1)) throw DomainError("turn-taking t1 must be in [0, 1]");
  check_dwell(dwell);
}

void RevealingConfig::validate() const {
  if (thresholds.empty()) throw DomainError("revealing needs at least one threshold");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!std::isfinite(thresholds[i]) || thresholds[i] <= 0.0 || thresholds[i] > 1.0) {
      throw DomainError("revealing thresholds must be in (0, 1]");
    }
    if (i > 0 && !(thresholds[i] > thresholds[i - 1])) {
      throw DomainError("thresholds must be strictly ascending");
    }
  }
  check_dwell(dwell);
}

PatternKind kind_of(const PatternConfig& cfg) { return static_cast<PatternKind>(cfg.index()); }

std::string to_string(PatternKind kind) {
  switch (kind) {
    case PatternKind::Greeting: return "greeting";
    case PatternKind::TurnTaking: return "turn_taking";
    case PatternKind::Revealing: return "revealing";
  }
  return "unknown";
}

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::WakeUp: return "wake_up";
    case EventKind::Sleep: return "sleep";
    case EventKind::Pause: return "pause";
    case EventKind::Resume: return "resume";
    case EventKind::LevelChanged: return "level_changed";
  }
  return "unknown";
}

std::string describe(const PatternState& state) {
  if (const auto* g = std::get_if<GreetingState>(&state.machine)) {
    return g->phase == GreetingPhase::Active ? "active" : "sleep";
  }
  if (const auto* p = std::get_if<TurnTakingState>(&state.machine)) {
    return p->phase == TurnPhase::Playing ? "playing" : "paused";
  }
  return "level:" + std::to_string(std::get<RevealingState>(state.machine).level);
}

StepResult greeting_step(PatternState state, double pi, double t, const GreetingConfig& cfg) {
  check_time(state, t);
  auto& g = expect<GreetingState>(state, "greeting");
  StepResult out;
  const bool active = g.phase == GreetingPhase::Active;
  const bool want_active = active ? !(pi < cfg.t2) : pi >= cfg.t1;
  if (debounce(state, active ? 1 : 0, want_active ? 1 : 0, t, cfg.dwell)) {
    g.phase = want_active ? GreetingPhase::Active : GreetingPhase::Sleep;
    out.events.push_back({want_active ? EventKind::WakeUp : EventKind::Sleep, t});
  }
  state.last_t = t;
  out.state = std::move(state);
  return out;
}

StepResult turntaking_step(PatternState state, double pi, double t, const TurnTakingConfig& cfg) {
  check_time(state, t);
  auto& m = expect<TurnTakingState>(state, "turn-taking");
  StepResult out;
  const bool playing = m.phase == TurnPhase::Playing;
  const bool want_playing = pi >= cfg.t1;
  if (debounce(state, playing ? 1 : 0, want_playing ? 1 : 0, t, cfg.dwell)) {
    m.phase = want_playing ? TurnPhase::Playing : TurnPhase::Paused;
    out.events.push_back({want_playing ? EventKind::Resume : EventKind::Pause, t});
  }
  state.last_t = t;
  out.state = std::move(state);
  return out;
}

StepResult revealing_step(PatternState state, double pi, double t, const RevealingConfig& cfg) {
  check_time(state, t);
  auto& r = expect<RevealingState>(state, "revealing");
  StepResult out;
  const int target = static_cast<int>(
      std::count_if(cfg.thresholds.begin(), cfg.thresholds.end(), [pi](double th) { return th <= pi; }));
  if (debounce(state, r.level, target, t, cfg.dwell)) {
    out.events.push_back({EventKind::LevelChanged, t, r.level, target});
    r.level = target;
  }
  state.last_t = t;
  out.state = std::move(state);
  return out;
}

StepResult pattern_step(PatternState state, double pi, double t, const PatternConfig& cfg) {
  return std::visit(
      [&](const auto& c) -> StepResult {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, GreetingConfig>) {
          return greeting_step(std::move(state), pi, t, c);
        } else if constexpr (std::is_same_v<T, TurnTakingConfig>) {
          return turntaking_step(std::move(state), pi, t, c);
        } else {
          return revealing_step(std::move(state), pi, t, c);
        }
      },
      cfg);
}

PatternState reset(const PatternConfig& cfg) {
  std::visit([](const auto& c) { c.validate(); }, cfg);
  PatternState s;
  switch (kind_of(cfg)) {
    case PatternKind::Greeting: s.machine = GreetingState{}; break;
    case PatternKind::TurnTaking: s.machine = TurnTakingState{}; break;
    case PatternKind::Revealing: s.machine = RevealingState{}; break;
  }
  return s;
}

}  // namespace fields
