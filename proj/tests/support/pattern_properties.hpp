#pragma once

// Randomized property checks for the interaction pattern machines, shared by
// the unit tests and the acceptance runner.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fields/patterns.hpp"

namespace fields::testing {

struct PropertyReport {
  std::size_t cases = 0;
  std::vector<std::string> failures;

  void fail(const std::string& property, std::uint64_t case_seed, const std::string& detail) {
    if (failures.size() < 20) failures.push_back(property + " (case seed " + std::to_string(case_seed) + "): " + detail);
  }
};

struct Run {
  std::vector<PatternState> states;
  std::vector<PatternEvent> events;
};

inline Run drive(const PatternConfig& cfg, const std::vector<double>& pis, double dt) {
  Run run;
  PatternState s = reset(cfg);
  for (std::size_t i = 0; i < pis.size(); ++i) {
    StepResult r = pattern_step(std::move(s), pis[i], static_cast<double>(i) * dt, cfg);
    s = r.state;
    run.states.push_back(s);
    run.events.insert(run.events.end(), r.events.begin(), r.events.end());
  }
  return run;
}

// Straightforward restatement of the debounced machines: discrete state as an
// int (sleep/active = 0/1, playing/paused = 1/0, level), recomputed from scratch.
struct ReferenceMachine {
  int current = 0;
  std::optional<int> pending;
  double since = 0.0;

  static int desired(const PatternConfig& cfg, int current, double pi) {
    if (const auto* g = std::get_if<GreetingConfig>(&cfg)) return current == 1 ? (pi < g->t2 ? 0 : 1) : (pi >= g->t1 ? 1 : 0);
    if (const auto* p = std::get_if<TurnTakingConfig>(&cfg)) return pi >= p->t1 ? 1 : 0;
    const auto& th = std::get<RevealingConfig>(cfg).thresholds;
    int level = 0;
    for (double x : th) level += x <= pi ? 1 : 0;
    return level;
  }

  static double dwell_of(const PatternConfig& cfg) {
    return std::visit([](const auto& c) { return c.dwell; }, cfg);
  }

  // Returns the committed state change, if any.
  std::optional<int> step(const PatternConfig& cfg, double pi, double t) {
    const int want = desired(cfg, current, pi);
    if (want == current) {
      pending.reset();
      return std::nullopt;
    }
    if (pending != want) {
      pending = want;
      since = t;
    }
    if (t - since >= dwell_of(cfg) - 1e-9) {
      current = want;
      pending.reset();
      return want;
    }
    return std::nullopt;
  }
};

inline int discrete(const PatternState& s) {
  if (const auto* g = std::get_if<GreetingState>(&s.machine)) return g->phase == GreetingPhase::Active ? 1 : 0;
  if (const auto* p = std::get_if<TurnTakingState>(&s.machine)) return p->phase == TurnPhase::Playing ? 1 : 0;
  return std::get<RevealingState>(s.machine).level;
}

inline PatternConfig random_config(std::mt19937_64& rng, bool zero_dwell) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double dwell = zero_dwell ? 0.0 : std::uniform_int_distribution<int>(0, 12)(rng) * 0.05;
  switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
    case 0: {
      GreetingConfig g;
      g.t1 = 0.1 + 0.8 * u(rng);
      g.t2 = g.t1 * u(rng);
      g.dwell = dwell;
      return g;
    }
    case 1: {
      TurnTakingConfig p;
      p.t1 = 0.05 + 0.9 * u(rng);
      p.dwell = dwell;
      return p;
    }
    default: {
      RevealingConfig r;
      const int n = std::uniform_int_distribution<int>(1, 5)(rng);
      r.thresholds.clear();
      for (int i = 0; i < n; ++i) r.thresholds.push_back(0.02 + 0.95 * u(rng));
      std::sort(r.thresholds.begin(), r.thresholds.end());
      r.thresholds.erase(std::unique(r.thresholds.begin(), r.thresholds.end()), r.thresholds.end());
      r.dwell = dwell;
      return r;
    }
  }
}

// Mostly smooth random walk with occasional jumps and values landing exactly
// on thresholds.
inline std::vector<double> random_pis(std::mt19937_64& rng, const PatternConfig& cfg, std::size_t n) {
  std::vector<double> marks;
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, GreetingConfig>) marks = {c.t1, c.t2};
        else if constexpr (std::is_same_v<T, TurnTakingConfig>) marks = {c.t1};
        else marks = c.thresholds;
      },
      cfg);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> step(0.0, 0.08);
  std::vector<double> out;
  double pi = u(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = u(rng);
    if (r < 0.1) pi = u(rng);
    else if (r < 0.2) pi = marks[std::uniform_int_distribution<std::size_t>(0, marks.size() - 1)(rng)];
    else pi = std::clamp(pi + step(rng), 0.0, 1.0);
    out.push_back(pi);
  }
  return out;
}

inline EventKind expected_kind(const PatternConfig& cfg, int to) {
  if (std::holds_alternative<GreetingConfig>(cfg)) return to == 1 ? EventKind::WakeUp : EventKind::Sleep;
  if (std::holds_alternative<TurnTakingConfig>(cfg)) return to == 1 ? EventKind::Resume : EventKind::Pause;
  return EventKind::LevelChanged;
}

// Runs `cases` random cases per property family. Deterministic in `seed`.
inline PropertyReport check_pattern_properties(std::uint64_t seed, std::size_t cases) {
  PropertyReport report;
  constexpr double dt = 0.05;
  std::mt19937_64 master(seed);

  for (std::size_t c = 0; c < cases; ++c) {
    const std::uint64_t case_seed = master();
    std::mt19937_64 rng(case_seed);
    const PatternConfig cfg = random_config(rng, false);
    const std::vector<double> pis = random_pis(rng, cfg, 80);
    ++report.cases;

    // Agreement with the reference machine, event by event and state by state.
    const Run run = drive(cfg, pis, dt);
    ReferenceMachine ref;
    ref.current = discrete(reset(cfg));
    std::vector<PatternEvent> ref_events;
    for (std::size_t i = 0; i < pis.size(); ++i) {
      const int before = ref.current;
      const double t = static_cast<double>(i) * dt;
      if (auto to = ref.step(cfg, pis[i], t)) {
        PatternEvent e{expected_kind(cfg, *to), t};
        if (e.kind == EventKind::LevelChanged) {
          e.from = before;
          e.to = *to;
        }
        ref_events.push_back(e);
      }
      if (discrete(run.states[i]) != ref.current) {
        report.fail("reference", case_seed, "state differs at tick " + std::to_string(i));
        break;
      }
    }
    if (ref_events != run.events) report.fail("reference", case_seed, "event sequences differ");

    // Determinism: same inputs, same outputs.
    if (drive(cfg, pis, dt).events != run.events) report.fail("determinism", case_seed, "rerun differs");

    // Alternation for the binary machines; chaining for revealing.
    int expected_from = discrete(reset(cfg));
    int level_sum = 0;
    for (const auto& e : run.events) {
      if (e.kind == EventKind::LevelChanged) {
        if (e.from != expected_from || e.from == e.to) report.fail("telescoping", case_seed, "broken level chain");
        level_sum += e.to - e.from;
        expected_from = e.to;
      } else {
        const int to = (e.kind == EventKind::WakeUp || e.kind == EventKind::Resume) ? 1 : 0;
        if (to == expected_from) report.fail("alternation", case_seed, "repeated " + to_string(e.kind));
        expected_from = to;
      }
    }
    if (std::holds_alternative<RevealingConfig>(cfg) && level_sum != discrete(run.states.back())) {
      report.fail("telescoping", case_seed, "level deltas do not sum to final level");
    }

    // Events are at most one per tick and only at dwell-satisfying times.
    for (std::size_t i = 1; i < run.events.size(); ++i) {
      if (run.events[i].t <= run.events[i - 1].t) report.fail("one-per-tick", case_seed, "two events in a tick");
    }
  }

  // Zero dwell: hysteresis band, exact level tracking and monotonicity.
  for (std::size_t c = 0; c < cases; ++c) {
    const std::uint64_t case_seed = master();
    std::mt19937_64 rng(case_seed);
    const PatternConfig cfg = random_config(rng, true);
    std::vector<double> pis = random_pis(rng, cfg, 60);
    ++report.cases;

    const Run run = drive(cfg, pis, dt);
    int prev = discrete(reset(cfg));
    for (std::size_t i = 0; i < pis.size(); ++i) {
      const int now = discrete(run.states[i]);
      if (const auto* g = std::get_if<GreetingConfig>(&cfg)) {
        const bool in_band = pis[i] >= g->t2 && pis[i] < g->t1;
        if (in_band && now != prev) report.fail("hysteresis", case_seed, "changed inside [t2, t1)");
        if (pis[i] >= g->t1 && now != 1) report.fail("hysteresis", case_seed, "not active at pi >= t1");
        if (pis[i] < g->t2 && now != 0) report.fail("hysteresis", case_seed, "not asleep at pi < t2");
      } else if (const auto* p = std::get_if<TurnTakingConfig>(&cfg)) {
        if (now != (pis[i] >= p->t1 ? 1 : 0)) report.fail("threshold", case_seed, "turn-taking state off");
      } else {
        if (now != ReferenceMachine::desired(cfg, 0, pis[i])) report.fail("levels", case_seed, "level != count");
      }
      prev = now;
    }

    if (std::holds_alternative<RevealingConfig>(cfg)) {
      std::sort(pis.begin(), pis.end());
      const Run up = drive(cfg, pis, dt);
      for (const auto& e : up.events) {
        if (e.to < e.from) report.fail("monotonicity", case_seed, "level dropped on rising pi");
      }
    }
  }

  // Greeting hysteresis: once settled, pi confined to [t2, t1) never fires.
  for (std::size_t c = 0; c < cases; ++c) {
    const std::uint64_t case_seed = master();
    std::mt19937_64 rng(case_seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GreetingConfig g;
    g.t1 = 0.1 + 0.8 * u(rng);
    g.t2 = g.t1 * u(rng);
    g.dwell = std::uniform_int_distribution<int>(0, 8)(rng) * dt;
    ++report.cases;

    const bool start_active = u(rng) < 0.5;
    std::vector<double> pis;
    const int settle = static_cast<int>(std::ceil(g.dwell / dt)) + 1;
    if (start_active) pis.assign(static_cast<std::size_t>(settle), 1.0);
    const std::size_t prefix = pis.size();
    for (int i = 0; i < 60; ++i) pis.push_back(g.t2 + (g.t1 - g.t2) * u(rng) * (1.0 - 1e-12));
    if (u(rng) < 0.2) pis.back() = g.t2;

    const Run run = drive(g, pis, dt);
    const std::size_t settled = start_active ? 1u : 0u;
    if (run.events.size() != settled) {
      report.fail("hysteresis", case_seed, std::to_string(run.events.size() - settled) + " event(s) inside [t2, t1)");
    }
    for (std::size_t i = prefix; i < pis.size(); ++i) {
      if (discrete(run.states[i]) != (start_active ? 1 : 0)) {
        report.fail("hysteresis", case_seed, "state changed inside [t2, t1)");
        break;
      }
    }
  }

  // Pulses shorter than the dwell never commit.
  for (std::size_t c = 0; c < cases; ++c) {
    const std::uint64_t case_seed = master();
    std::mt19937_64 rng(case_seed);
    PatternConfig cfg = random_config(rng, false);
    std::visit([&](auto& x) { x.dwell = std::uniform_int_distribution<int>(2, 12)(rng) * dt; }, cfg);
    const double dwell = ReferenceMachine::dwell_of(cfg);
    // A run of m ticks spans (m - 1) * dt seconds.
    const int max_ticks = static_cast<int>(std::floor(dwell / dt + 1e-9));
    // Baseline pi that holds the initial state: 0 keeps sleep and level 0, 1 keeps playing.
    const double base = std::holds_alternative<TurnTakingConfig>(cfg) ? 1.0 : 0.0;
    ++report.cases;

    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> pis;
    for (int pulse = 0; pulse < 10; ++pulse) {
      const int quiet = std::uniform_int_distribution<int>(1, 5)(rng);
      for (int i = 0; i < quiet; ++i) pis.push_back(base);
      const int len = std::uniform_int_distribution<int>(1, max_ticks)(rng);
      const double level = u(rng);
      for (int i = 0; i < len; ++i) pis.push_back(level);
    }
    pis.push_back(base);
    const Run run = drive(cfg, pis, dt);
    if (!run.events.empty()) report.fail("pulse", case_seed, "short pulse committed a transition");
  }
  return report;
}

}  // namespace fields::testing
