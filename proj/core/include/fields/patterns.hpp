#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace fields {

/// A step was fed a timestamp earlier than the previous one.
class TimeOrderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sleep -> Active at pi >= t1, Active -> Sleep at pi < t2.
struct GreetingConfig {
  double t1 = 0.6;
  double t2 = 0.4;
  double dwell = 0.3;

  void validate() const;
};

/// Playing -> Paused at pi < t1, Paused -> Playing at pi >= t1.
struct TurnTakingConfig {
  double t1 = 0.14;
  double dwell = 0.3;

  void validate() const;
};

/// Level = number of thresholds <= pi.
struct RevealingConfig {
  std::vector<double> thresholds{0.04, 0.08};
  double dwell = 0.3;

  void validate() const;
};

using PatternConfig = std::variant<GreetingConfig, TurnTakingConfig, RevealingConfig>;

enum class PatternKind { Greeting, TurnTaking, Revealing };

PatternKind kind_of(const PatternConfig& cfg);
std::string to_string(PatternKind kind);

/// Candidate discrete state and the time it was first requested.
struct PendingTransition {
  int target = 0;
  double since = 0.0;
  bool operator==(const PendingTransition&) const = default;
};

enum class GreetingPhase { Sleep, Active };
enum class TurnPhase { Playing, Paused };

struct GreetingState {
  GreetingPhase phase = GreetingPhase::Sleep;
  bool operator==(const GreetingState&) const = default;
};

struct TurnTakingState {
  TurnPhase phase = TurnPhase::Playing;
  bool operator==(const TurnTakingState&) const = default;
};

struct RevealingState {
  int level = 0;
  bool operator==(const RevealingState&) const = default;
};

struct PatternState {
  std::variant<GreetingState, TurnTakingState, RevealingState> machine;
  std::optional<PendingTransition> pending;
  std::optional<double> last_t;

  PatternKind kind() const { return static_cast<PatternKind>(machine.index()); }
  bool operator==(const PatternState&) const = default;
};

/// "sleep", "active", "playing", "paused" or "level:N".
std::string describe(const PatternState& state);

enum class EventKind { WakeUp, Sleep, Pause, Resume, LevelChanged };

struct PatternEvent {
  EventKind kind = EventKind::WakeUp;
  double t = 0.0;
  int from = 0;  // LevelChanged only
  int to = 0;    // LevelChanged only
  bool operator==(const PatternEvent&) const = default;
};

std::string to_string(EventKind kind);

struct StepResult {
  PatternState state;
  std::vector<PatternEvent> events;
};

/// Transitions commit once the requesting condition has held for `dwell`
/// seconds (measured from the first tick it held), within this slack.
inline constexpr double kDwellSlack = 1e-9;

StepResult greeting_step(PatternState state, double pi, double t, const GreetingConfig& cfg);
StepResult turntaking_step(PatternState state, double pi, double t, const TurnTakingConfig& cfg);
StepResult revealing_step(PatternState state, double pi, double t, const RevealingConfig& cfg);

/// Dispatches on the config alternative; the state must be of the same kind.
StepResult pattern_step(PatternState state, double pi, double t, const PatternConfig& cfg);

/// Initial state: Sleep, Playing or level 0. Validates `cfg`.
PatternState reset(const PatternConfig& cfg);

}  // namespace fields
