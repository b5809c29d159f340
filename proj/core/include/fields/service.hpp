#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "fields/simulator.hpp"

namespace fields {

inline constexpr std::string_view kMessageSchema = "fields-msg/1";

// Client -> server.

struct LoadScenario {
  nlohmann::json document;
};

struct MoveActor {
  std::string name;
  Vec2 position;
};

struct SetParam {
  std::string path;
  nlohmann::json value;
};

struct PauseResume {};
struct Reset {};

struct ClientMessage {
  std::optional<std::int64_t> id;
  std::variant<LoadScenario, MoveActor, SetParam, PauseResume, Reset> body;
};

/// Raised for undecodable client messages; carries the request id when one
/// could be recovered.
class MessageError : public std::runtime_error {
 public:
  MessageError(std::optional<std::int64_t> id, const std::string& reason)
      : std::runtime_error(reason), id_(id) {}
  std::optional<std::int64_t> id() const { return id_; }

 private:
  std::optional<std::int64_t> id_;
};

ClientMessage parse_client_message(std::string_view text);
nlohmann::ordered_json client_message_to_json(const ClientMessage& msg);

// Server -> client.

struct ActorPose {
  std::string name;
  ActorState state;
  bool client_driven = false;
};

struct FieldOutline {
  std::string owner;  // actor or device name
  std::string kind;   // "ellipse", "half_disk" or "circle"
  std::vector<Vec2> vertices;
};

struct BindingView {
  std::string actor;
  std::string device;
  PatternKind pattern = PatternKind::Greeting;
  double pi = 0.0;
  PatternState state;
  std::vector<Vec2> intersection;
  std::vector<PatternEvent> events;
};

struct Snapshot {
  std::uint64_t tick = 0;
  double t = 0.0;
  std::vector<ActorPose> actors;
  std::vector<FieldOutline> user_fields;
  std::vector<FieldOutline> device_fields;
  std::vector<BindingView> bindings;
};

struct Ack {
  std::optional<std::int64_t> id;
};

struct ErrorReply {
  std::optional<std::int64_t> id;
  std::string reason;
};

using ServerMessage = std::variant<Snapshot, Ack, ErrorReply>;

nlohmann::ordered_json server_message_to_json(const ServerMessage& msg);
std::string serialize(const ServerMessage& msg);

// Session.

struct SessionState {
  ScenarioConfig config;
  EngineState engine;
  bool paused = false;
};

/// Validates `cfg` and builds a fresh, unpaused session at tick 0.
SessionState make_session(ScenarioConfig cfg);

/// Valid messages yield the updated session and an Ack; invalid ones yield
/// the untouched session and an ErrorReply.
std::pair<SessionState, ServerMessage> apply_client_message(SessionState session, const ClientMessage& msg);

/// Advances one tick through the same engine as run_scenario. Returns nothing
/// while paused.
std::optional<Snapshot> tick_and_snapshot(SessionState& session);

/// Owns the live session. Client messages are queued from any thread and
/// drained at the start of each tick; snapshots are serialized once and
/// fanned out read-only to subscribers.
class SessionHost {
 public:
  using Payload = std::shared_ptr<const std::string>;
  using Sink = std::function<void(Payload)>;

  explicit SessionHost(SessionState initial);
  ~SessionHost();

  SessionHost(const SessionHost&) = delete;
  SessionHost& operator=(const SessionHost&) = delete;

  /// Queues a message; `reply` receives the Ack/Error after the next drain.
  void submit(ClientMessage msg, Sink reply);
  /// Queues raw text; decode failures are answered immediately.
  void submit_text(std::string_view text, const Sink& reply);

  /// The latest snapshot (if any) is delivered before the live stream.
  std::uint64_t subscribe(Sink sink);
  void unsubscribe(std::uint64_t id);

  /// Drains queued messages, then ticks once and broadcasts.
  void tick();

  /// Runs tick() at the session's tick rate on a background thread.
  void start();
  void stop();

  Payload latest() const;
  /// Copy of the session taken between ticks.
  SessionState session() const;

 private:
  void run(std::stop_token stop);

  mutable std::mutex session_mutex_;
  SessionState session_;

  std::mutex queue_mutex_;
  std::deque<std::pair<ClientMessage, Sink>> queue_;

  mutable std::mutex subscriber_mutex_;
  std::map<std::uint64_t, Sink> subscribers_;
  std::uint64_t next_subscriber_ = 1;
  Payload latest_;

  std::jthread worker_;
};

}  // namespace fields
