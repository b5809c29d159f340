#include "fields/service.hpp"

#include <chrono>
#include <cmath>

#include "fields/scenario_io.hpp"

namespace fields {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json point_json(Vec2 p) { return ordered_json::array({p.x, p.y}); }

ordered_json vertices_json(const std::vector<Vec2>& vs) {
  ordered_json out = ordered_json::array();
  for (const Vec2& v : vs) out.push_back(point_json(v));
  return out;
}

const char* shape_kind(const FieldShape& shape) {
  switch (shape.index()) {
    case 0: return "ellipse";
    case 1: return "half_disk";
    default: return "circle";
  }
}

ordered_json id_json(const std::optional<std::int64_t>& id) {
  return id ? ordered_json(*id) : ordered_json(nullptr);
}

std::optional<std::int64_t> read_id(const json& j) {
  if (j.is_object() && j.contains("id") && j.at("id").is_number_integer()) return j.at("id").get<std::int64_t>();
  return std::nullopt;
}

struct Visitor {
  SessionState& s;

  void operator()(const LoadScenario& m) { s = make_session(scenario_from_json(m.document)); }

  void operator()(const MoveActor& m) {
    const std::size_t i = s.config.actor_index(m.name);
    const Arena& arena = s.config.arena;
    if (m.position.x < 0.0 || m.position.y < 0.0 || m.position.x > arena.width || m.position.y > arena.height) {
      throw ValidationError({"position outside the arena"});
    }
    ActorRuntime& rt = s.engine.actors[i];
    if (!rt.client_driven) rt.client_history.clear();
    rt.client_driven = true;
    rt.client_position = m.position;
  }

  void operator()(const SetParam& m) {
    if (m.path == "tick_rate" || m.path == "duration") {
      throw ValidationError({"\"" + m.path + "\" cannot change during a live session"});
    }
    ScenarioConfig next = set_param(s.config, m.path, m.value);
    // Fewer revealing thresholds can strand a machine above the new top level.
    for (std::size_t b = 0; b < next.bindings.size(); ++b) {
      if (const auto* rc = std::get_if<RevealingConfig>(&next.bindings[b].pattern)) {
        auto& rs = std::get<RevealingState>(s.engine.machines[b].machine);
        const int top = static_cast<int>(rc->thresholds.size());
        if (rs.level > top) rs.level = top;
        if (s.engine.machines[b].pending && s.engine.machines[b].pending->target > top) {
          s.engine.machines[b].pending.reset();
        }
      }
    }
    s.config = std::move(next);
  }

  void operator()(const PauseResume&) { s.paused = !s.paused; }

  void operator()(const Reset&) {
    s.engine = make_engine_state(s.config);
    s.paused = false;
  }
};

}  // namespace

ClientMessage parse_client_message(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw MessageError(std::nullopt, std::string("malformed JSON: ") + e.what());
  }
  const auto id = read_id(j);
  if (!j.is_object()) throw MessageError(id, "message must be a JSON object");
  if (!j.contains("schema") || j.at("schema") != kMessageSchema) {
    throw MessageError(id, "missing or unsupported schema, expected \"" + std::string(kMessageSchema) + "\"");
  }
  if (!j.contains("type") || !j.at("type").is_string()) throw MessageError(id, "missing message type");

  ClientMessage msg;
  msg.id = id;
  const std::string type = j.at("type").get<std::string>();
  try {
    if (type == "load_scenario") {
      if (!j.contains("document")) throw MessageError(id, "load_scenario needs a document");
      msg.body = LoadScenario{j.at("document")};
    } else if (type == "move_actor") {
      const json& p = j.at("position");
      if (!p.is_array() || p.size() != 2) throw MessageError(id, "position must be [x, y]");
      msg.body = MoveActor{j.at("name").get<std::string>(), Vec2(p[0].get<double>(), p[1].get<double>())};
    } else if (type == "set_param") {
      msg.body = SetParam{j.at("path").get<std::string>(), j.at("value")};
    } else if (type == "pause_resume") {
      msg.body = PauseResume{};
    } else if (type == "reset") {
      msg.body = Reset{};
    } else {
      throw MessageError(id, "unknown message type \"" + type + "\"");
    }
  } catch (const json::exception& e) {
    throw MessageError(id, std::string("malformed ") + type + " message: " + e.what());
  } catch (const DomainError& e) {
    throw MessageError(id, std::string("malformed ") + type + " message: " + e.what());
  }
  return msg;
}

ordered_json client_message_to_json(const ClientMessage& msg) {
  ordered_json j = {{"schema", kMessageSchema}};
  if (msg.id) j["id"] = *msg.id;
  std::visit(
      [&](const auto& body) {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, LoadScenario>) {
          j["type"] = "load_scenario";
          j["document"] = ordered_json::parse(body.document.dump());
        } else if constexpr (std::is_same_v<T, MoveActor>) {
          j["type"] = "move_actor";
          j["name"] = body.name;
          j["position"] = point_json(body.position);
        } else if constexpr (std::is_same_v<T, SetParam>) {
          j["type"] = "set_param";
          j["path"] = body.path;
          j["value"] = ordered_json::parse(body.value.dump());
        } else if constexpr (std::is_same_v<T, PauseResume>) {
          j["type"] = "pause_resume";
        } else {
          j["type"] = "reset";
        }
      },
      msg.body);
  return j;
}

ordered_json server_message_to_json(const ServerMessage& msg) {
  ordered_json j = {{"schema", kMessageSchema}};
  if (const auto* ack = std::get_if<Ack>(&msg)) {
    j["type"] = "ack";
    j["id"] = id_json(ack->id);
    return j;
  }
  if (const auto* err = std::get_if<ErrorReply>(&msg)) {
    j["type"] = "error";
    j["id"] = id_json(err->id);
    j["reason"] = err->reason;
    return j;
  }
  const auto& snap = std::get<Snapshot>(msg);
  j["type"] = "snapshot";
  j["tick"] = snap.tick;
  j["t"] = snap.t;
  ordered_json actors = ordered_json::array();
  for (const auto& a : snap.actors) {
    actors.push_back({{"name", a.name},
                      {"position", point_json(a.state.position)},
                      {"velocity", point_json(a.state.velocity)},
                      {"heading", a.state.heading},
                      {"client_driven", a.client_driven}});
  }
  j["actors"] = std::move(actors);
  auto outlines = [](const std::vector<FieldOutline>& fs, const char* owner_key) {
    ordered_json out = ordered_json::array();
    for (const auto& f : fs) out.push_back({{owner_key, f.owner}, {"kind", f.kind}, {"vertices", vertices_json(f.vertices)}});
    return out;
  };
  j["user_fields"] = outlines(snap.user_fields, "actor");
  j["device_fields"] = outlines(snap.device_fields, "device");
  ordered_json bindings = ordered_json::array();
  ordered_json all_events = ordered_json::array();
  for (const auto& b : snap.bindings) {
    ordered_json events = ordered_json::array();
    for (const auto& e : b.events) {
      events.push_back(event_to_json(e));
      ordered_json tagged = event_to_json(e);
      tagged["actor"] = b.actor;
      tagged["device"] = b.device;
      all_events.push_back(std::move(tagged));
    }
    bindings.push_back({{"actor", b.actor},
                        {"device", b.device},
                        {"pattern", to_string(b.pattern)},
                        {"pi", b.pi},
                        {"state", describe(b.state)},
                        {"intersection", vertices_json(b.intersection)},
                        {"events", std::move(events)}});
  }
  j["bindings"] = std::move(bindings);
  j["events"] = std::move(all_events);
  return j;
}

std::string serialize(const ServerMessage& msg) { return server_message_to_json(msg).dump(); }

SessionState make_session(ScenarioConfig cfg) {
  if (auto errors = cfg.validate(); !errors.empty()) throw ValidationError(std::move(errors));
  SessionState s;
  s.engine = make_engine_state(cfg);
  s.config = std::move(cfg);
  return s;
}

std::pair<SessionState, ServerMessage> apply_client_message(SessionState session, const ClientMessage& msg) {
  SessionState next = session;
  try {
    std::visit(Visitor{next}, msg.body);
  } catch (const ValidationError& e) {
    std::string reason;
    for (const auto& err : e.errors()) reason += (reason.empty() ? "" : "; ") + err;
    return {std::move(session), ErrorReply{msg.id, reason}};
  } catch (const std::exception& e) {
    return {std::move(session), ErrorReply{msg.id, e.what()}};
  }
  return {std::move(next), Ack{msg.id}};
}

std::optional<Snapshot> tick_and_snapshot(SessionState& session) {
  if (session.paused) return std::nullopt;
  const ScenarioConfig& cfg = session.config;
  TickOutput out = advance(cfg, session.engine);

  Snapshot snap;
  snap.tick = out.tick;
  snap.t = out.t;
  for (std::size_t i = 0; i < cfg.actors.size(); ++i) {
    snap.actors.push_back({cfg.actors[i].name, out.actors[i], session.engine.actors[i].client_driven});
    const FieldShape field = compute_user_field(out.actors[i], cfg.actors[i].params);
    snap.user_fields.push_back({cfg.actors[i].name, shape_kind(field), to_polygon(field, cfg.polygon_n).vertices()});
  }
  for (const auto& d : cfg.devices) {
    const FieldShape field = compute_device_field(d.config);
    snap.device_fields.push_back({d.name, shape_kind(field), to_polygon(field, cfg.polygon_n).vertices()});
  }
  for (std::size_t b = 0; b < cfg.bindings.size(); ++b) {
    BindingOutput& bo = out.bindings[b];
    const ConvexPolygon inter = convex_intersect(to_polygon(bo.sample.user_field, cfg.polygon_n),
                                                 to_polygon(bo.sample.device_field, cfg.polygon_n));
    snap.bindings.push_back({cfg.bindings[b].actor, cfg.bindings[b].device, kind_of(cfg.bindings[b].pattern),
                             bo.sample.pi, std::move(bo.state), inter.vertices(), std::move(bo.events)});
  }
  return snap;
}

SessionHost::SessionHost(SessionState initial) : session_(std::move(initial)) {}

SessionHost::~SessionHost() { stop(); }

void SessionHost::submit(ClientMessage msg, Sink reply) {
  std::lock_guard lock(queue_mutex_);
  queue_.emplace_back(std::move(msg), std::move(reply));
}

void SessionHost::submit_text(std::string_view text, const Sink& reply) {
  try {
    submit(parse_client_message(text), reply);
  } catch (const MessageError& e) {
    if (reply) reply(std::make_shared<const std::string>(serialize(ErrorReply{e.id(), e.what()})));
  }
}

std::uint64_t SessionHost::subscribe(Sink sink) {
  std::lock_guard lock(subscriber_mutex_);
  if (latest_) sink(latest_);
  const std::uint64_t id = next_subscriber_++;
  subscribers_.emplace(id, std::move(sink));
  return id;
}

void SessionHost::unsubscribe(std::uint64_t id) {
  std::lock_guard lock(subscriber_mutex_);
  subscribers_.erase(id);
}

void SessionHost::tick() {
  std::deque<std::pair<ClientMessage, Sink>> pending;
  {
    std::lock_guard lock(queue_mutex_);
    pending.swap(queue_);
  }

  std::optional<Snapshot> snap;
  std::vector<std::pair<Sink, Payload>> replies;
  {
    std::lock_guard lock(session_mutex_);
    for (auto& [msg, reply] : pending) {
      auto [next, answer] = apply_client_message(std::move(session_), msg);
      session_ = std::move(next);
      if (reply) replies.emplace_back(reply, std::make_shared<const std::string>(serialize(answer)));
    }
    snap = tick_and_snapshot(session_);
  }
  for (auto& [sink, payload] : replies) sink(payload);

  if (!snap) return;
  auto payload = std::make_shared<const std::string>(serialize(*snap));
  std::lock_guard lock(subscriber_mutex_);
  latest_ = payload;
  for (auto& [id, sink] : subscribers_) sink(payload);
}

void SessionHost::start() {
  if (worker_.joinable()) return;
  worker_ = std::jthread([this](std::stop_token st) { run(st); });
}

void SessionHost::stop() {
  if (!worker_.joinable()) return;
  worker_.request_stop();
  worker_.join();
}

void SessionHost::run(std::stop_token stop) {
  using clock = std::chrono::steady_clock;
  auto next = clock::now();
  while (!stop.stop_requested()) {
    tick();
    double rate = 20.0;
    {
      std::lock_guard lock(session_mutex_);
      rate = session_.config.tick_rate;
    }
    next += std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / rate));
    const auto now = clock::now();
    if (next < now) next = now;
    std::this_thread::sleep_until(next);
  }
}

SessionHost::Payload SessionHost::latest() const {
  std::lock_guard lock(subscriber_mutex_);
  return latest_;
}

SessionState SessionHost::session() const {
  std::lock_guard lock(session_mutex_);
  return session_;
}

}  // namespace fields
