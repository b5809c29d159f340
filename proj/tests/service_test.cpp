#include <array>
#include <chrono>
#include <future>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <gtest/gtest.h>

#include "fields/scenario_io.hpp"
#include "fields/service.hpp"
#include "fields/transport.hpp"

namespace fields {
namespace {

using nlohmann::json;
namespace asio = boost::asio;
using tcp = asio::ip::tcp;

std::string scenario_path(const std::string& name) { return std::string(FIELDS_SCENARIO_DIR) + "/" + name + ".json"; }

ScenarioConfig greeting_scenario() {
  return load_scenario(R"({
    "version": "fields-scenario/1",
    "name": "live",
    "arena": {"width": 5, "height": 5},
    "devices": [{"name": "speaker", "position": [2.5, 0.5], "radius": 1, "directionality": "non_directional"}],
    "actors": [{"name": "user", "k": 0.5, "waypoints": [{"t": 0, "position": [2.5, 4.5]}]}],
    "bindings": [{"actor": "user", "device": "speaker", "pattern": "greeting", "greeting": {"t1": 0.6, "t2": 0.4}}]
  })");
}

ClientMessage msg(std::variant<LoadScenario, MoveActor, SetParam, PauseResume, Reset> body, std::int64_t id = 1) {
  return ClientMessage{id, std::move(body)};
}

TEST(ParseClientMessage, Examples) {
  ClientMessage m = parse_client_message(
      R"({"schema":"fields-msg/1","id":7,"type":"move_actor","name":"user","position":[2,2]})");
  EXPECT_EQ(m.id, 7);
  ASSERT_TRUE(std::holds_alternative<MoveActor>(m.body));
  EXPECT_EQ(std::get<MoveActor>(m.body).position, Vec2(2, 2));

  m = parse_client_message(R"({"schema":"fields-msg/1","type":"set_param","path":"actors[0].k","value":0.3})");
  EXPECT_FALSE(m.id.has_value());
  EXPECT_EQ(std::get<SetParam>(m.body).value, 0.3);
  EXPECT_TRUE(std::holds_alternative<PauseResume>(parse_client_message(R"({"schema":"fields-msg/1","type":"pause_resume"})").body));
  EXPECT_TRUE(std::holds_alternative<Reset>(parse_client_message(R"({"schema":"fields-msg/1","type":"reset"})").body));
}

TEST(ParseClientMessage, Errors) {
  EXPECT_THROW(parse_client_message("not json"), MessageError);
  EXPECT_THROW(parse_client_message(R"({"type":"reset"})"), MessageError);
  EXPECT_THROW(parse_client_message(R"({"schema":"fields-msg/1","type":"dance"})"), MessageError);
  try {
    parse_client_message(R"({"schema":"fields-msg/1","id":4,"type":"move_actor","name":"user","position":[1]})");
    FAIL();
  } catch (const MessageError& e) {
    EXPECT_EQ(e.id(), 4);
  }
}

TEST(ClientMessageJson, RoundTrip) {
  const ClientMessage m = msg(SetParam{"bindings[0].greeting.t2", 0.3}, 9);
  const ClientMessage back = parse_client_message(client_message_to_json(m).dump());
  EXPECT_EQ(back.id, 9);
  EXPECT_EQ(std::get<SetParam>(back.body).path, "bindings[0].greeting.t2");
}

TEST(ApplyClientMessage, SetParamUpdatesConfig) {
  auto [s, reply] = apply_client_message(make_session(greeting_scenario()), msg(SetParam{"actors[0].k", 0.3}));
  EXPECT_TRUE(std::holds_alternative<Ack>(reply));
  EXPECT_EQ(s.config.actors[0].params.k, 0.3);
}

TEST(ApplyClientMessage, MoveActorSwitchesToClientControl) {
  auto [s, reply] = apply_client_message(make_session(greeting_scenario()), msg(MoveActor{"user", Vec2(2, 2)}));
  EXPECT_TRUE(std::holds_alternative<Ack>(reply));
  EXPECT_TRUE(s.engine.actors[0].client_driven);
  ASSERT_TRUE(s.engine.actors[0].client_position.has_value());
  EXPECT_EQ(*s.engine.actors[0].client_position, Vec2(2, 2));
}

TEST(ApplyClientMessage, InvalidMessagesLeaveSessionUntouched) {
  const SessionState start = make_session(greeting_scenario());
  const std::string before = config_hash(start.config);
  for (const ClientMessage& m : {msg(SetParam{"bindings[0].greeting.t2", 0.9}), msg(MoveActor{"ghost", Vec2(1, 1)}),
                                 msg(MoveActor{"user", Vec2(9, 1)}), msg(SetParam{"tick_rate", 40}),
                                 msg(LoadScenario{json{{"version", "fields-scenario/1"}}})}) {
    auto [s, reply] = apply_client_message(start, m);
    ASSERT_TRUE(std::holds_alternative<ErrorReply>(reply));
    EXPECT_EQ(std::get<ErrorReply>(reply).id, 1);
    EXPECT_FALSE(std::get<ErrorReply>(reply).reason.empty());
    EXPECT_EQ(config_hash(s.config), before);
    EXPECT_FALSE(s.engine.actors[0].client_driven);
  }
  auto [s, reply] = apply_client_message(start, msg(SetParam{"bindings[0].greeting.t2", 0.9}));
  EXPECT_NE(std::get<ErrorReply>(reply).reason.find("t2 must be <= t1"), std::string::npos);
}

TEST(ApplyClientMessage, LoadScenarioReplacesSession) {
  SessionState s = make_session(greeting_scenario());
  tick_and_snapshot(s);
  const json doc = scenario_to_json(load_scenario_file(scenario_path("recipe_video")));
  auto [next, reply] = apply_client_message(std::move(s), msg(LoadScenario{doc}));
  ASSERT_TRUE(std::holds_alternative<Ack>(reply));
  EXPECT_EQ(next.config.name, "play_pause_recipe_video");
  EXPECT_EQ(next.engine.tick, 0u);
}

TEST(ApplyClientMessage, ResetRewindsAndReleasesActors) {
  SessionState s = make_session(greeting_scenario());
  s = apply_client_message(std::move(s), msg(MoveActor{"user", Vec2(1, 1)})).first;
  for (int i = 0; i < 5; ++i) tick_and_snapshot(s);
  s = apply_client_message(std::move(s), msg(Reset{})).first;
  EXPECT_EQ(s.engine.tick, 0u);
  EXPECT_FALSE(s.engine.actors[0].client_driven);
}

TEST(TickAndSnapshot, ShapesAndVertexCounts) {
  SessionState s = make_session(load_scenario_file(scenario_path("entertainment_video")));
  const auto snap = tick_and_snapshot(s);
  ASSERT_TRUE(snap.has_value());
  EXPECT_EQ(snap->tick, 0u);
  ASSERT_EQ(snap->user_fields.size(), 1u);
  EXPECT_EQ(snap->user_fields[0].vertices.size(), 64u);
  ASSERT_EQ(snap->device_fields.size(), 1u);
  EXPECT_EQ(snap->device_fields[0].kind, "half_disk");
  EXPECT_EQ(snap->device_fields[0].vertices.size(), 64u);
  ASSERT_EQ(snap->bindings.size(), 1u);
  EXPECT_GE(snap->bindings[0].intersection.size(), 3u);

  const json j = json::parse(serialize(*snap));
  EXPECT_EQ(j.at("schema"), "fields-msg/1");
  EXPECT_EQ(j.at("type"), "snapshot");
  EXPECT_EQ(j.at("bindings")[0].at("pattern"), "turn_taking");
  EXPECT_EQ(j.at("user_fields")[0].at("vertices").size(), 64u);
}

TEST(TickAndSnapshot, PausedSessionEmitsNothing) {
  SessionState s = make_session(greeting_scenario());
  s = apply_client_message(std::move(s), msg(PauseResume{})).first;
  EXPECT_TRUE(s.paused);
  EXPECT_FALSE(tick_and_snapshot(s).has_value());
  EXPECT_EQ(s.engine.tick, 0u);
  s = apply_client_message(std::move(s), msg(PauseResume{})).first;
  EXPECT_TRUE(tick_and_snapshot(s).has_value());
}

TEST(TickAndSnapshot, StationaryActorHasConstantPi) {
  ScenarioConfig cfg = greeting_scenario();
  cfg = set_param(cfg, "devices[0].radius", 3.0);
  SessionState s = make_session(cfg);
  const double first = tick_and_snapshot(s)->bindings[0].pi;
  EXPECT_GT(first, 0.0);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(tick_and_snapshot(s)->bindings[0].pi, first);
}

TEST(TickAndSnapshot, MatchesOfflineRunTickForTick) {
  for (const char* name : {"entertainment_video", "email_notification", "scroll_by_voice", "recipe_video"}) {
    const ScenarioConfig cfg = load_scenario_file(scenario_path(name));
    const EventTrace offline = run_scenario(cfg);
    SessionState s = make_session(cfg);
    for (const TraceRecord& r : offline.records) {
      const auto snap = tick_and_snapshot(s);
      ASSERT_TRUE(snap.has_value());
      EXPECT_EQ(snap->bindings[0].pi, r.pi);
      EXPECT_EQ(snap->bindings[0].events, r.events);
    }
  }
}

TEST(TickAndSnapshot, DraggedAndHeldWakesExactlyOnce) {
  SessionState s = make_session(greeting_scenario());
  std::vector<PatternEvent> events;
  auto step = [&] {
    const auto snap = tick_and_snapshot(s);
    for (const auto& e : snap->bindings[0].events) events.push_back(e);
  };
  // Drag from the far wall to just in front of the speaker, then hold.
  for (int i = 0; i <= 40; ++i) {
    const double y = 4.5 - (4.5 - 0.6) * i / 40.0;
    s = apply_client_message(std::move(s), msg(MoveActor{"user", Vec2(2.5, y)})).first;
    step();
  }
  for (int i = 0; i < 200; ++i) step();
  ASSERT_EQ(events.size(), 1u);
  EXPECT_EQ(events[0].kind, EventKind::WakeUp);
}

TEST(SessionHost, RepliesAfterDrainAndBroadcastsSnapshots) {
  SessionHost host(make_session(greeting_scenario()));
  std::vector<std::string> seen;
  host.subscribe([&](SessionHost::Payload p) { seen.push_back(*p); });
  std::vector<std::string> replies;
  host.submit_text(R"({"schema":"fields-msg/1","id":3,"type":"move_actor","name":"user","position":[2,2]})",
                   [&](SessionHost::Payload p) { replies.push_back(*p); });
  EXPECT_TRUE(replies.empty());
  host.tick();
  ASSERT_EQ(replies.size(), 1u);
  EXPECT_EQ(json::parse(replies[0]).at("type"), "ack");
  EXPECT_EQ(json::parse(replies[0]).at("id"), 3);
  ASSERT_EQ(seen.size(), 1u);
  EXPECT_EQ(json::parse(seen[0]).at("actors")[0].at("position"), json::parse("[2.0, 2.0]"));

  host.submit_text("garbage", [&](SessionHost::Payload p) { replies.push_back(*p); });
  ASSERT_EQ(replies.size(), 2u);
  EXPECT_EQ(json::parse(replies[1]).at("type"), "error");
}

TEST(SessionHost, LateSubscriberGetsLatestFirst) {
  SessionHost host(make_session(greeting_scenario()));
  host.tick();
  host.tick();
  std::vector<SessionHost::Payload> seen;
  host.subscribe([&](SessionHost::Payload p) { seen.push_back(p); });
  ASSERT_EQ(seen.size(), 1u);
  EXPECT_EQ(json::parse(*seen[0]).at("tick"), 1);
  EXPECT_EQ(seen[0], host.latest());
  host.tick();
  ASSERT_EQ(seen.size(), 2u);
  EXPECT_EQ(json::parse(*seen[1]).at("tick"), 2);
}

TEST(SessionHost, SubscribersShareOnePayload) {
  SessionHost host(make_session(greeting_scenario()));
  SessionHost::Payload a, b;
  host.subscribe([&](SessionHost::Payload p) { a = p; });
  const auto id = host.subscribe([&](SessionHost::Payload p) { b = p; });
  host.tick();
  EXPECT_EQ(a.get(), b.get());
  host.unsubscribe(id);
  host.tick();
  EXPECT_NE(a.get(), b.get());
}

// Integration: one server, both framings, driven from the test thread.

class Live : public ::testing::Test {
 protected:
  Live() : host_(make_session(greeting_scenario())), server_(host_, 0, "127.0.0.1") { server_.start(); }

  SessionHost host_;
  Server server_;
};

std::string read_frame(tcp::socket& socket) {
  std::array<unsigned char, 4> h{};
  asio::read(socket, asio::buffer(h));
  const std::uint32_t n = (std::uint32_t{h[0]} << 24) | (std::uint32_t{h[1]} << 16) | (std::uint32_t{h[2]} << 8) | h[3];
  std::string body(n, '\0');
  asio::read(socket, asio::buffer(body));
  return body;
}

// Ticks the host until `want` messages of `type` have arrived via `next`.
template <typename Next>
std::vector<json> collect(SessionHost& host, Next next, const std::string& type, std::size_t want) {
  std::vector<json> out;
  auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(10);
  while (out.size() < want && std::chrono::steady_clock::now() < deadline) {
    auto fut = std::async(std::launch::async, next);
    while (fut.wait_for(std::chrono::milliseconds(20)) != std::future_status::ready) host.tick();
    json j = json::parse(fut.get());
    if (j.at("type") == type) out.push_back(std::move(j));
  }
  return out;
}

TEST_F(Live, FramedTcpClient) {
  asio::io_context ioc;
  tcp::socket socket(ioc);
  socket.connect(tcp::endpoint(asio::ip::make_address("127.0.0.1"), server_.port()));
  const std::string text = R"({"schema":"fields-msg/1","id":11,"type":"move_actor","name":"user","position":[2.5,1.5]})";
  asio::write(socket, asio::buffer(encode_frame(text)));

  const auto acks = collect(host_, [&] { return read_frame(socket); }, "ack", 1);
  ASSERT_EQ(acks.size(), 1u);
  EXPECT_EQ(acks[0].at("id"), 11);
  const auto snaps = collect(host_, [&] { return read_frame(socket); }, "snapshot", 2);
  ASSERT_EQ(snaps.size(), 2u);
  EXPECT_EQ(snaps[1].at("actors")[0].at("position"), json::parse("[2.5, 1.5]"));
  EXPECT_TRUE(snaps[1].at("actors")[0].at("client_driven").get<bool>());
}

TEST_F(Live, WebSocketClient) {
  namespace websocket = boost::beast::websocket;
  asio::io_context ioc;
  websocket::stream<tcp::socket> ws(ioc);
  ws.next_layer().connect(tcp::endpoint(asio::ip::make_address("127.0.0.1"), server_.port()));
  ws.handshake("127.0.0.1", "/");
  ws.text(true);
  ws.write(asio::buffer(std::string(R"({"schema":"fields-msg/1","id":5,"type":"pause_resume"})")));
  auto next = [&] {
    boost::beast::flat_buffer buf;
    ws.read(buf);
    return boost::beast::buffers_to_string(buf.data());
  };
  const auto acks = collect(host_, next, "ack", 1);
  ASSERT_EQ(acks.size(), 1u);
  EXPECT_EQ(acks[0].at("id"), 5);
  EXPECT_TRUE(host_.session().paused);
  ws.write(asio::buffer(std::string(R"({"schema":"fields-msg/1","type":"set_param","path":"bogus","value":1})")));
  const auto errors = collect(host_, next, "error", 1);
  ASSERT_EQ(errors.size(), 1u);
  ws.close(websocket::close_code::normal);
}

}  // namespace
}  // namespace fields
