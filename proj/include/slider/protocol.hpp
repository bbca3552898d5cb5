#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "slider/teleop.hpp"

// Line-delimited JSON wire protocol, version 1.
//
//   client -> server  {"v":1,"type":"cmd","channel":"surge"|"sway"|"yaw","value":"pos"|"neg"|"off"}
//                     {"v":1,"type":"reset"}
//   server -> client  {"v":1,"type":"state","t":..,"x":..,"y":..,"theta":..,"vx":..,"vy":..,"r":..,
//                      "thr":[0/1 x8],"air":..,"cmd":{"surge":..,"sway":..,"yaw":..}}
//                     {"v":1,"type":"error","reason":"parse"|"invalid"|"version"|"not_commander"}
//
// Client messages may omit "v"; when present it must be 1.

namespace slider::protocol {

inline constexpr int kVersion = 1;

struct CommandMessage {
    TeleopCommand command;
};
struct ResetMessage {};
struct ProtocolError {
    std::string reason;
};

using ClientMessage = std::variant<CommandMessage, ResetMessage, ProtocolError>;

inline const char* channel_name(Channel c) {
    switch (c) {
        case Channel::Surge: return "surge";
        case Channel::Sway: return "sway";
        case Channel::Yaw: return "yaw";
    }
    return "?";
}

inline const char* level_name(Level l) {
    switch (l) {
        case Level::Off: return "off";
        case Level::Positive: return "pos";
        case Level::Negative: return "neg";
    }
    return "?";
}

inline std::optional<Channel> parse_channel(std::string_view s) {
    if (s == "surge") return Channel::Surge;
    if (s == "sway") return Channel::Sway;
    if (s == "yaw") return Channel::Yaw;
    return std::nullopt;
}

inline std::optional<Level> parse_level(std::string_view s) {
    if (s == "pos") return Level::Positive;
    if (s == "neg") return Level::Negative;
    if (s == "off") return Level::Off;
    return std::nullopt;
}

inline ClientMessage parse_client_message(std::string_view line) {
    const auto msg = nlohmann::json::parse(line, nullptr, false);
    if (msg.is_discarded() || !msg.is_object()) return ProtocolError{"parse"};
    if (const auto v = msg.find("v"); v != msg.end() && (!v->is_number_integer() || v->get<int>() != kVersion))
        return ProtocolError{"version"};
    const auto type = msg.find("type");
    if (type == msg.end() || !type->is_string()) return ProtocolError{"invalid"};

    if (*type == "reset") return ResetMessage{};
    if (*type == "cmd") {
        const auto ch = msg.find("channel");
        const auto val = msg.find("value");
        if (ch == msg.end() || val == msg.end() || !ch->is_string() || !val->is_string()) return ProtocolError{"invalid"};
        const auto channel = parse_channel(ch->get<std::string>());
        const auto level = parse_level(val->get<std::string>());
        if (!channel || !level) return ProtocolError{"invalid"};
        TeleopCommand cmd{*channel, *level, 0};
        if (const auto t = msg.find("t"); t != msg.end() && t->is_number()) cmd.timestamp_ms = t->get<std::int64_t>();
        return CommandMessage{cmd};
    }
    return ProtocolError{"invalid"};
}

inline std::string state_frame(const TelemetryFrame& f) {
    nlohmann::ordered_json j;
    j["v"] = kVersion;
    j["type"] = "state";
    j["t"] = f.t;
    j["x"] = f.state.x;
    j["y"] = f.state.y;
    j["theta"] = f.state.wrapped_theta();
    j["vx"] = f.state.v_x;
    j["vy"] = f.state.v_y;
    j["r"] = f.state.r;
    auto thr = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < kThrusterCount; ++k) thr.push_back(f.thrusters.test(k) ? 1 : 0);
    j["thr"] = std::move(thr);
    j["air"] = f.air_pressure;
    j["cmd"] = {{"surge", level_name(f.commanded[Channel::Surge])},
                {"sway", level_name(f.commanded[Channel::Sway])},
                {"yaw", level_name(f.commanded[Channel::Yaw])}};
    return j.dump();
}

inline std::string error_frame(std::string_view reason) {
    nlohmann::ordered_json j;
    j["v"] = kVersion;
    j["type"] = "error";
    j["reason"] = reason;
    return j.dump();
}

inline std::string command_message(Channel channel, Level level) {
    nlohmann::ordered_json j;
    j["v"] = kVersion;
    j["type"] = "cmd";
    j["channel"] = channel_name(channel);
    j["value"] = level_name(level);
    return j.dump();
}

}  // namespace slider::protocol
