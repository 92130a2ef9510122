#pragma once

// Deterministic in-memory network for scripted protocol runs.
//
// Registration traffic and controller-to-gateway policy pushes use the secure
// channel. SPA packets, grants and gateway connects use the open channel,
// where a Dolev-Yao adversary sees every frame and may replay, tamper,
// inject or forge. Capturing a UAV hands over its stored credentials and
// nothing held by the KGC.
//
// Script format (JSON):
//   {"name": "...", "seed": 7, "start_ms": 1000000,
//    "config": {"r_l": -3, "r_h": 5, "ts_window_ms": 30000, "grant_ttl_ms": 60000},
//    "steps": [{"op": "register", "uav": "A", "pwd": "pw"}, ...]}
//
// Ops:
//   register {uav, pwd}                  gate + secure-channel registration
//   auth     {uav, pwd?, ts_offset?}     honest SPA round, grant, gateway connect
//   advance  {ms}                        move the logical clock
//   gate     {uav}                       ask the controller's registration gate
//   eavesdrop                            report what the adversary has seen
//   replay   {frame?}                    resend an observed frame verbatim
//   tamper   {frame?, index, byte | xor} resend with one payload byte changed
//   inject   {claimed_id, payload}       send arbitrary hex as a sigma frame
//   capture  {uav}                       dump a UAV's stored state
//   forge    {as, using, count?}         signcrypt as `as` with captured state
//                                        of `using`, or "random" keys
// `frame` indexes the adversary's observation log (negative counts from the
// end); without it the latest observed SPA frame is used.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bazam/bytes.hpp"
#include "bazam/ledger.hpp"
#include "bazam/protocol.hpp"
#include "json.hpp"

namespace bazam::sim {

enum class ChannelKind : std::uint8_t { Secure, Open };

const char* to_string(ChannelKind k);

struct Frame {
    std::uint64_t seq = 0;
    std::uint64_t time_ms = 0;
    std::string sender;
    std::string receiver;
    ChannelKind channel = ChannelKind::Open;
    std::string label;
    std::string claimed_id;  // framing metadata, sent in the clear
    Bytes payload;
};

struct Script {
    std::string name = "unnamed";
    std::uint64_t seed = 1;
    std::uint64_t start_ms = 1'000'000;
    protocol::ControllerConfig config;
    nlohmann::json steps = nlohmann::json::array();

    // Throws ConfigError on structural problems.
    static Script from_json(const nlohmann::json& j);
    static Script load(const std::string& path);
    nlohmann::json to_json() const;
};

struct ScenarioReport {
    std::string name;
    std::uint64_t seed = 0;
    nlohmann::json steps = nlohmann::json::array();
    std::vector<Frame> transcript;
    std::vector<std::uint64_t> adversary_observed;  // frame seqs
    std::map<std::string, std::int64_t> reputation;
    std::map<std::string, std::vector<std::int64_t>> reputation_history;
    std::size_t chain_blocks = 0;
    std::string chain_head;
    bool chain_valid = false;

    // Secure-channel payloads are reduced to their length.
    nlohmann::json to_json() const;
    std::string dump() const { return to_json().dump(2); }
};

class Network {
public:
    const Frame& send(std::uint64_t now, std::string sender, std::string receiver, ChannelKind channel,
                      std::string label, std::string claimed_id, Bytes payload);
    const std::vector<Frame>& transcript() const { return frames_; }
    // Frames visible to the adversary tap, in delivery order.
    const std::vector<Frame>& open_frames() const { return open_; }

private:
    std::vector<Frame> frames_;
    std::vector<Frame> open_;
};

class Adversary {
public:
    explicit Adversary(Rng rng) : rng_(std::move(rng)) {}

    void observe(const Frame& f) { log_.push_back(f); }
    const std::vector<Frame>& log() const { return log_; }
    const std::map<std::string, protocol::UavCredentials>& captured() const { return captured_; }
    void capture(protocol::UavCredentials creds);
    Rng& rng() { return rng_; }

private:
    Rng rng_;
    std::vector<Frame> log_;
    std::map<std::string, protocol::UavCredentials> captured_;
};

class Simulation {
public:
    explicit Simulation(const Script& script);
    ~Simulation();

    // Throws ConfigError on a malformed step.
    void step(const nlohmann::json& s);
    void run();
    ScenarioReport report() const;

    const Network& network() const { return net_; }
    const Adversary& adversary() const { return adversary_; }
    const ledger::Chain& chain() const { return chain_; }
    std::uint64_t now() const { return now_; }

private:
    struct Node;

    Node& uav(const std::string& name);
    const Frame& transmit(std::string sender, std::string receiver, ChannelKind ch, std::string label,
                          std::string claimed_id, Bytes payload);
    const Frame& pick_frame(const nlohmann::json& s) const;
    nlohmann::json deliver_sigma(const std::string& sender, const std::string& claimed_id, Bytes payload);
    std::optional<std::int64_t> rep_of(const std::string& id) const;

    Script script_;
    Rng rng_;
    std::uint64_t now_;
    protocol::Kgc kgc_;
    protocol::Controller controller_;
    protocol::Gateway gateway_;
    ledger::Chain chain_;
    Network net_;
    Adversary adversary_;
    std::map<std::string, std::unique_ptr<Node>> uavs_;
    nlohmann::json steps_ = nlohmann::json::array();
};

ScenarioReport run_scenario(const Script& script);

// Named scripts covering the honest path and the adversary capabilities.
std::vector<Script> scenario_suite(std::uint64_t seed = 7);

}  // namespace bazam::sim
