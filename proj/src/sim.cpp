#include "bazam/sim.hpp"

#include <fstream>

#include "bazam/error.hpp"

namespace bazam::sim {

using nlohmann::json;
using namespace bazam::protocol;

namespace {

const std::set<std::string>& known_ops() {
    static const std::set<std::string> ops{"register", "auth",    "advance", "gate",    "eavesdrop", "replay",
                                           "tamper",   "inject",  "capture", "forge"};
    return ops;
}

std::string need_string(const json& s, const char* key) {
    auto it = s.find(key);
    if (it == s.end() || !it->is_string()) throw ConfigError(std::string("step needs string field '") + key + "'");
    return it->get<std::string>();
}

std::int64_t need_int(const json& s, const char* key) {
    auto it = s.find(key);
    if (it == s.end() || !it->is_number_integer())
        throw ConfigError(std::string("step needs integer field '") + key + "'");
    return it->get<std::int64_t>();
}

std::int64_t opt_int(const json& s, const char* key, std::int64_t fallback) {
    return s.contains(key) ? need_int(s, key) : fallback;
}

Bytes encode_policy(const Policy& p) {
    ByteWriter w;
    w.var(p.uav_id).raw(p.addr2).u16(p.port2).u64(p.expiry_ms);
    return std::move(w).bytes();
}

Bytes encode_credentials(const UavCredentials& c) {
    ByteWriter w;
    w.var(c.uav_id).raw(c.pk_u.encode()).raw(c.sk_u.encode()).raw(c.pk_c.encode());
    return std::move(w).bytes();
}

}  // namespace

const char* to_string(ChannelKind k) { return k == ChannelKind::Secure ? "secure" : "open"; }

// --- script ----------------------------------------------------------------

Script Script::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("script must be a JSON object");
    Script s;
    try {
        s.name = j.value("name", s.name);
        s.seed = j.value("seed", s.seed);
        s.start_ms = j.value("start_ms", s.start_ms);
        if (j.contains("config")) {
            const auto& c = j.at("config");
            s.config.r_l = c.value("r_l", s.config.r_l);
            s.config.r_h = c.value("r_h", s.config.r_h);
            s.config.ts_window_ms = c.value("ts_window_ms", s.config.ts_window_ms);
            s.config.grant_ttl_ms = c.value("grant_ttl_ms", s.config.grant_ttl_ms);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad script header: ") + e.what());
    }
    if (!j.contains("steps") || !j.at("steps").is_array()) throw ConfigError("script needs a 'steps' array");
    for (const auto& step : j.at("steps")) {
        if (!step.is_object()) throw ConfigError("every step must be an object");
        auto op = need_string(step, "op");
        if (!known_ops().count(op)) throw ConfigError("unknown op: " + op);
    }
    s.steps = j.at("steps");
    if (s.config.r_l >= s.config.r_h) throw ConfigError("reputation thresholds need r_l < r_h");
    return s;
}

Script Script::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open script: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("script is not valid JSON: ") + e.what());
    }
    return from_json(j);
}

json Script::to_json() const {
    return {{"name", name},
            {"seed", seed},
            {"start_ms", start_ms},
            {"config",
             {{"r_l", config.r_l},
              {"r_h", config.r_h},
              {"ts_window_ms", config.ts_window_ms},
              {"grant_ttl_ms", config.grant_ttl_ms}}},
            {"steps", steps}};
}

// --- report ----------------------------------------------------------------

json ScenarioReport::to_json() const {
    json frames = json::array();
    for (const auto& f : transcript) {
        json jf{{"seq", f.seq},       {"t", f.time_ms},     {"from", f.sender},        {"to", f.receiver},
                {"channel", to_string(f.channel)}, {"label", f.label}, {"claimed_id", f.claimed_id},
                {"bytes", f.payload.size()}};
        if (f.channel == ChannelKind::Open) jf["payload"] = to_hex(f.payload);
        frames.push_back(std::move(jf));
    }
    return {{"name", name},
            {"seed", seed},
            {"steps", steps},
            {"transcript", frames},
            {"adversary_observed", adversary_observed},
            {"reputation", reputation},
            {"reputation_history", reputation_history},
            {"chain", {{"blocks", chain_blocks}, {"head", chain_head}, {"valid", chain_valid}}}};
}

// --- network ---------------------------------------------------------------

const Frame& Network::send(std::uint64_t now, std::string sender, std::string receiver, ChannelKind channel,
                           std::string label, std::string claimed_id, Bytes payload) {
    Frame f{frames_.size(), now, std::move(sender), std::move(receiver), channel, std::move(label),
            std::move(claimed_id), std::move(payload)};
    if (channel == ChannelKind::Open) open_.push_back(f);
    frames_.push_back(std::move(f));
    return frames_.back();
}

void Adversary::capture(UavCredentials creds) {
    auto id = bazam::to_string(creds.uav_id);
    captured_.insert_or_assign(id, std::move(creds));
}

// --- simulation ------------------------------------------------------------

struct Simulation::Node {
    Uav uav;
    std::string pwd;
};

Simulation::Simulation(const Script& script)
    : script_(script),
      rng_(script.seed),
      now_(script.start_ms),
      kgc_(rng_.fork()),
      controller_(kgc_.register_controller("sdp-controller"), kgc_.spk(), rng_.fork(), script.config),
      gateway_(rng_.fork()),
      chain_(script.start_ms),
      adversary_(rng_.fork()) {}

Simulation::~Simulation() = default;

const Frame& Simulation::transmit(std::string sender, std::string receiver, ChannelKind ch, std::string label,
                                  std::string claimed_id, Bytes payload) {
    const auto& f =
        net_.send(now_, std::move(sender), std::move(receiver), ch, std::move(label), std::move(claimed_id),
                  std::move(payload));
    if (ch == ChannelKind::Open) adversary_.observe(f);
    return f;
}

Simulation::Node& Simulation::uav(const std::string& name) {
    auto it = uavs_.find(name);
    if (it == uavs_.end()) {
        auto device = puf::PufDevice::manufacture(rng_);
        auto node = std::make_unique<Node>(Node{Uav(to_bytes(name), device, rng_.fork()), {}});
        it = uavs_.emplace(name, std::move(node)).first;
    }
    return *it->second;
}

std::optional<std::int64_t> Simulation::rep_of(const std::string& id) const {
    auto rec = chain_.latest_record(to_bytes(id));
    if (!rec) return std::nullopt;
    return rec->rep;
}

const Frame& Simulation::pick_frame(const json& s) const {
    const auto& log = adversary_.log();
    if (s.contains("frame")) {
        auto i = need_int(s, "frame");
        const auto n = static_cast<std::int64_t>(log.size());
        if (i < 0) i += n;
        if (i < 0 || i >= n) throw ConfigError("frame index outside the observation log");
        return log[static_cast<std::size_t>(i)];
    }
    for (auto it = log.rbegin(); it != log.rend(); ++it)
        if (it->label == "spa") return *it;
    throw ConfigError("no SPA frame has been observed yet");
}

json Simulation::deliver_sigma(const std::string& sender, const std::string& claimed_id, Bytes payload) {
    transmit(sender, "controller", ChannelKind::Open, "spa", claimed_id, std::move(payload));
    const Bytes wire = net_.transcript().back().payload;
    auto before = rep_of(claimed_id);
    auto out = controller_.handle_request(chain_, gateway_, to_bytes(claimed_id), wire, now_);
    json r{{"outcome", out.ok() ? "granted" : protocol::to_string(*out.failure)},
           {"rep_before", before ? json(*before) : json(nullptr)}};
    auto after = rep_of(claimed_id);
    r["rep_after"] = after ? json(*after) : json(nullptr);
    if (out.grant) {
        transmit("controller", "gateway", ChannelKind::Secure, "policy", claimed_id, encode_policy(out.grant->policy));
        transmit("controller", sender, ChannelKind::Open, "grant", claimed_id, out.grant->m);
    }
    return r;
}

void Simulation::step(const json& s) {
    if (!s.is_object()) throw ConfigError("every step must be an object");
    const auto op = need_string(s, "op");
    json rec{{"step", steps_.size()}, {"op", op}, {"t", now_}};

    if (op == "register") {
        const auto name = need_string(s, "uav");
        const auto pwd = s.contains("pwd") ? need_string(s, "pwd") : "pw-" + name;
        auto& node = uav(name);
        transmit(name, "controller", ChannelKind::Secure, "register-request", name, to_bytes(name));
        auto gate = controller_.gate_registration(chain_, node.uav.id());
        rec["uav"] = name;
        rec["decision"] = protocol::to_string(gate.decision);
        rec["issued"] = false;
        if (gate.decision == Decision::ForwardToKgc) {
            transmit("controller", "kgc", ChannelKind::Secure, "forward", name, to_bytes(name));
            auto challenge = kgc_.issue_challenge(*gate.ticket);
            transmit("kgc", name, ChannelKind::Secure, "challenge", name, challenge);
            auto response = node.uav.respond(challenge);
            transmit(name, "kgc", ChannelKind::Secure, "puf-response", name, Bytes(response.begin(), response.end()));
            auto creds = kgc_.register_uav(chain_, node.uav.id(), challenge, response, now_);
            transmit("kgc", name, ChannelKind::Secure, "credentials", name, encode_credentials(creds));
            node.uav.install(std::move(creds));
            transmit(name, "controller", ChannelKind::Secure, "password", name, to_bytes(pwd));
            controller_.provision_password(node.uav.id(), to_bytes(pwd));
            node.pwd = pwd;
            rec["issued"] = true;
        }
        auto r = rep_of(name);
        rec["rep"] = r ? json(*r) : json(nullptr);
    } else if (op == "auth") {
        const auto name = need_string(s, "uav");
        auto& node = uav(name);
        rec["uav"] = name;
        if (!node.uav.registered()) {
            rec["outcome"] = "not-registered";
        } else {
            const auto pwd = s.contains("pwd") ? need_string(s, "pwd") : node.pwd;
            const auto offset = opt_int(s, "ts_offset", 0);
            const auto ts = offset < 0 && static_cast<std::uint64_t>(-offset) > now_ ? 0 : now_ + offset;
            auto pac = node.uav.build_packet(to_bytes(pwd), 1, {192, 168, 0, 10}, 5000, ts);
            auto wire = node.uav.signcrypt(pac).encode();
            rec.update(deliver_sigma(name, name, std::move(wire)));
            if (rec["outcome"] == "granted") {
                const auto& m = net_.transcript().back().payload;
                auto info = node.uav.open_grant(m);
                rec["grant_opened"] = info.has_value();
                if (info) {
                    transmit(name, "gateway", ChannelKind::Open, "connect", name, encode_grant(*info));
                    auto session = gateway_.connect(node.uav.id(), info->addr2, info->port2, now_);
                    rec["session"] = session.has_value();
                    if (session) transmit("gateway", name, ChannelKind::Open, "session", name, session->session_id);
                }
            }
        }
    } else if (op == "advance") {
        const auto ms = need_int(s, "ms");
        if (ms < 0) throw ConfigError("advance needs a non-negative 'ms'");
        now_ += static_cast<std::uint64_t>(ms);
        rec["t"] = now_;
    } else if (op == "gate") {
        const auto name = need_string(s, "uav");
        rec["uav"] = name;
        rec["decision"] = protocol::to_string(controller_.gate_registration(chain_, to_bytes(name)).decision);
        auto r = rep_of(name);
        rec["rep"] = r ? json(*r) : json(nullptr);
    } else if (op == "eavesdrop") {
        std::map<std::string, std::size_t> labels;
        for (const auto& f : adversary_.log()) ++labels[f.label];
        rec["observed"] = adversary_.log().size();
        rec["labels"] = labels;
    } else if (op == "replay") {
        const Frame f = pick_frame(s);
        rec["frame"] = f.seq;
        rec.update(deliver_sigma("adversary", f.claimed_id, f.payload));
    } else if (op == "tamper") {
        const Frame f = pick_frame(s);
        const auto index = need_int(s, "index");
        if (index < 0 || static_cast<std::size_t>(index) >= f.payload.size())
            throw ConfigError("tamper index outside the frame payload");
        Bytes payload = f.payload;
        auto& b = payload[static_cast<std::size_t>(index)];
        if (s.contains("byte")) {
            b = static_cast<std::uint8_t>(need_int(s, "byte"));
        } else {
            b ^= static_cast<std::uint8_t>(need_int(s, "xor"));
        }
        rec["frame"] = f.seq;
        rec["index"] = index;
        rec["changed"] = payload != f.payload;
        rec.update(deliver_sigma("adversary", f.claimed_id, std::move(payload)));
    } else if (op == "inject") {
        const auto claimed = need_string(s, "claimed_id");
        Bytes payload;
        try {
            payload = from_hex(need_string(s, "payload"));
        } catch (const DecodeError& e) {
            throw ConfigError(std::string("inject payload: ") + e.what());
        }
        rec["claimed_id"] = claimed;
        rec.update(deliver_sigma("adversary", claimed, std::move(payload)));
    } else if (op == "capture") {
        const auto name = need_string(s, "uav");
        auto& node = uav(name);
        if (!node.uav.registered()) throw ConfigError("cannot capture unregistered UAV " + name);
        auto creds = node.uav.capture();
        rec["uav"] = name;
        rec["stored_bytes"] = creds.storage_bytes();
        adversary_.capture(std::move(creds));
    } else if (op == "forge") {
        const auto target = need_string(s, "as");
        const auto source = need_string(s, "using");
        const auto count = opt_int(s, "count", 1);
        if (count < 1) throw ConfigError("forge count must be positive");
        auto& rng = adversary_.rng();
        rec["as"] = target;
        rec["using"] = source;
        rec["rep_before"] = rep_of(target) ? json(*rep_of(target)) : json(nullptr);
        std::map<std::string, std::int64_t> outcomes;
        for (std::int64_t i = 0; i < count; ++i) {
            UavCredentials creds;
            if (source == "random") {
                // Public knowledge plus a made-up signing key.
                auto on_chain = chain_.latest_record(to_bytes(target));
                creds.uav_id = to_bytes(target);
                creds.pk_u = on_chain ? crypto::G1Elem::decode(on_chain->pk_u) : crypto::h1(to_bytes(target));
                creds.sk_u = crypto::scalar_mul(crypto::Scalar::random_nonzero(rng), crypto::generator());
                creds.pk_c = controller_.pk();
                creds.spk = kgc_.spk();
            } else {
                auto it = adversary_.captured().find(source);
                if (it == adversary_.captured().end()) throw ConfigError("forge uses an uncaptured UAV: " + source);
                creds = it->second;
            }
            SpaPacket pac{rng.bytes(kNonceBytes), to_bytes(target), to_bytes("guess"), now_, 1, {}, 0};
            auto wire = protocol::signcrypt(creds, pac, rng).sigma.encode();
            auto r = deliver_sigma("adversary", target, std::move(wire));
            ++outcomes[r["outcome"].get<std::string>()];
        }
        rec["attempts"] = count;
        rec["outcomes"] = outcomes;
        rec["rep_after"] = rep_of(target) ? json(*rep_of(target)) : json(nullptr);
    } else {
        throw ConfigError("unknown op: " + op);
    }
    steps_.push_back(std::move(rec));
}

void Simulation::run() {
    for (const auto& s : script_.steps) step(s);
}

ScenarioReport Simulation::report() const {
    ScenarioReport r;
    r.name = script_.name;
    r.seed = script_.seed;
    r.steps = steps_;
    r.transcript = net_.transcript();
    for (const auto& f : adversary_.log()) r.adversary_observed.push_back(f.seq);
    for (auto& [id, hist] : chain_.reputation_history()) {
        r.reputation[bazam::to_string(id)] = hist.back();
        r.reputation_history[bazam::to_string(id)] = hist;
    }
    r.chain_blocks = chain_.size();
    r.chain_head = to_hex(chain_.head().hash);
    r.chain_valid = chain_.validate();
    return r;
}

ScenarioReport run_scenario(const Script& script) {
    Simulation sim(script);
    sim.run();
    return sim.report();
}

// --- suite -----------------------------------------------------------------

namespace {

Script make(std::string name, std::uint64_t seed, json steps) {
    Script s;
    s.name = std::move(name);
    s.seed = seed;
    s.steps = std::move(steps);
    return s;
}

json reg(const std::string& uav) { return {{"op", "register"}, {"uav", uav}}; }
json auth(const std::string& uav) { return {{"op", "auth"}, {"uav", uav}}; }
json advance(std::int64_t ms) { return {{"op", "advance"}, {"ms", ms}}; }
json gate(const std::string& uav) { return {{"op", "gate"}, {"uav", uav}}; }

}  // namespace

std::vector<Script> scenario_suite(std::uint64_t seed) {
    std::vector<Script> out;
    out.push_back(make("honest-auth", seed, {reg("uav-A"), auth("uav-A"), {{"op", "eavesdrop"}}}));

    out.push_back(make("replay", seed,
                       {reg("uav-A"), auth("uav-A"), advance(1000), {{"op", "replay"}}, advance(40000),
                        {{"op", "replay"}, {"frame", 0}}}));

    out.push_back(make("stale-timestamp", seed,
                       {reg("uav-A"), {{"op", "auth"}, {"uav", "uav-A"}, {"ts_offset", -30001}},
                        {{"op", "auth"}, {"uav", "uav-A"}, {"ts_offset", 30001}},
                        {{"op", "auth"}, {"uav", "uav-A"}, {"ts_offset", -30000}}}));

    {
        // Every byte of the first SPA frame, one at a time. Frame size follows
        // from the packet layout: id "uav-A" and default password "pw-uav-A".
        const std::size_t pac = 4 + 16 + 4 + 5 + 4 + 8 + 8 + 1 + 4 + 2;
        const std::size_t sigma = 4 + pac + crypto::kScalarBytes + crypto::kG1Bytes;
        json steps{reg("uav-A"), auth("uav-A")};
        for (std::size_t i = 0; i < sigma; ++i)
            steps.push_back({{"op", "tamper"}, {"frame", 0}, {"index", i}, {"xor", 0x01}});
        out.push_back(make("tamper-each-field", seed, std::move(steps)));
    }

    out.push_back(make("impersonation-random-keys", seed,
                       {reg("uav-A"), reg("uav-B"), {{"op", "forge"}, {"as", "uav-B"}, {"using", "random"}, {"count", 20}},
                        {{"op", "inject"}, {"claimed_id", "uav-B"}, {"payload", std::string(2 * 141, 'a')}},
                        auth("uav-B")}));

    out.push_back(make("capture-and-cross-forge", seed,
                       {reg("uav-A"), reg("uav-B"), {{"op", "capture"}, {"uav", "uav-A"}},
                        {{"op", "forge"}, {"as", "uav-B"}, {"using", "uav-A"}, {"count", 20}}, auth("uav-B"),
                        auth("uav-A")}));

    {
        json steps{reg("uav-A")};
        for (int i = 0; i < 4; ++i) {
            steps.push_back({{"op", "auth"}, {"uav", "uav-A"}, {"pwd", "wrong"}});
            steps.push_back(advance(1000));
        }
        steps.push_back(gate("uav-A"));
        steps.push_back(reg("uav-A"));
        out.push_back(make("low-reputation-lockout", seed, std::move(steps)));
    }

    {
        json steps{reg("uav-A")};
        for (int i = 0; i < 6; ++i) {
            steps.push_back(auth("uav-A"));
            steps.push_back(advance(1000));
        }
        steps.push_back(gate("uav-A"));
        steps.push_back(reg("uav-A"));
        out.push_back(make("high-reputation-skip", seed, std::move(steps)));
    }
    return out;
}

}  // namespace bazam::sim
