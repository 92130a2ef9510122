#include "bazam/protocol.hpp"

#include <sodium.h>

#include <algorithm>

namespace bazam::protocol {

using namespace bazam::crypto;

namespace {

Bytes salted_digest(ByteView salt, ByteView pwd) {
    crypto_hash_sha256_state st;
    crypto_hash_sha256_init(&st);
    crypto_hash_sha256_update(&st, salt.data(), salt.size());
    crypto_hash_sha256_update(&st, pwd.data(), pwd.size());
    Bytes out(crypto_hash_sha256_BYTES);
    crypto_hash_sha256_final(&st, out.data());
    return out;
}

Bytes key(ByteView id) { return Bytes(id.begin(), id.end()); }

}  // namespace

// --- wire formats ----------------------------------------------------------

Bytes SpaPacket::encode() const {
    ByteWriter w;
    w.var(nonce).var(uav_id).var(pwd).u64(ts).u8(ver).raw(addr1).u16(port1);
    return std::move(w).bytes();
}

SpaPacket SpaPacket::decode(ByteView bytes) {
    ByteReader r(bytes);
    SpaPacket p;
    p.nonce = r.var();
    if (p.nonce.size() != kNonceBytes) throw DecodeError("nonce must be 16 bytes");
    p.uav_id = r.var();
    p.pwd = r.var();
    p.ts = r.u64();
    p.ver = r.u8();
    auto a = r.raw(4);
    std::copy(a.begin(), a.end(), p.addr1.begin());
    p.port1 = r.u16();
    r.expect_done();
    return p;
}

Bytes SigmaCiphertext::encode() const {
    ByteWriter w;
    w.var(e_pac).raw(v.encode()).raw(this->w.encode());
    return std::move(w).bytes();
}

SigmaCiphertext SigmaCiphertext::decode(ByteView bytes) {
    ByteReader r(bytes);
    SigmaCiphertext s;
    s.e_pac = r.var();
    s.v = Scalar::decode(r.raw(kScalarBytes));
    s.w = G1Elem::decode(r.raw(kG1Bytes));
    r.expect_done();
    return s;
}

Bytes encode_grant(const GrantInfo& g) {
    ByteWriter w;
    w.raw(g.addr2).u16(g.port2).raw(g.uav_id);
    return std::move(w).bytes();
}

std::optional<GrantInfo> decode_grant(ByteView bytes) {
    if (bytes.size() < 6) return std::nullopt;
    GrantInfo g;
    std::copy_n(bytes.begin(), 4, g.addr2.begin());
    g.port2 = static_cast<std::uint16_t>((bytes[4] << 8) | bytes[5]);
    g.uav_id.assign(bytes.begin() + 6, bytes.end());
    return g;
}

const char* to_string(Failure f) {
    switch (f) {
        case Failure::UnknownUav: return "UnknownUav";
        case Failure::IntegrityFailure: return "IntegrityFailure";
        case Failure::MalformedPacket: return "MalformedPacket";
        case Failure::IdentityMismatch: return "IdentityMismatch";
        case Failure::BadPassword: return "BadPassword";
        case Failure::StaleTimestamp: return "StaleTimestamp";
        case Failure::ReplayedNonce: return "ReplayedNonce";
    }
    return "?";
}

const char* to_string(Decision d) {
    switch (d) {
        case Decision::Reject: return "Reject";
        case Decision::SkipRegistration: return "SkipRegistration";
        case Decision::ForwardToKgc: return "ForwardToKgc";
    }
    return "?";
}

Decision gate_decision(std::optional<std::int64_t> rep, std::int64_t r_l, std::int64_t r_h) {
    const std::int64_t r = rep.value_or(0);
    if (r < r_l) return Decision::Reject;
    if (r > r_h) return Decision::SkipRegistration;
    return Decision::ForwardToKgc;
}

// --- KGC -------------------------------------------------------------------

Kgc::Kgc(Rng rng, std::size_t key_bits)
    : rng_(std::move(rng)), master_(setup(kOrderBits, key_bits, rng_)), ssk_inverse_(master_.ssk.inverse()) {}

ControllerKeys Kgc::register_controller(const std::string& id_c) {
    if (controllers_.count(id_c)) throw ProtocolError("controller already registered: " + id_c);
    ControllerKeys k{id_c, h1(to_bytes(id_c)), {}};
    k.sk_c = scalar_mul(master_.ssk, k.pk_c);
    controllers_.emplace(id_c, k.pk_c);
    return k;
}

Bytes Kgc::issue_challenge(const RegistrationTicket& ticket) {
    if (!controllers_.count(ticket.controller_id())) throw ProtocolError("ticket from unknown controller");
    auto c = rng_.bytes(puf::kChallengeBytes);
    pending_[ticket.uav_id()] = Pending{c, ticket.controller_id()};
    return c;
}

bool Kgc::has_pending(ByteView uav_id) const { return pending_.count(key(uav_id)) > 0; }

UavCredentials Kgc::register_uav(ledger::Chain& chain, ByteView uav_id, ByteView challenge,
                                 const puf::Response& response, std::uint64_t now) {
    auto it = pending_.find(key(uav_id));
    if (it == pending_.end()) throw ProtocolError("no pending challenge for this UAV");
    if (!std::equal(challenge.begin(), challenge.end(), it->second.challenge.begin(), it->second.challenge.end()))
        throw ProtocolError("response to a challenge that was not issued");
    const G1Elem pk_c = controllers_.at(it->second.controller_id);
    pending_.erase(it);

    ByteWriter in;
    in.raw(uav_id).raw(response);
    UavCredentials c;
    c.uav_id = key(uav_id);
    c.pk_u = h1(in.bytes());
    c.sk_u = scalar_mul(ssk_inverse_, c.pk_u);
    c.pk_c = pk_c;
    c.spk = master_.spk;
    chain.record_registration(uav_id, c.pk_u.encode(), now);
    return c;
}

// --- UAV -------------------------------------------------------------------

SigncryptOutput signcrypt(const UavCredentials& creds, const SpaPacket& pac, Rng& rng, std::size_t key_bits) {
    const Scalar h = Scalar::random_nonzero(rng);
    const G2Elem r1 = g2_exp(pairing(generator(), creds.pk_u), h);
    SymKey r2 = h2(g2_exp(pairing(creds.pk_u, creds.pk_c), h), key_bits);
    SigmaCiphertext s;
    s.e_pac = sym_encrypt(r2, pac.encode(), kPacketStream);
    s.v = h3(s.e_pac, r1);
    s.w = scalar_mul(h - s.v, creds.sk_u);
    return {std::move(s), std::move(r2)};
}

Uav::Uav(Bytes uav_id, puf::PufDevice device, Rng rng, std::size_t key_bits)
    : id_(std::move(uav_id)), device_(std::move(device)), rng_(std::move(rng)), key_bits_(key_bits) {}

puf::Response Uav::respond(ByteView challenge) { return device_.evaluate(challenge, rng_); }

void Uav::install(UavCredentials creds) {
    if (creds.uav_id != id_) throw ProtocolError("credentials issued for another id");
    creds_ = std::move(creds);
}

const UavCredentials& Uav::credentials() const {
    if (!creds_) throw ProtocolError("UAV is not registered");
    return *creds_;
}

SpaPacket Uav::build_packet(Bytes pwd, std::uint8_t ver, Ipv4 addr1, std::uint16_t port1, std::uint64_t now) {
    if (!creds_) throw ProtocolError("UAV is not registered");
    return SpaPacket{rng_.bytes(kNonceBytes), id_, std::move(pwd), now, ver, addr1, port1};
}

SigmaCiphertext Uav::signcrypt(const SpaPacket& pac) {
    auto out = protocol::signcrypt(credentials(), pac, rng_, key_bits_);
    session_key_ = std::move(out.session_key);
    return std::move(out.sigma);
}

std::optional<GrantInfo> Uav::open_grant(ByteView m) const {
    if (!session_key_) return std::nullopt;
    auto g = decode_grant(sym_decrypt(*session_key_, m, kGrantStream));
    if (!g || g->uav_id != id_) return std::nullopt;
    return g;
}

// --- gateway ---------------------------------------------------------------

void Gateway::install_policy(Policy p) { policies_.push_back(std::move(p)); }

std::optional<Session> Gateway::connect(ByteView uav_id, Ipv4 addr2, std::uint16_t port2, std::uint64_t now) {
    std::erase_if(policies_, [&](const Policy& p) { return p.expiry_ms <= now; });
    for (const auto& p : policies_) {
        if (p.addr2 != addr2 || p.port2 != port2) continue;
        if (!std::equal(uav_id.begin(), uav_id.end(), p.uav_id.begin(), p.uav_id.end())) continue;
        return Session{rng_.bytes(16), p.uav_id, addr2, port2, now};
    }
    return std::nullopt;
}

// --- controller ------------------------------------------------------------

Controller::Controller(ControllerKeys keys, G1Elem spk, Rng rng, ControllerConfig cfg)
    : keys_(std::move(keys)), spk_(std::move(spk)), rng_(std::move(rng)), cfg_(cfg) {
    if (cfg_.r_l >= cfg_.r_h) throw ConfigError("reputation thresholds need r_l < r_h");
    if (cfg_.ts_window_ms == 0) throw ConfigError("timestamp window must be positive");
}

GateOutcome Controller::gate_registration(const ledger::Chain& chain, ByteView uav_id) const {
    auto rec = chain.latest_record(uav_id);
    auto d = gate_decision(rec ? std::optional(rec->rep) : std::nullopt, cfg_.r_l, cfg_.r_h);
    if (d != Decision::ForwardToKgc) return {d, std::nullopt};
    return {d, RegistrationTicket(key(uav_id), keys_.id_c)};
}

void Controller::provision_password(ByteView uav_id, ByteView pwd) {
    auto salt = rng_.bytes(kSaltBytes);
    auto digest = salted_digest(salt, pwd);
    passwords_[key(uav_id)] = PasswordEntry{std::move(salt), std::move(digest)};
}

void Controller::penalize(ledger::Chain& chain, ByteView uav_id, std::uint64_t now) {
    in_flight_.erase(key(uav_id));
    auto rec = chain.latest_record(uav_id);
    if (!rec) return;
    chain.record_reputation(uav_id, rec->pk_u, rec->rep - 1, now);
}

Result<SpaPacket> Controller::unsigncrypt(ledger::Chain& chain, ByteView uav_id, ByteView sigma_wire,
                                          std::uint64_t now) {
    auto rec = chain.latest_record(uav_id);
    if (!rec) return Failure::UnknownUav;
    const G1Elem pk_u = G1Elem::decode(rec->pk_u);

    SigmaCiphertext s;
    try {
        s = SigmaCiphertext::decode(sigma_wire);
    } catch (const DecodeError&) {
        penalize(chain, uav_id, now);
        return Failure::IntegrityFailure;
    }

    const G2Elem r1 = g2_mul(pairing(spk_, s.w), g2_exp(pairing(generator(), pk_u), s.v));
    SymKey r2 = h2(g2_mul(pairing(s.w, keys_.sk_c), g2_exp(pairing(pk_u, keys_.pk_c), s.v)), cfg_.key_bits);
    if (!(h3(s.e_pac, r1) == s.v)) {
        penalize(chain, uav_id, now);
        return Failure::IntegrityFailure;
    }

    SpaPacket pac;
    try {
        pac = SpaPacket::decode(sym_decrypt(r2, s.e_pac, kPacketStream));
    } catch (const DecodeError&) {
        penalize(chain, uav_id, now);
        return Failure::MalformedPacket;
    }
    if (!std::equal(uav_id.begin(), uav_id.end(), pac.uav_id.begin(), pac.uav_id.end())) {
        penalize(chain, uav_id, now);
        return Failure::IdentityMismatch;
    }
    in_flight_.insert_or_assign(key(uav_id), InFlight{Stage::Verified, pac, std::move(r2)});
    return pac;
}

void Controller::evict(std::uint64_t now) {
    if (now < cfg_.ts_window_ms) return;
    const std::uint64_t horizon = now - cfg_.ts_window_ms;
    while (!nonce_cache_.empty() && nonce_cache_.begin()->first < horizon) nonce_cache_.erase(nonce_cache_.begin());
}

Result<SpaPacket> Controller::policy_check(ledger::Chain& chain, const SpaPacket& pac, std::uint64_t now) {
    auto it = in_flight_.find(pac.uav_id);
    if (it == in_flight_.end() || it->second.stage != Stage::Verified || !(it->second.pac == pac))
        throw ProtocolError("policy check requires a freshly verified packet");

    auto pw = passwords_.find(pac.uav_id);
    bool pwd_ok = false;
    if (pw != passwords_.end()) {
        auto d = salted_digest(pw->second.salt, pac.pwd);
        pwd_ok = sodium_memcmp(d.data(), pw->second.digest.data(), d.size()) == 0;
    }
    if (!pwd_ok) {
        penalize(chain, pac.uav_id, now);
        return Failure::BadPassword;
    }
    const std::uint64_t age = now > pac.ts ? now - pac.ts : pac.ts - now;
    if (age > cfg_.ts_window_ms) {
        penalize(chain, pac.uav_id, now);
        return Failure::StaleTimestamp;
    }
    evict(now);
    auto entry = std::make_pair(pac.ts, pac.nonce);
    if (nonce_cache_.count(entry)) {
        penalize(chain, pac.uav_id, now);
        return Failure::ReplayedNonce;
    }
    nonce_cache_.insert(std::move(entry));
    it->second.stage = Stage::Authorized;
    return pac;
}

PolicyGrant Controller::grant(ledger::Chain& chain, Gateway& gateway, ByteView uav_id, Ipv4 addr2,
                              std::uint16_t port2, std::uint64_t now) {
    auto it = in_flight_.find(key(uav_id));
    if (it == in_flight_.end() || it->second.stage != Stage::Authorized)
        throw ProtocolError("grant requires a passed policy check");
    PolicyGrant g;
    g.m = sym_encrypt(it->second.session_key, encode_grant({addr2, port2, key(uav_id)}), kGrantStream);
    g.policy = Policy{key(uav_id), addr2, port2, now + cfg_.grant_ttl_ms};
    in_flight_.erase(it);

    auto rec = chain.latest_record(uav_id);
    chain.record_reputation(uav_id, rec->pk_u, rec->rep + 1, now);
    gateway.install_policy(g.policy);
    return g;
}

AuthOutcome Controller::handle_request(ledger::Chain& chain, Gateway& gateway, ByteView uav_id,
                                       ByteView sigma_wire, std::uint64_t now) {
    auto pac = unsigncrypt(chain, uav_id, sigma_wire, now);
    if (!pac) return {pac.failure(), std::nullopt};
    auto checked = policy_check(chain, pac.value(), now);
    if (!checked) return {checked.failure(), std::nullopt};
    return {std::nullopt, grant(chain, gateway, uav_id, cfg_.gateway_addr, cfg_.gateway_port, now)};
}

// --- registration flow -----------------------------------------------------

RegistrationOutcome register_uav(Kgc& kgc, Controller& controller, Uav& uav, ledger::Chain& chain, ByteView pwd,
                                 std::uint64_t now) {
    auto gate = controller.gate_registration(chain, uav.id());
    if (gate.decision != Decision::ForwardToKgc) return {gate.decision, false};
    auto challenge = kgc.issue_challenge(*gate.ticket);
    auto response = uav.respond(challenge);
    uav.install(kgc.register_uav(chain, uav.id(), challenge, response, now));
    controller.provision_password(uav.id(), pwd);
    return {gate.decision, true};
}

}  // namespace bazam::protocol
