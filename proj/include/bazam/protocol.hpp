#pragma once

// Actors of the authentication flow: the key generation center (KGC), UAVs,
// the SDP controller and the default-deny SDP gateway.
//
// Registration runs over a secure channel:
//   controller gate -> KGC challenge -> UAV PUF response -> KGC key issue.
// Authentication is a single signcrypted SPA packet sigma = (e_pac, v, w)
// that the controller unsigncrypts, checks against policy and answers with
// an encrypted grant while pushing a matching policy to the gateway.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>

#include "bazam/bytes.hpp"
#include "bazam/crypto.hpp"
#include "bazam/error.hpp"
#include "bazam/ledger.hpp"
#include "bazam/puf.hpp"
#include "bazam/rng.hpp"

namespace bazam::protocol {

using crypto::G1Elem;
using crypto::Scalar;
using crypto::SymKey;

using Ipv4 = std::array<std::uint8_t, 4>;

inline constexpr std::size_t kNonceBytes = 16;
inline constexpr std::size_t kSaltBytes = 16;
// Keystream slots under one session key.
inline constexpr std::uint64_t kPacketStream = 0;
inline constexpr std::uint64_t kGrantStream = 1;

struct SpaPacket {
    Bytes nonce;  // kNonceBytes
    Bytes uav_id;
    Bytes pwd;
    std::uint64_t ts = 0;  // ms
    std::uint8_t ver = 0;
    Ipv4 addr1{};
    std::uint16_t port1 = 0;

    // nonce, id and pwd carry a u32 length prefix; integers are big-endian.
    Bytes encode() const;
    static SpaPacket decode(ByteView bytes);

    friend bool operator==(const SpaPacket&, const SpaPacket&) = default;
};

struct SigmaCiphertext {
    Bytes e_pac;
    Scalar v;
    G1Elem w;

    // u32 len || e_pac || v || w
    Bytes encode() const;
    static SigmaCiphertext decode(ByteView bytes);
    std::size_t wire_size() const { return 4 + e_pac.size() + crypto::kScalarBytes + crypto::kG1Bytes; }

    friend bool operator==(const SigmaCiphertext&, const SigmaCiphertext&) = default;
};

enum class Failure : std::uint8_t {
    UnknownUav,
    IntegrityFailure,
    MalformedPacket,   // v verified but the plaintext does not parse
    IdentityMismatch,  // plaintext id differs from the framed id
    BadPassword,
    StaleTimestamp,
    ReplayedNonce,
};

const char* to_string(Failure f);

template <class T>
class Result {
public:
    Result(T value) : v_(std::move(value)) {}
    Result(Failure f) : v_(f) {}

    bool ok() const { return v_.index() == 0; }
    explicit operator bool() const { return ok(); }
    const T& value() const {
        if (!ok()) throw ProtocolError(std::string("no value: ") + to_string(failure()));
        return std::get<0>(v_);
    }
    Failure failure() const {
        if (ok()) throw ProtocolError("result holds a value");
        return std::get<1>(v_);
    }

private:
    std::variant<T, Failure> v_;
};

enum class Decision : std::uint8_t { Reject, SkipRegistration, ForwardToKgc };

const char* to_string(Decision d);

// Threshold rule; an absent record counts as reputation 0.
Decision gate_decision(std::optional<std::int64_t> rep, std::int64_t r_l, std::int64_t r_h);

// Proof that a controller forwarded a registration to the KGC.
class RegistrationTicket {
public:
    const Bytes& uav_id() const { return uav_id_; }
    const std::string& controller_id() const { return controller_id_; }

private:
    friend class Controller;
    RegistrationTicket(Bytes uav_id, std::string controller_id)
        : uav_id_(std::move(uav_id)), controller_id_(std::move(controller_id)) {}
    Bytes uav_id_;
    std::string controller_id_;
};

struct GateOutcome {
    Decision decision;
    std::optional<RegistrationTicket> ticket;  // set only for ForwardToKgc
};

struct ControllerKeys {
    std::string id_c;
    G1Elem pk_c;
    G1Elem sk_c;
};

// Everything a UAV keeps after registration. This is also what physical
// capture hands to an adversary.
struct UavCredentials {
    Bytes uav_id;
    G1Elem pk_u;
    G1Elem sk_u;
    G1Elem pk_c;
    G1Elem spk;

    // id + pk_u + sk_u + pk_c; spk is a public system parameter.
    std::size_t storage_bytes() const { return uav_id.size() + 3 * crypto::kG1Bytes; }
};

class Kgc {
public:
    explicit Kgc(Rng rng, std::size_t key_bits = crypto::kDefaultKeyBits);

    const crypto::SystemParams& params() const { return master_.params; }
    const G1Elem& spk() const { return master_.spk; }

    // pk_c = h1(id_c), sk_c = ssk * pk_c. Throws ProtocolError on a duplicate id.
    ControllerKeys register_controller(const std::string& id_c);

    // Fresh 32-byte challenge, held until the matching response arrives.
    Bytes issue_challenge(const RegistrationTicket& ticket);

    // pk_u = h1(id || r), sk_u = ssk^-1 * pk_u; records the UAV on chain.
    // Throws ProtocolError if `challenge` is not the one pending for the id.
    UavCredentials register_uav(ledger::Chain& chain, ByteView uav_id, ByteView challenge,
                                const puf::Response& response, std::uint64_t now);

    bool has_pending(ByteView uav_id) const;

private:
    struct Pending {
        Bytes challenge;
        std::string controller_id;
    };

    Rng rng_;
    crypto::SetupResult master_;
    Scalar ssk_inverse_;
    std::map<std::string, G1Elem> controllers_;
    std::map<Bytes, Pending> pending_;
};

struct SigncryptOutput {
    SigmaCiphertext sigma;
    SymKey session_key;  // r2
};

// Signcryption with a full credential set; used by honest UAVs and by an
// adversary holding captured state.
SigncryptOutput signcrypt(const UavCredentials& creds, const SpaPacket& pac, Rng& rng,
                          std::size_t key_bits = crypto::kDefaultKeyBits);

struct GrantInfo {
    Ipv4 addr2{};
    std::uint16_t port2 = 0;
    Bytes uav_id;

    friend bool operator==(const GrantInfo&, const GrantInfo&) = default;
};

Bytes encode_grant(const GrantInfo& g);
std::optional<GrantInfo> decode_grant(ByteView bytes);

class Uav {
public:
    Uav(Bytes uav_id, puf::PufDevice device, Rng rng, std::size_t key_bits = crypto::kDefaultKeyBits);

    const Bytes& id() const { return id_; }
    puf::Response respond(ByteView challenge);

    void install(UavCredentials creds);
    bool registered() const { return creds_.has_value(); }
    // Throws ProtocolError when unregistered.
    const UavCredentials& credentials() const;
    UavCredentials capture() const { return credentials(); }

    SpaPacket build_packet(Bytes pwd, std::uint8_t ver, Ipv4 addr1, std::uint16_t port1, std::uint64_t now);
    // Remembers r2 for opening the grant.
    SigmaCiphertext signcrypt(const SpaPacket& pac);
    const std::optional<SymKey>& session_key() const { return session_key_; }
    // nullopt when the grant does not decrypt to this UAV's id.
    std::optional<GrantInfo> open_grant(ByteView m) const;

private:
    Bytes id_;
    puf::PufDevice device_;
    Rng rng_;
    std::size_t key_bits_;
    std::optional<UavCredentials> creds_;
    std::optional<SymKey> session_key_;
};

struct Policy {
    Bytes uav_id;
    Ipv4 addr2{};
    std::uint16_t port2 = 0;
    std::uint64_t expiry_ms = 0;
};

struct Session {
    Bytes session_id;
    Bytes uav_id;
    Ipv4 addr2{};
    std::uint16_t port2 = 0;
    std::uint64_t opened_ms = 0;
};

// Rejects everything without an unexpired matching policy.
class Gateway {
public:
    explicit Gateway(Rng rng) : rng_(std::move(rng)) {}

    void install_policy(Policy p);
    // nullopt means denied.
    std::optional<Session> connect(ByteView uav_id, Ipv4 addr2, std::uint16_t port2, std::uint64_t now);
    std::size_t policy_count() const { return policies_.size(); }

private:
    Rng rng_;
    std::vector<Policy> policies_;
};

struct PolicyGrant {
    Bytes m;
    Policy policy;
};

struct ControllerConfig {
    std::int64_t r_l = -3;
    std::int64_t r_h = 5;
    std::uint64_t ts_window_ms = 30000;
    std::uint64_t grant_ttl_ms = 60000;
    Ipv4 gateway_addr{10, 0, 0, 2};
    std::uint16_t gateway_port = 8443;
    std::size_t key_bits = crypto::kDefaultKeyBits;
};

struct AuthOutcome {
    std::optional<Failure> failure;
    std::optional<PolicyGrant> grant;
    bool ok() const { return !failure.has_value(); }
};

class Controller {
public:
    // Throws ConfigError unless r_l < r_h.
    Controller(ControllerKeys keys, G1Elem spk, Rng rng, ControllerConfig cfg = {});

    const std::string& id() const { return keys_.id_c; }
    const G1Elem& pk() const { return keys_.pk_c; }
    const ControllerConfig& config() const { return cfg_; }

    GateOutcome gate_registration(const ledger::Chain& chain, ByteView uav_id) const;
    // Stores a salted digest; replaces any earlier password.
    void provision_password(ByteView uav_id, ByteView pwd);

    // Integrity check of sigma against the UAV's on-chain key. Any failure
    // except UnknownUav costs one reputation unit.
    Result<SpaPacket> unsigncrypt(ledger::Chain& chain, ByteView uav_id, ByteView sigma_wire, std::uint64_t now);
    // Password, freshness and replay checks on a packet that passed
    // unsigncrypt. Throws ProtocolError when called out of order.
    Result<SpaPacket> policy_check(ledger::Chain& chain, const SpaPacket& pac, std::uint64_t now);
    // Encrypts the gateway coordinates under the session key, rewards the UAV
    // and pushes the policy. Throws ProtocolError unless policy_check passed.
    PolicyGrant grant(ledger::Chain& chain, Gateway& gateway, ByteView uav_id, Ipv4 addr2, std::uint16_t port2,
                      std::uint64_t now);

    // unsigncrypt, policy_check and grant (to the configured gateway) in one step.
    AuthOutcome handle_request(ledger::Chain& chain, Gateway& gateway, ByteView uav_id, ByteView sigma_wire,
                               std::uint64_t now);

    std::size_t nonce_cache_size() const { return nonce_cache_.size(); }

private:
    enum class Stage : std::uint8_t { Verified, Authorized };
    struct InFlight {
        Stage stage;
        SpaPacket pac;
        SymKey session_key;
    };
    struct PasswordEntry {
        Bytes salt;
        Bytes digest;
    };

    void penalize(ledger::Chain& chain, ByteView uav_id, std::uint64_t now);
    void evict(std::uint64_t now);

    ControllerKeys keys_;
    G1Elem spk_;
    Rng rng_;
    ControllerConfig cfg_;
    std::map<Bytes, PasswordEntry> passwords_;
    std::set<std::pair<std::uint64_t, Bytes>> nonce_cache_;  // (ts, nonce)
    std::map<Bytes, InFlight> in_flight_;
};

struct RegistrationOutcome {
    Decision decision;
    bool issued = false;  // new credentials installed on the UAV
};

// Secure-channel registration: gate, challenge, PUF response, key issue,
// password provisioning.
RegistrationOutcome register_uav(Kgc& kgc, Controller& controller, Uav& uav, ledger::Chain& chain, ByteView pwd,
                                 std::uint64_t now);

}  // namespace bazam::protocol
