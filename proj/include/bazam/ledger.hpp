#pragma once

// Append-only, hash-chained audit store of <ID_U, PK_U, Rep> tuples.
//
// A single trusted writer (KGC or SDP controller) appends blocks; there is no
// consensus layer. Block 0 is a transaction-free genesis block whose tag names
// the digest algorithm for the whole chain.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "bazam/bytes.hpp"
#include "json.hpp"

namespace bazam::ledger {

inline constexpr std::size_t kDigestBytes = 32;
using Digest = std::array<std::uint8_t, kDigestBytes>;

inline constexpr char kDigestName[] = "sha256";

enum class TxKind : std::uint8_t {
    Registration = 1,      // rep carried over unchanged (0 on first contact)
    ReputationUpdate = 2,  // rep moves by exactly one unit
};

struct LedgerRecord {
    TxKind kind = TxKind::ReputationUpdate;
    Bytes uav_id;
    Bytes pk_u;  // canonical compressed G1 encoding
    std::int64_t rep = 0;

    friend bool operator==(const LedgerRecord&, const LedgerRecord&) = default;
};

struct Block {
    std::uint64_t index = 0;
    Digest prev_hash{};
    std::uint64_t timestamp_ms = 0;
    std::string tag;
    std::vector<LedgerRecord> txs;
    Digest hash{};

    friend bool operator==(const Block&, const Block&) = default;
};

// SHA-256 over (index, prev_hash, timestamp, tag, canonical tx encoding).
Digest compute_block_hash(const Block& block);

class Chain {
public:
    explicit Chain(std::uint64_t genesis_timestamp_ms = 0);
    Chain(const Chain& other);
    Chain& operator=(const Chain& other);

    // Appends one block holding `txs`, enforcing the reputation rules
    // against the current chain state. Throws LedgerError on an empty list
    // or a rule violation.
    Block append_block(std::vector<LedgerRecord> txs, std::uint64_t timestamp_ms);

    // Newest-to-oldest scan; nullopt if the id never appears.
    std::optional<LedgerRecord> latest_record(ByteView uav_id) const;

    // One-transaction block moving the reputation by +/-1 (or creating it at 0).
    Block record_reputation(ByteView uav_id, ByteView pk_u, std::int64_t new_rep, std::uint64_t timestamp_ms);

    // One-transaction registration block: rep 0 on first contact, otherwise unchanged.
    Block record_registration(ByteView uav_id, ByteView pk_u, std::uint64_t timestamp_ms);

    // Recomputes every hash, checks linkage, and replays the reputation rules.
    bool validate() const;

    std::size_t size() const;
    Block block(std::size_t index) const;
    Block head() const;
    std::vector<Block> blocks() const;

    // Per-UAV reputation sequence reconstructed from a full replay.
    std::map<Bytes, std::vector<std::int64_t>> reputation_history() const;

    // Binary export: magic, version, digest name, then length-prefixed blocks.
    Bytes export_binary() const;
    // Parses and validates; throws DecodeError or LedgerError.
    static Chain import_binary(ByteView data);
    // Parses without validation.
    static Chain parse_binary(ByteView data);

    nlohmann::json to_json() const;
    static Chain from_json(const nlohmann::json& j);

    // Wraps externally supplied blocks without checking them.
    static Chain from_blocks_unchecked(std::vector<Block> blocks);

private:
    Chain(std::vector<Block> blocks, int);

    mutable std::shared_mutex mu_;
    std::vector<Block> blocks_;
};

}  // namespace bazam::ledger
