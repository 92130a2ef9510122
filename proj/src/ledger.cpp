#include "bazam/ledger.hpp"

#include <sodium.h>

#include <mutex>

namespace bazam::ledger {

namespace {

constexpr char kMagic[] = "BZLG";
constexpr std::uint8_t kFormatVersion = 1;

std::string genesis_tag() { return std::string("genesis:") + kDigestName; }

void encode_tx(ByteWriter& w, const LedgerRecord& tx) {
    w.u8(static_cast<std::uint8_t>(tx.kind)).var(tx.uav_id).var(tx.pk_u).i64(tx.rep);
}

LedgerRecord decode_tx(ByteReader& r) {
    LedgerRecord tx;
    auto kind = r.u8();
    if (kind != static_cast<std::uint8_t>(TxKind::Registration) && kind != static_cast<std::uint8_t>(TxKind::ReputationUpdate))
        throw DecodeError("unknown transaction kind");
    tx.kind = static_cast<TxKind>(kind);
    tx.uav_id = r.var();
    tx.pk_u = r.var();
    tx.rep = r.i64();
    return tx;
}

Bytes block_preimage(const Block& b) {
    ByteWriter w;
    w.u64(b.index).raw(b.prev_hash).u64(b.timestamp_ms).var(b.tag);
    w.u32(static_cast<std::uint32_t>(b.txs.size()));
    for (const auto& tx : b.txs) encode_tx(w, tx);
    return std::move(w).bytes();
}

void encode_block(ByteWriter& w, const Block& b) {
    w.var(block_preimage(b)).raw(b.hash);
}

Block decode_block(ByteReader& outer) {
    auto pre = outer.var();
    ByteReader r(pre);
    Block b;
    b.index = r.u64();
    auto prev = r.raw(kDigestBytes);
    std::copy(prev.begin(), prev.end(), b.prev_hash.begin());
    b.timestamp_ms = r.u64();
    b.tag = r.var_string();
    const auto n = r.u32();
    if (n > r.remaining()) throw DecodeError("transaction count exceeds block size");
    for (std::uint32_t i = 0; i < n; ++i) b.txs.push_back(decode_tx(r));
    r.expect_done();
    auto h = outer.raw(kDigestBytes);
    std::copy(h.begin(), h.end(), b.hash.begin());
    return b;
}

Digest digest_from_hex(const std::string& hex) {
    auto b = from_hex(hex);
    if (b.size() != kDigestBytes) throw DecodeError("digest must be 32 bytes");
    Digest d;
    std::copy(b.begin(), b.end(), d.begin());
    return d;
}

using RepState = std::map<Bytes, std::int64_t>;

// Applies the reputation rules for one transaction; empty string on success.
std::string check_tx(RepState& state, const LedgerRecord& tx) {
    if (tx.uav_id.empty()) return "transaction has an empty uav id";
    auto it = state.find(tx.uav_id);
    const bool known = it != state.end();
    switch (tx.kind) {
        case TxKind::Registration:
            if (!known && tx.rep != 0) return "first registration must start at reputation 0";
            if (known && tx.rep != it->second) return "registration must leave reputation unchanged";
            break;
        case TxKind::ReputationUpdate:
            if (!known && tx.rep != 0) return "first reputation record must be 0";
            if (known && (tx.rep - it->second != 1 && tx.rep - it->second != -1))
                return "reputation may move by exactly one unit per update";
            break;
        default:
            return "unknown transaction kind";
    }
    state[tx.uav_id] = tx.rep;
    return {};
}

}  // namespace

Digest compute_block_hash(const Block& block) {
    auto pre = block_preimage(block);
    Digest d;
    crypto_hash_sha256(d.data(), pre.data(), pre.size());
    return d;
}

Chain::Chain(std::uint64_t genesis_timestamp_ms) {
    Block g;
    g.index = 0;
    g.timestamp_ms = genesis_timestamp_ms;
    g.tag = genesis_tag();
    g.hash = compute_block_hash(g);
    blocks_.push_back(std::move(g));
}

Chain::Chain(std::vector<Block> blocks, int) : blocks_(std::move(blocks)) {}

Chain::Chain(const Chain& other) {
    std::shared_lock lock(other.mu_);
    blocks_ = other.blocks_;
}

Chain& Chain::operator=(const Chain& other) {
    if (this == &other) return *this;
    std::vector<Block> copy;
    {
        std::shared_lock lock(other.mu_);
        copy = other.blocks_;
    }
    std::unique_lock lock(mu_);
    blocks_ = std::move(copy);
    return *this;
}

Chain Chain::from_blocks_unchecked(std::vector<Block> blocks) { return Chain(std::move(blocks), 0); }

Block Chain::append_block(std::vector<LedgerRecord> txs, std::uint64_t timestamp_ms) {
    if (txs.empty()) throw LedgerError("a block needs at least one transaction");
    std::unique_lock lock(mu_);
    if (blocks_.empty()) throw LedgerError("chain has no genesis block");

    RepState state;
    for (const auto& tx : txs) {
        if (state.count(tx.uav_id)) continue;
        // Latest committed value for ids touched by this batch.
        for (auto b = blocks_.rbegin(); b != blocks_.rend() && !state.count(tx.uav_id); ++b) {
            for (auto t = b->txs.rbegin(); t != b->txs.rend(); ++t) {
                if (t->uav_id == tx.uav_id) {
                    state[tx.uav_id] = t->rep;
                    break;
                }
            }
        }
    }
    for (const auto& tx : txs) {
        if (auto err = check_tx(state, tx); !err.empty()) throw LedgerError(err);
    }

    Block b;
    b.index = blocks_.back().index + 1;
    b.prev_hash = blocks_.back().hash;
    b.timestamp_ms = timestamp_ms;
    b.txs = std::move(txs);
    b.hash = compute_block_hash(b);
    blocks_.push_back(b);
    return b;
}

std::optional<LedgerRecord> Chain::latest_record(ByteView uav_id) const {
    std::shared_lock lock(mu_);
    for (auto b = blocks_.rbegin(); b != blocks_.rend(); ++b) {
        for (auto t = b->txs.rbegin(); t != b->txs.rend(); ++t) {
            if (std::equal(t->uav_id.begin(), t->uav_id.end(), uav_id.begin(), uav_id.end())) return *t;
        }
    }
    return std::nullopt;
}

Block Chain::record_reputation(ByteView uav_id, ByteView pk_u, std::int64_t new_rep, std::uint64_t timestamp_ms) {
    LedgerRecord tx{TxKind::ReputationUpdate, Bytes(uav_id.begin(), uav_id.end()), Bytes(pk_u.begin(), pk_u.end()), new_rep};
    return append_block({std::move(tx)}, timestamp_ms);
}

Block Chain::record_registration(ByteView uav_id, ByteView pk_u, std::uint64_t timestamp_ms) {
    auto prior = latest_record(uav_id);
    LedgerRecord tx{TxKind::Registration, Bytes(uav_id.begin(), uav_id.end()), Bytes(pk_u.begin(), pk_u.end()),
                    prior ? prior->rep : 0};
    return append_block({std::move(tx)}, timestamp_ms);
}

bool Chain::validate() const {
    std::shared_lock lock(mu_);
    if (blocks_.empty()) return false;
    const auto& g = blocks_.front();
    static const Digest zero{};
    if (g.index != 0 || g.prev_hash != zero || g.tag != genesis_tag() || !g.txs.empty()) return false;
    RepState state;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const auto& b = blocks_[i];
        if (compute_block_hash(b) != b.hash) return false;
        if (i == 0) continue;
        if (b.index != i || b.prev_hash != blocks_[i - 1].hash || !b.tag.empty() || b.txs.empty()) return false;
        for (const auto& tx : b.txs) {
            if (!check_tx(state, tx).empty()) return false;
        }
    }
    return true;
}

std::size_t Chain::size() const {
    std::shared_lock lock(mu_);
    return blocks_.size();
}

Block Chain::block(std::size_t index) const {
    std::shared_lock lock(mu_);
    return blocks_.at(index);
}

Block Chain::head() const {
    std::shared_lock lock(mu_);
    return blocks_.back();
}

std::vector<Block> Chain::blocks() const {
    std::shared_lock lock(mu_);
    return blocks_;
}

std::map<Bytes, std::vector<std::int64_t>> Chain::reputation_history() const {
    std::shared_lock lock(mu_);
    std::map<Bytes, std::vector<std::int64_t>> out;
    for (const auto& b : blocks_)
        for (const auto& tx : b.txs) out[tx.uav_id].push_back(tx.rep);
    return out;
}

Bytes Chain::export_binary() const {
    std::shared_lock lock(mu_);
    ByteWriter w;
    w.raw(ByteView(reinterpret_cast<const std::uint8_t*>(kMagic), 4)).u8(kFormatVersion).var(std::string_view(kDigestName));
    w.u32(static_cast<std::uint32_t>(blocks_.size()));
    for (const auto& b : blocks_) encode_block(w, b);
    return std::move(w).bytes();
}

Chain Chain::parse_binary(ByteView data) {
    ByteReader r(data);
    auto magic = r.raw(4);
    if (!std::equal(magic.begin(), magic.end(), kMagic)) throw DecodeError("not a ledger export");
    if (r.u8() != kFormatVersion) throw DecodeError("unsupported ledger format version");
    if (r.var_string() != kDigestName) throw DecodeError("unsupported ledger digest");
    const auto n = r.u32();
    if (n > r.remaining()) throw DecodeError("block count exceeds input size");
    std::vector<Block> blocks;
    blocks.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) blocks.push_back(decode_block(r));
    r.expect_done();
    return Chain(std::move(blocks), 0);
}

Chain Chain::import_binary(ByteView data) {
    auto chain = parse_binary(data);
    if (!chain.validate()) throw LedgerError("imported chain failed validation");
    return chain;
}

nlohmann::json Chain::to_json() const {
    std::shared_lock lock(mu_);
    nlohmann::json j;
    j["digest"] = kDigestName;
    auto& arr = j["blocks"] = nlohmann::json::array();
    for (const auto& b : blocks_) {
        nlohmann::json jb;
        jb["index"] = b.index;
        jb["prev_hash"] = to_hex(b.prev_hash);
        jb["timestamp_ms"] = b.timestamp_ms;
        jb["tag"] = b.tag;
        jb["hash"] = to_hex(b.hash);
        auto& txs = jb["txs"] = nlohmann::json::array();
        for (const auto& tx : b.txs) {
            txs.push_back({{"kind", tx.kind == TxKind::Registration ? "registration" : "reputation"},
                           {"uav_id", to_hex(tx.uav_id)},
                           {"pk_u", to_hex(tx.pk_u)},
                           {"rep", tx.rep}});
        }
        arr.push_back(std::move(jb));
    }
    return j;
}

Chain Chain::from_json(const nlohmann::json& j) {
    try {
        if (j.at("digest").get<std::string>() != kDigestName) throw DecodeError("unsupported ledger digest");
        std::vector<Block> blocks;
        for (const auto& jb : j.at("blocks")) {
            Block b;
            b.index = jb.at("index").get<std::uint64_t>();
            b.prev_hash = digest_from_hex(jb.at("prev_hash").get<std::string>());
            b.timestamp_ms = jb.at("timestamp_ms").get<std::uint64_t>();
            b.tag = jb.at("tag").get<std::string>();
            b.hash = digest_from_hex(jb.at("hash").get<std::string>());
            for (const auto& jt : jb.at("txs")) {
                LedgerRecord tx;
                const auto kind = jt.at("kind").get<std::string>();
                if (kind == "registration") tx.kind = TxKind::Registration;
                else if (kind == "reputation") tx.kind = TxKind::ReputationUpdate;
                else throw DecodeError("unknown transaction kind '" + kind + "'");
                tx.uav_id = from_hex(jt.at("uav_id").get<std::string>());
                tx.pk_u = from_hex(jt.at("pk_u").get<std::string>());
                tx.rep = jt.at("rep").get<std::int64_t>();
                b.txs.push_back(std::move(tx));
            }
            blocks.push_back(std::move(b));
        }
        return Chain(std::move(blocks), 0);
    } catch (const nlohmann::json::exception& e) {
        throw DecodeError(std::string("malformed ledger JSON: ") + e.what());
    }
}

}  // namespace bazam::ledger
