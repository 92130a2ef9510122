#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "bazam/ledger.hpp"
#include "bazam/rng.hpp"

using namespace bazam;
using namespace bazam::ledger;

namespace {

Bytes id(std::string_view s) { return to_bytes(s); }
Bytes fake_pk(std::uint8_t fill) { return Bytes(65, fill); }

// Chain with `uavs` identities and a random walk of `updates` reputation moves.
Chain random_chain(Rng& rng, int uavs, int updates, std::uint64_t& clock) {
    Chain c(clock);
    std::vector<std::int64_t> rep(uavs, 0);
    for (int u = 0; u < uavs; ++u) c.record_registration(id("uav-" + std::to_string(u)), fake_pk(u), ++clock);
    for (int i = 0; i < updates; ++i) {
        auto u = static_cast<int>(rng.uniform(uavs));
        rep[u] += rng.chance(0.5) ? 1 : -1;
        c.record_reputation(id("uav-" + std::to_string(u)), fake_pk(u), rep[u], ++clock);
    }
    return c;
}

// Forward scan keeping the last match: independent of the backward search.
std::optional<LedgerRecord> forward_scan(const Chain& c, const Bytes& uav) {
    std::optional<LedgerRecord> found;
    for (const auto& b : c.blocks())
        for (const auto& tx : b.txs)
            if (tx.uav_id == uav) found = tx;
    return found;
}

// Flips bits inside one randomly chosen field.
void mutate_field(Block& b, Rng& rng) {
    auto flip = [&](std::uint8_t& byte) { byte ^= static_cast<std::uint8_t>(1 + rng.uniform(255)); };
    auto flip_int = [&](auto& value) {
        auto shift = 8 * rng.uniform(sizeof(value));
        using U = std::make_unsigned_t<std::remove_reference_t<decltype(value)>>;
        auto mask = static_cast<U>(static_cast<U>(1 + rng.uniform(255)) << shift);
        value = static_cast<std::remove_reference_t<decltype(value)>>(static_cast<U>(value) ^ mask);
    };
    const auto choice = rng.uniform(b.txs.empty() ? 4 : 7);
    switch (choice) {
        case 0: flip_int(b.index); break;
        case 1: flip(b.prev_hash[rng.uniform(kDigestBytes)]); break;
        case 2: flip_int(b.timestamp_ms); break;
        case 3: flip(b.hash[rng.uniform(kDigestBytes)]); break;
        case 4: {
            auto& tx = b.txs[rng.uniform(b.txs.size())];
            flip(tx.uav_id[rng.uniform(tx.uav_id.size())]);
            break;
        }
        case 5: {
            auto& tx = b.txs[rng.uniform(b.txs.size())];
            flip(tx.pk_u[rng.uniform(tx.pk_u.size())]);
            break;
        }
        default: flip_int(b.txs[rng.uniform(b.txs.size())].rep); break;
    }
}

}  // namespace

TEST(Ledger, GenesisAndLinking) {
    Chain c(1000);
    ASSERT_EQ(c.size(), 1u);
    auto g = c.head();
    EXPECT_EQ(g.index, 0u);
    EXPECT_EQ(g.prev_hash, Digest{});
    EXPECT_EQ(g.tag, "genesis:sha256");
    auto b = c.record_registration(id("A"), fake_pk(1), 1001);
    EXPECT_EQ(b.index, 1u);
    EXPECT_EQ(b.prev_hash, g.hash);
    c.record_reputation(id("A"), fake_pk(1), 1, 1002);
    c.record_reputation(id("A"), fake_pk(1), 2, 1003);
    EXPECT_EQ(c.size(), 4u);
    EXPECT_TRUE(c.validate());
}

TEST(Ledger, EmptyBlockRejected) {
    Chain c;
    EXPECT_THROW(c.append_block({}, 1), LedgerError);
    EXPECT_EQ(c.size(), 1u);
}

TEST(Ledger, LatestRecordLookups) {
    Chain c;
    EXPECT_FALSE(c.latest_record(id("ghost")).has_value());
    c.record_registration(id("A"), fake_pk(1), 1);
    EXPECT_EQ(c.latest_record(id("A"))->rep, 0);
    c.record_reputation(id("A"), fake_pk(1), -1, 2);
    c.record_reputation(id("A"), fake_pk(1), -2, 3);
    EXPECT_EQ(c.latest_record(id("A"))->rep, -2);
    EXPECT_FALSE(c.latest_record(id("ghost")).has_value());
}

TEST(Ledger, ReputationDeltaRule) {
    Chain c;
    EXPECT_THROW(c.record_reputation(id("A"), fake_pk(1), 1, 1), LedgerError);
    EXPECT_NO_THROW(c.record_reputation(id("A"), fake_pk(1), 0, 1));
    c.record_reputation(id("A"), fake_pk(1), -1, 2);
    EXPECT_NO_THROW(c.record_reputation(id("A"), fake_pk(1), -2, 3));

    Chain d;
    d.record_registration(id("B"), fake_pk(2), 1);
    for (int r = 1; r <= 4; ++r) d.record_reputation(id("B"), fake_pk(2), r, 1 + r);
    EXPECT_THROW(d.record_reputation(id("B"), fake_pk(2), 6, 10), LedgerError);
    EXPECT_THROW(d.record_reputation(id("B"), fake_pk(2), 4, 10), LedgerError);
    EXPECT_EQ(d.latest_record(id("B"))->rep, 4);
}

TEST(Ledger, ReRegistrationKeepsReputation) {
    Chain c;
    c.record_registration(id("A"), fake_pk(1), 1);
    c.record_reputation(id("A"), fake_pk(1), 1, 2);
    c.record_registration(id("A"), fake_pk(9), 3);
    auto rec = c.latest_record(id("A"));
    EXPECT_EQ(rec->rep, 1);
    EXPECT_EQ(rec->pk_u, fake_pk(9));
    EXPECT_EQ(rec->kind, TxKind::Registration);
    // A hand-built registration that alters reputation is refused.
    EXPECT_THROW(c.append_block({LedgerRecord{TxKind::Registration, id("A"), fake_pk(9), 5}}, 4), LedgerError);
}

TEST(Ledger, BatchRulesApplySequentially) {
    Chain c;
    std::vector<LedgerRecord> txs{{TxKind::Registration, id("A"), fake_pk(1), 0},
                                  {TxKind::ReputationUpdate, id("A"), fake_pk(1), 1},
                                  {TxKind::ReputationUpdate, id("A"), fake_pk(1), 2}};
    c.append_block(txs, 1);
    EXPECT_EQ(c.latest_record(id("A"))->rep, 2);
    std::vector<LedgerRecord> bad{{TxKind::ReputationUpdate, id("A"), fake_pk(1), 3},
                                  {TxKind::ReputationUpdate, id("A"), fake_pk(1), 5}};
    EXPECT_THROW(c.append_block(bad, 2), LedgerError);
    EXPECT_TRUE(c.validate());
}

TEST(Ledger, BackwardSearchMatchesForwardScan) {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        std::uint64_t clock = 0;
        auto c = random_chain(rng, 5, 60, clock);
        for (int u = 0; u < 6; ++u) {
            auto uav = id("uav-" + std::to_string(u));
            ASSERT_EQ(c.latest_record(uav), forward_scan(c, uav));
        }
    }
}

TEST(Ledger, HistoryReplaysReputationWalk) {
    Rng rng(32);
    Chain c;
    std::vector<std::int64_t> expected{0};
    c.record_registration(id("A"), fake_pk(1), 1);
    for (int i = 0; i < 40; ++i) {
        expected.push_back(expected.back() + (rng.chance(0.5) ? 1 : -1));
        c.record_reputation(id("A"), fake_pk(1), expected.back(), 2 + i);
    }
    auto history = c.reputation_history();
    ASSERT_EQ(history.size(), 1u);
    EXPECT_EQ(history.begin()->first, id("A"));
    EXPECT_EQ(history.begin()->second, expected);
}

TEST(Ledger, FieldMutationsAlwaysDetected) {
    Rng rng(33);
    std::uint64_t clock = 0;
    auto base = random_chain(rng, 4, 60, clock);
    ASSERT_TRUE(base.validate());
    for (int trial = 0; trial < 100; ++trial) {
        auto blocks = base.blocks();
        mutate_field(blocks[rng.uniform(blocks.size())], rng);
        ASSERT_FALSE(Chain::from_blocks_unchecked(std::move(blocks)).validate()) << "trial " << trial;
    }
}

TEST(Ledger, SerializedBitFlipsAlwaysRejected) {
    Rng rng(34);
    std::uint64_t clock = 0;
    auto base = random_chain(rng, 3, 20, clock);
    const auto bytes = base.export_binary();
    for (int trial = 0; trial < 500; ++trial) {
        auto mutated = bytes;
        mutated[rng.uniform(mutated.size())] ^= static_cast<std::uint8_t>(1u << rng.uniform(8));
        bool rejected = false;
        try {
            rejected = !Chain::parse_binary(mutated).validate();
        } catch (const DecodeError&) {
            rejected = true;
        }
        ASSERT_TRUE(rejected) << "trial " << trial;
    }
}

TEST(Ledger, ExportImportRoundTrip) {
    Rng rng(35);
    std::uint64_t clock = 500;
    auto c = random_chain(rng, 3, 30, clock);
    auto bin = Chain::import_binary(c.export_binary());
    EXPECT_EQ(bin.blocks(), c.blocks());
    auto js = Chain::from_json(nlohmann::json::parse(c.to_json().dump()));
    EXPECT_EQ(js.blocks(), c.blocks());
    EXPECT_TRUE(js.validate());

    auto j = c.to_json();
    j["blocks"][2]["txs"][0]["rep"] = 17;
    EXPECT_FALSE(Chain::from_json(j).validate());
    auto truncated = c.export_binary();
    truncated.pop_back();
    EXPECT_THROW(Chain::import_binary(truncated), DecodeError);
}

TEST(Ledger, ReadersSeeConsistentPrefixes) {
    Chain c;
    c.record_registration(id("A"), fake_pk(1), 1);
    std::atomic<bool> done{false};
    std::atomic<int> checks{0};
    std::atomic<bool> all_valid{true};
    std::thread reader([&] {
        std::size_t last = 0;
        do {
            Chain snapshot = c;
            if (!snapshot.validate() || snapshot.size() < last) all_valid = false;
            last = snapshot.size();
            ++checks;
        } while (!done.load());
    });
    for (int i = 1; i <= 300; ++i) {
        c.record_reputation(id("A"), fake_pk(1), i, 1 + i);
        std::this_thread::yield();
    }
    done = true;
    reader.join();
    EXPECT_TRUE(all_valid.load());
    EXPECT_GT(checks.load(), 0);
    EXPECT_EQ(c.latest_record(id("A"))->rep, 300);
}
