#pragma once

// Timing, operation-count and byte accounting for the protocol.
//
// Every section is a flat Table so that the CSV and JSON renderings carry
// the same fields in the same order.

#include <cstdint>
#include <string>
#include <vector>

#include "bazam/crypto.hpp"
#include "bazam/sim.hpp"
#include "json.hpp"

namespace bazam::bench {

struct SizeConstants {
    std::size_t g1 = 0;
    std::size_t g2 = 0;
    std::size_t zp = 0;
    std::size_t id = 0;
    std::size_t hash = 0;
    std::size_t ts = 0;
};

// Element sizes used by the original cost tables.
SizeConstants reference_constants();
// Encoded widths of the curve backend; id/hash/ts as in the reference set.
SizeConstants backend_constants();

// Reference primitive timings (ms) from the original VM measurements.
struct ReferenceTimings {
    double add_g1 = 0.005;
    double mul_g1 = 0.926;
    double mul_g2 = 0.003;
    double exp_g2 = 0.098;
    double pairing = 0.757;
    double hash = 0.003;

    double cost(const crypto::OpCounter& c) const;
};

inline constexpr double kReferenceUavMs = 2.473;
inline constexpr double kReferenceControllerMs = 3.23;
inline constexpr double kReferenceTotalMs = 5.703;

struct BenchConfig {
    std::size_t iterations = 1000;
    std::size_t warmup = 10;
    std::uint64_t seed = 1;
    // Restricts the size section to the reference-constant rows.
    bool reference_constants_only = false;
    std::size_t pac_bytes = 32;  // symbolic |pac|
    std::vector<std::size_t> fleet = {1, 10, 50, 100, 500, 1000};

    // Throws ConfigError when iterations == 0 or pac_bytes == 0.
    void validate() const;
};

struct Table {
    std::string section;
    std::vector<std::string> columns;
    std::vector<std::vector<nlohmann::json>> rows;

    void add(std::vector<nlohmann::json> row);
    // Cell lookup by column name.
    const nlohmann::json& at(std::size_t row, const std::string& column) const;
    // Finds the first row whose `column` equals `value`.
    std::size_t find(const std::string& column, const nlohmann::json& value) const;

    // {"section": ..., "rows": [{column: value, ...}, ...]}
    nlohmann::json to_json() const;
    // Header line, then one line per row. Strings quoted only when needed,
    // nulls left empty.
    std::string to_csv() const;
};

// Mean time of each of the six primitives: G1 add, G1 mul, G2 mul, G2 exp,
// pairing, hash. Counts per call come from the operation counter.
Table bench_primitives(const BenchConfig& cfg);

// One registration and one authentication per iteration with a counter
// scope around each actor step. Throws Error if any iteration's counts
// differ from the first.
Table bench_phases(const BenchConfig& cfg);

// Message and storage sizes, symbolic (reference constants) and backend.
Table report_sizes(const BenchConfig& cfg);

// One row per scenario step: op, subject, outcome, decision and the
// subject's reputation around the step.
Table scenario_table(const sim::ScenarioReport& report);

}  // namespace bazam::bench
