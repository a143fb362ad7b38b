#pragma once

// Domain types for GEMM mapping on a five-level spatial accelerator:
// workload extents, hardware description, mapping decision vector and the
// feasibility checks that tie them together.

#include <array>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gemmap {

inline constexpr std::string_view kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Errors

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent user configuration (files, model descriptors).
struct ConfigError : Error {
    using Error::Error;
};

/// An input lies outside the supported numeric range.
struct RangeError : Error {
    using Error::Error;
};

/// An internal invariant was broken; always a bug or an unchecked input.
struct InvariantError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Axes

enum class Axis : std::uint8_t { x = 0, y = 1, z = 2 };

inline constexpr std::array<Axis, 3> kAxes{Axis::x, Axis::y, Axis::z};

constexpr std::size_t idx(Axis a) noexcept { return static_cast<std::size_t>(a); }

constexpr char axis_name(Axis a) noexcept { return "xyz"[idx(a)]; }

inline Axis parse_axis(std::string_view s) {
    if (s == "x") return Axis::x;
    if (s == "y") return Axis::y;
    if (s == "z") return Axis::z;
    throw ConfigError("unknown axis '" + std::string(s) + "' (expected x, y or z)");
}

/// The two axes orthogonal to `a`, in ascending order.
constexpr std::array<Axis, 2> orthogonal(Axis a) noexcept {
    switch (a) {
        case Axis::x: return {Axis::y, Axis::z};
        case Axis::y: return {Axis::x, Axis::z};
        default: return {Axis::x, Axis::y};
    }
}

/// Per-axis positive extents, indexed by Axis.
struct Extents {
    std::array<std::uint64_t, 3> v{1, 1, 1};

    constexpr std::uint64_t& operator[](Axis a) noexcept { return v[idx(a)]; }
    constexpr std::uint64_t operator[](Axis a) const noexcept { return v[idx(a)]; }
    friend constexpr bool operator==(const Extents&, const Extents&) = default;
    friend constexpr auto operator<=>(const Extents&, const Extents&) = default;
};

/// Area of the projection of a box onto the plane with normal `normal`.
constexpr std::uint64_t projection_area(const Extents& e, Axis normal) noexcept {
    const auto [a, b] = orthogonal(normal);
    return e[a] * e[b];
}

/// Multiplies with an explicit overflow check.
inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    const unsigned __int128 r = static_cast<unsigned __int128>(a) * b;
    if (r > std::numeric_limits<std::uint64_t>::max()) throw RangeError("integer overflow in extent product");
    return static_cast<std::uint64_t>(r);
}

// ---------------------------------------------------------------------------
// Workload

inline constexpr std::uint64_t kMaxExtent = std::uint64_t{1} << 20;

struct GemmInstance {
    Extents dims;  // (X, Y, Z); z is the reduction axis
    std::uint64_t weight = 1;
    std::string label;

    /// Number of MACs. Exact: three extents of at most 2^20 need 60 bits.
    std::uint64_t volume() const { return checked_mul(checked_mul(dims[Axis::x], dims[Axis::y]), dims[Axis::z]); }

    void check() const {
        for (Axis a : kAxes)
            if (dims[a] == 0) throw ConfigError("GEMM '" + label + "': extent along " + axis_name(a) + " must be >= 1");
        if (weight == 0) throw ConfigError("GEMM '" + label + "': weight must be >= 1");
        (void)volume();
    }
};

// ---------------------------------------------------------------------------
// Hardware

inline constexpr std::array<std::string_view, 5> kLevelNames{"DRAM", "SRAM", "PE-array", "regfile", "MACC"};

/// Per-word access energies in pJ.
struct AccessEnergy {
    double read = 0.0;
    double write = 0.0;
};

struct HardwareSpec {
    std::string id;
    std::uint64_t cap_sram = 0;  // words
    std::uint64_t cap_rf = 0;    // words per PE
    std::uint64_t num_pe = 1;

    AccessEnergy dram, sram, rf;
    double e_macc = 0.0;            // pJ per MAC
    double e_spatial_reduce = 0.0;  // pJ per spatially reduced word
    double leak_sram = 0.0;         // pJ per cycle
    double leak_rf = 0.0;           // pJ per cycle per PE
    double cycle_period = 1e-9;     // seconds

    bool sram_bypass_free = true;
    bool rf_bypass_free = true;

    void check() const {
        auto nonneg = [&](double v, const char* what) {
            if (!(v >= 0.0)) throw ConfigError("hardware '" + id + "': " + what + " must be >= 0");
        };
        if (num_pe == 0) throw ConfigError("hardware '" + id + "': num_pe must be >= 1");
        if (!(cycle_period > 0.0)) throw ConfigError("hardware '" + id + "': cycle_period must be > 0");
        nonneg(dram.read, "dram.read");
        nonneg(dram.write, "dram.write");
        nonneg(sram.read, "sram.read");
        nonneg(sram.write, "sram.write");
        nonneg(rf.read, "regfile.read");
        nonneg(rf.write, "regfile.write");
        nonneg(e_macc, "macc");
        nonneg(e_spatial_reduce, "spatial_reduce");
        nonneg(leak_sram, "sram leakage");
        nonneg(leak_rf, "regfile leakage");
    }

    /// Copy with every energy constant multiplied by `c`.
    HardwareSpec scaled(double c) const {
        HardwareSpec h = *this;
        for (AccessEnergy* e : {&h.dram, &h.sram, &h.rf}) {
            e->read *= c;
            e->write *= c;
        }
        h.e_macc *= c;
        h.e_spatial_reduce *= c;
        h.leak_sram *= c;
        h.leak_rf *= c;
        return h;
    }
};

// ---------------------------------------------------------------------------
// Mapping

/// Tile-carrying levels of the hierarchy. DRAM holds the whole GEMM and the
/// MACC tile is a single point, so neither is a decision variable.
enum class TileLevel : std::uint8_t { sram = 0, array = 1, regfile = 2 };

struct Mapping {
    std::array<Extents, 3> tiles{};  // indexed by TileLevel
    Axis walk_01 = Axis::x;          // DRAM -> SRAM stage
    Axis walk_12 = Axis::x;          // SRAM -> PE-array stage
    std::array<bool, 3> resident_sram{true, true, true};
    std::array<bool, 3> resident_rf{true, true, true};

    Extents& tile(TileLevel l) noexcept { return tiles[static_cast<std::size_t>(l)]; }
    const Extents& tile(TileLevel l) const noexcept { return tiles[static_cast<std::size_t>(l)]; }
    const Extents& sram() const noexcept { return tile(TileLevel::sram); }
    const Extents& array() const noexcept { return tile(TileLevel::array); }
    const Extents& regfile() const noexcept { return tile(TileLevel::regfile); }

    bool in_sram(Axis a) const noexcept { return resident_sram[idx(a)]; }
    bool in_rf(Axis a) const noexcept { return resident_rf[idx(a)]; }

    /// Spatial unrolling along `a` (PE-array tile / regfile tile).
    std::uint64_t pe_split(Axis a) const noexcept { return array()[a] / regfile()[a]; }
    std::uint64_t active_pes() const noexcept {
        return pe_split(Axis::x) * pe_split(Axis::y) * pe_split(Axis::z);
    }

    friend bool operator==(const Mapping&, const Mapping&) = default;
};

/// Lexicographic key used for deterministic tie-breaking: walking axes, then
/// SRAM residency bits, regfile residency bits, then tiles axis by axis
/// (SRAM, array, regfile for x, then y, then z).
inline std::array<std::uint64_t, 17> tie_break_key(const Mapping& m) {
    std::array<std::uint64_t, 17> k{};
    std::size_t i = 0;
    k[i++] = idx(m.walk_01);
    k[i++] = idx(m.walk_12);
    for (bool b : m.resident_sram) k[i++] = b;
    for (bool b : m.resident_rf) k[i++] = b;
    for (Axis a : kAxes)
        for (const auto& t : m.tiles) k[i++] = t[a];
    return k;
}

// ---------------------------------------------------------------------------
// Validation

enum class PeRule : std::uint8_t { exact, at_most };

enum class Constraint : std::uint8_t { divisibility, pe_count, cap_rf, cap_sram, bypass_frozen };

constexpr std::string_view constraint_name(Constraint c) noexcept {
    switch (c) {
        case Constraint::divisibility: return "divisibility";
        case Constraint::pe_count: return "pe-count";
        case Constraint::cap_rf: return "cap-rf";
        case Constraint::cap_sram: return "cap-sram";
        case Constraint::bypass_frozen: return "bypass-frozen";
    }
    return "?";
}

struct Violation {
    Constraint constraint;
    std::string context;
    std::uint64_t measured = 0;
    std::uint64_t bound = 0;

    std::string describe() const {
        return std::string(constraint_name(constraint)) + " (" + context + "): " + std::to_string(measured) +
               " vs " + std::to_string(bound);
    }
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool feasible() const noexcept { return violations.empty(); }
    bool violates(Constraint c) const noexcept {
        for (const auto& v : violations)
            if (v.constraint == c) return true;
        return false;
    }
};

/// Words held by one level: each resident projection of its tile.
inline std::uint64_t resident_words(const Extents& tile, const std::array<bool, 3>& resident) {
    std::uint64_t w = 0;
    for (Axis a : kAxes)
        if (resident[idx(a)]) w += projection_area(tile, a);
    return w;
}

inline ValidationReport validate(const Mapping& m, const GemmInstance& g, const HardwareSpec& hw,
                                 PeRule pe_rule = PeRule::exact) {
    ValidationReport r;
    bool chains_ok = true;

    static constexpr std::array<const char*, 4> kLinks{"0->1", "1->2", "2->3", "3->4"};
    for (Axis a : kAxes) {
        const std::array<std::uint64_t, 5> len{g.dims[a], m.sram()[a], m.array()[a], m.regfile()[a], 1};
        for (std::size_t p = 0; p < 4; ++p) {
            const std::uint64_t upper = len[p], lower = len[p + 1];
            if (lower == 0 || upper % lower != 0) {
                chains_ok = false;
                r.violations.push_back({Constraint::divisibility,
                                        std::string("axis ") + axis_name(a) + ", level " + kLinks[p], lower, upper});
            }
        }
    }

    if (chains_ok) {
        const std::uint64_t pes = m.active_pes();
        const bool ok = pe_rule == PeRule::exact ? pes == hw.num_pe : pes <= hw.num_pe;
        if (!ok)
            r.violations.push_back({Constraint::pe_count, pe_rule == PeRule::exact ? "product == num_pe" : "product <= num_pe",
                                    pes, hw.num_pe});

        const std::uint64_t rf_words = resident_words(m.regfile(), m.resident_rf);
        if (rf_words > hw.cap_rf) r.violations.push_back({Constraint::cap_rf, "regfile words per PE", rf_words, hw.cap_rf});
        const std::uint64_t sram_words = resident_words(m.sram(), m.resident_sram);
        if (sram_words > hw.cap_sram) r.violations.push_back({Constraint::cap_sram, "SRAM words", sram_words, hw.cap_sram});
    }

    for (Axis a : kAxes) {
        if (!hw.sram_bypass_free && !m.in_sram(a))
            r.violations.push_back({Constraint::bypass_frozen, std::string("SRAM axis ") + axis_name(a), 0, 1});
        if (!hw.rf_bypass_free && !m.in_rf(a))
            r.violations.push_back({Constraint::bypass_frozen, std::string("regfile axis ") + axis_name(a), 0, 1});
    }
    return r;
}

/// validate(...).feasible() without building a report.
inline bool is_feasible(const Mapping& m, const GemmInstance& g, const HardwareSpec& hw, PeRule pe_rule = PeRule::exact) {
    for (Axis a : kAxes) {
        const std::array<std::uint64_t, 5> len{g.dims[a], m.sram()[a], m.array()[a], m.regfile()[a], 1};
        for (std::size_t p = 0; p < 4; ++p)
            if (len[p + 1] == 0 || len[p] % len[p + 1] != 0) return false;
        if (!hw.sram_bypass_free && !m.in_sram(a)) return false;
        if (!hw.rf_bypass_free && !m.in_rf(a)) return false;
    }
    const std::uint64_t pes = m.active_pes();
    if (pe_rule == PeRule::exact ? pes != hw.num_pe : pes > hw.num_pe) return false;
    return resident_words(m.regfile(), m.resident_rf) <= hw.cap_rf &&
           resident_words(m.sram(), m.resident_sram) <= hw.cap_sram;
}

struct ValidationError : Error {
    ValidationReport report;
    explicit ValidationError(ValidationReport r)
        : Error("invalid mapping: " + (r.violations.empty() ? std::string("?") : r.violations.front().describe())),
          report(std::move(r)) {}
};

/// No mapping satisfies every constraint. `binding` names the constraints
/// that rule the instance out.
struct InfeasibleError : Error {
    std::vector<std::string> binding;
    InfeasibleError(const std::string& what, std::vector<std::string> b) : Error(what), binding(std::move(b)) {}
};

// ---------------------------------------------------------------------------
// Divisor chains

/// Ascending divisors of n.
inline std::vector<std::uint64_t> divisors(std::uint64_t n) {
    std::vector<std::uint64_t> lo, hi;
    for (std::uint64_t d = 1; d * d <= n; ++d) {
        if (n % d) continue;
        lo.push_back(d);
        if (d != n / d) hi.push_back(n / d);
    }
    lo.insert(lo.end(), hi.rbegin(), hi.rend());
    return lo;
}

/// One axis of a tiling: SRAM, PE-array and regfile tile lengths.
struct Chain {
    std::uint64_t l1 = 1, l2 = 1, l3 = 1;
    friend constexpr auto operator<=>(const Chain&, const Chain&) = default;
};

/// Every (L1, L2, L3) with L3 | L2 | L1 | n, in ascending lexicographic order.
inline std::vector<Chain> divisor_chains(std::uint64_t n) {
    if (n == 0) throw RangeError("divisor_chains: n must be >= 1");
    if (n > kMaxExtent) throw RangeError("divisor_chains: n = " + std::to_string(n) + " exceeds 2^20");
    std::vector<Chain> out;
    for (std::uint64_t a : divisors(n))
        for (std::uint64_t b : divisors(a))
            for (std::uint64_t c : divisors(b)) out.push_back({a, b, c});
    return out;
}

inline Chain chain_of(const Mapping& m, Axis a) noexcept { return {m.sram()[a], m.array()[a], m.regfile()[a]}; }

inline void set_chain(Mapping& m, Axis a, const Chain& c) noexcept {
    m.tiles[0][a] = c.l1;
    m.tiles[1][a] = c.l2;
    m.tiles[2][a] = c.l3;
}

}  // namespace gemmap
