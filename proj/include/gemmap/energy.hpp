#pragma once

// Closed-form energy of a mapping. Traffic per link is a projection update
// count; energy is that count times per-word unit weights, aggregated at the
// receiving level. Everything here is O(1) in the GEMM volume.

#include <array>
#include <cmath>
#include <cstdint>

#include "gemmap/core.hpp"

namespace gemmap {

using AxisCounts = std::array<std::uint64_t, 3>;

struct TrafficCounts {
    AxisCounts n01{};    // DRAM -> SRAM
    AxisCounts n_src3{}; // nearest resident upper level -> regfile
    AxisCounts n_src4{}; // nearest resident upper level -> MACC
};

namespace detail {

inline std::uint64_t exact_div(std::uint64_t num, std::uint64_t den, const char* what) {
    if (den == 0 || num % den != 0)
        throw InvariantError(std::string(what) + ": " + std::to_string(num) + " is not divisible by " + std::to_string(den));
    return num / den;
}

// Denominators of the normalized traffic N/V. Keeping them as integers lets
// the normalized energy be formed as 1/den without ever touching V.
inline std::uint64_t src1_denominator(Axis a, const Chain& c, std::uint64_t extent, Axis walk_01) noexcept {
    return a == walk_01 ? extent : c.l1;
}

inline std::uint64_t src3_denominator(Axis a, const Chain& c, Axis walk_12) noexcept {
    return a == walk_12 ? c.l3 * (c.l1 / c.l2) : c.l3;
}

}  // namespace detail

inline AxisCounts traffic_src1(const Mapping& m, const GemmInstance& g) {
    const std::uint64_t v = g.volume();
    AxisCounts n{};
    for (Axis a : kAxes)
        if (m.in_sram(a))
            n[idx(a)] = detail::exact_div(v, detail::src1_denominator(a, chain_of(m, a), g.dims[a], m.walk_01), "N(0-1)");
    return n;
}

inline AxisCounts traffic_src3(const Mapping& m, const GemmInstance& g) {
    const std::uint64_t v = g.volume();
    AxisCounts n{};
    for (Axis a : kAxes) {
        if (!m.in_rf(a)) continue;
        const Chain c = chain_of(m, a);
        if (c.l2 == 0 || c.l1 % c.l2 != 0) throw InvariantError("N(src-3): SRAM tile not divisible by array tile");
        n[idx(a)] = detail::exact_div(v, detail::src3_denominator(a, c, m.walk_12), "N(src-3)");
    }
    return n;
}

inline AxisCounts traffic_src4(const GemmInstance& g) {
    const std::uint64_t v = g.volume();
    return {v, v, v};
}

inline TrafficCounts traffic(const Mapping& m, const GemmInstance& g) {
    return {traffic_src1(m, g), traffic_src3(m, g), traffic_src4(g)};
}

// ---------------------------------------------------------------------------
// Reduction-axis boundary handling

/// Effective number of external partial-sum updates per output element seen
/// by each receiving level, and the matching read-old/write-back ratio.
struct BoundaryCoeffs {
    std::uint64_t l_tilde_src1 = 1, l_tilde_src3 = 1, l_tilde_src4 = 1;
    double rho_src1 = 0.0, rho_src3 = 0.0, rho_src4 = 0.0;
};

inline double rho_of(std::uint64_t l_tilde) noexcept { return 1.0 - 1.0 / static_cast<double>(l_tilde); }

inline BoundaryCoeffs boundary_coeffs_z(std::uint64_t extent_z, const Chain& z, Axis walk_01, Axis walk_12) {
    BoundaryCoeffs b;
    b.l_tilde_src1 = walk_01 == Axis::z ? 1 : detail::exact_div(extent_z, z.l1, "L~(src-1)");
    b.l_tilde_src3 = detail::exact_div(extent_z, walk_12 == Axis::z ? z.l1 : z.l2, "L~(src-3)");
    b.l_tilde_src4 = detail::exact_div(extent_z, detail::exact_div(z.l2, z.l3, "L^(2-3)"), "L~(src-4)");
    b.rho_src1 = rho_of(b.l_tilde_src1);
    b.rho_src3 = rho_of(b.l_tilde_src3);
    b.rho_src4 = rho_of(b.l_tilde_src4);
    return b;
}

inline BoundaryCoeffs boundary_coeffs(const Mapping& m, const GemmInstance& g) {
    return boundary_coeffs_z(g.dims[Axis::z], chain_of(m, Axis::z), m.walk_01, m.walk_12);
}

// ---------------------------------------------------------------------------
// Unit weights

/// Extended-precision scalar for the rounded totals.
using Wide = __float128;

template <class T>
T rho_as(std::uint64_t l_tilde) noexcept {
    return T(1) - T(1) / static_cast<T>(l_tilde);
}

/// e^(p,down)_d and e^(p,up)_d for p = 0..3 under one boundary coefficient.
template <class T>
struct BasicLevelWeights {
    std::array<std::array<T, 3>, 4> down{};
    std::array<std::array<T, 3>, 4> up{};
};
using LevelWeights = BasicLevelWeights<double>;

/// One weight table per receiving level; only the z entries differ between
/// them, through the receiver's own rho.
template <class T>
struct BasicUnitWeights {
    BasicLevelWeights<T> src1, src3, src4;
};
using UnitWeights = BasicUnitWeights<double>;

template <class T>
BasicLevelWeights<T> level_weights(const HardwareSpec& hw, T rho) {
    BasicLevelWeights<T> w;
    const std::size_t x = idx(Axis::x), y = idx(Axis::y), z = idx(Axis::z);
    auto c = [](double v) { return static_cast<T>(v); };

    w.down[0][x] = w.down[0][y] = c(hw.dram.read);
    w.down[0][z] = c(hw.dram.write) + rho * c(hw.dram.read);

    w.up[1][x] = w.up[1][y] = c(hw.sram.write);
    w.up[1][z] = rho * c(hw.sram.write);
    w.down[1][x] = w.down[1][y] = c(hw.sram.read);
    w.down[1][z] = c(hw.sram.write) + rho * c(hw.sram.read);

    // level 2 is multicast/reduction fabric: both directions stay zero

    w.up[3][x] = w.up[3][y] = c(hw.rf.write);
    w.up[3][z] = rho * c(hw.rf.write) + c(hw.e_spatial_reduce);
    w.down[3][x] = w.down[3][y] = c(hw.rf.read);
    w.down[3][z] = c(hw.rf.write) + rho * c(hw.rf.read);
    return w;
}

template <class T = double>
BasicUnitWeights<T> unit_weights(const HardwareSpec& hw, const BoundaryCoeffs& b) {
    return {level_weights(hw, rho_as<T>(b.l_tilde_src1)), level_weights(hw, rho_as<T>(b.l_tilde_src3)),
            level_weights(hw, rho_as<T>(b.l_tilde_src4))};
}

// ---------------------------------------------------------------------------
// Aggregation

/// Normalized (pJ/MAC) contribution of one axis to each receiver term.
template <class T>
struct BasicAxisEnergy {
    T src1{}, src3{}, src4{};
    T total() const noexcept { return src1 + src3 + src4; }
};
using AxisEnergy = BasicAxisEnergy<double>;

/// Per-axis energy given that axis' chain and the stage configuration. The
/// solver's tables are built from exactly this function.
template <class T>
BasicAxisEnergy<T> axis_energy(Axis a, const Chain& c, std::uint64_t extent, Axis walk_01, Axis walk_12, bool in_sram,
                               bool in_rf, const BasicUnitWeights<T>& w) noexcept {
    const std::size_t d = idx(a);
    const T pe = static_cast<T>(c.l2 / c.l3);
    BasicAxisEnergy<T> e;
    if (in_sram) {
        const T r01 = T(1) / static_cast<T>(detail::src1_denominator(a, c, extent, walk_01));
        e.src1 = r01 * (w.src1.down[0][d] + w.src1.up[1][d]);
    }
    if (in_rf) {
        const T r3 = T(1) / static_cast<T>(detail::src3_denominator(a, c, walk_12));
        const T supply = in_sram ? w.src3.down[1][d] : w.src3.down[0][d];
        e.src3 = r3 * (w.src3.up[3][d] + supply / pe);
        e.src4 = w.src4.down[3][d];
    } else {
        e.src4 = (in_sram ? w.src4.down[1][d] : w.src4.down[0][d]) / pe;
    }
    return e;
}

/// Leakage per MAC: per-cycle leakage over the cycles needed at the active
/// PE count.
template <class T = double>
T leak_per_mac(const HardwareSpec& hw, std::uint64_t active_pes) noexcept {
    return (static_cast<T>(hw.leak_sram) + static_cast<T>(hw.leak_rf) * static_cast<T>(hw.num_pe)) /
           static_cast<T>(active_pes);
}

/// Summation order shared by the bounds of the solver and the breakdown.
template <class T>
T combine_axes(const BasicAxisEnergy<T>& ex, const BasicAxisEnergy<T>& ey, const BasicAxisEnergy<T>& ez, T macc,
               T leak) noexcept {
    return ((ex.total() + ey.total()) + ez.total()) + macc + leak;
}

/// Total in extended precision, rounded once. Mappings whose energies agree
/// in exact arithmetic round to the same double, so ties stay ties when the
/// energy constants are rescaled.
inline double rounded_total(Wide x, Wide y, Wide z, double macc, Wide leak) noexcept {
    return static_cast<double>(((x + y) + z) + static_cast<Wide>(macc) + leak);
}

struct EnergyBreakdown {
    double e_src1 = 0.0, e_src3 = 0.0, e_src4 = 0.0;  // pJ/MAC
    double e_macc_term = 0.0;
    double e_leak_term = 0.0;
    double e_total_norm = 0.0;  // pJ/MAC
    double e_total_abs = 0.0;   // pJ
    std::array<AxisEnergy, 3> per_axis{};
    TrafficCounts traffic;
    BoundaryCoeffs coeffs;
    std::uint64_t volume = 0;
    std::uint64_t active_pes = 0;
    bool leak_included = false;
};

struct EvalOptions {
    bool include_leak = false;
    PeRule pe_rule = PeRule::exact;
};

namespace detail {

/// energy_total without the feasibility check; callers guarantee validity.
inline EnergyBreakdown evaluate_unchecked(const Mapping& m, const GemmInstance& g, const HardwareSpec& hw,
                                          bool include_leak) {
    EnergyBreakdown b;
    b.volume = g.volume();
    b.active_pes = m.active_pes();
    b.coeffs = boundary_coeffs(m, g);
    const UnitWeights w = unit_weights(hw, b.coeffs);
    const BasicUnitWeights<Wide> ww = unit_weights<Wide>(hw, b.coeffs);
    std::array<Wide, 3> wide{};
    for (Axis a : kAxes) {
        const Chain c = chain_of(m, a);
        auto& e = b.per_axis[idx(a)];
        e = axis_energy(a, c, g.dims[a], m.walk_01, m.walk_12, m.in_sram(a), m.in_rf(a), w);
        wide[idx(a)] = axis_energy(a, c, g.dims[a], m.walk_01, m.walk_12, m.in_sram(a), m.in_rf(a), ww).total();
        b.e_src1 += e.src1;
        b.e_src3 += e.src3;
        b.e_src4 += e.src4;
    }
    b.traffic = traffic(m, g);
    b.e_macc_term = hw.e_macc;
    b.leak_included = include_leak;
    b.e_leak_term = include_leak ? leak_per_mac(hw, b.active_pes) : 0.0;
    b.e_total_norm = rounded_total(wide[0], wide[1], wide[2], hw.e_macc,
                                   include_leak ? leak_per_mac<Wide>(hw, b.active_pes) : Wide(0));
    b.e_total_abs = b.e_total_norm * static_cast<double>(b.volume);
    return b;
}

}  // namespace detail

/// Total energy of a mapping; refuses infeasible mappings.
inline EnergyBreakdown energy_total(const Mapping& m, const GemmInstance& g, const HardwareSpec& hw,
                                    EvalOptions opt = {}) {
    ValidationReport r = validate(m, g, hw, opt.pe_rule);
    if (!r.feasible()) throw ValidationError(std::move(r));
    return detail::evaluate_unchecked(m, g, hw, opt.include_leak);
}

struct DelayEdp {
    double delay = 0.0;  // s
    double edp = 0.0;    // pJ*s
};

/// Compute-bound delay at the mapping's active PE count, and E*T.
inline DelayEdp edp(const EnergyBreakdown& b, const HardwareSpec& hw) {
    const std::uint64_t pes = b.active_pes ? b.active_pes : hw.num_pe;
    const std::uint64_t cycles = (b.volume + pes - 1) / pes;
    DelayEdp r;
    r.delay = static_cast<double>(cycles) * hw.cycle_period;
    r.edp = b.e_total_abs * r.delay;
    return r;
}

}  // namespace gemmap
