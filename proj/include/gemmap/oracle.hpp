#pragma once

// Reference implementation of the traffic model by explicit traversal.
//
// The walker steps through SRAM tiles, PE-array phases and lockstep MAC
// steps, detects when a projection's coordinates change, forwards bypassed
// demand to the nearest resident upper level, de-duplicates multicast and
// reduction groups across PEs, and tracks first touches of partial sums.
// It shares no counting formula with energy.hpp; agreement between the two
// is evidence, not a tautology.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gemmap/core.hpp"
#include "gemmap/energy.hpp"

namespace gemmap {

struct OracleScaleError : Error {
    using Error::Error;
};

struct SearchSpaceError : Error {
    std::uint64_t space_size = 0;
    SearchSpaceError(const std::string& what, std::uint64_t n) : Error(what), space_size(n) {}
};

enum class Storage : std::uint8_t { dram = 0, sram = 1, regfile = 2 };

struct AccessTally {
    // Receiver-side words per link and axis.
    AxisCounts link01{}, link_src3{}, link_src4{};
    // Word accesses per storage level.
    std::array<std::uint64_t, 3> reads{}, writes{};
    std::uint64_t spatial_reduce_words = 0;
    std::uint64_t macs = 0;
    std::uint64_t cycles = 0;
    double energy = 0.0;  // pJ

    /// Energy from the raw access counts and the hardware's constants.
    double energy_from(const HardwareSpec& hw, bool include_leak) const {
        const std::array<const AccessEnergy*, 3> ert{&hw.dram, &hw.sram, &hw.rf};
        double e = 0.0;
        for (std::size_t l = 0; l < 3; ++l)
            e += static_cast<double>(reads[l]) * ert[l]->read + static_cast<double>(writes[l]) * ert[l]->write;
        e += static_cast<double>(spatial_reduce_words) * hw.e_spatial_reduce;
        e += static_cast<double>(macs) * hw.e_macc;
        if (include_leak)
            e += static_cast<double>(cycles) * (hw.leak_sram + hw.leak_rf * static_cast<double>(hw.num_pe));
        return e;
    }
};

struct OracleOptions {
    bool swap_orthogonal = false;  // iterate the two non-walking axes in the other order
    bool include_leak = false;
    PeRule pe_rule = PeRule::exact;
    std::uint64_t max_steps = 10'000'000;
};

namespace detail {

// Scratch buffers reused across calls on the same thread.
struct OracleScratch {
    std::vector<std::uint64_t> stamp[3];    // multicast/reduction de-dup per projection plane
    std::vector<std::uint64_t> mac_stamp[3];
    std::vector<unsigned char> seen01;      // P tiles delivered to SRAM
    std::vector<unsigned char> seen3_pe;    // P regfile tiles per z-lane
    std::vector<unsigned char> seen3_grp;   // P regfile tiles per reduction group
    std::vector<unsigned char> seen4_pe;    // P points per z-lane (regfile source)
    std::vector<unsigned char> seen4_grp;   // P points per reduction group

    template <class T>
    static void reset(std::vector<T>& v, std::size_t n) {
        v.assign(n, T{});
    }
};

inline OracleScratch& oracle_scratch() {
    thread_local OracleScratch s;
    return s;
}

// Odometer over a 3D index box; `order` lists axes outermost first.
struct Odometer {
    Extents extent;
    std::array<Axis, 3> order;
    Extents pos{{0, 0, 0}};
    bool done = false;

    bool innermost_at_start() const noexcept { return pos[order[2]] == 0; }
    void next() noexcept {
        for (int k = 2; k >= 0; --k) {
            Axis a = order[static_cast<std::size_t>(k)];
            if (++pos[a] < extent[a]) return;
            pos[a] = 0;
        }
        done = true;
    }
};

inline std::array<Axis, 3> loop_order(Axis walk, bool swap) {
    auto [beta, gamma] = orthogonal(walk);
    if (swap) std::swap(beta, gamma);
    return {gamma, beta, walk};  // walking axis innermost
}

inline std::uint64_t plane_index(const Extents& coord, const Extents& size, Axis normal) noexcept {
    const auto [a, b] = orthogonal(normal);
    return coord[a] * size[b] + coord[b];
}

}  // namespace detail

inline AccessTally simulate_traversal(const Mapping& m, const GemmInstance& g, const HardwareSpec& hw,
                                      const OracleOptions& opt = {}) {
    {
        ValidationReport r = validate(m, g, hw, opt.pe_rule);
        if (!r.feasible()) throw ValidationError(std::move(r));
    }
    const Extents& l0 = g.dims;
    const Extents& l1 = m.sram();
    const Extents& l2 = m.array();
    const Extents& l3 = m.regfile();
    Extents n1, n12, npe, nrf;  // SRAM tiles, phases per SRAM tile, PEs, regfile tiles (global)
    for (Axis a : kAxes) {
        n1[a] = l0[a] / l1[a];
        n12[a] = l1[a] / l2[a];
        npe[a] = l2[a] / l3[a];
        nrf[a] = l0[a] / l3[a];
    }
    const std::uint64_t volume = g.volume();
    const std::uint64_t phases = checked_mul(checked_mul(n1[Axis::x] * n12[Axis::x], n1[Axis::y] * n12[Axis::y]),
                                             n1[Axis::z] * n12[Axis::z]);
    if (phases > opt.max_steps || volume > opt.max_steps)
        throw OracleScaleError("oracle scale exceeded: " + std::to_string(phases) + " array phases, " +
                               std::to_string(volume) + " MACs (limit " + std::to_string(opt.max_steps) + ")");

    constexpr auto X = Axis::x, Y = Axis::y, Z = Axis::z;
    auto& s = detail::oracle_scratch();
    for (Axis a : kAxes) {
        const auto [u, v] = orthogonal(a);
        detail::OracleScratch::reset(s.stamp[idx(a)], nrf[u] * nrf[v]);
        detail::OracleScratch::reset(s.mac_stamp[idx(a)], l0[u] * l0[v]);
    }
    detail::OracleScratch::reset(s.seen01, n1[X] * n1[Y]);
    detail::OracleScratch::reset(s.seen3_pe, nrf[X] * nrf[Y] * npe[Z]);
    detail::OracleScratch::reset(s.seen3_grp, nrf[X] * nrf[Y]);
    detail::OracleScratch::reset(s.seen4_pe, l0[X] * l0[Y] * npe[Z]);
    detail::OracleScratch::reset(s.seen4_grp, l0[X] * l0[Y]);

    AccessTally t;
    auto& reads = t.reads;
    auto& writes = t.writes;
    constexpr std::size_t kDram = 0, kSram = 1, kRf = 2;
    auto source_of = [&](Axis a) { return m.in_sram(a) ? kSram : kDram; };

    std::uint64_t step_id = 0;  // distinct id per multicast/reduction event

    // DRAM -> SRAM: walk SRAM tiles.
    detail::Odometer sram_walk{n1, detail::loop_order(m.walk_01, opt.swap_orthogonal)};
    std::array<std::uint64_t, 3> prev01{};
    for (bool first = true; !sram_walk.done; sram_walk.next(), first = false) {
        const Extents& tc = sram_walk.pos;
        const bool column_head = sram_walk.innermost_at_start();
        for (Axis a : kAxes) {
            const std::uint64_t key = detail::plane_index(tc, n1, a);
            const bool changed = first || column_head || key != prev01[idx(a)];
            prev01[idx(a)] = key;
            if (!changed || !m.in_sram(a)) continue;
            const std::uint64_t words = projection_area(l1, a);
            t.link01[idx(a)] += words;
            if (a != Z) {
                reads[kDram] += words;
                writes[kSram] += words;
            } else {
                // write-back of the evicted tile, then fetch the old value
                // unless this is the tile's first visit
                writes[kDram] += words;
                auto& seen = s.seen01[tc[X] * n1[Y] + tc[Y]];
                if (seen) {
                    reads[kDram] += words;
                    writes[kSram] += words;
                }
                seen = 1;
            }
        }

        // SRAM -> PE-array phases inside this SRAM tile.
        detail::Odometer phase_walk{n12, detail::loop_order(m.walk_12, opt.swap_orthogonal)};
        std::array<std::uint64_t, 3> prev12{};
        for (bool first12 = true; !phase_walk.done; phase_walk.next(), first12 = false) {
            Extents g2;  // global PE-array tile coordinate
            for (Axis a : kAxes) g2[a] = tc[a] * n12[a] + phase_walk.pos[a];
            const bool head12 = phase_walk.innermost_at_start();

            for (Axis a : kAxes) {
                const std::uint64_t key = detail::plane_index(g2, Extents{{n1[X] * n12[X], n1[Y] * n12[Y], n1[Z] * n12[Z]}}, a);
                const bool changed = first12 || head12 || key != prev12[idx(a)];
                prev12[idx(a)] = key;
                if (!changed || !m.in_rf(a)) continue;

                const std::uint64_t words = projection_area(l3, a);
                const std::size_t src = source_of(a);
                ++step_id;
                Extents p;
                for (p[X] = 0; p[X] < npe[X]; ++p[X])
                    for (p[Y] = 0; p[Y] < npe[Y]; ++p[Y])
                        for (p[Z] = 0; p[Z] < npe[Z]; ++p[Z]) {
                            Extents r;
                            for (Axis b : kAxes) r[b] = g2[b] * npe[b] + p[b];
                            t.link_src3[idx(a)] += words;
                            auto& stamp = s.stamp[idx(a)][detail::plane_index(r, nrf, a)];
                            const bool new_group = stamp != step_id;
                            stamp = step_id;
                            if (a != Z) {
                                writes[kRf] += words;
                                if (new_group) reads[src] += words;
                                continue;
                            }
                            t.spatial_reduce_words += words;
                            auto& seen_pe = s.seen3_pe[(r[X] * nrf[Y] + r[Y]) * npe[Z] + p[Z]];
                            if (seen_pe) writes[kRf] += words;
                            seen_pe = 1;
                            if (new_group) {
                                writes[src] += words;
                                auto& seen_grp = s.seen3_grp[r[X] * nrf[Y] + r[Y]];
                                if (seen_grp) reads[src] += words;
                                seen_grp = 1;
                            }
                        }
            }

            // Lockstep MAC steps of this phase.
            Extents o;
            for (o[X] = 0; o[X] < l3[X]; ++o[X])
                for (o[Y] = 0; o[Y] < l3[Y]; ++o[Y])
                    for (o[Z] = 0; o[Z] < l3[Z]; ++o[Z]) {
                        ++t.cycles;
                        ++step_id;
                        Extents p;
                        for (p[X] = 0; p[X] < npe[X]; ++p[X])
                            for (p[Y] = 0; p[Y] < npe[Y]; ++p[Y])
                                for (p[Z] = 0; p[Z] < npe[Z]; ++p[Z]) {
                                    Extents pt;
                                    for (Axis b : kAxes) pt[b] = g2[b] * l2[b] + p[b] * l3[b] + o[b];
                                    ++t.macs;
                                    for (Axis a : kAxes) {
                                        ++t.link_src4[idx(a)];
                                        if (m.in_rf(a)) {
                                            if (a != Z) {
                                                ++reads[kRf];
                                            } else {
                                                ++writes[kRf];
                                                auto& seen = s.seen4_pe[(pt[X] * l0[Y] + pt[Y]) * npe[Z] + p[Z]];
                                                if (seen) ++reads[kRf];
                                                seen = 1;
                                            }
                                            continue;
                                        }
                                        auto& stamp = s.mac_stamp[idx(a)][detail::plane_index(pt, l0, a)];
                                        if (stamp == step_id) continue;  // multicast / reduced with a peer
                                        stamp = step_id;
                                        const std::size_t src = source_of(a);
                                        if (a != Z) {
                                            ++reads[src];
                                        } else {
                                            ++writes[src];
                                            auto& seen = s.seen4_grp[pt[X] * l0[Y] + pt[Y]];
                                            if (seen) ++reads[src];
                                            seen = 1;
                                        }
                                    }
                                }
                    }
        }
    }

    t.energy = t.energy_from(hw, opt.include_leak);
    return t;
}

// ---------------------------------------------------------------------------
// Brute-force optimum

struct ExhaustiveOptions {
    std::uint64_t limit = 1'000'000;
    PeRule pe_rule = PeRule::exact;
    bool include_leak = false;
};

struct ExhaustiveResult {
    Mapping mapping;
    EnergyBreakdown breakdown;
    std::uint64_t space_size = 0;
    std::uint64_t feasible = 0;
};

inline std::uint64_t bypass_combos(const HardwareSpec& hw) noexcept {
    return (hw.sram_bypass_free ? 8u : 1u) * (hw.rf_bypass_free ? 8u : 1u);
}

/// Mappings enumerated before feasibility filtering: chain products times
/// walking-axis pairs times bypass combinations.
inline std::uint64_t exhaustive_space_size(const GemmInstance& g, const HardwareSpec& hw) {
    std::uint64_t n = 9 * bypass_combos(hw);
    for (Axis a : kAxes) n = checked_mul(n, divisor_chains(g.dims[a]).size());
    return n;
}

/// Residency bit patterns allowed by the hardware, ascending.
inline std::vector<std::array<bool, 3>> residency_options(bool free) {
    if (!free) return {{true, true, true}};
    std::vector<std::array<bool, 3>> out;
    for (unsigned bits = 0; bits < 8; ++bits) out.push_back({(bits & 4u) != 0, (bits & 2u) != 0, (bits & 1u) != 0});
    return out;
}

inline ExhaustiveResult exhaustive_optimum(const GemmInstance& g, const HardwareSpec& hw, const ExhaustiveOptions& opt = {}) {
    ExhaustiveResult res;
    res.space_size = exhaustive_space_size(g, hw);
    if (res.space_size > opt.limit)
        throw SearchSpaceError("exhaustive search space has " + std::to_string(res.space_size) + " mappings (limit " +
                                   std::to_string(opt.limit) + ")",
                               res.space_size);

    const std::array<std::vector<Chain>, 3> chains{divisor_chains(g.dims[Axis::x]), divisor_chains(g.dims[Axis::y]),
                                                   divisor_chains(g.dims[Axis::z])};
    std::optional<std::pair<double, std::array<std::uint64_t, 17>>> best;
    Mapping m;
    for (Axis w01 : kAxes)
        for (Axis w12 : kAxes)
            for (const auto& bs : residency_options(hw.sram_bypass_free))
                for (const auto& br : residency_options(hw.rf_bypass_free))
                    for (const Chain& cx : chains[0])
                        for (const Chain& cy : chains[1])
                            for (const Chain& cz : chains[2]) {
                                m.walk_01 = w01;
                                m.walk_12 = w12;
                                m.resident_sram = bs;
                                m.resident_rf = br;
                                set_chain(m, Axis::x, cx);
                                set_chain(m, Axis::y, cy);
                                set_chain(m, Axis::z, cz);
                                if (!is_feasible(m, g, hw, opt.pe_rule)) continue;
                                ++res.feasible;
                                EnergyBreakdown b = detail::evaluate_unchecked(m, g, hw, opt.include_leak);
                                auto key = tie_break_key(m);
                                if (!best || b.e_total_norm < best->first ||
                                    (b.e_total_norm == best->first && key < best->second)) {
                                    best.emplace(b.e_total_norm, key);
                                    res.mapping = m;
                                    res.breakdown = b;
                                }
                            }
    if (!best) throw InfeasibleError("no feasible mapping for GEMM '" + g.label + "'", {"exhaustive"});
    return res;
}

}  // namespace gemmap
