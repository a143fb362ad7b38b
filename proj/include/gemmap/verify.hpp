#pragma once

// Cross-checks used by the `verify` command and the acceptance suite:
// closed form vs. traversal oracle over a dimension sweep, and solver vs.
// exhaustive enumeration.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gemmap/oracle.hpp"
#include "gemmap/solver.hpp"

namespace gemmap {

/// Small hardware used when no hardware file is given: 4 PEs, tight buffers, and
/// every energy constant distinct and nonzero so that no term can hide.
inline HardwareSpec toy_hardware() {
    HardwareSpec hw;
    hw.id = "toy_4pe";
    hw.num_pe = 4;
    hw.cap_sram = 512;
    hw.cap_rf = 48;
    hw.dram = {200.0, 210.0};
    hw.sram = {6.0, 6.5};
    hw.rf = {0.5, 0.6};
    hw.e_macc = 0.2;
    hw.e_spatial_reduce = 0.3;
    hw.leak_sram = 0.7;
    hw.leak_rf = 0.01;
    return hw;
}

inline std::vector<std::uint64_t> powers_of_two_upto(std::uint64_t max) {
    std::vector<std::uint64_t> v;
    for (std::uint64_t n = 1; n <= max; n *= 2) v.push_back(n);
    return v;
}

struct SweepStats {
    std::uint64_t gemms = 0;
    std::uint64_t mappings = 0;
    std::uint64_t count_mismatches = 0;
    std::uint64_t energy_mismatches = 0;
    double max_rel_error = 0.0;
    std::vector<std::string> first_failures;

    bool ok() const noexcept { return count_mismatches == 0 && energy_mismatches == 0; }
};

/// Every feasible mapping of every GEMM with dims in `values`^3: all chains,
/// all walking-axis pairs, all residency patterns allowed by `hw`.
inline SweepStats oracle_sweep(const std::vector<std::uint64_t>& values, const HardwareSpec& hw, bool include_leak,
                               double rel_tol = 1e-9) {
    SweepStats st;
    const auto sram_opts = residency_options(hw.sram_bypass_free);
    const auto rf_opts = residency_options(hw.rf_bypass_free);
    for (std::uint64_t X : values)
        for (std::uint64_t Y : values)
            for (std::uint64_t Z : values) {
                const GemmInstance g{Extents{{X, Y, Z}}, 1, "sweep"};
                ++st.gemms;
                const auto cx = divisor_chains(X), cy = divisor_chains(Y), cz = divisor_chains(Z);
                Mapping m;
                for (Axis w01 : kAxes)
                    for (Axis w12 : kAxes)
                        for (const auto& rs : sram_opts)
                            for (const auto& rr : rf_opts)
                                for (const auto& a : cx)
                                    for (const auto& b : cy)
                                        for (const auto& c : cz) {
                                            m.walk_01 = w01;
                                            m.walk_12 = w12;
                                            m.resident_sram = rs;
                                            m.resident_rf = rr;
                                            set_chain(m, Axis::x, a);
                                            set_chain(m, Axis::y, b);
                                            set_chain(m, Axis::z, c);
                                            if (!is_feasible(m, g, hw)) continue;
                                            ++st.mappings;
                                            const auto e = detail::evaluate_unchecked(m, g, hw, include_leak);
                                            OracleOptions oo;
                                            oo.include_leak = include_leak;
                                            const auto t = simulate_traversal(m, g, hw, oo);
                                            const bool counts = t.link01 == e.traffic.n01 &&
                                                                t.link_src3 == e.traffic.n_src3 &&
                                                                t.link_src4 == e.traffic.n_src4;
                                            const double rel = std::abs(t.energy - e.e_total_abs) / e.e_total_abs;
                                            st.max_rel_error = std::max(st.max_rel_error, rel);
                                            const bool energy = rel <= rel_tol;
                                            if (!counts) ++st.count_mismatches;
                                            if (!energy) ++st.energy_mismatches;
                                            if ((!counts || !energy) && st.first_failures.size() < 5)
                                                st.first_failures.push_back(
                                                    "gemm (" + std::to_string(X) + "," + std::to_string(Y) + "," +
                                                    std::to_string(Z) + ") walks " + axis_name(w01) + axis_name(w12) +
                                                    (counts ? "" : " traffic") + (energy ? "" : " energy"));
                                        }
            }
    return st;
}

struct OptimalityCheck {
    GemmInstance gemm;
    double exhaustive = 0.0;
    double solved = 0.0;
    double gap = 0.0;
    bool same_mapping = false;
    bool replay_exact = false;

    bool ok() const noexcept { return exhaustive == solved && gap == 0.0 && same_mapping && replay_exact; }
};

/// Solve `g` and compare against exhaustive enumeration of the same space.
inline OptimalityCheck check_optimality(const GemmInstance& g, const HardwareSpec& hw, bool include_leak = false,
                                        PeRule rule = PeRule::exact, std::uint64_t limit = 1'000'000) {
    OptimalityCheck c;
    c.gemm = g;
    ExhaustiveOptions eo;
    eo.include_leak = include_leak;
    eo.pe_rule = rule;
    eo.limit = limit;
    const auto ex = exhaustive_optimum(g, hw, eo);
    SolveOptions so;
    so.include_leak = include_leak;
    so.pe_rule = rule;
    so.threads = 1;
    const auto s = solve(g, hw, so);
    c.exhaustive = ex.breakdown.e_total_norm;
    c.solved = s.certificate.upper_bound;
    c.gap = s.certificate.gap;
    c.same_mapping = ex.mapping == s.mapping;
    EvalOptions ev;
    ev.include_leak = include_leak;
    ev.pe_rule = rule;
    c.replay_exact = energy_total(s.mapping, g, hw, ev).e_total_norm == s.certificate.upper_bound;
    return c;
}

/// GEMMs with enumerable spaces: every shape with dims in `values`^3 whose
/// exhaustive space does not exceed `limit`.
inline std::vector<GemmInstance> enumerable_instances(const std::vector<std::uint64_t>& values, const HardwareSpec& hw,
                                                      std::uint64_t limit = 1'000'000) {
    std::vector<GemmInstance> out;
    for (std::uint64_t X : values)
        for (std::uint64_t Y : values)
            for (std::uint64_t Z : values) {
                GemmInstance g{Extents{{X, Y, Z}}, 1, "g" + std::to_string(X) + "x" + std::to_string(Y) + "x" +
                                                          std::to_string(Z)};
                if (exhaustive_space_size(g, hw) <= limit) out.push_back(std::move(g));
            }
    return out;
}

}  // namespace gemmap
