#include <gtest/gtest.h>

#include <limits>

#include "gemmap/padding.hpp"
#include "support.hpp"

using namespace gemmap;
using namespace gemmap::test;

namespace {

// Minimum energy over every feasible completion of a node, by enumeration.
double best_completion(const PartialNode& node, const GemmInstance& g, const HardwareSpec& hw) {
    double best = std::numeric_limits<double>::infinity();
    Mapping m;
    m.walk_01 = node.walk_01;
    m.walk_12 = node.walk_12;
    m.resident_sram = node.resident_sram;
    m.resident_rf = node.resident_rf;
    auto options = [&](Axis a) {
        return node.fixed[idx(a)] ? std::vector<Chain>{*node.fixed[idx(a)]} : divisor_chains(g.dims[a]);
    };
    for (const auto& cx : options(Axis::x))
        for (const auto& cy : options(Axis::y))
            for (const auto& cz : options(Axis::z)) {
                set_chain(m, Axis::x, cx);
                set_chain(m, Axis::y, cy);
                set_chain(m, Axis::z, cz);
                if (node.pe_split && (m.pe_split(Axis::x) != (*node.pe_split)[Axis::x] ||
                                      m.pe_split(Axis::y) != (*node.pe_split)[Axis::y] ||
                                      m.pe_split(Axis::z) != (*node.pe_split)[Axis::z]))
                    continue;
                if (is_feasible(m, g, hw)) best = std::min(best, energy_total(m, g, hw).e_total_norm);
            }
    return best;
}

}  // namespace

TEST(Solve, SingleMacBypassesEverything) {
    const HardwareSpec hw = roomy(1);
    const auto r = solve(gemm(1, 1, 1), hw);
    EXPECT_DOUBLE_EQ(r.certificate.upper_bound, 2 * hw.dram.read + hw.dram.write + hw.e_macc);
    EXPECT_EQ(r.certificate.gap, 0.0);
    EXPECT_EQ(r.mapping.resident_sram, (std::array<bool, 3>{false, false, false}));
    EXPECT_EQ(r.mapping.resident_rf, (std::array<bool, 3>{false, false, false}));
}

TEST(Solve, MatchesExhaustiveOnToyHardware) {
    const HardwareSpec hw = toy_hardware();
    for (const auto& g : {gemm(8, 8, 8), gemm(4, 2, 8), gemm(12, 6, 9), gemm(1, 8, 8), gemm(6, 10, 4)}) {
        const auto c = check_optimality(g, hw, false, PeRule::exact, 10'000'000);
        EXPECT_TRUE(c.ok()) << g.dims.v[0] << "x" << g.dims.v[1] << "x" << g.dims.v[2] << " exhaustive "
                            << c.exhaustive << " solve " << c.solved;
    }
}

TEST(Solve, MatchesExhaustiveWithLeakAndRelaxedPes) {
    const HardwareSpec hw = toy_hardware();
    for (const auto& g : {gemm(8, 4, 8), gemm(3, 5, 7), gemm(2, 2, 1)}) {
        EXPECT_TRUE(check_optimality(g, hw, true, PeRule::at_most, 10'000'000).ok());
        EXPECT_TRUE(check_optimality(g, hw, false, PeRule::at_most, 10'000'000).ok());
    }
    EXPECT_TRUE(check_optimality(gemm(8, 8, 4), hw, true, PeRule::exact, 10'000'000).ok());
}

TEST(Solve, ResultPassesValidationAndReplays) {
    const HardwareSpec hw = toy_hardware();
    const auto g = gemm(16, 32, 8);
    const auto r = solve(g, hw);
    EXPECT_TRUE(validate(r.mapping, g, hw).feasible());
    EXPECT_EQ(energy_total(r.mapping, g, hw).e_total_norm, r.certificate.upper_bound);
    EXPECT_EQ(r.certificate.lower_bound, r.certificate.upper_bound);
    EXPECT_EQ(r.certificate.proof_kind, ProofKind::branch_and_bound);
}

TEST(Solve, InfeasiblePeCount) {
    try {
        solve(gemm(1, 1, 1), roomy(256));
        FAIL() << "expected InfeasibleError";
    } catch (const InfeasibleError& e) {
        ASSERT_EQ(e.binding.size(), 1u);
        EXPECT_EQ(e.binding[0], "pe-count");
    }
}

TEST(Solve, InfeasibleCapacityIsDiagnosed) {
    HardwareSpec hw = toy_hardware();
    hw.rf_bypass_free = false;
    hw.cap_rf = 2;
    try {
        solve(gemm(8, 8, 8), hw);
        FAIL() << "expected InfeasibleError";
    } catch (const InfeasibleError& e) {
        EXPECT_FALSE(e.binding.empty());
    }
}

TEST(Solve, DeterministicAcrossThreadCounts) {
    HardwareSpec hw = roomy(16);
    hw.cap_sram = 4096;
    hw.cap_rf = 64;
    const auto g = gemm(64, 128, 96);
    SolveOptions one, many;
    one.threads = 1;
    many.threads = 4;
    const auto a = solve(g, hw, one), b = solve(g, hw, many);
    EXPECT_EQ(a.mapping, b.mapping);
    EXPECT_EQ(a.certificate.upper_bound, b.certificate.upper_bound);
    EXPECT_EQ(a.certificate.nodes_explored, b.certificate.nodes_explored);
    EXPECT_EQ(a.certificate.nodes_pruned, b.certificate.nodes_pruned);
}

TEST(Solve, ScalingConstantsKeepsArgmin) {
    const HardwareSpec hw = toy_hardware();
    const auto g = gemm(16, 8, 32);
    const auto base = solve(g, hw);
    for (double c : {0.5, 3.0, 10.0}) {
        const auto s = solve(g, hw.scaled(c));
        EXPECT_EQ(s.mapping, base.mapping);
        EXPECT_NEAR(s.certificate.upper_bound, c * base.certificate.upper_bound, 1e-12 * c * base.certificate.upper_bound);
    }
}

TEST(Solve, FrozenBypassIsNeverBetter) {
    HardwareSpec free = toy_hardware();
    HardwareSpec frozen = free;
    frozen.sram_bypass_free = frozen.rf_bypass_free = false;
    frozen.cap_rf = 1024;
    free.cap_rf = 1024;
    for (const auto& g : {gemm(8, 8, 8), gemm(4, 16, 2)})
        EXPECT_GE(solve(g, frozen).certificate.upper_bound, solve(g, free).certificate.upper_bound);
}

TEST(Solve, PaddingInflatesAwkwardExtents) {
    HardwareSpec hw = roomy(4);
    SolveOptions o;
    o.padding = 1.15;
    const auto r = solve(gemm(7, 8, 8), hw, o);
    EXPECT_EQ(r.gemm.dims, (Extents{{8, 8, 8}}));
    EXPECT_EQ(r.breakdown.volume, 512u);
}

TEST(Solve, TimeLimitReportsIncompleteCertificate) {
    HardwareSpec hw = roomy(256);
    hw.cap_sram = 1u << 20;
    hw.cap_rf = 512;
    SolveOptions o;
    o.time_limit = 1e-9;
    o.threads = 1;
    try {
        const auto r = solve(gemm(1024, 4096, 2048), hw, o);
        EXPECT_TRUE(r.certificate.proof_kind == ProofKind::incomplete || r.certificate.gap == 0.0);
        EXPECT_LE(r.certificate.lower_bound, r.certificate.upper_bound);
    } catch (const TimeLimitError&) {
        SUCCEED();
    }
}

TEST(Solve, ExtentRange) { EXPECT_THROW(solve(gemm(kMaxExtent * 2, 4, 4), toy_hardware()), RangeError); }

TEST(LowerBound, FullyAssignedNodeIsExact) {
    const HardwareSpec hw = toy_hardware();
    const auto g = gemm(8, 4, 8);
    const auto r = solve(g, hw);
    PartialNode n;
    n.walk_01 = r.mapping.walk_01;
    n.walk_12 = r.mapping.walk_12;
    n.resident_sram = r.mapping.resident_sram;
    n.resident_rf = r.mapping.resident_rf;
    for (Axis a : kAxes) n.fixed[idx(a)] = chain_of(r.mapping, a);
    EXPECT_EQ(lower_bound(n, g, hw), r.certificate.upper_bound);
}

TEST(LowerBound, RootBoundBelowOptimum) {
    const HardwareSpec hw = toy_hardware();
    for (const auto& g : enumerable_instances(powers_of_two_upto(8), hw, 200'000)) {
        if (g.volume() < hw.num_pe) continue;
        double root = std::numeric_limits<double>::infinity();
        for (Axis w01 : kAxes)
            for (Axis w12 : kAxes)
                for (const auto& rs : residency_options(true))
                    for (const auto& rr : residency_options(true)) {
                        PartialNode n;
                        n.walk_01 = w01;
                        n.walk_12 = w12;
                        n.resident_sram = rs;
                        n.resident_rf = rr;
                        root = std::min(root, lower_bound(n, g, hw));
                    }
        EXPECT_LE(root, exhaustive_optimum(g, hw).breakdown.e_total_norm) << g.label;
    }
}

TEST(LowerBound, RelaxationBelowConstrainedOptimum) {
    const HardwareSpec hw = toy_hardware();
    const auto g = gemm(8, 4, 4);
    std::size_t sampled = 0;
    for (Axis w01 : kAxes)
        for (Axis w12 : kAxes)
            for (const auto& rr : residency_options(true)) {
                PartialNode n;
                n.walk_01 = w01;
                n.walk_12 = w12;
                n.resident_rf = rr;
                n.fixed[0] = Chain{8, 4, 2};
                const double lb = lower_bound(n, g, hw);
                const double full = best_completion(n, g, hw);
                EXPECT_LE(lb, full);
                ++sampled;
            }
    EXPECT_EQ(sampled, 72u);
}

TEST(Padding, Examples) {
    EXPECT_EQ(pad_extent(7, 1.15), 8u);
    EXPECT_EQ(pad_extent(7, 1.0), 7u);
    EXPECT_EQ(pad_extent(64, 1.015), 64u);
    EXPECT_EQ(pad_extent(64, 1.05), 66u);
    EXPECT_THROW(pad_extent(7, 0.9), ConfigError);
    const auto p = pad_workload(gemm(7, 13, 64), 1.0);
    EXPECT_EQ(p.dims, (Extents{{7, 13, 64}}));
}
