#include <gtest/gtest.h>

#include "support.hpp"

using namespace gemmap;
using namespace gemmap::test;

namespace {

// Independent count of (a, b, c) in [1..n]^3 with c | b | a | n.
std::size_t brute_force_chain_count(std::uint64_t n) {
    std::size_t count = 0;
    for (std::uint64_t a = 1; a <= n; ++a)
        for (std::uint64_t b = 1; b <= n; ++b)
            for (std::uint64_t c = 1; c <= n; ++c)
                if (n % a == 0 && a % b == 0 && b % c == 0) ++count;
    return count;
}

}  // namespace

TEST(Validate, DivisibilityViolationNamesAxisAndLink) {
    const auto g = gemm(4, 4, 4);
    const auto m = mapping({{2, 2, 2}}, {{3, 2, 2}}, {{1, 1, 1}});
    const auto r = validate(m, g, roomy(6));
    ASSERT_TRUE(r.violates(Constraint::divisibility));
    const auto& v = r.violations.front();
    EXPECT_EQ(v.constraint, Constraint::divisibility);
    EXPECT_NE(v.context.find("axis x"), std::string::npos);
    EXPECT_NE(v.context.find("1->2"), std::string::npos);
    EXPECT_EQ(r.violations.size(), 1u);
}

TEST(Validate, PeCountMismatch) {
    HardwareSpec hw = roomy(256);
    const auto g = gemm(16, 16, 16);
    const auto m = mapping({{16, 16, 16}}, {{8, 16, 1}}, {{1, 1, 1}});
    ASSERT_EQ(m.active_pes(), 128u);
    const auto r = validate(m, g, hw);
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].constraint, Constraint::pe_count);
    EXPECT_EQ(r.violations[0].measured, 128u);
    EXPECT_EQ(r.violations[0].bound, 256u);
    EXPECT_TRUE(validate(m, g, hw, PeRule::at_most).feasible());
}

TEST(Validate, RegfileCapacity) {
    HardwareSpec hw = roomy(1);
    hw.cap_rf = 4;
    const auto g = gemm(8, 8, 8);
    const auto m = mapping({{8, 8, 8}}, {{8, 8, 8}}, {{8, 8, 8}});
    // Three resident projections of an 8x8x8 tile.
    const std::uint64_t expected = 8 * 8 + 8 * 8 + 8 * 8;
    const auto r = validate(m, g, hw);
    ASSERT_TRUE(r.violates(Constraint::cap_rf));
    for (const auto& v : r.violations)
        if (v.constraint == Constraint::cap_rf) {
            EXPECT_EQ(v.measured, expected);
            EXPECT_EQ(v.measured, 192u);
            EXPECT_EQ(v.bound, 4u);
        }
}

TEST(Validate, BypassedProjectionsDoNotOccupyCapacity) {
    HardwareSpec hw = roomy(1);
    hw.cap_rf = 64;
    const auto g = gemm(8, 8, 8);
    const auto m = mapping({{8, 8, 8}}, {{8, 8, 8}}, {{8, 8, 8}}, Axis::x, Axis::x, {true, true, true}, {true, false, false});
    EXPECT_TRUE(validate(m, g, hw).feasible());
}

TEST(Validate, FrozenBypassRejectsNonResident) {
    HardwareSpec hw = roomy(1);
    hw.rf_bypass_free = false;
    const auto g = gemm(2, 2, 2);
    const auto m = mapping({{2, 2, 2}}, {{1, 1, 1}}, {{1, 1, 1}}, Axis::x, Axis::x, {true, true, true}, {false, true, true});
    EXPECT_TRUE(validate(m, g, hw).violates(Constraint::bypass_frozen));
}

TEST(Validate, IsPureAndAgreesWithFastPath) {
    const HardwareSpec hw = toy_hardware();
    for (std::uint64_t X : {1, 2, 4})
        for (std::uint64_t Z : {1, 2, 4}) {
            const auto g = gemm(X, 4, Z);
            for (const auto& cx : divisor_chains(X))
                for (const auto& cz : divisor_chains(Z)) {
                    Mapping m;
                    set_chain(m, Axis::x, cx);
                    set_chain(m, Axis::y, {4, 2, 1});
                    set_chain(m, Axis::z, cz);
                    const auto a = validate(m, g, hw), b = validate(m, g, hw);
                    ASSERT_EQ(a.violations.size(), b.violations.size());
                    EXPECT_EQ(a.feasible(), is_feasible(m, g, hw));
                }
        }
}

TEST(Validate, AxisSwapPreservesFeasibility) {
    const HardwareSpec hw = toy_hardware();
    const auto g = gemm(8, 2, 4), gs = gemm(2, 8, 4);
    auto swap_xy = [](Axis a) { return a == Axis::x ? Axis::y : a == Axis::y ? Axis::x : a; };
    for (const auto& cx : divisor_chains(8))
        for (const auto& cy : divisor_chains(2))
            for (const auto& cz : divisor_chains(4))
                for (Axis w01 : kAxes)
                    for (const auto& rf : residency_options(true)) {
                        Mapping m;
                        set_chain(m, Axis::x, cx);
                        set_chain(m, Axis::y, cy);
                        set_chain(m, Axis::z, cz);
                        m.walk_01 = w01;
                        m.resident_rf = rf;
                        Mapping s = m;
                        set_chain(s, Axis::x, cy);
                        set_chain(s, Axis::y, cx);
                        s.walk_01 = swap_xy(w01);
                        s.resident_rf = {rf[1], rf[0], rf[2]};
                        EXPECT_EQ(is_feasible(m, g, hw), is_feasible(s, gs, hw));
                    }
}

TEST(DivisorChains, SmallCases) {
    ASSERT_EQ(divisor_chains(1).size(), 1u);
    EXPECT_EQ(divisor_chains(1)[0], (Chain{1, 1, 1}));
    const auto four = divisor_chains(4);
    EXPECT_EQ(four.size(), 10u);
    for (const auto& c : four) EXPECT_TRUE(4 % c.l1 == 0 && c.l1 % c.l2 == 0 && c.l2 % c.l3 == 0);
    EXPECT_TRUE(std::is_sorted(four.begin(), four.end()));
    const auto p = divisor_chains(13);
    ASSERT_EQ(p.size(), 4u);
    EXPECT_EQ(p[0], (Chain{1, 1, 1}));
    EXPECT_EQ(p[1], (Chain{13, 1, 1}));
    EXPECT_EQ(p[2], (Chain{13, 13, 1}));
    EXPECT_EQ(p[3], (Chain{13, 13, 13}));
}

TEST(DivisorChains, MatchBruteForceUpTo256) {
    for (std::uint64_t n = 1; n <= 256; ++n) ASSERT_EQ(divisor_chains(n).size(), brute_force_chain_count(n)) << n;
}

TEST(DivisorChains, RangeChecks) {
    EXPECT_THROW(divisor_chains(0), RangeError);
    EXPECT_THROW(divisor_chains(kMaxExtent + 1), RangeError);
    EXPECT_NO_THROW(divisor_chains(kMaxExtent));
}

TEST(Core, TieBreakKeyOrdersWalksFirst) {
    Mapping a, b;
    a.walk_01 = Axis::x;
    b.walk_01 = Axis::y;
    set_chain(a, Axis::x, {8, 8, 8});
    EXPECT_LT(tie_break_key(a), tie_break_key(b));
}

TEST(Core, ParseAxisRejectsUnknown) {
    EXPECT_EQ(parse_axis("z"), Axis::z);
    EXPECT_THROW(parse_axis("w"), ConfigError);
}

TEST(Core, HardwareCheck) {
    HardwareSpec hw = toy_hardware();
    EXPECT_NO_THROW(hw.check());
    hw.num_pe = 0;
    EXPECT_THROW(hw.check(), ConfigError);
    hw = toy_hardware();
    hw.sram.read = -1.0;
    EXPECT_THROW(hw.check(), ConfigError);
}
