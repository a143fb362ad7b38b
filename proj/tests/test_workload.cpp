#include <gtest/gtest.h>

#include <map>

#include "gemmap/workload.hpp"

using namespace gemmap;

namespace {

LlmModelDesc toy_model() {
    LlmModelDesc m;
    m.id = "toy";
    m.num_layers = 2;
    m.hidden_size = 64;
    m.num_heads = 4;
    m.num_kv_heads = 2;
    m.intermediate_size = 96;
    m.vocab_size = 100;
    m.seq_len = 8;
    return m;
}

// Walks the prefill graph operator by operator and adds up MACs.
std::uint64_t graph_walk_macs(const LlmModelDesc& m) {
    const std::uint64_t s = m.seq_len, h = m.hidden_size, hd = m.hidden_size / m.num_heads;
    std::uint64_t macs = 0;
    for (std::uint64_t layer = 0; layer < m.num_layers; ++layer) {
        macs += s * h * (m.num_heads * hd);     // query projection
        macs += s * h * (m.num_kv_heads * hd);  // key projection
        macs += s * h * (m.num_kv_heads * hd);  // value projection
        for (std::uint64_t head = 0; head < m.num_heads; ++head) {
            for (std::uint64_t i = 0; i < s; ++i)
                for (std::uint64_t j = 0; j < s; ++j) macs += hd;  // q_i . k_j
            for (std::uint64_t i = 0; i < s; ++i)
                for (std::uint64_t d = 0; d < hd; ++d) macs += s;  // sum_j p_ij v_jd
        }
        macs += s * (m.num_heads * hd) * h;       // output projection
        macs += 2 * s * h * m.intermediate_size;  // gate and up
        macs += s * m.intermediate_size * h;      // down
    }
    macs += s * h * m.vocab_size;  // lm head, once
    return macs;
}

}  // namespace

TEST(Expand, EightLabelsInFixedOrder) {
    const auto gemms = expand_llm_prefill(toy_model());
    ASSERT_EQ(gemms.size(), 8u);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(gemms[i].label, kPrefillLabels[i]);
    const auto again = expand_llm_prefill(toy_model());
    for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_EQ(gemms[i].dims, again[i].dims);
        EXPECT_EQ(gemms[i].weight, again[i].weight);
    }
}

TEST(Expand, SingleLayerSingleHeadWeights) {
    LlmModelDesc m = toy_model();
    m.num_layers = 1;
    m.num_heads = 1;
    m.num_kv_heads = 1;
    for (const auto& g : expand_llm_prefill(m)) EXPECT_EQ(g.weight, 1u) << g.label;
}

TEST(Expand, WeightedMacsMatchGraphWalk) {
    const LlmModelDesc m = toy_model();
    std::uint64_t total = 0;
    for (const auto& g : expand_llm_prefill(m)) total += g.weight * g.volume();
    EXPECT_EQ(total, graph_walk_macs(m));
}

TEST(Expand, ExplicitHeadDim) {
    LlmModelDesc m = toy_model();
    m.head_dim = 32;
    const auto gemms = expand_llm_prefill(m);
    EXPECT_EQ(gemms[0].dims, (Extents{{8, 4 * 32, 64}}));
    EXPECT_EQ(gemms[2].dims, (Extents{{8, 8, 32}}));
    EXPECT_EQ(gemms[3].dims, (Extents{{8, 32, 8}}));
}

TEST(Expand, RejectsBadModels) {
    LlmModelDesc m = toy_model();
    m.num_kv_heads = 3;
    EXPECT_THROW(expand_llm_prefill(m), ConfigError);
    m = toy_model();
    m.hidden_size = 66;
    EXPECT_THROW(expand_llm_prefill(m), ConfigError);
    m = toy_model();
    m.seq_len = 0;
    EXPECT_THROW(expand_llm_prefill(m), ConfigError);
}

TEST(CaseEdp, Examples) {
    GemmInstance g{Extents{{1, 1, 1}}, 1, "a"};
    EXPECT_DOUBLE_EQ(case_edp({{g, 2.0, 3.0}}).case_edp, 6.0);
    GemmInstance a{Extents{{1, 1, 1}}, 3, "a"}, b{Extents{{1, 1, 1}}, 1, "b"};
    const auto c = case_edp({{a, 10.0, 1.0}, {b, 2.0, 1.0}});
    EXPECT_DOUBLE_EQ(c.case_edp, 32.0);
    EXPECT_THROW(case_edp({}), ConfigError);
}

TEST(CaseEdp, SelfNormalizationIsOne) {
    GemmInstance a{Extents{{1, 1, 1}}, 3, "a"}, b{Extents{{1, 1, 1}}, 5, "b"};
    const std::vector<GemmOutcome> r{{a, 1.7, 0.3}, {b, 9.1, 2.2}};
    const auto base = case_edp(r);
    const auto n = case_edp(r, &base);
    EXPECT_EQ(*n.normalized_case_edp, 1.0);
    for (const auto& g : n.gemms) EXPECT_EQ(*g.normalized_edp, 1.0);
}

TEST(CaseEdp, LinearAndHomogeneous) {
    GemmInstance a{Extents{{1, 1, 1}}, 3, "a"}, b{Extents{{1, 1, 1}}, 5, "b"};
    const double base = case_edp({{a, 1.5, 2.0}, {b, 4.0, 0.5}}).case_edp;
    EXPECT_DOUBLE_EQ(case_edp({{a, 3.0, 2.0}, {b, 4.0, 0.5}}).case_edp - base, 3 * 1.5 * 2.0);
    EXPECT_DOUBLE_EQ(case_edp({{a, 6.0, 2.0}, {b, 16.0, 0.5}}).case_edp, 4.0 * base);
}
