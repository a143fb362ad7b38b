#pragma once

// LLM prefill workloads: the eight GEMM types of a decoder-only model and the
// occurrence-weighted case EDP.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gemmap/core.hpp"

namespace gemmap {

inline constexpr std::array<std::string_view, 8> kPrefillLabels{
    "attn_q_proj", "attn_kv_proj", "attn_score", "attn_context", "attn_output", "mlp_gate_up", "mlp_down", "lm_head"};

struct LlmModelDesc {
    std::string id;
    std::uint64_t num_layers = 1;
    std::uint64_t hidden_size = 1;
    std::uint64_t num_heads = 1;
    std::uint64_t num_kv_heads = 1;
    std::optional<std::uint64_t> head_dim;  // defaults to hidden_size / num_heads
    std::uint64_t intermediate_size = 1;
    std::uint64_t vocab_size = 1;
    std::uint64_t seq_len = 1;

    std::uint64_t resolved_head_dim() const {
        if (head_dim) return *head_dim;
        if (num_heads == 0 || hidden_size % num_heads != 0)
            throw ConfigError("model '" + id + "': hidden_size " + std::to_string(hidden_size) +
                              " is not divisible by num_heads " + std::to_string(num_heads) + " and no head_dim is given");
        return hidden_size / num_heads;
    }

    void check() const {
        const std::pair<const char*, std::uint64_t> fields[] = {
            {"num_layers", num_layers},     {"hidden_size", hidden_size}, {"num_heads", num_heads},
            {"num_kv_heads", num_kv_heads}, {"intermediate_size", intermediate_size}, {"vocab_size", vocab_size},
            {"seq_len", seq_len}};
        for (const auto& [name, v] : fields)
            if (v == 0) throw ConfigError("model '" + id + "': " + name + " must be >= 1");
        if (head_dim && *head_dim == 0) throw ConfigError("model '" + id + "': head_dim must be >= 1");
        if (num_heads % num_kv_heads != 0)
            throw ConfigError("model '" + id + "': num_kv_heads " + std::to_string(num_kv_heads) +
                              " does not divide num_heads " + std::to_string(num_heads));
        (void)resolved_head_dim();
    }
};

/// The eight prefill GEMM types with occurrence weights, in fixed order.
/// X is the token axis, Y the output-feature axis, Z the reduction axis.
inline std::vector<GemmInstance> expand_llm_prefill(const LlmModelDesc& m) {
    m.check();
    const std::uint64_t s = m.seq_len, h = m.hidden_size, hd = m.resolved_head_dim();
    const std::uint64_t q = m.num_heads * hd, kv = m.num_kv_heads * hd;
    const std::uint64_t layers = m.num_layers, per_head = m.num_layers * m.num_heads;
    auto make = [](std::string_view label, std::uint64_t x, std::uint64_t y, std::uint64_t z, std::uint64_t w) {
        GemmInstance g{Extents{{x, y, z}}, w, std::string(label)};
        g.check();
        return g;
    };
    return {
        make("attn_q_proj", s, q, h, layers),
        make("attn_kv_proj", s, 2 * kv, h, layers),
        make("attn_score", s, s, hd, per_head),
        make("attn_context", s, hd, s, per_head),
        make("attn_output", s, h, q, layers),
        make("mlp_gate_up", s, 2 * m.intermediate_size, h, layers),
        make("mlp_down", s, h, m.intermediate_size, layers),
        make("lm_head", s, m.vocab_size, h, 1),
    };
}

struct GemmResult {
    std::string label;
    std::uint64_t weight = 1;
    double energy = 0.0;  // pJ
    double delay = 0.0;   // s
    double edp = 0.0;     // pJ*s
    std::optional<double> normalized_edp;
};

struct CaseResult {
    std::vector<GemmResult> gemms;
    double case_edp = 0.0;  // pJ*s
    std::optional<double> normalized_case_edp;
};

struct GemmOutcome {
    GemmInstance gemm;
    double energy = 0.0;
    double delay = 0.0;
};

/// Occurrence-weighted case EDP. With a reference (matched by label), every
/// GEMM and the case total are also reported relative to it.
inline CaseResult case_edp(const std::vector<GemmOutcome>& results, const CaseResult* reference = nullptr) {
    if (results.empty()) throw ConfigError("case_edp: no GEMM results");
    CaseResult c;
    for (const auto& r : results) {
        GemmResult g{r.gemm.label, r.gemm.weight, r.energy, r.delay, r.energy * r.delay, std::nullopt};
        c.case_edp += static_cast<double>(g.weight) * g.edp;
        c.gemms.push_back(std::move(g));
    }
    if (reference) {
        for (auto& g : c.gemms)
            for (const auto& ref : reference->gemms)
                if (ref.label == g.label) g.normalized_edp = g.edp / ref.edp;
        c.normalized_case_edp = c.case_edp / reference->case_edp;
    }
    return c;
}

}  // namespace gemmap
