#pragma once

// Exact minimization of the closed-form energy over tilings, walking axes
// and residency, with an upper/lower bound certificate.
//
// For fixed walking axes and residency the objective is a sum of per-axis
// terms, each depending only on that axis' divisor chain. The axes are
// coupled only by the PE count and the two capacity constraints. The search
// therefore splits into subproblems (walking axes, residency, PE split per
// axis) and runs a depth-first branch-and-bound over per-axis chain lists
// sorted by energy; a node's bound is its fixed terms plus the best
// remaining term of every free axis.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "gemmap/core.hpp"
#include "gemmap/energy.hpp"
#include "gemmap/oracle.hpp"
#include "gemmap/padding.hpp"

namespace gemmap {

enum class ProofKind : std::uint8_t { exhaustive, branch_and_bound, incomplete };

constexpr std::string_view proof_kind_name(ProofKind k) noexcept {
    switch (k) {
        case ProofKind::exhaustive: return "exhaustive";
        case ProofKind::branch_and_bound: return "branch-and-bound";
        case ProofKind::incomplete: return "incomplete";
    }
    return "?";
}

struct Certificate {
    double upper_bound = 0.0;  // pJ/MAC
    double lower_bound = 0.0;  // pJ/MAC
    double gap = 0.0;          // (UB - LB) / UB
    std::uint64_t nodes_explored = 0;
    std::uint64_t nodes_pruned = 0;
    std::uint64_t configs_enumerated = 0;
    double wall_time = 0.0;  // s
    ProofKind proof_kind = ProofKind::branch_and_bound;
};

struct SolveOptions {
    double time_limit = 0.0;  // s; 0 = none
    PeRule pe_rule = PeRule::exact;
    bool include_leak = false;
    double padding = 0.0;   // slack factor >= 1; 0 = off
    unsigned threads = 0;   // 0 = hardware concurrency
};

struct SolveResult {
    GemmInstance gemm;  // as solved (after padding)
    Mapping mapping;
    EnergyBreakdown breakdown;
    Certificate certificate;
};

struct TimeLimitError : Error {
    using Error::Error;
};

/// A search node: walking axes and residency fixed, optionally the PE split,
/// and chains fixed for some axes.
struct PartialNode {
    Axis walk_01 = Axis::x, walk_12 = Axis::x;
    std::array<bool, 3> resident_sram{true, true, true};
    std::array<bool, 3> resident_rf{true, true, true};
    std::optional<Extents> pe_split;
    std::array<std::optional<Chain>, 3> fixed{};
};

namespace detail {

/// Per-axis energy for one chain under one stage configuration. For the z
/// axis the weights carry the chain's own boundary coefficients.
template <class T = double>
BasicAxisEnergy<T> chain_energy(Axis a, const Chain& c, std::uint64_t extent, Axis w01, Axis w12, bool in_sram,
                                bool in_rf, const HardwareSpec& hw) {
    const BoundaryCoeffs b = a == Axis::z ? boundary_coeffs_z(extent, c, w01, w12) : BoundaryCoeffs{};
    return axis_energy(a, c, extent, w01, w12, in_sram, in_rf, unit_weights<T>(hw, b));
}

/// Relative margin on pruning. Bounds are double sums while incumbents are
/// rounded extended-precision totals; the margin covers the difference.
inline constexpr double kPruneSlack = 1e-12;

inline bool split_allowed(std::uint64_t p, std::uint64_t num_pe, PeRule rule) noexcept {
    return rule == PeRule::exact ? num_pe % p == 0 : p <= num_pe;
}

struct Entry {
    AxisEnergy e;
    double f = 0.0;
    Chain c;
    Wide q = 0;  // extended-precision total
};

/// Sorted chain lists of one axis for one flag variant, keyed by PE split.
struct AxisTable {
    std::map<std::uint64_t, std::vector<Entry>> by_split;
    const std::vector<Entry>* group(std::uint64_t p) const {
        auto it = by_split.find(p);
        return it == by_split.end() ? nullptr : &it->second;
    }
};

// Flags that select an axis' energy variant.
inline unsigned variant_of(Axis a, Axis w01, Axis w12, bool s, bool r) noexcept {
    return (a == w01 ? 8u : 0u) | (a == w12 ? 4u : 0u) | (s ? 2u : 0u) | (r ? 1u : 0u);
}

// Representative walking axes reproducing a variant's equality pattern.
inline std::pair<Axis, Axis> walks_for(Axis a, unsigned v) noexcept {
    const Axis other = a == Axis::x ? Axis::y : Axis::x;
    return {(v & 8u) ? a : other, (v & 4u) ? a : other};
}

class Tables {
public:
    Tables(const GemmInstance& g, const HardwareSpec& hw, PeRule rule) {
        for (Axis a : kAxes) {
            const auto chains = divisor_chains(g.dims[a]);
            for (unsigned v = 0; v < 16; ++v) {
                auto [w01, w12] = walks_for(a, v);
                AxisTable& t = tables_[idx(a)][v];
                for (const Chain& c : chains) {
                    const std::uint64_t p = c.l2 / c.l3;
                    if (!split_allowed(p, hw.num_pe, rule)) continue;
                    const bool s = (v & 2u) != 0, r = (v & 1u) != 0;
                    Entry en{chain_energy(a, c, g.dims[a], w01, w12, s, r, hw), 0.0, c,
                             chain_energy<Wide>(a, c, g.dims[a], w01, w12, s, r, hw).total()};
                    en.f = en.e.total();
                    t.by_split[p].push_back(en);
                }
                for (auto& [p, list] : t.by_split)
                    std::sort(list.begin(), list.end(), [](const Entry& l, const Entry& r) {
                        return l.f < r.f || (l.f == r.f && l.c < r.c);
                    });
            }
        }
    }
    const AxisTable& get(Axis a, unsigned v) const { return tables_[idx(a)][v]; }

private:
    std::array<std::array<AxisTable, 16>, 3> tables_;
};

struct Config {
    Axis w01, w12;
    std::array<bool, 3> rs, rr;
};

inline std::vector<Config> enumerate_configs(const HardwareSpec& hw) {
    std::vector<Config> out;
    for (Axis w01 : kAxes)
        for (Axis w12 : kAxes)
            for (const auto& rs : residency_options(hw.sram_bypass_free))
                for (const auto& rr : residency_options(hw.rf_bypass_free)) out.push_back({w01, w12, rs, rr});
    return out;
}

inline std::vector<Extents> pe_splits(const GemmInstance& g, const HardwareSpec& hw, PeRule rule) {
    std::vector<Extents> out;
    for (std::uint64_t px : divisors(g.dims[Axis::x])) {
        if (!split_allowed(px, hw.num_pe, rule)) continue;
        for (std::uint64_t py : divisors(g.dims[Axis::y])) {
            if (!split_allowed(px * py, hw.num_pe, rule)) continue;
            for (std::uint64_t pz : divisors(g.dims[Axis::z])) {
                const std::uint64_t prod = px * py * pz;
                if (rule == PeRule::exact ? prod == hw.num_pe : prod <= hw.num_pe) out.push_back(Extents{{px, py, pz}});
            }
        }
    }
    return out;
}

using Key = std::array<std::uint64_t, 17>;

struct Incumbent {
    double energy = std::numeric_limits<double>::infinity();
    Key key{};
    Mapping mapping;
    bool has = false;

    bool improved_by(double e, const Key& k) const noexcept { return !has || e < energy || (e == energy && k < key); }
    void offer(double e, const Key& k, const Mapping& m) {
        if (!improved_by(e, k)) return;
        energy = e;
        key = k;
        mapping = m;
        has = true;
    }
    /// True when every completion of a node with this bound is strictly
    /// worse than the incumbent.
    bool prunes(double bound) const noexcept { return has && bound > energy * (1.0 + kPruneSlack); }
};

inline Key config_key(const Config& c) {
    Key k{};
    k[0] = idx(c.w01);
    k[1] = idx(c.w12);
    for (std::size_t i = 0; i < 3; ++i) {
        k[2 + i] = c.rs[i];
        k[5 + i] = c.rr[i];
    }
    return k;
}

inline void put_chain(Key& k, Axis a, const Chain& c) noexcept {
    const std::size_t base = 8 + 3 * idx(a);
    k[base] = c.l1;
    k[base + 1] = c.l2;
    k[base + 2] = c.l3;
}

struct Subproblem {
    std::size_t config = 0;
    Extents split;
    double root_bound = 0.0;
    double leak = 0.0;
    Wide leak_wide = 0;
    std::array<const std::vector<Entry>*, 3> lists{};
};

struct SubResult {
    Incumbent best;
    std::uint64_t explored = 0, pruned = 0;
    bool complete = true;
};

class Searcher {
public:
    Searcher(const HardwareSpec& hw, std::chrono::steady_clock::time_point deadline, bool has_deadline,
             const std::atomic<bool>& stop)
        : hw_(hw), macc_(hw.e_macc), deadline_(deadline), has_deadline_(has_deadline), stop_(stop) {}

    SubResult run(const Config& cfg, const Subproblem& sp, const Incumbent& start) {
        SubResult r;
        r.best = start;
        leak_ = sp.leak;
        const Wide leak_wide = sp.leak_wide;
        const auto& lx = *sp.lists[0];
        const auto& ly = *sp.lists[1];
        const auto& lz = *sp.lists[2];
        const AxisEnergy& my = ly.front().e;
        const AxisEnergy& mz = lz.front().e;
        const std::uint64_t min_l1y = sp.split[Axis::y], min_l1z = sp.split[Axis::z];
        const auto bs = [&](Axis a) -> std::uint64_t { return cfg.rs[idx(a)] ? 1 : 0; };
        const auto br = [&](Axis a) -> std::uint64_t { return cfg.rr[idx(a)] ? 1 : 0; };
        constexpr Axis X = Axis::x, Y = Axis::y, Z = Axis::z;

        Key key = config_key(cfg);
        Mapping m;
        m.walk_01 = cfg.w01;
        m.walk_12 = cfg.w12;
        m.resident_sram = cfg.rs;
        m.resident_rf = cfg.rr;

        for (const Entry& ex : lx) {
            if (out_of_time(r)) return r;
            ++r.explored;
            put_chain(key, X, ex.c);
            const double bx = combine_axes(ex.e, my, mz, macc_, leak_);
            if (r.best.prunes(bx)) {
                ++r.pruned;
                break;
            }
            // Smallest possible usage with y and z at their minimal tiles.
            const std::uint64_t sram_lo = bs(Y) * ex.c.l1 * min_l1z + bs(X) * min_l1y * min_l1z + bs(Z) * ex.c.l1 * min_l1y;
            const std::uint64_t rf_lo = br(Y) * ex.c.l3 + br(X) + br(Z) * ex.c.l3;
            if (sram_lo > hw_.cap_sram || rf_lo > hw_.cap_rf) {
                ++r.pruned;
                continue;
            }
            for (const Entry& ey : ly) {
                if (out_of_time(r)) return r;
                ++r.explored;
                put_chain(key, Y, ey.c);
                const double bxy = combine_axes(ex.e, ey.e, mz, macc_, leak_);
                if (r.best.prunes(bxy)) {
                    ++r.pruned;
                    break;
                }
                const std::uint64_t sram_z = bs(Y) * ex.c.l1 + bs(X) * ey.c.l1;  // coefficient of L1z
                const std::uint64_t sram_fixed = bs(Z) * ex.c.l1 * ey.c.l1;
                const std::uint64_t rf_z = br(Y) * ex.c.l3 + br(X) * ey.c.l3;
                const std::uint64_t rf_fixed = br(Z) * ex.c.l3 * ey.c.l3;
                if (sram_fixed + sram_z * min_l1z > hw_.cap_sram || rf_fixed + rf_z > hw_.cap_rf) {
                    ++r.pruned;
                    continue;
                }
                for (const Entry& ez : lz) {
                    ++r.explored;
                    put_chain(key, Z, ez.c);
                    const double total = combine_axes(ex.e, ey.e, ez.e, macc_, leak_);
                    if (r.best.prunes(total)) {
                        ++r.pruned;
                        break;
                    }
                    if (sram_fixed + sram_z * ez.c.l1 > hw_.cap_sram || rf_fixed + rf_z * ez.c.l3 > hw_.cap_rf) continue;
                    const double exact = rounded_total(ex.q, ey.q, ez.q, macc_, leak_wide);
                    if (!r.best.improved_by(exact, key)) continue;
                    set_chain(m, X, ex.c);
                    set_chain(m, Y, ey.c);
                    set_chain(m, Z, ez.c);
                    r.best.offer(exact, key, m);
                }
            }
        }
        return r;
    }

private:
    bool out_of_time(SubResult& r) {
        if (stop_.load(std::memory_order_relaxed)) {
            r.complete = false;
            return true;
        }
        if (has_deadline_ && (++tick_ & 63u) == 0 && std::chrono::steady_clock::now() > deadline_) {
            r.complete = false;
            return true;
        }
        return false;
    }

    const HardwareSpec& hw_;
    double macc_, leak_ = 0.0;
    std::chrono::steady_clock::time_point deadline_;
    bool has_deadline_;
    const std::atomic<bool>& stop_;
    std::uint64_t tick_ = 0;
};

inline std::vector<std::string> diagnose_infeasible(const GemmInstance& g, const HardwareSpec& hw, PeRule rule,
                                                    const std::vector<Extents>& splits) {
    if (splits.empty()) return {std::string(constraint_name(Constraint::pe_count))};
    bool sram_any = false, rf_any = false;
    for (const Config& c : enumerate_configs(hw))
        for (const Extents& p : splits) {
            // minimal tiles: regfile 1, SRAM equal to the PE split
            const std::uint64_t sram = resident_words(p, c.rs);
            const std::uint64_t rf = resident_words(Extents{{1, 1, 1}}, c.rr);
            sram_any |= sram <= hw.cap_sram;
            rf_any |= rf <= hw.cap_rf;
        }
    (void)g;
    (void)rule;
    std::vector<std::string> out;
    if (!sram_any) out.emplace_back(constraint_name(Constraint::cap_sram));
    if (!rf_any) out.emplace_back(constraint_name(Constraint::cap_rf));
    if (out.empty()) {
        out.emplace_back(constraint_name(Constraint::cap_sram));
        out.emplace_back(constraint_name(Constraint::cap_rf));
    }
    return out;
}

}  // namespace detail

/// Admissible bound on the energy of every feasible completion of `node`:
/// free axes take their best chain, ignoring the capacity constraints and
/// the coupling through the PE count. Computed in extended precision and
/// rounded once, so a fully fixed node reproduces energy_total exactly.
inline double lower_bound(const PartialNode& node, const GemmInstance& g, const HardwareSpec& hw,
                          const SolveOptions& opt = {}) {
    std::array<Wide, 3> parts{};
    for (Axis a : kAxes) {
        const bool s = node.resident_sram[idx(a)], r = node.resident_rf[idx(a)];
        if (const auto& c = node.fixed[idx(a)]) {
            parts[idx(a)] = detail::chain_energy<Wide>(a, *c, g.dims[a], node.walk_01, node.walk_12, s, r, hw).total();
            continue;
        }
        std::optional<Wide> best;
        for (const Chain& c : divisor_chains(g.dims[a])) {
            const std::uint64_t p = c.l2 / c.l3;
            if (node.pe_split ? p != (*node.pe_split)[a] : !detail::split_allowed(p, hw.num_pe, opt.pe_rule)) continue;
            const Wide e = detail::chain_energy<Wide>(a, c, g.dims[a], node.walk_01, node.walk_12, s, r, hw).total();
            if (!best || e < *best) best = e;
        }
        if (!best) return std::numeric_limits<double>::infinity();
        parts[idx(a)] = *best;
    }
    Wide leak = 0;
    if (opt.include_leak) {
        std::uint64_t pes = hw.num_pe;
        if (node.fixed[0] && node.fixed[1] && node.fixed[2]) {
            pes = 1;
            for (const auto& c : node.fixed) pes *= c->l2 / c->l3;
        }
        leak = leak_per_mac<Wide>(hw, pes);
    }
    return rounded_total(parts[0], parts[1], parts[2], hw.e_macc, leak);
}

/// Globally optimal mapping with a UB/LB certificate.
inline SolveResult solve(const GemmInstance& input, const HardwareSpec& hw, const SolveOptions& opt = {}) {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    input.check();
    hw.check();
    GemmInstance g = opt.padding > 0.0 ? pad_workload(input, opt.padding) : input;
    for (Axis a : kAxes)
        if (g.dims[a] > kMaxExtent)
            throw RangeError("GEMM '" + g.label + "': extent " + std::to_string(g.dims[a]) + " exceeds 2^20");


    const auto configs = detail::enumerate_configs(hw);
    const auto splits = detail::pe_splits(g, hw, opt.pe_rule);
    Certificate cert;
    cert.configs_enumerated = configs.size();

    if (splits.empty()) {
        throw InfeasibleError("GEMM '" + g.label + "' (" + std::to_string(g.dims[Axis::x]) + "," +
                                  std::to_string(g.dims[Axis::y]) + "," + std::to_string(g.dims[Axis::z]) +
                                  "): num_pe = " + std::to_string(hw.num_pe) +
                                  " cannot be split across axes dividing the extents (pe-count)",
                              {std::string(constraint_name(Constraint::pe_count))});
    }

    const detail::Tables tables(g, hw, opt.pe_rule);

    std::vector<detail::Subproblem> subs;
    for (std::size_t ci = 0; ci < configs.size(); ++ci) {
        const auto& c = configs[ci];
        for (const Extents& p : splits) {
            detail::Subproblem sp{ci, p, 0.0, 0.0, 0, {}};
            // constant for a fixed PE split
            if (opt.include_leak) {
                const std::uint64_t pes = p[Axis::x] * p[Axis::y] * p[Axis::z];
                sp.leak = leak_per_mac(hw, pes);
                sp.leak_wide = leak_per_mac<Wide>(hw, pes);
            }
            bool ok = true;
            for (Axis a : kAxes) {
                const unsigned v = detail::variant_of(a, c.w01, c.w12, c.rs[idx(a)], c.rr[idx(a)]);
                sp.lists[idx(a)] = tables.get(a, v).group(p[a]);
                if (!sp.lists[idx(a)] || sp.lists[idx(a)]->empty()) ok = false;
            }
            if (!ok) continue;
            sp.root_bound = combine_axes(sp.lists[0]->front().e, sp.lists[1]->front().e, sp.lists[2]->front().e, hw.e_macc, sp.leak);
            subs.push_back(sp);
        }
    }
    std::stable_sort(subs.begin(), subs.end(),
                     [](const detail::Subproblem& a, const detail::Subproblem& b) { return a.root_bound < b.root_bound; });

    detail::Incumbent global;

    // Greedy seed per configuration: the best chain of every axis at the
    // first split whose capacity check passes.
    for (const auto& sp : subs) {
        const auto& c = configs[sp.config];
        Mapping m;
        m.walk_01 = c.w01;
        m.walk_12 = c.w12;
        m.resident_sram = c.rs;
        m.resident_rf = c.rr;
        detail::Key key = detail::config_key(c);
        for (Axis a : kAxes) {
            set_chain(m, a, sp.lists[idx(a)]->front().c);
            detail::put_chain(key, a, sp.lists[idx(a)]->front().c);
        }
        if (!is_feasible(m, g, hw, opt.pe_rule)) continue;
        ++cert.nodes_explored;
        global.offer(rounded_total(sp.lists[0]->front().q, sp.lists[1]->front().q, sp.lists[2]->front().q, hw.e_macc,
                                   sp.leak_wide),
                     key, m);
    }

    const bool has_deadline = opt.time_limit > 0.0;
    const auto deadline = t0 + std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(opt.time_limit));
    std::atomic<bool> stop{false};
    unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());

    // Fixed-size batches: each subproblem in a batch starts from the
    // incumbent as of the batch start, so results and node counts do not
    // depend on the thread count.
    constexpr std::size_t kBatch = 32;
    double open_bound = std::numeric_limits<double>::infinity();
    bool complete = true;
    std::vector<detail::SubResult> results;
    for (std::size_t begin = 0; begin < subs.size(); begin += kBatch) {
        const std::size_t end = std::min(subs.size(), begin + kBatch);
        if (has_deadline && clock::now() > deadline) {
            complete = false;
            for (std::size_t i = begin; i < subs.size(); ++i)
                if (!global.prunes(subs[i].root_bound)) open_bound = std::min(open_bound, subs[i].root_bound);
            break;
        }
        results.assign(end - begin, {});
        std::vector<std::size_t> todo;
        for (std::size_t i = begin; i < end; ++i) {
            if (global.prunes(subs[i].root_bound)) {
                ++cert.nodes_pruned;
                continue;
            }
            todo.push_back(i);
        }
        if (todo.empty()) {
            if (global.prunes(subs[begin].root_bound)) {
                cert.nodes_pruned += subs.size() - end;
                break;
            }
            continue;
        }
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            detail::Searcher s(hw, deadline, has_deadline, stop);
            for (std::size_t j; (j = next.fetch_add(1)) < todo.size();) {
                const std::size_t i = todo[j];
                results[i - begin] = s.run(configs[subs[i].config], subs[i], global);
            }
        };
        const unsigned n = std::min<unsigned>(threads, static_cast<unsigned>(todo.size()));
        if (n <= 1) {
            worker();
        } else {
            std::vector<std::jthread> pool;
            for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
        }
        for (std::size_t i : todo) {
            auto& r = results[i - begin];
            cert.nodes_explored += r.explored;
            cert.nodes_pruned += r.pruned;
            if (r.best.has) global.offer(r.best.energy, r.best.key, r.best.mapping);
            if (!r.complete) {
                complete = false;
                open_bound = std::min(open_bound, subs[i].root_bound);
            }
        }
        if (!complete) {
            for (std::size_t i = end; i < subs.size(); ++i) open_bound = std::min(open_bound, subs[i].root_bound);
            break;
        }
    }

    if (!global.has) {
        if (!complete) throw TimeLimitError("time limit reached before any feasible mapping of '" + g.label + "' was found");
        auto binding = detail::diagnose_infeasible(g, hw, opt.pe_rule, splits);
        std::string what = "no feasible mapping for GEMM '" + g.label + "'; binding constraints:";
        for (const auto& b : binding) what += " " + b;
        throw InfeasibleError(what, std::move(binding));
    }

    SolveResult res;
    res.gemm = g;
    res.mapping = global.mapping;
    res.breakdown = energy_total(res.mapping, g, hw, {opt.include_leak, opt.pe_rule});
    cert.upper_bound = res.breakdown.e_total_norm;
    if (cert.upper_bound != global.energy) throw InvariantError("certificate replay mismatch");
    cert.lower_bound = complete ? cert.upper_bound : std::min(cert.upper_bound, open_bound);
    cert.gap = cert.upper_bound > 0.0 ? (cert.upper_bound - cert.lower_bound) / cert.upper_bound : 0.0;
    cert.proof_kind = complete ? ProofKind::branch_and_bound : ProofKind::incomplete;
    cert.wall_time = std::chrono::duration<double>(clock::now() - t0).count();
    res.certificate = cert;
    return res;
}

}  // namespace gemmap
