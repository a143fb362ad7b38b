#pragma once

// Versioned JSON formats for hardware specs, workloads, model descriptors,
// mappings and run records, plus the CSV report tables.
//
// Readers are strict: unknown keys are errors, and every error names the file
// and the JSON path of the offending field.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "gemmap/energy.hpp"
#include "gemmap/solver.hpp"
#include "gemmap/workload.hpp"

namespace gemmap {

using json = nlohmann::json;

inline constexpr std::string_view kHardwareSchema = "gemmap.hardware/1";
inline constexpr std::string_view kWorkloadSchema = "gemmap.workload/1";
inline constexpr std::string_view kModelSchema = "gemmap.model/1";
inline constexpr std::string_view kMappingSchema = "gemmap.mapping/1";
inline constexpr std::string_view kRunSchema = "gemmap.run/1";

/// 64-bit FNV-1a, used for config digests.
inline std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Digest of a JSON document in canonical form (sorted keys, compact).
inline std::string json_digest(const json& j) {
    std::ostringstream os;
    os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(j.dump());
    return os.str();
}

// ---------------------------------------------------------------------------
// Strict object reader

class JsonObject {
public:
    JsonObject(const json& j, std::string path, std::string file) : j_(j), path_(std::move(path)), file_(std::move(file)) {
        if (!j_.is_object()) fail(path_, "expected an object");
    }

    [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
        throw ConfigError((file_.empty() ? std::string() : file_ + ": ") + path + ": " + msg);
    }

    std::string at(std::string_view key) const { return path_ + "." + std::string(key); }
    bool has(std::string_view key) const { return j_.contains(std::string(key)); }

    const json& raw(std::string_view key) {
        seen_.insert(std::string(key));
        auto it = j_.find(std::string(key));
        if (it == j_.end()) fail(at(key), "missing required field");
        return *it;
    }

    JsonObject object(std::string_view key) { return JsonObject(raw(key), at(key), file_); }

    std::string string(std::string_view key) {
        const json& v = raw(key);
        if (!v.is_string()) fail(at(key), "expected a string");
        return v.get<std::string>();
    }
    std::string string_or(std::string_view key, std::string def) { return has(key) ? string(key) : def; }

    double number(std::string_view key) {
        const json& v = raw(key);
        if (!v.is_number()) fail(at(key), "expected a number");
        return v.get<double>();
    }
    double nonneg(std::string_view key) {
        const double v = number(key);
        if (!(v >= 0.0)) fail(at(key), "must be >= 0, got " + std::to_string(v));
        return v;
    }

    std::uint64_t uint(std::string_view key, std::uint64_t min = 0) {
        const json& v = raw(key);
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
            fail(at(key), "expected a non-negative integer");
        const auto u = v.get<std::uint64_t>();
        if (u < min) fail(at(key), "must be >= " + std::to_string(min) + ", got " + std::to_string(u));
        return u;
    }

    bool boolean(std::string_view key) {
        const json& v = raw(key);
        if (!v.is_boolean()) fail(at(key), "expected true or false");
        return v.get<bool>();
    }

    void expect_schema(std::string_view schema) {
        const std::string s = string("schema");
        if (s != schema) fail(at("schema"), "expected \"" + std::string(schema) + "\", got \"" + s + "\"");
    }

    /// Rejects any key that was not read.
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) fail(at(it.key()), "unknown field");
    }

    const std::string& path() const noexcept { return path_; }
    const std::string& file() const noexcept { return file_; }

private:
    const json& j_;
    std::string path_, file_;
    std::set<std::string> seen_;
};

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open file");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": parse error: " + e.what());
    }
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ConfigError(path + ": cannot open for writing");
    out << j.dump(2) << '\n';
    if (!out) throw ConfigError(path + ": write failed");
}

inline Extents read_dims(const json& v, const std::string& path, const std::string& file, std::uint64_t min = 1) {
    if (!v.is_array() || v.size() != 3) throw ConfigError(file + ": " + path + ": expected [x, y, z]");
    Extents e;
    for (std::size_t i = 0; i < 3; ++i) {
        if (!v[i].is_number_unsigned() || v[i].get<std::uint64_t>() < min)
            throw ConfigError(file + ": " + path + "[" + std::to_string(i) + "]: expected an integer >= " +
                              std::to_string(min));
        e.v[i] = v[i].get<std::uint64_t>();
    }
    return e;
}

inline json dims_json(const Extents& e) { return json::array({e.v[0], e.v[1], e.v[2]}); }

// ---------------------------------------------------------------------------
// Hardware

namespace detail {

inline bool read_bypass(JsonObject& o, std::string_view key) {
    const std::string v = o.string(key);
    if (v == "free") return true;
    if (v == "frozen") return false;
    o.fail(o.at(key), "expected \"free\" or \"frozen\", got \"" + v + "\"");
}

}  // namespace detail

inline HardwareSpec hardware_from_json(const json& j, const std::string& file = {}) {
    JsonObject o(j, "$", file);
    o.expect_schema(kHardwareSchema);
    HardwareSpec hw;
    hw.id = o.string("id");
    (void)o.string_or("notes", "");
    hw.num_pe = o.uint("num_pe", 1);
    const std::uint64_t word_bytes = o.uint("word_bytes", 1);
    hw.cycle_period = o.number("cycle_period_s");
    if (!(hw.cycle_period > 0.0)) o.fail(o.at("cycle_period_s"), "must be > 0");
    hw.e_macc = o.nonneg("macc_pj");
    hw.e_spatial_reduce = o.nonneg("spatial_reduce_pj");

    JsonObject dram = o.object("dram");
    hw.dram = {dram.nonneg("read_pj"), dram.nonneg("write_pj")};
    dram.finish();

    JsonObject sram = o.object("sram");
    const bool kib = sram.has("capacity_kib"), words = sram.has("capacity_words");
    if (kib == words) sram.fail(sram.path(), "give exactly one of capacity_kib or capacity_words");
    if (kib) {
        const std::uint64_t bytes = checked_mul(sram.uint("capacity_kib", 1), 1024);
        if (bytes % word_bytes != 0) sram.fail(sram.at("capacity_kib"), "not a whole number of words");
        hw.cap_sram = bytes / word_bytes;
    } else {
        hw.cap_sram = sram.uint("capacity_words", 1);
    }
    hw.sram = {sram.nonneg("read_pj"), sram.nonneg("write_pj")};
    hw.leak_sram = sram.nonneg("leak_pj_per_cycle");
    hw.sram_bypass_free = detail::read_bypass(sram, "bypass");
    sram.finish();

    JsonObject rf = o.object("regfile");
    hw.cap_rf = rf.uint("capacity_words", 1);
    hw.rf = {rf.nonneg("read_pj"), rf.nonneg("write_pj")};
    hw.leak_rf = rf.nonneg("leak_pj_per_cycle");
    hw.rf_bypass_free = detail::read_bypass(rf, "bypass");
    rf.finish();

    o.finish();
    hw.check();
    return hw;
}

inline json hardware_to_json(const HardwareSpec& hw) {
    auto bypass = [](bool free) { return free ? "free" : "frozen"; };
    return json{
        {"schema", kHardwareSchema},
        {"id", hw.id},
        {"num_pe", hw.num_pe},
        {"word_bytes", 1},
        {"cycle_period_s", hw.cycle_period},
        {"macc_pj", hw.e_macc},
        {"spatial_reduce_pj", hw.e_spatial_reduce},
        {"dram", {{"read_pj", hw.dram.read}, {"write_pj", hw.dram.write}}},
        {"sram",
         {{"capacity_words", hw.cap_sram},
          {"read_pj", hw.sram.read},
          {"write_pj", hw.sram.write},
          {"leak_pj_per_cycle", hw.leak_sram},
          {"bypass", bypass(hw.sram_bypass_free)}}},
        {"regfile",
         {{"capacity_words", hw.cap_rf},
          {"read_pj", hw.rf.read},
          {"write_pj", hw.rf.write},
          {"leak_pj_per_cycle", hw.leak_rf},
          {"bypass", bypass(hw.rf_bypass_free)}}},
    };
}

inline HardwareSpec load_hardware(const std::string& path) { return hardware_from_json(read_json_file(path), path); }

// ---------------------------------------------------------------------------
// Workloads and models

struct Workload {
    std::string id;
    std::vector<GemmInstance> gemms;
};

inline Workload workload_from_json(const json& j, const std::string& file = {}) {
    JsonObject o(j, "$", file);
    o.expect_schema(kWorkloadSchema);
    Workload w;
    w.id = o.string("id");
    (void)o.string_or("notes", "");
    const json& list = o.raw("gemms");
    if (!list.is_array() || list.empty()) o.fail(o.at("gemms"), "expected a non-empty array");
    std::set<std::string> labels;
    for (std::size_t i = 0; i < list.size(); ++i) {
        JsonObject g(list[i], o.at("gemms") + "[" + std::to_string(i) + "]", file);
        GemmInstance inst;
        inst.label = g.string("label");
        if (!labels.insert(inst.label).second) g.fail(g.at("label"), "duplicate label \"" + inst.label + "\"");
        inst.dims = read_dims(g.raw("dims"), g.at("dims"), file);
        inst.weight = g.has("weight") ? g.uint("weight", 1) : 1;
        g.finish();
        try {
            inst.check();
        } catch (const Error& e) {
            g.fail(g.path(), e.what());
        }
        w.gemms.push_back(std::move(inst));
    }
    o.finish();
    return w;
}

inline json workload_to_json(const Workload& w) {
    json gemms = json::array();
    for (const auto& g : w.gemms) gemms.push_back({{"label", g.label}, {"dims", dims_json(g.dims)}, {"weight", g.weight}});
    return {{"schema", kWorkloadSchema}, {"id", w.id}, {"gemms", std::move(gemms)}};
}

inline LlmModelDesc model_from_json(const json& j, const std::string& file = {}) {
    JsonObject o(j, "$", file);
    o.expect_schema(kModelSchema);
    LlmModelDesc m;
    m.id = o.string("id");
    (void)o.string_or("notes", "");
    m.num_layers = o.uint("num_layers", 1);
    m.hidden_size = o.uint("hidden_size", 1);
    m.num_heads = o.uint("num_heads", 1);
    m.num_kv_heads = o.uint("num_kv_heads", 1);
    if (o.has("head_dim")) m.head_dim = o.uint("head_dim", 1);
    m.intermediate_size = o.uint("intermediate_size", 1);
    m.vocab_size = o.uint("vocab_size", 1);
    m.seq_len = o.has("seq_len") ? o.uint("seq_len", 1) : 0;
    o.finish();
    return m;
}

/// A workload file holds either an explicit GEMM list or a model descriptor.
using WorkloadSource = std::variant<Workload, LlmModelDesc>;

inline WorkloadSource load_workload(const std::string& path) {
    const json j = read_json_file(path);
    if (!j.is_object() || !j.contains("schema") || !j["schema"].is_string())
        throw ConfigError(path + ": $.schema: missing required field");
    const auto schema = j["schema"].get<std::string>();
    if (schema == kWorkloadSchema) return workload_from_json(j, path);
    if (schema == kModelSchema) return model_from_json(j, path);
    throw ConfigError(path + ": $.schema: expected \"" + std::string(kWorkloadSchema) + "\" or \"" +
                      std::string(kModelSchema) + "\", got \"" + schema + "\"");
}

/// The GEMM list of a workload source. A model needs a sequence length, from
/// `seq_len` (if nonzero) or the descriptor itself.
inline Workload resolve_workload(const WorkloadSource& src, std::uint64_t seq_len = 0) {
    if (const auto* w = std::get_if<Workload>(&src)) return *w;
    LlmModelDesc m = std::get<LlmModelDesc>(src);
    if (seq_len) m.seq_len = seq_len;
    if (m.seq_len == 0) throw ConfigError("model '" + m.id + "': no sequence length (use --seq-len)");
    return {m.id + "@seq" + std::to_string(m.seq_len), expand_llm_prefill(m)};
}

// ---------------------------------------------------------------------------
// Mappings

inline json mapping_to_json(const Mapping& m) {
    auto bits = [](const std::array<bool, 3>& b) { return json::array({b[0], b[1], b[2]}); };
    return {
        {"tiles", {{"sram", dims_json(m.sram())}, {"array", dims_json(m.array())}, {"regfile", dims_json(m.regfile())}}},
        {"walk", {{"dram_sram", std::string(1, axis_name(m.walk_01))}, {"sram_array", std::string(1, axis_name(m.walk_12))}}},
        {"resident", {{"sram", bits(m.resident_sram)}, {"regfile", bits(m.resident_rf)}}},
    };
}

inline Mapping mapping_from_json(const json& j, const std::string& path, const std::string& file) {
    JsonObject o(j, path, file);
    Mapping m;
    JsonObject tiles = o.object("tiles");
    m.tile(TileLevel::sram) = read_dims(tiles.raw("sram"), tiles.at("sram"), file);
    m.tile(TileLevel::array) = read_dims(tiles.raw("array"), tiles.at("array"), file);
    m.tile(TileLevel::regfile) = read_dims(tiles.raw("regfile"), tiles.at("regfile"), file);
    tiles.finish();
    JsonObject walk = o.object("walk");
    auto axis = [&](std::string_view key) {
        try {
            return parse_axis(walk.string(key));
        } catch (const ConfigError& e) {
            walk.fail(walk.at(key), e.what());
        }
    };
    m.walk_01 = axis("dram_sram");
    m.walk_12 = axis("sram_array");
    walk.finish();
    JsonObject res = o.object("resident");
    auto bits = [&](std::string_view key) {
        const json& v = res.raw(key);
        if (!v.is_array() || v.size() != 3 || !v[0].is_boolean() || !v[1].is_boolean() || !v[2].is_boolean())
            res.fail(res.at(key), "expected [bool, bool, bool]");
        return std::array<bool, 3>{v[0].get<bool>(), v[1].get<bool>(), v[2].get<bool>()};
    };
    m.resident_sram = bits("sram");
    m.resident_rf = bits("regfile");
    res.finish();
    o.finish();
    return m;
}

/// A mapping file: one mapping per GEMM label.
struct MappingSet {
    std::vector<std::pair<std::string, Mapping>> entries;

    const Mapping* find(const std::string& label) const {
        for (const auto& [l, m] : entries)
            if (l == label) return &m;
        return nullptr;
    }
};

inline json mapping_set_to_json(const MappingSet& s) {
    json list = json::array();
    for (const auto& [label, m] : s.entries) {
        json e = mapping_to_json(m);
        e["label"] = label;
        list.push_back(std::move(e));
    }
    return {{"schema", kMappingSchema}, {"mappings", std::move(list)}};
}

// ---------------------------------------------------------------------------
// Run records

struct GemmRun {
    GemmInstance gemm;    // as given
    GemmInstance solved;  // after padding
    Mapping mapping;
    EnergyBreakdown breakdown;
    DelayEdp delay_edp;
    Certificate certificate;
};

struct RunOptionsRecord {
    PeRule pe_rule = PeRule::exact;
    bool include_leak = false;
    double padding = 0.0;
    double time_limit = 0.0;
};

struct RunRecord {
    std::string workload_id;
    HardwareSpec hardware;
    RunOptionsRecord options;
    std::vector<GemmRun> gemms;
    double case_edp = 0.0;
    std::string tool_version{kToolVersion};
    std::string hardware_digest, workload_digest;
};

inline json breakdown_to_json(const EnergyBreakdown& b) {
    json per_axis = json::object();
    for (Axis a : kAxes) {
        const auto& e = b.per_axis[idx(a)];
        per_axis[std::string(1, axis_name(a))] = {{"src1", e.src1}, {"src3", e.src3}, {"src4", e.src4}};
    }
    auto counts = [](const AxisCounts& c) { return json::array({c[0], c[1], c[2]}); };
    return {
        {"e_src1_pj_per_mac", b.e_src1},
        {"e_src3_pj_per_mac", b.e_src3},
        {"e_src4_pj_per_mac", b.e_src4},
        {"e_macc_pj_per_mac", b.e_macc_term},
        {"e_leak_pj_per_mac", b.e_leak_term},
        {"e_total_pj_per_mac", b.e_total_norm},
        {"e_total_pj", b.e_total_abs},
        {"per_axis_pj_per_mac", std::move(per_axis)},
        {"traffic_words", {{"link01", counts(b.traffic.n01)}, {"src3", counts(b.traffic.n_src3)}, {"src4", counts(b.traffic.n_src4)}}},
        {"boundary",
         {{"l_tilde", json::array({b.coeffs.l_tilde_src1, b.coeffs.l_tilde_src3, b.coeffs.l_tilde_src4})},
          {"rho", json::array({b.coeffs.rho_src1, b.coeffs.rho_src3, b.coeffs.rho_src4})}}},
        {"volume", b.volume},
        {"active_pes", b.active_pes},
        {"leak_included", b.leak_included},
    };
}

inline json certificate_to_json(const Certificate& c) {
    return {
        {"upper_bound_pj_per_mac", c.upper_bound},
        {"lower_bound_pj_per_mac", c.lower_bound},
        {"gap", c.gap},
        {"nodes_explored", c.nodes_explored},
        {"nodes_pruned", c.nodes_pruned},
        {"configs_enumerated", c.configs_enumerated},
        {"wall_time_s", c.wall_time},
        {"proof_kind", proof_kind_name(c.proof_kind)},
    };
}

inline Certificate certificate_from_json(const json& j, const std::string& path, const std::string& file) {
    JsonObject o(j, path, file);
    Certificate c;
    c.upper_bound = o.number("upper_bound_pj_per_mac");
    c.lower_bound = o.number("lower_bound_pj_per_mac");
    c.gap = o.number("gap");
    c.nodes_explored = o.uint("nodes_explored");
    c.nodes_pruned = o.uint("nodes_pruned");
    c.configs_enumerated = o.uint("configs_enumerated");
    c.wall_time = o.number("wall_time_s");
    const std::string kind = o.string("proof_kind");
    if (kind == proof_kind_name(ProofKind::exhaustive)) c.proof_kind = ProofKind::exhaustive;
    else if (kind == proof_kind_name(ProofKind::branch_and_bound)) c.proof_kind = ProofKind::branch_and_bound;
    else if (kind == proof_kind_name(ProofKind::incomplete)) c.proof_kind = ProofKind::incomplete;
    else o.fail(o.at("proof_kind"), "unknown proof kind \"" + kind + "\"");
    o.finish();
    return c;
}

inline json options_to_json(const RunOptionsRecord& o) {
    return {{"pe_rule", o.pe_rule == PeRule::exact ? "exact" : "at-most"},
            {"include_leak", o.include_leak},
            {"padding", o.padding},
            {"time_limit_s", o.time_limit}};
}

inline json run_to_json(const RunRecord& r) {
    json gemms = json::array();
    for (const auto& g : r.gemms) {
        gemms.push_back({
            {"label", g.gemm.label},
            {"weight", g.gemm.weight},
            {"dims", dims_json(g.gemm.dims)},
            {"solved_dims", dims_json(g.solved.dims)},
            {"mapping", mapping_to_json(g.mapping)},
            {"breakdown", breakdown_to_json(g.breakdown)},
            {"delay_s", g.delay_edp.delay},
            {"edp_pj_s", g.delay_edp.edp},
            {"certificate", certificate_to_json(g.certificate)},
        });
    }
    return {
        {"schema", kRunSchema},
        {"tool_version", r.tool_version},
        {"workload_id", r.workload_id},
        {"hardware_id", r.hardware.id},
        {"digests", {{"hardware", r.hardware_digest}, {"workload", r.workload_digest}}},
        {"hardware", hardware_to_json(r.hardware)},
        {"options", options_to_json(r.options)},
        {"gemms", std::move(gemms)},
        {"case_edp_pj_s", r.case_edp},
    };
}

/// Loads a run record. Mappings are re-evaluated; the stored breakdown is
/// kept only as the recorded energy and must match the re-evaluation.
inline RunRecord run_from_json(const json& j, const std::string& file = {}) {
    JsonObject o(j, "$", file);
    o.expect_schema(kRunSchema);
    RunRecord r;
    r.tool_version = o.string("tool_version");
    r.workload_id = o.string("workload_id");
    const std::string hw_id = o.string("hardware_id");
    JsonObject dig = o.object("digests");
    r.hardware_digest = dig.string("hardware");
    r.workload_digest = dig.string("workload");
    dig.finish();
    r.hardware = hardware_from_json(o.raw("hardware"), file);
    if (r.hardware.id != hw_id) o.fail(o.at("hardware_id"), "does not match $.hardware.id");
    JsonObject opt = o.object("options");
    const std::string rule = opt.string("pe_rule");
    if (rule == "exact") r.options.pe_rule = PeRule::exact;
    else if (rule == "at-most") r.options.pe_rule = PeRule::at_most;
    else opt.fail(opt.at("pe_rule"), "expected \"exact\" or \"at-most\"");
    r.options.include_leak = opt.boolean("include_leak");
    r.options.padding = opt.number("padding");
    r.options.time_limit = opt.number("time_limit_s");
    opt.finish();

    const json& list = o.raw("gemms");
    if (!list.is_array()) o.fail(o.at("gemms"), "expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
        JsonObject g(list[i], o.at("gemms") + "[" + std::to_string(i) + "]", file);
        GemmRun run;
        run.gemm.label = g.string("label");
        run.gemm.weight = g.uint("weight", 1);
        run.gemm.dims = read_dims(g.raw("dims"), g.at("dims"), file);
        run.solved = run.gemm;
        run.solved.dims = read_dims(g.raw("solved_dims"), g.at("solved_dims"), file);
        run.mapping = mapping_from_json(g.raw("mapping"), g.at("mapping"), file);
        JsonObject b(g.raw("breakdown"), g.at("breakdown"), file);
        const double recorded = b.number("e_total_pj_per_mac");
        (void)b;  // the rest of the breakdown is derived and rebuilt below
        run.delay_edp.delay = g.number("delay_s");
        run.delay_edp.edp = g.number("edp_pj_s");
        run.certificate = certificate_from_json(g.raw("certificate"), g.at("certificate"), file);
        g.finish();
        EvalOptions ev;
        ev.include_leak = r.options.include_leak;
        ev.pe_rule = r.options.pe_rule;
        try {
            run.breakdown = energy_total(run.mapping, run.solved, r.hardware, ev);
        } catch (const ValidationError& e) {
            g.fail(g.at("mapping"), std::string("infeasible: ") + e.what());
        }
        if (run.breakdown.e_total_norm != recorded)
            g.fail(g.at("breakdown"), "recorded energy does not match re-evaluation of the mapping");
        r.gemms.push_back(std::move(run));
    }
    r.case_edp = o.number("case_edp_pj_s");
    o.finish();
    return r;
}

inline RunRecord load_run(const std::string& path) { return run_from_json(read_json_file(path), path); }

/// Mapping file or run record; both carry per-label mappings.
inline MappingSet load_mappings(const std::string& path) {
    const json j = read_json_file(path);
    if (!j.is_object() || !j.contains("schema") || !j["schema"].is_string())
        throw ConfigError(path + ": $.schema: missing required field");
    const auto schema = j["schema"].get<std::string>();
    MappingSet s;
    if (schema == kRunSchema) {
        for (const auto& g : run_from_json(j, path).gemms) s.entries.emplace_back(g.gemm.label, g.mapping);
        return s;
    }
    JsonObject o(j, "$", path);
    o.expect_schema(kMappingSchema);
    const json& list = o.raw("mappings");
    if (!list.is_array() || list.empty()) o.fail(o.at("mappings"), "expected a non-empty array");
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string p = o.at("mappings") + "[" + std::to_string(i) + "]";
        if (!list[i].is_object() || !list[i].contains("label") || !list[i]["label"].is_string())
            throw ConfigError(path + ": " + p + ".label: missing required field");
        json body = list[i];
        const std::string label = body["label"].get<std::string>();
        body.erase("label");
        s.entries.emplace_back(label, mapping_from_json(body, p, path));
    }
    o.finish();
    return s;
}

// ---------------------------------------------------------------------------
// CSV report tables

inline std::string csv_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

/// One row per run: case EDP and case EDP relative to the baseline.
inline std::string case_csv(const std::vector<std::pair<std::string, RunRecord>>& runs, const RunRecord& baseline) {
    std::ostringstream os;
    os << "run,workload,hardware,case_edp_pj_s,normalized_case_edp\n";
    for (const auto& [name, r] : runs)
        os << name << ',' << r.workload_id << ',' << r.hardware.id << ',' << csv_double(r.case_edp) << ','
           << csv_double(r.case_edp / baseline.case_edp) << '\n';
    return os.str();
}

/// One row per (run, GEMM): weight, energy terms, delay, EDP and EDP relative
/// to the baseline GEMM with the same label.
inline std::string layer_csv(const std::vector<std::pair<std::string, RunRecord>>& runs, const RunRecord& baseline) {
    std::ostringstream os;
    os << "run,label,weight,x,y,z,e_src1_pj_per_mac,e_src3_pj_per_mac,e_src4_pj_per_mac,e_macc_pj_per_mac,"
          "e_leak_pj_per_mac,e_total_pj,delay_s,edp_pj_s,weighted_edp_pj_s,normalized_edp\n";
    for (const auto& [name, r] : runs)
        for (const auto& g : r.gemms) {
            const auto& b = g.breakdown;
            std::string norm;
            for (const auto& ref : baseline.gemms)
                if (ref.gemm.label == g.gemm.label) norm = csv_double(g.delay_edp.edp / ref.delay_edp.edp);
            os << name << ',' << g.gemm.label << ',' << g.gemm.weight << ',' << g.gemm.dims.v[0] << ','
               << g.gemm.dims.v[1] << ',' << g.gemm.dims.v[2] << ',' << csv_double(b.e_src1) << ','
               << csv_double(b.e_src3) << ',' << csv_double(b.e_src4) << ',' << csv_double(b.e_macc_term) << ','
               << csv_double(b.e_leak_term) << ',' << csv_double(b.e_total_abs) << ','
               << csv_double(g.delay_edp.delay) << ',' << csv_double(g.delay_edp.edp) << ','
               << csv_double(static_cast<double>(g.gemm.weight) * g.delay_edp.edp) << ',' << norm << '\n';
        }
    return os.str();
}

}  // namespace gemmap
