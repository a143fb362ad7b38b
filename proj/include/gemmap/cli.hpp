#pragma once

// Command-line front end. Exit codes: 0 success, 1 infeasible, 2 config
// error, 3 verification mismatch, 4 time limit hit with a nonzero gap.

#include <atomic>
#include <exception>
#include <iostream>
#include <optional>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "gemmap/io.hpp"
#include "gemmap/verify.hpp"

namespace gemmap {

enum ExitCode : int { kExitOk = 0, kExitInfeasible = 1, kExitConfig = 2, kExitMismatch = 3, kExitTimeLimit = 4 };

struct CaseSolveOptions {
    SolveOptions solve;
    unsigned workers = 0;  // 0 = hardware concurrency
};

/// Solves every GEMM of a workload, one solve per worker. Results land in
/// workload order whatever the completion order. Rethrows the first failure
/// in workload order.
inline RunRecord solve_case(const Workload& w, const HardwareSpec& hw, const CaseSolveOptions& opt) {
    const std::size_t n = w.gemms.size();
    std::vector<std::optional<SolveResult>> results(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    SolveOptions so = opt.solve;
    so.threads = 1;
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                results[i] = solve(w.gemms[i], hw, so);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned workers =
        std::min<unsigned>(opt.workers ? opt.workers : std::max(1u, std::thread::hardware_concurrency()),
                           static_cast<unsigned>(n));
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
        work();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    RunRecord r;
    r.workload_id = w.id;
    r.hardware = hw;
    r.options = {so.pe_rule, so.include_leak, so.padding, so.time_limit};
    r.hardware_digest = json_digest(hardware_to_json(hw));
    r.workload_digest = json_digest(workload_to_json(w));
    std::vector<GemmOutcome> outcomes;
    for (std::size_t i = 0; i < n; ++i) {
        const SolveResult& s = *results[i];
        GemmRun g{w.gemms[i], s.gemm, s.mapping, s.breakdown, edp(s.breakdown, hw), s.certificate};
        outcomes.push_back({g.gemm, g.breakdown.e_total_abs, g.delay_edp.delay});
        r.gemms.push_back(std::move(g));
    }
    r.case_edp = case_edp(outcomes).case_edp;
    return r;
}

namespace detail {

inline void print_run_summary(const RunRecord& r, std::ostream& out) {
    out << "workload " << r.workload_id << " on " << r.hardware.id << "\n";
    for (const auto& g : r.gemms) {
        const auto& c = g.certificate;
        out << "  " << g.gemm.label << " (" << g.gemm.dims.v[0] << "," << g.gemm.dims.v[1] << "," << g.gemm.dims.v[2]
            << ") x" << g.gemm.weight << ": " << csv_double(g.breakdown.e_total_norm) << " pJ/MAC, edp "
            << csv_double(g.delay_edp.edp) << " pJ*s, gap " << c.gap << ", " << c.nodes_explored << " nodes, "
            << c.wall_time << " s\n";
    }
    out << "case edp " << csv_double(r.case_edp) << " pJ*s\n";
}

inline PeRule pe_rule_of(bool relax) { return relax ? PeRule::at_most : PeRule::exact; }

}  // namespace detail

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Closed-form energy model and exact mapping search for GEMMs on spatial accelerators", "gemmap"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    std::string hw_path, workload_path, mapping_path, out_path, model_path, baseline_path, case_csv_path, layer_csv_path;
    std::vector<std::string> run_paths;
    std::uint64_t seq_len = 0, max_dims = 8;
    double time_limit = 0.0, pad = 0.0;
    bool pe_relax = false, leak = false;
    unsigned threads = 0;

    auto* solve_cmd = app.add_subcommand("solve", "Find the minimum-energy mapping of every GEMM in a workload");
    solve_cmd->add_option("--hw", hw_path, "Hardware description (JSON)")->required();
    solve_cmd->add_option("--workload", workload_path, "Workload or model descriptor (JSON)")->required();
    solve_cmd->add_option("--seq-len", seq_len, "Sequence length for a model descriptor");
    solve_cmd->add_option("--time-limit", time_limit, "Per-GEMM time limit in seconds (0 = none)")
        ->check(CLI::NonNegativeNumber);
    solve_cmd->add_flag("--pe-relax", pe_relax, "Allow fewer than num_pe active PEs");
    solve_cmd->add_option("--pad", pad, "Pad extents within this slack factor (>= 1)");
    solve_cmd->add_flag("--leak", leak, "Include leakage energy");
    solve_cmd->add_option("--out", out_path, "Run record output (JSON)");
    solve_cmd->add_option("--threads", threads, "Concurrent solves (default: machine parallelism)");

    auto* eval_cmd = app.add_subcommand("evaluate", "Closed-form energy of given mappings");
    eval_cmd->add_option("--hw", hw_path)->required();
    eval_cmd->add_option("--workload", workload_path)->required();
    eval_cmd->add_option("--mapping", mapping_path, "Mapping file or run record")->required();
    eval_cmd->add_option("--seq-len", seq_len);
    eval_cmd->add_flag("--pe-relax", pe_relax);
    eval_cmd->add_flag("--leak", leak);

    auto* validate_cmd = app.add_subcommand("validate", "Check config files and, given mappings, their feasibility");
    validate_cmd->add_option("--hw", hw_path)->required();
    validate_cmd->add_option("--workload", workload_path)->required();
    validate_cmd->add_option("--mapping", mapping_path, "Mapping file or run record");
    validate_cmd->add_option("--seq-len", seq_len);
    validate_cmd->add_flag("--pe-relax", pe_relax);

    auto* verify_cmd = app.add_subcommand("verify", "Closed form vs. traversal oracle, and solver vs. exhaustive search");
    verify_cmd->add_option("--max-dims", max_dims, "Largest extent of the power-of-two sweep")->check(CLI::Range(1, 64));
    verify_cmd->add_option("--hw", hw_path, "Hardware description (default: built-in 4-PE toy)");

    auto* expand_cmd = app.add_subcommand("expand", "Emit the prefill GEMMs of a model");
    expand_cmd->add_option("--model", model_path)->required();
    expand_cmd->add_option("--seq-len", seq_len);
    expand_cmd->add_option("--out", out_path, "Workload output (JSON)");

    auto* report_cmd = app.add_subcommand("report", "Normalized-EDP and per-GEMM CSV tables");
    report_cmd->add_option("--runs", run_paths, "Run records")->required();
    report_cmd->add_option("--baseline", baseline_path, "Run record to normalize against")->required();
    report_cmd->add_option("--case-csv", case_csv_path, "Write the case table here instead of stdout");
    report_cmd->add_option("--layer-csv", layer_csv_path, "Write the per-GEMM table here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*solve_cmd) {
            const HardwareSpec hw = load_hardware(hw_path);
            const Workload w = resolve_workload(load_workload(workload_path), seq_len);
            CaseSolveOptions opt;
            opt.solve.time_limit = time_limit;
            opt.solve.pe_rule = detail::pe_rule_of(pe_relax);
            opt.solve.include_leak = leak;
            opt.solve.padding = pad;
            opt.workers = threads;
            const RunRecord r = solve_case(w, hw, opt);
            if (!out_path.empty()) write_json_file(out_path, run_to_json(r));
            else out << run_to_json(r).dump(2) << '\n';
            detail::print_run_summary(r, out_path.empty() ? err : out);
            for (const auto& g : r.gemms)
                if (g.certificate.gap > 0.0) return kExitTimeLimit;
            return kExitOk;
        }

        if (*eval_cmd || *validate_cmd) {
            const HardwareSpec hw = load_hardware(hw_path);
            const Workload w = resolve_workload(load_workload(workload_path), seq_len);
            if (mapping_path.empty()) {
                out << "ok: hardware '" << hw.id << "', workload '" << w.id << "' with " << w.gemms.size()
                    << " GEMMs\n";
                return kExitOk;
            }
            const MappingSet ms = load_mappings(mapping_path);
            const PeRule rule = detail::pe_rule_of(pe_relax);
            bool all_feasible = true;
            json results = json::array();
            for (const auto& g : w.gemms) {
                const Mapping* m = ms.find(g.label);
                if (!m) throw ConfigError(mapping_path + ": no mapping for GEMM '" + g.label + "'");
                const ValidationReport rep = validate(*m, g, hw, rule);
                if (*validate_cmd) {
                    out << g.label << ": " << (rep.feasible() ? "feasible" : "infeasible") << '\n';
                    for (const auto& v : rep.violations) out << "  " << v.describe() << '\n';
                }
                if (!rep.feasible()) {
                    all_feasible = false;
                    if (*eval_cmd) {
                        err << g.label << ": infeasible mapping\n";
                        for (const auto& v : rep.violations) err << "  " << v.describe() << '\n';
                    }
                    continue;
                }
                if (*eval_cmd) {
                    const auto b = detail::evaluate_unchecked(*m, g, hw, leak);
                    const auto d = edp(b, hw);
                    results.push_back({{"label", g.label},
                                       {"weight", g.weight},
                                       {"breakdown", breakdown_to_json(b)},
                                       {"delay_s", d.delay},
                                       {"edp_pj_s", d.edp}});
                }
            }
            if (*eval_cmd && all_feasible) out << results.dump(2) << '\n';
            return all_feasible ? kExitOk : kExitInfeasible;
        }

        if (*verify_cmd) {
            const HardwareSpec hw = hw_path.empty() ? toy_hardware() : load_hardware(hw_path);
            const auto values = powers_of_two_upto(max_dims);
            bool ok = true;
            const SweepStats st = oracle_sweep(values, hw, true);
            out << "oracle sweep: " << st.gemms << " GEMMs, " << st.mappings << " mappings, "
                << st.count_mismatches << " traffic mismatches, " << st.energy_mismatches
                << " energy mismatches, max rel error " << st.max_rel_error << '\n';
            for (const auto& f : st.first_failures) out << "  mismatch: " << f << '\n';
            ok = ok && st.ok();
            std::uint64_t checked = 0, failed = 0, infeasible = 0;
            for (const auto& g : enumerable_instances(values, hw)) {
                try {
                    const auto c = check_optimality(g, hw);
                    ++checked;
                    if (!c.ok()) {
                        ++failed;
                        out << "  optimality mismatch: " << g.label << " exhaustive " << csv_double(c.exhaustive)
                            << " solve " << csv_double(c.solved) << '\n';
                    }
                } catch (const InfeasibleError&) {
                    ++infeasible;
                }
            }
            out << "solver vs exhaustive: " << checked << " instances, " << failed << " mismatches, " << infeasible
                << " infeasible\n";
            ok = ok && failed == 0;
            out << (ok ? "verify: ok" : "verify: FAILED") << '\n';
            return ok ? kExitOk : kExitMismatch;
        }

        if (*expand_cmd) {
            const Workload w = resolve_workload(load_workload(model_path), seq_len);
            const json j = workload_to_json(w);
            if (!out_path.empty()) write_json_file(out_path, j);
            else out << j.dump(2) << '\n';
            return kExitOk;
        }

        if (*report_cmd) {
            const RunRecord base = load_run(baseline_path);
            std::vector<std::pair<std::string, RunRecord>> runs;
            for (const auto& p : run_paths) runs.emplace_back(p, load_run(p));
            const std::string cases = case_csv(runs, base), layers = layer_csv(runs, base);
            auto emit = [&](const std::string& path, const std::string& text) {
                if (path.empty()) {
                    out << text << '\n';
                    return;
                }
                std::ofstream f(path);
                if (!(f << text)) throw ConfigError(path + ": write failed");
            };
            emit(case_csv_path, cases);
            emit(layer_csv_path, layers);
            return kExitOk;
        }
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << '\n';
        err << "binding constraints:";
        for (const auto& b : e.binding) err << ' ' << b;
        err << '\n';
        return kExitInfeasible;
    } catch (const TimeLimitError& e) {
        err << "time limit: " << e.what() << '\n';
        return kExitTimeLimit;
    } catch (const InvariantError& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitMismatch;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}

}  // namespace gemmap
