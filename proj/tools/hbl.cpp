// hbl: batch front-end for the blowup laboratory. Subcommands cover the
// closed-form profile, the radial spectra, the eigenvalue-count bound, the
// c-scan, the time evolutions and a deterministic aggregation report. Every
// run writes a manifest (even on failure); data files are byte-reproducible.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hbl/evolution.hpp"
#include "hbl/ggmt.hpp"
#include "hbl/io.hpp"
#include "hbl/model.hpp"
#include "hbl/parallel.hpp"
#include "hbl/spectral.hpp"

namespace fs = std::filesystem;
using namespace hbl;

namespace {

struct RunContext {
    fs::path out;
    Manifest manifest;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    fs::path file(const std::string& name) {
        manifest.add_output(name);
        return out / name;
    }
    void finish() {
        const long ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
        write_json(out / "manifest.json", manifest.to_json(ms));
    }
};

int exit_code_for(const Error& e) {
    const std::string& tag = e.tag();
    if (tag == "MethodDisagreement") return 3;
    if (tag == "BlowupDetected") return 4;
    if (tag == "NoSignChange") return 5;
    return 2;
}

/// Cross-check the two eigenvalue routes; a mismatch is a hard error.
void ensure_dual_agreement(const RadialOperatorSpec& spec, const Spectrum& matrix,
                           const Spectrum& shooting) {
    for (std::size_t j = 0; j < matrix.eigenvalues.size(); ++j) {
        const double tol = 10.0 * (matrix.errors[j] + shooting.errors[j]) + 1e-6;
        if (std::abs(matrix.eigenvalues[j] - shooting.eigenvalues[j]) > tol) {
            throw MethodDisagreement(
                sturm_count_below(discretize(spec, matrix.grid), -kMarginalBand),
                shoot_count_nodes(spec, -kMarginalBand, matrix.grid),
                matrix.eigenvalues[j],
                "matrix and shooting eigenvalues diverge at index " + std::to_string(j));
        }
    }
}

std::function<double(double)> parse_perturbation(const std::string& spec,
                                                 const ModelParams& mp, int ell,
                                                 const SimGrid& grid) {
    if (spec == "none") return [](double) { return 0.0; };
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (true) {
        const auto next = spec.find(':', pos);
        parts.push_back(spec.substr(pos, next - pos));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    try {
        if (parts[0] == "gauss" && parts.size() == 2) {
            const double amp = std::stod(parts[1]);
            return [amp](double r) { return amp * std::exp(-r * r); };
        }
        if (parts[0] == "bump" && parts.size() == 4) {
            const double amp = std::stod(parts[1]);
            const double center = std::stod(parts[2]);
            const double width = std::stod(parts[3]);
            return [amp, center, width](double r) {
                const double z = (r - center) / width;
                return amp * std::exp(-z * z);
            };
        }
        if (parts[0] == "eig" && parts.size() == 2) {
            const int k = std::stoi(parts[1]);
            Column seed = eigenmode_seed(mp, ell, k, grid);
            const double h = grid.h();
            return [seed = std::move(seed), h](double r) { return interp_cubic(seed, h, r); };
        }
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        throw RangeError("cannot parse perturbation spec '" + spec + "'");
    }
    throw RangeError("unknown perturbation spec '" + spec +
                     "' (use none | gauss:<amp> | eig:<k> | bump:<amp>:<center>:<width>)");
}

// ---------------------------------------------------------------- profile

struct ProfileArgs {
    int d = 3, p = 3, n = 1000;
    double c = 0.3, r_max = 10.0;
};

int cmd_profile(RunContext& ctx, const ProfileArgs& a) {
    const auto mp = ModelParams::validate(a.d, a.p, a.c);
    ctx.manifest.resolved = {{"d", a.d}, {"p", a.p}, {"c", a.c},
                             {"r_max", a.r_max}, {"n", a.n},
                             {"model", model_params_json(mp)}};
    if (a.n < 2 || !(a.r_max > 0.0)) throw RangeError("profile needs n >= 2 and r_max > 0");

    CsvWriter csv("r,phi,V,g");
    for (int i = 0; i < a.n; ++i) {
        const double r = a.r_max * i / (a.n - 1);
        csv.row({r, phi(mp, r), potential_v(mp, r), symmetry_g(mp, r)});
    }
    csv.save(ctx.file("profile.csv"));
    return 0;
}

// ---------------------------------------------------------------- spectrum

struct SpectrumArgs {
    int p = 3, k = 4, n = 1599, levels = 2;
    double c = 0.3, r_max = 16.0;
    bool limit = false;
    std::vector<int> ells{0};
};

int cmd_spectrum(RunContext& ctx, const SpectrumArgs& a) {
    const Grid grid = Grid::checked(a.r_max, a.n);
    ctx.manifest.resolved = {{"p", a.p},         {"c", a.c},   {"ells", a.ells},
                             {"k", a.k},         {"limit", a.limit},
                             {"r_max", a.r_max}, {"n", a.n},   {"levels", a.levels}};
    std::optional<ModelParams> mp;
    if (!a.limit) {
        mp = ModelParams::validate(3, a.p, a.c);
        ctx.manifest.resolved["model"] = model_params_json(*mp);
    }
    ctx.manifest.scheme = {{"grid", {{"n", grid.n}, {"r_max", grid.r_max}}},
                           {"richardson_levels", a.levels},
                           {"bisection_rel_tol", 1e-12}};

    CsvWriter csv("ell,c,index,lambda_B,lambda_L,error");
    for (int ell : a.ells) {
        const auto spec = a.limit ? RadialOperatorSpec::make_q_ell_limit(ell)
                                  : RadialOperatorSpec::make_q_ell(*mp, ell);
        const Spectrum sm = eigen_lowest(spec, grid, a.k, a.levels);
        const Spectrum sh = eigen_lowest_shooting(spec, grid, a.k);
        ensure_dual_agreement(spec, sm, sh);
        write_json(ctx.file("spectrum_l" + std::to_string(ell) + ".json"),
                   spectrum_json(sm, sh));
        for (int j = 0; j < a.k; ++j) {
            const auto idx = static_cast<std::size_t>(j);
            csv.row({static_cast<double>(ell), a.limit ? 0.0 : a.c,
                     static_cast<double>(j), sm.eigenvalues[idx], -sm.eigenvalues[idx],
                     sm.errors[idx]});
        }
    }
    csv.save(ctx.file("spectrum.csv"));
    return 0;
}

// ---------------------------------------------------------------- ggmt

struct GgmtArgs {
    double c = 0.09, delta = 1.0, kappa = 1.5;
    std::string convention = "both";
    bool optimize = false;
    double delta_lo = 0.5, delta_hi = 2.0, delta_step = 0.1;
    double kappa_lo = 1.5, kappa_hi = 3.0, kappa_step = 0.1;
};

int cmd_ggmt(RunContext& ctx, const GgmtArgs& a) {
    ctx.manifest.resolved = {{"c", a.c},         {"delta", a.delta},
                             {"kappa", a.kappa}, {"convention", a.convention},
                             {"optimize", a.optimize}};
    ctx.manifest.scheme = {{"quad_rel_tol", 1e-10},
                           {"quad_abs_floor", 1e-14},
                           {"scan_samples", 10000},
                           {"root_tol", 1e-12}};
    std::vector<PrefactorConvention> convs;
    if (a.convention == "both")
        convs = {PrefactorConvention::Theorem4AlphaPlus1,
                 PrefactorConvention::Appendix4DeltaPlus1};
    else
        convs = {parse_convention(a.convention)};

    json results = json::array();
    CsvWriter csv("c,delta,kappa,convention,G");
    for (auto conv : convs) {
        const GgmtResult r = appendix_G(a.c, a.delta, a.kappa, conv);
        results.push_back(ggmt_json(a.c, a.delta, a.kappa, r));
        csv.raw_row(fmt_csv(a.c) + "," + fmt_csv(a.delta) + "," + fmt_csv(a.kappa) + "," +
                    to_string(conv) + "," + fmt_csv(r.G));
    }
    json out{{"schema", kSchemaVersion}, {"results", results}};

    if (a.optimize) {
        std::vector<double> dg, kg;
        for (double d = a.delta_lo; d <= a.delta_hi + 1e-12; d += a.delta_step)
            dg.push_back(d);
        for (double k = a.kappa_lo; k <= a.kappa_hi + 1e-12; k += a.kappa_step)
            kg.push_back(k);
        CsvWriter scan_csv("c,delta,kappa,convention,G");
        json best = json::array();
        for (auto conv : convs) {
            // grid cells evaluated concurrently, merged in index order
            std::vector<GgmtResult> cell(dg.size() * kg.size());
            parallel_for_index(cell.size(), [&](std::size_t idx) {
                cell[idx] = appendix_G(a.c, dg[idx / kg.size()], kg[idx % kg.size()], conv);
            });
            for (std::size_t idx = 0; idx < cell.size(); ++idx)
                scan_csv.raw_row(fmt_csv(a.c) + "," + fmt_csv(dg[idx / kg.size()]) + "," +
                                 fmt_csv(kg[idx % kg.size()]) + "," + to_string(conv) +
                                 "," + fmt_csv(cell[idx].G));
            const OptimumG opt = optimize_G(a.c, dg, kg, conv);
            best.push_back(ggmt_json(a.c, opt.delta, opt.kappa, opt.result));
        }
        scan_csv.save(ctx.file("ggmt_scan.csv"));
        out["optimum"] = best;
    }
    write_json(ctx.file("ggmt.json"), out);
    csv.save(ctx.file("ggmt.csv"));
    return 0;
}

// ---------------------------------------------------------------- scan

struct ScanArgs {
    int p = 3, ell = 1, points = 25;
    double c_lo = 0.05, c_hi = 0.25;
};

int cmd_scan(RunContext& ctx, const ScanArgs& a) {
    ctx.manifest.resolved = {{"p", a.p}, {"ell", a.ell}, {"c_lo", a.c_lo},
                             {"c_hi", a.c_hi}, {"points", a.points}};
    const Grid grid = Grid::spectral_default();
    ctx.manifest.scheme = {{"grid", {{"n", grid.n}, {"r_max", grid.r_max}}},
                           {"c_bisection_width", 1e-4}};
    const CrossingReport rep = scan_crossing(a.p, a.ell, a.c_lo, a.c_hi, a.points, grid);

    CsvWriter curve("c,lambda_B_lowest,count");
    for (const auto& pt : rep.curve)
        curve.row({pt.c, pt.lambda0, static_cast<double>(pt.count)});
    curve.save(ctx.file("scan_curve.csv"));

    json j{{"schema", kSchemaVersion},
           {"p", a.p},
           {"ell", a.ell},
           {"c_lo", a.c_lo},
           {"c_hi", a.c_hi},
           {"status", rep.found ? "found" : "no_crossing"},
           {"count_lo", rep.count_lo},
           {"count_hi", rep.count_hi}};
    if (rep.found) {
        j["c_star"] = rep.c_star;
        j["width"] = rep.width;
    }
    write_json(ctx.file("scan.json"), j);
    return 0;
}

// ---------------------------------------------------------------- evolve

struct EvolveArgs {
    std::string mode = "similarity";
    int p = 3, ell = 0;
    int cells = 0;   // 0: mode default (1200 similarity/linear, 1000 physical)
    double R = 0.0;  // 0: mode default (12 similarity/linear, 20 physical)
    double c = 0.3, tau_end = 8.0, t_max = 4.0, dtau = 5e-4, T = 1.0;
    std::string perturb = "none";
    bool tune = false;
    std::vector<double> snapshots;
};

void write_history(RunContext& ctx, const std::vector<HistoryPoint>& hist,
                   const char* time_col) {
    CsvWriter csv(std::string(time_col) + ",sup_norm,sigma_norm,unstable_coef");
    for (const auto& h : hist) csv.row({h.time, h.sup, h.sigma, h.ucoef});
    csv.save(ctx.file("history.csv"));
}

void write_snapshots(RunContext& ctx, const std::vector<Snapshot>& snaps,
                     const SimGrid& grid) {
    for (std::size_t s = 0; s < snaps.size(); ++s) {
        CsvWriter csv("r,value");
        for (int i = 0; i < grid.nodes(); ++i)
            csv.row({grid.r(i), snaps[s].values[static_cast<std::size_t>(i)]});
        csv.save(ctx.file("snapshot_" + std::to_string(s) + ".csv"));
    }
}

int cmd_evolve(RunContext& ctx, const EvolveArgs& a) {
    const auto mp = ModelParams::validate(3, a.p, a.c);
    const SimGrid base = a.mode == "physical" ? SimGrid::physical_default()
                                              : SimGrid::similarity_default();
    const SimGrid grid{a.R > 0.0 ? a.R : base.R, a.cells > 0 ? a.cells : base.cells};
    ctx.manifest.resolved = {{"mode", a.mode},
                             {"p", a.p},
                             {"c", a.c},
                             {"ell", a.ell},
                             {"perturb", a.perturb},
                             {"tau_end", a.tau_end},
                             {"t_max", a.t_max},
                             {"tune_T", a.tune},
                             {"T", a.T},
                             {"model", model_params_json(mp)}};
    ctx.manifest.scheme = {{"h", grid.h()},
                           {"R", grid.R},
                           {"dtau", a.dtau},
                           {"dtau_max", SimilarityStepper::dtau_max(grid.h())},
                           {"dt_rule", "min(h^2/4, 0.1 sup^{1-p})"},
                           {"sup_stop", 1e6}};
    json summary{{"schema", kSchemaVersion}, {"mode", a.mode}, {"p", a.p},
                 {"c", a.c},                 {"ell", a.ell},   {"perturb", a.perturb}};

    if (a.mode == "linear") {
        const auto v0 = parse_perturbation(a.perturb, mp, a.ell, grid);
        Column init(static_cast<std::size_t>(grid.nodes()));
        for (int i = 0; i < grid.nodes(); ++i)
            init[static_cast<std::size_t>(i)] = v0(grid.r(i));
        init.back() = 0.0;
        SimilarityRunOptions opt;
        opt.nonlinear = false;
        opt.dtau = a.dtau;
        opt.tau_end = a.tau_end;
        opt.snapshot_times = a.snapshots;
        const auto run = run_similarity(mp, a.ell, init, grid, opt);
        write_history(ctx, run.history, "tau");
        write_snapshots(ctx, run.snapshots, grid);
        if (a.perturb.rfind("eig:", 0) == 0) {
            const int k = std::stoi(a.perturb.substr(4));
            const ModeRate rate = measured_mode_rate(mp, a.ell, k, grid, a.dtau);
            summary["measured_rate"] = rate.rate;
            summary["expected_rate"] = rate.expected;
            summary["lambda_B"] = rate.lambda_b;
        }
        summary["status"] = "ok";
    } else if (a.mode == "similarity") {
        const auto v0 = parse_perturbation(a.perturb, mp, a.ell, grid);
        SimilarityRunOptions opt;
        opt.nonlinear = true;
        opt.dtau = a.dtau;
        opt.tau_end = a.tau_end;
        opt.snapshot_times = a.snapshots;
        SimilarityRun run;
        if (a.tune) {
            const TuneResult tuned = tune_blowup_time(v0, mp, grid, opt);
            run = std::move(tuned.trajectory);
            summary["T"] = tuned.T;
            summary["trials"] = tuned.trials;
        } else {
            run = run_similarity(mp, 0, initial_data_op(v0, a.T, mp, grid), grid, opt);
            summary["T"] = a.T;
        }
        write_history(ctx, run.history, "tau");
        write_snapshots(ctx, run.snapshots, grid);
        const double decay =
            run.history.back().sigma / std::max(run.history.front().sigma, 1e-300);
        summary["sigma_decay_factor"] = decay;
        summary["stable"] = !run.blew_up && decay < 1.0;
        summary["status"] = run.blew_up ? "blowup" : "ok";
        if (run.blew_up) {
            write_json(ctx.file("evolve.json"), summary);
            throw BlowupDetected("similarity run escaped the basin");
        }
    } else if (a.mode == "physical") {
        const auto v0 = parse_perturbation(a.perturb, mp, a.ell, grid);
        Column u0(static_cast<std::size_t>(grid.nodes()));
        for (int i = 0; i < grid.nodes(); ++i)
            u0[static_cast<std::size_t>(i)] = phi(mp, grid.r(i)) + v0(grid.r(i));
        u0.back() = 0.0;
        PhysicalRunOptions opt;
        opt.t_max = a.t_max;
        try {
            const PhysicalRun run = evolve_physical(u0, mp, grid, opt);
            write_history(ctx, run.history, "t");
            write_snapshots(ctx, run.snapshots, grid);
            summary["T_est"] = run.T_est;
            summary["fit_r2"] = run.fit_r2;
            summary["status"] = "ok";
        } catch (const NoBlowup&) {
            summary["status"] = "no_blowup";
        }
    } else {
        throw RangeError("unknown mode '" + a.mode + "'");
    }
    write_json(ctx.file("evolve.json"), summary);
    return 0;
}

// ---------------------------------------------------------------- report

int cmd_report(RunContext& ctx, const fs::path& in_dir) {
    ctx.manifest.resolved = {{"in", in_dir.string()}};
    std::vector<fs::path> files;
    if (fs::exists(in_dir))
        for (const auto& entry : fs::recursive_directory_iterator(in_dir)) {
            if (!entry.is_regular_file()) continue;
            const auto name = entry.path().filename().string();
            if (entry.path().extension() == ".json" && name != "manifest.json" &&
                name != "report.json")
                files.push_back(entry.path());
        }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw RangeError("no result JSON files under " + in_dir.string());

    json limit_spectra = json::object();
    json spectra = json::array();
    json ggmt_rows = json::array();
    json crossings = json::array();
    json evolutions = json::array();
    std::vector<std::string> sources;

    for (const auto& f : files) {
        std::ifstream is(f);
        json j;
        try {
            is >> j;
        } catch (const std::exception&) {
            throw RangeError("file does not parse as JSON: " + f.string());
        }
        if (!j.contains("schema") || j["schema"] != kSchemaVersion)
            throw RangeError("schema mismatch in " + f.string());
        sources.push_back(f.lexically_relative(in_dir).string());
        if (j.contains("kind") && j.contains("eigenvalues")) {
            if (j["kind"] == "Q_ELL_LIMIT")
                limit_spectra[std::to_string(j["ell"].get<int>())] = j["eigenvalues"];
            spectra.push_back(json{{"kind", j["kind"]},
                                   {"ell", j["ell"]},
                                   {"p", j["p"]},
                                   {"c", j["c"]},
                                   {"eigenvalues", j["eigenvalues"]}});
        } else if (j.contains("results")) {
            for (const auto& r : j["results"]) ggmt_rows.push_back(r);
        } else if (j.contains("status") && j.contains("c_lo")) {
            crossings.push_back(j);
        } else if (j.contains("mode")) {
            evolutions.push_back(j);
        }
    }

    // unstable anchors of the c = 0 operators: (ell=0, n=0,1), (ell=1, n=0),
    // (ell=2, n=0)
    json anchors = json::object();
    if (limit_spectra.contains("0") && limit_spectra["0"].size() >= 2)
        anchors["ell0"] = {limit_spectra["0"][0], limit_spectra["0"][1]};
    if (limit_spectra.contains("1") && !limit_spectra["1"].empty())
        anchors["ell1"] = {limit_spectra["1"][0]};
    if (limit_spectra.contains("2") && !limit_spectra["2"].empty())
        anchors["ell2"] = {limit_spectra["2"][0]};

    json report{{"schema", kSchemaVersion}, {"sources", sources},
                {"limit_spectra", limit_spectra}, {"anchors", anchors},
                {"spectra", spectra},       {"ggmt", ggmt_rows},
                {"crossings", crossings},   {"evolutions", evolutions}};
    write_json(ctx.file("report.json"), report);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hbl: self-similar blowup laboratory for the Henon-type heat equation"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand
    app.set_config("--config", "", "plain key=value configuration file");

    std::string out_dir = "hbl_out";
    app.add_option("--out", out_dir, "output directory")
        ->envname("HBL_OUT_DIR")
        ->capture_default_str();

    ProfileArgs pa;
    auto* profile = app.add_subcommand("profile", "tabulate phi, V and g");
    profile->add_option("--d", pa.d, "spatial dimension")->capture_default_str();
    profile->add_option("--p", pa.p, "nonlinearity power (odd >= 3)")->capture_default_str();
    profile->add_option("--c", pa.c, "coupling, 0 < c < p/d^2")->capture_default_str();
    profile->add_option("--r-max", pa.r_max, "last radius")->capture_default_str();
    profile->add_option("--n", pa.n, "number of rows")->capture_default_str();

    SpectrumArgs sa;
    auto* spectrum = app.add_subcommand("spectrum", "low-lying radial spectra");
    spectrum->add_option("--p", sa.p, "nonlinearity power")->capture_default_str();
    spectrum->add_option("--c", sa.c, "coupling")->capture_default_str();
    spectrum->add_option("--ell", sa.ells, "angular indices (repeatable)")
        ->capture_default_str();
    spectrum->add_option("--k", sa.k, "eigenvalues per operator")->capture_default_str();
    spectrum->add_flag("--limit", sa.limit, "use the c = 0 limit operators");
    spectrum->add_option("--r-max", sa.r_max, "domain truncation")->capture_default_str();
    spectrum->add_option("--n", sa.n, "interior grid points")->capture_default_str();
    spectrum->add_option("--levels", sa.levels, "Richardson levels")->capture_default_str();

    GgmtArgs ga;
    auto* ggmt = app.add_subcommand("ggmt", "negative-eigenvalue count bound");
    ggmt->add_option("--c", ga.c, "coupling")->capture_default_str();
    ggmt->add_option("--delta", ga.delta, "split parameter, 0 < delta < 9/4")
        ->capture_default_str();
    ggmt->add_option("--kappa", ga.kappa, "exponent in [3/2, 5]")->capture_default_str();
    ggmt->add_option("--convention", ga.convention, "both | theorem | appendix")
        ->capture_default_str();
    ggmt->add_flag("--optimize", ga.optimize, "scan the (delta, kappa) grid");
    ggmt->add_option("--delta-lo", ga.delta_lo)->capture_default_str();
    ggmt->add_option("--delta-hi", ga.delta_hi)->capture_default_str();
    ggmt->add_option("--delta-step", ga.delta_step)->capture_default_str();
    ggmt->add_option("--kappa-lo", ga.kappa_lo)->capture_default_str();
    ggmt->add_option("--kappa-hi", ga.kappa_hi)->capture_default_str();
    ggmt->add_option("--kappa-step", ga.kappa_step)->capture_default_str();

    ScanArgs ca;
    auto* scan = app.add_subcommand("scan", "eigenvalue-vs-c curve and zero crossing");
    scan->add_option("--p", ca.p, "nonlinearity power")->capture_default_str();
    scan->add_option("--ell", ca.ell, "angular index")->capture_default_str();
    scan->add_option("--c-lo", ca.c_lo, "lower end of the c interval")->capture_default_str();
    scan->add_option("--c-hi", ca.c_hi, "upper end of the c interval")->capture_default_str();
    scan->add_option("--points", ca.points, "curve sample count")->capture_default_str();

    EvolveArgs ea;
    auto* evolve = app.add_subcommand("evolve", "time evolution runs");
    evolve->add_option("--mode", ea.mode, "linear | similarity | physical")
        ->capture_default_str();
    evolve->add_option("--p", ea.p, "nonlinearity power")->capture_default_str();
    evolve->add_option("--c", ea.c, "coupling")->capture_default_str();
    evolve->add_option("--ell", ea.ell, "angular index (linear mode)")->capture_default_str();
    evolve->add_option("--perturb", ea.perturb,
                       "none | gauss:<amp> | eig:<k> | bump:<amp>:<center>:<width>")
        ->capture_default_str();
    evolve->add_option("--tau-end", ea.tau_end, "similarity horizon")->capture_default_str();
    evolve->add_option("--t-max", ea.t_max, "physical horizon")->capture_default_str();
    evolve->add_flag("--tune-T", ea.tune, "tune the blowup time");
    evolve->add_option("--T", ea.T, "fixed blowup-time parameter")->capture_default_str();
    evolve->add_option("--dtau", ea.dtau, "similarity step")->capture_default_str();
    evolve->add_option("--cells", ea.cells, "grid cells (0 = mode default)")
        ->capture_default_str();
    evolve->add_option("--R", ea.R, "domain radius (0 = mode default)")
        ->capture_default_str();
    evolve->add_option("--snapshot", ea.snapshots, "snapshot times (repeatable)")
        ->capture_default_str();

    std::string report_in;
    auto* report = app.add_subcommand("report", "aggregate result JSON into one report");
    report->add_option("--in", report_in, "results directory (defaults to --out)");

    CLI11_PARSE(app, argc, argv);

    RunContext ctx;
    ctx.out = out_dir;
    std::error_code ec;
    fs::create_directories(ctx.out, ec);
    for (int i = 0; i < argc; ++i) {
        if (i) ctx.manifest.command_line += ' ';
        ctx.manifest.command_line += argv[i];
    }

    int code = 0;
    try {
        if (profile->parsed()) code = cmd_profile(ctx, pa);
        else if (spectrum->parsed()) code = cmd_spectrum(ctx, sa);
        else if (ggmt->parsed()) code = cmd_ggmt(ctx, ga);
        else if (scan->parsed()) code = cmd_scan(ctx, ca);
        else if (evolve->parsed()) code = cmd_evolve(ctx, ea);
        else if (report->parsed())
            code = cmd_report(ctx, report_in.empty() ? ctx.out : fs::path(report_in));
    } catch (const MethodDisagreement& e) {
        ctx.manifest.status = "error";
        ctx.manifest.error = e.what();
        json diag{{"matrix_count", e.matrix_count()},
                  {"shooting_count", e.shooting_count()},
                  {"eigenvalue_near_zero", e.eigenvalue_near_zero()}};
        std::cerr << "hbl: " << e.what() << "\n" << diag.dump() << "\n";
        code = 3;
    } catch (const Error& e) {
        ctx.manifest.status = "error";
        ctx.manifest.error = e.what();
        std::cerr << "hbl: [" << e.tag() << "] " << e.what() << "\n";
        code = exit_code_for(e);
    } catch (const std::exception& e) {
        ctx.manifest.status = "error";
        ctx.manifest.error = e.what();
        std::cerr << "hbl: " << e.what() << "\n";
        code = 2;
    }
    ctx.finish();
    return code;
}
