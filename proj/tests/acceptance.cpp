// One PASS/FAIL line per acceptance criterion. Each criterion also carries a
// wall-clock budget; exceeding it is a failure.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "degen_kpp/cli/commands.hpp"

using namespace degen_kpp;
namespace fs = std::filesystem;
using cli::Json;

namespace {

// Pinned tolerances.
constexpr double nonexistence_alpha_lo = 1e-4;
constexpr double nonexistence_alpha_hi = 10.0;
constexpr int nonexistence_points = 20;
constexpr double exact_branch_tol = 1e-10;
constexpr double bell_top_expected = 0.0141723;
constexpr double bell_top_tol = 1e-6;
constexpr double lambda_plus_sq_expected = 0.117339;
constexpr double lambda_plus_sq_tol = 1e-5;
constexpr double lambda_minus_expected = 0.729844;
constexpr double lambda_plus_expected = 1.370156;
constexpr double right_ns_rel_tol = 0.02;
constexpr double right_h_rel_tol = 0.03;
constexpr double left_ns_rel_tol = 0.02;
constexpr double sharp_lo = 0.95;
constexpr double sharp_hi = 1.05;
constexpr double speed_identity_tol = 1e-3;
constexpr double fixed_point_tol = 1e-8;
constexpr double tw_tol = 1e-4;
constexpr double weak_tol = 1e-3;
constexpr double recursion_tol = 1e-10;
constexpr double slope_lo = 1.8;
constexpr double slope_hi = 2.2;
constexpr double full_run_budget_s = 180.0;

constexpr double c_fig = 2.1;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double budget_s;
    std::function<Outcome()> check;
};

std::string fmt(double v, const char* f = "%.6g") { return io::detail::fmt(v, f); }

Outcome nonexistence() {
    const ToleranceSet tol;
    const auto grid = log_spaced(nonexistence_alpha_lo, nonexistence_alpha_hi, nonexistence_points);
    Outcome o{true, ""};
    for (double c : {1.0, 1.5, 1.9}) {
        const auto rep = small_speed_scan(c, grid, tol);
        int crossed = 0;
        for (const auto& e : rep.entries)
            if (e.zero_end != ZeroEnd::vanishes) ++crossed;
        o.pass = o.pass && rep.no_wave_certified && rep.entries.size() == grid.size();
        o.detail += "c=" + fmt(c) + ": " + std::to_string(crossed) + "/" + std::to_string(grid.size()) +
                    " traces leave the wave set; ";
    }
    return o;
}

Outcome exact_branch() {
    const ToleranceSet tol;
    double worst = 0.0;
    for (double c : {0.5, 2.0, 2.1, 5.0})
        for (Direction d : {Direction::toward_zero, Direction::toward_one}) {
            const HTrace tr = integrate(c, 0.5, -0.25, d, tol);
            for (const auto& s : tr.samples()) worst = std::max(worst, std::abs(s.h + s.r * s.r));
        }
    return {worst <= exact_branch_tol, "max |h + r^2| = " + fmt(worst, "%.3g")};
}

Outcome threshold_chain() {
    const auto t = threshold_table(c_fig, ToleranceSet{});
    const double lp2 = t.lambda_plus * t.lambda_plus / 16.0;
    const bool ok = t.h0_half < t.bell_top && std::abs(t.bell_top - bell_top_expected) <= bell_top_tol &&
                    t.bell_top < lp2 && std::abs(lp2 - lambda_plus_sq_expected) <= lambda_plus_sq_tol &&
                    lp2 < t.alpha_switch_minus && t.alpha_switch_minus < t.alpha_switch_plus &&
                    t.alpha_switch_plus <= t.alpha_max && t.chain_holds();
    return {ok, "h0(1/2)=" + fmt(t.h0_half, "%.10g") + " < " + fmt(t.bell_top) + " < " + fmt(lp2) + " < " +
                    fmt(t.alpha_switch_minus, "%.10g") + " < " + fmt(t.alpha_switch_plus, "%.10g") +
                    " <= " + fmt(t.alpha_max, "%.10g")};
}

Outcome tail_rates() {
    const ToleranceSet tol;
    const auto ns = reconstruct(solve_small(c_fig, tol).trace, tol, 2000);
    const auto h = reconstruct(solve_large_iteration(c_fig, tol).trace, tol, 2000);
    const double r_ns = right_tail_rate(ns, tol).rate;
    const double r_h = right_tail_rate(h, tol).rate;
    const auto left = left_tail(ns, tol);
    const double classical = classical_left_rate(c_fig);
    const bool ok = std::abs(r_ns - lambda_minus_expected) <= right_ns_rel_tol * lambda_minus_expected &&
                    std::abs(r_h - lambda_plus_expected) <= right_h_rel_tol * lambda_plus_expected &&
                    std::abs(left.rate - 1.0 / c_fig) <= left_ns_rel_tol / c_fig && left.rate > classical;
    return {ok, "right NS " + fmt(r_ns) + ", right H " + fmt(r_h) + ", left NS " + fmt(left.rate) +
                    " > classical " + fmt(classical)};
}

Outcome sharp_front() {
    const ToleranceSet tol;
    Outcome o{true, ""};
    for (double alpha : {0.5, 1.0}) {
        const auto p = reconstruct(shoot(c_fig, alpha, tol), tol, 2000);
        const auto lt = left_tail(p, tol);
        o.pass = o.pass && p.saturated() && lt.ratio_min >= sharp_lo && lt.ratio_max <= sharp_hi;
        o.detail += "alpha=" + fmt(alpha) + ": ratio in [" + fmt(lt.ratio_min, "%.4f") + ", " +
                    fmt(lt.ratio_max, "%.4f") + "]; ";
    }
    return o;
}

Outcome speed_identities() {
    const ToleranceSet tol;
    double worst = 0.0;
    for (double c : {2.0, 2.1, 3.0})
        for (const HTrace& tr : {solve_small(c, tol).trace, solve_large_iteration(c, tol).trace})
            worst = std::max(worst, std::abs(speed_identity(tr, tol) - c) / c);
    return {worst < speed_identity_tol, "max relative error " + fmt(worst, "%.3g")};
}

Outcome convexity() {
    const ToleranceSet tol;
    const auto t = threshold_table(c_fig, tol);
    Outcome o{true, ""};
    auto add = [&](const std::string& name, bool ok, const std::string& what) {
        o.pass = o.pass && ok;
        o.detail += name + (ok ? " " : " MISMATCH ") + what + "; ";
    };
    const HTrace ns = solve_small(c_fig, tol).trace;
    const auto z_ns = convexity_pattern(ns, WaveTag::NonSaturated, tol);
    add("NS", z_ns.size() == 1 && z_ns[0] > 0.0, "z0=" + fmt(z_ns.at(0), "%.4f"));

    const auto a = classify(c_fig, 0.5 * (t.h0_half + t.bell_top), t, tol);
    const auto z_a = convexity_pattern(*a.trace, a.tag, tol);
    add("A", a.tag == WaveTag::SaturatedA && z_a.size() == 2 && z_a[0] < 0.0 && z_a[1] > 0.0,
        "z1=" + fmt(z_a.at(0), "%.4f") + " z2=" + fmt(z_a.at(1), "%.4f"));

    // Type (b): h' = 0 at r = 1/2 and the trace stays on one side of the bell.
    const auto b = classify(c_fig, t.bell_top, t, tol);
    const HTrace& tb = *b.trace;
    bool one_side = true;
    for (const auto& s : tb.samples())
        if (std::abs(s.r - 0.5) > 1e-3 && s.h < bell(c_fig, s.r)) one_side = false;
    add("B", b.tag == WaveTag::SaturatedB && std::abs(tb.slope_at(0.5)) < 1e-12 && one_side,
        "tangent at z=0, h'(1/2)=" + fmt(tb.slope_at(0.5), "%.2g"));

    for (double f : {0.35, 0.7}) {
        const auto cw = classify(c_fig, t.bell_top + f * (t.alpha_max - t.bell_top), t, tol);
        const auto z_c = convexity_pattern(*cw.trace, cw.tag, tol);
        add("C", cw.tag == WaveTag::SaturatedC && z_c.empty(), "no inflection");
    }
    return o;
}

Outcome monotone_iteration() {
    const ToleranceSet tol;
    const auto it = solve_large_iteration(c_fig, tol);
    const double direct = alpha_max(c_fig, tol);
    const double diff = std::abs(it.half_value - direct);
    const bool ok = it.converged && it.min_increment >= 0.0 && it.max_bound_ratio <= 1.0 && diff <= fixed_point_tol;
    return {ok, std::to_string(it.iterations) + " iterates, min increment " + fmt(it.min_increment, "%.3g") +
                    ", max h_n/bound " + fmt(it.max_bound_ratio, "%.4f") + ", |H(1/2) - direct| " +
                    fmt(diff, "%.3g")};
}

Outcome residual_suites() {
    auto cfg = cli::resolve_config("verify", {{"c", "2.1"}}, "", nullptr);
    const Json j = cli::suite_residuals(cfg);
    double tw = 0.0, weak = 0.0;
    bool ok = j["passed"].get<bool>();
    for (const auto& w : j["waves"]) {
        tw = std::max(tw, w["tw"].get<double>());
        ok = ok && w["weak"].size() == 5;
        for (const auto& v : w["weak"]) weak = std::max(weak, v.get<double>());
    }
    ok = ok && tw < tw_tol && weak < weak_tol;
    return {ok, std::to_string(j["waves"].size()) + " waves, max tw " + fmt(tw, "%.3g") + ", max weak " +
                    fmt(weak, "%.3g")};
}

Outcome certificates() {
    Outcome o{true, ""};
    int certs = 0;
    for (double c : {2.0, 2.05, 2.1, 2.5, 3.0}) {
        const auto j = cli::suite_subsuper(cli::resolve_config("verify", {{"c", std::to_string(c)}}, "", nullptr));
        o.pass = o.pass && j["passed"].get<bool>();
        for (const auto& cert : j["certificates"]) {
            ++certs;
            o.pass = o.pass && cert["min_margin"].get<double>() > strict_margin;
        }
    }
    double worst = 0.0;
    const auto m = cli::suite_recursions(cli::resolve_config("verify", {{"c", "1.5"}, {"eps", "0.1"}}, "", nullptr));
    const auto k = cli::suite_recursions(cli::resolve_config("verify", {{"c", "2.1"}, {"eps", "0.1"}}, "", nullptr));
    worst = std::max({m["M"]["max_closed_form_error"].get<double>(), k["K"]["relative_error"].get<double>(),
                      std::abs(k["epsilon"]["limit"].get<double>() - 1.0)});
    o.pass = o.pass && m["passed"].get<bool>() && k["passed"].get<bool>() && worst <= recursion_tol;
    o.detail = std::to_string(certs) + " certificates; recursion error " + fmt(worst, "%.3g");
    return o;
}

Outcome focusing() {
    const auto rep = focusing_order(Kernel::gaussian(), SmoothFunction::gaussian(), {0.2, 0.1, 0.05, 0.025},
                                    ToleranceSet{});
    return {rep.slope >= slope_lo && rep.slope <= slope_hi, "slope " + fmt(rep.slope, "%.4f")};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome figure(const std::chrono::steady_clock::time_point start) {
    const auto dir = fs::temp_directory_path() / ("degen_kpp_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const auto report = dir / "report.json";
    const std::string cmd = std::string(DEGEN_KPP_CLI_PATH) + " figure --c 2.1 --out " + dir.string() + " > " +
                            report.string();
    const int status = std::system(cmd.c_str());
    Outcome o;
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        o.detail = "figure command failed";
        return o;
    }
    const Json j = Json::parse(slurp(report));
    bool files = true;
    for (const char* f : {"figure_waves.svg", "figure_phase.svg", "figure_phase_log.svg"})
        files = files && fs::exists(dir / f) && slurp(dir / f).rfind("<svg", 0) == 0;
    int crossings = 0;
    double worst = 0.0;
    for (const auto& c : j["crossings"]) {
        ++crossings;
        worst = std::max(worst, std::abs(c["z"].get<double>()));
    }
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.pass = files && j["waves"].size() == 4 && crossings == 6 && j["crossings_at_zero"].get<bool>() &&
             j["ordering"].get<bool>() && j["phase_ordered"].get<bool>() && j["below_log_bound"].get<bool>() &&
             total < full_run_budget_s;
    o.detail = "4 waves, " + std::to_string(crossings) + " crossings, max |z| " + fmt(worst, "%.3g") +
               ", full run " + fmt(total, "%.1f") + " s";
    fs::remove_all(dir);
    return o;
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<Criterion> criteria{
        {1, "nonexistence below c=2", 5.0, nonexistence},
        {2, "exact branch h=-r^2", 1.0, exact_branch},
        {3, "threshold chain at c=2.1", 30.0, threshold_chain},
        {4, "tail rates at c=2.1", 30.0, tail_rates},
        {5, "sharp-front law", 10.0, sharp_front},
        {6, "speed identity", 10.0, speed_identities},
        {7, "convexity patterns", 10.0, convexity},
        {8, "monotone iteration for H", 20.0, monotone_iteration},
        {9, "residual suites", 30.0, residual_suites},
        {10, "certificates and recursions", 10.0, certificates},
        {11, "kernel focusing", 5.0, focusing},
        {12, "figure reproduction", full_run_budget_s, [start] { return figure(start); }},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.budget_s) {
            o.pass = false;
            o.detail += " [over budget " + fmt(c.budget_s) + " s]";
        }
        if (!o.pass) ++failed;
        std::printf("%s %2d %-28s %7.2f s  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
