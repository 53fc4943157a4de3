#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "../io/csv.hpp"
#include "../io/json.hpp"
#include "../io/svg.hpp"
#include "../kernel_focusing.hpp"
#include "../verify.hpp"
#include "../version.hpp"
#include "../wave.hpp"

namespace degen_kpp::cli {

using io::Json;

inline constexpr int exit_ok = 0;
inline constexpr int exit_check_failed = 1;
inline constexpr int exit_usage = 2;
inline constexpr int exit_no_wave = 3;
inline constexpr int exit_numerical = 4;

/// Failure carrying a stable reason code for the JSON error record.
class CommandError : public Error {
public:
    CommandError(std::string reason, const std::string& what, int exit_code)
        : Error(what), reason(std::move(reason)), exit_code(exit_code) {}
    std::string reason;
    int exit_code;
};

// ---------------------------------------------------------------------------
// Configuration

struct RunConfig {
    std::string command;
    double c = 2.1;
    std::optional<double> alpha;
    std::vector<double> alphas;
    std::string special;
    std::string which = "all";
    std::string suite = "all";
    double eps = 0.1;
    ToleranceSet tol;
    int samples = 2000;
    std::string out;
    std::string format = "json";
    std::string config_file;

    /// Applies one key=value setting; keys use underscores or dashes.
    void set(std::string key, const std::string& value) {
        std::replace(key.begin(), key.end(), '-', '_');
        auto num = [&]() {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(value, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != value.size())
                throw CommandError("invalid_argument", key + ": not a number: '" + value + "'", exit_usage);
            return v;
        };
        if (key == "c") {
            c = num();
        } else if (key == "alpha") {
            alpha = num();
        } else if (key == "alphas") {
            alphas.clear();
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ',')) {
                RunConfig tmp;
                tmp.set("alpha", item);
                alphas.push_back(*tmp.alpha);
            }
        } else if (key == "special") {
            special = value;
        } else if (key == "which") {
            which = value;
        } else if (key == "suite") {
            suite = value;
        } else if (key == "eps") {
            eps = num();
        } else if (key == "tol_ode") {
            tol.ode_rel = num();
            tol.ode_abs = 1e-2 * tol.ode_rel;
        } else if (key == "tol_bisect") {
            tol.bisect = num();
        } else if (key == "samples") {
            const double v = num();
            if (v != std::floor(v) || std::abs(v) > 1e9)
                throw CommandError("invalid_argument", "samples must be an integer", exit_usage);
            samples = int(v);
        } else if (key == "out") {
            out = value;
        } else if (key == "format") {
            format = value;
        } else {
            throw CommandError("invalid_argument", "unknown setting '" + key + "'", exit_usage);
        }
    }

    void validate() const {
        auto bad = [](const std::string& what) { throw CommandError("invalid_argument", what, exit_usage); };
        auto one_of = [&](const std::string& v, std::initializer_list<const char*> ok, const char* name) {
            for (const char* o : ok)
                if (v == o) return;
            bad(std::string(name) + ": unsupported value '" + v + "'");
        };
        if (!std::isfinite(c) || c <= 0.0) bad("c must be a positive number");
        if (alpha && !(*alpha > 0.0 && std::isfinite(*alpha))) bad("alpha must be positive");
        for (double a : alphas)
            if (!(a > 0.0 && std::isfinite(a))) bad("alphas must be positive");
        if (alpha && !special.empty()) bad("give either --alpha or --special, not both");
        if (!special.empty()) one_of(special, {"small", "large", "max"}, "special");
        one_of(which, {"waves", "phase", "phase-log", "all"}, "which");
        one_of(suite, {"subsuper", "recursions", "residuals", "focusing", "all"}, "suite");
        one_of(format, {"json", "csv", "svg"}, "format");
        if (format == "svg" && command != "figure") bad("--format svg is only available for figure");
        if (format == "csv" && command != "wave" && command != "figure")
            bad("--format csv is only available for wave and figure");
        if (!(eps > 0.0 && eps < 1.0)) bad("eps must lie in (0,1)");
        if (samples < 100 || samples > 1000000) bad("samples must lie in [100, 1e6]");
        try {
            tol.validate();
        } catch (const DomainError& e) {
            bad(e.what());
        }
    }

    Json to_json() const {
        Json j;
        j["command"] = command;
        j["c"] = c;
        j["alpha"] = alpha ? Json(*alpha) : Json(nullptr);
        j["alphas"] = io::numbers(alphas);
        j["special"] = special;
        j["which"] = which;
        j["suite"] = suite;
        j["eps"] = eps;
        j["tol_ode_rel"] = tol.ode_rel;
        j["tol_ode_abs"] = tol.ode_abs;
        j["tol_bisect"] = tol.bisect;
        j["tol_quad"] = tol.quad;
        j["samples"] = samples;
        j["out"] = out;
        j["format"] = format;
        j["config_file"] = config_file;
        return j;
    }
};

/// key=value lines; blank lines and lines starting with '#' are skipped.
inline std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::stringstream ss(text);
    std::string line;
    int number = 0;
    auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t\r");
        if (a == std::string::npos) return std::string();
        const auto b = s.find_last_not_of(" \t\r");
        return s.substr(a, b - a + 1);
    };
    while (std::getline(ss, line)) {
        ++number;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw CommandError("invalid_config", "config line " + std::to_string(number) + " has no '='",
                               exit_usage);
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

/// Defaults, then the config file, then flags. The file is `config_flag` if
/// given, otherwise `env_path` (the DEGEN_KPP_CONFIG variable).
inline RunConfig resolve_config(const std::string& command,
                                const std::vector<std::pair<std::string, std::string>>& flags,
                                const std::string& config_flag, const char* env_path) {
    RunConfig cfg;
    cfg.command = command;
    cfg.config_file = !config_flag.empty() ? config_flag : (env_path ? env_path : "");
    if (!cfg.config_file.empty()) {
        std::ifstream in(cfg.config_file);
        if (!in) throw CommandError("invalid_config", "cannot read config file " + cfg.config_file, exit_usage);
        std::stringstream buf;
        buf << in.rdbuf();
        for (const auto& [k, v] : parse_config_text(buf.str())) cfg.set(k, v);
    }
    for (const auto& [k, v] : flags) cfg.set(k, v);
    cfg.validate();
    return cfg;
}

// ---------------------------------------------------------------------------
// Results

struct OutputFile {
    std::string name;
    std::string content;
};

struct CommandResult {
    Json report;
    bool passed = true;
    std::vector<OutputFile> files;
    /// Written to stdout instead of the report under --format csv.
    std::string csv;
};

inline Json envelope(const RunConfig& cfg) {
    Json j;
    j["schema"] = report_schema;
    j["version"] = version;
    j["command"] = cfg.command;
    j["config"] = cfg.to_json();
    return j;
}

inline std::vector<std::string> provenance_lines(const RunConfig& cfg) {
    return {std::string("degen-kpp ") + version, std::string("schema ") + report_schema,
            "config " + cfg.to_json().dump()};
}

inline std::string svg_with_config(const io::Plot& plot, const RunConfig& cfg) {
    std::string s = plot.render();
    const std::string meta = "<metadata>" + io::detail::escape(provenance_lines(cfg)[0] + "; " +
                                                                provenance_lines(cfg)[2]) +
                             "</metadata>\n";
    const auto pos = s.find('\n');
    return s.insert(pos + 1, meta);
}

inline void require_wave_speed(double c) {
    if (!(c >= 2.0))
        throw CommandError("no_waves_below_2",
                           "no waves for c<2: every trace from (1/2, alpha) turns negative", exit_no_wave);
}

inline Json table_json(const ThresholdTable& t) {
    Json j;
    j["c"] = t.c;
    j["lambda_minus"] = t.lambda_minus;
    j["lambda_plus"] = t.lambda_plus;
    j["h0_half"] = t.h0_half;
    j["bell_top"] = t.bell_top;
    j["lambda_plus_sq_over_16"] = t.lambda_plus * t.lambda_plus / 16.0;
    j["alpha_switch_minus"] = t.alpha_switch_minus;
    j["alpha_switch_plus"] = t.alpha_switch_plus;
    j["alpha_max"] = t.alpha_max;
    j["H_half"] = t.H_half;
    j["chain_holds"] = t.chain_holds();
    return j;
}

// ---------------------------------------------------------------------------
// lambda, classify

inline CommandResult cmd_lambda(const RunConfig& cfg) {
    require_wave_speed(cfg.c);
    const Speed s = Speed::make(cfg.c);
    CommandResult r;
    r.report = envelope(cfg);
    r.report["lambda_minus"] = s.lambda_minus;
    r.report["lambda_plus"] = s.lambda_plus;
    r.report["bell_top"] = s.bell_top;
    r.report["lambda_plus_sq_over_16"] = s.lambda_plus * s.lambda_plus / 16.0;
    return r;
}

inline CommandResult cmd_classify(const RunConfig& cfg) {
    require_wave_speed(cfg.c);
    const auto t = threshold_table(cfg.c, cfg.tol);
    CommandResult r;
    r.report = envelope(cfg);
    r.report["table"] = table_json(t);
    r.passed = t.chain_holds();
    if (cfg.alpha) {
        const auto w = classify(cfg.c, *cfg.alpha, t, cfg.tol);
        r.report["alpha"] = *cfg.alpha;
        r.report["class"] = to_string(w.tag);
        r.report["produces_wave"] = produces_wave(w.tag);
        r.report["ambiguous"] = w.ambiguous;
        r.report["inflection_radii"] = io::numbers(w.inflection_radii);
    }
    if (!r.passed) r.report["failures"] = Json::array({"threshold chain out of order"});
    return r;
}

// ---------------------------------------------------------------------------
// wave

inline HTrace shoot_wave(double c, double alpha, const ToleranceSet& tol) {
    HTrace tr = shoot(c, alpha, tol);
    if (!tr.wave_producing())
        throw CommandError("no_wave_for_alpha",
                           std::string("no wave for this alpha: the trace ") +
                               (tr.zero_end().kind == ZeroEnd::positive ? "stays positive at r=0"
                                                                         : "turns negative before r=0"),
                           exit_no_wave);
    return tr;
}

inline HTrace wave_trace(const RunConfig& cfg) {
    if (cfg.special == "small") return solve_small(cfg.c, cfg.tol).trace;
    if (cfg.special == "large") return solve_large_iteration(cfg.c, cfg.tol).trace;
    if (cfg.special == "max") return shoot_wave(cfg.c, alpha_max_search(cfg.c, cfg.tol).last_in, cfg.tol);
    if (!cfg.alpha) throw CommandError("invalid_argument", "wave needs --alpha or --special", exit_usage);
    return shoot_wave(cfg.c, *cfg.alpha, cfg.tol);
}

struct ResidualSummary {
    double tw = 0.0;
    int tw_samples = 0;
    std::vector<double> weak;
    double weak_max = 0.0;
};

inline constexpr double tw_limit = 1e-4;
inline constexpr double weak_limit = 1e-3;

/// tw_residual with the sample count doubled until it meets tw_limit (at most
/// 16000 samples); weak residuals on the standard bumps.
inline ResidualSummary residuals(const WaveProfile& p, int samples, const ToleranceSet& tol) {
    ResidualSummary s;
    int n = samples;
    WaveProfile q = p;
    for (;;) {
        s.tw = tw_residual(q, p.c).max_residual;
        s.tw_samples = n;
        if (s.tw < tw_limit || n >= 16000) break;
        n = std::min(2 * n, 16000);
        q = reconstruct(*p.trace, tol, n, p.tag);
    }
    for (const auto& b : standard_bumps()) {
        s.weak.push_back(weak_residual(p, p.c, TestFunction::from(b), tol));
        s.weak_max = std::max(s.weak_max, s.weak.back());
    }
    return s;
}

inline Json wave_summary(const WaveProfile& p, int samples, const ToleranceSet& tol) {
    const HTrace& tr = *p.trace;
    const Speed sp = Speed::make(p.c);
    Json j;
    j["class"] = to_string(p.tag);
    j["alpha"] = tr.h_at(0.5);
    j["saturated"] = p.saturated();
    j["z_star"] = io::number(p.z_star);
    j["samples"] = p.samples.size();
    j["z_range"] = io::numbers({p.z_min(), p.z_max()});

    const auto rt = right_tail_rate(p, tol);
    j["right_tail"] = {{"rate", rt.rate},
                       {"fit_residual", rt.max_residual},
                       {"points", rt.points},
                       {"lambda_minus", sp.lambda_minus},
                       {"lambda_plus", sp.lambda_plus}};
    const auto lt = left_tail(p, tol);
    if (lt.saturated)
        j["left_tail"] = {{"sharp_ratio_min", lt.ratio_min},
                          {"sharp_ratio_max", lt.ratio_max},
                          {"points", lt.points}};
    else
        j["left_tail"] = {{"rate", lt.rate},
                          {"one_over_c", 1.0 / p.c},
                          {"classical_rate", classical_left_rate(p.c)},
                          {"steeper_than_classical", lt.steeper_than_classical},
                          {"points", lt.points}};
    const double si = speed_identity(tr, tol);
    j["speed_identity"] = {{"value", si}, {"relative_error", std::abs(si - p.c) / p.c}};
    j["inflections"] = io::numbers(convexity_pattern(tr, p.tag, tol));
    const auto res = residuals(p, samples, tol);
    j["residuals"] = {{"tw", res.tw},
                      {"tw_samples", res.tw_samples},
                      {"weak", io::numbers(res.weak)},
                      {"weak_max", res.weak_max}};
    j["round_trip_error"] = round_trip_error(p);
    return j;
}

inline io::CsvTable wave_csv(const WaveProfile& p, const RunConfig& cfg) {
    io::CsvTable t;
    t.comments = provenance_lines(cfg);
    t.comments.push_back(std::string("class ") + to_string(p.tag) + ", z_star " + io::format_double(p.z_star));
    t.columns = {"z", "u", "one_minus_u"};
    for (const auto& s : p.samples) t.add_row({s.z, s.u, s.one_minus_u});
    return t;
}

inline CommandResult cmd_wave(const RunConfig& cfg) {
    require_wave_speed(cfg.c);
    const HTrace tr = wave_trace(cfg);
    const auto p = reconstruct(tr, cfg.tol, cfg.samples);
    CommandResult r;
    r.report = envelope(cfg);
    r.report["wave"] = wave_summary(p, cfg.samples, cfg.tol);
    const auto& w = r.report["wave"];
    std::vector<std::string> failures;
    if (!(w["residuals"]["tw"].get<double>() < tw_limit)) failures.push_back("tw residual above limit");
    if (!(w["residuals"]["weak_max"].get<double>() < weak_limit)) failures.push_back("weak residual above limit");
    if (!(w["speed_identity"]["relative_error"].get<double>() < 1e-3)) failures.push_back("speed identity off");
    r.passed = failures.empty();
    if (!r.passed) r.report["failures"] = failures;
    std::ostringstream csv;
    wave_csv(p, cfg).write(csv);
    r.csv = csv.str();
    r.files.push_back({"wave.csv", r.csv});
    r.files.push_back({"wave.json", r.report.dump(2) + "\n"});
    return r;
}

// ---------------------------------------------------------------------------
// figure

/// Type letter of a saturated class, "NS" otherwise.
inline std::string short_tag(WaveTag t) {
    switch (t) {
        case WaveTag::SaturatedA: return "A";
        case WaveTag::SaturatedB: return "B";
        case WaveTag::SaturatedC: return "C";
        default: return "NS";
    }
}

struct FigureWave {
    std::string label;
    double alpha = 0.0;
    WaveProfile profile;
};

/// The non-saturated wave followed by one type (a) and two type (c) waves, or
/// the wave for each requested alpha; sorted by increasing alpha.
inline std::vector<FigureWave> figure_waves(const RunConfig& cfg, const ThresholdTable& t) {
    std::vector<FigureWave> out;
    const HTrace small = solve_small(cfg.c, cfg.tol).trace;
    out.push_back({"NS", small.h_at(0.5), reconstruct(small, cfg.tol, cfg.samples)});
    std::vector<double> alphas = cfg.alphas;
    if (alphas.empty()) {
        alphas.push_back(0.5 * (t.h0_half + t.bell_top));
        for (double f : {0.35, 0.7}) alphas.push_back(t.bell_top + f * (t.alpha_max - t.bell_top));
    }
    for (double a : alphas) {
        const HTrace tr = shoot_wave(cfg.c, a, cfg.tol);
        auto p = reconstruct(tr, cfg.tol, cfg.samples);
        out.push_back({short_tag(p.tag) + " alpha=" + io::detail::fmt(a, "%.4g"), a, std::move(p)});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const FigureWave& a, const FigureWave& b) { return a.alpha < b.alpha; });
    return out;
}

/// Plot tolerance for locating profile crossings.
inline constexpr double crossing_tolerance = 0.01;

struct FigureChecks {
    Json crossings = Json::array();
    bool crossings_at_zero = true;
    bool ordering = true;
    bool phase_ordered = true;
    bool below_log_bound = true;
};

inline CommandResult cmd_figure(const RunConfig& cfg) {
    require_wave_speed(cfg.c);
    const auto t = threshold_table(cfg.c, cfg.tol);
    const auto waves = figure_waves(cfg, t);
    const Speed sp = Speed::make(cfg.c);
    CommandResult r;
    r.report = envelope(cfg);
    FigureChecks chk;
    const bool all = cfg.which == "all";

    Json wl = Json::array();
    for (const auto& w : waves)
        wl.push_back({{"label", w.label}, {"class", to_string(w.profile.tag)}, {"alpha", w.alpha},
                      {"z_star", io::number(w.profile.z_star)}});
    r.report["waves"] = wl;

    if (all || cfg.which == "waves") {
        const double z_lo = -3.0, z_hi = 6.0, dz = 0.005;
        const int n = int(std::lround((z_hi - z_lo) / dz)) + 1;
        std::vector<std::vector<double>> u(waves.size(), std::vector<double>(n));
        std::vector<double> z(n);
        for (int i = 0; i < n; ++i) z[i] = z_lo + dz * i;
        io::CsvTable csv;
        csv.comments = provenance_lines(cfg);
        csv.label_column = "curve";
        csv.columns = {"z", "u"};
        io::Plot plot;
        plot.title = "Wave profiles, c = " + io::detail::fmt(cfg.c);
        plot.x_label = "z";
        plot.y_label = "u";
        plot.y_min = 0.0, plot.y_max = 1.0;
        for (std::size_t k = 0; k < waves.size(); ++k) {
            io::Series s{waves[k].label, z, {}};
            for (int i = 0; i < n; ++i) {
                u[k][i] = evaluate_u(waves[k].profile, z[i]);
                csv.add_row({z[i], u[k][i]}, waves[k].label);
            }
            s.y = u[k];
            plot.series.push_back(std::move(s));
        }
        // Each pair crosses once, at z = 0, with the smaller alpha above for z > 0.
        for (std::size_t a = 0; a < waves.size(); ++a)
            for (std::size_t b = a + 1; b < waves.size(); ++b) {
                int changes = 0, prev = 0;
                double at = NAN;
                bool right_order = true;
                for (int i = 0; i < n; ++i) {
                    const double d = u[a][i] - u[b][i];
                    const int s = std::abs(d) <= 1e-12 ? 0 : (d > 0.0 ? 1 : -1);
                    if (s != 0 && prev != 0 && s != prev) {
                        ++changes;
                        at = 0.5 * (z[i] + z[i - 1]);
                    }
                    if (s != 0) prev = s;
                    if (z[i] > crossing_tolerance && s < 0) right_order = false;
                    if (z[i] < -crossing_tolerance && s > 0) right_order = false;
                }
                const bool ok = changes == 1 && std::abs(at) <= crossing_tolerance;
                chk.crossings_at_zero = chk.crossings_at_zero && ok;
                chk.ordering = chk.ordering && right_order;
                chk.crossings.push_back({{"pair", {waves[a].label, waves[b].label}},
                                         {"count", changes},
                                         {"z", io::number(at)},
                                         {"ordered", right_order}});
            }
        std::ostringstream os;
        csv.write(os);
        r.files.push_back({"figure_waves.csv", os.str()});
        r.files.push_back({"figure_waves.svg", svg_with_config(plot, cfg)});
        r.report["crossings"] = chk.crossings;
        r.report["crossings_at_zero"] = chk.crossings_at_zero;
        r.report["ordering"] = chk.ordering;
    }

    auto phase = [&](bool log_scale) {
        std::vector<double> rs;
        if (log_scale)
            for (int i = 0; i <= 1120; ++i) rs.push_back(logistic(-14.0 + 28.0 * i / 1120.0));
        else
            for (int i = 1; i < 1000; ++i) rs.push_back(i / 1000.0);
        io::CsvTable csv;
        csv.comments = provenance_lines(cfg);
        csv.label_column = "curve";
        csv.columns = {"r", "h"};
        io::Plot plot;
        plot.title = std::string("Phase plane") + (log_scale ? " (log scale)" : "") + ", c = " +
                     io::detail::fmt(cfg.c);
        plot.x_label = "r";
        plot.y_label = "h";
        plot.log_x = plot.log_y = log_scale;
        double h_top = 0.0, h_bottom = INFINITY;
        std::vector<std::vector<double>> hs;
        for (const auto& w : waves) {
            std::vector<double> h;
            for (double r0 : rs) h.push_back(w.profile.trace->h_at(r0));
            for (std::size_t i = 0; i < rs.size(); ++i) {
                csv.add_row({rs[i], h[i]}, w.label);
                h_top = std::max(h_top, h[i]);
                if (h[i] > 0.0) h_bottom = std::min(h_bottom, h[i]);
                if (!(h[i] < log_square_bound(cfg.c, rs[i]))) chk.below_log_bound = false;
            }
            plot.series.push_back({w.label, rs, h});
            hs.push_back(std::move(h));
        }
        for (std::size_t k = 1; k < hs.size(); ++k)
            for (std::size_t i = 0; i < rs.size(); ++i)
                if (!(hs[k][i] > hs[k - 1][i])) chk.phase_ordered = false;
        auto reference = [&](const std::string& name, auto&& f) {
            std::vector<double> h;
            for (double r0 : rs) h.push_back(f(r0));
            for (std::size_t i = 0; i < rs.size(); ++i) csv.add_row({rs[i], h[i]}, name);
            plot.series.push_back({name, rs, h, true});
        };
        reference("bell", [&](double r0) { return bell(cfg.c, r0); });
        reference("lambda- bell", [&](double r0) { return lambda_bell(sp.lambda_minus, r0); });
        reference("lambda+ bell", [&](double r0) { return lambda_bell(sp.lambda_plus, r0); });
        reference("c^2 log^2(1-r)", [&](double r0) { return log_square_bound(cfg.c, r0); });
        if (log_scale) {
            plot.y_min = 0.1 * h_bottom;
            plot.y_max = 10.0 * h_top;
        } else {
            plot.y_min = 0.0;
            plot.y_max = 1.15 * h_top;
        }
        const std::string stem = log_scale ? "figure_phase_log" : "figure_phase";
        std::ostringstream os;
        csv.write(os);
        r.files.push_back({stem + ".csv", os.str()});
        r.files.push_back({stem + ".svg", svg_with_config(plot, cfg)});
    };
    if (all || cfg.which == "phase") phase(false);
    if (all || cfg.which == "phase-log") phase(true);
    if (all || cfg.which != "waves") {
        r.report["phase_ordered"] = chk.phase_ordered;
        r.report["below_log_bound"] = chk.below_log_bound;
        r.report["lambda_bells_coincide"] = sp.lambda_plus - sp.lambda_minus <= 1e-12;
    }
    Json files = Json::array();
    for (const auto& f : r.files) files.push_back(f.name);
    r.report["files"] = files;
    r.passed = chk.crossings_at_zero && chk.ordering && chk.phase_ordered && chk.below_log_bound;
    if (!r.passed) r.report["failures"] = Json::array({"figure curves are not ordered as expected"});
    return r;
}

// ---------------------------------------------------------------------------
// verify

inline Json certificate_json(const Certificate& c) {
    return {{"candidate", c.candidate},
            {"kind", c.kind == Inequality::supersolution ? "supersolution" : "subsolution"},
            {"r_lo", c.r_lo},
            {"r_hi", c.r_hi},
            {"samples", c.samples},
            {"min_margin", c.min_margin},
            {"witness_r", c.witness_r},
            {"passed", c.passed}};
}

inline Json suite_subsuper(const RunConfig& cfg) {
    require_wave_speed(cfg.c);
    Json j{{"suite", "subsuper"}, {"c", cfg.c}};
    Json certs = Json::array();
    bool ok = true;
    for (const auto& cc : standard_candidates(cfg.c)) {
        const auto cert = cc.kind == Inequality::supersolution
                              ? check_supersolution(cc.g, cfg.c, cc.r_lo, cc.r_hi)
                              : check_subsolution(cc.g, cfg.c, cc.r_lo, cc.r_hi);
        ok = ok && cert.passed;
        certs.push_back(certificate_json(cert));
    }
    j["certificates"] = certs;
    j["passed"] = ok;
    return j;
}

/// Agreement required between recursions and their closed forms.
inline constexpr double recursion_tolerance = 1e-10;

inline Json suite_recursions(const RunConfig& cfg) {
    Json j{{"suite", "recursions"}, {"c", cfg.c}, {"eps", cfg.eps}};
    bool ok = true, any = false;
    if (cfg.c * (1.0 + cfg.eps) < 2.0) {
        any = true;
        const auto m = bootstrap_Mn(cfg.c, cfg.eps);
        double worst = 0.0;
        for (std::size_t n = 0; n < m.values.size(); ++n)
            worst = std::max(worst, std::abs(m.values[n] - Mn_closed_form(cfg.c, cfg.eps, long(n))));
        const bool pass = worst <= recursion_tolerance;
        ok = ok && pass;
        j["M"] = {{"first_negative", m.first_negative},
                  {"values", io::numbers(m.values)},
                  {"max_closed_form_error", worst},
                  {"passed", pass}};
    }
    if (cfg.c >= 2.0) {
        any = true;
        const double r0 = 0.1;
        const double root = Kn_root(cfg.c, r0);
        const auto k = bootstrap_Kn(cfg.c, r0, root + 1.0);
        const double err = std::abs(k.limit - k.root) / k.root;
        const bool pass = err <= recursion_tolerance;
        ok = ok && pass;
        j["K"] = {{"r0", r0},          {"limit", k.limit},      {"root", k.root},
                  {"iterations", k.iterations}, {"relative_error", err}, {"passed", pass}};
    }
    if (cfg.c > 2.0) {
        any = true;
        const auto e = epsilon_recursion(cfg.c, cfg.eps);
        const double err = std::abs(e.limit - 1.0);
        const bool pass = e.increasing && err <= recursion_tolerance;
        ok = ok && pass;
        j["epsilon"] = {{"eps0", cfg.eps},
                        {"limit", e.limit},
                        {"iterations", e.values.size() - 1},
                        {"increasing", e.increasing},
                        {"passed", pass}};
    }
    if (!any)
        throw CommandError("invalid_argument", "no recursion applies: need c(1+eps) < 2 or c >= 2", exit_usage);
    j["passed"] = ok;
    return j;
}

inline Json suite_residuals(const RunConfig& cfg) {
    require_wave_speed(cfg.c);
    const auto t = threshold_table(cfg.c, cfg.tol);
    std::vector<std::pair<std::string, HTrace>> traces;
    traces.emplace_back("NS", solve_small(cfg.c, cfg.tol).trace);
    traces.emplace_back("A", shoot_wave(cfg.c, 0.5 * (t.h0_half + t.bell_top), cfg.tol));
    traces.emplace_back("B", shoot_wave(cfg.c, t.bell_top, cfg.tol));
    traces.emplace_back("C", shoot_wave(cfg.c, t.bell_top + 0.35 * (t.alpha_max - t.bell_top), cfg.tol));
    traces.emplace_back("H", solve_large_iteration(cfg.c, cfg.tol).trace);
    Json j{{"suite", "residuals"}, {"c", cfg.c}, {"tw_limit", tw_limit}, {"weak_limit", weak_limit}};
    Json list = Json::array();
    bool ok = true;
    for (const auto& [name, tr] : traces) {
        const auto p = reconstruct(tr, cfg.tol, cfg.samples);
        const auto res = residuals(p, cfg.samples, cfg.tol);
        const bool pass = res.tw < tw_limit && res.weak_max < weak_limit;
        ok = ok && pass;
        list.push_back({{"wave", name},
                        {"class", to_string(p.tag)},
                        {"alpha", tr.h_at(0.5)},
                        {"tw", res.tw},
                        {"tw_samples", res.tw_samples},
                        {"weak", io::numbers(res.weak)},
                        {"passed", pass}});
    }
    j["waves"] = list;
    j["passed"] = ok;
    return j;
}

inline constexpr double focusing_slope_lo = 1.8;
inline constexpr double focusing_slope_hi = 2.2;

inline Json suite_focusing(const RunConfig& cfg) {
    const std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
    Json j{{"suite", "focusing"}, {"eps", eps}};
    Json list = Json::array();
    bool ok = true;
    for (const auto& k : {Kernel::gaussian(), Kernel::uniform()}) {
        const auto rep = focusing_order(k, SmoothFunction::gaussian(), eps, cfg.tol);
        const bool pass = rep.slope >= focusing_slope_lo && rep.slope <= focusing_slope_hi;
        ok = ok && pass;
        list.push_back({{"kernel", k.name},
                        {"f", "exp(-x^2)"},
                        {"errors", io::numbers(rep.errors)},
                        {"slope", io::number(rep.slope)},
                        {"passed", pass}});
    }
    {
        const auto rep = focusing_order(Kernel::gaussian(), SmoothFunction::quadratic(), eps, cfg.tol);
        ok = ok && rep.exact;
        list.push_back({{"kernel", "gaussian"},
                        {"f", "x^2"},
                        {"errors", io::numbers(rep.errors)},
                        {"exact", rep.exact},
                        {"passed", rep.exact}});
    }
    {
        bool rejected = false;
        std::string why;
        try {
            focusing_order(Kernel::student_t3(), SmoothFunction::gaussian(), eps, cfg.tol);
        } catch (const DomainError& e) {
            rejected = true;
            why = e.what();
        }
        ok = ok && rejected;
        list.push_back({{"kernel", "student-t3"}, {"rejected", rejected}, {"reason", why}, {"passed", rejected}});
    }
    j["cases"] = list;
    j["slope_range"] = {focusing_slope_lo, focusing_slope_hi};
    j["passed"] = ok;
    return j;
}

inline CommandResult cmd_verify(const RunConfig& cfg) {
    CommandResult r;
    r.report = envelope(cfg);
    Json suites = Json::array();
    Json failures = Json::array();
    auto run = [&](const std::string& name, auto&& fn) {
        if (cfg.suite != "all" && cfg.suite != name) return;
        Json s = fn(cfg);
        if (!s["passed"].get<bool>()) failures.push_back(name);
        suites.push_back(std::move(s));
    };
    run("subsuper", suite_subsuper);
    run("recursions", suite_recursions);
    run("residuals", suite_residuals);
    run("focusing", suite_focusing);
    r.report["suites"] = suites;
    r.passed = failures.empty();
    r.report["passed"] = r.passed;
    if (!r.passed) r.report["failures"] = failures;
    r.files.push_back({"verify.json", r.report.dump(2) + "\n"});
    return r;
}

// ---------------------------------------------------------------------------
// Dispatch

struct Outcome {
    int exit_code = exit_ok;
    std::string out;
    std::string err;
};

inline Json error_record(const std::string& reason, const std::string& message) {
    return {{"schema", report_schema}, {"version", version}, {"status", "error"}, {"reason", reason},
            {"message", message}};
}

inline CommandResult dispatch(const RunConfig& cfg) {
    if (cfg.command == "lambda") return cmd_lambda(cfg);
    if (cfg.command == "classify") return cmd_classify(cfg);
    if (cfg.command == "wave") return cmd_wave(cfg);
    if (cfg.command == "figure") return cmd_figure(cfg);
    if (cfg.command == "verify") return cmd_verify(cfg);
    throw CommandError("invalid_argument", "unknown command '" + cfg.command + "'", exit_usage);
}

/// Runs a resolved command. Files go under cfg.out when set (figure defaults to
/// the working directory); exit code 0 iff every check passed.
inline Outcome run(const RunConfig& cfg) {
    Outcome o;
    try {
        CommandResult r = dispatch(cfg);
        r.report["status"] = r.passed ? "ok" : "failed";
        std::string dir = cfg.out;
        if (dir.empty() && cfg.command == "figure") dir = ".";
        if (!dir.empty()) {
            std::filesystem::create_directories(dir);
            for (const auto& f : r.files) {
                std::ofstream os(std::filesystem::path(dir) / f.name, std::ios::binary);
                os << f.content;
                if (!os) throw CommandError("io_error", "cannot write " + f.name, exit_numerical);
            }
        }
        o.out = r.report.dump(2) + "\n";
        if (cfg.format == "csv" && !r.csv.empty()) o.out = r.csv;
        if (cfg.format != "json" && r.csv.empty()) {
            // First file of that kind in output order; --which selects among them.
            const std::string ext = "." + cfg.format;
            for (const auto& f : r.files)
                if (f.name.ends_with(ext)) {
                    o.out = f.content;
                    break;
                }
        }
        if (!r.passed) {
            o.exit_code = exit_check_failed;
            o.err = error_record("check_failed", "one or more checks failed").dump() + "\n";
        }
    } catch (const CommandError& e) {
        o.exit_code = e.exit_code;
        o.err = error_record(e.reason, e.what()).dump() + "\n";
    } catch (const CertificateFailure& e) {
        o.exit_code = exit_check_failed;
        o.err = error_record("certificate_failed", e.what()).dump() + "\n";
    } catch (const DomainError& e) {
        o.exit_code = exit_usage;
        o.err = error_record("domain_error", e.what()).dump() + "\n";
    } catch (const ConsistencyError& e) {
        o.exit_code = exit_numerical;
        o.err = error_record("consistency_error", e.what()).dump() + "\n";
    } catch (const Error& e) {
        o.exit_code = exit_numerical;
        o.err = error_record("numerical_failure", e.what()).dump() + "\n";
    } catch (const std::exception& e) {
        o.exit_code = exit_numerical;
        o.err = error_record("internal_error", e.what()).dump() + "\n";
    }
    return o;
}

}  // namespace degen_kpp::cli
