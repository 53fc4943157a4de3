#include <cstdlib>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "degen_kpp/cli/commands.hpp"

namespace cli = degen_kpp::cli;

int main(int argc, char** argv) {
    CLI::App app{"Travelling waves of the degenerate Fisher-KPP equation (1-u)u'' + cu' + u(1-u) = 0"};
    app.require_subcommand(1);
    app.set_version_flag("--version", degen_kpp::version);

    // Flags are kept as raw key/value pairs so they pass through the same
    // validation as config-file entries, which they override.
    std::vector<std::pair<std::string, std::string>> flags;
    std::string config_path;
    auto flag = [&](CLI::App* sub, const std::string& name, const std::string& key, const std::string& help) {
        return sub->add_option_function<std::string>(
            name, [&flags, key](const std::string& v) { flags.emplace_back(key, v); }, help);
    };
    auto common = [&](CLI::App* sub) {
        flag(sub, "--c", "c", "wave speed");
        flag(sub, "--tol-ode", "tol_ode", "relative ODE tolerance (absolute is 1e-2 of it)");
        flag(sub, "--tol-bisect", "tol_bisect", "relative resolution of threshold bisections");
        flag(sub, "--samples", "samples", "profile samples (wave reconstruction)");
        flag(sub, "--out", "out", "output directory for CSV/JSON/SVG files");
        flag(sub, "--format", "format", "stdout format")->check(CLI::IsMember({"json", "csv", "svg"}));
        sub->add_option("--config", config_path, "key=value config file (default: $DEGEN_KPP_CONFIG)");
    };

    auto* lambda = app.add_subcommand("lambda", "roots of l^2 - c l + 1 and the bell heights");
    common(lambda);
    auto* classify = app.add_subcommand("classify", "threshold table, and the class of --alpha");
    common(classify);
    flag(classify, "--alpha", "alpha", "shooting value h(1/2)");
    auto* wave = app.add_subcommand("wave", "reconstruct one wave profile and report its properties");
    common(wave);
    flag(wave, "--alpha", "alpha", "shooting value h(1/2)");
    flag(wave, "--special", "special", "small: non-saturated wave; large: the maximal solution H; max: alpha_max")
        ->check(CLI::IsMember({"small", "large", "max"}));
    auto* figure = app.add_subcommand("figure", "profile and phase-plane figures as CSV and SVG");
    common(figure);
    flag(figure, "--which", "which", "waves, phase, phase-log or all")
        ->check(CLI::IsMember({"waves", "phase", "phase-log", "all"}));
    flag(figure, "--alphas", "alphas", "comma-separated alphas replacing the default saturated waves");
    auto* verify = app.add_subcommand("verify", "certificates, recursions, residuals and kernel focusing");
    common(verify);
    flag(verify, "--suite", "suite", "subsuper, recursions, residuals, focusing or all")
        ->check(CLI::IsMember({"subsuper", "recursions", "residuals", "focusing", "all"}));
    flag(verify, "--eps", "eps", "perturbation for the M_n and epsilon recursions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << cli::error_record("usage", e.what()).dump() << '\n';
        return cli::exit_usage;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    cli::Outcome o;
    try {
        const auto cfg = cli::resolve_config(command, flags, config_path, std::getenv("DEGEN_KPP_CONFIG"));
        o = cli::run(cfg);
    } catch (const cli::CommandError& e) {
        o.exit_code = e.exit_code;
        o.err = cli::error_record(e.reason, e.what()).dump() + "\n";
    }
    std::cout << o.out;
    std::cerr << o.err;
    return o.exit_code;
}
