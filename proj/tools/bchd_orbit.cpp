#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"

namespace {

using namespace bchd_orbit;

struct Options {
    std::string config;
    std::string out;
    int threads = 0;
    int order = 0;
    std::string method;
    std::vector<std::string> only;
};

void add_common(CLI::App* cmd, Options& o, bool needs_config)
{
    auto* c = cmd->add_option("--config", o.config, "Run configuration file or bundled name (cstr2, cstr3)");
    if (needs_config) c->required();
    cmd->add_option("--out", o.out, "Output directory (default: output.dir of the configuration)");
    cmd->add_option("--threads", o.threads, "Worker threads for grid scans (0: hardware concurrency)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--order", o.order, "Truncation order M")->check(CLI::PositiveNumber);
    cmd->add_option("--method", o.method, "Series construction")->check(CLI::IsMember({"general", "appendix", "recursive"}));
}

RunConfig resolve_config(const std::string& ref)
{
    if (std::filesystem::exists(ref)) return load_config(ref);
    const auto bundled = std::filesystem::path(bundled_config_dir()) / (ref + ".toml");
    if (std::filesystem::exists(bundled)) return load_config(bundled.string());
    throw InvalidArgument("configuration '" + ref + "' not found");
}

cli::Context make_context(const Options& o, std::optional<RunConfig> cfg)
{
    cli::Context ctx;
    if (cfg) ctx.cfg = std::move(*cfg);
    ctx.out = o.out.empty() ? std::filesystem::path(ctx.cfg.output.dir) : std::filesystem::path(o.out);
    ctx.threads = o.threads > 0 ? o.threads : ctx.cfg.output.threads;
    if (o.order > 0) ctx.order = o.order;
    if (!o.method.empty()) ctx.method = o.method;
    return ctx;
}

void setup_logging()
{
    auto logger = spdlog::stderr_color_mt("bchd_orbit");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("BCHD_ORBIT_LOG")) {
        const auto lvl = spdlog::level::from_str(env);
        if (lvl == spdlog::level::off && std::string(env) != "off")
            spdlog::warn("BCHD_ORBIT_LOG: unknown level '{}'", env);
        else
            spdlog::set_level(lvl);
    }
}

} // namespace

int main(int argc, char** argv)
{
    setup_logging();
    CLI::App app{"Periodic orbits of switched control-affine systems via truncated BCH fields"};
    app.require_subcommand(1);
    Options o;
    auto* series = app.add_subcommand("series", "Build a truncated Lie series and write its term dump");
    auto* find = app.add_subcommand("find", "Equilibrium chain of truncated fields and shooting solve");
    auto* certify = app.add_subcommand("certify", "Divergence scans and contraction certificates");
    auto* simulate = app.add_subcommand("simulate", "Trajectories and period samples");
    auto* reproduce = app.add_subcommand("reproduce-paper", "Full pipeline on every bundled case study");
    for (auto* c : {series, find, certify, simulate}) add_common(c, o, true);
    add_common(reproduce, o, false);
    reproduce->add_option("--only", o.only, "Bundled configurations to run")->check(CLI::IsMember({"cstr2", "cstr3"}));
    CLI11_PARSE(app, argc, argv);

    try {
        if (reproduce->parsed()) {
            if (!o.config.empty()) spdlog::warn("reproduce-paper uses the bundled configurations; --config ignored");
            auto ctx = make_context(o, std::nullopt);
            if (o.out.empty()) ctx.out = "out";
            const std::vector<std::string> names = o.only.empty() ? std::vector<std::string>{"cstr2", "cstr3"} : o.only;
            return cli::cmd_reproduce(ctx, names);
        }
        const auto ctx = make_context(o, resolve_config(o.config));
        if (series->parsed()) return cli::cmd_series(ctx);
        if (find->parsed()) return cli::cmd_find(ctx);
        if (certify->parsed()) return cli::cmd_certify(ctx);
        if (simulate->parsed()) return cli::cmd_simulate(ctx);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return cli::kFailure;
    }
    return cli::kFailure;
}
