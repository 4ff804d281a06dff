// volxfer: command-line entry point for the volatility transfer experiments.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "volxfer/runner.h"

int main(int argc, char** argv) {
    CLI::App app{"Realized-volatility forecasting for new listings with multi-source transfer learning"};
    app.require_subcommand(1);

    volxfer::runner::RunOptions opts;
    std::size_t threads = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::string period;
    bool verbose = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opts.config, "Experiment config file")->required()->check(CLI::ExistingFile);
        cmd->add_option("--threads", threads, "Worker threads (overrides config)")->check(CLI::PositiveNumber);
        cmd->add_option("--seed", seed, "Root seed (overrides config)");
        cmd->add_option("--out", out, "Output directory (overrides config)");
        cmd->add_option("--period", period, "Only this sample period label, e.g. 50 or 1");
        cmd->add_flag("--verbose", verbose, "Debug logging");
    };
    auto* ingest = app.add_subcommand("ingest", "Build and cache daily records from intraday bars");
    auto* select = app.add_subcommand("select", "Write the MTL selection audit without fitting models");
    auto* forecast = app.add_subcommand("forecast", "Full rolling forecast run with reports");
    auto* report = app.add_subcommand("report", "Rebuild reports from cached forecast records");
    for (auto* cmd : {ingest, select, forecast, report}) add_common(cmd);

    auto* synth = app.add_subcommand("synth", "Generate a synthetic fixture panel and its config");
    volxfer::synth::PanelSpec spec;
    std::string synth_out = "synthetic";
    synth->add_option("--assets", spec.sources, "Number of source assets")->check(CLI::NonNegativeNumber);
    synth->add_option("--targets", spec.targets, "Number of target (new listing) assets")->check(CLI::PositiveNumber);
    synth->add_option("--days", spec.days, "Trading days of source history");
    synth->add_option("--target-days", spec.target_days, "Trading days of each target (default min(days, 600))");
    synth->add_option("--seed", spec.seed, "Generator seed");
    synth->add_option("--out", synth_out, "Directory to write into");
    synth->add_flag("--quick", spec.quick, "Lighter FNN/XGB/MCS settings in the written config");
    synth->add_flag("--verbose", verbose, "Debug logging");

    CLI11_PARSE(app, argc, argv);

    spdlog::set_default_logger(spdlog::stderr_color_mt("volxfer"));
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
    if (threads > 0) opts.threads = threads;
    if (!out.empty()) opts.out = out;
    if (!period.empty()) opts.period = period;

    try {
        if (synth->parsed()) return volxfer::runner::synth(synth_out, spec);
        // --seed is only an override when given explicitly.
        for (auto* cmd : {ingest, select, forecast, report}) {
            if (cmd->parsed() && cmd->count("--seed") > 0) opts.seed = seed;
        }
        if (ingest->parsed()) return volxfer::runner::ingest(opts);
        if (select->parsed()) return volxfer::runner::select(opts);
        if (forecast->parsed()) return volxfer::runner::forecast(opts);
        if (report->parsed()) return volxfer::runner::report(opts);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
    return 1;
}
