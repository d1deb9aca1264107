// lago <command> --config PATH [--data PATH] [--out DIR] [--seed U64] [--reps N] [--workers N]

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lago/io/commands.hpp"

int main(int argc, char** argv) {
    using namespace lago::io;

    CLI::App app{"Staged adaptive intervention trials: simulate, fit, optimize, confset, bands, analyze"};
    app.set_version_flag("--version", std::string(kVersion));

    std::string command;
    RunRequest req;
    std::string data, out, export_data;
    std::uint64_t seed = 0;
    std::size_t reps = 0;
    int workers = 0;

    app.add_option("command", command, "simulate | fit | optimize | confset | bands | analyze")
        ->required()
        ->check(CLI::IsMember({"simulate", "fit", "optimize", "confset", "bands", "analyze"}));
    app.add_option("--config", req.config_path, "configuration document")->required();
    auto* data_opt = app.add_option("--data", data, "participant CSV");
    auto* out_opt = app.add_option("--out", out, "output directory for the report files");
    auto* seed_opt = app.add_option("--seed", seed, "override simulation.seed");
    auto* reps_opt = app.add_option("--reps", reps, "override simulation.replicates")->check(CLI::PositiveNumber);
    auto* workers_opt = app.add_option("--workers", workers, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    auto* export_opt = app.add_option("--export-data", export_data, "simulate: write replicate 0's data as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        req.command = parse_command(command);
    } catch (const lago::UsageError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    if (*data_opt) req.data_path = data;
    if (*out_opt) req.output_dir = out;
    if (*seed_opt) req.seed = seed;
    if (*reps_opt) req.replicates = reps;
    if (*workers_opt) req.workers = workers;
    if (*export_opt) req.export_data_path = export_data;

    const auto bundle = run_command(req);
    if (bundle.error) std::cerr << "error (" << bundle.error->kind << "): " << bundle.error->message << "\n";

    if (req.output_dir) {
        try {
            emit_report(bundle, *req.output_dir);
        } catch (const lago::Error& e) {
            std::cerr << e.what() << "\n";
            return bundle.error ? bundle.exit_code() : 3;
        }
    }
    if (!bundle.error) std::cout << bundle.summary_text();
    return bundle.exit_code();
}
