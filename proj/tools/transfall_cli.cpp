// Command-line front end: `run` executes a scenario config against a data
// directory; `report` re-renders summaries from a previous run's outputs.

#include "transfall/transfall.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace {

void print_table(const std::vector<transfall::harness::RunReport>& reports,
                 const std::vector<transfall::harness::GroupSummary>& groups) {
    std::printf("%-28s %-14s %10s %10s\n", "scenario", "pipeline", "labeling", "classif.");
    for (const auto& r : reports) {
        if (r.failed)
            std::printf("%-28s %-14s %21s\n", r.name.c_str(), r.pipeline.c_str(), "FAILED");
        else
            std::printf("%-28s %-14s %10.4f %10.4f\n", r.name.c_str(), r.pipeline.c_str(),
                        r.labeling_accuracy, r.classification_accuracy);
    }
    std::printf("\n%-28s %5s %10s %10s %10s %10s\n", "group", "runs", "lab.mean", "lab.p25",
                "lab.p75", "cls.mean");
    for (const auto& g : groups)
        std::printf("%-28s %5d %10.4f %10.4f %10.4f %10.4f\n", g.group.c_str(), g.runs,
                    g.mean_labeling, g.p25_labeling, g.p75_labeling, g.mean_classification);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"TransFall transfer-learning experiment runner"};
    app.require_subcommand(1);

    std::string config_path, data_dir, out_dir, in_dir;
    std::optional<std::uint64_t> seed_override;
    int workers = 1;

    auto* run = app.add_subcommand("run", "execute scenarios from a config file");
    run->add_option("--config", config_path, "scenario config (JSON)")->required();
    run->add_option("--data", data_dir, "directory of CSV datasets")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--seed", seed_override, "override every scenario seed");
    run->add_option("--workers", workers, "concurrent runs")->check(CLI::PositiveNumber);

    auto* report = app.add_subcommand("report", "re-render summaries from run outputs");
    report->add_option("--in", in_dir, "directory produced by `run`")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            auto cfg = transfall::harness::load_config(config_path);
            if (seed_override)
                for (auto& s : cfg.scenarios) s.hyper.seed = *seed_override;
            const auto reports =
                transfall::harness::run_matrix(cfg.scenarios, data_dir, workers, cfg.schema);
            std::filesystem::create_directories(out_dir);
            for (const auto& r : reports) transfall::harness::write_run_outputs(r, out_dir);
            const auto groups = transfall::harness::summarize(reports);
            transfall::harness::write_summary_csv(groups,
                                                  std::filesystem::path(out_dir) / "summary.csv");
            print_table(reports, groups);
            for (const auto& r : reports)
                if (r.failed) {
                    std::fprintf(stderr, "run %s failed: %s\n", r.name.c_str(), r.error.c_str());
                    return 1;
                }
        } else if (*report) {
            const auto reports = transfall::harness::load_reports(in_dir);
            const auto groups = transfall::harness::summarize(reports);
            transfall::harness::write_summary_csv(groups,
                                                  std::filesystem::path(in_dir) / "summary.csv");
            print_table(reports, groups);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
