#include <CLI11.hpp>

#include <map>
#include <ostream>

#include "iscm/catalog/catalog.hpp"
#include "iscm/cli/runner.hpp"

namespace iscm::cli {

namespace {

void add_input_flags(CLI::App &cmd, InputOptions &input) {
    cmd.add_option("--log", input.logs, "Log CSV (repeatable; merged by timestamp)")->required();
    cmd.add_option("--attrs", input.attributes, "Attribute CSV (repeatable)");
    cmd.add_option("--map", input.column_maps, "Log column mapping field=header (repeatable)");
}

int list_catalog(std::ostream &out) {
    for (const auto &e : catalog::catalog_entries())
        out << e.name << "\t" << monitor::mode_name(e.mode) << "\t" << e.tags.to_string() << "\t" << e.statement
            << "\n";
    return kOk;
}

}  // namespace

int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Compliance monitoring over event streams", "iscmon"};
    app.require_subcommand(1);

    MonitorOptions mon;
    auto *monitor = app.add_subcommand("monitor", "Monitor constraints over an event stream and write reports");
    add_input_flags(*monitor, mon.input);
    monitor->add_option("--constraint", mon.constraints, "catalog:<name> or constraint file (repeatable)")
        ->required();
    monitor->add_option("--snapshot-every", mon.snapshot_every, "Insertions between query-size snapshots")
        ->capture_default_str();
    monitor->add_option("--batch", mon.batch, "Insertions between timing rows")->capture_default_str();
    monitor->add_option("--out", mon.out, "Report directory")->required();
    monitor->add_option("--clock-ticks", mon.clock_ticks, "File of timestamps that advance Now without events");

    CheckOptions chk;
    auto *check = app.add_subcommand("check", "Post-mortem check of a complete log");
    add_input_flags(*check, chk.input);
    check->add_option("--constraint", chk.constraints, "catalog:<name> or constraint file (repeatable)")->required();
    check->add_option("--out", chk.out, "Output directory")->required();

    GenerateOptions gen;
    auto *generate = app.add_subcommand("generate", "Write a synthetic log and attribute CSV");
    const std::map<std::string, Process> processes{
        {"printshop", Process::PrintShop}, {"shipping", Process::Shipping}, {"abc", Process::Abc}};
    generate->add_option("--process", gen.process, "printshop, shipping or abc")
        ->transform(CLI::CheckedTransformer(processes, CLI::ignore_case))
        ->default_str("printshop");
    generate->add_option("--seed", gen.seed)->capture_default_str();
    generate->add_option("--flyers", gen.flyers, "Flyer orders (printshop)")->capture_default_str();
    generate->add_option("--posters", gen.posters, "Poster orders (printshop)")->capture_default_str();
    generate->add_option("--packages", gen.packages, "Packages (shipping)")->capture_default_str();
    generate->add_option("--traces", gen.traces, "Traces (abc)")->capture_default_str();
    generate->add_option("--out", gen.out, "Output directory")->required();

    std::string show_name;
    auto *cat = app.add_subcommand("catalog", "List catalog constraints or print one as a constraint file");
    cat->add_option("name", show_name, "Constraint to print");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError &e) {
        const auto *sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        if (e.get_exit_code() == 0) {
            out << sub->help();
            return kOk;
        }
        err << "error: " << e.what() << "\n";
        return kInputError;
    }

    if (monitor->parsed()) return cmd_monitor(mon, err);
    if (check->parsed()) return cmd_check(chk, err);
    if (generate->parsed()) return cmd_generate(gen, err);
    if (show_name.empty()) return list_catalog(out);
    try {
        out << catalog::lookup(show_name).source;
    } catch (const catalog::NotFoundError &e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    }
    return kOk;
}

}  // namespace iscm::cli
