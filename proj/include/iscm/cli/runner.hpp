#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "iscm/event.hpp"
#include "iscm/monitor/ensemble.hpp"

namespace iscm::cli {

/// Process exit codes shared by all subcommands.
enum ExitCode : int { kOk = 0, kInputError = 1, kContractBreach = 2 };

/// Event sources: one or more Log CSVs merged by time, plus attribute CSVs.
struct InputOptions {
    std::vector<std::filesystem::path> logs;
    std::vector<std::filesystem::path> attributes;
    std::vector<std::string> column_maps;  ///< `field=header`, see LogColumns::remap
};

struct MonitorOptions {
    InputOptions input;
    std::vector<std::string> constraints;  ///< `catalog:<name>` or a constraint file path
    std::size_t snapshot_every = 500;
    std::size_t batch = 300;
    std::filesystem::path out;
    std::filesystem::path clock_ticks;  ///< empty for none
};

struct CheckOptions {
    InputOptions input;
    std::vector<std::string> constraints;
    std::filesystem::path out;
};

enum class Process { PrintShop, Shipping, Abc };

struct GenerateOptions {
    Process process = Process::PrintShop;
    std::uint64_t seed = 15;
    int flyers = 780;
    int posters = 780;
    int packages = 300;
    int traces = 50;
    std::filesystem::path out;
};

/// Raised for anything that maps to exit code 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Resolves `catalog:<name>` against the built-in catalog, anything else as a file.
monitor::ConstraintEnsemble resolve_constraint(const std::string &spec);

/// Reads, merges and flattens the inputs into a numbered insertion stream.
/// Non-fatal findings land in `notes`.
std::vector<InsertionDelta> load_stream(const InputOptions &input, IngestNotes &notes);

/// Clock-tick file: one timestamp per line; blank lines and `#` comments skipped.
std::vector<Timestamp> load_clock_ticks(const std::filesystem::path &path);

/// Case keys in report files: the key's values joined with `|`.
std::string case_key_text(const Tuple &key);

/// Subcommands. Each returns an ExitCode and writes messages to `err`.
int cmd_monitor(const MonitorOptions &options, std::ostream &err);
int cmd_check(const CheckOptions &options, std::ostream &err);
int cmd_generate(const GenerateOptions &options, std::ostream &err);

/// Argument parsing and dispatch for the `iscmon` executable.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace iscm::cli
