#pragma once

// Subcommands of the command-line front end. Each takes the arguments after the subcommand
// name and returns a process exit code: 0 on success, 2 on configuration or I/O errors,
// and the CLI11 code on malformed flags.

#include <iosfwd>
#include <string>
#include <vector>

namespace ffcbf::cli {

int cmd_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cmd_compare(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cmd_replay(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
/// Re-executes the batch recorded in a manifest into a new output directory.
int cmd_rerun(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Dispatches argv[1] to a subcommand.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

const char* version();

}  // namespace ffcbf::cli
