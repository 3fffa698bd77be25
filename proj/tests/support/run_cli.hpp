#pragma once

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "support/temp_dir.hpp"

namespace parkcharge::test {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

// Runs the command-line tool with `args` (already shell-quoted) and an
// optional environment prefix such as "PARKCHARGE_OUT=/tmp/x".
inline CliResult run_cli(const std::filesystem::path& cli, const std::string& args,
                         const TempDir& scratch, const std::string& env = "") {
  const auto out = scratch / "stdout.txt";
  const auto err = scratch / "stderr.txt";
  const std::string cmd = (env.empty() ? "" : env + " ") + "'" + cli.string() + "' " + args + " >'" +
                          out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

}  // namespace parkcharge::test
