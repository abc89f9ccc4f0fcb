#pragma once

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#ifndef STYLEBENCH_CLI_PATH
#error "STYLEBENCH_CLI_PATH must be defined by the build"
#endif

namespace stylebench::test {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

inline std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char ch : s) {
    if (ch == '\'') q += "'\\''";
    else q += ch;
  }
  return q + "'";
}

/// Runs the stylebench binary with `args`; `env_prefix` is prepended to
/// the shell command line (e.g. "FOO=1 ").
inline CliResult run_cli(const std::vector<std::string>& args, const std::string& env_prefix = "") {
  const auto err_path = std::filesystem::temp_directory_path() /
                        ("stylebench-cli-" + std::to_string(::getpid()) + "-" +
                         std::to_string(reinterpret_cast<std::uintptr_t>(&args)) + ".err");
  std::string cmd = env_prefix + shell_quote(STYLEBENCH_CLI_PATH);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += " 2>" + shell_quote(err_path.string());

  CliResult result;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return result;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) result.out.append(buf.data(), n);
  const int status = ::pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream err(err_path);
  std::ostringstream ss;
  ss << err.rdbuf();
  result.err = ss.str();
  std::error_code ec;
  std::filesystem::remove(err_path, ec);
  return result;
}

}  // namespace stylebench::test
