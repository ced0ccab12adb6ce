#pragma once

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tunegain/text.hpp"

namespace tunegain::testutil {

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) out += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return out + "'";
}

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

/// Runs the CLI binary with the given arguments, capturing both streams.
inline CliRun run_cli(const std::vector<std::string>& args, const std::filesystem::path& scratch) {
  std::filesystem::create_directories(scratch);
  auto out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  std::string cmd = shell_quote(TUNEGAIN_CLI);
  for (const auto& a : args) cmd += ' ' + shell_quote(a);
  cmd += " >" + shell_quote(out.string()) + " 2>" + shell_quote(err.string());
  int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = text::read_file(out.string());
  r.err = text::read_file(err.string());
  return r;
}

/// File name -> bytes for every regular file in a directory.
inline std::map<std::string, std::string> dir_contents(const std::filesystem::path& dir) {
  std::map<std::string, std::string> m;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file()) m[e.path().filename().string()] = text::read_file(e.path().string());
  return m;
}

}  // namespace tunegain::testutil
