#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lane/tensor.hpp"

namespace lanecli {

enum Exit : int { kOk = 0, kInput = 2, kMismatch = 3, kInternal = 4 };

/// Writes to `path.tmp` and renames over `path`.
void write_atomic(const std::string& path, const std::string& bytes);
void write_tensor(const std::string& path, const lane::TensorF32& t);
lane::TensorF32 read_tensor(const std::string& path);

/// Creates `dir` (and parents); Error(Io) if it cannot be created or written.
void ensure_dir(const std::string& dir);

/// "160x88" -> {width, height}.
std::pair<std::size_t, std::size_t> parse_resolution(const std::string& s);

/// Run record kept next to a command's outputs. Holds nothing that varies
/// between identical runs.
struct Manifest {
  std::string command;
  std::vector<std::string> args;  // argv after the program name
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json seed;            // null when the command is seedless
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  nlohmann::json to_json() const;
  void write(const std::string& path) const;
};

/// `<dir>/manifest.json` for directory outputs, `<file>.manifest.json`
/// otherwise.
std::string manifest_path_for_dir(const std::string& dir);
std::string manifest_path_for_file(const std::string& file);

}  // namespace lanecli
