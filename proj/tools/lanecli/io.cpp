#include "io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "lane/error.hpp"
#include "lane/version.hpp"

namespace fs = std::filesystem;

namespace lanecli {

using lane::Error;
using lane::ErrorKind;

void write_atomic(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorKind::Io, "write failed: " + path);
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::Io, "cannot move into place: " + path);
  }
}

void write_tensor(const std::string& path, const lane::TensorF32& t) {
  std::ostringstream os(std::ios::binary);
  lane::write_aft(os, t);
  write_atomic(path, os.str());
}

lane::TensorF32 read_tensor(const std::string& path) {
  return lane::load_aft(path);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error(ErrorKind::Io, "cannot create directory: " + dir);
  // Probe writability up front so no partial output is left behind.
  const std::string probe = (fs::path(dir) / ".lanecli-probe").string();
  {
    std::ofstream out(probe);
    if (!out) throw Error(ErrorKind::Io, "directory not writable: " + dir);
  }
  fs::remove(probe, ec);
}

std::pair<std::size_t, std::size_t> parse_resolution(const std::string& s) {
  const auto x = s.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    std::size_t used = 0;
    const auto w = std::stoul(s.substr(0, x), &used);
    if (used != x) throw std::invalid_argument(s);
    const auto h = std::stoul(s.substr(x + 1), &used);
    if (used != s.size() - x - 1 || w == 0 || h == 0)
      throw std::invalid_argument(s);
    return {w, h};
  } catch (const std::logic_error&) {
    throw Error(ErrorKind::InvalidArgument,
                "resolution must look like 160x88, got '" + s + "'");
  }
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json j;
  j["tool"] = "lanecli";
  j["version"] = lane::kVersion;
  j["command"] = command;
  j["args"] = args;
  j["config"] = config;
  j["seed"] = seed;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  return j;
}

void Manifest::write(const std::string& path) const {
  write_atomic(path, to_json().dump(2) + "\n");
}

std::string manifest_path_for_dir(const std::string& dir) {
  return (fs::path(dir) / "manifest.json").string();
}

std::string manifest_path_for_file(const std::string& file) {
  return file + ".manifest.json";
}

}  // namespace lanecli
