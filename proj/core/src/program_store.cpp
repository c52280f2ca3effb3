#include "sib/program_store.h"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "sib/error.h"

namespace sib::blocks {

namespace fs = std::filesystem;

bool is_valid_program_name(std::string_view name) {
  if (name.empty() || name.size() > 64) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

ProgramStore::ProgramStore(fs::path directory) : dir_(std::move(directory)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error(Errc::StorageFailure, "cannot create program directory " + dir_.string() + ": " + ec.message());
}

fs::path ProgramStore::path_for(std::string_view name) const {
  if (!is_valid_program_name(name)) {
    throw Error(Errc::InvalidName, "invalid program name '" + std::string(name) + "' (expected [A-Za-z0-9_-]{1,64})");
  }
  return dir_ / (std::string(name) + std::string(kProgramExtension));
}

std::string ProgramStore::store(std::string_view name, const BlockProgram& program) const {
  const fs::path target = path_for(name);
  validate(program);
  const std::string bytes = serialize(program);

  std::random_device rd;
  const fs::path tmp = dir_ / ("." + std::string(name) + ".tmp" + std::to_string(rd()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw Error(Errc::StorageFailure, "cannot write " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw Error(Errc::StorageFailure, "cannot replace " + target.string() + ": " + ec.message());
  }
  return std::string(name);
}

std::string ProgramStore::load_bytes(std::string_view name) const {
  const fs::path path = path_for(name);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::NotFound, "no stored program named '" + std::string(name) + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

BlockProgram ProgramStore::load(std::string_view name) const {
  const std::string bytes = load_bytes(name);
  try {
    return parse(bytes);
  } catch (const Error& e) {
    // A stored file that no longer parses is a corrupted program.
    throw Error(Errc::SchemaError, "stored program '" + std::string(name) + "' is corrupted: " + e.what());
  }
}

std::vector<std::string> ProgramStore::list() const {
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir_, ec)) {
    const std::string file = entry.path().filename().string();
    if (file.size() <= kProgramExtension.size() || !file.ends_with(kProgramExtension)) continue;
    std::string name = file.substr(0, file.size() - kProgramExtension.size());
    if (is_valid_program_name(name)) names.push_back(std::move(name));
  }
  std::sort(names.begin(), names.end());
  return names;
}

}  // namespace sib::blocks
