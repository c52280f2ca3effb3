#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sib/program.h"

namespace sib::blocks {

inline constexpr std::string_view kProgramExtension = ".sib.json";

bool is_valid_program_name(std::string_view name);

// Programs live in one directory as <name>.sib.json in canonical form.
class ProgramStore {
 public:
  explicit ProgramStore(std::filesystem::path directory);

  const std::filesystem::path& directory() const { return dir_; }

  // Atomic overwrite (temp file + rename). Returns the stored name.
  std::string store(std::string_view name, const BlockProgram& program) const;
  BlockProgram load(std::string_view name) const;
  // Canonical bytes as stored on disk.
  std::string load_bytes(std::string_view name) const;
  std::vector<std::string> list() const;

 private:
  std::filesystem::path path_for(std::string_view name) const;

  std::filesystem::path dir_;
};

}  // namespace sib::blocks
