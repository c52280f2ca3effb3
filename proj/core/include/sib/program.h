#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sib::blocks {

enum class BlockKind {
  TakeoffAll,
  LandAll,
  Navigate,
  ApplyFormation,
  Translate,
  Rotate,
  Scale,
  LedEffect,
  Wait,
  Repeat,
  While,
  If,
  Define,
  Call,
  Prompt,
  SetVar,
};

std::string_view to_string(BlockKind kind);
std::optional<BlockKind> block_kind_from_string(std::string_view name);
bool is_container(BlockKind kind);

enum class CompareOp { Less, LessEqual, Greater, GreaterEqual, Equal, NotEqual };

std::string_view to_string(CompareOp op);

// A literal or, when it holds a string, a variable reference.
using Operand = std::variant<std::int64_t, double, std::string>;

struct Condition {
  Operand lhs;
  CompareOp op = CompareOp::Less;
  Operand rhs;

  friend bool operator==(const Condition&, const Condition&) = default;
};

using Param = std::variant<bool, std::int64_t, double, std::string, Condition>;

struct Block {
  std::string id;
  BlockKind kind = BlockKind::Wait;
  std::map<std::string, Param> params;
  std::map<std::string, std::vector<Block>> children;

  friend bool operator==(const Block&, const Block&) = default;
};

struct BlockProgram {
  int version = 1;
  std::string name;
  std::vector<Block> blocks;

  friend bool operator==(const BlockProgram&, const BlockProgram&) = default;
};

// Parses and validates a program document. Throws Error{SyntaxError} for
// malformed JSON and Error{SchemaError} (message carries block id and path)
// for any constraint violation.
BlockProgram parse(std::string_view document);

// Checks an in-memory program against the same rules parse applies.
void validate(const BlockProgram& program);

// Canonical bytes: sorted keys, no insignificant whitespace, UTF-8.
std::string serialize(const BlockProgram& program);

// Container kinds always carry their declared slots, possibly empty.
std::vector<std::string_view> slot_names(BlockKind kind);

}  // namespace sib::blocks
