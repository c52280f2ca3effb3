#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "sib/program.h"

// Document builders for tests. A one-element brace list like {blk(...)}
// collapses to the element itself in nlohmann::json, so sequences are
// normalized to arrays here.
namespace build {

inline nlohmann::json seq(nlohmann::json blocks) {
  if (blocks.is_object()) return nlohmann::json::array({std::move(blocks)});
  return blocks;
}

inline nlohmann::json doc(const nlohmann::json& blocks) {
  return {{"version", 1}, {"name", "t"}, {"blocks", seq(blocks)}};
}

inline sib::blocks::BlockProgram program(const nlohmann::json& blocks) { return sib::blocks::parse(doc(blocks).dump()); }

inline nlohmann::json blk(const std::string& id, const std::string& kind,
                          nlohmann::json params = nlohmann::json::object(), nlohmann::json children = nullptr) {
  nlohmann::json b{{"id", id}, {"kind", kind}, {"params", std::move(params)}};
  if (!children.is_null()) {
    for (auto& [slot, body] : children.items()) body = seq(body);
    b["children"] = std::move(children);
  }
  return b;
}

}  // namespace build
