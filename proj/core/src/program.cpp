#include "sib/program.h"

#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <utility>

#include <nlohmann/json.hpp>

#include "sib/drone.h"
#include "sib/error.h"
#include "sib/geometry.h"

namespace sib::blocks {
namespace {

using nlohmann::json;

enum class ParamType { Int, Number, Text, Ident, Cond, FormationName, EffectName, GroupName, SetMode };

struct ParamRule {
  std::string_view name;
  ParamType type;
  bool required = true;
};

struct KindInfo {
  BlockKind kind;
  std::string_view name;
  std::vector<ParamRule> params;
  std::vector<std::string_view> slots;
};

const std::vector<KindInfo>& kind_table() {
  using enum ParamType;
  static const std::vector<KindInfo> table{
      {BlockKind::TakeoffAll, "TakeoffAll", {{"z", Number}}, {}},
      {BlockKind::LandAll, "LandAll", {}, {}},
      {BlockKind::Navigate,
       "Navigate",
       {{"drone", Int}, {"x", Number}, {"y", Number}, {"z", Number}, {"speed", Number}},
       {}},
      {BlockKind::ApplyFormation,
       "ApplyFormation",
       {{"kind", FormationName}, {"n", Int}, {"size", Number}, {"height", Number, false}, {"altitude", Number}},
       {}},
      {BlockKind::Translate, "Translate", {{"dx", Number}, {"dy", Number}, {"dz", Number}}, {}},
      {BlockKind::Rotate, "Rotate", {{"angle", Number}}, {}},
      {BlockKind::Scale, "Scale", {{"factor", Number}}, {}},
      {BlockKind::LedEffect,
       "LedEffect",
       {{"effect", EffectName}, {"group", GroupName}, {"r", Int}, {"g", Int}, {"b", Int}, {"rate", Number}},
       {}},
      {BlockKind::Wait, "Wait", {{"seconds", Number}}, {}},
      {BlockKind::Repeat, "Repeat", {{"count", Int}}, {"body"}},
      {BlockKind::While, "While", {{"cond", Cond}}, {"body"}},
      {BlockKind::If, "If", {{"cond", Cond}}, {"body", "else"}},
      {BlockKind::Define, "Define", {{"name", Ident}}, {"body"}},
      {BlockKind::Call, "Call", {{"name", Ident}}, {}},
      {BlockKind::Prompt, "Prompt", {{"var", Ident}, {"message", Text}}, {}},
      {BlockKind::SetVar, "SetVar", {{"var", Ident}, {"value", Number}, {"op", SetMode, false}}, {}},
  };
  return table;
}

const KindInfo& info(BlockKind kind) {
  for (const auto& k : kind_table()) {
    if (k.kind == kind) return k;
  }
  throw Error(Errc::SchemaError, "unknown block kind");
}

bool is_identifier(std::string_view s) {
  if (s.empty() || s.size() > 64) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  if (!alpha(s.front())) return false;
  for (char c : s) {
    if (!alpha(c) && !(c >= '0' && c <= '9')) return false;
  }
  return true;
}

[[noreturn]] void schema_error(std::string_view block_id, const std::string& path, const std::string& what) {
  std::string msg = "block '" + std::string(block_id) + "' at " + path + ": " + what;
  if (block_id.empty()) msg = path + ": " + what;
  throw Error(Errc::SchemaError, msg);
}

const std::map<std::string_view, CompareOp>& op_names() {
  static const std::map<std::string_view, CompareOp> names{
      {"<", CompareOp::Less},   {"<=", CompareOp::LessEqual}, {">", CompareOp::Greater},
      {">=", CompareOp::GreaterEqual}, {"==", CompareOp::Equal}, {"!=", CompareOp::NotEqual}};
  return names;
}

std::optional<double> literal_number(const Param& p) {
  if (const auto* i = std::get_if<std::int64_t>(&p)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&p)) return *d;
  return std::nullopt;
}

bool valid_operand(const Operand& o) {
  if (const auto* s = std::get_if<std::string>(&o)) return is_identifier(*s);
  if (const auto* d = std::get_if<double>(&o)) return std::isfinite(*d);
  return true;
}

void check_param_type(const Block& b, const std::string& path, const ParamRule& rule, const Param& p) {
  const std::string where = path + ".params." + std::string(rule.name);
  auto fail = [&](const std::string& what) { schema_error(b.id, where, what); };
  const auto* text = std::get_if<std::string>(&p);
  switch (rule.type) {
    case ParamType::Int:
      if (!std::holds_alternative<std::int64_t>(p)) fail("expected an integer");
      break;
    case ParamType::Number:
      if (text) {
        if (!is_identifier(*text)) fail("expected a number or variable name");
      } else if (auto v = literal_number(p); !v || !std::isfinite(*v)) {
        fail("expected a number or variable name");
      }
      break;
    case ParamType::Text:
      if (!text) fail("expected a string");
      break;
    case ParamType::Ident:
      if (!text || !is_identifier(*text)) fail("expected an identifier");
      break;
    case ParamType::Cond: {
      const auto* c = std::get_if<Condition>(&p);
      if (!c) fail("expected a condition");
      if (!valid_operand(c->lhs) || !valid_operand(c->rhs)) fail("condition operands must be numbers or variables");
      break;
    }
    case ParamType::FormationName:
      if (!text) fail("expected a formation kind");
      try {
        geom::formation_kind_from_string(*text);
      } catch (const Error&) {
        fail("unknown formation kind '" + *text + "'");
      }
      break;
    case ParamType::EffectName:
      if (!text || !sim::effect_from_string(*text)) fail("unknown LED effect");
      break;
    case ParamType::GroupName:
      if (!text || !sim::group_from_string(*text)) fail("unknown LED group");
      break;
    case ParamType::SetMode:
      if (!text || (*text != "set" && *text != "add")) fail("expected \"set\" or \"add\"");
      break;
  }
}

// Range checks that apply when the parameter is a literal.
void check_literal_ranges(const Block& b, const std::string& path) {
  auto num = [&](std::string_view key) -> std::optional<double> {
    auto it = b.params.find(std::string(key));
    return it == b.params.end() ? std::nullopt : literal_number(it->second);
  };
  auto require = [&](std::string_view key, bool ok, const std::string& what) {
    if (!ok) schema_error(b.id, path + ".params." + std::string(key), what);
  };
  switch (b.kind) {
    case BlockKind::Navigate:
      require("drone", *num("drone") >= -1, "drone must be -1 (all) or a drone id");
      if (auto s = num("speed")) require("speed", *s > 0, "speed must be positive");
      break;
    case BlockKind::ApplyFormation:
      require("n", *num("n") >= 1, "n must be at least 1");
      if (auto s = num("size")) require("size", *s > 0, "size must be positive");
      if (auto h = num("height")) require("height", *h > 0, "height must be positive");
      break;
    case BlockKind::Scale:
      if (auto f = num("factor")) require("factor", *f > 0, "factor must be positive");
      break;
    case BlockKind::LedEffect:
      for (auto ch : {"r", "g", "b"}) require(ch, *num(ch) >= 0 && *num(ch) <= 255, "channel must be in 0..255");
      if (auto r = num("rate")) require("rate", *r > 0, "rate must be positive");
      break;
    case BlockKind::Wait:
      if (auto s = num("seconds")) require("seconds", *s >= 0, "seconds must be nonnegative");
      break;
    case BlockKind::Repeat:
      require("count", *num("count") >= 0, "count must be a nonnegative integer");
      break;
    default:
      break;
  }
}

void validate_block(const Block& b, const std::string& path, std::set<std::string>& ids,
                    std::set<std::string>& defines, std::vector<std::pair<std::string, std::string>>& calls) {
  if (b.id.empty()) schema_error("", path + ".id", "block id must be a nonempty string");
  if (!ids.insert(b.id).second) schema_error(b.id, path + ".id", "duplicate block id");

  const KindInfo& k = info(b.kind);
  for (const auto& rule : k.params) {
    auto it = b.params.find(std::string(rule.name));
    if (it == b.params.end()) {
      if (rule.required) schema_error(b.id, path + ".params", "missing parameter '" + std::string(rule.name) + "'");
      continue;
    }
    check_param_type(b, path, rule, it->second);
  }
  for (const auto& [name, value] : b.params) {
    bool known = false;
    for (const auto& rule : k.params) known = known || rule.name == name;
    if (!known) schema_error(b.id, path + ".params." + name, "unknown parameter for " + std::string(k.name));
  }
  check_literal_ranges(b, path);

  for (const auto& [slot, blocks] : b.children) {
    bool known = false;
    for (auto s : k.slots) known = known || s == slot;
    if (!known) {
      schema_error(b.id, path + ".children." + slot,
                   k.slots.empty() ? std::string(k.name) + " cannot have children" : "unknown child slot");
    }
  }
  for (auto s : k.slots) {
    if (!b.children.contains(std::string(s))) schema_error(b.id, path + ".children", "missing slot '" + std::string(s) + "'");
  }

  if (b.kind == BlockKind::Define) {
    const auto& name = std::get<std::string>(b.params.at("name"));
    if (!defines.insert(name).second) schema_error(b.id, path + ".params.name", "procedure '" + name + "' defined twice");
  }
  if (b.kind == BlockKind::Call) calls.emplace_back(b.id, std::get<std::string>(b.params.at("name")));

  for (const auto& [slot, blocks] : b.children) {
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      validate_block(blocks[i], path + ".children." + slot + "[" + std::to_string(i) + "]", ids, defines, calls);
    }
  }
}

// --- JSON mapping -----------------------------------------------------------

Operand operand_from_json(const json& j, const std::string& where) {
  if (j.is_number_integer()) {
    if (j.is_number_unsigned() && j.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      schema_error("", where, "integer out of range");
    }
    return j.get<std::int64_t>();
  }
  if (j.is_number_float()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  schema_error("", where, "expected a number or variable name");
}

json operand_to_json(const Operand& o) {
  return std::visit([](const auto& v) { return json(v); }, o);
}

Param param_from_json(const json& j, const std::string& block_id, const std::string& where) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer() || j.is_number_float()) {
    Operand o = operand_from_json(j, where);
    if (auto* i = std::get_if<std::int64_t>(&o)) return *i;
    return std::get<double>(o);
  }
  if (j.is_string()) return j.get<std::string>();
  if (j.is_object()) {
    for (const auto& [key, _] : j.items()) {
      if (key != "lhs" && key != "op" && key != "rhs") schema_error(block_id, where + "." + key, "unknown condition field");
    }
    if (!j.contains("lhs") || !j.contains("op") || !j.contains("rhs")) {
      schema_error(block_id, where, "condition needs lhs, op and rhs");
    }
    Condition c;
    c.lhs = operand_from_json(j["lhs"], where + ".lhs");
    c.rhs = operand_from_json(j["rhs"], where + ".rhs");
    const auto& op = j["op"];
    if (!op.is_string() || !op_names().contains(op.get<std::string>())) {
      schema_error(block_id, where + ".op", "unknown comparison operator");
    }
    c.op = op_names().at(op.get<std::string>());
    return c;
  }
  schema_error(block_id, where, "unsupported parameter value");
}

json param_to_json(const Param& p) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Condition>) {
          return json{{"lhs", operand_to_json(v.lhs)}, {"op", std::string(to_string(v.op))}, {"rhs", operand_to_json(v.rhs)}};
        } else {
          return json(v);
        }
      },
      p);
}

Block block_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) schema_error("", path, "block must be an object");
  Block b;
  if (!j.contains("id") || !j["id"].is_string()) schema_error("", path + ".id", "block id must be a string");
  b.id = j["id"].get<std::string>();
  for (const auto& [key, _] : j.items()) {
    if (key != "id" && key != "kind" && key != "params" && key != "children") {
      schema_error(b.id, path + "." + key, "unknown block field");
    }
  }
  if (!j.contains("kind") || !j["kind"].is_string()) schema_error(b.id, path + ".kind", "block kind must be a string");
  const auto kind = block_kind_from_string(j["kind"].get<std::string>());
  if (!kind) schema_error(b.id, path + ".kind", "unknown block kind '" + j["kind"].get<std::string>() + "'");
  b.kind = *kind;

  if (j.contains("params")) {
    if (!j["params"].is_object()) schema_error(b.id, path + ".params", "params must be an object");
    for (const auto& [key, value] : j["params"].items()) {
      b.params.emplace(key, param_from_json(value, b.id, path + ".params." + key));
    }
  }
  if (j.contains("children")) {
    if (!j["children"].is_object()) schema_error(b.id, path + ".children", "children must be an object");
    for (const auto& [slot, list] : j["children"].items()) {
      if (!list.is_array()) schema_error(b.id, path + ".children." + slot, "child slot must be an array");
      auto& out = b.children[slot];
      for (std::size_t i = 0; i < list.size(); ++i) {
        out.push_back(block_from_json(list[i], path + ".children." + slot + "[" + std::to_string(i) + "]"));
      }
    }
  }
  // Declared slots may be omitted in hand-written documents.
  if (is_container(b.kind)) {
    for (auto s : slot_names(b.kind)) b.children.try_emplace(std::string(s));
  }
  return b;
}

json block_to_json(const Block& b) {
  json params = json::object();
  for (const auto& [k, v] : b.params) params[k] = param_to_json(v);
  json children = json::object();
  for (const auto& [slot, list] : b.children) {
    json arr = json::array();
    for (const auto& child : list) arr.push_back(block_to_json(child));
    children[slot] = std::move(arr);
  }
  return {{"id", b.id}, {"kind", std::string(to_string(b.kind))}, {"params", std::move(params)},
          {"children", std::move(children)}};
}

}  // namespace

std::string_view to_string(BlockKind kind) { return info(kind).name; }

std::optional<BlockKind> block_kind_from_string(std::string_view name) {
  for (const auto& k : kind_table()) {
    if (k.name == name) return k.kind;
  }
  return std::nullopt;
}

bool is_container(BlockKind kind) { return !info(kind).slots.empty(); }

std::vector<std::string_view> slot_names(BlockKind kind) { return info(kind).slots; }

std::string_view to_string(CompareOp op) {
  for (const auto& [name, value] : op_names()) {
    if (value == op) return name;
  }
  return "<";
}

void validate(const BlockProgram& program) {
  if (program.version != 1) schema_error("", "version", "unsupported version " + std::to_string(program.version));
  std::set<std::string> ids;
  std::set<std::string> defines;
  std::vector<std::pair<std::string, std::string>> calls;
  for (std::size_t i = 0; i < program.blocks.size(); ++i) {
    validate_block(program.blocks[i], "blocks[" + std::to_string(i) + "]", ids, defines, calls);
  }
  for (const auto& [block_id, target] : calls) {
    if (!defines.contains(target)) {
      schema_error(block_id, "params.name", "Call targets undefined procedure '" + target + "'");
    }
  }
}

BlockProgram parse(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw Error(Errc::SyntaxError, std::string("malformed program document: ") + e.what());
  }
  if (!doc.is_object()) schema_error("", "$", "program must be a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (key != "version" && key != "name" && key != "blocks") schema_error("", key, "unknown top-level field");
  }
  BlockProgram p;
  if (!doc.contains("version") || !doc["version"].is_number_integer()) schema_error("", "version", "version must be an integer");
  if (doc["version"].get<std::int64_t>() != 1) schema_error("", "version", "unsupported version");
  if (!doc.contains("name") || !doc["name"].is_string()) schema_error("", "name", "name must be a string");
  if (!doc.contains("blocks") || !doc["blocks"].is_array()) schema_error("", "blocks", "blocks must be an array");
  p.name = doc["name"].get<std::string>();
  const auto& blocks = doc["blocks"];
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    p.blocks.push_back(block_from_json(blocks[i], "blocks[" + std::to_string(i) + "]"));
  }
  validate(p);
  return p;
}

std::string serialize(const BlockProgram& program) {
  json blocks = json::array();
  for (const auto& b : program.blocks) blocks.push_back(block_to_json(b));
  const json doc{{"blocks", std::move(blocks)}, {"name", program.name}, {"version", program.version}};
  return doc.dump(-1, ' ', false, json::error_handler_t::strict);
}

}  // namespace sib::blocks
