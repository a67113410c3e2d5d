#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "asalpp/loop/search_loop.hpp"
#include "asalpp/tree/phylo_tree.hpp"

namespace asalpp {

/// Parsed top-level configuration file. The "tree" section is optional and
/// only required by the tree command.
struct ConfigDocument {
  RunConfig run;
  std::optional<TreeConfig> tree;  // tree.base mirrors run
};

/// Strict parse: any unknown key anywhere in the document is a hard error
/// naming the offending key (no silent defaults for typos).
ConfigDocument config_from_json(const nlohmann::json& j);

/// Canonical serialization with every default materialized; parsing the
/// result yields an equal document.
nlohmann::json config_to_json(const ConfigDocument& doc);

nlohmann::json load_json_file(const std::string& path);

/// Applies a "dotted.key=value" override in place; the value is parsed as a
/// JSON literal when possible, otherwise taken as a string.
void apply_override(nlohmann::json& config, const std::string& assignment);

}  // namespace asalpp
