#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vaknh/system.hpp"

namespace vaknh {

/// Names of the built-in systems, sorted.
std::vector<std::string> catalog_names();

/// System-file text of a built-in model. Throws InputError listing the
/// catalog for unknown names.
std::string_view catalog_source(const std::string& name);

/// First comment line of the model file.
std::string catalog_description(const std::string& name);

/// Loads a built-in model, optionally overriding its parameters.
SystemDef builtin(const std::string& name, const std::map<std::string, double>& params = {});

/// A path to an existing file is loaded as a system file; anything else is
/// looked up in the catalog.
SystemDef resolve_system(const std::string& path_or_name, const std::map<std::string, double>& params = {});

}  // namespace vaknh
