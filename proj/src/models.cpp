#include "vaknh/models.hpp"

#include <algorithm>
#include <filesystem>
#include <utility>

namespace vaknh {

namespace detail {
// Generated from models/*.sys at configure time.
extern const std::vector<std::pair<std::string_view, std::string_view>> kModelSources;
}  // namespace detail

std::vector<std::string> catalog_names() {
  std::vector<std::string> out;
  for (const auto& [name, text] : detail::kModelSources) out.emplace_back(name);
  std::sort(out.begin(), out.end());
  return out;
}

std::string_view catalog_source(const std::string& name) {
  for (const auto& [n, text] : detail::kModelSources)
    if (n == name) return text;
  std::string list;
  for (const auto& n : catalog_names()) list += (list.empty() ? "" : ", ") + n;
  throw InputError("unknown model '" + name + "'; available: " + list);
}

std::string catalog_description(const std::string& name) {
  const std::string_view text = catalog_source(name);
  const auto hash = text.find('#');
  if (hash == std::string_view::npos) return {};
  const auto nl = text.find('\n', hash);
  std::string line(text.substr(hash + 1, nl == std::string_view::npos ? std::string_view::npos : nl - hash - 1));
  line.erase(0, line.find_first_not_of(' '));
  return line;
}

SystemDef builtin(const std::string& name, const std::map<std::string, double>& params) {
  SystemDef sys = load_system(catalog_source(name));
  return params.empty() ? sys : with_params(sys, params);
}

SystemDef resolve_system(const std::string& path_or_name, const std::map<std::string, double>& params) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(path_or_name, ec)) {
    SystemDef sys = load_system_file(path_or_name);
    return params.empty() ? sys : with_params(sys, params);
  }
  return builtin(path_or_name, params);
}

}  // namespace vaknh
