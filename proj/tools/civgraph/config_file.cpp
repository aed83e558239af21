#include "config_file.hpp"

#include <algorithm>

#include <json.hpp>

#include "civgraph/binary_io.hpp"
#include "civgraph/error.hpp"

namespace civgraph::cli {

namespace {

std::string scalar_text(const nlohmann::json& v, const std::string& key, const std::string& source) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  throw Error(ErrorKind::format, source + ": value of '" + key + "' must be a string, number or boolean");
}

}  // namespace

void apply_config_file(CLI::App& app, const std::filesystem::path& file) {
  const std::string source = file.string();
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(io::read_file(file));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::format, source + ": " + e.what());
  }
  if (!root.is_object()) throw Error(ErrorKind::format, source + ": top level must be a JSON object");

  for (const auto& [key, value] : root.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option* op = app.get_option_no_throw("--" + name);
    if (op == nullptr || op->count() > 0 || name == "config") continue;
    op->clear();
    if (value.is_array()) {
      for (const auto& item : value) op->add_result(scalar_text(item, key, source));
    } else {
      op->add_result(scalar_text(value, key, source));
    }
    try {
      op->run_callback();
    } catch (const CLI::Error& e) {
      throw Error(ErrorKind::invalid_argument, source + ": '" + key + "': " + e.what());
    }
  }
}

}  // namespace civgraph::cli
