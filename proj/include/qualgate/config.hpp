#ifndef QUALGATE_CONFIG_HPP_
#define QUALGATE_CONFIG_HPP_

// INI-style configuration files backed by boost::property_tree.
//
//   ; comment
//   seed = 7
//   [section]
//   key = value
//
// Section names may contain dots (e.g. [source.wiki]); lookups go through
// Config::section() rather than ptree path syntax for that reason.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qualgate/csv.hpp"
#include "qualgate/errors.hpp"

namespace qualgate {

class Config {
 public:
  using Tree = boost::property_tree::ptree;

  Config() = default;
  explicit Config(Tree tree) : tree_(std::move(tree)) {}

  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path);
    return parse(in, path);
  }

  static Config from_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in, "<string>");
  }

  /// Top-level keys live in the unnamed section "".
  std::optional<std::string> get(const std::string& section,
                                 const std::string& key) const {
    const Tree* node = find_section(section);
    if (node == nullptr) return std::nullopt;
    auto child = node->get_child_optional(Tree::path_type(key, '\0'));
    if (!child || !child->empty()) return std::nullopt;
    return child->data();
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    return get(section, key).value_or(fallback);
  }

  double get_double(const std::string& section, const std::string& key,
                    double fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    auto parsed = csv::parse_optional_double(*v, 0, section + "." + key);
    if (!parsed) throw ConfigError("empty value for " + section + "." + key);
    return *parsed;
  }

  long long get_int(const std::string& section, const std::string& key,
                    long long fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    try {
      std::size_t used = 0;
      const long long out = std::stoll(*v, &used);
      if (used != v->size()) throw std::invalid_argument(*v);
      return out;
    } catch (const std::exception&) {
      throw ConfigError("expected an integer for " + section + "." + key +
                        ", got '" + *v + "'");
    }
  }

  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const {
    auto v = get(section, key);
    if (!v) return fallback;
    if (*v == "true" || *v == "yes" || *v == "1") return true;
    if (*v == "false" || *v == "no" || *v == "0") return false;
    throw ConfigError("expected a boolean for " + section + "." + key +
                      ", got '" + *v + "'");
  }

  void set(const std::string& section, const std::string& key,
           const std::string& value) {
    Tree& node = section.empty() ? tree_ : ensure_section(section);
    node.put(Tree::path_type(key, '\0'), value);
  }

  /// Names of sections starting with `prefix`, in file order.
  std::vector<std::string> sections_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [name, child] : tree_)
      if (!child.empty() && name.rfind(prefix, 0) == 0) out.push_back(name);
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config " + path);
    out << to_string();
  }

  std::string to_string() const {
    std::ostringstream out;
    boost::property_tree::ini_parser::write_ini(out, tree_);
    return out.str();
  }

  const Tree& tree() const noexcept { return tree_; }

 private:
  static Config parse(std::istream& in, const std::string& name) {
    Tree tree;
    try {
      boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError(name + ":" + std::to_string(e.line()) + ": " +
                        e.message());
    }
    return Config(std::move(tree));
  }

  const Tree* find_section(const std::string& section) const {
    if (section.empty()) return &tree_;
    auto it = tree_.find(section);
    if (it == tree_.not_found()) return nullptr;
    return &it->second;
  }

  Tree& ensure_section(const std::string& section) {
    auto it = tree_.find(section);
    if (it != tree_.not_found()) return tree_.to_iterator(it)->second;
    return tree_.push_back({section, Tree{}})->second;
  }

  Tree tree_;
};

}  // namespace qualgate

#endif  // QUALGATE_CONFIG_HPP_
