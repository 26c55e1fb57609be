#include "condlim/model_io.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "condlim/error.hpp"

namespace condlim {

using nlohmann::json;

namespace {

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

std::vector<int> parse_key(const std::string& key, int m, int d, int k) {
  auto bar = key.find('|');
  std::string past = bar == std::string::npos ? "" : key.substr(0, bar);
  std::string fut = bar == std::string::npos ? key : key.substr(bar + 1);
  if (static_cast<int>(past.size()) != m || static_cast<int>(fut.size()) != d)
    throw ConfigError("window key \"" + key + "\" does not match depths (" + std::to_string(m) + "," +
                      std::to_string(d) + ")");
  std::vector<int> w;
  for (char c : past + fut) {
    if (c < '0' || c > '9' || c - '0' >= k) throw ConfigError("bad symbol in window key \"" + key + "\"");
    w.push_back(c - '0');
  }
  return w;
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
  }
}

}  // namespace

ModelFile parse_model(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON at " + line_col(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
  }
  try {
    if (!j.is_object()) throw ConfigError("model must be a JSON object");
    check_keys(j, {"alphabet_size", "transition", "functions", "description"}, "model");
    const int k = j.at("alphabet_size").get<int>();
    if (k < 1 || k > 10) throw ConfigError("alphabet_size must be in 1..10");
    const auto& t = j.at("transition");
    if (!t.is_array() || static_cast<int>(t.size()) != k) throw ConfigError("transition must be a k x k array");
    Eigen::MatrixXi M(k, k);
    for (int a = 0; a < k; ++a) {
      if (!t[static_cast<std::size_t>(a)].is_array() || static_cast<int>(t[static_cast<std::size_t>(a)].size()) != k)
        throw ConfigError("transition must be a k x k array");
      for (int b = 0; b < k; ++b) M(a, b) = t[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)].get<int>();
    }
    ModelFile mf;
    mf.spec = SubshiftSpec(k, M);
    for (const auto& fj : j.at("functions")) {
      check_keys(fj, {"name", "past_depth", "future_depth", "values", "default"}, "function");
      std::string name = fj.at("name").get<std::string>();
      int m = fj.value("past_depth", 0), d = fj.at("future_depth").get<int>();
      if (mf.functions.count(name)) throw ConfigError("duplicate function \"" + name + "\"");
      const json& vals = fj.at("values");
      std::map<std::vector<int>, double> given;
      for (auto it = vals.begin(); it != vals.end(); ++it) given[parse_key(it.key(), m, d, k)] = it.value().get<double>();
      bool has_default = fj.contains("default");
      double def = has_default ? fj.at("default").get<double>() : 0.0;
      std::string missing;
      RealFunction f = RealFunction::generate(mf.spec, m, d, [&](const int* w) {
        std::vector<int> key(w, w + m + d);
        auto it = given.find(key);
        if (it != given.end()) return it->second;
        if (!has_default && missing.empty()) missing = window_key(w, m, d);
        return def;
      });
      if (!missing.empty()) throw ConfigError("function \"" + name + "\" has no value for window " + missing);
      mf.functions.emplace(name, std::move(f));
    }
    if (!mf.functions.count("psi")) throw ConfigError("model has no function named \"psi\"");
    if (!mf.functions.at("psi").future_only()) throw ConfigError("psi must depend on the future only");
    return mf;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid model: ") + e.what());
  }
}

ModelFile load_model(const std::string& path) { return parse_model(read_file(path)); }

std::string model_to_json(const ModelFile& m) {
  std::ostringstream os;
  os << std::setprecision(17);
  const int k = m.spec.alphabet_size();
  os << "{\n  \"alphabet_size\": " << k << ",\n  \"transition\": [";
  for (int a = 0; a < k; ++a) {
    os << (a ? ", " : "") << "[";
    for (int b = 0; b < k; ++b) os << (b ? ", " : "") << m.spec.transition()(a, b);
    os << "]";
  }
  os << "],\n  \"functions\": [";
  bool first = true;
  // psi first, then the rest alphabetically.
  std::vector<std::string> names{"psi"};
  for (const auto& [name, f] : m.functions)
    if (name != "psi") names.push_back(name);
  for (const auto& name : names) {
    auto it = m.functions.find(name);
    if (it == m.functions.end()) continue;
    const RealFunction& f = it->second;
    os << (first ? "" : ",") << "\n    {\"name\": \"" << name << "\", \"past_depth\": " << f.past_depth()
       << ", \"future_depth\": " << f.future_depth() << ", \"values\": {";
    first = false;
    std::vector<int> buf(static_cast<std::size_t>(f.window_length()));
    bool fv = true;
    for (std::size_t i : f.space().admissible()) {
      f.space().decode(i, buf.data());
      std::string key = window_key(buf.data(), f.past_depth(), f.future_depth());
      if (f.past_depth() == 0) key.erase(0, 1);
      os << (fv ? "" : ", ") << "\"" << key << "\": " << f.at(i);
      fv = false;
    }
    os << "}}";
  }
  os << "\n  ]\n}\n";
  return os.str();
}

const RealFunction& model_function(const ModelFile& m, const std::string& name) {
  auto it = m.functions.find(name);
  if (it == m.functions.end()) throw ConfigError("model has no function named \"" + name + "\"");
  return it->second;
}

GibbsModel gibbs_model(const ModelFile& m, const NormalizeOptions& opts) {
  return normalize_potential(model_function(m, "psi"), opts);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp);
    out << content;
    if (!out) throw ConfigError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw ConfigError("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

}  // namespace condlim
