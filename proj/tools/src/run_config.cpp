#include "run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

namespace sp2net::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool is_bare_key(const std::string& k) {
  return !k.empty() && std::all_of(k.begin(), k.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

class LineParser {
 public:
  LineParser(std::string_view text, std::string where) : s_(text), where_(std::move(where)) {}

  Value value() {
    skip_ws();
    if (peek() == '[') {
      ++pos_;
      std::vector<Scalar> items;
      skip_ws();
      if (peek() == ']') {
        ++pos_;
        return items;
      }
      while (true) {
        items.push_back(scalar());
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          skip_ws();
          if (peek() == ']') {  // trailing comma
            ++pos_;
            break;
          }
          continue;
        }
        if (peek() == ']') {
          ++pos_;
          break;
        }
        fail("expected ',' or ']' in array");
      }
      return items;
    }
    return scalar();
  }

  void expect_end() {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] != '#') fail("unexpected trailing text");
  }

 private:
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r')) ++pos_;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(where_ + ": " + msg); }

  Scalar scalar() {
    skip_ws();
    if (peek() == '"') {
      ++pos_;
      std::string out;
      while (pos_ < s_.size() && s_[pos_] != '"') {
        char c = s_[pos_++];
        if (c == '\\') {
          if (pos_ >= s_.size()) fail("unterminated escape");
          const char e = s_[pos_++];
          switch (e) {
            case 'n': c = '\n'; break;
            case 't': c = '\t'; break;
            case '"': c = '"'; break;
            case '\\': c = '\\'; break;
            default: fail(std::string("unknown escape \\") + e);
          }
        }
        out.push_back(c);
      }
      if (pos_ >= s_.size()) fail("unterminated string");
      ++pos_;
      return out;
    }
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#' &&
           s_[pos_] != ' ' && s_[pos_] != '\t' && s_[pos_] != '\r') {
      ++pos_;
    }
    std::string tok(s_.substr(start, pos_ - start));
    if (tok.empty()) fail("missing value");
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::erase(tok, '_');
    const char* b = tok.data();
    const char* e = tok.data() + tok.size();
    if (*b == '+') ++b;
    std::int64_t i = 0;
    if (auto [p, ec] = std::from_chars(b, e, i); ec == std::errc() && p == e) return i;
    double d = 0;
    if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
    if (auto [p, ec] = std::from_chars(b, e, d); ec == std::errc() && p == e) return d;
    fail("cannot parse value '" + tok + "'");
  }

  std::string_view s_;
  std::string where_;
  std::size_t pos_ = 0;
};

// ---- typed accessors ----

[[noreturn]] void bad_type(const std::string& key, const char* want) {
  throw ConfigError("key '" + key + "': expected " + want);
}

const Scalar& scalar_of(const Entry& e, const char* want) {
  if (const auto* s = std::get_if<Scalar>(&e.value)) return *s;
  bad_type(e.key, want);
}

double to_double(const Scalar& s, const std::string& key) {
  if (const auto* i = std::get_if<std::int64_t>(&s)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&s)) return *d;
  bad_type(key, "a number");
}

std::int64_t to_int(const Scalar& s, const std::string& key) {
  if (const auto* i = std::get_if<std::int64_t>(&s)) return *i;
  bad_type(key, "an integer");
}

double get_double(const Entry& e) { return to_double(scalar_of(e, "a number"), e.key); }

std::uint64_t get_uint(const Entry& e) {
  const auto v = to_int(scalar_of(e, "an integer"), e.key);
  if (v < 0) throw ConfigError("key '" + e.key + "': must be >= 0");
  return static_cast<std::uint64_t>(v);
}

bool get_bool(const Entry& e) {
  if (const auto* b = std::get_if<bool>(&scalar_of(e, "true or false"))) return *b;
  bad_type(e.key, "true or false");
}

std::string get_string(const Entry& e) {
  if (const auto* s = std::get_if<std::string>(&scalar_of(e, "a string"))) return *s;
  bad_type(e.key, "a string");
}

const std::vector<Scalar>& list_of(const Entry& e, const char* want) {
  if (const auto* v = std::get_if<std::vector<Scalar>>(&e.value)) return *v;
  bad_type(e.key, want);
}

std::vector<double> get_doubles(const Entry& e) {
  std::vector<double> out;
  for (const auto& s : list_of(e, "an array of numbers")) out.push_back(to_double(s, e.key));
  return out;
}

std::vector<std::uint32_t> get_widths(const Entry& e) {
  std::vector<std::uint32_t> out;
  for (const auto& s : list_of(e, "an array of integers")) {
    const auto v = to_int(s, e.key);
    if (v < 1 || v > (1 << 20)) throw ConfigError("key '" + e.key + "': widths must be in [1, 2^20]");
    out.push_back(static_cast<std::uint32_t>(v));
  }
  return out;
}

std::vector<Method> get_methods(const Entry& e) {
  std::vector<Method> out;
  for (const auto& s : list_of(e, "an array of method names")) {
    const auto* name = std::get_if<std::string>(&s);
    if (!name) bad_type(e.key, "an array of method names");
    const auto m = parse_method(*name);
    if (!m) {
      throw ConfigError("key '" + e.key + "': unknown method '" + *name + "' (valid: " +
                        valid_method_names() + ")");
    }
    out.push_back(*m);
  }
  return out;
}

// ---- rendering for the defaults listing ----

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

template <class T>
std::string fmt_list(const std::vector<T>& v, const std::function<std::string(const T&)>& f) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + f(v[i]);
  return s + "]";
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out + "\"";
}

struct KeyDef {
  const char* key;
  std::function<void(RunConfig&, const Entry&)> set;
  std::function<std::string(const RunConfig&)> show;
};

const std::vector<KeyDef>& key_table() {
  using S = std::string;
  static const std::vector<KeyDef> table = {
      {"seed", [](RunConfig& c, const Entry& e) { c.seed = get_uint(e); },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
      {"threads", [](RunConfig& c, const Entry& e) { c.threads = get_uint(e); },
       [](const RunConfig& c) { return std::to_string(c.threads); }},

      {"paths.model", [](RunConfig& c, const Entry& e) { c.model_path = get_string(e); },
       [](const RunConfig& c) { return quote(c.model_path.string()); }},
      {"paths.output_dir", [](RunConfig& c, const Entry& e) { c.output_dir = get_string(e); },
       [](const RunConfig& c) { return quote(c.output_dir.string()); }},
      {"paths.train_log", [](RunConfig& c, const Entry& e) { c.train_log = get_string(e); },
       [](const RunConfig& c) { return quote(c.train_log.string()); }},

      {"model.num_elements", [](RunConfig& c, const Entry& e) { c.model.num_elements = get_uint(e); },
       [](const RunConfig& c) { return std::to_string(c.model.num_elements); }},
      {"model.hidden", [](RunConfig& c, const Entry& e) { c.model.hidden = get_widths(e); },
       [](const RunConfig& c) {
         return fmt_list<std::uint32_t>(c.model.hidden, [](const std::uint32_t& v) { return std::to_string(v); });
       }},
      {"model.equal_width_skips", [](RunConfig& c, const Entry& e) { c.model.equal_width_skips = get_bool(e); },
       [](const RunConfig& c) { return S(c.model.equal_width_skips ? "true" : "false"); }},

      {"target.num_elements", [](RunConfig& c, const Entry& e) { c.target_elements = get_uint(e); },
       [](const RunConfig& c) { return std::to_string(c.target_elements); }},

      {"train.k_hypotheses", [](RunConfig& c, const Entry& e) { c.train.k_hypotheses = get_uint(e); },
       [](const RunConfig& c) { return std::to_string(c.train.k_hypotheses); }},
      {"train.scenarios_per_iteration",
       [](RunConfig& c, const Entry& e) { c.train.scenarios_per_iteration = get_uint(e); },
       [](const RunConfig& c) { return std::to_string(c.train.scenarios_per_iteration); }},
      {"train.learning_rate", [](RunConfig& c, const Entry& e) { c.train.learning_rate = get_double(e); },
       [](const RunConfig& c) { return fmt(c.train.learning_rate); }},
      {"train.validation_size", [](RunConfig& c, const Entry& e) { c.train.validation_size = get_uint(e); },
       [](const RunConfig& c) { return std::to_string(c.train.validation_size); }},
      {"train.validation_seed", [](RunConfig& c, const Entry& e) { c.train.validation_seed = get_uint(e); },
       [](const RunConfig& c) { return std::to_string(c.train.validation_seed); }},
      {"train.eval_interval", [](RunConfig& c, const Entry& e) { c.train.eval_interval = get_uint(e); },
       [](const RunConfig& c) { return std::to_string(c.train.eval_interval); }},
      {"train.patience", [](RunConfig& c, const Entry& e) { c.train.patience = get_uint(e); },
       [](const RunConfig& c) { return std::to_string(c.train.patience); }},
      {"train.max_iterations", [](RunConfig& c, const Entry& e) { c.train.max_iterations = get_uint(e); },
       [](const RunConfig& c) { return std::to_string(c.train.max_iterations); }},
      {"train.weight_floor", [](RunConfig& c, const Entry& e) { c.train.weight_floor = get_double(e); },
       [](const RunConfig& c) { return fmt(c.train.weight_floor); }},
      {"train.batch_chunk", [](RunConfig& c, const Entry& e) { c.train.batch_chunk = get_uint(e); },
       [](const RunConfig& c) { return std::to_string(c.train.batch_chunk); }},
      {"train.checkpoint_prefix",
       [](RunConfig& c, const Entry& e) { c.train.checkpoint_prefix = get_string(e); },
       [](const RunConfig& c) { return quote(c.train.checkpoint_prefix.string()); }},

      {"sparse.c_bound", [](RunConfig& c, const Entry& e) { c.sparse.c_bound = get_double(e); },
       [](const RunConfig& c) { return fmt(c.sparse.c_bound); }},
      {"sparse.max_iterations",
       [](RunConfig& c, const Entry& e) {
         const auto v = get_uint(e);
         if (v > 100000000) throw ConfigError("key 'sparse.max_iterations': too large");
         c.sparse.max_iterations = static_cast<int>(v);
       },
       [](const RunConfig& c) { return std::to_string(c.sparse.max_iterations); }},
      {"sparse.primal_tol", [](RunConfig& c, const Entry& e) { c.sparse.primal_tol = get_double(e); },
       [](const RunConfig& c) { return fmt(c.sparse.primal_tol); }},
      {"sparse.dual_tol", [](RunConfig& c, const Entry& e) { c.sparse.dual_tol = get_double(e); },
       [](const RunConfig& c) { return fmt(c.sparse.dual_tol); }},
      {"sparse.penalty_rho", [](RunConfig& c, const Entry& e) { c.sparse.penalty_rho = get_double(e); },
       [](const RunConfig& c) { return fmt(c.sparse.penalty_rho); }},
      {"sparse.sigma_floor", [](RunConfig& c, const Entry& e) { c.sparse.sigma_floor = get_double(e); },
       [](const RunConfig& c) { return fmt(c.sparse.sigma_floor); }},

      {"experiment.preset", [](RunConfig&, const Entry&) {},  // handled in apply()
       [](const RunConfig&) { return quote(""); }},
      {"experiment.name", [](RunConfig& c, const Entry& e) { c.experiment.name = get_string(e); },
       [](const RunConfig& c) { return quote(c.experiment.name); }},
      {"experiment.true_angles", [](RunConfig& c, const Entry& e) { c.experiment.true_angles = get_doubles(e); },
       [](const RunConfig& c) { return fmt_list<double>(c.experiment.true_angles, fmt); }},
      {"experiment.snr_grid", [](RunConfig& c, const Entry& e) { c.experiment.snr_grid = get_doubles(e); },
       [](const RunConfig& c) { return fmt_list<double>(c.experiment.snr_grid, fmt); }},
      {"experiment.trials_per_snr",
       [](RunConfig& c, const Entry& e) { c.experiment.trials_per_snr = get_uint(e); },
       [](const RunConfig& c) { return std::to_string(c.experiment.trials_per_snr); }},
      {"experiment.methods", [](RunConfig& c, const Entry& e) { c.experiment.methods = get_methods(e); },
       [](const RunConfig& c) {
         return fmt_list<Method>(c.experiment.methods, [](const Method& m) { return quote(S(method_name(m))); });
       }},
      {"experiment.grid_start", [](RunConfig& c, const Entry& e) { c.experiment.grid_start = get_double(e); },
       [](const RunConfig& c) { return fmt(c.experiment.grid_start); }},
      {"experiment.grid_stop", [](RunConfig& c, const Entry& e) { c.experiment.grid_stop = get_double(e); },
       [](const RunConfig& c) { return fmt(c.experiment.grid_stop); }},
      {"experiment.grid_step", [](RunConfig& c, const Entry& e) { c.experiment.grid_step = get_double(e); },
       [](const RunConfig& c) { return fmt(c.experiment.grid_step); }},
      {"experiment.spectrum_snr_db",
       [](RunConfig& c, const Entry& e) { c.experiment.spectrum_snr_db = get_double(e); },
       [](const RunConfig& c) { return fmt(c.experiment.spectrum_snr_db); }},
  };
  return table;
}

const KeyDef* find_key(const std::string& key) {
  for (const auto& d : key_table()) {
    if (key == d.key) return &d;
  }
  return nullptr;
}

}  // namespace

std::vector<Entry> parse_config_text(std::istream& is, const std::string& source_name) {
  std::vector<Entry> out;
  std::set<std::string> seen;
  std::string section;
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    const std::string where = source_name + ":" + std::to_string(lineno);
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '[') {
      const auto close = line.find(']');
      if (close == std::string::npos) throw ConfigError(where + ": unterminated section header");
      const std::string rest = trim(std::string_view(line).substr(close + 1));
      if (!rest.empty() && rest[0] != '#') throw ConfigError(where + ": trailing text after section header");
      section = trim(std::string_view(line).substr(1, close - 1));
      if (!is_bare_key(section)) throw ConfigError(where + ": invalid section name '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string name = trim(std::string_view(line).substr(0, eq));
    if (!is_bare_key(name)) throw ConfigError(where + ": invalid key '" + name + "'");
    const std::string key = section.empty() ? name : section + "." + name;
    if (!seen.insert(key).second) throw ConfigError(where + ": duplicate key '" + key + "'");
    LineParser p(std::string_view(line).substr(eq + 1), where + " (" + key + ")");
    Entry e{key, p.value(), lineno};
    p.expect_end();
    out.push_back(std::move(e));
  }
  return out;
}

Architecture ModelShape::architecture() const {
  Architecture arch = make_architecture(num_elements, hidden, {});
  if (equal_width_skips) arch.skip_pairs = consecutive_equal_width_skips(arch.layer_dims);
  return arch;
}

void RunConfig::apply(const std::vector<Entry>& entries) {
  for (const auto& e : entries) {
    if (!find_key(e.key)) {
      throw ConfigError("unknown configuration key '" + e.key + "'" +
                        (e.line ? " (line " + std::to_string(e.line) + ")" : std::string()));
    }
  }
  for (const auto& e : entries) {
    if (e.key != "experiment.preset") continue;
    const auto name = get_string(e);
    auto preset = find_preset(name);
    if (!preset) {
      std::string valid;
      for (const auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
      throw ConfigError("key 'experiment.preset': unknown preset '" + name + "' (valid: " + valid + ")");
    }
    experiment = std::move(*preset);
  }
  for (const auto& e : entries) {
    try {
      find_key(e.key)->set(*this, e);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& ex) {
      throw ConfigError("key '" + e.key + "': " + ex.what());
    }
  }
}

void RunConfig::validate() const {
  auto wrap = [](const char* what, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      throw ConfigError(std::string(what) + ": " + e.what());
    }
  };
  wrap("train", [&] { train.validate(); });
  wrap("sparse", [&] { sparse.validate(); });
  if (model.num_elements == 0) throw ConfigError("model.num_elements must be >= 1");
  if (model.hidden.empty()) throw ConfigError("model.hidden must list at least one width");
  if (target_elements < 2) throw ConfigError("target.num_elements must be >= 2");
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream is(path);
  if (!is) throw ConfigFileError("cannot open config file '" + path.string() + "'");
  cfg.apply(parse_config_text(is, path.string()));
  return cfg;
}

std::string default_config_text() {
  const RunConfig defaults;
  std::string out;
  std::string section;
  for (const auto& d : key_table()) {
    const std::string key = d.key;
    const auto dot = key.find('.');
    const std::string sec = dot == std::string::npos ? "" : key.substr(0, dot);
    if (sec != section) {
      out += "\n[" + sec + "]\n";
      section = sec;
    }
    out += (dot == std::string::npos ? key : key.substr(dot + 1)) + " = " + d.show(defaults) + "\n";
  }
  return out;
}

std::size_t threads_from_env() {
  const char* v = std::getenv("SP2NET_THREADS");
  if (!v || !*v) return 0;
  std::size_t n = 0;
  const char* end = v + std::char_traits<char>::length(v);
  if (auto [p, ec] = std::from_chars(v, end, n); ec != std::errc() || p != end) {
    throw ConfigError(std::string("SP2NET_THREADS must be a non-negative integer, got '") + v + "'");
  }
  return n;
}

}  // namespace sp2net::cli
