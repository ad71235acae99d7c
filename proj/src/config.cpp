#include "cuprof/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cuprof/error.hpp"

namespace cuprof {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
  throw Error(ErrorCode::ConfigError, key + " = '" + value + "': " + why);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value, "not a number");
  return out;
}

int parse_int(const std::string& key, const std::string& value) { return parse_number<int>(key, value); }

double parse_real(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  double v = 0.0;
  if (!(in >> v) || !(in >> std::ws).eof()) bad_value(key, value, "not a number");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value, "expected true or false");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    if (auto t = trim(item); !t.empty()) out.push_back(t);
  }
  return out;
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"logs_dir", [](auto& c, auto&, auto& v) { c.logs_dir = v; }},
      {"dns_map", [](auto& c, auto&, auto& v) { c.dns_map = v; }},
      {"out_dir", [](auto& c, auto&, auto& v) { c.out_dir = v; }},
      {"window_sizes",
       [](auto& c, auto& k, auto& v) {
         c.window_sizes.clear();
         for (const auto& s : split_list(v)) c.window_sizes.push_back(parse_int(k, s));
       }},
      {"window_stride", [](auto& c, auto& k, auto& v) { c.window_stride = parse_int(k, v); }},
      {"scaling",
       [](auto& c, auto& k, auto& v) {
         try {
           c.scaling = scaling_mode_from_string(v);
         } catch (const Error&) {
           bad_value(k, v, "expected maxabs or minmax");
         }
       }},
      {"models",
       [](auto& c, auto&, auto& v) {
         c.models.clear();
         for (const auto& s : split_list(v)) c.models.push_back(model_kind_from_string(s));
       }},
      {"seed", [](auto& c, auto& k, auto& v) { c.seed = parse_number<std::uint64_t>(k, v); }},
      {"runs", [](auto& c, auto& k, auto& v) { c.runs = parse_int(k, v); }},
      {"forest.trees", [](auto& c, auto& k, auto& v) { c.forest_trees = parse_int(k, v); }},
      {"isolation.trees", [](auto& c, auto& k, auto& v) { c.isolation_trees = parse_int(k, v); }},
      {"som.width", [](auto& c, auto& k, auto& v) { c.som_width = parse_int(k, v); }},
      {"som.height", [](auto& c, auto& k, auto& v) { c.som_height = parse_int(k, v); }},
      {"som.epochs", [](auto& c, auto& k, auto& v) { c.som_epochs = parse_int(k, v); }},
      {"som.window", [](auto& c, auto& k, auto& v) { c.som_window = parse_int(k, v); }},
      {"drift.window", [](auto& c, auto& k, auto& v) { c.drift_window = parse_int(k, v); }},
      {"drift.stride", [](auto& c, auto& k, auto& v) { c.drift_stride = parse_int(k, v); }},
      {"drift.curve_hours", [](auto& c, auto& k, auto& v) { c.drift_curve_hours = parse_int(k, v); }},
      {"drift.step_hours", [](auto& c, auto& k, auto& v) { c.drift_step_hours = parse_int(k, v); }},
      {"drift.flat_tolerance", [](auto& c, auto& k, auto& v) { c.drift.flat_tolerance = parse_real(k, v); }},
      {"drift.min_shift", [](auto& c, auto& k, auto& v) { c.drift.min_shift = parse_real(k, v); }},
      {"drift.recovery", [](auto& c, auto& k, auto& v) { c.drift.recovery = parse_real(k, v); }},
      {"drift.sudden_factor", [](auto& c, auto& k, auto& v) { c.drift.sudden_factor = parse_real(k, v); }},
      {"drift.alpha", [](auto& c, auto& k, auto& v) { c.drift.alpha = parse_real(k, v); }},
      {"drift.min_r2", [](auto& c, auto& k, auto& v) { c.drift.min_r2 = parse_real(k, v); }},
      {"drift.plateau_factor", [](auto& c, auto& k, auto& v) { c.drift.plateau_factor = parse_real(k, v); }},
      {"surrogates", [](auto& c, auto& k, auto& v) { c.surrogates = parse_int(k, v); }},
      {"paper_compat", [](auto& c, auto& k, auto& v) { c.paper_compat = parse_bool(k, v); }},
      {"jobs", [](auto& c, auto& k, auto& v) { c.jobs = parse_int(k, v); }},
      {"synth.users", [](auto& c, auto& k, auto& v) { c.synth_users = parse_int(k, v); }},
      {"synth.days", [](auto& c, auto& k, auto& v) { c.synth_days = parse_int(k, v); }},
      {"synth.domains_only", [](auto& c, auto& k, auto& v) { c.synth_domains_only = parse_bool(k, v); }},
      {"synth.shifted_users", [](auto& c, auto& k, auto& v) { c.synth_shifted_users = parse_int(k, v); }},
  };
  return table;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::ConfigError, what);
}

}  // namespace

std::uint64_t PipelineConfig::seed_or_throw() const {
  if (!seed) throw Error(ErrorCode::ConfigError, "seed is required");
  return *seed;
}

void set_config_value(PipelineConfig& config, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw Error(ErrorCode::ConfigError, "unknown key '" + key + "'");
  try {
    it->second(config, key, value);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(ErrorCode::ConfigError, key + ": " + e.what());
  }
}

PipelineConfig parse_config(std::istream& in) {
  PipelineConfig c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(line_no) + ": expected key = value");
    }
    set_config_value(c, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read config " + file.string());
  return parse_config(in);
}

void validate_config(const PipelineConfig& c, bool needs_logs) {
  c.seed_or_throw();
  require(!c.window_sizes.empty(), "window_sizes is empty");
  for (int t : c.window_sizes) require(t >= 1, "window sizes must be positive");
  require(c.window_stride >= 1, "window_stride must be positive");
  require(!c.models.empty(), "models is empty");
  require(c.runs >= 1, "runs must be positive");
  require(c.forest_trees >= 1 && c.isolation_trees >= 1, "tree counts must be positive");
  require(c.som_width >= 1 && c.som_height >= 1 && c.som_epochs >= 0 && c.som_window >= 1, "bad SOM settings");
  require(c.drift_window >= 1 && c.drift_stride >= 1, "bad drift window");
  require(c.drift_curve_hours >= 1 && c.drift_step_hours >= 1, "bad drift curve settings");
  require(c.surrogates >= 1, "surrogates must be positive");
  require(c.jobs >= 1, "jobs must be positive");
  require(c.synth_users >= 1 && c.synth_days >= 1, "bad synth settings");
  require(c.synth_shifted_users >= 0 && c.synth_shifted_users <= c.synth_users, "bad synth.shifted_users");
  if (c.paper_compat) {
    const std::vector<int> paper(std::begin(kCompatWindowSizes), std::end(kCompatWindowSizes));
    require(c.window_sizes == paper, "paper_compat requires window_sizes = 1,2,5,10,30,60");
    require(c.window_stride == 1, "paper_compat requires window_stride = 1");
  }
  if (needs_logs) require(c.logs_dir.has_value(), "logs_dir is required");
  if (c.logs_dir) {
    require(std::filesystem::is_directory(*c.logs_dir), "logs_dir " + c.logs_dir->string() + " does not exist");
  }
  if (c.dns_map) {
    require(std::filesystem::is_regular_file(*c.dns_map), "dns_map " + c.dns_map->string() + " does not exist");
  }
}

std::string render_config(const PipelineConfig& c) {
  std::ostringstream out;
  out.precision(17);
  auto join = [](const auto& items, auto fmt) {
    std::string s;
    for (const auto& i : items) s += (s.empty() ? "" : ",") + fmt(i);
    return s;
  };
  if (c.logs_dir) out << "logs_dir = " << c.logs_dir->generic_string() << '\n';
  if (c.dns_map) out << "dns_map = " << c.dns_map->generic_string() << '\n';
  out << "out_dir = " << c.out_dir.generic_string() << '\n';
  out << "window_sizes = " << join(c.window_sizes, [](int t) { return std::to_string(t); }) << '\n';
  out << "window_stride = " << c.window_stride << '\n';
  out << "scaling = " << to_string(c.scaling) << '\n';
  out << "models = " << join(c.models, [](ModelKind k) { return std::string(to_string(k)); }) << '\n';
  if (c.seed) out << "seed = " << *c.seed << '\n';
  out << "runs = " << c.runs << '\n';
  out << "forest.trees = " << c.forest_trees << '\n';
  out << "isolation.trees = " << c.isolation_trees << '\n';
  out << "som.width = " << c.som_width << '\n';
  out << "som.height = " << c.som_height << '\n';
  out << "som.epochs = " << c.som_epochs << '\n';
  out << "som.window = " << c.som_window << '\n';
  out << "drift.window = " << c.drift_window << '\n';
  out << "drift.stride = " << c.drift_stride << '\n';
  out << "drift.curve_hours = " << c.drift_curve_hours << '\n';
  out << "drift.step_hours = " << c.drift_step_hours << '\n';
  out << "drift.flat_tolerance = " << c.drift.flat_tolerance << '\n';
  out << "drift.min_shift = " << c.drift.min_shift << '\n';
  out << "drift.recovery = " << c.drift.recovery << '\n';
  out << "drift.sudden_factor = " << c.drift.sudden_factor << '\n';
  out << "drift.alpha = " << c.drift.alpha << '\n';
  out << "drift.min_r2 = " << c.drift.min_r2 << '\n';
  out << "drift.plateau_factor = " << c.drift.plateau_factor << '\n';
  out << "surrogates = " << c.surrogates << '\n';
  out << "paper_compat = " << (c.paper_compat ? "true" : "false") << '\n';
  out << "jobs = " << c.jobs << '\n';
  out << "synth.users = " << c.synth_users << '\n';
  out << "synth.days = " << c.synth_days << '\n';
  out << "synth.domains_only = " << (c.synth_domains_only ? "true" : "false") << '\n';
  out << "synth.shifted_users = " << c.synth_shifted_users << '\n';
  return out.str();
}

}  // namespace cuprof
