#include "snk/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>

#include "snk/error.hpp"

namespace snk {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw InputError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  throw InputError("config key '" + key + "': expected a boolean, got '" + text + "'");
}

// Shortest text that parses back to the same double.
std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

struct Field {
  std::function<void(Config&, const std::string&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

template <typename T>
Field number_field(T Config::*member) {
  return {[member](Config& c, const std::string& key, const std::string& text) {
            c.*member = parse_number<T>(key, text);
          },
          [member](const Config& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*member);
            else return std::to_string(c.*member);
          }};
}

Field weight_field(double LossWeights::*member) {
  return {[member](Config& c, const std::string& key, const std::string& text) {
            c.weights.*member = parse_number<double>(key, text);
          },
          [member](const Config& c) { return format_double(c.weights.*member); }};
}

Field bool_field(bool Config::*member) {
  return {[member](Config& c, const std::string& key, const std::string& text) {
            c.*member = parse_bool(key, text);
          },
          [member](const Config& c) { return std::string(c.*member ? "true" : "false"); }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"k", number_field(&Config::k)},
      {"lambda_commut", number_field(&Config::lambda_commut)},
      {"tau", number_field(&Config::tau)},
      {"prism_height", number_field(&Config::h)},
      {"w_mse", weight_field(&LossWeights::mse)},
      {"w_fmap", weight_field(&LossWeights::fmap)},
      {"w_cycle", weight_field(&LossWeights::cycle)},
      {"w_primo", weight_field(&LossWeights::primo)},
      {"lr", number_field(&Config::lr)},
      {"max_iters", number_field(&Config::max_iters)},
      {"patience", number_field(&Config::patience)},
      {"seed", number_field(&Config::seed)},
      {"normalize", bool_field(&Config::normalize)},
      {"landmarks",
       {[](Config& c, const std::string&, const std::string& text) { c.landmarks = text; },
        [](const Config& c) { return c.landmarks; }}},
      {"features",
       {[](Config& c, const std::string&, const std::string& text) {
          c.features = parse_feature_mode(text);
        },
        [](const Config& c) { return to_string(c.features); }}},
      {"refine", bool_field(&Config::refine)},
      {"zoomout_k_end", number_field(&Config::zoomout_k_end)},
      {"zoomout_step", number_field(&Config::zoomout_step)},
      {"feature_dim", number_field(&Config::feature_dim)},
      {"width", number_field(&Config::width)},
      {"blocks", number_field(&Config::blocks)},
      {"latent_dim", number_field(&Config::latent_dim)},
      {"hks_times", number_field(&Config::hks_times)},
      {"landmark_time", number_field(&Config::landmark_time)},
      {"extrusion",
       {[](Config& c, const std::string& key, const std::string& text) {
          if (text == "symmetric") c.extrusion = Extrusion::Symmetric;
          else if (text == "one_sided") c.extrusion = Extrusion::OneSided;
          else throw InputError("config key '" + key + "': expected symmetric or one_sided");
        },
        [](const Config& c) {
          return std::string(c.extrusion == Extrusion::Symmetric ? "symmetric" : "one_sided");
        }}},
  };
  return table;
}

}  // namespace

std::string to_string(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::Learned: return "learned";
    case FeatureMode::Hks: return "hks";
    case FeatureMode::Free: return "free";
  }
  return "learned";
}

FeatureMode parse_feature_mode(const std::string& text) {
  if (text == "learned") return FeatureMode::Learned;
  if (text == "hks") return FeatureMode::Hks;
  if (text == "free") return FeatureMode::Free;
  throw InputError("unknown feature mode '" + text + "' (expected learned, hks or free)");
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [name, field] : fields()) out.push_back(name);
    return out;
  }();
  return keys;
}

void set_config_value(Config& config, const std::string& key, const std::string& value) {
  for (const auto& [name, field] : fields()) {
    if (name == key) {
      field.set(config, key, trim(value));
      return;
    }
  }
  throw InputError("unknown config key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> config_entries(const Config& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [name, field] : fields()) out.emplace_back(name, field.get(config));
  return out;
}

void validate_config(const Config& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw InputError("invalid config: " + what);
  };
  require(c.k >= 1, "k must be >= 1");
  require(c.lambda_commut >= 0.0, "lambda_commut must be >= 0");
  require(c.tau > 0.0, "tau must be > 0");
  require(c.h > 0.0, "h must be > 0");
  for (double w : {c.weights.mse, c.weights.fmap, c.weights.cycle, c.weights.primo}) {
    require(std::isfinite(w) && w >= 0.0, "loss weights must be finite and >= 0");
  }
  require(c.lr > 0.0, "lr must be > 0");
  require(c.max_iters >= 0, "max_iters must be >= 0");
  require(c.patience >= 1, "patience must be >= 1");
  require(c.zoomout_k_end >= c.k, "zoomout_k_end must be >= k");
  require(c.zoomout_step >= 1, "zoomout_step must be >= 1");
  require(c.feature_dim >= 1 && c.width >= 1 && c.blocks >= 0 && c.latent_dim >= 1,
          "network sizes must be positive");
  require(c.hks_times >= 1, "hks_times must be >= 1");
  require(c.landmark_time > 0.0, "landmark_time must be > 0");
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open config");
  Config config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    }
    try {
      set_config_value(config, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const InputError& e) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  validate_config(config);
  return config;
}

void save_config(const std::filesystem::path& path, const Config& config) {
  std::ofstream out(path);
  if (!out) throw InputError(path.string() + ": cannot open for writing");
  for (const auto& [key, value] : config_entries(config)) out << key << " = " << value << '\n';
}

}  // namespace snk
