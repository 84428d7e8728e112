#include "repeaterlab/params.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace repeaterlab {
namespace {

using Json = nlohmann::json;

constexpr std::array<std::string_view, 11> kKeys = {
    "eta_p", "eta_s", "eta_e1", "eta_e2", "eta_d", "r_hz",
    "l_km",  "l_att_km", "c_km_s", "n",    "p_d"};

template <typename Params>
auto double_field(Params& p, std::string_view key) -> decltype(&p.eta_p) {
  if (key == "eta_p") return &p.eta_p;
  if (key == "eta_s") return &p.eta_s;
  if (key == "eta_e1") return &p.eta_e1;
  if (key == "eta_e2") return &p.eta_e2;
  if (key == "eta_d") return &p.eta_d;
  if (key == "r_hz") return &p.r_hz;
  if (key == "l_km") return &p.l_km;
  if (key == "l_att_km") return &p.l_att_km;
  if (key == "c_km_s") return &p.c_km_s;
  if (key == "p_d") return &p.p_d;
  return nullptr;
}

std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + byte, '\n'));
}

bool blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(), [](char ch) {
    return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r';
  });
}

}  // namespace

double ProtocolParams::l0_km() const { return std::ldexp(l_km, -n); }

ProtocolParams paper_defaults() {
  ProtocolParams p;
  p.eta_p = 0.9;
  p.eta_s = 0.9;
  p.eta_e1 = 0.05;
  p.eta_e2 = 0.9;
  p.eta_d = 0.9;
  p.r_hz = 39.2e6;
  p.l_km = 1280.0;
  p.l_att_km = 22.0;
  p.c_km_s = 2.0e5;
  p.n = 4;
  p.p_d = 5e-6;
  return p;
}

bool ValidationResult::names(std::string_view field) const {
  return std::any_of(violations.begin(), violations.end(),
                     [&](const Violation& v) { return v.field == field; });
}

std::string ValidationResult::summary() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i > 0) out << "; ";
    out << violations[i].field << ": " << violations[i].message;
  }
  return out.str();
}

ValidationResult validate(const ProtocolParams& params) {
  ValidationResult result;
  auto fail = [&](std::string field, std::string message) {
    result.violations.push_back({std::move(field), std::move(message)});
  };
  auto probability = [&](std::string_view key, double v) {
    if (!(v >= 0.0 && v <= 1.0)) {
      fail(std::string(key), "must lie in [0, 1]");
    }
  };
  auto positive = [&](std::string_view key, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      fail(std::string(key), "must be a positive finite number");
    }
  };

  probability("eta_p", params.eta_p);
  probability("eta_s", params.eta_s);
  probability("eta_e1", params.eta_e1);
  probability("eta_e2", params.eta_e2);
  probability("eta_d", params.eta_d);
  positive("r_hz", params.r_hz);
  positive("l_km", params.l_km);
  positive("l_att_km", params.l_att_km);
  positive("c_km_s", params.c_km_s);
  if (params.n < 0) {
    fail("n", "must be a nonnegative integer");
  } else if (params.l_km > 0.0 && !(params.l0_km() > 0.0)) {
    fail("n", "elementary length L / 2^n underflows to zero");
  }
  if (!(params.p_d >= 0.0 && params.p_d < 1.0)) {
    fail("p_d", "must lie in [0, 1)");
  }
  return result;
}

ConfigError::ConfigError(std::string key, const std::string& message,
                         std::optional<std::size_t> line)
    : std::runtime_error(message), key_(std::move(key)), line_(line) {}

std::span<const std::string_view> parameter_keys() { return kKeys; }

bool is_parameter_key(std::string_view key) {
  return std::find(kKeys.begin(), kKeys.end(), key) != kKeys.end();
}

bool is_integer_parameter(std::string_view key) { return key == "n"; }

double get_parameter(const ProtocolParams& params, std::string_view key) {
  if (key == "n") return static_cast<double>(params.n);
  if (const double* field = double_field(params, key)) return *field;
  throw ConfigError(std::string(key),
                    "unknown parameter key '" + std::string(key) + "'");
}

void set_parameter(ProtocolParams& params, std::string_view key, double value) {
  if (key == "n") {
    if (!std::isfinite(value) || std::floor(value) != value || value < 0.0 ||
        value > 1.0e6) {
      throw ConfigError("n", "key 'n' must be a nonnegative integer");
    }
    params.n = static_cast<int>(value);
    return;
  }
  double* field = double_field(params, key);
  if (field == nullptr) {
    throw ConfigError(std::string(key),
                      "unknown parameter key '" + std::string(key) + "'");
  }
  *field = value;
}

ProtocolParams load_config(std::string_view document) {
  ProtocolParams params = paper_defaults();
  if (blank(document)) return params;

  Json root;
  try {
    root = Json::parse(document.begin(), document.end());
  } catch (const Json::parse_error& e) {
    const std::size_t line = line_of(document, e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigError("", "config parse error at line " +
                              std::to_string(line) + ": " + e.what(),
                      line);
  }
  if (!root.is_object()) {
    throw ConfigError("", "config document must be a JSON object");
  }

  for (const auto& [key, value] : root.items()) {
    if (!is_parameter_key(key)) {
      throw ConfigError(key, "unknown config key '" + key + "'");
    }
    if (key == "n") {
      if (value.is_number_unsigned() ||
          (value.is_number_integer() && value.get<long long>() >= 0)) {
        set_parameter(params, key, value.get<double>());
        continue;
      }
      throw ConfigError(key, "key 'n' must be a nonnegative integer");
    }
    if (!value.is_number()) {
      throw ConfigError(key, "key '" + key + "' must be a number");
    }
    set_parameter(params, key, value.get<double>());
  }

  const ValidationResult check = validate(params);
  if (!check.ok()) {
    throw ConfigError(check.violations.front().field,
                      "invalid parameters: " + check.summary());
  }
  return params;
}

ProtocolParams load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("", "cannot open config file '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return load_config(buffer.str());
}

std::string serialize(const ProtocolParams& params) {
  Json root = Json::object();
  for (std::string_view key : kKeys) {
    if (key == "n") {
      root[std::string(key)] = params.n;
    } else {
      root[std::string(key)] = get_parameter(params, key);
    }
  }
  return root.dump(2);
}

}  // namespace repeaterlab
