#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace repeaterlab {

/// Hardware and architecture parameters of a repeater chain.
///
/// Efficiencies are probabilities in [0, 1]. Lengths are kilometres, the
/// repetition rate is Hz and the fiber light speed is km/s. The chain has
/// 2^n elementary links of length l0_km() = l_km / 2^n.
struct ProtocolParams {
  double eta_p = 0.0;     // single-photon source emission probability per pulse
  double eta_s = 0.0;     // storage efficiency into an ensemble
  double eta_e1 = 0.0;    // T -> S conversion (anti-Stokes emission) efficiency
  double eta_e2 = 0.0;    // S -> photon retrieval efficiency
  double eta_d = 0.0;     // detector efficiency
  double r_hz = 0.0;      // source repetition rate
  double l_km = 0.0;      // total distance
  double l_att_km = 0.0;  // fiber attenuation length
  double c_km_s = 0.0;    // light speed in fiber
  int n = 0;              // number of swap levels
  double p_d = 0.0;       // dark-count probability per detector per window

  /// Elementary link length L / 2^n. Exact: scaling by a power of two.
  double l0_km() const;

  friend bool operator==(const ProtocolParams&, const ProtocolParams&) = default;
};

/// Derived analytic quantities for one parameter set.
struct RateReport {
  double eta_t = 0.0;
  double p_l = 0.0;
  double p_0 = 0.0;
  double p_swap = 0.0;
  double t_l = 0.0;
  double t_0 = 0.0;
  double t_total = 0.0;
  double delta_f = 0.0;
};

/// The operating point used throughout the reference discussion:
/// 39.2 MHz source, 1280 km in 16 links of 80 km, 22 km attenuation length.
ProtocolParams paper_defaults();

struct Violation {
  std::string field;
  std::string message;
};

struct ValidationResult {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool names(std::string_view field) const;
  std::string summary() const;
};

/// Checks every invariant and reports each violated field; never throws.
ValidationResult validate(const ProtocolParams& params);

/// Raised for malformed, unknown or invalid configuration input.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message,
              std::optional<std::size_t> line = std::nullopt);

  /// Offending key; empty for document-level parse errors.
  const std::string& key() const { return key_; }
  std::optional<std::size_t> line() const { return line_; }

 private:
  std::string key_;
  std::optional<std::size_t> line_;
};

/// Config keys, in canonical order.
std::span<const std::string_view> parameter_keys();
bool is_parameter_key(std::string_view key);
bool is_integer_parameter(std::string_view key);

double get_parameter(const ProtocolParams& params, std::string_view key);

/// Sets one field by config key. Throws ConfigError for unknown keys and
/// for non-integral values of integer fields. Does not validate ranges.
void set_parameter(ProtocolParams& params, std::string_view key, double value);

/// Parses a flat JSON object. Missing keys keep their paper_defaults()
/// value; unknown keys and invalid results throw ConfigError.
ProtocolParams load_config(std::string_view document);
ProtocolParams load_config_file(const std::filesystem::path& path);

/// Inverse of load_config for every valid parameter set.
std::string serialize(const ProtocolParams& params);

}  // namespace repeaterlab
