#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "repeaterlab/params.hpp"

using namespace repeaterlab;

TEST(Defaults, CarryReferenceOperatingPoint) {
  const ProtocolParams p = paper_defaults();
  EXPECT_EQ(p.eta_p, 0.9);
  EXPECT_EQ(p.eta_s, 0.9);
  EXPECT_EQ(p.eta_e1, 0.05);
  EXPECT_EQ(p.eta_e2, 0.9);
  EXPECT_EQ(p.eta_d, 0.9);
  EXPECT_EQ(p.r_hz, 39.2e6);
  EXPECT_EQ(p.l_km, 1280.0);
  EXPECT_EQ(p.l_att_km, 22.0);
  EXPECT_EQ(p.c_km_s, 2.0e5);
  EXPECT_EQ(p.n, 4);
  EXPECT_EQ(p.p_d, 5e-6);
  EXPECT_EQ(p.l0_km(), 80.0);
}

TEST(Validate, DefaultsPass) { EXPECT_TRUE(validate(paper_defaults()).ok()); }

TEST(Validate, NamesOutOfRangeEfficiency) {
  ProtocolParams p = paper_defaults();
  p.eta_d = 1.3;
  const ValidationResult r = validate(p);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(r.names("eta_d"));
  EXPECT_EQ(r.violations.size(), 1U);
}

TEST(Validate, ReportsEveryViolation) {
  ProtocolParams p = paper_defaults();
  p.eta_p = -0.1;
  p.r_hz = 0.0;
  p.p_d = 1.0;
  p.n = -1;
  const ValidationResult r = validate(p);
  EXPECT_TRUE(r.names("eta_p"));
  EXPECT_TRUE(r.names("r_hz"));
  EXPECT_TRUE(r.names("p_d"));
  EXPECT_TRUE(r.names("n"));
  EXPECT_EQ(r.violations.size(), 4U);
}

TEST(Validate, UnitEfficienciesAndZeroDarkCountsAllowed) {
  ProtocolParams p = paper_defaults();
  p.eta_p = p.eta_s = p.eta_e1 = p.eta_e2 = p.eta_d = 1.0;
  p.p_d = 0.0;
  EXPECT_TRUE(validate(p).ok());
}

TEST(Validate, SingleLinkChain) {
  ProtocolParams p = paper_defaults();
  p.n = 0;
  EXPECT_TRUE(validate(p).ok());
  EXPECT_EQ(p.l0_km(), 1280.0);
}

TEST(Validate, RejectsNonFinite) {
  ProtocolParams p = paper_defaults();
  p.l_km = std::numeric_limits<double>::infinity();
  EXPECT_TRUE(validate(p).names("l_km"));
  p = paper_defaults();
  p.eta_s = std::nan("");
  EXPECT_TRUE(validate(p).names("eta_s"));
}

TEST(LoadConfig, EmptyDocumentGivesDefaults) {
  EXPECT_EQ(load_config(""), paper_defaults());
  EXPECT_EQ(load_config("  \n"), paper_defaults());
  EXPECT_EQ(load_config("{}"), paper_defaults());
}

TEST(LoadConfig, PartialDocumentOverridesOnlyGivenKeys) {
  const ProtocolParams p = load_config(R"({"n": 6})");
  ProtocolParams expected = paper_defaults();
  expected.n = 6;
  EXPECT_EQ(p, expected);
  EXPECT_EQ(p.l0_km(), 20.0);
}

TEST(LoadConfig, ScientificNotation) {
  EXPECT_EQ(load_config(R"({"r_hz": 3.92e7, "p_d": 1E-6})").r_hz, 3.92e7);
}

TEST(LoadConfig, UnknownKeyIsError) {
  try {
    load_config(R"({"eta_q": 0.5})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "eta_q");
  }
}

TEST(LoadConfig, ParseErrorCarriesLine) {
  try {
    load_config("{\n  \"n\": 4,\n  \"eta_d\": ,\n}");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    ASSERT_TRUE(e.line().has_value());
    EXPECT_EQ(*e.line(), 3U);
  }
}

TEST(LoadConfig, TypeErrors) {
  EXPECT_THROW(load_config(R"({"n": 2.5})"), ConfigError);
  EXPECT_THROW(load_config(R"({"n": -1})"), ConfigError);
  EXPECT_THROW(load_config(R"({"eta_d": "high"})"), ConfigError);
  EXPECT_THROW(load_config("[1, 2]"), ConfigError);
}

TEST(LoadConfig, ValidationErrorNamesField) {
  try {
    load_config(R"({"eta_d": 1.5})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "eta_d");
  }
}

TEST(LoadConfig, FromFile) {
  const auto path = std::filesystem::temp_directory_path() / "repeaterlab_params_test.json";
  {
    std::ofstream out(path);
    out << R"({"l_km": 640, "n": 3})";
  }
  const ProtocolParams p = load_config_file(path);
  EXPECT_EQ(p.l0_km(), 80.0);
  std::filesystem::remove(path);
  EXPECT_THROW(load_config_file(path), ConfigError);
}

TEST(Parameters, GetSetByKey) {
  ProtocolParams p = paper_defaults();
  for (std::string_view key : parameter_keys()) {
    EXPECT_TRUE(is_parameter_key(key));
    const double v = get_parameter(p, key);
    set_parameter(p, key, v);
  }
  EXPECT_EQ(p, paper_defaults());
  set_parameter(p, "l_att_km", 30.0);
  EXPECT_EQ(p.l_att_km, 30.0);
  EXPECT_THROW(set_parameter(p, "n", 1.5), ConfigError);
  EXPECT_THROW(set_parameter(p, "speed", 1.0), ConfigError);
  EXPECT_FALSE(is_parameter_key("speed"));
}

TEST(ParamsProperty, SerializeRoundTrips) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    ProtocolParams p;
    p.eta_p = unit(rng);
    p.eta_s = unit(rng);
    p.eta_e1 = unit(rng);
    p.eta_e2 = unit(rng);
    p.eta_d = unit(rng);
    p.r_hz = 1e3 + 1e8 * unit(rng);
    p.l_km = 1.0 + 5000.0 * unit(rng);
    p.l_att_km = 1.0 + 50.0 * unit(rng);
    p.c_km_s = 1e5 + 2e5 * unit(rng);
    p.n = static_cast<int>(rng() % 12);
    p.p_d = 0.999 * unit(rng);
    ASSERT_TRUE(validate(p).ok());
    EXPECT_EQ(load_config(serialize(p)), p);
    EXPECT_EQ(std::ldexp(p.l0_km(), p.n), p.l_km);
  }
}
