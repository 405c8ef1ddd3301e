#pragma once

// File formats for the command-line layer: phase-space functions and coupled
// functions as JSON, sampled grids as CSV. Emission is hand-rolled with a
// fixed field order and shortest round-trip decimals, so equal values always
// serialize byte for byte. Parsing goes through nlohmann::json and reports
// every malformed input as SchemaError; operand disagreements surface as
// MetadataMismatch naming the offending field.

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "spinphase/coupled.hpp"
#include "spinphase/states.hpp"

namespace spinphase::serialize {

using expansion::Complex;
using expansion::SpinWeightedExpansion;
using tensorops::PhaseSpaceFunction;

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MetadataMismatch : public std::runtime_error {
 public:
  explicit MetadataMismatch(const std::string& field)
      : std::runtime_error("operands disagree in field '" + field + "'"), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

inline std::string fmt(double v) { return approx::detail::format_double(v); }

// conj(c_{jm}) = (-1)^m c_{j,-m} characterizes symbols of Hermitian operators.
inline bool hermitian_symbol(const SpinWeightedExpansion& body, double tol = 1e-12) {
  double scale = 1.0;
  for (const auto& [jm, c] : body.coeffs()) scale = std::max(scale, std::abs(c));
  for (const auto& [jm, c] : body.coeffs()) {
    const auto [j, m] = jm;
    const Complex mirror = body.coeff(j, -m);
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    if (std::abs(std::conj(c) - sign * mirror) > tol * scale) return false;
  }
  return true;
}

inline std::string to_json(const PhaseSpaceFunction& f,
                           std::optional<bool> hermitian = std::nullopt) {
  std::string out = "{\"two_j\": " + std::to_string(f.two_j) + ", \"s\": " + fmt(f.s);
  if (hermitian) out += std::string(", \"hermitian\": ") + (*hermitian ? "true" : "false");
  out += ", \"coeffs\": [";
  bool first = true;
  for (const auto& [jm, c] : f.body.coeffs()) {
    if (!first) out += ", ";
    first = false;
    out += "{\"j\": " + std::to_string(jm.first) + ", \"m\": " + std::to_string(jm.second) +
           ", \"re\": " + fmt(c.real()) + ", \"im\": " + fmt(c.imag()) + "}";
  }
  out += "]}\n";
  return out;
}

inline std::string to_json(const coupled::CoupledPhaseFunction& f) {
  std::string out = "{\"sites\": [";
  for (std::size_t k = 0; k < f.sites.size(); ++k) {
    if (k) out += ", ";
    out += std::to_string(f.sites[k]);
  }
  out += "], \"s\": " + fmt(f.s) + ", \"coeffs\": [";
  bool first = true;
  for (const auto& [idx, c] : f.coeffs) {
    if (!first) out += ", ";
    first = false;
    out += "{\"jm\": [";
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (k) out += ", ";
      out += "[" + std::to_string(idx[k].first) + ", " + std::to_string(idx[k].second) + "]";
    }
    out += "], \"re\": " + fmt(c.real()) + ", \"im\": " + fmt(c.imag()) + "}";
  }
  out += "]}\n";
  return out;
}

namespace detail {

inline nlohmann::json parse_text(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("invalid JSON: ") + e.what());
  }
}

inline void require_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                         const char* what) {
  if (!obj.is_object()) throw SchemaError(std::string(what) + ": expected a JSON object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (key == k) known = true;
    if (!known) throw SchemaError(std::string(what) + ": unknown field '" + key + "'");
    (void)value;
  }
}

inline int require_int(const nlohmann::json& obj, const char* key, const char* what) {
  if (!obj.contains(key))
    throw SchemaError(std::string(what) + ": missing field '" + key + "'");
  const auto& v = obj.at(key);
  if (!v.is_number_integer())
    throw SchemaError(std::string(what) + ": field '" + key + "' must be an integer");
  return v.get<int>();
}

inline double require_number(const nlohmann::json& obj, const char* key, const char* what) {
  if (!obj.contains(key))
    throw SchemaError(std::string(what) + ": missing field '" + key + "'");
  const auto& v = obj.at(key);
  if (!v.is_number())
    throw SchemaError(std::string(what) + ": field '" + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x))
    throw SchemaError(std::string(what) + ": field '" + key + "' must be finite");
  return x;
}

}  // namespace detail

inline PhaseSpaceFunction phase_from_json(const std::string& text) {
  const nlohmann::json j = detail::parse_text(text);
  detail::require_keys(j, {"two_j", "s", "hermitian", "coeffs"}, "phase function");
  const int two_j = detail::require_int(j, "two_j", "phase function");
  if (two_j < 1) throw SchemaError("phase function: two_j must be at least 1");
  const double s = detail::require_number(j, "s", "phase function");
  if (!j.contains("coeffs") || !j.at("coeffs").is_array())
    throw SchemaError("phase function: 'coeffs' must be an array");
  if (j.contains("hermitian") && !j.at("hermitian").is_boolean())
    throw SchemaError("phase function: 'hermitian' must be a boolean");

  SpinWeightedExpansion body(0, two_j);
  std::set<std::pair<int, int>> seen;
  for (const auto& entry : j.at("coeffs")) {
    detail::require_keys(entry, {"j", "m", "re", "im"}, "coefficient");
    const int jr = detail::require_int(entry, "j", "coefficient");
    const int m = detail::require_int(entry, "m", "coefficient");
    if (jr < 0 || jr > two_j || std::abs(m) > jr)
      throw SchemaError("coefficient: (j, m) outside the band limit");
    if (!seen.emplace(jr, m).second)
      throw SchemaError("coefficient: duplicate (j, m) entry");
    const double re = detail::require_number(entry, "re", "coefficient");
    const double im = detail::require_number(entry, "im", "coefficient");
    if (re != 0.0 || im != 0.0) body.set_coeff(jr, m, Complex(re, im));
  }
  body.declare_max_rank(two_j);
  return {two_j, s, std::move(body)};
}

inline coupled::CoupledPhaseFunction coupled_from_json(const std::string& text) {
  const nlohmann::json j = detail::parse_text(text);
  detail::require_keys(j, {"sites", "s", "coeffs"}, "coupled function");
  if (!j.contains("sites") || !j.at("sites").is_array() || j.at("sites").empty())
    throw SchemaError("coupled function: 'sites' must be a non-empty array");
  std::vector<int> sites;
  for (const auto& v : j.at("sites")) {
    if (!v.is_number_integer() || v.get<int>() < 1)
      throw SchemaError("coupled function: each site needs an integer two_j >= 1");
    sites.push_back(v.get<int>());
  }
  coupled::CoupledPhaseFunction out{sites, detail::require_number(j, "s", "coupled function"), {}};
  if (!j.contains("coeffs") || !j.at("coeffs").is_array())
    throw SchemaError("coupled function: 'coeffs' must be an array");
  for (const auto& entry : j.at("coeffs")) {
    detail::require_keys(entry, {"jm", "re", "im"}, "coupled coefficient");
    if (!entry.contains("jm") || !entry.at("jm").is_array() ||
        entry.at("jm").size() != sites.size())
      throw SchemaError("coupled coefficient: 'jm' must list one [j, m] pair per site");
    coupled::MultiIndex idx;
    for (std::size_t k = 0; k < sites.size(); ++k) {
      const auto& pair = entry.at("jm").at(k);
      if (!pair.is_array() || pair.size() != 2 || !pair.at(0).is_number_integer() ||
          !pair.at(1).is_number_integer())
        throw SchemaError("coupled coefficient: each 'jm' entry must be an integer pair");
      const int jr = pair.at(0).get<int>(), m = pair.at(1).get<int>();
      if (jr < 0 || jr > sites[k] || std::abs(m) > jr)
        throw SchemaError("coupled coefficient: (j, m) outside a site's band limit");
      idx.emplace_back(jr, m);
    }
    if (out.coeffs.count(idx)) throw SchemaError("coupled coefficient: duplicate multi-index");
    const double re = detail::require_number(entry, "re", "coupled coefficient");
    const double im = detail::require_number(entry, "im", "coupled coefficient");
    if (re != 0.0 || im != 0.0) out.coeffs[idx] = Complex(re, im);
  }
  return out;
}

inline states::StateSpec state_spec_from_json(const std::string& text) {
  const nlohmann::json j = detail::parse_text(text);
  detail::require_keys(
      j, {"kind", "two_j", "s", "theta0", "phi0", "two_m", "two_m1", "two_m2", "method"},
      "state spec");
  if (!j.contains("kind") || !j.at("kind").is_string())
    throw SchemaError("state spec: missing string field 'kind'");
  const std::string kind = j.at("kind").get<std::string>();

  states::StateSpec spec;
  if (kind == "spin_up")
    spec.kind = states::StateKind::spin_up;
  else if (kind == "coherent")
    spec.kind = states::StateKind::coherent;
  else if (kind == "excited_coherent")
    spec.kind = states::StateKind::excited_coherent;
  else if (kind == "dicke")
    spec.kind = states::StateKind::dicke;
  else if (kind == "projector")
    spec.kind = states::StateKind::projector;
  else
    throw SchemaError("state spec: unknown kind '" + kind + "'");

  spec.two_j = detail::require_int(j, "two_j", "state spec");
  if (j.contains("s")) spec.s = detail::require_number(j, "s", "state spec");
  if (j.contains("theta0")) spec.theta0 = detail::require_number(j, "theta0", "state spec");
  if (j.contains("phi0")) spec.phi0 = detail::require_number(j, "phi0", "state spec");
  if (spec.kind == states::StateKind::dicke)
    spec.two_m = detail::require_int(j, "two_m", "state spec");
  else if (j.contains("two_m"))
    throw SchemaError("state spec: 'two_m' applies only to kind 'dicke'");
  if (spec.kind == states::StateKind::projector) {
    spec.two_m1 = detail::require_int(j, "two_m1", "state spec");
    spec.two_m2 = detail::require_int(j, "two_m2", "state spec");
  } else if (j.contains("two_m1") || j.contains("two_m2")) {
    throw SchemaError("state spec: 'two_m1'/'two_m2' apply only to kind 'projector'");
  }
  if (j.contains("method")) {
    if (!j.at("method").is_string())
      throw SchemaError("state spec: 'method' must be a string");
    const std::string method = j.at("method").get<std::string>();
    if (method == "exact")
      spec.method = states::StateMethod::exact;
    else if (method == "approx_eth")
      spec.method = states::StateMethod::approx_eth;
    else if (method == "approx_planar")
      spec.method = states::StateMethod::approx_planar;
    else
      throw SchemaError("state spec: unknown method '" + method + "'");
  }
  return spec;
}

// Operand agreement for binary operations; the message names the field.
inline void require_matching(const PhaseSpaceFunction& a, const PhaseSpaceFunction& b) {
  if (a.two_j != b.two_j) throw MetadataMismatch("two_j");
  if (std::abs(a.s - b.s) > starprod::detail::kSTagSlack) throw MetadataMismatch("s");
}

enum class Projection { sphere, arc_plane };

struct GridSpec {
  int n_theta = 2;
  int n_phi = 2;
  Projection projection = Projection::sphere;
};

// theta spans [0, pi] inclusive, phi spans [0, 2 pi) exclusive. The arc-plane
// projection reports the polar chart alpha = sqrt(J/2) theta e^{-i phi} as
// x + i y instead of the angles.
inline std::string sample_csv(const PhaseSpaceFunction& f, const GridSpec& grid) {
  if (grid.n_theta < 2 || grid.n_phi < 2)
    throw SchemaError("sample grid: n_theta and n_phi must both be at least 2");
  const bool arc = grid.projection == Projection::arc_plane;
  std::string out = "# {\"two_j\": " + std::to_string(f.two_j) + ", \"s\": " + fmt(f.s) +
                    ", \"projection\": \"" + (arc ? "arc_plane" : "sphere") +
                    "\", \"n_theta\": " + std::to_string(grid.n_theta) +
                    ", \"n_phi\": " + std::to_string(grid.n_phi) + "}\n";
  out += arc ? "x,y,re,im\n" : "theta,phi,re,im\n";
  const double arc_scale = 0.5 * std::sqrt(double(f.two_j));
  for (int i = 0; i < grid.n_theta; ++i) {
    const double theta = double(i) * std::numbers::pi / double(grid.n_theta - 1);
    for (int k = 0; k < grid.n_phi; ++k) {
      const double phi = 2.0 * std::numbers::pi * double(k) / double(grid.n_phi);
      const Complex v = expansion::evaluate(f.body, theta, phi);
      if (arc) {
        const double r = arc_scale * theta;
        out += fmt(r * std::cos(phi)) + ',' + fmt(-r * std::sin(phi));
      } else {
        out += fmt(theta) + ',' + fmt(phi);
      }
      out += ',' + fmt(v.real()) + ',' + fmt(v.imag()) + '\n';
    }
  }
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace spinphase::serialize
