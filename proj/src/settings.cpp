#include "chaostrng/settings.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace chaostrng {

namespace {

namespace pt = boost::property_tree;

const std::set<std::string> kKnownKeys = {
    "n_hat",    "n",          "m_bits",     "n_tilde",       "v_ref",   "v_b",
    "k",        "sigma_th",   "sigma_adc",  "gain_tol",      "offset_err",
    "lsb_flip_prob", "droop", "rail_lo",    "rail_hi",       "seed",    "post",
    "clearance_steps", "halfway_tolerance"};

template <typename T>
void read(const pt::ptree& tree, const char* key, T& out) {
  const auto value = tree.get_optional<std::string>(key);
  if (!value) return;
  std::istringstream is(*value);
  T parsed{};
  if (!(is >> parsed) || !(is >> std::ws).eof())
    throw SettingsError("malformed value for '" + std::string(key) + "': " + *value);
  out = parsed;
}

}  // namespace

RunSettings parse_settings(std::string_view text) {
  pt::ptree tree;
  std::istringstream is{std::string(text)};
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw SettingsError(std::string("config parse error: ") + e.what());
  }
  for (const auto& [key, child] : tree) {
    if (!child.empty()) throw SettingsError("sections are not supported: [" + key + "]");
    if (!kKnownKeys.count(key)) throw SettingsError("unknown config key '" + key + "'");
  }

  RunSettings s;
  read(tree, "n_hat", s.circuit.n_hat);
  read(tree, "n", s.circuit.n);
  read(tree, "m_bits", s.circuit.m_bits);
  read(tree, "n_tilde", s.circuit.n_tilde);
  read(tree, "v_ref", s.circuit.v_ref);
  read(tree, "v_b", s.circuit.v_b);
  read(tree, "k", s.circuit.k);

  s.noise = NonIdealities::defaults(s.circuit);
  read(tree, "sigma_th", s.noise.sigma_th);
  read(tree, "sigma_adc", s.noise.sigma_adc);
  read(tree, "gain_tol", s.noise.gain_tol);
  read(tree, "offset_err", s.noise.offset_err);
  read(tree, "lsb_flip_prob", s.noise.lsb_flip_prob);
  read(tree, "droop", s.noise.droop);
  read(tree, "seed", s.noise.seed);
  const bool has_lo = tree.count("rail_lo") > 0;
  const bool has_hi = tree.count("rail_hi") > 0;
  if (has_lo != has_hi) throw SettingsError("rail_lo and rail_hi must be given together");
  if (has_lo) {
    Rails rails;
    read(tree, "rail_lo", rails.lo);
    read(tree, "rail_hi", rails.hi);
    s.noise.rails = rails;
    s.validation.rails = std::pair{rails.lo, rails.hi};
  }

  read(tree, "clearance_steps", s.validation.clearance_steps);
  read(tree, "halfway_tolerance", s.validation.halfway_tolerance);
  if (const auto post = tree.get_optional<std::string>("post")) {
    try {
      s.post = parse_post_process(*post);
    } catch (const std::invalid_argument& e) {
      throw SettingsError(e.what());
    }
  }
  return s;
}

RunSettings load_settings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SettingsError("cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_settings(text.str());
}

std::string format_settings(const RunSettings& s) {
  std::ostringstream os;
  os.precision(17);
  const auto& c = s.circuit;
  const auto& ni = s.noise;
  os << "n_hat = " << c.n_hat << "\n"
     << "n = " << c.n << "\n"
     << "m_bits = " << c.m_bits << "\n"
     << "n_tilde = " << c.n_tilde << "\n"
     << "v_ref = " << c.v_ref << "\n"
     << "v_b = " << c.v_b << "\n"
     << "k = " << c.k << "\n"
     << "sigma_th = " << ni.sigma_th << "\n"
     << "sigma_adc = " << ni.sigma_adc << "\n"
     << "gain_tol = " << ni.gain_tol << "\n"
     << "offset_err = " << ni.offset_err << "\n"
     << "lsb_flip_prob = " << ni.lsb_flip_prob << "\n"
     << "droop = " << ni.droop << "\n";
  if (ni.rails) os << "rail_lo = " << ni.rails->lo << "\nrail_hi = " << ni.rails->hi << "\n";
  os << "seed = " << ni.seed << "\n"
     << "post = " << to_string(s.post) << "\n"
     << "clearance_steps = " << s.validation.clearance_steps << "\n"
     << "halfway_tolerance = " << s.validation.halfway_tolerance << "\n";
  return os.str();
}

}  // namespace chaostrng
