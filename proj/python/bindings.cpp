#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <variant>

#include "chaostrng/bitstream.hpp"
#include "chaostrng/chaos_map.hpp"
#include "chaostrng/device_proto.hpp"
#include "chaostrng/mixed_signal_sim.hpp"
#include "chaostrng/nist.hpp"
#include "chaostrng/quality_suite.hpp"
#include "chaostrng/settings.hpp"

namespace py = pybind11;
using namespace chaostrng;

namespace {

std::vector<std::uint8_t> to_vector(const py::bytes& b) {
  const std::string s = b;
  return {s.begin(), s.end()};
}

py::bytes to_bytes(const std::vector<std::uint8_t>& v) {
  return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
}

py::dict findings(const ValidationReport& r) {
  auto list = [](const std::vector<Finding>& fs) {
    py::list out;
    for (const auto& f : fs) out.append(py::make_tuple(f.field, f.message));
    return out;
  };
  py::dict d;
  d["ok"] = r.ok();
  d["violations"] = list(r.violations);
  d["advisories"] = list(r.advisories);
  return d;
}

py::dict report_dict(const TestReport& r) {
  py::dict d;
  d["name"] = r.name;
  d["statistic"] = r.statistic;
  d["p_value"] = r.p_value;
  d["pass"] = r.pass;
  d["sample_size"] = r.sample_size;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Chaos-map TRNG core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<SettingsError>(m, "SettingsError", PyExc_ValueError);
  py::register_exception<InsufficientData>(m, "InsufficientData", PyExc_ValueError);

  py::class_<CircuitConfig>(m, "CircuitConfig")
      .def(py::init<>())
      .def_readwrite("n_hat", &CircuitConfig::n_hat)
      .def_readwrite("n", &CircuitConfig::n)
      .def_readwrite("m_bits", &CircuitConfig::m_bits)
      .def_readwrite("n_tilde", &CircuitConfig::n_tilde)
      .def_readwrite("v_ref", &CircuitConfig::v_ref)
      .def_readwrite("v_b", &CircuitConfig::v_b)
      .def_readwrite("k", &CircuitConfig::k)
      .def("step", &CircuitConfig::step)
      .def(py::self == py::self)
      .def("__repr__", [](const CircuitConfig& c) {
        return "CircuitConfig(n_hat=" + std::to_string(c.n_hat) + ", n=" + std::to_string(c.n) +
               ", m_bits=" + std::to_string(c.m_bits) + ", n_tilde=" + std::to_string(c.n_tilde) +
               ", v_ref=" + std::to_string(c.v_ref) + ", v_b=" + std::to_string(c.v_b) +
               ", k=" + std::to_string(c.k) + ")";
      });

  py::class_<NonIdealities>(m, "NonIdealities")
      .def(py::init<>())
      .def_static("ideal", &NonIdealities::ideal, py::arg("seed") = 1)
      .def_static("defaults", &NonIdealities::defaults, py::arg("cfg"), py::arg("seed") = 1)
      .def_readwrite("sigma_th", &NonIdealities::sigma_th)
      .def_readwrite("sigma_adc", &NonIdealities::sigma_adc)
      .def_readwrite("gain_tol", &NonIdealities::gain_tol)
      .def_readwrite("offset_err", &NonIdealities::offset_err)
      .def_readwrite("lsb_flip_prob", &NonIdealities::lsb_flip_prob)
      .def_readwrite("droop", &NonIdealities::droop)
      .def_readwrite("seed", &NonIdealities::seed);

  m.def("prototype_config", &prototype_config);
  m.def("illustrative_config", &illustrative_config);
  m.def("validate_config", [](const CircuitConfig& c) { return findings(validate_config(c)); });
  m.def("map_params", [](const CircuitConfig& c) {
    const auto p = map_params(c);
    return py::make_tuple(p.alpha, p.beta);
  });
  m.def("iterate_map", [](int alpha, double beta, double x) { return iterate_map({alpha, beta}, x); },
        py::arg("alpha"), py::arg("beta"), py::arg("x"));
  m.def("markov_bounds", [](const CircuitConfig& c) {
    const auto b = markov_bounds(c);
    return py::make_tuple(b.m_min, b.m_max);
  });
  m.def("state_from_code",
        [](const CircuitConfig& c, std::int64_t code) { return state_from_code(markov_partition(c), code); });

  m.def(
      "run_trajectory",
      [](const CircuitConfig& c, const NonIdealities& ni, std::size_t cycles, std::optional<double> initial) {
        py::list out;
        for (const auto& r : run_trajectory(c, ni, cycles, initial))
          out.append(py::make_tuple(r.cycle, r.v_in, r.m_hat, r.m, r.v_out));
        return out;
      },
      py::arg("cfg"), py::arg("noise"), py::arg("cycles"), py::arg("initial") = py::none(),
      "List of (cycle, v_in, m_hat, m, v_out) tuples.");

  m.def(
      "generate_bytes",
      [](const CircuitConfig& c, const NonIdealities& ni, std::size_t count, const std::string& post) {
        EntropySource src(c, ni, parse_post_process(post));
        return to_bytes(src.next_bytes(count));
      },
      py::arg("cfg"), py::arg("noise"), py::arg("count"), py::arg("post") = "none");

  m.def(
      "nist_subset",
      [](const py::bytes& data) {
        const auto bits = bytes_to_bits(to_vector(data));
        py::list out;
        for (const auto& r : nist::run_subset(bits)) out.append(report_dict(r));
        return out;
      },
      py::arg("data"));
  m.def(
      "marginal_entropy_profile",
      [](const py::bytes& data, int max_order) {
        const auto p = marginal_entropy_profile(bytes_to_bits(to_vector(data)), max_order);
        return py::make_tuple(p.per_order, p.minimum);
      },
      py::arg("data"), py::arg("max_order") = 8);

  m.def(
      "tamper_check",
      [](const CircuitConfig& c, const NonIdealities& ni, std::size_t cycles, double random_code_fraction) {
        FaultInjection fault;
        fault.random_code_fraction = random_code_fraction;
        const auto r = tamper_check(run_trajectory(c, ni, cycles, std::nullopt, fault), c);
        py::dict d;
        d["flags"] = r.flags;
        d["description"] = describe_flags(r.flags);
        d["branch_score"] = r.branch_score;
        d["max_state_occupancy"] = r.max_state_occupancy;
        d["out_of_range"] = r.out_of_range;
        return d;
      },
      py::arg("cfg"), py::arg("noise"), py::arg("cycles"), py::arg("random_code_fraction") = 0.0);

  m.def("crc16_ccitt_false", [](const py::bytes& data) { return crc16_ccitt_false(to_vector(data)); });
  m.def("encode_frame", [](std::uint8_t cmd, const py::bytes& payload) {
    return to_bytes(encode_frame(Frame{cmd, to_vector(payload)}));
  });
  m.def("decode_frame", [](const py::bytes& data) -> py::object {
    const auto r = decode_frame(to_vector(data));
    if (const auto* f = std::get_if<Frame>(&r)) return py::make_tuple(f->cmd, to_bytes(f->payload));
    throw py::value_error(to_string(std::get<FrameError>(r)));
  });

  m.def("parse_settings", [](const std::string& text) { return format_settings(parse_settings(text)); },
        "Normalized settings text; raises SettingsError on bad input.");
  m.def("format_settings", [](std::uint64_t seed) {
    RunSettings s;
    s.noise.seed = seed;
    return format_settings(s);
  }, py::arg("seed") = 1, "Default settings text with the given seed.");

  py::class_<VirtualDevice>(m, "VirtualDevice")
      .def(py::init([](const std::string& settings_text) {
             return std::make_unique<VirtualDevice>(parse_settings(settings_text));
           }),
           py::arg("settings") = "")
      .def("handle",
           [](VirtualDevice& d, std::uint8_t cmd, const py::bytes& payload) {
             const auto reply = d.handle(Frame{cmd, to_vector(payload)});
             return py::make_tuple(reply.cmd, to_bytes(reply.payload));
           },
           py::arg("cmd"), py::arg("payload") = py::bytes())
      .def("inject_random_codes",
           [](VirtualDevice& d, double fraction) {
             FaultInjection f;
             f.random_code_fraction = fraction;
             d.inject_fault(f);
           })
      .def_property_readonly("tamper_flags", &VirtualDevice::tamper_flags);
}
