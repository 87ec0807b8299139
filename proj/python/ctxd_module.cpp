#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "ctxd/decision.hpp"
#include "ctxd/error.hpp"
#include "ctxd/json_io.hpp"
#include "ctxd/replay.hpp"
#include "ctxd/service.hpp"

namespace py = pybind11;

namespace {

// A service over a store directory, driven by the mock backend.
class MockService {
 public:
  MockService(const std::string& store, const std::string& mock_json, bool user_model_enabled)
      : backend_(std::make_unique<ctxd::MockBackend>(
            mock_json.empty() ? std::vector<ctxd::MockBackend::Rule>{}
                              : ctxd::MockBackend::parse_rules(mock_json))) {
    ctxd::RuntimeConfig cfg;
    cfg.user_model_enabled = user_model_enabled;
    service_ = std::make_unique<ctxd::Service>(ctxd::ProjectStore(store), *backend_, cfg);
  }

  py::tuple handle(const std::string& method, const std::string& path, const std::string& body) {
    ctxd::ApiResponse res;
    {
      py::gil_scoped_release release;
      res = service_->handle(ctxd::ApiRequest{method, path, body, {}});
    }
    return py::make_tuple(res.status, res.body, res.content_type);
  }

  std::size_t calls(const std::string& role) const {
    return backend_->call_count(ctxd::agent_role_from_string(role));
  }

 private:
  std::unique_ptr<ctxd::MockBackend> backend_;
  std::unique_ptr<ctxd::Service> service_;
};

}  // namespace

PYBIND11_MODULE(_ctxd, m) {
  m.doc() = "ctxd engine bindings";

  static py::exception<ctxd::Error> error_type(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ctxd::Error& e) {
      py::set_error(error_type, (std::string(ctxd::to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  py::class_<MockService>(m, "MockService")
      .def(py::init<const std::string&, const std::string&, bool>(), py::arg("store"),
           py::arg("mock_json") = "", py::arg("user_model_enabled") = false)
      .def("handle", &MockService::handle, py::arg("method"), py::arg("path"), py::arg("body") = "")
      .def("calls", &MockService::calls, py::arg("role"));

  m.def("parse_structure_decision", [](const std::string& raw) {
    return ctxd::serialize_structure_decision(ctxd::parse_structure_decision(raw));
  });

  m.def(
      "replay",
      [](const std::string& script, const std::string& store) {
        ctxd::ReplayOutcome out;
        {
          py::gil_scoped_release release;
          out = ctxd::replay_file(script, store);
        }
        return py::make_tuple(out.complete, out.snapshot.dump());
      },
      py::arg("script"), py::arg("store"));
}
