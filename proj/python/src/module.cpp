#include "kvlink/channel.hpp"
#include "kvlink/decision.hpp"
#include "kvlink/errors.hpp"
#include "kvlink/optimizer.hpp"
#include "kvlink/scenario.hpp"
#include "kvlink/static_e2e.hpp"
#include "kvlink/validate.hpp"
#include "kvlink/workload.hpp"

#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace kvlink;

namespace {

std::vector<int> modes(const ModeVector& x) {
    std::vector<int> out;
    for (const auto m : x) out.push_back(m == Mode::kv ? 1 : 0);
    return out;
}

py::dict assignment_dict(const Assignment& a) {
    py::dict d;
    d["x"] = modes(a.x);
    d["rho"] = a.rho;
    d["J"] = a.J;
    d["tau"] = a.tau;
    d["ea_prefill"] = a.ea_prefill;
    d["evaluations"] = a.stats.evaluations;
    d["bisection_iters"] = a.bisection_iters;
    return d;
}

TransmissionContext make_context(double alpha, double xi, double theta, double gamma, double b,
                                 double receiver_tflops, double snr_db, double bandwidth_hz,
                                 double rho) {
    const double n0 = dbm_to_watts(-140.0);
    TransmissionContext c;
    c.output_tokens = alpha;
    c.kv_debt = xi;
    c.receiver_history = theta;
    c.compression = gamma;
    c.bits_per_token = b;
    c.receiver_flops = receiver_tflops * 1e12;
    c.link = LinkBudget{db_to_linear(snr_db) * bandwidth_hz * n0, 0.0, 1.0, n0, bandwidth_hz};
    c.rho = rho;
    return c;
}

}  // namespace

PYBIND11_MODULE(_kvlink, m) {
    m.doc() = "Latency model and mode/bandwidth optimizer for KV-cache sharing between LLM agents";
    m.attr("__version__") = KVLINK_VERSION;

    py::register_exception<LinkUnusable>(m, "LinkUnusable", PyExc_RuntimeError);
    py::register_exception<Infeasible>(m, "Infeasible", PyExc_RuntimeError);
    py::register_exception<KvNotDominant>(m, "KvNotDominant", PyExc_RuntimeError);

    py::class_<ModelSpec>(m, "ModelSpec")
        .def(py::init<>())
        .def_readwrite("layers", &ModelSpec::layers)
        .def_readwrite("heads", &ModelSpec::heads)
        .def_readwrite("head_dim", &ModelSpec::head_dim)
        .def_readwrite("hidden_dim", &ModelSpec::hidden_dim)
        .def_readwrite("ffn_dim", &ModelSpec::ffn_dim)
        .def_readwrite("vocab", &ModelSpec::vocab)
        .def("validate", &ModelSpec::validate)
        .def_static("llama_7b", &ModelSpec::llama_7b)
        .def_static("preset", &ModelSpec::preset, py::arg("name"))
        .def(py::self == py::self);

    m.def("derive_constants", [](const ModelSpec& s) {
        const auto k = derive_constants(s);
        return py::make_tuple(k.k1, k.k2, k.k3);
    }, py::arg("spec"));
    m.def("kv_bits_per_token", &kv_bits_per_token, py::arg("spec"));

    py::class_<Workload>(m, "Workload")
        .def(py::init<ModelSpec>(), py::arg("spec"))
        .def("prefill_latency", &Workload::prefill_latency, py::arg("flops"), py::arg("input_tokens"),
             py::arg("context_tokens"))
        .def("autoregressive_latency", &Workload::autoregressive_latency, py::arg("flops"),
             py::arg("output_tokens"), py::arg("context_tokens"))
        .def("total_inference_latency", &Workload::total_inference_latency, py::arg("flops"),
             py::arg("output_tokens"), py::arg("context_tokens"), py::arg("input_tokens"))
        .def("kv_payload_bits", &Workload::kv_payload_bits, py::arg("context_tokens"), py::arg("compression"));

    m.def("path_loss_db", &path_loss_db, py::arg("distance_m"));
    m.def("ofdma_rate", [](double rho, double bandwidth_hz, double snr_linear) {
        return ofdma_rate(rho, bandwidth_hz, LinkSnr{snr_linear});
    }, py::arg("rho"), py::arg("bandwidth_hz"), py::arg("snr_linear"));
    m.def("broadcast_rate", [](double bandwidth_hz, const std::vector<double>& snrs) {
        std::vector<LinkSnr> s;
        for (const double v : snrs) s.push_back(LinkSnr{v});
        return broadcast_rate(bandwidth_hz, s);
    }, py::arg("bandwidth_hz"), py::arg("snrs_linear"));

    m.def("decision", [](double alpha, double xi, double theta, double gamma, double b, double receiver_tflops,
                         double snr_db, double bandwidth_hz, double rho) {
        const Workload w(ModelSpec::llama_7b());
        const auto c = make_context(alpha, xi, theta, gamma, b, receiver_tflops, snr_db, bandwidth_hz, rho);
        const auto p = decision_poly(w, c);
        py::dict d;
        d["k4"] = p.k4;
        d["k5"] = p.k5;
        d["k6"] = p.k6;
        d["f"] = p(alpha);
        d["mode"] = std::string(to_string(select_mode(w, c)));
        d["t_nl"] = marginal_latency_nl(w, c);
        d["t_kv"] = marginal_latency_kv(w, c);
        const auto r = bandwidth_threshold(w, c);
        d["rho_star"] = r ? py::object(py::float_(*r)) : py::object(py::none());
        return d;
    }, py::arg("alpha") = 512.0, py::arg("xi") = 6000.0, py::arg("theta") = 0.0, py::arg("gamma") = 2.0,
       py::arg("bits_per_token") = 16.0, py::arg("receiver_tflops") = 1.0, py::arg("snr_db") = 5.0,
       py::arg("bandwidth_hz") = 2e9, py::arg("rho") = 1.0);

    m.def("ratio_sweep", [](const std::string& axis, const std::vector<double>& grid) {
        const auto a = parse_sweep_axis(axis);
        const auto rows = ratio_sweep(a, grid.empty() ? default_sweep_grid(a) : grid, SweepDefaults{});
        py::list out;
        for (const auto& r : rows) {
            py::dict d;
            d["x"] = r.x;
            d["t_nl"] = r.t_nl;
            d["t_kv"] = r.t_kv;
            d["ratio"] = r.ratio;
            out.append(d);
        }
        return out;
    }, py::arg("axis"), py::arg("grid") = std::vector<double>{});

    m.def("single_round", [](std::size_t agents, double c0_tflops, double bandwidth_hz, std::uint64_t seed) {
        SingleRoundConfig cfg;
        cfg.agents = agents;
        cfg.ea_tflops = c0_tflops;
        cfg.bandwidth_hz = bandwidth_hz;
        const auto inst = sample_single_round(cfg, seed).instance;
        py::dict d;
        d["jmsra"] = assignment_dict(jmsra(inst));
        d["all_nl_uniform"] = assignment_dict(baseline(inst, Mode::nl, Allocation::uniform));
        d["all_kv_uniform"] = assignment_dict(baseline(inst, Mode::kv, Allocation::uniform));
        d["all_nl_opt"] = assignment_dict(baseline(inst, Mode::nl, Allocation::optimized));
        d["all_kv_opt"] = assignment_dict(baseline(inst, Mode::kv, Allocation::optimized));
        if (agents <= 12) d["exhaustive"] = assignment_dict(exhaustive_search(inst));
        return d;
    }, py::arg("agents") = 20, py::arg("c0_tflops") = 10.0, py::arg("bandwidth_hz") = 2e9, py::arg("seed") = 0);

    m.def("multi_round", [](int rounds, std::uint64_t seed, const std::string& policy, std::size_t max_agents) {
        MultiRoundConfig cfg;
        cfg.max_agents = max_agents;
        py::list out;
        for (const auto& r : run_multi_round(cfg, rounds, seed, parse_policy(policy))) {
            py::dict d;
            d["round"] = r.round;
            d["skipped"] = r.skipped;
            d["active"] = r.active;
            d["ea_mode"] = std::string(to_string(r.ea_mode));
            d["ea_prefill_s"] = r.ea_prefill_s;
            d["ea_decode_s"] = r.ea_decode_s;
            d["J"] = r.J;
            d["theta0"] = r.theta0;
            d["xi0"] = r.xi0;
            d["kv_fraction"] = r.kv_fraction();
            out.append(d);
        }
        return out;
    }, py::arg("rounds") = 30, py::arg("seed") = 0, py::arg("policy") = "jmsra", py::arg("max_agents") = 20);

    m.def("validate", [](const std::vector<int>& criteria) {
        validate::Options o;
        o.only.insert(criteria.begin(), criteria.end());
        py::gil_scoped_release release;
        const auto report = validate::run(o);
        py::gil_scoped_acquire acquire;
        py::list out;
        for (const auto& r : report.results) {
            py::dict d;
            d["id"] = r.id;
            d["name"] = r.name;
            d["passed"] = r.passed;
            d["seconds"] = r.seconds;
            d["detail"] = r.detail;
            out.append(d);
        }
        return out;
    }, py::arg("criteria") = std::vector<int>{});
}
