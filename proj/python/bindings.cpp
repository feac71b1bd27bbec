#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "perc/channels.hpp"
#include "perc/cluster_graph.hpp"
#include "perc/configuration.hpp"
#include "perc/error.hpp"
#include "perc/isoperimetry.hpp"
#include "perc/renormalization.hpp"
#include "perc/spectral.hpp"
#include "perc/walk_mc.hpp"

namespace py = pybind11;
using namespace perc;

namespace {

using Coords = std::vector<int>;

Point to_point(const Coords& c) {
  if (c.size() > static_cast<std::size_t>(kMaxDim)) throw ParameterError("point has too many coordinates");
  Point p;
  for (std::size_t i = 0; i < c.size(); ++i) p[static_cast<int>(i)] = c[i];
  return p;
}

Coords to_coords(const Point& p, int d) { return Coords(p.x.begin(), p.x.begin() + d); }

std::vector<bool> to_bools(const SubsetMask& s) { return std::vector<bool>(s.bits.begin(), s.bits.end()); }

IsoRestrict parse_restrict(const std::string& s) {
  if (s == "all") return IsoRestrict::AllSubsets;
  if (s == "connected") return IsoRestrict::ConnectedOnly;
  if (s == "connected_both") return IsoRestrict::ConnectedBothSides;
  throw ParameterError("restrict must be all, connected or connected_both");
}

CheegerMethod parse_cheeger(const std::string& s) {
  if (s == "exact") return CheegerMethod::Exact;
  if (s == "sweep") return CheegerMethod::SpectralSweep;
  if (s == "auto") return CheegerMethod::Auto;
  throw ParameterError("method must be exact, sweep or auto");
}

SpectralMethod parse_spectral(const std::string& s) {
  if (s == "dense") return SpectralMethod::Dense;
  if (s == "iterative") return SpectralMethod::Iterative;
  if (s == "auto") return SpectralMethod::Auto;
  throw ParameterError("method must be dense, iterative or auto");
}

WalkMode parse_mode(const std::string& s) {
  if (s == "reflected") return WalkMode::Reflected;
  if (s == "free") return WalkMode::Free;
  throw ParameterError("mode must be reflected or free");
}

ChannelDirection parse_direction(const std::string& s) {
  if (s == "horizontal") return ChannelDirection::Horizontal;
  if (s == "vertical") return ChannelDirection::Vertical;
  throw ParameterError("direction must be horizontal or vertical");
}

py::dict iso_dict(const IsoReport& r) {
  py::dict out;
  out["value"] = r.value;
  out["boundary"] = r.boundary;
  out["set_size"] = r.set_size;
  out["method"] = to_string(r.method);
  out["eps"] = r.eps;
  out["beta_implied"] = r.beta_implied;
  out["degenerate"] = r.degenerate;
  out["sets_examined"] = r.sets_examined;
  out["minimizing_set"] = to_bools(r.minimizing_set);
  return out;
}

py::dict report_dict(const GoodBoxReport& r) {
  py::dict out;
  out["is_good"] = r.is_good;
  out["has_edge"] = r.has_edge;
  out["unique_big_cluster"] = r.unique_big_cluster;
  out["long_paths_meet_K"] = r.long_paths_meet_K;
  out["K_crossing_all_subboxes"] = r.K_crossing_all_subboxes;
  out["big_clusters"] = r.big_clusters;
  out["K_size"] = r.K_size;
  out["subboxes_checked"] = r.subboxes_checked;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bernoulli percolation clusters: isoperimetry, spectra, heat kernels and walks";

  auto base = py::register_exception<Error>(m, "PercError", PyExc_RuntimeError);
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<ResourceError>(m, "ResourceError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<EmptyCluster>(m, "EmptyCluster", base.ptr());
  py::register_exception<ContractError>(m, "ContractError", base.ptr());
  py::register_exception<CapExceeded>(m, "CapExceeded", base.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  py::class_<Model>(m, "Model")
      .def_static("site2d", &Model::site2d)
      .def_static("bond", &Model::bond, py::arg("d"))
      .def_static("parse", &parse_model, py::arg("name"), py::arg("d") = 2)
      .def_property_readonly("d", [](const Model& x) { return x.d; })
      .def_property_readonly("is_site", &Model::is_site)
      .def("__eq__", [](const Model& a, const Model& b) { return a == b; })
      .def("__str__", [](const Model& x) { return to_string(x); })
      .def("__repr__", [](const Model& x) { return "Model('" + to_string(x) + "')"; });

  py::class_<Configuration>(m, "Configuration")
      .def_property_readonly("model", &Configuration::model)
      .def_property_readonly("dim", &Configuration::dim)
      .def_property_readonly("m", &Configuration::m)
      .def_property_readonly("p", &Configuration::p)
      .def_property_readonly("seed", &Configuration::seed)
      .def_property_readonly("open_cells", &Configuration::open_cells)
      .def_property_readonly("eligible_cells", &Configuration::eligible_cells)
      .def("site_open", [](const Configuration& c, const Coords& x) { return c.site_open(to_point(x)); })
      .def("edge_open", [](const Configuration& c, const Coords& x, int dir) { return c.edge_open(to_point(x), dir); },
           py::arg("x"), py::arg("dir"))
      .def("open_fraction", &open_fraction)
      .def("save", &save_configuration_file, py::arg("path"))
      .def("to_bytes",
           [](const Configuration& c) {
             std::ostringstream s;
             save_configuration(c, s);
             return py::bytes(s.str());
           })
      .def_static("from_bytes",
                  [](const py::bytes& b) {
                    std::istringstream s{std::string(b)};
                    return load_configuration(s);
                  })
      .def("__eq__", [](const Configuration& a, const Configuration& b) { return a == b; });

  m.def("sample", [](const Model& model, int mm, double p, std::uint64_t seed) {
    return sample_configuration(model, mm, p, seed);
  }, py::arg("model"), py::arg("m"), py::arg("p"), py::arg("seed"));
  m.def("load", &load_configuration_file, py::arg("path"));

  py::class_<ClusterGraph>(m, "ClusterGraph")
      .def_property_readonly("dim", &ClusterGraph::dim)
      .def_property_readonly("n", &ClusterGraph::box_n)
      .def("__len__", &ClusterGraph::size)
      .def_property_readonly("edge_count", &ClusterGraph::edge_count)
      .def_property_readonly("vertices",
                             [](const ClusterGraph& g) {
                               std::vector<Coords> out;
                               for (const Point& p : g.vertices()) out.push_back(to_coords(p, g.dim()));
                               return out;
                             })
      .def("edges", &ClusterGraph::edges)
      .def("id_of", [](const ClusterGraph& g, const Coords& x) { return g.id_of(to_point(x)); })
      .def("is_connected", &ClusterGraph::is_connected);

  m.def("origin_cluster", &origin_box_cluster, py::arg("cfg"), py::arg("n"));
  m.def("largest_cluster", &largest_cluster, py::arg("cfg"), py::arg("n"));
  m.def("components", &components, py::arg("cfg"), py::arg("n"));
  m.def("spans_box", &spans_box, py::arg("cluster"), py::arg("n"));

  m.def("epsilon_of_n", &epsilon_of_n, py::arg("n"), py::arg("d"));
  m.def("iso_constant", [](const ClusterGraph& g, double eps, double alpha, int n, const std::string& restrict) {
    return iso_dict(iso_constant_exact(g, IsoParams{eps, alpha, n}, parse_restrict(restrict)));
  }, py::arg("cluster"), py::arg("eps"), py::arg("alpha") = 0.5, py::arg("n") = 3, py::arg("restrict") = "all");
  m.def("cheeger_constant", [](const ClusterGraph& g, const std::string& method) {
    return iso_dict(cheeger_constant(g, parse_cheeger(method)));
  }, py::arg("cluster"), py::arg("method") = "auto");
  m.def("dirichlet_form", &dirichlet_form, py::arg("cluster"), py::arg("g"));

  m.def("spectral_gap", [](const ClusterGraph& g, const std::string& method) {
    SpectralReport r = spectral_gap(g, parse_spectral(method));
    py::dict out;
    out["gap"] = r.gap;
    out["eigenvalues"] = r.eigenvalues;
    out["method"] = r.method == SpectralMethod::Dense ? "dense" : "iterative";
    out["residual"] = r.residual;
    return out;
  }, py::arg("cluster"), py::arg("method") = "auto");
  m.def("full_box_gap", &full_box_gap, py::arg("n"), py::arg("d"));

  m.def("heat_kernel", [](const ClusterGraph& g, const std::vector<double>& times, const std::vector<int>& rows) {
    KernelTable t = heat_kernel_rows(build_walk_matrix(g, WalkMode::Reflected), rows, times);
    py::array_t<double> out({t.times.size(), t.rows.size(), t.columns});
    auto view = out.mutable_unchecked<3>();
    for (std::size_t k = 0; k < t.times.size(); ++k)
      for (std::size_t r = 0; r < t.rows.size(); ++r)
        for (std::size_t c = 0; c < t.columns; ++c) view(k, r, c) = t.at(k, r, c);
    return out;
  }, py::arg("cluster"), py::arg("times"), py::arg("rows"));

  m.def("carne_varopoulos", [](const Configuration& cfg, int k_max, const std::vector<double>& times) {
    CarneResult r = carne_varopoulos_check(cfg, k_max, times);
    py::dict out;
    out["checked"] = r.checked;
    out["violations"] = r.violations;
    out["worst_margin"] = r.worst_margin;
    out["continuous_violations"] = r.continuous_violations;
    out["continuous_inconclusive"] = r.continuous_inconclusive;
    return out;
  }, py::arg("cfg"), py::arg("k_max"), py::arg("times") = std::vector<double>{});

  m.def("channels", [](const Configuration& cfg, int x0, int y0, int width, int height, const std::string& dir) {
    ChannelSet s = max_disjoint_channels(cfg, Rect{x0, y0, width, height}, parse_direction(dir));
    std::vector<std::vector<Coords>> paths;
    for (const auto& path : s.paths) {
      paths.emplace_back();
      for (const Point& p : path) paths.back().push_back(to_coords(p, 2));
    }
    return paths;
  }, py::arg("cfg"), py::arg("x0"), py::arg("y0"), py::arg("width"), py::arg("height"),
        py::arg("direction") = "horizontal");

  m.def("good_box", [](const Configuration& cfg, int N, const Coords& index) {
    BlockSpec block;
    block.N = N;
    block.d = cfg.dim();
    block.index = to_point(index);
    return report_dict(good_box(cfg, block));
  }, py::arg("cfg"), py::arg("N"), py::arg("index"));

  m.def("simulate_walks", [](const Configuration& cfg, int n, const std::vector<double>& times, std::size_t walkers,
                             std::uint64_t seed, const std::string& mode) {
    WalkParams params;
    params.mode = parse_mode(mode);
    params.n = n;
    params.times = times;
    params.walkers = walkers;
    params.seed = seed;
    ClusterGraph host = params.mode == WalkMode::Free ? free_walk_host(cfg) : origin_box_cluster(cfg, n);
    KernelEstimate e = simulate_walks(cfg, host, params);
    py::dict out;
    out["times"] = e.times;
    out["return_estimate"] = e.return_estimate;
    out["stderr"] = e.stderr_;
    out["mean_square_displacement"] = e.mean_square_displacement;
    out["walkers"] = e.walkers;
    return out;
  }, py::arg("cfg"), py::arg("n"), py::arg("times"), py::arg("walkers") = 1000, py::arg("seed") = 0,
        py::arg("mode") = "reflected");

  m.def("fit_decay", [](const std::vector<double>& times, const std::vector<double>& values,
                        const std::vector<double>& stderrs, double t_lo, double t_hi) {
    DecayFit f = fit_decay_exponent(times, values, stderrs, t_lo, t_hi);
    py::dict out;
    out["slope"] = f.slope;
    out["intercept"] = f.intercept;
    out["slope_stderr"] = f.slope_stderr;
    out["points"] = f.points;
    return out;
  }, py::arg("times"), py::arg("values"), py::arg("stderrs"), py::arg("t_lo"), py::arg("t_hi"));
}
