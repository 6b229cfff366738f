#pragma once

// Command-line front end: JSON in, verdict JSON out (sorted keys), CSV for
// section scans. Exit codes: 0 check completed, 2 input error, 3 solver
// inconsistency.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "freespec/circular.hpp"
#include "freespec/containment.hpp"
#include "freespec/error.hpp"
#include "freespec/json_io.hpp"
#include "freespec/opsys.hpp"
#include "freespec/polyhedral.hpp"
#include "freespec/psdcone.hpp"

namespace freespec::cli {

using io::Json;
using io::to_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitInconsistent = 3;

namespace detail {

inline std::string read_source(const std::string& path, std::istream& in) {
  if (path.empty() || path == "-") return std::string(std::istreambuf_iterator<char>(in), {});
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::Parse, "cannot open " + path);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

inline Json read_json(const std::string& path, std::istream& in) { return io::parse(read_source(path, in)); }

inline Json complex_vector(const CVector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(to_json(v(i)));
  return a;
}

inline Json compressions(const std::vector<CMatrix>& vs) {
  Json a = Json::array();
  for (const auto& v : vs) a.push_back(to_json(v));
  return a;
}

inline Json verdict(const Verdict& v) {
  Json j{{"verdict", v.holds}, {"certainty", to_string(v.certainty)}, {"value", v.value}, {"tol", v.tol}};
  if (v.angle) j["angle"] = *v.angle;
  if (v.witness.size() > 0) j["witness"] = complex_vector(v.witness);
  if (!v.compressions.empty()) j["compressions"] = compressions(v.compressions);
  if (v.certificate) j["certificate"] = to_json(*v.certificate);
  return j;
}

/// FREESPEC_TOL, when set, replaces the default eigenvalue tolerance.
inline double default_tol() {
  const char* env = std::getenv("FREESPEC_TOL");
  if (env == nullptr || *env == '\0') return kDefaultPsdTol;
  char* end = nullptr;
  const double t = std::strtod(env, &end);
  if (end == env || *end != '\0' || !(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "FREESPEC_TOL must be a positive number");
  return t;
}

inline RVector parse_point(const std::string& text) {
  std::vector<double> xs;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      xs.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Parse, "bad coordinate \"" + item + "\"");
    }
  }
  if (xs.empty()) throw Error(ErrorCode::Parse, "empty point");
  return Eigen::Map<RVector>(xs.data(), static_cast<Index>(xs.size()));
}

inline std::string format17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

struct Options {
  std::string system, input, cone, defining, lhs, rhs, point, out;
  std::optional<double> tol;
  std::optional<Index> d, target_rank;
  int r = 0, grid = 0;
  double range = 0.0;
  bool verify = false;
};

/// Runs one subcommand; JSON goes to `out`, diagnostics to `err`.
inline int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Free spectrahedra and operator systems over convex cones"};
  app.require_subcommand(1);
  Options o;
  std::function<Json()> action;

  auto* member = app.add_subcommand("member", "membership of a tuple in an operator system");
  member->add_option("--system", o.system, "spectrahedron|numrange|largest|smallest|psd|psdgamma")
      ->required()
      ->check(CLI::IsMember({"spectrahedron", "numrange", "largest", "smallest", "psd", "psdgamma"}));
  member->add_option("--input", o.input, "tuple JSON (default: stdin)");
  member->add_option("--cone", o.cone, "cone JSON for largest/smallest");
  member->add_option("--defining", o.defining, "defining tuple for spectrahedron/numrange");
  member->add_option("--d", o.d, "psd side when the input is a bare matrix");
  member->add_option("--tol", o.tol, "eigenvalue tolerance");

  auto* contain = app.add_subcommand("contain", "S(lhs) contained in S(rhs)");
  contain->add_option("--lhs", o.lhs)->required();
  contain->add_option("--rhs", o.rhs)->required();
  contain->add_option("--tol", o.tol);

  auto* circ = app.add_subcommand("circ", "circular cone D");
  circ->require_subcommand(1);
  auto* pq = circ->add_subcommand("pq", "P,Q decomposition");
  pq->add_option("--input", o.input);
  pq->add_option("--target-rank", o.target_rank);
  auto* classify = circ->add_subcommand("classify", "S_1(N) versus D");
  classify->add_option("--input", o.input);
  classify->add_option("--tol", o.tol);
  auto* shadow = circ->add_subcommand("shadow", "N3-shadow membership in the largest system");
  shadow->add_option("--input", o.input);
  auto* polygon = circ->add_subcommand("polygon", "regular polygon LMI");
  polygon->add_option("--r", o.r)->required();
  polygon->add_flag("--verify", o.verify, "check the derivative identity");
  polygon->add_option("--grid", o.grid, "grid size per axis for --verify")->default_val(20);
  auto* witness = circ->add_subcommand("witness", "the witness tuple");

  auto* poly = app.add_subcommand("poly", "polyhedral cones");
  poly->require_subcommand(1);
  auto* simplex = poly->add_subcommand("simplex", "classify a unital tuple against the orthant");
  simplex->add_option("--input", o.input);
  auto* largest_lmi = poly->add_subcommand("largest-lmi", "diagonal facet LMI");
  largest_lmi->add_option("--cone", o.cone)->required();
  auto* facet = poly->add_subcommand("facet-split", "deflate at a facet point");
  facet->add_option("--input", o.input);
  facet->add_option("--point", o.point)->required();

  auto* psd = app.add_subcommand("psd", "psd cone");
  psd->require_subcommand(1);
  auto* psd_classify = psd->add_subcommand("classify", "easy / not easy isometry");
  psd_classify->add_option("--input", o.input);
  auto* psd_example = psd->add_subcommand("example", "the 2d-1 example map");
  psd_example->add_option("--d", o.d)->required();
  auto* scan = psd->add_subcommand("scan", "affine section scan at level 2");
  scan->add_option("--d", o.d)->required();
  scan->add_option("--grid", o.grid)->required();
  scan->add_option("--range", o.range)->required();
  scan->add_option("--out", o.out, "CSV path (default: no CSV)");
  scan->add_option("--input", o.input, "map JSON instead of the example map");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    const double tol = o.tol ? *o.tol : detail::default_tol();
    Json result;
    if (member->parsed()) {
      const Json input = detail::read_json(o.input, in);
      if (o.system == "psd" || o.system == "psdgamma") {
        const io::Bipartite b = input.contains("matrices")
                                    ? io::Bipartite{}
                                    : io::bipartite_from_json(input, o.d.value_or(0));
        io::Bipartite use = b;
        if (input.contains("matrices")) {
          // Tuple in real coordinates of Her_m.
          const MatrixTuple a = io::tuple_from_json(input);
          Index m = 1;
          while (m * m < a.d()) ++m;
          use = io::Bipartite{freespec::detail::psd_coordinates_to_bipartite(a, m), a.size(), m};
        }
        const bool gamma = o.system == "psdgamma";
        result = Json{{"verdict", psd_member(use.matrix, use.s, use.d, gamma, tol)}, {"system", o.system},
                      {"s", use.s}, {"d", use.d}};
      } else {
        const MatrixTuple a = io::tuple_from_json(input);
        Verdict v;
        if (o.system == "spectrahedron" || o.system == "numrange") {
          if (o.defining.empty()) throw Error(ErrorCode::InvalidArgument, "--defining is required for " + o.system);
          const MatrixTuple m = io::tuple_from_json(detail::read_json(o.defining, in));
          v = o.system == "spectrahedron" ? spectrahedron_member(FreeSpectrahedron(m), a, tol) : numrange_member(m, a);
        } else {
          if (o.cone.empty()) throw Error(ErrorCode::InvalidArgument, "--cone is required for " + o.system);
          const ConeDescriptor cone = io::cone_from_json(detail::read_json(o.cone, in));
          v = o.system == "largest" ? largest_member(cone, a, tol) : smallest_member(cone, a, tol);
        }
        result = detail::verdict(v);
        result["system"] = o.system;
      }
    } else if (contain->parsed()) {
      const MatrixTuple m = io::tuple_from_json(detail::read_json(o.lhs, in));
      const MatrixTuple n = io::tuple_from_json(detail::read_json(o.rhs, in));
      const ContainmentResult c = contains(m, n, tol);
      result = Json{{"status", to_string(c.status)},
                    {"spectrahedra_contained", c.spectrahedra_contained()},
                    {"numerical_ranges_reversed", c.numerical_ranges_reversed()},
                    {"residual", c.residual},
                    {"compressions", detail::compressions(c.compressions)},
                    {"normalization",
                     Json{{"u", to_json(c.normalization.u)}, {"exact", c.normalization.exact},
                          {"margin", c.normalization.margin}}}};
      if (c.counterexample) result["counterexample"] = to_json(*c.counterexample);
      if (c.separating_element) result["separating_element"] = to_json(*c.separating_element);
    } else if (pq->parsed()) {
      const auto dec = pq_decompose(io::tuple_from_json(detail::read_json(o.input, in)), o.target_rank);
      result = Json{{"exists", dec.has_value()}};
      if (dec) {
        result["P"] = to_json(dec->p);
        result["Q"] = to_json(dec->q);
        result["r"] = dec->r;
        result["residual"] = dec->residual;
      }
    } else if (classify->parsed()) {
      const EqualityResult e = classify_equality(io::tuple_from_json(detail::read_json(o.input, in)), tol);
      result = Json{{"class", to_string(e.cls)}, {"theta", e.theta},       {"value", e.value},
                    {"min_value", e.min_value}, {"continuum", e.continuum}, {"isolated_roots", e.isolated_roots}};
    } else if (shadow->parsed()) {
      result = detail::verdict(shadow_member(io::tuple_from_json(detail::read_json(o.input, in))));
      if (result.contains("certificate")) result["N3"] = result["certificate"];
    } else if (polygon->parsed()) {
      const PolygonLMI p = polygon_lmi(o.r);
      result = Json{{"r", o.r},
                    {"tuple", to_json(p.tuple())},
                    {"diagonal_tuple", to_json(p.diagonal_tuple())},
                    {"raw", Json{{"N1", to_json(p.n1_raw)}, {"N2", to_json(p.n2_raw)}}}};
      if (o.verify) {
        const DerivativeCheck c = verify_derivative_identity(o.r, o.grid);
        result["residual"] = c.residual;
        result["lambdas"] = c.lambdas;
        result["angle_spread"] = c.angle_spread;
        result["factorization_skipped"] = c.factorization_skipped;
      }
    } else if (witness->parsed()) {
      result = to_json(witness_tuple());
    } else if (simplex->parsed()) {
      const SimplexResult s = simplex_classify(io::tuple_from_json(detail::read_json(o.input, in)));
      result = Json{{"class", to_string(s.cls)}, {"residual", s.residual}, {"failed_index", s.failed_index}};
      if (s.cls == SimplexClass::Equal) {
        result["U"] = to_json(s.u);
        Json tails = Json::array();
        for (const auto& t : s.tails) tails.push_back(to_json(t));
        result["tails"] = std::move(tails);
      }
    } else if (largest_lmi->parsed()) {
      const FreeSpectrahedron s = polyhedral_largest_lmi(io::cone_from_json(detail::read_json(o.cone, in)));
      result = Json{{"tuple", to_json(s.defining())}};
      if (s.unit()) result["unit"] = to_json(*s.unit());
    } else if (facet->parsed()) {
      const auto split = facet_split(io::tuple_from_json(detail::read_json(o.input, in)), detail::parse_point(o.point));
      result = Json{{"split", split.has_value()}};
      if (split) {
        result["m"] = to_json(split->m);
        result["tail"] = to_json(split->tail);
        result["congruence"] = to_json(split->congruence);
      }
    } else if (psd_classify->parsed()) {
      const IsometryResult c = classify_isometry(io::map_from_json(detail::read_json(o.input, in)));
      result = Json{{"class", to_string(c.cls)},
                    {"block_residual", c.block_residual},
                    {"left_inverse_residual", Json::array({c.left_inverse_residual[0], c.left_inverse_residual[1]})}};
      if (c.cls == IsometryClass::EasyIdentity || c.cls == IsometryClass::EasyTranspose) result["U"] = to_json(c.u);
      if (c.psi) result["psi"] = to_json(*c.psi);
      if (c.refutation) result["refutation"] = to_json(io::Bipartite{*c.refutation, 2, c.refutation->dim() / 2});
    } else if (psd_example->parsed()) {
      result = to_json(example_phi(*o.d));
    } else if (scan->parsed()) {
      const StarLinearMap phi = o.input.empty() ? example_phi(*o.d) : io::map_from_json(detail::read_json(o.input, in));
      if (phi.d() != *o.d) throw Error(ErrorCode::TemplateMismatch, "--d differs from the map's input size");
      const SectionScan s = section_scan(phi, o.grid, o.range);
      if (!o.out.empty()) {
        std::ofstream csv(o.out);
        if (!csv) throw Error(ErrorCode::InvalidArgument, "cannot write " + o.out);
        csv << "x,y,in_phi,in_psd,in_gamma\n";
        for (int iy = 0; iy < s.grid; ++iy) {
          for (int ix = 0; ix < s.grid; ++ix) {
            const std::size_t k = static_cast<std::size_t>(iy) * s.grid + ix;
            csv << detail::format17(s.coord(ix)) << ',' << detail::format17(s.coord(iy)) << ','
                << int(s.in_phi[k]) << ',' << int(s.in_psd[k]) << ',' << int(s.in_gamma[k]) << '\n';
          }
        }
      }
      auto count = [](const std::vector<char>& v) { return std::count(v.begin(), v.end(), 1); };
      auto pts = [](const std::vector<std::pair<double, double>>& v) {
        Json a = Json::array();
        for (auto [x, y] : v) a.push_back(Json::array({x, y}));
        return a;
      };
      result = Json{{"d", s.d},
                    {"grid", s.grid},
                    {"range", s.range},
                    {"counts", Json{{"phi", count(s.in_phi)}, {"psd", count(s.in_psd)}, {"gamma", count(s.in_gamma)}}},
                    {"boundary",
                     Json{{"phi", pts(s.boundary_phi)}, {"psd", pts(s.boundary_psd)}, {"gamma", pts(s.boundary_gamma)}}}};
      if (!o.out.empty()) result["csv"] = o.out;
    }
    out << result.dump(2) << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << Json{{"error", to_string(e.code())}, {"message", e.what()}}.dump() << '\n';
    return e.code() == ErrorCode::SolverInconsistent ? kExitInconsistent : kExitInput;
  } catch (const Json::exception& e) {
    err << Json{{"error", "PARSE"}, {"message", e.what()}}.dump() << '\n';
    return kExitInput;
  } catch (const std::bad_optional_access&) {
    err << Json{{"error", "INVALID_ARGUMENT"}, {"message", "missing option"}}.dump() << '\n';
    return kExitInput;
  }
}

}  // namespace freespec::cli
