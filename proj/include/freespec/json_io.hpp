#pragma once

// JSON encodings. Complex entries are [re, im]; a Hermitian matrix is
// {"dim": n, "entries": [[...], ...]}; a general complex matrix is
// {"rows": r, "cols": c, "entries": ...}; a tuple is {"d", "size", "matrices"};
// cones are tagged by "kind"; a *-linear map is {"d", "r", "choi"}.

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <string>
#include <vector>

#include "freespec/cones.hpp"
#include "freespec/error.hpp"
#include "freespec/linalg.hpp"
#include "freespec/psdcone.hpp"

namespace freespec::io {

using Json = nlohmann::json;

namespace detail {

[[noreturn]] inline void fail(const std::string& what) { throw Error(ErrorCode::Parse, what); }

inline const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) fail(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

inline Index index_field(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number_integer()) fail(std::string("field \"") + key + "\" must be an integer");
  return v.get<Index>();
}

inline double number(const Json& v) {
  if (!v.is_number()) fail("expected a number");
  return v.get<double>();
}

}  // namespace detail

inline Json to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Complex complex_from_json(const Json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2) detail::fail("complex entry must be [re, im]");
  return {detail::number(j[0]), detail::number(j[1])};
}

inline Json entries_to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(to_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline CMatrix entries_from_json(const Json& j, Index rows, Index cols) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows) detail::fail("row count does not match");
  CMatrix m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != cols) detail::fail("column count does not match");
    for (Index k = 0; k < cols; ++k) m(i, k) = complex_from_json(row[static_cast<std::size_t>(k)]);
  }
  return m;
}

inline Json to_json(const HermitianMatrix& h) { return Json{{"dim", h.dim()}, {"entries", entries_to_json(h.mat())}}; }

/// Checked for Hermitian symmetry (NOT_HERMITIAN otherwise).
inline HermitianMatrix hermitian_from_json(const Json& j) {
  const Index n = detail::index_field(j, "dim");
  if (n < 1) detail::fail("dim must be positive");
  return HermitianMatrix(entries_from_json(detail::field(j, "entries"), n, n));
}

inline Json to_json(const CMatrix& m) {
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"entries", entries_to_json(m)}};
}

inline CMatrix cmatrix_from_json(const Json& j) {
  const Index r = detail::index_field(j, "rows"), c = detail::index_field(j, "cols");
  return entries_from_json(detail::field(j, "entries"), r, c);
}

inline Json to_json(const MatrixTuple& t) {
  Json ms = Json::array();
  for (const auto& m : t) ms.push_back(to_json(m));
  return Json{{"d", t.d()}, {"size", t.size()}, {"matrices", std::move(ms)}};
}

/// Accepts a bare tuple or any object carrying it under "tuple".
inline MatrixTuple tuple_from_json(const Json& j) {
  if (j.is_object() && j.contains("tuple") && !j.contains("matrices")) return tuple_from_json(j.at("tuple"));
  const Json& ms = detail::field(j, "matrices");
  if (!ms.is_array() || ms.empty()) detail::fail("\"matrices\" must be a non-empty array");
  std::vector<HermitianMatrix> out;
  for (const auto& m : ms) out.push_back(hermitian_from_json(m));
  MatrixTuple t(std::move(out));
  if (j.contains("d") && detail::index_field(j, "d") != t.d()) detail::fail("\"d\" does not match the matrix count");
  if (j.contains("size") && detail::index_field(j, "size") != t.size()) detail::fail("\"size\" does not match");
  return t;
}

inline Json to_json(const RVector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline RVector vector_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) detail::fail("expected a non-empty array of numbers");
  RVector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = detail::number(j[i]);
  return v;
}

inline Json to_json(const ConeDescriptor& c) {
  switch (c.kind()) {
    case ConeKind::Circular: return Json{{"kind", "circular"}};
    case ConeKind::Psd: return Json{{"kind", "psd"}, {"m", c.psd_side()}};
    case ConeKind::Polyhedral: {
      Json f = Json::array(), g = Json::array();
      for (const auto& v : c.facets()) f.push_back(to_json(v));
      for (const auto& v : c.generators()) g.push_back(to_json(v));
      return Json{{"kind", "polyhedral"}, {"d", c.d()}, {"facets", std::move(f)}, {"generators", std::move(g)}};
    }
  }
  return Json{};
}

/// Kinds: circular, psd (with "m"), orthant (with "d"), polygon (with "r"),
/// polyhedral (with "facets" and/or "generators").
inline ConeDescriptor cone_from_json(const Json& j) {
  std::string kind = detail::field(j, "kind").get<std::string>();
  std::transform(kind.begin(), kind.end(), kind.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (kind == "circular") return ConeDescriptor::circular();
  if (kind == "psd") return ConeDescriptor::psd(detail::index_field(j, "m"));
  if (kind == "orthant") return ConeDescriptor::orthant(detail::index_field(j, "d"));
  if (kind == "polygon") return regular_polygon_cone(static_cast<int>(detail::index_field(j, "r")));
  if (kind == "polyhedral") {
    auto rays = [&](const char* key) {
      std::vector<RVector> out;
      if (j.contains(key)) {
        for (const auto& v : j.at(key)) out.push_back(vector_from_json(v));
      }
      return out;
    };
    return ConeDescriptor::polyhedral(rays("facets"), rays("generators"));
  }
  detail::fail("unknown cone kind \"" + kind + "\"");
}

inline Json to_json(const StarLinearMap& phi) {
  return Json{{"d", phi.d()}, {"r", phi.r()}, {"unital", phi.unital()}, {"choi", to_json(phi.choi().choi())}};
}

inline StarLinearMap map_from_json(const Json& j) {
  const Index d = detail::index_field(j, "d"), r = detail::index_field(j, "r");
  return StarLinearMap(ChoiMap(hermitian_from_json(detail::field(j, "choi")), d, r));
}

/// Bipartite element of Mat_s (x) Mat_d, the level index coarse.
struct Bipartite {
  HermitianMatrix matrix;
  Index s = 1;
  Index d = 1;
};

inline Json to_json(const Bipartite& b) { return Json{{"s", b.s}, {"d", b.d}, {"matrix", to_json(b.matrix)}}; }

/// {"s", "d", "matrix"}; or a bare Hermitian matrix with d given separately.
inline Bipartite bipartite_from_json(const Json& j, Index d_hint = 0) {
  Bipartite b;
  if (j.contains("matrix")) {
    b.matrix = hermitian_from_json(j.at("matrix"));
    b.d = detail::index_field(j, "d");
  } else {
    b.matrix = hermitian_from_json(j);
    b.d = d_hint;
  }
  if (b.d < 1 || b.matrix.dim() % b.d != 0) detail::fail("matrix size is not a multiple of d");
  b.s = b.matrix.dim() / b.d;
  if (j.contains("s") && detail::index_field(j, "s") != b.s) detail::fail("\"s\" does not match the matrix size");
  return b;
}

inline Json parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
}

}  // namespace freespec::io
