#include <gtest/gtest.h>

#include "freespec/json_io.hpp"
#include "test_support.hpp"

using namespace freespec;
using namespace freespec::testing;
using freespec::io::Json;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(JsonIo, ComplexEntries) {
  EXPECT_EQ(io::to_json(Complex(1.5, -2.0)), Json::parse("[1.5, -2.0]"));
  EXPECT_EQ(io::complex_from_json(Json::parse("[0.25, 3]")), Complex(0.25, 3.0));
  EXPECT_EQ(io::complex_from_json(Json::parse("7")), Complex(7.0, 0.0));
  EXPECT_EQ(code_of([] { io::complex_from_json(Json::parse("[1, 2, 3]")); }), ErrorCode::Parse);
}

TEST(JsonIo, HermitianRoundTripIsExact) {
  Rng rng(91);
  for (Index n : {1, 2, 5}) {
    const HermitianMatrix h = rng.hermitian(n);
    const Json j = io::to_json(h);
    EXPECT_EQ(j.at("dim"), n);
    // dump/parse keeps every bit: nlohmann prints doubles round-trippably.
    const HermitianMatrix back = io::hermitian_from_json(Json::parse(j.dump()));
    EXPECT_EQ((back.mat() - h.mat()).norm(), 0.0);
  }
}

TEST(JsonIo, HermitianRejectsAsymmetricAndBadShapes) {
  EXPECT_EQ(code_of([] { io::hermitian_from_json(Json::parse(R"({"dim": 2, "entries": [[1, 2], [0, 1]]})")); }),
            ErrorCode::NotHermitian);
  EXPECT_EQ(code_of([] { io::hermitian_from_json(Json::parse(R"({"dim": 2, "entries": [[1, 0]]})")); }),
            ErrorCode::Parse);
  EXPECT_EQ(code_of([] { io::hermitian_from_json(Json::parse(R"({"entries": [[1]]})")); }), ErrorCode::Parse);
}

TEST(JsonIo, TupleRoundTripAndConsistency) {
  const MatrixTuple t = circular_witness();
  const Json j = io::to_json(t);
  EXPECT_EQ(j.at("d"), 3);
  EXPECT_EQ(j.at("size"), 2);
  const MatrixTuple back = io::tuple_from_json(Json::parse(j.dump()));
  ASSERT_EQ(back.d(), 3);
  for (Index i = 0; i < 3; ++i) EXPECT_EQ((back[i].mat() - t[i].mat()).norm(), 0.0);
  // Wrapped under "tuple", as emitted by poly largest-lmi.
  EXPECT_EQ(io::tuple_from_json(Json{{"tuple", j}}).d(), 3);
  Json bad = j;
  bad["d"] = 4;
  EXPECT_EQ(code_of([&] { io::tuple_from_json(bad); }), ErrorCode::Parse);
  bad = j;
  bad["matrices"][1] = io::to_json(HermitianMatrix::identity(3));
  EXPECT_EQ(code_of([&] { io::tuple_from_json(bad); }), ErrorCode::DimensionMismatch);
}

TEST(JsonIo, Cones) {
  for (const ConeDescriptor& c : {ConeDescriptor::circular(), ConeDescriptor::psd(3), regular_polygon_cone(5)}) {
    const ConeDescriptor back = io::cone_from_json(Json::parse(io::to_json(c).dump()));
    EXPECT_EQ(back.kind(), c.kind());
    EXPECT_EQ(back.d(), c.d());
    ASSERT_EQ(back.facets().size(), c.facets().size());
    for (std::size_t k = 0; k < c.facets().size(); ++k) EXPECT_EQ((back.facets()[k] - c.facets()[k]).norm(), 0.0);
  }
  EXPECT_EQ(io::cone_from_json(Json::parse(R"({"kind": "Orthant", "d": 4})")).d(), 4);
  EXPECT_EQ(io::cone_from_json(Json::parse(R"({"kind": "polygon", "r": 6})")).generators().size(), 6u);
  EXPECT_EQ(code_of([] { io::cone_from_json(Json::parse(R"({"kind": "cube"})")); }), ErrorCode::Parse);
}

TEST(JsonIo, MapRoundTrip) {
  const StarLinearMap phi = example_phi(3);
  const StarLinearMap back = io::map_from_json(Json::parse(io::to_json(phi).dump()));
  EXPECT_EQ(back.d(), 3);
  EXPECT_EQ(back.r(), 5);
  EXPECT_TRUE(back.unital());
  Rng rng(92);
  const CMatrix a = rng.complex_matrix(3, 3);
  EXPECT_EQ((back(a) - phi(a)).norm(), 0.0);
}

TEST(JsonIo, Bipartite) {
  const Json j = Json::parse(R"({"s": 2, "d": 2, "matrix": {"dim": 4, "entries":
    [[0.5, 0, 0, 0.5], [0, 0, 0, 0], [0, 0, 0, 0], [0.5, 0, 0, 0.5]]}})");
  const io::Bipartite b = io::bipartite_from_json(j);
  EXPECT_EQ(b.s, 2);
  EXPECT_EQ(b.d, 2);
  EXPECT_EQ(io::bipartite_from_json(j.at("matrix"), 1).s, 4);
  EXPECT_EQ(code_of([&] { io::bipartite_from_json(j.at("matrix"), 3); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([] { io::parse("{\"a\": "); }), ErrorCode::Parse);
}
