#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "grasscode/baselines.hpp"
#include "grasscode/errors.hpp"
#include "grasscode/schubert.hpp"
#include "grasscode/storage.hpp"

using namespace grasscode;

namespace {

Constellation sparse_test_constellation(int t, int m, int s, int card, std::uint64_t seed) {
  Rng rng(seed);
  const auto patterns = allocate_patterns(t, m, s, card);
  std::vector<GrassmannPoint> pts;
  for (const auto& p : patterns) pts.push_back(materialize(p, ParamSet::random(p, rng)));
  return Constellation(std::move(pts), "test-sparse");
}

std::string temp_path(const char* name) {
  return std::string("storage_test_") + name;
}

}  // namespace

TEST_CASE("sparse store: slot accounting and exact round trip") {
  const auto c = sparse_test_constellation(4, 2, 4, 4, 11);
  const auto store = to_sparse_store(c);
  CHECK(store.slot_count() == 16);  // |X| * T, all populated at s = T
  CHECK(store.sparsity() == 4);
  CHECK(store.t_slots() == 4);

  const auto back = densify(store);
  for (int i = 0; i < c.size(); ++i) {
    CHECK((back[i].matrix() - c[i].matrix()).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("sparse store size is independent of M") {
  const auto c2 = sparse_test_constellation(6, 2, 6, 8, 5);
  const auto c3 = sparse_test_constellation(6, 3, 6, 8, 5);
  CHECK(to_sparse_store(c2).slot_count() == to_sparse_store(c3).slot_count());
}

TEST_CASE("dense constellations are rejected by the sparse store") {
  Rng rng(21);
  std::vector<GrassmannPoint> pts;
  for (int i = 0; i < 3; ++i) pts.push_back(haar_random_point(4, 2, rng));
  CHECK_THROWS_AS(to_sparse_store(Constellation(std::move(pts))), NotSparseError);
}

TEST_CASE("save/load round trip in both formats") {
  const auto sparse = sparse_test_constellation(4, 2, 4, 4, 31);
  Rng rng(32);
  std::vector<GrassmannPoint> dense_pts;
  for (int i = 0; i < 3; ++i) dense_pts.push_back(haar_random_point(5, 2, rng));
  const Constellation dense(std::move(dense_pts), "test-dense");

  const auto check_roundtrip = [](const Constellation& c, ConstellationFormat fmt,
                                  const char* name) {
    const std::string path = temp_path(name);
    save_constellation(c, path, fmt);
    const Constellation back = load_constellation(path);
    REQUIRE(back.size() == c.size());
    CHECK(back.provenance() == c.provenance());
    for (int i = 0; i < c.size(); ++i) {
      CHECK((back[i].matrix() - c[i].matrix()).cwiseAbs().maxCoeff() <= 1e-15);
    }
    std::remove(path.c_str());
  };
  check_roundtrip(sparse, ConstellationFormat::kEllpack, "ellpack.json");
  check_roundtrip(sparse, ConstellationFormat::kDense, "sparse_as_dense.json");
  check_roundtrip(dense, ConstellationFormat::kDense, "dense.json");

  // Dense matrices cannot be written as ELLPACK.
  CHECK_THROWS_AS(save_constellation(dense, temp_path("bad.json"),
                                     ConstellationFormat::kEllpack),
                  NotSparseError);
}

TEST_CASE("load rejects corrupt files and off-manifold points") {
  const std::string corrupt = temp_path("corrupt.json");
  {
    std::ofstream out(corrupt);
    out << "{ not json";
  }
  CHECK_THROWS_AS(load_constellation(corrupt), LoadError);
  std::remove(corrupt.c_str());

  const std::string wrong_schema = temp_path("schema.json");
  {
    std::ofstream out(wrong_schema);
    out << R"({"T": 4, "M": 2, "cardinality": 1, "format": "dense"})";
  }
  CHECK_THROWS_AS(load_constellation(wrong_schema), LoadError);
  std::remove(wrong_schema.c_str());

  // Orthonormality violation: 2 * I columns.
  const std::string off = temp_path("off_manifold.json");
  {
    std::ofstream out(off);
    out << R"({"T": 3, "M": 1, "cardinality": 1, "format": "dense", "provenance": "",
          "entries": [[[{"re": 2.0, "im": 0.0}], [{"re": 0.0, "im": 0.0}],
                       [{"re": 0.0, "im": 0.0}]]]})";
  }
  CHECK_THROWS_AS(load_constellation(off), LoadError);
  std::remove(off.c_str());

  CHECK_THROWS_AS(load_constellation("does_not_exist.json"), LoadError);
}

TEST_CASE("results csv: header, rows, exact re-read") {
  const std::string path = temp_path("results.csv");
  write_results_csv({}, path);
  {
    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "snr_db,metric,value,half_width,frames");
    CHECK_FALSE(std::getline(in, line));
  }

  const std::vector<ResultRow> rows{{20.0, "ser", 1.2345678901234567e-06, 3.5e-7, 123456}};
  write_results_csv(rows, path);
  std::ifstream in(path);
  std::string header, line;
  REQUIRE(std::getline(in, header));
  REQUIRE(std::getline(in, line));
  std::stringstream ss(line);
  std::string field;
  std::getline(ss, field, ',');
  CHECK(std::stod(field) == 20.0);
  std::getline(ss, field, ',');
  CHECK(field == "ser");
  std::getline(ss, field, ',');
  CHECK(std::stod(field) == 1.2345678901234567e-06);
  std::getline(ss, field, ',');
  CHECK(std::stod(field) == 3.5e-7);
  std::getline(ss, field, ',');
  CHECK(std::stol(field) == 123456);
  std::remove(path.c_str());
}

TEST_CASE("bounds csv carries the crossover column") {
  const std::string path = temp_path("bounds.csv");
  BoundsRow row;
  row.snr_db = 10.0;
  row.union_bound = 1e-3;
  row.union_bound_conventional = std::numeric_limits<double>::infinity();
  row.ami_lower_bound = 0.42;
  row.lambda_star = 0.47;
  row.kappa = 1.5;
  row.snr_crossover_db = 6.84;
  write_bounds_csv({row}, path);
  std::ifstream in(path);
  std::string header, line;
  REQUIRE(std::getline(in, header));
  CHECK(header ==
        "snr_db,union_bound,union_bound_conventional,ami_lower_bound,lambda_star,kappa,"
        "snr_crossover_db");
  REQUIRE(std::getline(in, line));
  CHECK(line.find("inf") != std::string::npos);
  std::remove(path.c_str());
}
