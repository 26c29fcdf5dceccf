#include "grasscode/storage.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

#include "grasscode/errors.hpp"

namespace grasscode {

using nlohmann::json;

SparseConstellationStore::SparseConstellationStore(int t_slots, int m_antennas, int sparsity,
                                                   int cardinality,
                                                   std::vector<std::int32_t> cols,
                                                   std::vector<Cplx> vals)
    : t_(t_slots), m_(m_antennas), s_(sparsity), card_(cardinality),
      cols_(std::move(cols)), vals_(std::move(vals)) {
  if (cols_.size() != static_cast<size_t>(card_) * t_ || vals_.size() != cols_.size()) {
    throw std::invalid_argument("SparseConstellationStore: slot count mismatch");
  }
}

SparseConstellationStore to_sparse_store(const Constellation& c) {
  const int t = c.t_slots();
  const int m = c.m_antennas();
  const int card = c.size();
  std::vector<std::int32_t> cols(static_cast<size_t>(card) * t,
                                 static_cast<std::int32_t>(m));
  std::vector<Cplx> vals(static_cast<size_t>(card) * t, Cplx(0.0, 0.0));
  int sparsity = -1;
  for (int i = 0; i < card; ++i) {
    const CMat& x = c[i].matrix();
    int populated = 0;
    for (int r = 0; r < t; ++r) {
      int found = -1;
      for (int col = 0; col < m; ++col) {
        if (std::abs(x(r, col)) > SparseConstellationStore::kSparsityThreshold) {
          if (found >= 0) {
            throw NotSparseError("to_sparse_store: codeword " + std::to_string(i) +
                                 " row " + std::to_string(r) + " has multiple nonzeros");
          }
          found = col;
        }
      }
      if (found >= 0) {
        cols[static_cast<size_t>(i) * t + r] = static_cast<std::int32_t>(found);
        vals[static_cast<size_t>(i) * t + r] = x(r, found);
        ++populated;
      }
    }
    if (sparsity < 0) {
      sparsity = populated;
    } else if (populated != sparsity) {
      throw NotSparseError("to_sparse_store: codewords disagree on sparsity");
    }
  }
  return SparseConstellationStore(t, m, sparsity, card, std::move(cols), std::move(vals));
}

Constellation densify(const SparseConstellationStore& store, std::string provenance) {
  std::vector<GrassmannPoint> points;
  points.reserve(static_cast<size_t>(store.size()));
  for (int i = 0; i < store.size(); ++i) {
    CMat x = CMat::Zero(store.t_slots(), store.m_antennas());
    for (int r = 0; r < store.t_slots(); ++r) {
      const std::int32_t col = store.col(i, r);
      if (col != store.empty_sentinel()) x(r, col) = store.val(i, r);
    }
    points.emplace_back(std::move(x));
  }
  return Constellation(std::move(points), std::move(provenance));
}

namespace {

json complex_to_json(const Cplx& z) { return json{{"re", z.real()}, {"im", z.imag()}}; }

Cplx complex_from_json(const json& j) {
  return {j.at("re").get<double>(), j.at("im").get<double>()};
}

}  // namespace

void save_constellation(const Constellation& c, const std::string& path,
                        ConstellationFormat format) {
  json doc;
  doc["T"] = c.t_slots();
  doc["M"] = c.m_antennas();
  doc["cardinality"] = c.size();
  doc["provenance"] = c.provenance();
  if (format == ConstellationFormat::kDense) {
    doc["format"] = "dense";
    json entries = json::array();
    for (int i = 0; i < c.size(); ++i) {
      json point = json::array();
      for (int r = 0; r < c.t_slots(); ++r) {
        json row = json::array();
        for (int col = 0; col < c.m_antennas(); ++col) {
          row.push_back(complex_to_json(c[i].matrix()(r, col)));
        }
        point.push_back(std::move(row));
      }
      entries.push_back(std::move(point));
    }
    doc["entries"] = std::move(entries);
  } else {
    const SparseConstellationStore store = to_sparse_store(c);
    doc["format"] = "ellpack";
    doc["s"] = store.sparsity();
    json entries = json::array();
    for (int i = 0; i < store.size(); ++i) {
      json rows = json::array();
      for (int r = 0; r < store.t_slots(); ++r) {
        const std::int32_t col = store.col(i, r);
        json slot = complex_to_json(store.val(i, r));
        slot["col"] = col == store.empty_sentinel() ? 0 : col + 1;  // 1-based, 0 = empty
        rows.push_back(std::move(slot));
      }
      entries.push_back(std::move(rows));
    }
    doc["entries"] = std::move(entries);
  }
  std::ofstream out(path);
  if (!out) throw LoadError("save_constellation: cannot open " + path);
  out << doc.dump(1) << "\n";
  if (!out) throw LoadError("save_constellation: write failed for " + path);
}

Constellation load_constellation(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("load_constellation: cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw LoadError("load_constellation: parse error: " + std::string(e.what()));
  }
  try {
    const int t = doc.at("T").get<int>();
    const int m = doc.at("M").get<int>();
    const int card = doc.at("cardinality").get<int>();
    const std::string format = doc.at("format").get<std::string>();
    const std::string provenance = doc.value("provenance", std::string{});
    const json& entries = doc.at("entries");
    if (static_cast<int>(entries.size()) != card) {
      throw LoadError("load_constellation: cardinality mismatch");
    }
    std::vector<GrassmannPoint> points;
    points.reserve(static_cast<size_t>(card));
    for (const json& point : entries) {
      CMat x = CMat::Zero(t, m);
      if (format == "dense") {
        for (int r = 0; r < t; ++r) {
          for (int col = 0; col < m; ++col) {
            x(r, col) = complex_from_json(point.at(static_cast<size_t>(r))
                                              .at(static_cast<size_t>(col)));
          }
        }
      } else if (format == "ellpack") {
        for (int r = 0; r < t; ++r) {
          const json& slot = point.at(static_cast<size_t>(r));
          const int col = slot.at("col").get<int>();
          if (col < 0 || col > m) throw LoadError("load_constellation: bad column index");
          if (col != 0) x(r, col - 1) = complex_from_json(slot);
        }
      } else {
        throw LoadError("load_constellation: unknown format '" + format + "'");
      }
      points.emplace_back(std::move(x));
    }
    Constellation c(std::move(points), provenance);
    for (int i = 0; i < c.size(); ++i) {
      const ValidationReport report = validate(c[i]);
      if (!report.ok) {
        throw LoadError("load_constellation: codeword " + std::to_string(i) +
                        " violates the Stiefel condition (deviation " +
                        std::to_string(report.max_deviation) + ")");
      }
    }
    return c;
  } catch (const json::exception& e) {
    throw LoadError("load_constellation: schema violation: " + std::string(e.what()));
  } catch (const std::invalid_argument& e) {
    throw LoadError("load_constellation: schema violation: " + std::string(e.what()));
  }
}

namespace {

std::string sci(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

}  // namespace

void write_results_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw LoadError("write_results_csv: cannot open " + path);
  out << "snr_db,metric,value,half_width,frames\n";
  for (const ResultRow& r : rows) {
    out << sci(r.snr_db) << ',' << r.metric << ',' << sci(r.value) << ','
        << sci(r.half_width) << ',' << r.frames << '\n';
  }
  if (!out) throw LoadError("write_results_csv: write failed for " + path);
}

void write_bounds_csv(const std::vector<BoundsRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw LoadError("write_bounds_csv: cannot open " + path);
  out << "snr_db,union_bound,union_bound_conventional,ami_lower_bound,lambda_star,kappa,"
         "snr_crossover_db\n";
  for (const BoundsRow& r : rows) {
    out << sci(r.snr_db) << ',' << sci(r.union_bound) << ','
        << sci(r.union_bound_conventional) << ',' << sci(r.ami_lower_bound) << ','
        << sci(r.lambda_star) << ',' << sci(r.kappa) << ',' << sci(r.snr_crossover_db)
        << '\n';
  }
  if (!out) throw LoadError("write_bounds_csv: write failed for " + path);
}

}  // namespace grasscode
