#include "pathflow/serialize.hpp"

#include <cstdio>
#include <ostream>

#include "pathflow/errors.hpp"

namespace pathflow {
namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void csv_header(std::ostream& os, Eigen::Index d) {
  os << 't';
  for (Eigen::Index i = 0; i < d; ++i) os << ",x" << i;
  os << '\n';
}

template <typename Row>
void csv_row(std::ostream& os, const std::string& label, const Row& row) {
  os << label;
  for (Eigen::Index i = 0; i < row.size(); ++i) os << ',' << fmt17(row(i));
  os << '\n';
}

nlohmann::json grid_json(const TimeGrid& g) { return {{"T", g.horizon()}, {"n_steps", g.n_steps()}}; }

TimeGrid grid_from(const nlohmann::json& j) {
  if (!j.contains("grid")) throw ConfigError("envelope: missing grid");
  const auto& g = j.at("grid");
  return TimeGrid(g.at("T").get<double>(), g.at("n_steps").get<std::size_t>());
}

nlohmann::json rows_json(const NodeMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

NodeMatrix rows_from(const nlohmann::json& rows) {
  if (!rows.is_array() || rows.empty()) throw ConfigError("envelope: expected non-empty array of rows");
  const auto d = static_cast<Eigen::Index>(rows.front().size());
  NodeMatrix m(static_cast<Eigen::Index>(rows.size()), d);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != static_cast<std::size_t>(d)) throw ConfigError("envelope: ragged rows");
    for (Eigen::Index c = 0; c < d; ++c) m(static_cast<Eigen::Index>(r), c) = rows[r][c].get<double>();
  }
  return m;
}

Vec vec_from(const nlohmann::json& a) {
  Vec v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

nlohmann::json vec_json(const Vec& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace

void write_csv(std::ostream& os, const WindowPath& path) {
  csv_header(os, path.dim());
  for (std::size_t i = 0; i <= path.t_index; ++i) {
    csv_row(os, fmt17(path.grid.node(i)), path.values.row(static_cast<Eigen::Index>(i)));
  }
  if (path.terminal.transpose() != path.values.row(path.values.rows() - 1)) {
    csv_row(os, "terminal", path.terminal.transpose());
  }
}

void write_csv(std::ostream& os, const ProductState& x) {
  csv_header(os, x.dim());
  for (std::size_t j = 0; j <= x.grid.n_steps(); ++j) {
    csv_row(os, fmt17(x.grid.tail_node(j)), x.tail.row(static_cast<Eigen::Index>(j)));
  }
  csv_row(os, "head", x.head.transpose());
}

nlohmann::json to_json(const ProductState& x) {
  return {{"grid", grid_json(x.grid)}, {"head", vec_json(x.head)}, {"tail", rows_json(x.tail)}};
}

nlohmann::json to_json(const WindowPath& path) {
  return {{"grid", grid_json(path.grid)},
          {"t_index", path.t_index},
          {"values", rows_json(path.values)},
          {"terminal", vec_json(path.terminal)}};
}

ProductState state_from_json(const nlohmann::json& j) {
  try {
    return ProductState(grid_from(j), vec_from(j.at("head")), rows_from(j.at("tail")));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("state envelope: ") + e.what());
  }
}

WindowPath path_from_json(const nlohmann::json& j) {
  try {
    return WindowPath(grid_from(j), j.at("t_index").get<std::size_t>(), rows_from(j.at("values")),
                      vec_from(j.at("terminal")));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("path envelope: ") + e.what());
  }
}

}  // namespace pathflow
