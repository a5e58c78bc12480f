#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "gne/games.hpp"

namespace gne {

using Json = nlohmann::json;

namespace detail {

inline Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("game json: matrix must be a nonempty array");
  const std::size_t rows = j.size();
  const std::size_t cols = j.at(0).size();
  Vector data;
  data.reserve(rows * cols);
  for (const auto& row : j) {
    if (!row.is_array() || row.size() != cols)
      throw std::invalid_argument("game json: ragged matrix");
    for (const auto& v : row) data.push_back(v.get<double>());
  }
  return Matrix(rows, cols, std::move(data));
}

}  // namespace detail

inline Json to_json(const FeasibleSet& s) {
  Json j;
  j["dims"] = s.layout().dims();
  j["lower"] = s.box().lower;
  j["upper"] = s.box().upper;
  std::visit(
      [&](const auto& c) {
        using C = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<C, NoJoint>) {
          j["joint"] = {{"kind", "none"}};
        } else if constexpr (std::is_same_v<C, AffineHalfspace>) {
          j["joint"] = {{"kind", "affine"}, {"w", c.w}, {"r", c.r}};
        } else {
          j["joint"] = {{"kind", "ball"}, {"radius", c.radius}};
        }
      },
      s.joint());
  return j;
}

inline FeasibleSet feasible_set_from_json(const Json& j) {
  ProfileLayout layout(j.at("dims").get<std::vector<std::size_t>>());
  BoxBounds box{j.at("lower").get<Vector>(), j.at("upper").get<Vector>()};
  const Json& jc = j.at("joint");
  const auto kind = jc.at("kind").get<std::string>();
  JointConstraint joint;
  if (kind == "none")
    joint = NoJoint{};
  else if (kind == "affine")
    joint = AffineHalfspace{jc.at("w").get<Vector>(), jc.at("r").get<double>()};
  else if (kind == "ball")
    joint = Ball{jc.at("radius").get<double>()};
  else
    throw std::invalid_argument("game json: unknown joint constraint '" + kind + "'");
  return FeasibleSet(std::move(layout), std::move(box), std::move(joint));
}

/// Explicit matrices/shifts are always written, so a file replays without the
/// generator even if the seeding scheme changes.
inline Json to_json(const GameSpec& g) {
  Json j;
  j["family"] = to_string(g.family());
  j["n"] = g.layout().num_players();
  j["m"] = g.layout().dim(0);
  if (const auto& info = g.info()) {
    j["seed"] = info->seed;
    j["constraint"] = to_string(info->constraint);
    j["canonical"] = info->canonical;
  }
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, BilinearZeroSum>) {
          j["payoff"] = {{"q", detail::matrix_to_json(p.q)}};
        } else if constexpr (std::is_same_v<P, BilinearGeneralSum>) {
          j["payoff"] = {{"q1", detail::matrix_to_json(p.q1)}, {"q2", detail::matrix_to_json(p.q2)}};
        } else {
          j["payoff"] = {{"shifts", p.shifts}};
        }
      },
      g.payoff());
  j["feasible"] = to_json(g.feasible());
  return j;
}

inline GameSpec game_from_json(const Json& j) {
  const Family family = parse_family(j.at("family").get<std::string>());
  const Json& p = j.at("payoff");
  Payoff payoff;
  switch (family) {
    case Family::BilinearZeroSum:
      payoff = BilinearZeroSum{detail::matrix_from_json(p.at("q"))};
      break;
    case Family::BilinearGeneralSum:
      payoff = BilinearGeneralSum{detail::matrix_from_json(p.at("q1")),
                                  detail::matrix_from_json(p.at("q2"))};
      break;
    case Family::MonotoneNormMin:
      payoff = MonotoneNormMin{p.at("shifts").get<std::vector<Vector>>()};
      break;
  }
  std::optional<BenchmarkInfo> info;
  if (j.contains("seed")) {
    info = BenchmarkInfo{family,
                         j.at("n").get<std::size_t>(),
                         j.at("m").get<std::size_t>(),
                         parse_constraint(j.at("constraint").get<std::string>()),
                         j.at("seed").get<std::uint64_t>(),
                         j.value("canonical", true)};
  }
  return GameSpec(std::move(payoff), feasible_set_from_json(j.at("feasible")), info);
}

}  // namespace gne
