#include "dicode/envs/scenario.hpp"

#include "dicode/core/errors.hpp"
#include "dicode/envs/nav.hpp"
#include "dicode/envs/warehouse.hpp"
#include "dicode/envs/wind.hpp"
#include "dicode/nn/json_util.hpp"

namespace dicode::envs {

ScenarioPtr make_scenario(const std::string& id, const ScenarioOptions& options) {
  const int h = options.horizon;
  if (id == "nav") return std::make_shared<NavScenario>(h > 0 ? h : 64);
  if (id == "warehouse") return std::make_shared<WarehouseMaskScenario>(h > 0 ? h : 128);
  if (id == "warehouse_coord") return std::make_shared<WarehouseCoordScenario>(h > 0 ? h : 128);
  if (id == "wind") return std::make_shared<WindScenario>(h > 0 ? h : 32);
  throw InvalidArgument("unknown scenario '" + id + "'");
}

std::vector<std::string> scenario_ids() { return {"nav", "warehouse", "warehouse_coord", "wind"}; }

Vec shaped_reward(const Vec& phi_prev, const Vec& phi_next, const Vec& base) {
  if (phi_prev.size() != base.size() || phi_next.size() != base.size())
    throw InvalidArgument("shaped_reward: size mismatch");
  return base + (phi_next - phi_prev);
}

std::string serialize_design(const std::string& scenario_id, const Vec& theta, const nlohmann::json& meta) {
  nlohmann::json j{{"scenario_id", scenario_id}, {"design", nn::vec_to_json(theta)}};
  if (!meta.is_null()) j["meta"] = meta;
  return j.dump();
}

DesignRecord parse_design(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  DesignRecord r;
  r.scenario_id = j.at("scenario_id").get<std::string>();
  r.theta = nn::vec_from_json(j.at("design"));
  if (j.contains("meta")) r.meta = j.at("meta");
  return r;
}

}  // namespace dicode::envs
