#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "bidsim/market.hpp"

namespace bidsim {

/// Parses a market instance from its JSON form:
///   {
///     "demand": <MW>,
///     "bidders": [
///       {"capacity": <MW>, "actions": [[c, d], ...]},   // actions[0] = true cost
///       ...
///     ]
///   }
/// Bidder ids are assigned by array position. Throws std::invalid_argument on
/// schema violations and InfeasibleDemand when demand exceeds total capacity.
inline MarketInstance parse_instance(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("demand") || !doc.contains("bidders"))
    throw std::invalid_argument("instance must have 'demand' and 'bidders'");
  MarketInstance instance;
  instance.demand = doc.at("demand").get<double>();
  const auto& arr = doc.at("bidders");
  if (!arr.is_array() || arr.empty())
    throw std::invalid_argument("'bidders' must be a non-empty array");
  int id = 0;
  for (const auto& node : arr) {
    BidderSpec spec;
    spec.id = id++;
    spec.capacity = node.at("capacity").get<double>();
    for (const auto& pair : node.at("actions")) {
      if (!pair.is_array() || pair.size() != 2)
        throw std::invalid_argument("each action must be a [c, d] pair");
      spec.actions.push_back(
          BidFunction{pair[0].get<double>(), pair[1].get<double>()});
    }
    instance.bidders.push_back(std::move(spec));
  }
  instance.validate();
  return instance;
}

inline MarketInstance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("cannot open instance file: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("malformed instance JSON (" + path.string() +
                                "): " + e.what());
  }
  return parse_instance(doc);
}

inline nlohmann::json to_json(const MarketInstance& instance) {
  nlohmann::json doc;
  doc["demand"] = instance.demand;
  doc["bidders"] = nlohmann::json::array();
  for (const auto& b : instance.bidders) {
    nlohmann::json node;
    node["capacity"] = b.capacity;
    node["actions"] = nlohmann::json::array();
    for (const auto& a : b.actions) node["actions"].push_back({a.c, a.d});
    doc["bidders"].push_back(std::move(node));
  }
  return doc;
}

}  // namespace bidsim
