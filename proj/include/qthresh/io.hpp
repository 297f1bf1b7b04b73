// Copyright 2026 The qthresh Authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QTHRESH_IO_HPP_
#define QTHRESH_IO_HPP_

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "json.hpp"
#include "qthresh/errors.hpp"
#include "qthresh/model.hpp"
#include "qthresh/reward_dist.hpp"

// JSON form of an instance, schema version 1 (schema/instance.schema.json):
//
//   {
//     "schema_version": 1,
//     "horizon": 1000,
//     "capacities": [250.0],
//     "types": [{"consumption": [1.0],
//                "reward": {"kind": "uniform", "params": {"lo": 1, "hi": 2}}}],
//     "schedule": {"generator": "stationary", "params": {"probs": [1.0]}}
//   }
//
// "schedule" may instead be {"matrix": [[...], ...]} with one row per period.
namespace qthresh {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

namespace internal {

inline void reject_unknown_keys(const Json& obj, std::initializer_list<const char*> allowed,
                                const std::string& where) {
  if (!obj.is_object()) throw InputError(where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw InputError(where + ": unknown field '" + key + "'");
  }
}

inline const Json& require(const Json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw InputError(where + ": missing field '" + key + "'");
  return *it;
}

inline double as_number(const Json& v, const std::string& what) {
  if (!v.is_number()) throw InputError(what + " must be a number");
  return v.get<double>();
}

inline std::vector<double> as_numbers(const Json& v, const std::string& what) {
  if (!v.is_array()) throw InputError(what + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(as_number(x, what));
  return out;
}

inline double param(const Json& params, const char* key, const std::string& where) {
  return as_number(require(params, key, where), where + "." + key);
}

}  // namespace internal

inline RewardDist reward_from_json(const Json& doc, const std::string& where = "reward") {
  using internal::param;
  internal::reject_unknown_keys(doc, {"kind", "params"}, where);
  const Json& kind_v = internal::require(doc, "kind", where);
  if (!kind_v.is_string()) throw InputError(where + ".kind must be a string");
  const std::string kind = kind_v.get<std::string>();
  const Json& p = internal::require(doc, "params", where);
  const std::string pw = where + ".params";
  if (kind == "uniform") {
    internal::reject_unknown_keys(p, {"lo", "hi"}, pw);
    return RewardDist::uniform(param(p, "lo", pw), param(p, "hi", pw));
  }
  if (kind == "truncated_triangular") {
    internal::reject_unknown_keys(p, {"lo", "hi", "left", "mode", "right"}, pw);
    return RewardDist::truncated_triangular(param(p, "lo", pw), param(p, "hi", pw),
                                            param(p, "left", pw), param(p, "mode", pw),
                                            param(p, "right", pw));
  }
  if (kind == "truncated_mixture") {
    internal::reject_unknown_keys(p, {"weight", "lo1", "hi1", "lo2", "hi2"}, pw);
    return RewardDist::truncated_mixture(param(p, "weight", pw), param(p, "lo1", pw),
                                         param(p, "hi1", pw), param(p, "lo2", pw),
                                         param(p, "hi2", pw));
  }
  throw InputError(where + ": unknown reward kind '" + kind + "'");
}

inline Json reward_to_json(const RewardDist& dist) {
  static const char* const kUniform[] = {"lo", "hi"};
  static const char* const kTriangular[] = {"lo", "hi", "left", "mode", "right"};
  static const char* const kMixture[] = {"weight", "lo1", "hi1", "lo2", "hi2"};
  const char* const* names = kUniform;
  if (dist.kind() == RewardKind::kTruncatedTriangular) names = kTriangular;
  if (dist.kind() == RewardKind::kTruncatedMixture) names = kMixture;
  Json params = Json::object();
  for (std::size_t k = 0; k < dist.params().size(); ++k) params[names[k]] = dist.params()[k];
  return {{"kind", to_string(dist.kind())}, {"params", params}};
}

// Builds the schedule for a horizon T from {"generator", "params"} or {"matrix"}.
inline ArrivalSchedule schedule_from_json(const Json& doc, int horizon, int num_types) {
  const std::string where = "schedule";
  if (!doc.is_object()) throw InputError("schedule must be a JSON object");
  if (doc.contains("matrix")) {
    internal::reject_unknown_keys(doc, {"matrix"}, where);
    const Json& m = doc["matrix"];
    if (!m.is_array()) throw InputError("schedule.matrix must be an array of rows");
    std::vector<std::vector<double>> rows;
    for (const auto& row : m) rows.push_back(internal::as_numbers(row, "schedule.matrix row"));
    if (static_cast<int>(rows.size()) != horizon) {
      throw InputError("schedule.matrix has " + std::to_string(rows.size()) +
                       " rows but the horizon is " + std::to_string(horizon));
    }
    return ArrivalSchedule::from_rows(rows);
  }
  internal::reject_unknown_keys(doc, {"generator", "params"}, where);
  const Json& gen_v = internal::require(doc, "generator", where);
  if (!gen_v.is_string()) throw InputError("schedule.generator must be a string");
  const std::string gen = gen_v.get<std::string>();
  const Json params = doc.value("params", Json::object());
  const std::string pw = "schedule.params";
  if (gen == "stationary") {
    internal::reject_unknown_keys(params, {"probs"}, pw);
    return ArrivalSchedule::stationary(
        horizon, internal::as_numbers(internal::require(params, "probs", pw), pw + ".probs"));
  }
  if (gen == "piecewise") {
    internal::reject_unknown_keys(params, {"segments"}, pw);
    const Json& segs = internal::require(params, "segments", pw);
    if (!segs.is_array()) throw InputError("schedule.params.segments must be an array");
    std::vector<ArrivalSchedule::Segment> out;
    for (const auto& s : segs) {
      internal::reject_unknown_keys(s, {"start_fraction", "probs"}, pw + ".segments[]");
      out.push_back({internal::param(s, "start_fraction", pw),
                     internal::as_numbers(internal::require(s, "probs", pw), pw + ".probs")});
    }
    return ArrivalSchedule::piecewise(horizon, out);
  }
  if (gen == "sinusoidal") {
    internal::reject_unknown_keys(params, {"base", "amplitude", "cycles", "phase"}, pw);
    const auto base = internal::as_numbers(internal::require(params, "base", pw), pw + ".base");
    const auto amp =
        internal::as_numbers(internal::require(params, "amplitude", pw), pw + ".amplitude");
    std::vector<double> phase(base.size(), 0.0);
    if (params.contains("phase")) phase = internal::as_numbers(params["phase"], pw + ".phase");
    return ArrivalSchedule::sinusoidal(horizon, base, amp, internal::param(params, "cycles", pw),
                                       phase);
  }
  if (gen == "example1") {
    internal::reject_unknown_keys(params, {}, pw);
    if (num_types != 2) throw InputError("example1 schedule needs exactly two types");
    return ArrivalSchedule::example1(horizon);
  }
  if (gen == "random_map") {
    internal::reject_unknown_keys(params, {"gamma", "seed"}, pw);
    const Json& seed = internal::require(params, "seed", pw);
    if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
      throw InputError("schedule.params.seed must be a non-negative integer");
    }
    return ArrivalSchedule::random_map(horizon, num_types, internal::param(params, "gamma", pw),
                                       seed.get<std::uint64_t>());
  }
  throw InputError("unknown schedule generator '" + gen + "'");
}

inline std::vector<QueryType> types_from_json(const Json& doc) {
  if (!doc.is_array() || doc.empty()) throw InputError("types must be a non-empty array");
  std::vector<QueryType> out;
  for (std::size_t j = 0; j < doc.size(); ++j) {
    const std::string where = "types[" + std::to_string(j) + "]";
    internal::reject_unknown_keys(doc[j], {"consumption", "reward"}, where);
    out.push_back({internal::as_numbers(internal::require(doc[j], "consumption", where),
                                        where + ".consumption"),
                   reward_from_json(internal::require(doc[j], "reward", where), where + ".reward")});
  }
  return out;
}

inline void check_schema_version(const Json& doc) {
  if (!doc.contains("schema_version")) return;
  const Json& v = doc["schema_version"];
  if (!v.is_number_integer() || v.get<int>() != kSchemaVersion) {
    throw InputError("unsupported schema_version (expected " + std::to_string(kSchemaVersion) +
                     ")");
  }
}

inline Instance instance_from_json(const Json& doc) {
  internal::reject_unknown_keys(doc, {"schema_version", "horizon", "capacities", "types", "schedule"},
                                "instance");
  check_schema_version(doc);
  const Json& h = internal::require(doc, "horizon", "instance");
  if (!h.is_number_integer() || h.get<long long>() < 1 || h.get<long long>() > (1LL << 30)) {
    throw InputError("horizon must be a positive integer");
  }
  Instance inst;
  inst.types = types_from_json(internal::require(doc, "types", "instance"));
  inst.capacities =
      internal::as_numbers(internal::require(doc, "capacities", "instance"), "capacities");
  inst.schedule = schedule_from_json(internal::require(doc, "schedule", "instance"), h.get<int>(),
                                     static_cast<int>(inst.types.size()));
  inst.validate();
  return inst;
}

// Serializes with an explicit schedule matrix, so the round trip is exact.
inline Json instance_to_json(const Instance& inst) {
  Json types = Json::array();
  for (const auto& t : inst.types) {
    types.push_back({{"consumption", t.consumption}, {"reward", reward_to_json(t.reward)}});
  }
  Json rows = Json::array();
  for (int t = 0; t < inst.horizon(); ++t) {
    const auto r = inst.schedule.row(t);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  return {{"schema_version", kSchemaVersion},
          {"horizon", inst.horizon()},
          {"capacities", inst.capacities},
          {"types", types},
          {"schedule", {{"matrix", rows}}}};
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

}  // namespace qthresh

#endif  // QTHRESH_IO_HPP_
