#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "mqms/core.hpp"
#include "mqms/flowctl.hpp"
#include "mqms/region.hpp"
#include "mqms/sim.hpp"

namespace mqms::io {

using Json = nlohmann::json;

/// Reads a JSON document; parse errors carry the file name and line/column.
Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// {"N":..,"K":..,"M":..,"form":"product","pmf":[[...] per link]} or
/// {"form":"explicit","states":[{"p":..,"C":[[...]]}]}. Product pmfs may also be
/// nested N x K x (M+1).
ChannelDistribution parse_distribution(const Json& doc);
Json to_json(const ChannelDistribution& dist);

/// [{"kind":"bernoulli","rate":0.3,"batch":1}, {"kind":"poisson","mean":5,"cap":20},
///  {"kind":"deterministic","schedule":[1,0]}]
ArrivalSpec parse_arrivals(const Json& doc);

/// {"N":..,"K":..,"M":..,"source":"vhat","halfspaces":[{"alpha":[..],"b":..}]};
/// a bare half-space list is also accepted on input.
Json to_json(const RegionPolytope& polytope);
RegionPolytope parse_polytope(const Json& doc);

/// One inequality per line, e.g. "r1 + 2 r2 <= 10.2893".
std::string format_inequalities(const RegionPolytope& polytope, int precision = 4);

Json to_json(const SimStats& stats);
/// t, X_1..X_N, A_1..A_N, served_1..served_N
void write_trace_csv(std::ostream& os, const SimTrace& trace);

std::string to_string(NormalSource source);

}  // namespace mqms::io
