#include "mqms/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace mqms::io {

namespace {

template <class T>
T field(const Json& doc, const char* key, const char* context) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw ConfigError(std::string(context) + ": missing field '" + key + "'");
  }
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string(context) + ": field '" + key + "' has the wrong type (" + e.what() + ")");
  }
}

template <class T>
T field_or(const Json& doc, const char* key, T fallback, const char* context) {
  if (!doc.is_object() || !doc.contains(key)) return fallback;
  return field<T>(doc, key, context);
}

// Rethrows library contract failures as configuration errors.
template <class Fn>
auto as_config(const char* context, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ContractViolation& e) {
    throw ConfigError(std::string(context) + ": " + e.what());
  }
}

}  // namespace

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(path.string() + ": cannot open for writing");
  out << text;
  if (!out) throw ConfigError(path.string() + ": write failed");
}

ChannelDistribution parse_distribution(const Json& doc) {
  constexpr const char* ctx = "channel distribution";
  const auto form = field<std::string>(doc, "form", ctx);

  if (form == "product") {
    SystemDims dims{field<std::size_t>(doc, "N", ctx), field<std::size_t>(doc, "K", ctx), field<Count>(doc, "M", ctx)};
    const Json& pmf = doc.contains("pmf") ? doc.at("pmf") : throw ConfigError("channel distribution: missing field 'pmf'");
    std::vector<std::vector<double>> links;
    const bool nested = pmf.is_array() && !pmf.empty() && pmf.front().is_array() && !pmf.front().empty() &&
                        pmf.front().front().is_array();
    try {
      if (nested) {
        for (const auto& row : pmf) {
          for (const auto& link : row) links.push_back(link.get<std::vector<double>>());
        }
      } else {
        links = pmf.get<std::vector<std::vector<double>>>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string(ctx) + ": 'pmf' must be a list of probability lists (" + e.what() + ")");
    }
    return as_config(ctx, [&] { return ChannelDistribution::product_form(dims, std::move(links)); });
  }

  if (form == "explicit") {
    if (!doc.contains("states") || !doc.at("states").is_array()) {
      throw ConfigError("channel distribution: explicit form needs a 'states' list");
    }
    std::vector<WeightedState> states;
    for (const auto& s : doc.at("states")) {
      const auto rows = field<std::vector<std::vector<Count>>>(s, "C", "explicit state");
      states.push_back({field<double>(s, "p", "explicit state"), as_config(ctx, [&] { return ChannelState::from_rows(rows); })});
    }
    if (states.empty()) throw ConfigError("channel distribution: explicit 'states' list is empty");
    Count max_entry = 1;
    for (const auto& s : states) max_entry = std::max(max_entry, s.state.max_entry());
    SystemDims dims{field_or<std::size_t>(doc, "N", states.front().state.queues(), ctx),
                    field_or<std::size_t>(doc, "K", states.front().state.servers(), ctx),
                    field_or<Count>(doc, "M", max_entry, ctx)};
    return as_config(ctx, [&] { return ChannelDistribution::explicit_states(dims, std::move(states)); });
  }

  throw ConfigError("channel distribution: unknown form '" + form + "' (expected product or explicit)");
}

Json to_json(const ChannelDistribution& dist) {
  const auto& d = dist.dims();
  Json j{{"N", d.queues}, {"K", d.servers}, {"M", d.max_rate}};
  if (dist.is_product_form()) {
    j["form"] = "product";
    Json pmf = Json::array();
    for (std::size_t n = 0; n < d.queues; ++n) {
      for (std::size_t k = 0; k < d.servers; ++k) {
        auto p = dist.link_pmf(n, k);
        pmf.push_back(std::vector<double>(p.begin(), p.end()));
      }
    }
    j["pmf"] = std::move(pmf);
    return j;
  }
  j["form"] = "explicit";
  Json states = Json::array();
  for (const auto& s : dist.states()) {
    std::vector<std::vector<Count>> rows(d.queues, std::vector<Count>(d.servers));
    for (std::size_t n = 0; n < d.queues; ++n) {
      for (std::size_t k = 0; k < d.servers; ++k) rows[n][k] = s.state.rate(n, k);
    }
    states.push_back({{"p", s.probability}, {"C", rows}});
  }
  j["states"] = std::move(states);
  return j;
}

ArrivalSpec parse_arrivals(const Json& doc) {
  constexpr const char* ctx = "arrival process";
  if (!doc.is_array()) throw ConfigError("arrivals: expected a list with one process per queue");
  std::vector<ArrivalProcess> procs;
  for (const auto& a : doc) {
    const auto kind = field<std::string>(a, "kind", ctx);
    if (kind == "bernoulli") {
      procs.emplace_back(BernoulliArrivals{field<double>(a, "rate", ctx), field_or<Count>(a, "batch", 1, ctx)});
    } else if (kind == "poisson") {
      procs.emplace_back(TruncatedPoissonArrivals{field<double>(a, "mean", ctx), field<Count>(a, "cap", ctx)});
    } else if (kind == "deterministic") {
      procs.emplace_back(DeterministicArrivals{field<std::vector<Count>>(a, "schedule", ctx)});
    } else {
      throw ConfigError("arrival process: unknown kind '" + kind + "' (expected bernoulli, poisson or deterministic)");
    }
  }
  return as_config("arrivals", [&] { return ArrivalSpec(std::move(procs)); });
}

std::string to_string(NormalSource source) {
  switch (source) {
    case NormalSource::VHat:
      return "vhat";
    case NormalSource::FullWN:
      return "full";
    case NormalSource::Imported:
      return "imported";
  }
  return "imported";
}

Json to_json(const RegionPolytope& polytope) {
  Json hs = Json::array();
  for (const auto& h : polytope.halfspaces) hs.push_back({{"alpha", h.alpha}, {"b", h.bound}});
  return Json{{"N", polytope.dims.queues},
              {"K", polytope.dims.servers},
              {"M", polytope.dims.max_rate},
              {"source", to_string(polytope.source)},
              {"halfspaces", std::move(hs)}};
}

RegionPolytope parse_polytope(const Json& doc) {
  constexpr const char* ctx = "region";
  RegionPolytope p;
  const Json* list = &doc;
  if (doc.is_object()) {
    if (!doc.contains("halfspaces")) throw ConfigError("region: missing field 'halfspaces'");
    list = &doc.at("halfspaces");
    const auto source = field_or<std::string>(doc, "source", "imported", ctx);
    p.source = source == "vhat" ? NormalSource::VHat : source == "full" ? NormalSource::FullWN : NormalSource::Imported;
  } else {
    p.source = NormalSource::Imported;
  }
  if (!list->is_array() || list->empty()) throw ConfigError("region: half-space list must be a nonempty array");

  for (const auto& h : *list) {
    HalfSpace hs{field<RateVector>(h, "alpha", "half-space"), field<double>(h, "b", "half-space")};
    if (hs.alpha.empty()) throw ConfigError("half-space: 'alpha' must be nonempty");
    bool nonzero = false;
    for (double a : hs.alpha) {
      if (!std::isfinite(a) || a < 0.0) throw ConfigError("half-space: 'alpha' entries must be finite and nonnegative");
      nonzero = nonzero || a > 0.0;
    }
    if (!nonzero) throw ConfigError("half-space: 'alpha' must not be zero");
    if (!std::isfinite(hs.bound) || hs.bound < 0.0) throw ConfigError("half-space: 'b' must be finite and nonnegative");
    if (!p.halfspaces.empty() && hs.alpha.size() != p.halfspaces.front().alpha.size()) {
      throw ConfigError("half-space: all normals must have the same length");
    }
    p.halfspaces.push_back(std::move(hs));
  }
  const std::size_t n = p.halfspaces.front().alpha.size();
  p.dims.queues = doc.is_object() ? field_or<std::size_t>(doc, "N", n, ctx) : n;
  if (p.dims.queues != n) throw ConfigError("region: 'N' does not match the normal length");
  p.dims.servers = doc.is_object() ? field_or<std::size_t>(doc, "K", 0, ctx) : 0;
  p.dims.max_rate = doc.is_object() ? field_or<Count>(doc, "M", 0, ctx) : 0;
  return p;
}

std::string format_inequalities(const RegionPolytope& polytope, int precision) {
  std::ostringstream os;
  for (const auto& h : polytope.halfspaces) {
    bool first = true;
    for (std::size_t n = 0; n < h.alpha.size(); ++n) {
      const double a = h.alpha[n];
      if (a == 0.0) continue;
      if (!first) os << " + ";
      first = false;
      if (a != 1.0) {
        if (a == std::floor(a)) {
          os << static_cast<long long>(a) << ' ';
        } else {
          os << std::setprecision(precision) << a << ' ';
        }
      }
      os << 'r' << (n + 1);
    }
    os << " <= " << std::fixed << std::setprecision(precision) << h.bound << std::defaultfloat << '\n';
  }
  return os.str();
}

Json to_json(const SimStats& stats) {
  return Json{{"horizon", stats.horizon},
              {"avg_total_occupancy", stats.avg_total_occupancy},
              {"throughput", stats.throughput},
              {"arrival_rate", stats.arrival_rate},
              {"admitted_rate", stats.admitted_rate},
              {"final_backlog", stats.final_backlog}};
}

void write_trace_csv(std::ostream& os, const SimTrace& trace) {
  const std::size_t n = trace.queues;
  os << 't';
  for (const char* prefix : {"X_", "A_", "served_"}) {
    for (std::size_t q = 1; q <= n; ++q) os << ',' << prefix << q;
  }
  os << '\n';
  for (std::size_t i = 0; i < trace.size(); ++i) {
    os << trace.slot[i];
    for (const auto* column : {&trace.backlog, &trace.arrivals, &trace.served}) {
      for (std::size_t q = 0; q < n; ++q) os << ',' << (*column)[i * n + q];
    }
    os << '\n';
  }
}

}  // namespace mqms::io
