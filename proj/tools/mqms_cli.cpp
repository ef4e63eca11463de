#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>

#include "mqms/error.hpp"
#include "mqms/flowctl.hpp"
#include "mqms/fluid.hpp"
#include "mqms/io.hpp"
#include "mqms/optimize.hpp"
#include "mqms/parallel.hpp"
#include "mqms/region.hpp"
#include "mqms/rng.hpp"
#include "mqms/sim.hpp"

namespace fs = std::filesystem;
using namespace mqms;
using io::Json;

namespace {

// Thrown when a command ran but one of its own validations did not hold.
struct ValidationFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Shared {
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string out_dir = ".";
  std::size_t jobs = 1;

  [[nodiscard]] fs::path resolve(const std::string& path) const {
    const fs::path p(path);
    return p.is_absolute() ? p : fs::path(out_dir) / p;
  }
};

void configure_logging() {
  auto logger = spdlog::stderr_color_mt("mqms");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("MQMS_LOG")) {
    const std::string value(env);
    const auto level = spdlog::level::from_str(value);
    if (level == spdlog::level::off && value != "off") {
      spdlog::warn("MQMS_LOG='{}' is not a level (trace, debug, info, warn, error, critical, off)", value);
    } else {
      spdlog::set_level(level);
    }
  }
}

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": cannot parse '" + item + "' as a number");
    }
  }
  if (out.empty()) throw ConfigError(std::string(what) + ": expected a comma-separated list");
  return out;
}

std::string join(std::span<const double> v, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

// A channel entry is an inline distribution or a path relative to the config.
ChannelDistribution load_channel(const Json& doc, const fs::path& config_path) {
  if (doc.is_object() && doc.contains("channel")) {
    const Json& c = doc.at("channel");
    if (c.is_string()) {
      const fs::path p = fs::path(c.get<std::string>());
      return io::parse_distribution(io::read_json_file(p.is_absolute() ? p : config_path.parent_path() / p));
    }
    return io::parse_distribution(c);
  }
  return io::parse_distribution(doc);
}

const Json& require_field(const Json& doc, const char* key, const fs::path& file) {
  if (!doc.is_object() || !doc.contains(key)) throw ConfigError(file.string() + ": missing field '" + key + "'");
  return doc.at(key);
}

template <class T>
T json_or(const Json& doc, const char* key, T fallback, const fs::path& file) {
  if (!doc.is_object() || !doc.contains(key)) return fallback;
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(file.string() + ": field '" + key + "' has the wrong type");
  }
}

void write_output(const fs::path& path, const std::string& text) {
  io::write_text_file(path, text);
  spdlog::info("wrote {}", path.string());
}

// ---------------------------------------------------------------- region

struct RegionArgs {
  std::string config;
  std::size_t n = 0;
  Count m = 0;
  bool count_only = false;
  std::string normals = "vhat";
  std::string out = "region.json";
  std::string text_out = "region.txt";
};

void print_counts(std::size_t n, Count m) {
  const auto c = candidate_counts(n, m);
  std::cout << "N=" << n << " M=" << m << "\n"
            << "weight set size |W|: " << c.weight_set_size << "\n"
            << "candidates (V-hat): " << c.candidates << "\n"
            << "full grid minus zero: " << c.full_grid_minus_zero << "\n";
  if (c.multiset_weight_size != c.weight_set_size) {
    std::cout << "note: counting products as a multiset gives |W| = " << c.multiset_weight_size
              << " and |W|^N - 1 = " << static_cast<std::uint64_t>(c.multiset_grid_minus_zero)
              << "; W is a set here, so the distinct-product values above are reported\n";
  }
}

int cmd_region(const RegionArgs& a, const Shared& shared) {
  if (a.normals != "vhat" && a.normals != "full") throw ConfigError("--normals must be vhat or full");
  if (a.config.empty()) {
    if (a.n == 0 || a.m == 0) throw ConfigError("region: give --config, or --N and --M");
    print_counts(a.n, a.m);
    if (a.count_only) return 0;
    const auto normals = candidate_weights(a.n, a.m);
    Json list = Json::array();
    for (const auto& w : normals) list.push_back(std::vector<Count>(w.entries().begin(), w.entries().end()));
    write_output(shared.resolve(a.out), Json{{"N", a.n}, {"M", a.m}, {"normals", list}}.dump(2) + "\n");
    return 0;
  }

  const fs::path path(a.config);
  const auto doc = io::read_json_file(path);
  const auto dist = load_channel(doc, path);
  const auto& dims = dist.dims();
  print_counts(dims.queues, dims.max_rate);
  if (a.count_only) return 0;

  PolytopeOptions options;
  options.normals = a.normals == "full" ? NormalMode::FullWN : NormalMode::VHat;
  const auto poly = stability_polytope(dist, options);
  spdlog::info("{} half-spaces from {} normals", poly.halfspaces.size(), a.normals);

  const Json out = io::to_json(poly);
  // The written file must load back into the same polytope.
  const auto back = io::parse_polytope(Json::parse(out.dump()));
  bool same = back.halfspaces.size() == poly.halfspaces.size();
  for (std::size_t i = 0; same && i < poly.halfspaces.size(); ++i) {
    same = back.halfspaces[i].alpha == poly.halfspaces[i].alpha && back.halfspaces[i].bound == poly.halfspaces[i].bound;
  }
  if (!same) throw ValidationFailed("region JSON does not round-trip");

  const std::string text = io::format_inequalities(poly);
  write_output(shared.resolve(a.out), out.dump(2) + "\n");
  write_output(shared.resolve(a.text_out), text);
  std::cout << text;
  return 0;
}

// ---------------------------------------------------------------- check

int cmd_check(const std::string& region, const std::string& lambda_text) {
  const auto poly = io::parse_polytope(io::read_json_file(region));
  const auto lambda = parse_list(lambda_text, "--lambda");
  if (lambda.size() != poly.dims.queues) throw ConfigError("--lambda must have one entry per queue");
  for (double l : lambda) {
    if (!(l >= 0.0)) throw ConfigError("--lambda entries must be nonnegative");
  }
  const double delta = margin(lambda, poly);
  constexpr double kBoundaryTol = 1e-12;
  const char* verdict = delta > kBoundaryTol ? "inside" : delta < -kBoundaryTol ? "outside" : "boundary";
  std::cout << std::setprecision(12) << "delta = " << delta << "\n" << verdict << "\n";
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimArgs {
  std::string config;
  std::string policy;
  std::optional<std::uint64_t> slots;
  std::size_t replications = 1;
  std::string trace_out;
  std::string stats_out = "stats.json";
};

int cmd_simulate(const SimArgs& a, const Shared& shared) {
  const fs::path path(a.config);
  const auto doc = io::read_json_file(path);
  const auto dist = load_channel(doc, path);
  const auto arrivals = io::parse_arrivals(require_field(doc, "arrivals", path));
  if (arrivals.queues() != dist.dims().queues) throw ConfigError(path.string() + ": arrivals must cover every queue");
  const std::string policy = a.policy.empty() ? json_or<std::string>(doc, "policy", "mw", path) : a.policy;
  if (policy != "mw") throw ConfigError("unsupported policy '" + policy + "' (only mw is available)");

  SimConfig cfg;
  cfg.slots = a.slots ? *a.slots : json_or<std::uint64_t>(doc, "slots", 100000, path);
  cfg.seed = shared.seed_given ? shared.seed : json_or<std::uint64_t>(doc, "seed", shared.seed, path);
  cfg.record_trace = !a.trace_out.empty();
  if (a.replications == 0) throw ConfigError("--replications must be at least 1");

  const auto poly = stability_polytope(dist);
  const double delta = margin(arrivals.mean_rates(), poly);

  auto decorate = [&](Json j) {
    j["margin"] = delta;
    if (delta > 0.0) {
      j["delay_bound"] = delay_bound(dist.dims().queues, arrivals.second_moment_bound(), dist.dims().max_rate,
                                     dist.dims().servers, delta);
    }
    return j;
  };

  Json stats;
  if (a.replications == 1) {
    const auto res = run(dist, arrivals, MaxWeightPolicy{}, cfg);
    stats = decorate(io::to_json(res.stats));
    stats["seed"] = cfg.seed;
    if (cfg.record_trace) {
      std::ostringstream csv;
      io::write_trace_csv(csv, res.trace);
      write_output(shared.resolve(a.trace_out), csv.str());
    }
  } else {
    if (cfg.record_trace) spdlog::warn("--trace-out is ignored with several replications");
    cfg.record_trace = false;
    const auto all = run_replications(dist, arrivals, MaxWeightPolicy{}, cfg, a.replications, shared.jobs);
    stats = Json::array();
    for (std::size_t r = 0; r < all.size(); ++r) {
      Json j = decorate(io::to_json(all[r]));
      j["seed"] = derive_seed(cfg.seed, r);
      stats.push_back(std::move(j));
    }
  }
  const std::string text = stats.dump(2) + "\n";
  write_output(shared.resolve(a.stats_out), text);
  std::cout << text;
  return 0;
}

// ---------------------------------------------------------------- flowctl

struct FlowArgs {
  std::string config;
  std::string utilities;
  std::string v_sweep = "100";
  std::optional<std::uint64_t> slots;
  std::size_t replications = 1;
  std::string out = "flowctl.csv";
};

int cmd_flowctl(const FlowArgs& a, const Shared& shared) {
  const fs::path path(a.config);
  const auto doc = io::read_json_file(path);
  const auto dist = load_channel(doc, path);
  const std::size_t n_q = dist.dims().queues;
  const auto arrivals = io::parse_arrivals(require_field(doc, "arrivals", path));
  if (arrivals.queues() != n_q) throw ConfigError(path.string() + ": arrivals must cover every queue");
  const auto utilities = parse_utilities(
      a.utilities.empty() ? json_or<std::string>(doc, "utilities", "", path) : a.utilities);
  if (utilities.size() != n_q) throw ConfigError("utilities: need one entry per queue");

  const auto caps = json_or<std::vector<double>>(doc, "caps", arrivals.mean_rates(), path);
  const auto r_max = json_or<std::vector<double>>(doc, "r_max", std::vector<double>(n_q, 20.0), path);
  if (caps.size() != n_q || r_max.size() != n_q) throw ConfigError("caps and r_max need one entry per queue");
  const double eta = json_or<double>(doc, "eta", 1.0, path);
  const std::uint64_t slots = a.slots ? *a.slots : json_or<std::uint64_t>(doc, "slots", 200000, path);
  const std::uint64_t seed = shared.seed_given ? shared.seed : json_or<std::uint64_t>(doc, "seed", shared.seed, path);
  const auto vs = parse_list(a.v_sweep, "--V-sweep");
  if (a.replications == 0) throw ConfigError("--replications must be at least 1");

  const auto poly = stability_polytope(dist);
  const auto target = solve_utility(utilities, poly, caps);
  spdlog::info("r* = ({}), f(r*) = {}", join(target.r), target.utility);

  // Replication r uses derive_seed(seed, r) at every V.
  const std::size_t reps = a.replications;
  std::vector<FlowResult> results(vs.size() * reps);
  parallel_for(results.size(), shared.jobs, [&](std::size_t job) {
    const double V = vs[job / reps];
    const FlowParams params{eta, V, r_max, slots, derive_seed(seed, job % reps), false};
    results[job] = clc2b_run(dist, arrivals, utilities, params);
  });

  std::ostringstream csv;
  csv << std::setprecision(10) << 'V';
  for (std::size_t n = 1; n <= n_q; ++n) csv << ",r_" << n;
  csv << ",utility,gap,avg_occupancy\n";
  for (std::size_t v = 0; v < vs.size(); ++v) {
    RateVector r(n_q, 0.0);
    double utility = 0.0;
    double occupancy = 0.0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const auto& res = results[v * reps + rep];
      for (std::size_t n = 0; n < n_q; ++n) r[n] += res.avg_admitted[n] / static_cast<double>(reps);
      utility += res.utility / static_cast<double>(reps);
      occupancy += res.avg_total_occupancy / static_cast<double>(reps);
    }
    csv << vs[v];
    for (double x : r) csv << ',' << x;
    csv << ',' << utility << ',' << target.utility - utility << ',' << occupancy << '\n';
  }
  write_output(shared.resolve(a.out), csv.str());
  std::cout << "# r_star=" << join(target.r, 10) << " utility_star=" << std::setprecision(10) << target.utility
            << "\n"
            << csv.str();
  return 0;
}

// ---------------------------------------------------------------- optimize

int cmd_optimize(const std::string& region, const std::string& utility_text, const std::string& caps_text,
                 const std::string& out, const Shared& shared) {
  const auto poly = io::parse_polytope(io::read_json_file(region));
  const auto utilities = parse_utilities(utility_text);
  if (utilities.size() != poly.dims.queues) throw ConfigError("--utility needs one entry per queue");
  const auto caps = parse_list(caps_text, "--caps");
  if (caps.size() != poly.dims.queues) throw ConfigError("--caps needs one entry per queue");
  const auto sol = solve_utility(utilities, poly, caps);
  if (sol.gap > FrankWolfeOptions{}.tol) throw ValidationFailed("Frank-Wolfe stopped before reaching its tolerance");
  const Json j{{"r_star", sol.r}, {"utility", sol.utility}, {"gap", sol.gap}, {"iters", sol.iters}};
  const std::string text = j.dump(2) + "\n";
  if (!out.empty()) write_output(shared.resolve(out), text);
  std::cout << text;
  return 0;
}

// ---------------------------------------------------------------- fluid

struct FluidArgs {
  std::string mu = "1,1";
  std::string boundary_out;
  std::size_t points = 1000;
  bool mc_check = false;
  std::uint64_t samples = 1'000'000;
};

int cmd_fluid(const FluidArgs& a, const Shared& shared) {
  const auto mu = parse_list(a.mu, "--mu");
  if (mu.size() != 2) throw ConfigError("--mu takes two means");
  const ExpFluidSystem sys(mu[0], mu[1]);
  std::cout << std::setprecision(10);
  std::cout << "rhs(1,1) = " << fluid_rhs_closed(1, 1, sys) << "\n";

  if (!a.boundary_out.empty()) {
    std::ostringstream csv;
    csv << std::setprecision(17) << "lambda1,lambda2\n";
    for (const auto& p : fluid_boundary_curve(sys, a.points)) csv << p.lambda1 << ',' << p.lambda2 << '\n';
    write_output(shared.resolve(a.boundary_out), csv.str());
  }

  if (a.mc_check) {
    bool ok = true;
    constexpr int kDirections = 9;
    std::cout << "theta,closed,mc,stderr,rel_err\n";
    for (int i = 0; i <= kDirections; ++i) {
      const double theta = std::numbers::pi / 2.0 * i / kDirections;
      const double a1 = std::cos(theta), a2 = std::sin(theta);
      const double exact = fluid_rhs_closed(a1, a2, sys);
      const auto mc = fluid_rhs_mc(a1, a2, sys, a.samples, derive_seed(shared.seed, static_cast<std::uint64_t>(i)));
      const double rel = std::abs(mc.mean - exact) / exact;
      ok = ok && rel <= 0.005;
      std::cout << theta << ',' << exact << ',' << mc.mean << ',' << mc.stderr_ << ',' << rel << '\n';
    }
    if (!ok) throw ValidationFailed("Monte Carlo estimate deviates from the closed form by more than 0.5%");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Stability regions, MW scheduling and flow control for multi-queue multi-server systems"};
  app.require_subcommand(1);
  Shared shared;
  auto* seed_opt = app.add_option("--seed", shared.seed, "Random seed (overrides the config)");
  app.add_option("--out-dir", shared.out_dir, "Directory for relative output paths");
  app.add_option("--jobs", shared.jobs, "Worker threads for sweeps")->check(CLI::PositiveNumber);

  // Shared flags are accepted after the subcommand too.
  auto shared_flags = [&](CLI::App* sub) {
    sub->fallthrough();
  };

  RegionArgs region;
  auto* region_cmd = app.add_subcommand("region", "Compute the stability polytope or candidate counts");
  region_cmd->add_option("--config", region.config, "Channel distribution JSON");
  region_cmd->add_option("--N", region.n, "Number of queues (count mode)");
  region_cmd->add_option("--M", region.m, "Maximum rate (count mode)");
  region_cmd->add_flag("--count-only", region.count_only, "Print counts only");
  region_cmd->add_option("--normals", region.normals, "vhat or full")->check(CLI::IsMember({"vhat", "full"}));
  region_cmd->add_option("--out", region.out, "Region JSON output");
  region_cmd->add_option("--text-out", region.text_out, "Inequality listing output");
  shared_flags(region_cmd);

  std::string check_region, check_lambda;
  auto* check_cmd = app.add_subcommand("check", "Margin of an arrival rate vector");
  check_cmd->add_option("--region", check_region, "Region JSON")->required();
  check_cmd->add_option("--lambda", check_lambda, "Comma-separated rates")->required();
  shared_flags(check_cmd);

  SimArgs sim;
  std::uint64_t sim_slots = 0;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate MW scheduling");
  sim_cmd->add_option("--config", sim.config, "Experiment JSON")->required();
  sim_cmd->add_option("--policy", sim.policy, "Scheduling policy")->check(CLI::IsMember({"mw"}));
  auto* sim_slots_opt = sim_cmd->add_option("--slots", sim_slots, "Horizon T");
  sim_cmd->add_option("--replications", sim.replications, "Independent replications");
  sim_cmd->add_option("--trace-out", sim.trace_out, "Per-slot CSV trace");
  sim_cmd->add_option("--stats-out", sim.stats_out, "Stats JSON");
  shared_flags(sim_cmd);

  FlowArgs flow;
  std::uint64_t flow_slots = 0;
  auto* flow_cmd = app.add_subcommand("flowctl", "Run CLC2b flow control over a V sweep");
  flow_cmd->add_option("--config", flow.config, "Experiment JSON")->required();
  flow_cmd->add_option("--utilities", flow.utilities, "e.g. log:10,linear:10");
  flow_cmd->add_option("--V-sweep,--V", flow.v_sweep, "Comma-separated V values");
  auto* flow_slots_opt = flow_cmd->add_option("--slots", flow_slots, "Horizon T");
  flow_cmd->add_option("--replications", flow.replications, "Replications per V");
  flow_cmd->add_option("--out", flow.out, "CSV output");
  shared_flags(flow_cmd);

  std::string opt_region, opt_utility, opt_caps, opt_out;
  auto* opt_cmd = app.add_subcommand("optimize", "Maximise a separable utility over a region");
  opt_cmd->add_option("--region", opt_region, "Region JSON")->required();
  opt_cmd->add_option("--utility,--utilities", opt_utility, "e.g. log:10,linear:10")->required();
  opt_cmd->add_option("--caps", opt_caps, "Per-queue upper bounds")->required();
  opt_cmd->add_option("--out", opt_out, "JSON output file");
  shared_flags(opt_cmd);

  FluidArgs fluid;
  auto* fluid_cmd = app.add_subcommand("fluid", "Two-queue exponential fluid model");
  fluid_cmd->add_option("--mu", fluid.mu, "Means mu1,mu2");
  fluid_cmd->add_option("--boundary-out", fluid.boundary_out, "Boundary CSV");
  fluid_cmd->add_option("--points", fluid.points, "Boundary samples")->check(CLI::Range(2, 100'000'000));
  fluid_cmd->add_flag("--mc-check", fluid.mc_check, "Compare Monte Carlo with the closed form");
  fluid_cmd->add_option("--samples", fluid.samples, "Monte Carlo samples")->check(CLI::PositiveNumber);
  shared_flags(fluid_cmd);

  CLI11_PARSE(app, argc, argv);
  shared.seed_given = seed_opt->count() > 0;
  if (sim_slots_opt->count()) sim.slots = sim_slots;
  if (flow_slots_opt->count()) flow.slots = flow_slots;

  try {
    if (*region_cmd) return cmd_region(region, shared);
    if (*check_cmd) return cmd_check(check_region, check_lambda);
    if (*sim_cmd) return cmd_simulate(sim, shared);
    if (*flow_cmd) return cmd_flowctl(flow, shared);
    if (*opt_cmd) return cmd_optimize(opt_region, opt_utility, opt_caps, opt_out, shared);
    if (*fluid_cmd) return cmd_fluid(fluid, shared);
  } catch (const ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return 2;
  } catch (const ValidationFailed& e) {
    spdlog::error("validation failed: {}", e.what());
    return 3;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 1;
}
