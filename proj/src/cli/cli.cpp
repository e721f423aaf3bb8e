#include "taumlmc/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "taumlmc/coupling.hpp"
#include "taumlmc/error.hpp"
#include "taumlmc/exact.hpp"
#include "taumlmc/mlmc.hpp"
#include "taumlmc/model_text.hpp"
#include "taumlmc/parallel.hpp"
#include "taumlmc/study.hpp"
#include "taumlmc/tau.hpp"

namespace taumlmc {
namespace {

using Json = nlohmann::ordered_json;

struct Common {
  std::string model_path;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::string out;
  double N = 0.0;  // 0: take the size from the model file
  double t_end = 1.0;
};

void add_common(CLI::App* sub, Common& c, bool model_required, bool size_flag = true) {
  auto* model = sub->add_option("--model", c.model_path, "Model file");
  if (model_required) model->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Master seed");
  sub->add_option("--workers", c.workers, "Worker threads (0: all cores)");
  sub->add_option("--out", c.out, "Output file (default: standard output)");
  if (size_flag) {
    sub->add_option("--N", c.N, "System size; overrides `scaling N` in the model file")
        ->check(CLI::Range(1.0, 1e300));
  }
  sub->add_option("--t-end", c.t_end, "Terminal time T")->check(CLI::PositiveNumber);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(h));
  return buffer;
}

struct LoadedModel {
  ModelTemplate file;
  std::string digest;
};

LoadedModel load_model(const Common& c) {
  const std::string text = read_file(c.model_path);
  try {
    return {parse_model(text), fnv1a(text)};
  } catch (const ParseError& e) {
    throw InvalidArgument(c.model_path + ": " + e.what());
  }
}

Model instantiate(const LoadedModel& m, const Common& c) {
  return c.N > 0.0 ? m.file.instantiate(c.N) : m.file.instantiate();
}

/// Resolved configuration of the selected subcommand, in declaration order.
/// The worker count and the output path are left out: neither changes results.
std::vector<std::pair<std::string, std::string>> resolved_config(const CLI::App& sub,
                                                                 const std::string& digest) {
  std::vector<std::pair<std::string, std::string>> entries;
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "workers" || name == "out") continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    } else {
      value = opt->get_default_str();
    }
    entries.emplace_back(name, value);
  }
  if (!digest.empty()) entries.emplace_back("model_fnv1a", digest);
  return entries;
}

struct Output {
  std::string command;
  std::vector<std::pair<std::string, std::string>> config;
  std::ostringstream body;

  std::string csv() const {
    std::string text = std::string("# ") + kToolVersion + "\n# command: " + command + "\n";
    for (const auto& [k, v] : config) text += "# " + k + " = " + v + "\n";
    return text + body.str();
  }

  Json provenance() const {
    Json cfg = Json::object();
    for (const auto& [k, v] : config) cfg[k] = v;
    return Json{{"tool", kToolVersion}, {"command", command}, {"config", cfg}};
  }
};

std::string num(double x) { return format_double(x); }

EstimatorKind parse_estimator(const std::string& s) {
  return s == "unbiased" ? EstimatorKind::kUnbiased : EstimatorKind::kBiased;
}

AllocationMode parse_allocation(const std::string& s) {
  return s == "paper" ? AllocationMode::kPaper : AllocationMode::kAdaptive;
}

void write_species_header(std::ostream& os, const std::string& prefix,
                          const std::vector<std::string>& species) {
  for (const auto& s : species) os << ',' << prefix << s;
}

void write_counts(std::ostream& os, std::span<const std::int64_t> counts) {
  for (auto x : counts) os << ',' << x;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
  Common common;
  std::string method = "exact";
  std::uint64_t paths = 1;
  std::string record = "none";
  double h = 0.0;
  std::uint64_t event_budget = 1'000'000'000;
};

void run_simulate(const SimulateArgs& a, const LoadedModel& m, Output& out) {
  const ScaledModel model = make_scaled(instantiate(m, a.common));
  const double T = a.common.t_end;
  const bool tau = a.method == "tau";
  if (tau && !(a.h > 0.0)) throw InvalidArgument("--method tau needs --h > 0");
  std::optional<double> record_step;
  if (a.record != "none") {
    double r = 0.0;
    const auto [ptr, ec] = std::from_chars(a.record.data(), a.record.data() + a.record.size(), r);
    if (ec != std::errc() || ptr != a.record.data() + a.record.size() || !(r > 0.0)) {
      throw InvalidArgument("--record must be a positive step or 'none'");
    }
    record_step = r;
  }
  std::uint64_t stride = 1;
  if (tau) {
    grid_steps(T, a.h);
    if (record_step) {
      const double ratio = *record_step / a.h;
      stride = static_cast<std::uint64_t>(std::llround(ratio));
      if (stride == 0 || std::abs(ratio - static_cast<double>(stride)) > 1e-9 * ratio) {
        throw InvalidArgument("--record must be a multiple of --h for tau paths");
      }
    }
  }

  const auto& species = model.network.species();
  std::ostream& os = out.body;
  if (record_step) {
    os << "path,time";
    write_species_header(os, "", species);
  } else {
    os << "path";
    write_species_header(os, "final_", species);
    os << ",events";
    if (tau) os << ",steps";
  }
  os << '\n';

  ExactOptions exact;
  exact.event_budget = a.event_budget;
  exact.record_step = record_step;

  const auto chunks = map_chunks<std::string>(
      0, a.paths, a.common.workers, [&](std::uint64_t b, std::uint64_t e) {
        std::ostringstream rows;
        for (std::uint64_t p = b; p < e; ++p) {
          const PathStreams streams{a.common.seed, 0, p};
          if (tau) {
            const TauPath path = simulate_tau(model, a.h, T, streams, record_step.has_value());
            if (record_step) {
              for (std::size_t i = 0; i < path.record.size(); ++i) {
                if (i % stride != 0 && i + 1 != path.record.size()) continue;
                rows << p << ',' << num(path.record[i].time);
                write_counts(rows, path.record[i].counts);
                rows << '\n';
              }
            } else {
              std::uint64_t events = 0;
              for (auto r : path.firings) events += r;
              rows << p;
              write_counts(rows, path.final_state.counts);
              rows << ',' << events << ',' << path.steps << '\n';
            }
          } else {
            const ExactPath path = simulate_exact(model, T, streams, exact);
            if (record_step) {
              for (const auto& point : path.trajectory) {
                rows << p << ',' << num(point.time);
                write_counts(rows, point.counts);
                rows << '\n';
              }
            } else {
              rows << p;
              write_counts(rows, path.final_state.counts);
              rows << ',' << path.events << '\n';
            }
          }
        }
        return rows.str();
      });
  for (const auto& c : chunks) os << c;
}

// ---- couple -----------------------------------------------------------------

struct CoupleArgs {
  Common common;
  std::string kind = "tau-tau";
  int level = 1;
  unsigned M = 3;
  std::uint64_t pairs = 1;
  std::uint64_t event_budget = 1'000'000'000;
};

void run_couple(const CoupleArgs& a, const LoadedModel& m, Output& out) {
  const ScaledModel model = make_scaled(instantiate(m, a.common));
  const double T = a.common.t_end;
  const bool tau_tau = a.kind == "tau-tau";
  if (tau_tau && a.level < 1) throw InvalidArgument("tau-tau pairs need --level >= 1");
  const double h = T * std::pow(static_cast<double>(a.M), -a.level);
  ExactOptions exact;
  exact.event_budget = a.event_budget;

  std::ostream& os = out.body;
  os << "pair";
  write_species_header(os, "fine_", model.network.species());
  write_species_header(os, "coarse_", model.network.species());
  os << ",cost\n";

  const auto chunks = map_chunks<std::string>(
      0, a.pairs, a.common.workers, [&](std::uint64_t b, std::uint64_t e) {
        std::ostringstream rows;
        for (std::uint64_t p = b; p < e; ++p) {
          rows << p;
          if (tau_tau) {
            const auto pair = coupled_tau_pair(model, h, a.M, T, PathStreams{a.common.seed, a.level, p});
            write_counts(rows, pair.fine.counts);
            write_counts(rows, pair.coarse.counts);
            rows << ',' << pair.cost << '\n';
          } else {
            const auto pair =
                coupled_exact_tau(model, h, T, PathStreams{a.common.seed, kCorrectionLevel, p}, exact);
            write_counts(rows, pair.exact.counts);
            write_counts(rows, pair.tau.counts);
            rows << ',' << pair.cost << '\n';
          }
        }
        return rows.str();
      });
  for (const auto& c : chunks) os << c;
}

// ---- mlmc -------------------------------------------------------------------

struct MlmcArgs {
  Common common;
  std::string estimator = "biased";
  double eps = 0.0;
  unsigned M = 3;
  std::string f;
  std::string allocation = "adaptive";
  std::uint64_t pilot = 100;
  double theta = 1.0;
  std::uint64_t event_budget = 1'000'000'000;
};

MlmcOptions mlmc_options(const MlmcArgs& a) {
  MlmcOptions o;
  o.t_end = a.common.t_end;
  o.eps = a.eps;
  o.refinement = a.M;
  o.theta = a.theta;
  o.allocation = parse_allocation(a.allocation);
  o.pilot_paths = a.pilot;
  o.seed = a.common.seed;
  o.workers = a.common.workers;
  o.exact.event_budget = a.event_budget;
  return o;
}

Json run_mlmc(const MlmcArgs& a, const LoadedModel& m, const Output& out, std::ostream& err) {
  const ScaledModel model = make_scaled(instantiate(m, a.common));
  const Observable f = parse_observable(a.f, model.network);
  const MlmcOptions options = mlmc_options(a);
  const MlmcEstimate est = parse_estimator(a.estimator) == EstimatorKind::kUnbiased
                               ? run_unbiased(model, f, options)
                               : run_biased(model, f, options);
  for (const auto& w : est.warnings) err << "warning: " << w << '\n';

  Json levels = Json::array();
  for (const auto& level : est.levels) {
    levels.push_back(Json{{"id", level.id()},
                          {"h", level.step},
                          {"n", level.paths()},
                          {"mean", level.mean()},
                          {"var", level.variance()},
                          {"cost", level.cost}});
  }
  return Json{{"provenance", out.provenance()},
              {"estimate", est.estimate},
              {"variance", est.variance},
              {"eps", est.eps},
              {"kind", a.estimator},
              {"levels", levels},
              {"total_cost", est.total_cost}};
}

// ---- sweep ------------------------------------------------------------------

struct SweepArgs {
  Common common;
  std::vector<double> sizes;
  std::vector<double> steps;
  std::string kind = "tau-tau";
  std::uint64_t pairs = 10'000;
  unsigned M = 3;
  std::string f;
  std::uint64_t event_budget = 1'000'000'000;
};

void run_sweep(const SweepArgs& a, const LoadedModel& m, Output& out) {
  const ModelFamily family = [&](double N) { return m.file.instantiate(N); };
  const Model first = family(a.sizes.front());
  const Observable f = parse_observable(a.f, first.network);
  SweepOptions options;
  options.t_end = a.common.t_end;
  options.refinement = a.M;
  options.pairs = a.pairs;
  options.seed = a.common.seed;
  options.workers = a.common.workers;
  options.exact.event_budget = a.event_budget;
  const SweepTable table =
      variance_sweep(family, a.sizes, a.steps, parse_pair_kind(a.kind), f, options);
  std::ostream& os = out.body;
  os << "N,h,kind,pairs,variance,var_stderr,cost\n";
  for (const auto& r : table.rows) {
    os << num(r.N) << ',' << num(r.h) << ',' << to_string(r.kind) << ',' << r.pairs << ','
       << num(r.variance) << ',' << num(r.var_stderr) << ',' << r.cost << '\n';
  }
}

// ---- fit --------------------------------------------------------------------

struct FitArgs {
  Common common;
  std::string input;
  bool h_only = false;
};

double parse_real(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InvalidArgument("line " + std::to_string(line) + ": '" + s + "' is not a number");
  }
  return v;
}

SweepTable read_sweep_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<std::string> header;
  std::size_t number = 0;
  SweepTable table;
  auto split = [](const std::string& s) {
    std::vector<std::string> fields;
    std::stringstream ss(s);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
  };
  std::map<std::string, std::size_t> column;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line);
    if (column.empty()) {
      for (std::size_t i = 0; i < fields.size(); ++i) column[fields[i]] = i;
      for (const char* required : {"N", "h", "variance"}) {
        if (!column.count(required)) {
          throw InvalidArgument(path + ": missing column '" + required + "'");
        }
      }
      continue;
    }
    if (fields.size() != column.size()) {
      throw InvalidArgument(path + ": line " + std::to_string(number) + " has " +
                            std::to_string(fields.size()) + " fields");
    }
    SweepRow row;
    row.N = parse_real(fields[column["N"]], number);
    row.h = parse_real(fields[column["h"]], number);
    row.variance = parse_real(fields[column["variance"]], number);
    table.rows.push_back(row);
  }
  if (table.rows.empty()) throw InvalidArgument(path + ": no data rows");
  return table;
}

Json run_fit(const FitArgs& a, const Output& out) {
  const SweepTable table = read_sweep_csv(a.input);
  const PowerLawFit fit = a.h_only ? fit_power_law_h_only(table) : fit_power_law(table);
  return Json{{"provenance", out.provenance()},
              {"C", fit.C},
              {"a", fit.a},
              {"b", fit.b},
              {"residual_rms", fit.residual_rms}};
}

// ---- meanfield --------------------------------------------------------------

struct MeanFieldArgs {
  Common common;
  double h = 0.0;
};

void run_meanfield(const MeanFieldArgs& a, const LoadedModel& m, Output& out) {
  const ScaledModel model = make_scaled(instantiate(m, a.common));
  const MeanFieldPath path = mean_field_euler(model, a.h, a.common.t_end);
  std::ostream& os = out.body;
  os << "time";
  write_species_header(os, "", model.network.species());
  os << '\n';
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    os << num(path.times[i]);
    for (double x : path.states[i]) os << ',' << num(x);
    os << '\n';
  }
}

// ---- complexity -------------------------------------------------------------

struct ComplexityArgs {
  MlmcArgs mlmc;
  std::vector<double> eps_values;
};

void run_complexity(const ComplexityArgs& a, const LoadedModel& m, Output& out) {
  const ScaledModel model = make_scaled(instantiate(m, a.mlmc.common));
  const Observable f = parse_observable(a.mlmc.f, model.network);
  const auto rows = complexity_sweep(model, f, a.eps_values, parse_estimator(a.mlmc.estimator),
                                     mlmc_options(a.mlmc));
  std::ostream& os = out.body;
  os << "eps,finest_level,estimate,variance,cost,single_level_cost\n";
  for (const auto& r : rows) {
    os << num(r.eps) << ',' << r.finest_level << ',' << num(r.estimate) << ','
       << num(r.variance) << ',' << r.cost << ',' << num(r.single_level_cost) << '\n';
  }
}

void add_mlmc_flags(CLI::App* sub, MlmcArgs& a, bool eps_flag) {
  sub->add_option("--estimator", a.estimator, "biased (tau levels only) or unbiased")
      ->check(CLI::IsMember({"biased", "unbiased"}));
  if (eps_flag) {
    sub->add_option("--eps", a.eps, "Target root mean square error")
        ->required()
        ->check(CLI::PositiveNumber);
  }
  sub->add_option("--M", a.M, "Refinement factor between levels")->check(CLI::Range(2u, 1000u));
  sub->add_option("--f", a.f, "Observable: X[<species>] or lin:<a1>,<a2>,...")->required();
  sub->add_option("--allocation", a.allocation, "Path allocation: adaptive or paper")
      ->check(CLI::IsMember({"adaptive", "paper"}));
  sub->add_option("--pilot", a.pilot, "Pilot paths per level")->check(CLI::Range(2ULL, 1ULL << 40));
  sub->add_option("--theta", a.theta, "Finest step satisfies h_L <= theta * eps")
      ->check(CLI::PositiveNumber);
  sub->add_option("--event-budget", a.event_budget, "Maximum events per exact path");
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    out.flush();
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw InvalidArgument("cannot write '" + path + "'");
  file << text;
  if (!file.flush()) throw InvalidArgument("write to '" + path + "' failed");
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact, tau-leap and multilevel Monte Carlo simulation of reaction networks",
               "taumlmc"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  SimulateArgs simulate;
  auto* sim = app.add_subcommand("simulate", "Simulate independent exact or tau-leap paths");
  add_common(sim, simulate.common, true);
  sim->add_option("--method", simulate.method, "exact or tau")
      ->check(CLI::IsMember({"exact", "tau"}));
  sim->add_option("--paths", simulate.paths, "Number of paths")->check(CLI::PositiveNumber);
  sim->add_option("--record", simulate.record,
                  "Record the state every <step> time units, or 'none' for final states only");
  sim->add_option("--h", simulate.h, "Tau-leap step (t-end must be a multiple)")
      ->check(CLI::PositiveNumber);
  sim->add_option("--event-budget", simulate.event_budget, "Maximum events per exact path");

  CoupleArgs couple;
  auto* cpl = app.add_subcommand("couple", "Simulate coupled path pairs");
  add_common(cpl, couple.common, true);
  cpl->add_option("--kind", couple.kind, "tau-tau (levels l and l-1) or exact-tau (level l)")
      ->check(CLI::IsMember({"tau-tau", "exact-tau"}));
  cpl->add_option("--level", couple.level, "Level l: fine step t-end * M^-l")
      ->check(CLI::Range(0, 60));
  cpl->add_option("--M", couple.M, "Refinement factor")->check(CLI::Range(1u, 1000u));
  cpl->add_option("--pairs", couple.pairs, "Number of pairs")->check(CLI::PositiveNumber);
  cpl->add_option("--event-budget", couple.event_budget, "Maximum events per exact path");

  MlmcArgs mlmc;
  auto* ml = app.add_subcommand("mlmc", "Multilevel Monte Carlo estimate of E f(X(T))");
  add_common(ml, mlmc.common, true);
  add_mlmc_flags(ml, mlmc, true);

  SweepArgs sweep;
  auto* sw = app.add_subcommand("sweep", "Variance of coupled level differences over an (N, h) grid");
  add_common(sw, sweep.common, true, false);
  sw->add_option("--N", sweep.sizes, "System sizes, comma separated")
      ->required()
      ->delimiter(',')
      ->check(CLI::Range(1.0, 1e300));
  sw->add_option("--h", sweep.steps, "Fine steps, comma separated")
      ->required()
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  sw->add_option("--kind", sweep.kind, "tau-tau, exact-tau or independent")
      ->check(CLI::IsMember({"tau-tau", "exact-tau", "independent"}));
  sw->add_option("--pairs", sweep.pairs, "Pairs per cell")->check(CLI::Range(100ULL, 1ULL << 40));
  sw->add_option("--M", sweep.M, "Refinement factor")->check(CLI::Range(1u, 1000u));
  sw->add_option("--f", sweep.f, "Observable: X[<species>] or lin:<a1>,<a2>,...")->required();
  sw->add_option("--event-budget", sweep.event_budget, "Maximum events per exact path");

  FitArgs fit;
  auto* ft = app.add_subcommand("fit", "Fit V = C N^a h^b to a sweep table");
  add_common(ft, fit.common, false, false);
  ft->add_option("--in", fit.input, "Sweep CSV")->required()->check(CLI::ExistingFile);
  ft->add_flag("--h-only", fit.h_only, "Fit C h^b only (single N)");

  MeanFieldArgs meanfield;
  auto* mf = app.add_subcommand("meanfield", "Euler solution of the mean-field ODE");
  add_common(mf, meanfield.common, true);
  mf->add_option("--h", meanfield.h, "Euler step")->required()->check(CLI::PositiveNumber);

  ComplexityArgs complexity;
  auto* cx = app.add_subcommand("complexity", "MLMC cost against single-level cost over eps");
  add_common(cx, complexity.mlmc.common, true);
  add_mlmc_flags(cx, complexity.mlmc, false);
  cx->add_option("--eps", complexity.eps_values, "Target errors, comma separated")
      ->required()
      ->delimiter(',')
      ->check(CLI::PositiveNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    CLI::App* selected = app.get_subcommands().front();
    Output output;
    output.command = selected->get_name();
    const Common* common = nullptr;
    if (selected == sim) common = &simulate.common;
    if (selected == cpl) common = &couple.common;
    if (selected == ml) common = &mlmc.common;
    if (selected == sw) common = &sweep.common;
    if (selected == ft) common = &fit.common;
    if (selected == mf) common = &meanfield.common;
    if (selected == cx) common = &complexity.mlmc.common;

    LoadedModel model;
    if (!common->model_path.empty()) model = load_model(*common);
    output.config = resolved_config(*selected, model.digest);
    for (auto& [key, value] : output.config) {
      if (key == "N" && common->N == 0.0) value = num(model.file.N.value_or(1.0));
    }

    std::string text;
    if (selected == sim) {
      run_simulate(simulate, model, output);
      text = output.csv();
    } else if (selected == cpl) {
      run_couple(couple, model, output);
      text = output.csv();
    } else if (selected == ml) {
      text = run_mlmc(mlmc, model, output, err).dump() + "\n";
    } else if (selected == sw) {
      run_sweep(sweep, model, output);
      text = output.csv();
    } else if (selected == ft) {
      text = run_fit(fit, output).dump() + "\n";
    } else if (selected == mf) {
      run_meanfield(meanfield, model, output);
      text = output.csv();
    } else {
      run_complexity(complexity, model, output);
      text = output.csv();
    }
    emit(text, common->out, out);
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace taumlmc
