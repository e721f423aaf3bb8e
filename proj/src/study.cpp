#include "taumlmc/study.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

#include "taumlmc/coupling.hpp"
#include "taumlmc/error.hpp"
#include "taumlmc/exact.hpp"
#include "taumlmc/parallel.hpp"
#include "taumlmc/tau.hpp"

namespace taumlmc {

std::string to_string(PairKind kind) {
  switch (kind) {
    case PairKind::kTauTau:
      return "tau-tau";
    case PairKind::kExactTau:
      return "exact-tau";
    case PairKind::kIndependent:
      return "independent";
  }
  return "unknown";
}

PairKind parse_pair_kind(const std::string& text) {
  if (text == "tau-tau") return PairKind::kTauTau;
  if (text == "exact-tau") return PairKind::kExactTau;
  if (text == "independent") return PairKind::kIndependent;
  throw InvalidArgument("unknown pair kind '" + text + "'");
}

namespace {

struct Partial {
  Moments moments;
  std::uint64_t cost = 0;
};

}  // namespace

SweepRow variance_cell(const ScaledModel& model, double h, PairKind kind, const Observable& f,
                       const SweepOptions& options, std::int32_t cell) {
  if (options.pairs < 2) throw InvalidArgument("a sweep cell needs at least 2 pairs");
  const double T = options.t_end;
  const auto& scaling = model.scaling;
  grid_steps(T, h);

  const auto partials = map_chunks<Partial>(0, options.pairs, options.workers,
                                            [&](std::uint64_t begin, std::uint64_t end) {
    Partial p;
    for (std::uint64_t i = begin; i < end; ++i) {
      double value = 0.0;
      std::uint64_t cost = 0;
      switch (kind) {
        case PairKind::kTauTau: {
          const auto pair = coupled_tau_pair(model, h, options.refinement, T, {options.seed, cell, i});
          value = f(pair.fine.counts, scaling) - f(pair.coarse.counts, scaling);
          cost = pair.cost;
          break;
        }
        case PairKind::kExactTau: {
          const auto pair = coupled_exact_tau(model, h, T, {options.seed, cell, i}, options.exact);
          value = f(pair.exact.counts, scaling) - f(pair.tau.counts, scaling);
          cost = pair.cost;
          break;
        }
        case PairKind::kIndependent: {
          // Fine and coarse marginals taken from two pairs on disjoint streams.
          const auto a = coupled_tau_pair(model, h, options.refinement, T, {options.seed, cell, 2 * i});
          const auto b =
              coupled_tau_pair(model, h, options.refinement, T, {options.seed, cell, 2 * i + 1});
          value = f(a.fine.counts, scaling) - f(b.coarse.counts, scaling);
          cost = a.cost + b.cost;
          break;
        }
      }
      p.moments.add(value);
      p.cost += cost;
    }
    return p;
  });

  Partial total;
  for (const auto& p : partials) {
    total.moments.merge(p.moments);
    total.cost += p.cost;
  }
  SweepRow row;
  row.N = scaling.N;
  row.h = h;
  row.kind = kind;
  row.pairs = total.moments.count();
  row.variance = total.moments.variance();
  row.var_stderr = total.moments.variance_stderr();
  row.cost = total.cost;
  row.mean = total.moments.mean();
  return row;
}

SweepTable variance_sweep(const ModelFamily& family, std::span<const double> sizes,
                          std::span<const double> steps, PairKind kind, const Observable& f,
                          const SweepOptions& options) {
  if (sizes.empty() || steps.empty()) throw InvalidArgument("sweep needs N and h values");
  if (options.pairs < 100) throw InvalidArgument("sweep cells need at least 100 pairs");
  SweepTable table;
  std::int32_t cell = 0;
  for (double N : sizes) {
    const ScaledModel model = make_scaled(family(N));
    for (double h : steps) table.rows.push_back(variance_cell(model, h, kind, f, options, cell++));
  }
  return table;
}

namespace {

struct LeastSquares {
  Eigen::VectorXd beta;
  double residual_rms;
};

LeastSquares solve(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols()) throw SingularDesign("design matrix is rank deficient");
  LeastSquares out;
  out.beta = qr.solve(y);
  const Eigen::VectorXd residual = y - design * out.beta;
  out.residual_rms = std::sqrt(residual.squaredNorm() / static_cast<double>(y.size()));
  return out;
}

void require_positive(const SweepTable& table) {
  for (const auto& row : table.rows) {
    if (!(row.variance > 0.0) || !(row.N > 0.0) || !(row.h > 0.0)) {
      throw InvalidArgument("power-law fit needs positive N, h and variance in every row");
    }
  }
}

std::size_t distinct(const SweepTable& table, double SweepRow::*field) {
  std::set<double> values;
  for (const auto& row : table.rows) values.insert(row.*field);
  return values.size();
}

}  // namespace

PowerLawFit fit_power_law(const SweepTable& table) {
  require_positive(table);
  if (table.rows.size() < 3) throw SingularDesign("power-law fit needs at least 3 rows");
  if (distinct(table, &SweepRow::N) < 2) throw SingularDesign("all rows share one N");
  if (distinct(table, &SweepRow::h) < 2) throw SingularDesign("all rows share one h");

  const auto n = static_cast<Eigen::Index>(table.rows.size());
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    design(r, 0) = 1.0;
    design(r, 1) = std::log(row.N);
    design(r, 2) = std::log(row.h);
    y(r) = std::log(row.variance);
  }
  const LeastSquares ls = solve(design, y);
  return PowerLawFit{std::exp(ls.beta(0)), ls.beta(1), ls.beta(2), ls.residual_rms, true};
}

PowerLawFit fit_power_law_h_only(const SweepTable& table) {
  require_positive(table);
  std::vector<double> h;
  std::vector<double> v;
  for (const auto& row : table.rows) {
    h.push_back(row.h);
    v.push_back(row.variance);
  }
  const LogLogFit fit = fit_loglog(h, v);
  return PowerLawFit{fit.coefficient, 0.0, fit.exponent, fit.residual_rms, false};
}

LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw SingularDesign("log-log fit needs >= 2 points");
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto i = static_cast<std::size_t>(r);
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidArgument("log-log fit needs positive data");
    design(r, 0) = 1.0;
    design(r, 1) = std::log(x[i]);
    rhs(r) = std::log(y[i]);
  }
  const LeastSquares ls = solve(design, rhs);
  return LogLogFit{std::exp(ls.beta(0)), ls.beta(1), ls.residual_rms};
}

std::vector<double> MeanFieldPath::at(double t) const {
  std::vector<double> out(states.front().size());
  at(t, out);
  return out;
}

void MeanFieldPath::at(double t, std::span<double> out) const {
  const std::size_t intervals = times.size() - 1;
  if (intervals == 0) {
    std::copy(states[0].begin(), states[0].end(), out.begin());
    return;
  }
  const double u = std::clamp(t / times.back(), 0.0, 1.0) * static_cast<double>(intervals);
  const std::size_t j = std::min(static_cast<std::size_t>(u), intervals - 1);
  const double w = u - static_cast<double>(j);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (1.0 - w) * states[j][i] + w * states[j + 1][i];
  }
}

MeanFieldPath mean_field_euler(const ScaledModel& model, double h, double t_end) {
  const std::uint64_t steps = grid_steps(t_end, h);
  MeanFieldPath path;
  path.times.reserve(steps + 1);
  path.states.reserve(steps + 1);
  std::vector<double> z = scaled_view(model.initial, model.scaling);
  path.times.push_back(0.0);
  path.states.push_back(z);
  for (std::uint64_t j = 0; j < steps; ++j) {
    const std::vector<double> drift = mean_field_drift(model.network, model.scaling, z);
    ++path.drift_evaluations;
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += h * drift[i];
    path.times.push_back(t_end * static_cast<double>(j + 1) / static_cast<double>(steps));
    path.states.push_back(z);
  }
  return path;
}

DeviationEstimate deviation_moment(const ScaledModel& model, double t_end,
                                   const DeviationOptions& options) {
  if (options.paths < 2) throw InvalidArgument("deviation moment needs at least 2 paths");
  if (options.reference_steps < 1 || options.check_points < 1) {
    throw InvalidArgument("reference and check grids need at least one step");
  }
  const MeanFieldPath reference =
      mean_field_euler(model, t_end / static_cast<double>(options.reference_steps), t_end);
  const std::size_t d = model.network.species_count();
  const auto& scale = model.scaling.species_scale;
  const double check_step = t_end / static_cast<double>(options.check_points);

  const auto partials = map_chunks<Moments>(0, options.paths, options.workers,
                                            [&](std::uint64_t begin, std::uint64_t end) {
    Moments m;
    std::vector<double> x_ref(d);
    for (std::uint64_t i = begin; i < end; ++i) {
      double sup = 0.0;
      std::uint64_t next_check = 1;
      const auto deviation = [&](double t, std::span<const std::int64_t> counts) {
        reference.at(t, x_ref);
        double sq = 0.0;
        for (std::size_t s = 0; s < d; ++s) {
          const double diff = static_cast<double>(counts[s]) * scale[s] - x_ref[s];
          sq += diff * diff;
        }
        sup = std::max(sup, sq);
      };
      const auto checks_before = [&](double t, std::span<const std::int64_t> counts) {
        while (next_check <= options.check_points &&
               static_cast<double>(next_check) * check_step < t) {
          deviation(static_cast<double>(next_check) * check_step, counts);
          ++next_check;
        }
      };
      ExactOptions exact = options.exact;
      exact.record_step.reset();
      exact.on_jump = [&](double t, std::span<const std::int64_t> before,
                          std::span<const std::int64_t> after) {
        checks_before(t, before);
        deviation(t, before);
        deviation(t, after);
      };
      deviation(0.0, model.initial.counts);
      const ExactPath path = simulate_exact(model, t_end, {options.seed, 0, i}, exact);
      checks_before(t_end * (1.0 + 1e-12), path.final_state.counts);
      m.add(sup);
    }
    return m;
  });

  Moments total;
  for (const auto& p : partials) total.merge(p);
  return DeviationEstimate{total.mean(), total.mean_stderr(), total.count()};
}

std::vector<ComplexityRow> complexity_sweep(const ScaledModel& model, const Observable& f,
                                            std::span<const double> eps_values,
                                            EstimatorKind kind, const MlmcOptions& options) {
  if (eps_values.empty()) throw InvalidArgument("complexity sweep needs eps values");
  std::vector<ComplexityRow> rows;
  for (double eps : eps_values) {
    MlmcOptions run_options = options;
    run_options.eps = eps;
    const MlmcEstimate est = kind == EstimatorKind::kBiased ? run_biased(model, f, run_options)
                                                            : run_unbiased(model, f, run_options);

    // Plain Monte Carlo comparator at the finest step.
    LevelSchedule single = est.schedule;
    single.base_level = single.finest_level;
    const SamplingOptions pilot_options{mix64(options.seed ^ 0x73696E676C65ULL), options.workers, 0,
                                        options.exact};
    const LevelStatistics pilot =
        estimate_level(model, single, single.finest_level, options.pilot_paths, f, pilot_options);
    const double paths = std::max(1.0, std::ceil(pilot.variance() / (eps * eps)));

    ComplexityRow row;
    row.eps = eps;
    row.finest_level = est.schedule.finest_level;
    row.estimate = est.estimate;
    row.variance = est.variance;
    row.cost = est.total_cost;
    row.single_level_cost = paths * pilot.cost_per_path();
    rows.push_back(row);
  }
  return rows;
}

}  // namespace taumlmc
