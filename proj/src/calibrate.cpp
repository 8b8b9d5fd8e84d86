#include "hudcalib/calibrate.hpp"

#include <cmath>
#include <stdexcept>

#include "hudcalib/kernels.hpp"

namespace hudcalib {

std::vector<double> apply_temperature(std::span<const double> logits,
                                      double temperature) {
  if (logits.empty()) {
    throw std::invalid_argument("softmax needs at least one logit");
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw std::invalid_argument("temperature must be positive and finite");
  }
  const auto& ops = kernels::active();
  std::vector<double> probs(logits.size());
  const double top = ops.reduce_max(logits.data(), logits.size());
  const double sum = ops.exp_store_sum(logits.data(), logits.size(), top,
                                       1.0 / temperature, probs.data());
  ops.scale(probs.data(), probs.size(), 1.0 / sum);
  return probs;
}

std::vector<double> make_grid(double start, double stop, double step) {
  if (!(start > 0.0) || !std::isfinite(start)) {
    throw InputError("grid start must be positive");
  }
  if (!(step > 0.0) || !std::isfinite(step)) {
    throw InputError("grid step must be positive");
  }
  if (!(stop >= start) || !std::isfinite(stop)) {
    throw InputError("grid stop must not be below its start");
  }

  const double steps = (stop - start) / step;
  const double rounded = std::round(steps);
  const bool lands_on_stop =
      std::fabs(steps - rounded) <= 1e-9 * std::max(1.0, steps);
  const auto n =
      static_cast<std::size_t>(lands_on_stop ? rounded : std::floor(steps));

  std::vector<double> grid(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    grid[i] = start + step * static_cast<double>(i);
  }
  if (lands_on_stop) grid[n] = stop;
  return grid;
}

std::string_view to_string(Objective objective) {
  switch (objective) {
    case Objective::ece: return "ece";
    case Objective::mean_kl: return "mean_kl";
    case Objective::mean_tvd: return "mean_tvd";
    case Objective::mean_entce: return "mean_entce";
  }
  throw std::invalid_argument("bad objective enum value");
}

std::optional<Objective> objective_from_string(std::string_view s) {
  if (s == "ece") return Objective::ece;
  if (s == "mean_kl") return Objective::mean_kl;
  if (s == "mean_tvd") return Objective::mean_tvd;
  if (s == "mean_entce") return Objective::mean_entce;
  return std::nullopt;
}

double objective_score(const MetricsRow& row, Objective objective) {
  switch (objective) {
    case Objective::ece: return row.ece;
    case Objective::mean_kl: return row.kl;
    case Objective::mean_tvd: return row.tvd;
    case Objective::mean_entce: return row.entce;
  }
  throw std::invalid_argument("bad objective enum value");
}

TemperatureFit fit_temperature(const PreparedCorpus& corpus,
                               Objective objective,
                               std::span<const double> grid, SetId fit_set) {
  if (grid.empty()) {
    throw std::invalid_argument("temperature grid is empty");
  }
  TemperatureFit fit;
  fit.objective = objective;
  fit.grid.assign(grid.begin(), grid.end());
  fit.scores.reserve(grid.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const MetricsTable table = corpus.evaluate(grid[i]);
    fit.scores.push_back(objective_score(table.row(fit_set), objective));
    if (fit.scores[i] < fit.scores[best]) best = i;
  }
  fit.temperature = fit.grid[best];
  fit.best_score = fit.scores[best];
  fit.saturated = best + 1 == fit.grid.size();
  return fit;
}

TemperatureFit fit_temperature(const PreparedCorpus& corpus,
                               Objective objective) {
  const auto grid = make_grid();
  return fit_temperature(corpus, objective, grid, SetId::all);
}

ComparisonTable calibration_report(const MetricsTable& before,
                                   const MetricsTable& after) {
  ComparisonTable table;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const MetricsRow& b = before.rows[r];
    const MetricsRow& a = after.rows[r];
    if (b.sample_count != a.sample_count) {
      throw std::invalid_argument(
          "comparison tables disagree on sample counts for set " +
          std::string(to_string(static_cast<SetId>(r))));
    }
    ComparisonRow& row = table.rows[r];
    row.sample_count = b.sample_count;
    const std::array<std::pair<double, double>, 5> pairs = {{
        {b.vqa_acc, a.vqa_acc},
        {b.tvd, a.tvd},
        {b.kl, a.kl},
        {b.entce, a.entce},
        {b.ece, a.ece},
    }};
    for (std::size_t m = 0; m < pairs.size(); ++m) {
      ComparisonCell& cell = row.cells[m];
      cell.before = pairs[m].first;
      cell.after = pairs[m].second;
      const double delta = cell.after - cell.before;
      const bool higher_is_better = m == 0;
      if (std::fabs(delta) < kUnchangedEps) {
        cell.direction = Direction::unchanged;
      } else if ((delta > 0.0) == higher_is_better) {
        cell.direction = Direction::improved;
      } else {
        cell.direction = Direction::worsened;
      }
    }
  }
  return table;
}

}  // namespace hudcalib
