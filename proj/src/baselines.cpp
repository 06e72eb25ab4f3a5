#include "mlspeak/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mlspeak/errors.hpp"
#include "mlspeak/random.hpp"

namespace mlspeak {

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Gaussian elimination with partial pivoting; a is n x n row-major.
std::vector<double> solve(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  double scale = 0.0;
  for (double x : a) scale = std::max(scale, std::abs(x));
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
    if (!(std::abs(a[piv * n + c]) > 1e-12 * std::max(scale, 1.0)))
      throw SingularDesign("regression design matrix is singular");
    if (piv != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
      std::swap(b[c], b[piv]);
    }
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r * n + c] / a[c * n + c];
      for (std::size_t k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t c = n; c-- > 0;) {
    double s = b[c];
    for (std::size_t k = c + 1; k < n; ++k) s -= a[c * n + k] * x[k];
    x[c] = s / a[c * n + c];
  }
  return x;
}

}  // namespace

std::string model_label(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::SameTraits: return "Same_traits";
    case BaselineKind::SameTraitsNoMemory: return "Same_traits_no_mem";
    case BaselineKind::RandomizedTraits: return "Rand_traits";
    case BaselineKind::LinearRegression: return "Linear_Regression";
    case BaselineKind::SpeakRank: return "SPEAK";
  }
  return "";
}

std::vector<SpeakerParams> FittedNetwork::predict(const TeamData& team) const {
  std::vector<SpeakerParams> params;
  params.reserve(team.size());
  for (const auto& row : team.traits) params.push_back(forward(training.weights, encoder.encode(row)));
  return params;
}

ParamPredictor FittedNetwork::predictor() const {
  return [self = *this](const TeamData& team) { return self.predict(team); };
}

FittedNetwork fit_network(std::span<const TeamData> train, std::span<const TeamData> val,
                          const TraitEncoder& encoder, ModelVariant variant, const TrainConfig& config) {
  const auto train_teams = encode_teams(train, encoder);
  const auto val_teams = encode_teams(val, encoder);
  return {encoder, mlspeak::train(train_teams, val_teams, encoder.n_inputs(), variant, config)};
}

FittedNetwork fit_same_traits(std::span<const TeamData> train, std::span<const TeamData> val,
                              std::size_t n_inputs, bool memory, const TrainConfig& config) {
  // Only the column count matters: every input is replaced by 0.5.
  auto encoder = TraitEncoder::constant_value(std::vector<std::size_t>(n_inputs, 0), 0.5);
  return fit_network(train, val, encoder, memory ? ModelVariant::full : ModelVariant::no_memory, config);
}

std::vector<TeamData> randomize_traits(std::span<const TeamData> teams, std::uint64_t seed) {
  std::vector<TeamData> out(teams.begin(), teams.end());
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto& team = out[k];
    if (team.traits.empty()) continue;
    const std::size_t n_traits = team.traits.front().size();
    for (std::size_t j = 0; j < n_traits; ++j) {
      std::vector<double> column;
      for (const auto& row : team.traits) column.push_back(row[j]);
      Rng rng(derive_seed(seed, "randomize", {k, j}));
      shuffle(column.begin(), column.end(), rng);
      for (std::size_t i = 0; i < team.traits.size(); ++i) team.traits[i][j] = column[i];
    }
  }
  return out;
}

FittedNetwork fit_randomized_traits(std::span<const TeamData> train, std::span<const TeamData> val,
                                    const TraitEncoder& encoder, std::uint64_t seed,
                                    const TrainConfig& config) {
  const auto shuffled_train = randomize_traits(train, derive_seed(seed, "train"));
  const auto shuffled_val = randomize_traits(val, derive_seed(seed, "val"));
  return fit_network(shuffled_train, shuffled_val, encoder, ModelVariant::full, config);
}

double RegressionModel::predict(const TraitVector& raw) const {
  double y = intercept;
  for (std::size_t j = 0; j < columns.size(); ++j) y += coefficients[j] * raw.at(columns[j]);
  return y;
}

RegressionModel fit_turncount_regression(std::span<const TeamData> train, std::vector<std::size_t> columns) {
  std::vector<TraitVector> xs;
  std::vector<double> ys;
  for (const auto& team : train) {
    std::vector<double> counts(team.size(), 0.0);
    for (const auto& m : team.conversation.meetings)
      for (std::size_t s : m.turns) counts[s] += 1.0;
    for (std::size_t i = 0; i < team.size(); ++i) {
      TraitVector x(columns.size());
      for (std::size_t j = 0; j < columns.size(); ++j) x[j] = team.traits[i].at(columns[j]);
      xs.push_back(std::move(x));
      ys.push_back(counts[i]);
    }
  }
  const std::size_t p = columns.size();
  const std::size_t n = ys.size();
  if (n < p + 2)
    throw SingularDesign("regression needs at least " + std::to_string(p + 2) + " observations, got " +
                         std::to_string(n));

  // Centered normal equations; the intercept then passes through the centroid.
  std::vector<double> xbar(p, 0.0);
  double ybar = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < p; ++j) xbar[j] += xs[r][j];
    ybar += ys[r];
  }
  for (double& v : xbar) v /= static_cast<double>(n);
  ybar /= static_cast<double>(n);

  std::vector<double> xtx(p * p, 0.0);
  std::vector<double> xty(p, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < p; ++j) {
      const double xj = xs[r][j] - xbar[j];
      xty[j] += xj * (ys[r] - ybar);
      for (std::size_t k = 0; k < p; ++k) xtx[j * p + k] += xj * (xs[r][k] - xbar[k]);
    }
  }

  RegressionModel model;
  model.columns = std::move(columns);
  model.coefficients = p == 0 ? std::vector<double>{} : solve(xtx, xty);
  model.intercept = ybar;
  for (std::size_t j = 0; j < p; ++j) model.intercept -= model.coefficients[j] * xbar[j];
  return model;
}

std::vector<SpeakerParams> regression_to_params(const RegressionModel& model,
                                                std::span<const TraitVector> team_traits) {
  std::vector<double> counts;
  double total = 0.0;
  for (const auto& row : team_traits) {
    counts.push_back(std::max(model.predict(row), kPiFloor));
    total += counts.back();
  }
  std::vector<SpeakerParams> params;
  for (double c : counts) params.push_back({c / total, 0.0});
  return params;
}

std::vector<SpeakerParams> speak_rank_params(const RegressionModel& model,
                                             std::span<const TraitVector> team_traits, double d_value,
                                             double ratio) {
  if (!(d_value > 0.0)) throw InvalidArgument("SPEAK d must be positive");
  const std::size_t n = team_traits.size();
  std::vector<double> predicted(n);
  for (std::size_t i = 0; i < n; ++i) predicted[i] = model.predict(team_traits[i]);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return predicted[x] > predicted[y]; });

  double denom = 0.0;
  for (std::size_t r = 1; r <= n; ++r) denom += std::pow(ratio, static_cast<double>(r));
  std::vector<SpeakerParams> params(n);
  for (std::size_t rank = 1; rank <= n; ++rank)
    params[order[rank - 1]] = {std::pow(ratio, static_cast<double>(rank)) / denom, d_value};
  return params;
}

double calibrated_speak_d(std::span<const SpeakerParams> speak, std::span<const SpeakerParams> ml) {
  if (speak.empty() || ml.empty()) throw InvalidArgument("calibration needs parameters");
  std::vector<double> speak_pi, ml_pi, ml_d;
  for (const auto& p : speak) speak_pi.push_back(p.pi);
  for (const auto& p : ml) {
    ml_pi.push_back(p.pi);
    ml_d.push_back(p.d);
  }
  const double d = median_of(speak_pi) * median_of(ml_d) / median_of(ml_pi);
  // A memory-free ML fit would give d = 0; keep the SPEAK d strictly positive.
  return std::max(d, kPiFloor);
}

}  // namespace mlspeak
