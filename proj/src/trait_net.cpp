#include "mlspeak/trait_net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mlspeak/errors.hpp"
#include "mlspeak/random.hpp"

namespace mlspeak {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct ForwardCache {
  std::vector<double> hidden;  // tanh activations
  double u = 0.0;              // pi pre-activation
  double v = 0.0;              // d pre-activation
};

SpeakerParams forward_cached(const NetworkWeights& w, std::span<const double> x, ForwardCache& cache) {
  const std::size_t n = w.n_inputs;
  cache.hidden.resize(kHiddenUnits);
  for (std::size_t k = 0; k < kHiddenUnits; ++k) {
    double z = w.b1[k];
    const double* row = &w.w1[k * n];
    for (std::size_t j = 0; j < n; ++j) z += row[j] * x[j];
    cache.hidden[k] = std::tanh(z);
  }
  double u = w.b2[0];
  double v = w.b2[1];
  for (std::size_t k = 0; k < kHiddenUnits; ++k) {
    u += w.w2[k] * cache.hidden[k];
    v += w.w2[kHiddenUnits + k] * cache.hidden[k];
  }
  cache.u = w.variant == ModelVariant::shared_pi ? w.shared_pi : u;
  cache.v = v;

  SpeakerParams p;
  p.pi = softplus(cache.u) + kPiFloor;
  p.d = w.variant == ModelVariant::no_memory ? 0.0 : softplus(v);
  return p;
}

void check_input(const NetworkWeights& w, std::span<const double> x) {
  if (x.size() != w.n_inputs)
    throw InvalidArgument("network expects " + std::to_string(w.n_inputs) + " traits, got " +
                          std::to_string(x.size()));
}

bool all_finite(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

TraitNormalizer TraitNormalizer::fit(std::span<const TraitVector> samples) {
  if (samples.empty()) throw InvalidArgument("cannot fit a normalizer on zero samples");
  TraitNormalizer n;
  n.min = samples.front();
  n.max = samples.front();
  for (const auto& s : samples) {
    if (s.size() != n.min.size()) throw InvalidArgument("trait rows have different lengths");
    for (std::size_t j = 0; j < s.size(); ++j) {
      n.min[j] = std::min(n.min[j], s[j]);
      n.max[j] = std::max(n.max[j], s[j]);
    }
  }
  for (std::size_t j = 0; j < n.min.size(); ++j)
    if (!(n.max[j] > n.min[j]))
      throw DegenerateTrait("trait column " + std::to_string(j) + " is constant in the training split");
  return n;
}

TraitVector TraitNormalizer::apply(const TraitVector& raw) const {
  if (raw.size() != min.size()) throw InvalidArgument("trait schema does not match normalizer");
  TraitVector out(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) out[j] = (raw[j] - min[j]) / (max[j] - min[j]);
  return out;
}

std::vector<TraitVector> normalize_traits(std::span<const TraitVector> raw,
                                          const TraitNormalizer& normalizer) {
  std::vector<TraitVector> out;
  out.reserve(raw.size());
  for (const auto& r : raw) out.push_back(normalizer.apply(r));
  return out;
}

TraitVector TraitEncoder::encode(const TraitVector& raw) const {
  TraitVector x(columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j] >= raw.size()) throw InvalidArgument("trait column out of range");
    x[j] = raw[columns[j]];
  }
  switch (mode) {
    case Mode::identity:
      return x;
    case Mode::constant:
      std::fill(x.begin(), x.end(), constant);
      return x;
    case Mode::minmax:
      return normalizer->apply(x);
  }
  return x;
}

TraitEncoder TraitEncoder::identity(std::vector<std::size_t> columns) {
  TraitEncoder e;
  e.columns = std::move(columns);
  return e;
}

TraitEncoder TraitEncoder::constant_value(std::vector<std::size_t> columns, double value) {
  TraitEncoder e;
  e.columns = std::move(columns);
  e.mode = Mode::constant;
  e.constant = value;
  return e;
}

TraitEncoder TraitEncoder::minmax(std::vector<std::size_t> columns, std::span<const TraitVector> rows) {
  TraitEncoder e;
  e.columns = std::move(columns);
  std::vector<TraitVector> selected;
  selected.reserve(rows.size());
  for (const auto& r : rows) {
    TraitVector x(e.columns.size());
    for (std::size_t j = 0; j < e.columns.size(); ++j) x[j] = r.at(e.columns[j]);
    selected.push_back(std::move(x));
  }
  e.normalizer = TraitNormalizer::fit(selected);
  e.mode = Mode::minmax;
  return e;
}

std::string_view to_string(ModelVariant v) {
  switch (v) {
    case ModelVariant::full: return "full";
    case ModelVariant::no_memory: return "no_memory";
    case ModelVariant::shared_pi: return "shared_pi";
  }
  return "full";
}

ModelVariant parse_model_variant(std::string_view s) {
  if (s == "full") return ModelVariant::full;
  if (s == "no_memory") return ModelVariant::no_memory;
  if (s == "shared_pi") return ModelVariant::shared_pi;
  throw InvalidArgument("unknown model variant '" + std::string(s) + "'");
}

NetworkWeights NetworkWeights::zeros(std::size_t n_inputs, ModelVariant variant) {
  if (n_inputs == 0) throw InvalidArgument("network needs at least one input trait");
  NetworkWeights w;
  w.n_inputs = n_inputs;
  w.variant = variant;
  w.w1.assign(kHiddenUnits * n_inputs, 0.0);
  w.b1.assign(kHiddenUnits, 0.0);
  w.w2.assign(2 * kHiddenUnits, 0.0);
  w.b2.assign(2, 0.0);
  return w;
}

NetworkWeights NetworkWeights::glorot(std::size_t n_inputs, ModelVariant variant, std::uint64_t seed) {
  auto w = zeros(n_inputs, variant);
  Rng rng(seed);
  const double r1 = std::sqrt(6.0 / static_cast<double>(n_inputs + kHiddenUnits));
  for (double& x : w.w1) x = uniform(rng, -r1, r1);
  const double r2 = std::sqrt(6.0 / static_cast<double>(kHiddenUnits + 2));
  for (double& x : w.w2) x = uniform(rng, -r2, r2);
  return w;
}

std::size_t NetworkWeights::n_params() const {
  return w1.size() + b1.size() + w2.size() + b2.size() + 1;
}

std::vector<double> NetworkWeights::pack() const {
  std::vector<double> flat;
  flat.reserve(n_params());
  flat.insert(flat.end(), w1.begin(), w1.end());
  flat.insert(flat.end(), b1.begin(), b1.end());
  flat.insert(flat.end(), w2.begin(), w2.end());
  flat.insert(flat.end(), b2.begin(), b2.end());
  flat.push_back(shared_pi);
  return flat;
}

void NetworkWeights::unpack(std::span<const double> flat) {
  if (flat.size() != n_params()) throw InvalidArgument("flat weight vector has the wrong length");
  auto it = flat.begin();
  for (auto* block : {&w1, &b1, &w2, &b2}) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(block->size()), block->begin());
    it += static_cast<std::ptrdiff_t>(block->size());
  }
  shared_pi = *it;
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

SpeakerParams forward(const NetworkWeights& weights, std::span<const double> input) {
  check_input(weights, input);
  ForwardCache cache;
  return forward_cached(weights, input, cache);
}

std::vector<SpeakerParams> predict_team(const NetworkWeights& weights,
                                        std::span<const TraitVector> inputs) {
  std::vector<SpeakerParams> params;
  params.reserve(inputs.size());
  for (const auto& x : inputs) params.push_back(forward(weights, x));
  return params;
}

double dataset_nll(const NetworkWeights& weights, std::span<const TrainingTeam> teams) {
  double total = 0.0;
  for (const auto& team : teams) {
    const auto params = predict_team(weights, team.inputs);
    total += sequence_nll(params, team.conversation);
  }
  return total;
}

LossAndGradient nll_and_gradient(const NetworkWeights& weights, std::span<const TrainingTeam> teams) {
  LossAndGradient out{0.0, NetworkWeights::zeros(weights.n_inputs, weights.variant)};
  auto& g = out.gradient;
  const std::size_t n = weights.n_inputs;

  std::vector<ForwardCache> caches;
  std::vector<SpeakerParams> params;
  std::vector<ParamGradient> pgrad;
  std::vector<double> dhidden(kHiddenUnits);

  for (const auto& team : teams) {
    const std::size_t m = team.inputs.size();
    caches.resize(m);
    params.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      check_input(weights, team.inputs[i]);
      params[i] = forward_cached(weights, team.inputs[i], caches[i]);
    }
    pgrad.assign(m, ParamGradient{});
    out.loss += sequence_nll(params, team.conversation, pgrad);

    for (std::size_t i = 0; i < m; ++i) {
      const auto& c = caches[i];
      const auto& x = team.inputs[i];
      const double du = weights.variant == ModelVariant::shared_pi ? 0.0 : pgrad[i].pi * sigmoid(c.u);
      const double dv = weights.variant == ModelVariant::no_memory ? 0.0 : pgrad[i].d * sigmoid(c.v);
      if (weights.variant == ModelVariant::shared_pi) g.shared_pi += pgrad[i].pi * sigmoid(c.u);
      if (du == 0.0 && dv == 0.0) continue;

      g.b2[0] += du;
      g.b2[1] += dv;
      for (std::size_t k = 0; k < kHiddenUnits; ++k) {
        g.w2[k] += du * c.hidden[k];
        g.w2[kHiddenUnits + k] += dv * c.hidden[k];
        dhidden[k] = (du * weights.w2[k] + dv * weights.w2[kHiddenUnits + k]) *
                     (1.0 - c.hidden[k] * c.hidden[k]);
      }
      for (std::size_t k = 0; k < kHiddenUnits; ++k) {
        g.b1[k] += dhidden[k];
        double* row = &g.w1[k * n];
        for (std::size_t j = 0; j < n; ++j) row[j] += dhidden[k] * x[j];
      }
    }
  }
  return out;
}

NetworkWeights gradient(const NetworkWeights& weights, std::span<const TrainingTeam> teams) {
  return nll_and_gradient(weights, teams).gradient;
}

TrainResult train(std::span<const TrainingTeam> train_teams, std::span<const TrainingTeam> val_teams,
                  std::size_t n_inputs, ModelVariant variant, const TrainConfig& config) {
  if (train_teams.empty() || val_teams.empty())
    throw InvalidArgument("training needs nonempty training and validation splits");
  if (!(config.learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (config.max_epochs == 0 || config.patience > config.max_epochs)
    throw InvalidArgument("need 0 < max_epochs and patience <= max_epochs");

  auto weights = NetworkWeights::glorot(n_inputs, variant, config.seed);
  std::vector<double> theta = weights.pack();
  std::vector<double> m(theta.size(), 0.0);
  std::vector<double> v(theta.size(), 0.0);

  TrainResult result;
  result.best_val_nll = std::numeric_limits<double>::infinity();
  double beta1_t = 1.0;
  double beta2_t = 1.0;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    weights.unpack(theta);
    auto [train_nll, grad] = nll_and_gradient(weights, train_teams);
    const double val_nll = dataset_nll(weights, val_teams);
    const auto g = grad.pack();
    if (!std::isfinite(train_nll) || !std::isfinite(val_nll) || !all_finite(g))
      throw NonFiniteLoss("loss became non-finite at epoch " + std::to_string(epoch));

    result.history.push_back({epoch, train_nll, val_nll});
    if (val_nll < result.best_val_nll) {
      result.best_val_nll = val_nll;
      result.best_epoch = epoch;
      result.weights = weights;
    }
    if (epoch - result.best_epoch >= config.patience) break;

    beta1_t *= config.beta1;
    beta2_t *= config.beta2;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
      v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
      const double mhat = m[k] / (1.0 - beta1_t);
      const double vhat = v[k] / (1.0 - beta2_t);
      theta[k] -= config.learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
    }
  }
  return result;
}

nlohmann::json to_json(const NetworkWeights& w) {
  return {
      {"n_inputs", w.n_inputs},
      {"hidden_units", kHiddenUnits},
      {"variant", std::string(to_string(w.variant))},
      {"w1", w.w1},
      {"b1", w.b1},
      {"w2", w.w2},
      {"b2", w.b2},
      {"shared_pi", w.shared_pi},
  };
}

NetworkWeights weights_from_json(const nlohmann::json& j) {
  if (j.value("hidden_units", kHiddenUnits) != kHiddenUnits)
    throw InvalidArgument("weights file was written for a different hidden layer size");
  auto w = NetworkWeights::zeros(j.at("n_inputs").get<std::size_t>(),
                                 parse_model_variant(j.at("variant").get<std::string>()));
  auto take = [&](const char* key, std::vector<double>& dst) {
    auto src = j.at(key).get<std::vector<double>>();
    if (src.size() != dst.size()) throw InvalidArgument(std::string("bad shape for ") + key);
    dst = std::move(src);
  };
  take("w1", w.w1);
  take("b1", w.b1);
  take("w2", w.w2);
  take("b2", w.b2);
  w.shared_pi = j.value("shared_pi", 0.0);
  return w;
}

nlohmann::json to_json(const SavedModel& m) {
  nlohmann::json enc = {{"columns", m.encoder.columns}};
  switch (m.encoder.mode) {
    case TraitEncoder::Mode::identity:
      enc["mode"] = "identity";
      break;
    case TraitEncoder::Mode::constant:
      enc["mode"] = "constant";
      enc["constant"] = m.encoder.constant;
      break;
    case TraitEncoder::Mode::minmax:
      enc["mode"] = "minmax";
      enc["min"] = m.encoder.normalizer->min;
      enc["max"] = m.encoder.normalizer->max;
      break;
  }
  return {{"trait_names", m.trait_names}, {"encoder", enc}, {"weights", to_json(m.weights)}};
}

SavedModel saved_model_from_json(const nlohmann::json& j) {
  SavedModel m;
  m.trait_names = j.at("trait_names").get<std::vector<std::string>>();
  const auto& enc = j.at("encoder");
  m.encoder.columns = enc.at("columns").get<std::vector<std::size_t>>();
  const auto mode = enc.at("mode").get<std::string>();
  if (mode == "identity") {
    m.encoder.mode = TraitEncoder::Mode::identity;
  } else if (mode == "constant") {
    m.encoder.mode = TraitEncoder::Mode::constant;
    m.encoder.constant = enc.at("constant").get<double>();
  } else if (mode == "minmax") {
    m.encoder.mode = TraitEncoder::Mode::minmax;
    m.encoder.normalizer = TraitNormalizer{enc.at("min").get<std::vector<double>>(),
                                           enc.at("max").get<std::vector<double>>()};
  } else {
    throw InvalidArgument("unknown encoder mode '" + mode + "'");
  }
  m.weights = weights_from_json(j.at("weights"));
  if (m.weights.n_inputs != m.encoder.n_inputs())
    throw InvalidArgument("encoder and weights disagree on the number of inputs");
  return m;
}

}  // namespace mlspeak
