#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "mlspeak/baselines.hpp"
#include "mlspeak/errors.hpp"
#include "mlspeak/synthetic.hpp"

using namespace mlspeak;

namespace {

/// One meeting in which member i speaks counts[i] times (order irrelevant to
/// the regression, which only counts turns).
TeamData team_with_counts(std::vector<TraitVector> traits, const std::vector<std::size_t>& counts) {
  TeamData t;
  t.team_id = "T";
  for (std::size_t i = 0; i < traits.size(); ++i) t.member_ids.push_back("m" + std::to_string(i));
  t.traits = std::move(traits);
  std::vector<std::size_t> turns;
  for (std::size_t i = 0; i < counts.size(); ++i) turns.insert(turns.end(), counts[i], i);
  t.meeting_ids = {"1"};
  t.conversation = {t.size(), {Meeting{turns, AttendanceMask::all_present(t.size())}}};
  return t;
}

}  // namespace

TEST_CASE("turn-count regression recovers an exact line") {
  const std::vector<TeamData> train{team_with_counts({{0.0}, {0.5}, {1.0}}, {0, 5, 10})};
  const auto model = fit_turncount_regression(train, {0});
  CHECK(model.intercept == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
  REQUIRE(model.coefficients.size() == 1);
  CHECK(model.coefficients[0] == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(model.predict({0.25}) == doctest::Approx(2.5));
}

TEST_CASE("constant turn counts give zero slopes") {
  const std::vector<TeamData> train{team_with_counts({{0.1, 3.0}, {0.5, 1.0}, {0.9, 2.0}, {0.3, 7.0}}, {4, 4, 4, 4})};
  const auto model = fit_turncount_regression(train, {0, 1});
  CHECK(model.intercept == doctest::Approx(4.0));
  for (double c : model.coefficients) CHECK(c == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("regression rejects degenerate designs") {
  const std::vector<TeamData> collinear{
      team_with_counts({{1.0, 2.0}, {2.0, 4.0}, {3.0, 6.0}, {4.0, 8.0}}, {1, 2, 3, 5})};
  CHECK_THROWS_AS(fit_turncount_regression(collinear, {0, 1}), SingularDesign);
  const std::vector<TeamData> tiny{team_with_counts({{1.0}, {2.0}}, {1, 2})};
  CHECK_THROWS_AS(fit_turncount_regression(tiny, {0}), SingularDesign);
}

TEST_CASE("regression predictions become within-team pi") {
  RegressionModel m{{0}, 0.0, {1.0}};
  auto p = regression_to_params(m, std::vector<TraitVector>{{10.0}, {30.0}, {60.0}});
  CHECK(p[0].pi == doctest::Approx(0.1));
  CHECK(p[1].pi == doctest::Approx(0.3));
  CHECK(p[2].pi == doctest::Approx(0.6));
  for (const auto& q : p) CHECK(q.d == 0.0);

  p = regression_to_params(m, std::vector<TraitVector>{{-2.0}, {5.0}, {5.0}});
  // clamp to (1e-6, 5, 5), then normalize by their sum
  const double z = 10.0 + 1e-6;
  CHECK(p[0].pi == doctest::Approx(1e-6 / z).epsilon(1e-12));
  CHECK(p[1].pi == doctest::Approx(5.0 / z).epsilon(1e-12));
  CHECK(p[2].pi == doctest::Approx(5.0 / z).epsilon(1e-12));
}

TEST_CASE("SPEAK rank parameters") {
  RegressionModel m{{0}, 0.0, {1.0}};
  // ranks by predicted count: member 2 first, then 4, 0, 3, 1
  const std::vector<TraitVector> five{{3.0}, {1.0}, {5.0}, {2.0}, {4.0}};
  const auto p = speak_rank_params(m, five, kSpeakDefaultD);
  const std::vector<double> by_rank{0.36061, 0.25243, 0.17670, 0.12369, 0.08658};
  CHECK(p[2].pi == doctest::Approx(by_rank[0]).epsilon(1e-4));
  CHECK(p[4].pi == doctest::Approx(by_rank[1]).epsilon(1e-4));
  CHECK(p[0].pi == doctest::Approx(by_rank[2]).epsilon(1e-4));
  CHECK(p[3].pi == doctest::Approx(by_rank[3]).epsilon(1e-4));
  CHECK(p[1].pi == doctest::Approx(by_rank[4]).epsilon(1e-4));
  for (const auto& q : p) CHECK(q.d == 2.26);

  const auto two = speak_rank_params(m, std::vector<TraitVector>{{1.0}, {2.0}}, 1.0);
  CHECK(two[1].pi == doctest::Approx(0.7 / 1.19));
  CHECK(two[0].pi == doctest::Approx(0.49 / 1.19));

  // ties broken by member order
  const auto tied = speak_rank_params(m, std::vector<TraitVector>{{1.0}, {1.0}, {1.0}}, 1.0);
  CHECK(tied[0].pi > tied[1].pi);
  CHECK(tied[1].pi > tied[2].pi);

  CHECK_THROWS_AS(speak_rank_params(m, five, 0.0), InvalidArgument);
}

TEST_CASE("calibrated SPEAK d matches the median ratio") {
  const std::vector<SpeakerParams> speak{{0.1, 0.0}, {0.3, 0.0}, {0.6, 0.0}};
  const std::vector<SpeakerParams> ml{{0.5, 2.0}, {1.0, 4.0}, {2.0, 8.0}};
  // median pi_ml / median d_ml = 1 / 4, so d = 0.3 / 0.25
  CHECK(calibrated_speak_d(speak, ml) == doctest::Approx(1.2));
}

TEST_CASE("within-team trait shuffles") {
  TrialSpec spec;
  spec.n_turns = 20;
  spec.base_seed = 6;
  const auto trial = build_trial(spec);
  const auto shuffled = randomize_traits(trial.train.teams, 3);
  CHECK(shuffled == randomize_traits(trial.train.teams, 3));
  bool any_moved = false;
  for (std::size_t k = 0; k < shuffled.size(); ++k) {
    const auto& before = trial.train.teams[k];
    const auto& after = shuffled[k];
    CHECK(after.conversation == before.conversation);
    for (std::size_t c = 0; c < 2; ++c) {
      std::multiset<double> x, y;
      for (std::size_t i = 0; i < before.size(); ++i) {
        x.insert(before.traits[i][c]);
        y.insert(after.traits[i][c]);
        any_moved |= before.traits[i][c] != after.traits[i][c];
      }
      CHECK(x == y);
    }
  }
  CHECK(any_moved);

  auto solo = trial.train.teams[0];
  solo.member_ids.resize(1);
  solo.traits.resize(1);
  const std::vector<TeamData> one{solo};
  CHECK(randomize_traits(one, 9)[0].traits == solo.traits);
}

TEST_CASE("same-traits baselines ignore the traits") {
  TrialSpec spec;
  spec.n_train_teams = 6;
  spec.n_turns = 200;
  spec.base_seed = 12;
  const auto trial = build_trial(spec);
  TrainConfig config;
  config.max_epochs = 150;
  config.seed = 2;

  const auto no_mem = fit_same_traits(trial.train.teams, trial.val.teams, 2, false, config);
  const auto params = no_mem.predict(trial.test.teams[0]);
  for (const auto& p : params) {
    CHECK(p.d == 0.0);
    CHECK(p.pi == params[0].pi);
  }
  // equal pi, d = 0: ln 5 + 199 ln 4 per 200-turn team
  const double closed = std::log(5.0) + 199.0 * std::log(4.0);
  const std::vector<TeamData> test_team{trial.test.teams[0]};
  CHECK(sequence_nll(params, test_team[0].conversation) == doctest::Approx(closed).epsilon(1e-12));

  const auto mem = fit_same_traits(trial.train.teams, trial.val.teams, 2, true, config);
  const auto mp = mem.predict(trial.test.teams[1]);
  for (const auto& p : mp) {
    CHECK(p.pi == mp[0].pi);
    CHECK(p.d == mp[0].d);
  }
}

TEST_CASE("labels") {
  CHECK(model_label(BaselineKind::SpeakRank) == "SPEAK");
  std::set<std::string> labels;
  for (auto k : {BaselineKind::SameTraits, BaselineKind::SameTraitsNoMemory, BaselineKind::RandomizedTraits,
                 BaselineKind::LinearRegression, BaselineKind::SpeakRank})
    labels.insert(model_label(k));
  labels.insert(kMlSpeakLabel);
  CHECK(labels.size() == 6);
}
