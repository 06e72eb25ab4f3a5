#include <cmath>
#include <map>
#include <numeric>

#include "doctest.h"
#include "mlspeak/errors.hpp"
#include "mlspeak/random.hpp"
#include "mlspeak/turn_model.hpp"
#include "../oracles.hpp"

using namespace mlspeak;

namespace {

HistoryState history_after(std::size_t n, std::initializer_list<std::size_t> turns) {
  HistoryState s(n);
  for (auto t : turns) s.advance(t);
  return s;
}

TeamConversation single_meeting(std::size_t n, std::vector<std::size_t> turns) {
  return {n, {Meeting{std::move(turns), AttendanceMask::all_present(n)}}};
}

}  // namespace

TEST_CASE("speaking likelihood follows the memory formula") {
  const SpeakerParams p{0.2, 1.0};
  // member 0 spoke at turn 1, member 1 at turn 2; now turn 3, gap 2
  const auto s = history_after(2, {0, 1});
  CHECK(speaking_likelihood(p, s, 0) == doctest::Approx(0.5678794411714423).epsilon(1e-12));
  CHECK(speaking_likelihood(p, s, 1) == 0.0);

  const HistoryState fresh(3);
  CHECK(speaking_likelihood({0.4, 2.0}, fresh, 2) == 0.4);
}

TEST_CASE("memory term decreases with the gap towards pi") {
  const SpeakerParams p{0.3, 2.0};
  double prev = INFINITY;
  for (std::size_t gap = 2; gap < 60; ++gap) {  // beyond ~70 the term is below double resolution
    HistoryState s(3);
    s.advance(0);
    for (std::size_t k = 1; k < gap; ++k) s.advance(1 + k % 2);  // members 1 and 2 hold the floor
    const double l = speaking_likelihood(p, s, 0);
    CHECK(l == doctest::Approx(p.pi + p.d * std::exp(-0.5 * double(gap))).epsilon(1e-14));
    CHECK(l < prev);
    CHECK(l > p.pi);
    prev = l;
  }
  CHECK(memory_decay(1000) == doctest::Approx(std::exp(-500.0)));
}

TEST_CASE("next speaker distribution") {
  SUBCASE("exclusion and proportional weights") {
    const std::vector<SpeakerParams> team{{0.5, 0.0}, {0.3, 0.0}, {0.2, 0.0}};
    const auto p = next_speaker_distribution(team, history_after(3, {0}), AttendanceMask::all_present(3));
    CHECK(p[0] == 0.0);
    CHECK(p[1] == doctest::Approx(0.6));
    CHECK(p[2] == doctest::Approx(0.4));
  }
  SUBCASE("symmetry with equal pi") {
    const std::vector<SpeakerParams> team(5, SpeakerParams{0.7, 1.3});
    for (double v : next_speaker_distribution(team, HistoryState(5), AttendanceMask::all_present(5)))
      CHECK(v == doctest::Approx(0.2));
  }
  SUBCASE("absent members get zero") {
    const std::vector<SpeakerParams> team{{1.0, 1.0}, {1.0, 1.0}, {1.0, 1.0}};
    const auto p = next_speaker_distribution(team, HistoryState(3), AttendanceMask({true, false, true}));
    CHECK(p[1] == 0.0);
    CHECK(p[0] == doctest::Approx(0.5));
  }
  SUBCASE("errors") {
    const std::vector<SpeakerParams> team{{1.0, 0.0}, {1.0, 0.0}};
    CHECK_THROWS_AS(next_speaker_distribution(team, HistoryState(2), AttendanceMask({true, false})), InvalidArgument);
    CHECK_THROWS_AS(next_speaker_distribution(team, HistoryState(3), AttendanceMask::all_present(3)), InvalidArgument);
    const std::vector<SpeakerParams> zero{{0.0, 0.0}, {0.0, 0.0}};
    CHECK_THROWS_AS(next_speaker_distribution(zero, HistoryState(2), AttendanceMask::all_present(2)),
                    AllZeroLikelihood);
  }
}

TEST_CASE("distribution is normalized and scale invariant") {
  Rng rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + uniform_index(rng, 7);
    std::vector<SpeakerParams> team;
    for (std::size_t i = 0; i < n; ++i) team.push_back({uniform(rng, 0.05, 2.0), uniform(rng, 0.0, 8.0)});
    HistoryState s(n);
    const std::size_t steps = uniform_index(rng, 12);
    std::size_t prev = n;
    for (std::size_t k = 0; k < steps; ++k) {
      std::size_t next = uniform_index(rng, n);
      if (next == prev) next = (next + 1) % n;
      s.advance(next);
      prev = next;
    }
    const auto mask = AttendanceMask::all_present(n);
    const auto p = next_speaker_distribution(team, s, mask);
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    if (prev < n) CHECK(p[prev] == 0.0);

    const double c = uniform(rng, 0.01, 50.0);
    auto scaled = team;
    for (auto& sp : scaled) {
      sp.pi *= c;
      sp.d *= c;
    }
    const auto q = next_speaker_distribution(scaled, s, mask);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(p[i] - q[i]) < 1e-12);
  }
}

TEST_CASE("sampling") {
  const std::vector<SpeakerParams> team{{0.5, 1.0}, {0.3, 2.0}, {0.2, 3.0}};
  const auto mask = AttendanceMask::all_present(3);

  SUBCASE("deterministic per seed, no repeats") {
    const auto a = sample_conversation(team, 300, mask, 5);
    const auto b = sample_conversation(team, 300, mask, 5);
    CHECK(a == b);
    CHECK(a.turns.size() == 300);
    for (std::size_t k = 1; k < a.turns.size(); ++k) CHECK(a.turns[k] != a.turns[k - 1]);
    CHECK(sample_conversation(team, 300, mask, 6).turns != a.turns);
  }
  SUBCASE("two present members alternate") {
    const auto m = sample_conversation(team, 6, AttendanceMask({true, false, true}), 3);
    for (std::size_t k = 0; k < m.turns.size(); ++k) {
      CHECK(m.turns[k] != 1);
      if (k > 0) CHECK(m.turns[k] != m.turns[k - 1]);
    }
  }
  SUBCASE("first-turn frequencies match pi") {
    const std::vector<SpeakerParams> flat{{0.5, 0.0}, {0.3, 0.0}, {0.2, 0.0}};
    const int n = 100000;
    std::vector<int> counts(3, 0);
    for (int s = 0; s < n; ++s) ++counts[sample_conversation(flat, 1, mask, derive_seed(77, "first", {std::uint64_t(s)})).turns[0]];
    const double expected[] = {0.5, 0.3, 0.2};
    for (int i = 0; i < 3; ++i) {
      const double sigma = std::sqrt(expected[i] * (1 - expected[i]) / n);
      CHECK(std::abs(counts[i] / double(n) - expected[i]) < 3 * sigma);
    }
  }
  CHECK_THROWS_AS(sample_conversation(team, 0, mask, 1), InvalidArgument);
}

TEST_CASE("sequence NLL closed forms") {
  SUBCASE("uniform no-memory team") {
    const std::vector<SpeakerParams> team(5, SpeakerParams{1.0, 0.0});
    std::vector<std::size_t> turns;
    Rng rng(9);
    for (std::size_t k = 0; k < 600; ++k) {
      std::size_t next = uniform_index(rng, 5);
      if (k && next == turns.back()) next = (next + 1) % 5;
      turns.push_back(next);
    }
    const double expected = std::log(5.0) + 599.0 * std::log(4.0);
    CHECK(std::abs(sequence_nll(team, single_meeting(5, turns)) - expected) < 1e-9);
    CHECK(sequence_nll(team, single_meeting(5, {3})) == doctest::Approx(std::log(5.0)));
  }
  SUBCASE("hand computed pair") {
    const std::vector<SpeakerParams> team{{0.5, 0.0}, {0.3, 0.0}, {0.2, 0.0}};
    CHECK(sequence_nll(team, single_meeting(3, {0, 1})) == doctest::Approx(1.203972804325936).epsilon(1e-12));
  }
  SUBCASE("impossible events") {
    const std::vector<SpeakerParams> team{{0.5, 1.0}, {0.3, 1.0}, {0.2, 1.0}};
    CHECK_THROWS_AS(sequence_nll(team, single_meeting(3, {0, 0})), ZeroProbabilityEvent);
    TeamConversation absent{3, {Meeting{{0, 1}, AttendanceMask({true, false, true})}}};
    CHECK_THROWS_AS(sequence_nll(team, absent), ZeroProbabilityEvent);
    CHECK_THROWS_AS(sequence_nll(team, single_meeting(2, {0, 1})), InvalidArgument);
  }
}

TEST_CASE("history resets at meeting boundaries") {
  const std::vector<SpeakerParams> team{{0.5, 2.0}, {0.3, 1.0}, {0.2, 4.0}};
  const auto mask = AttendanceMask::all_present(3);
  const Meeting a{{0, 1, 2, 0}, mask};
  const Meeting b{{0, 2, 1}, mask};
  const TeamConversation both{3, {a, b}};
  CHECK(sequence_nll(team, both) ==
        doctest::Approx(sequence_nll(team, TeamConversation{3, {a}}) + sequence_nll(team, TeamConversation{3, {b}})));
  // Meeting b starts with member 0, who ended meeting a: allowed after the reset.
  CHECK(std::isfinite(sequence_nll(team, both)));
}

TEST_CASE("exhaustive enumeration agrees with the NLL") {
  const std::vector<SpeakerParams> team{{0.6, 1.5}, {0.3, 2.5}, {0.15, 4.0}};
  const std::vector<oracle::Params> ref{{0.6, 1.5}, {0.3, 2.5}, {0.15, 4.0}};
  const auto seqs = oracle::legal_sequences(3, 5);
  REQUIRE(seqs.size() == 48);
  double total = 0.0;
  for (const auto& s : seqs) {
    const double p = oracle::sequence_probability(ref, s);
    total += p;
    CHECK(std::abs(std::exp(-sequence_nll(team, single_meeting(3, s))) - p) < 1e-10);
  }
  CHECK(std::abs(total - 1.0) < 1e-10);
}

TEST_CASE("analytic parameter gradient matches finite differences") {
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 2 + uniform_index(rng, 4);
    std::vector<SpeakerParams> team;
    for (std::size_t i = 0; i < n; ++i) team.push_back({uniform(rng, 0.2, 1.5), uniform(rng, 0.1, 5.0)});
    std::vector<bool> flags(n, true);
    if (n > 2) flags[uniform_index(rng, n)] = uniform01(rng) < 0.5;
    const AttendanceMask mask(flags);
    TeamConversation conv{n, {sample_conversation(team, 60, mask, rng()), sample_conversation(team, 40, AttendanceMask::all_present(n), rng())}};

    std::vector<ParamGradient> grad(n);
    sequence_nll(team, conv, grad);
    std::vector<double> x;
    for (const auto& p : team) {
      x.push_back(p.pi);
      x.push_back(p.d);
    }
    const auto fd = oracle::finite_difference(
        [&](const std::vector<double>& v) {
          std::vector<SpeakerParams> t(n);
          for (std::size_t i = 0; i < n; ++i) t[i] = {v[2 * i], v[2 * i + 1]};
          return sequence_nll(t, conv);
        },
        x, 1e-6);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(grad[i].pi == doctest::Approx(fd[2 * i]).epsilon(1e-5));
      CHECK(grad[i].d == doctest::Approx(fd[2 * i + 1]).epsilon(1e-5));
    }
  }
}

TEST_CASE("peak likelihood") {
  CHECK(peak_likelihood({0.5, 0.0}) == 0.5);
  CHECK(peak_likelihood({0.2, 1.0}) == doctest::Approx(0.8065306597126334).epsilon(1e-12));
  CHECK(peak_likelihood({0.0, 1.0}) == doctest::Approx(0.6065306597126334).epsilon(1e-12));
}

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(validate({0.1, 0.0}));
  CHECK_THROWS_AS(validate({0.0, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(validate({0.5, -1.0}), InvalidArgument);
  CHECK_THROWS_AS(validate({NAN, 1.0}), InvalidArgument);
}
