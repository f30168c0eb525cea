#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "test_util.hpp"
#include "vbcar/error.hpp"
#include "vbcar/evaluator.hpp"
#include "vbcar/synthgen.hpp"

using namespace vbcar;

namespace {

Interactions parse(const std::string& body) {
  std::istringstream in("user_id,item_id,order_id,timestamp\n" + body);
  return parse_interactions(in);
}

double brute_recall(const std::vector<std::uint32_t>& ranked, const std::vector<std::uint32_t>& rel,
                    std::size_t k) {
  std::size_t hits = 0;
  for (std::size_t r = 0; r < std::min(k, ranked.size()); ++r) {
    for (auto x : rel) hits += (x == ranked[r]);
  }
  return static_cast<double>(hits) / static_cast<double>(rel.size());
}

double brute_ndcg(const std::vector<std::uint32_t>& ranked, const std::vector<std::uint32_t>& rel,
                  std::size_t k) {
  double dcg = 0.0, ideal = 0.0;
  for (std::size_t r = 0; r < std::min(k, ranked.size()); ++r) {
    if (std::find(rel.begin(), rel.end(), ranked[r]) != rel.end()) dcg += 1.0 / std::log2(r + 2.0);
  }
  for (std::size_t r = 0; r < std::min(k, rel.size()); ++r) ideal += 1.0 / std::log2(r + 2.0);
  return dcg / ideal;
}

// A random permutation prefix of [0, m) and a random non-empty subset.
std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> random_instance(Rng& rng,
                                                                                 std::size_t m) {
  std::vector<std::uint32_t> perm(m);
  for (std::uint32_t i = 0; i < m; ++i) perm[i] = i;
  rng.shuffle(std::span<std::uint32_t>(perm));
  perm.resize(1 + rng.index(m));
  std::set<std::uint32_t> rel;
  const std::size_t n_rel = 1 + rng.index(m);
  while (rel.size() < n_rel) rel.insert(static_cast<std::uint32_t>(rng.index(m)));
  return {perm, {rel.begin(), rel.end()}};
}

LatentMatrix table(std::size_t rows, std::size_t cols, std::vector<double> values) {
  Matrix m(rows, cols);
  m.values = std::move(values);
  return LatentMatrix::full(m);
}

}  // namespace

TEST_CASE("relevant_items examples") {
  const auto all = parse("u1,a,o1,1\nu1,b,o1,1\nu1,b,o2,2\nu1,c,o2,2\nu2,a,o3,1\nu1,a,o1,1\n");
  const auto maps = reindex(all);
  const auto test = parse("u1,a,o1,1\nu1,b,o1,1\nu1,b,o2,2\nu1,c,o2,2\nu1,a,o1,1\n");
  CHECK(relevant_items(test, maps, 0) == std::vector<std::uint32_t>{0, 1, 2});
  CHECK(relevant_items(test, maps, 1).empty());
  const auto truth = ground_truth(test, maps);
  REQUIRE(truth.size() == 2);
  CHECK(truth[0].size() == 3);
  CHECK(truth[1].empty());
}

TEST_CASE("recall_at_k examples") {
  const std::vector<std::uint32_t> ranked = {9, 1, 8, 2, 7, 6, 5, 4, 3, 10};
  const std::vector<std::uint32_t> rel = {1, 2, 11, 12};
  CHECK(*recall_at_k(ranked, rel, 10) == 0.5);
  const std::vector<std::uint32_t> some = {9, 5};
  CHECK(*recall_at_k(ranked, some, 10) == 1.0);
  CHECK_FALSE(recall_at_k(ranked, {}, 10).has_value());
}

TEST_CASE("ndcg_at_k examples") {
  const std::vector<std::uint32_t> one = {4};
  const std::vector<std::uint32_t> first = {4, 1, 2};
  const std::vector<std::uint32_t> second = {1, 4, 2};
  const std::vector<std::uint32_t> none = {1, 2, 3};
  CHECK(*ndcg_at_k(first, one, 10) == 1.0);
  CHECK(*ndcg_at_k(second, one, 10) == doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-15));
  CHECK(*ndcg_at_k(second, one, 10) == doctest::Approx(0.6309).epsilon(1e-4));
  CHECK(*ndcg_at_k(none, one, 10) == 0.0);
  CHECK_FALSE(ndcg_at_k(first, {}, 10).has_value());
}

TEST_CASE("metrics match brute force on random instances") {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = 1 + rng.index(30);
    auto [ranked, rel] = random_instance(rng, m);
    const std::size_t k = 1 + rng.index(15);
    const double recall = *recall_at_k(ranked, rel, k);
    const double ndcg = *ndcg_at_k(ranked, rel, k);
    CHECK(recall == brute_recall(ranked, rel, k));
    CHECK(std::abs(ndcg - brute_ndcg(ranked, rel, k)) <= 1e-12);
    CHECK(recall >= 0.0);
    CHECK(recall <= 1.0);
    CHECK(ndcg >= 0.0);
    CHECK(ndcg <= 1.0 + 1e-12);

    // Reordering within the window leaves recall unchanged.
    auto window = ranked;
    const std::size_t w = std::min(k, window.size());
    std::reverse(window.begin(), window.begin() + static_cast<std::ptrdiff_t>(w));
    CHECK(*recall_at_k(window, rel, k) == recall);

    // Promoting a relevant item past a non-relevant one never lowers NDCG.
    for (std::size_t r = 1; r < w; ++r) {
      const bool here = std::binary_search(rel.begin(), rel.end(), ranked[r]);
      const bool above = std::binary_search(rel.begin(), rel.end(), ranked[r - 1]);
      if (here && !above) {
        auto better = ranked;
        std::swap(better[r], better[r - 1]);
        CHECK(*ndcg_at_k(better, rel, k) >= ndcg);
        break;
      }
    }
  }
}

TEST_CASE("a perfect system scores one") {
  // Each user's vector points at its only relevant item.
  const auto zu = table(2, 2, {1, 0, 0, 1});
  const auto zi = table(3, 2, {1, 0, 0, 1, -1, -1});
  const std::vector<std::vector<std::uint32_t>> truth = {{0}, {1}};
  const auto report = evaluate(zu, zi, truth, 1);
  CHECK(report.recall_mean == 1.0);
  CHECK(report.ndcg_mean == 1.0);
  CHECK(report.users() == 2);
}

TEST_CASE("users without ground truth are skipped") {
  const auto zu = table(3, 1, {1, 1, 1});
  const auto zi = table(2, 1, {1, 0});
  const std::vector<std::vector<std::uint32_t>> truth = {{1}, {}, {0}};
  const auto report = evaluate(zu, zi, truth, 1);
  REQUIRE(report.users() == 2);
  CHECK(report.per_user[0].user == 0);
  CHECK(report.per_user[1].user == 2);
  CHECK(report.recall_mean == 0.5);
  const std::vector<std::vector<std::uint32_t>> empty = {{}, {}, {}};
  CHECK_THROWS_AS(evaluate(zu, zi, empty, 1), Error);
}

TEST_CASE("random embeddings sit near the random baseline") {
  SynthConfig cfg;
  const auto data = generate(cfg);
  const auto split = temporal_split(data, 0.8);
  const auto maps = reindex(data);
  Rng rng(2);
  Matrix u(maps.n_users(), 16), i(maps.n_items(), 16);
  for (auto& v : u.values) v = rng.normal();
  for (auto& v : i.values) v = rng.normal();
  const auto report = evaluate(LatentMatrix::full(u), LatentMatrix::full(i), split.test, maps, 10);
  const double baseline = 10.0 / static_cast<double>(maps.n_items());
  CHECK(report.recall_mean >= baseline / 3);
  CHECK(report.recall_mean <= baseline * 3);
  const auto again = evaluate(LatentMatrix::full(u), LatentMatrix::full(i), split.test, maps, 10);
  CHECK(again == report);
  CHECK(again.to_json() == report.to_json());
}

TEST_CASE("MetricsReport JSON round-trip") {
  MetricsReport r;
  r.k = 5;
  r.per_user = {{0, 0.5, 0.25}, {3, 1.0 / 3.0, 0.1}};
  r.recall_mean = (0.5 + 1.0 / 3.0) / 2;
  r.ndcg_mean = 0.175;
  CHECK(MetricsReport::from_json(r.to_json()) == r);
  CHECK(r.to_json(false).find("per_user") == std::string::npos);
  CHECK_THROWS_AS(MetricsReport::from_json("{"), Error);
}

TEST_CASE("paired_t_test examples") {
  const std::vector<double> a = {0.5, 0.6, 0.7}, b = {0.4, 0.5, 0.9};
  const auto r = paired_t_test(a, b);
  CHECK(std::abs(r.t) <= 1e-6);
  CHECK(std::abs(r.p - 1.0) <= 1e-6);
  CHECK(r.dof == 2);

  const std::vector<double> x = {1, 2, 3, 4}, y = {0, 3, 2, 5};  // d = [+1, -1, +1, -1]
  const auto sym = paired_t_test(x, y);
  CHECK(sym.t == 0.0);
  CHECK(sym.p == 1.0);

  try {
    paired_t_test(a, a);
    FAIL("expected degeneracy");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::degenerate);
  }
  const std::vector<double> one = {1.0};
  CHECK_THROWS_AS(paired_t_test(one, one), Error);
  CHECK_THROWS_AS(paired_t_test(a, one), Error);
}

TEST_CASE("paired_t_test matches the reference implementation") {
  const auto cases = testutil::load_ttest_reference(VBCAR_TEST_DATA_DIR "/ttest_reference.txt");
  REQUIRE(cases.size() == 101);
  for (const auto& c : cases) {
    const auto r = paired_t_test(c.a, c.b);
    CHECK(std::abs(r.t - c.t) <= 1e-6);
    CHECK(std::abs(r.p - c.p) <= 1e-6);
    CHECK(paired_t_test(c.b, c.a).t == -r.t);
  }
}

TEST_CASE("compare_reports pairs users") {
  MetricsReport a, b;
  a.per_user = {{0, 0.5, 0.4}, {1, 0.2, 0.3}, {2, 0.9, 0.8}};
  b.per_user = {{0, 0.4, 0.4}, {1, 0.1, 0.1}, {2, 0.7, 0.6}};
  const auto cmp = compare_reports(a, b);
  CHECK(cmp.users == 3);
  CHECK(cmp.recall.t > 0.0);
  CHECK(cmp.to_json().find("\"ndcg\"") != std::string::npos);
  CHECK_THROWS_AS(compare_reports(a, a), Error);
  b.per_user.pop_back();
  CHECK_THROWS_AS(compare_reports(a, b), Error);
}
