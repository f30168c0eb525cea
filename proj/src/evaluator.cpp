#include "vbcar/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <boost/math/distributions/students_t.hpp>

#include "json.hpp"
#include "vbcar/error.hpp"
#include "vbcar/recommender.hpp"

namespace vbcar {

std::vector<std::uint32_t> relevant_items(const Interactions& test, const IdMaps& maps,
                                          std::uint32_t user) {
  std::vector<std::uint32_t> items;
  if (user >= maps.n_users()) return items;
  const std::string& external = maps.user_id(user);
  for (const auto& r : test.records) {
    if (r.user_id != external) continue;
    const auto item = maps.item_index(r.item_id);
    if (!item) throw Error(ErrorKind::invalid_argument, "test item " + r.item_id + " is unmapped");
    items.push_back(*item);
  }
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  return items;
}

std::vector<std::vector<std::uint32_t>> ground_truth(const Interactions& test, const IdMaps& maps) {
  std::vector<std::vector<std::uint32_t>> truth(maps.n_users());
  for (const auto& r : test.records) {
    const auto user = maps.user_index(r.user_id);
    const auto item = maps.item_index(r.item_id);
    if (!user || !item) {
      throw Error(ErrorKind::invalid_argument,
                  "test record (" + r.user_id + ", " + r.item_id + ") is unmapped");
    }
    truth[*user].push_back(*item);
  }
  for (auto& items : truth) {
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
  }
  return truth;
}

std::optional<double> recall_at_k(std::span<const std::uint32_t> ranked,
                                  std::span<const std::uint32_t> relevant, std::size_t k) {
  const std::unordered_set<std::uint32_t> rel(relevant.begin(), relevant.end());
  if (rel.empty()) return std::nullopt;
  const std::size_t n = std::min(k, ranked.size());
  std::unordered_set<std::uint32_t> hits;
  for (std::size_t r = 0; r < n; ++r) {
    if (rel.count(ranked[r])) hits.insert(ranked[r]);
  }
  return static_cast<double>(hits.size()) / static_cast<double>(rel.size());
}

std::optional<double> ndcg_at_k(std::span<const std::uint32_t> ranked,
                                std::span<const std::uint32_t> relevant, std::size_t k) {
  const std::unordered_set<std::uint32_t> rel(relevant.begin(), relevant.end());
  if (rel.empty()) return std::nullopt;
  const std::size_t n = std::min(k, ranked.size());
  double dcg = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    if (rel.count(ranked[r])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  double idcg = 0.0;
  for (std::size_t r = 0; r < std::min(k, rel.size()); ++r) {
    idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  }
  return dcg / idcg;
}

MetricsReport evaluate(const LatentMatrix& zu, const LatentMatrix& zi,
                       const std::vector<std::vector<std::uint32_t>>& truth, std::size_t k) {
  if (k < 1) throw Error(ErrorKind::invalid_argument, "K must be at least 1");
  MetricsReport report;
  report.k = k;
  std::vector<std::uint32_t> ranked;
  for (std::size_t u = 0; u < truth.size(); ++u) {
    if (truth[u].empty()) continue;
    const auto user = static_cast<std::uint32_t>(u);
    const auto top = recommend(user, zu, zi, k).items;
    ranked.clear();
    for (const auto& s : top) ranked.push_back(s.item);
    report.per_user.push_back(
        {user, *recall_at_k(ranked, truth[u], k), *ndcg_at_k(ranked, truth[u], k)});
  }
  if (report.per_user.empty()) {
    throw Error(ErrorKind::insufficient_data, "no user has test items to evaluate");
  }
  for (const auto& m : report.per_user) {
    report.recall_mean += m.recall;
    report.ndcg_mean += m.ndcg;
  }
  report.recall_mean /= static_cast<double>(report.per_user.size());
  report.ndcg_mean /= static_cast<double>(report.per_user.size());
  return report;
}

MetricsReport evaluate(const LatentMatrix& zu, const LatentMatrix& zi, const Interactions& test,
                       const IdMaps& maps, std::size_t k) {
  return evaluate(zu, zi, ground_truth(test, maps), k);
}

std::string MetricsReport::to_json(bool include_per_user) const {
  nlohmann::ordered_json j;
  j["k"] = k;
  j["users"] = users();
  j["recall_mean"] = recall_mean;
  j["ndcg_mean"] = ndcg_mean;
  if (include_per_user) {
    j["per_user"] = nlohmann::ordered_json::array();
    for (const auto& m : per_user) {
      j["per_user"].push_back({{"user", m.user}, {"recall", m.recall}, {"ndcg", m.ndcg}});
    }
  }
  return j.dump(2) + "\n";
}

MetricsReport MetricsReport::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    MetricsReport report;
    report.k = j.at("k").get<std::size_t>();
    report.recall_mean = j.at("recall_mean").get<double>();
    report.ndcg_mean = j.at("ndcg_mean").get<double>();
    if (j.contains("per_user")) {
      for (const auto& m : j.at("per_user")) {
        report.per_user.push_back({m.at("user").get<std::uint32_t>(), m.at("recall").get<double>(),
                                   m.at("ndcg").get<double>()});
      }
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("metrics report: ") + e.what());
  }
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(ErrorKind::invalid_argument, "paired t-test needs two equal-length samples of size >= 2");
  }
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) mean += a[k] - b[k];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = a[k] - b[k] - mean;
    ss += d * d;
  }
  const double var = ss / static_cast<double>(n - 1);
  if (!(var > 0.0)) {
    throw Error(ErrorKind::degenerate, "paired differences have zero variance");
  }
  TTestResult out;
  out.dof = n - 1;
  out.t = mean / std::sqrt(var / static_cast<double>(n));
  const boost::math::students_t dist(static_cast<double>(out.dof));
  out.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(out.t)));
  out.p = std::min(out.p, 1.0);
  return out;
}

Comparison compare_reports(const MetricsReport& a, const MetricsReport& b) {
  if (a.per_user.size() != b.per_user.size()) {
    throw Error(ErrorKind::invalid_argument, "reports cover different user sets");
  }
  std::vector<double> ra, rb, na, nb;
  for (std::size_t k = 0; k < a.per_user.size(); ++k) {
    if (a.per_user[k].user != b.per_user[k].user) {
      throw Error(ErrorKind::invalid_argument, "reports cover different user sets");
    }
    ra.push_back(a.per_user[k].recall);
    rb.push_back(b.per_user[k].recall);
    na.push_back(a.per_user[k].ndcg);
    nb.push_back(b.per_user[k].ndcg);
  }
  return {a.per_user.size(), paired_t_test(ra, rb), paired_t_test(na, nb)};
}

std::string Comparison::to_json() const {
  nlohmann::ordered_json j;
  j["users"] = users;
  j["recall"] = {{"t", recall.t}, {"p", recall.p}, {"dof", recall.dof}};
  j["ndcg"] = {{"t", ndcg.t}, {"p", ndcg.p}, {"dof", ndcg.dof}};
  return j.dump(2) + "\n";
}

}  // namespace vbcar
