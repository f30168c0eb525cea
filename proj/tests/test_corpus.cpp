#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "vbcar/corpus.hpp"
#include "vbcar/error.hpp"
#include "vbcar/rng.hpp"

using namespace vbcar;

namespace {

Interactions parse(const std::string& text, const ColumnSpec& cols = {}) {
  std::istringstream in(text);
  return parse_interactions(in, cols);
}

const char* kHeader = "user_id,item_id,order_id,timestamp\n";

InteractionRecord rec(std::string u, std::string i, std::string o, std::int64_t t) {
  return {std::move(u), std::move(i), std::move(o), t};
}

// Random corpus: every order has one user and one timestamp.
Interactions random_corpus(Rng& rng, std::size_t users, std::size_t items, std::size_t orders) {
  std::vector<InteractionRecord> records;
  for (std::size_t o = 0; o < orders; ++o) {
    const std::string user = "u" + std::to_string(rng.index(users));
    const auto ts = static_cast<std::int64_t>(rng.index(orders / 2 + 1));
    const std::size_t n = 1 + rng.index(6);
    for (std::size_t k = 0; k < n; ++k) {
      records.push_back(rec(user, "i" + std::to_string(rng.index(items)), "o" + std::to_string(o), ts));
    }
  }
  return Interactions::from_records(std::move(records));
}

}  // namespace

TEST_CASE("parse_interactions reads a single row") {
  const auto data = parse(std::string(kHeader) + "u1,i1,o1,100\n");
  CHECK(data.n_users() == 1);
  CHECK(data.n_items() == 1);
  CHECK(data.n_orders() == 1);
  REQUIRE(data.records.size() == 1);
  CHECK(data.records[0] == rec("u1", "i1", "o1", 100));
}

TEST_CASE("parse_interactions counts universes") {
  const auto data = parse(std::string(kHeader) +
                          "u1,i1,o1,1\nu1,i2,o1,1\nu2,i1,o2,2\nu2,i2,o2,2\n");
  CHECK(data.n_users() == 2);
  CHECK(data.n_items() == 2);
  CHECK(data.n_orders() == 2);
  CHECK(data.records.size() == 4);
}

TEST_CASE("parse_interactions keeps duplicate rows") {
  const auto data = parse(std::string(kHeader) + "u1,i1,o1,1\nu1,i1,o1,1\n");
  CHECK(data.records.size() == 2);
  CHECK(data.n_items() == 1);
}

TEST_CASE("parse_interactions reports the failing line") {
  SUBCASE("unparseable timestamp") {
    try {
      parse(std::string(kHeader) + "u0,i0,o0,5\nu1,i1,o1,abc\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("wrong column count") {
    try {
      parse(std::string(kHeader) + "u1,i1,o1\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }
  SUBCASE("negative timestamp") { CHECK_THROWS_AS(parse(std::string(kHeader) + "u,i,o,-4\n"), ParseError); }
  SUBCASE("empty input") { CHECK_THROWS_AS(parse(""), ParseError); }
  SUBCASE("header only") { CHECK_THROWS_AS(parse(kHeader), ParseError); }
  SUBCASE("missing column") { CHECK_THROWS_AS(parse("user_id,item_id,order_id\nu,i,o\n"), ParseError); }
  SUBCASE("order shared by two users") {
    CHECK_THROWS_AS(parse(std::string(kHeader) + "u1,i1,o1,1\nu2,i1,o1,1\n"), ParseError);
  }
}

TEST_CASE("parse_interactions honours the column spec") {
  ColumnSpec cols;
  cols.user = "customer";
  cols.item = "product";
  cols.order = "basket";
  cols.timestamp = "t";
  cols.delimiter = '\t';
  const auto data = parse("t\tproduct\tbasket\tcustomer\textra\r\n7\tp1\tb1\tc1\tx\r\n", cols);
  REQUIRE(data.records.size() == 1);
  CHECK(data.records[0] == rec("c1", "p1", "b1", 7));

  std::ostringstream out;
  write_interactions(out, data, cols);
  CHECK(out.str() == "customer\tproduct\tbasket\tt\nc1\tp1\tb1\t7\n");
}

TEST_CASE("parsing is deterministic and survives a write/read cycle") {
  Rng rng(5);
  const auto data = random_corpus(rng, 8, 12, 30);
  std::ostringstream out;
  write_interactions(out, data);
  const auto again = parse(out.str());
  CHECK(again == data);
  CHECK(parse(out.str()) == again);
}

TEST_CASE("filter_dataset with zero thresholds is the identity") {
  Rng rng(1);
  const auto data = random_corpus(rng, 5, 9, 20);
  CHECK(filter_dataset(data, {0, 0, 0}) == data);
}

TEST_CASE("filter_dataset drops a user below the order threshold") {
  // u3 has a single order.
  std::vector<InteractionRecord> records = {
      rec("u1", "a", "o1", 1), rec("u1", "b", "o1", 1), rec("u1", "c", "o2", 2),
      rec("u2", "a", "o3", 1), rec("u2", "c", "o4", 3), rec("u3", "a", "o5", 2),
      rec("u3", "b", "o5", 2), rec("u3", "c", "o5", 2),
  };
  const auto data = Interactions::from_records(records);
  const auto out = filter_dataset(data, {2, 0, 0});

  // Brute-force oracle: keep records whose user has >= 2 distinct orders.
  std::vector<InteractionRecord> expected;
  for (const auto& r : records) {
    std::set<std::string> orders;
    for (const auto& s : records) {
      if (s.user_id == r.user_id) orders.insert(s.order_id);
    }
    if (orders.size() >= 2) expected.push_back(r);
  }
  CHECK(out == Interactions::from_records(expected));
  CHECK(out.users == std::vector<std::string>{"u1", "u2"});
}

TEST_CASE("filter_dataset signals over-filtering") {
  const auto data = parse(std::string(kHeader) + "u1,i1,o1,1\nu2,i1,o2,2\n");
  try {
    filter_dataset(data, {7, 30, 16});
    FAIL("expected over-filtering");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::over_filtering);
  }
}

TEST_CASE("filter soundness by direct recount") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const auto data = random_corpus(rng, 12, 15, 80);
    const FilterThresholds t{1 + rng.index(4), 1 + rng.index(6), rng.index(4)};
    Interactions out;
    try {
      out = filter_dataset(data, t);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::over_filtering);
      continue;
    }
    std::map<std::string, std::set<std::string>> users_of_item, orders_of_user, items_of_user;
    for (const auto& r : out.records) {
      users_of_item[r.item_id].insert(r.user_id);
      orders_of_user[r.user_id].insert(r.order_id);
      items_of_user[r.user_id].insert(r.item_id);
    }
    // Items are filtered last, so the item criterion always holds.
    for (const auto& [item, users] : users_of_item) CHECK(users.size() >= t.min_users_per_item);
    // Without item removal the user criteria hold as well.
    const auto users_only = filter_dataset(data, {t.min_orders_per_user, t.min_items_per_user, 0});
    orders_of_user.clear();
    items_of_user.clear();
    for (const auto& r : users_only.records) {
      orders_of_user[r.user_id].insert(r.order_id);
      items_of_user[r.user_id].insert(r.item_id);
    }
    for (const auto& [user, orders] : orders_of_user) {
      CHECK(orders.size() >= t.min_orders_per_user);
      CHECK(items_of_user[user].size() >= t.min_items_per_user);
    }
  }
}

TEST_CASE("temporal_split cuts at ceil(ratio * L)") {
  std::string text = kHeader;
  for (int o = 1; o <= 5; ++o) {
    text += "u1,i" + std::to_string(o) + ",o" + std::to_string(o) + "," + std::to_string(o) + "\n";
  }
  const auto split = temporal_split(parse(text), 0.8);
  CHECK(split.train.orders == std::vector<std::string>{"o1", "o2", "o3", "o4"});
  CHECK(split.test.orders == std::vector<std::string>{"o5"});
  CHECK(split.split_ratio == 0.8);
}

TEST_CASE("temporal_split breaks timestamp ties by order id") {
  const auto split = temporal_split(parse(std::string(kHeader) + "u1,i1,ob,9\nu2,i2,oa,9\n"), 0.5);
  CHECK(split.train.orders == std::vector<std::string>{"oa"});
  CHECK(split.test.orders == std::vector<std::string>{"ob"});
}

TEST_CASE("temporal_split keeps both sides non-empty") {
  const auto split = temporal_split(parse(std::string(kHeader) + "u1,i1,o1,1\nu1,i2,o2,2\n"), 0.8);
  CHECK(split.train.n_orders() == 1);
  CHECK(split.test.n_orders() == 1);
}

TEST_CASE("temporal_split errors") {
  CHECK_THROWS_AS(temporal_split(parse(std::string(kHeader) + "u1,i1,o1,1\nu1,i2,o1,1\n"), 0.5), Error);
  const auto two = parse(std::string(kHeader) + "u1,i1,o1,1\nu1,i2,o2,2\n");
  CHECK_THROWS_AS(temporal_split(two, 0.0), Error);
  CHECK_THROWS_AS(temporal_split(two, 1.0), Error);
  CHECK_THROWS_AS(temporal_split(parse(std::string(kHeader) + "u1,i1,o1,1\nu1,i2,o1,2\n"), 0.5), Error);
}

TEST_CASE("temporal_split partitions records and orders") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(100 + seed);
    const auto data = random_corpus(rng, 6, 10, 10 + rng.index(30));
    const double ratio = 0.05 + 0.9 * rng.uniform();
    const auto split = temporal_split(data, ratio);
    CHECK(split.train.records.size() + split.test.records.size() == data.records.size());

    std::vector<std::string> common;
    std::set_intersection(split.train.orders.begin(), split.train.orders.end(),
                          split.test.orders.begin(), split.test.orders.end(),
                          std::back_inserter(common));
    CHECK(common.empty());

    std::int64_t last_train = 0, first_test = INT64_MAX;
    for (const auto& r : split.train.records) last_train = std::max(last_train, r.timestamp);
    for (const auto& r : split.test.records) first_test = std::min(first_test, r.timestamp);
    CHECK(last_train <= first_test);

    auto merged = split.train.records;
    merged.insert(merged.end(), split.test.records.begin(), split.test.records.end());
    auto original = data.records;
    auto key = [](const InteractionRecord& r) { return std::tie(r.order_id, r.item_id, r.user_id, r.timestamp); };
    auto less = [&](const auto& a, const auto& b) { return key(a) < key(b); };
    std::sort(merged.begin(), merged.end(), less);
    std::sort(original.begin(), original.end(), less);
    CHECK(merged == original);
  }
}

TEST_CASE("reindex is lexicographic, dense and bijective") {
  const auto data = parse(std::string(kHeader) + "b,y,o1,1\na,x,o2,1\nc,x,o3,1\n");
  const IdMaps maps = reindex(data);
  CHECK(maps.user_index("a") == 0u);
  CHECK(maps.user_index("b") == 1u);
  CHECK(maps.user_index("c") == 2u);
  CHECK_FALSE(maps.user_index("zz").has_value());
  for (std::uint32_t k = 0; k < maps.n_users(); ++k) CHECK(maps.user_index(maps.user_id(k)) == k);
  for (const auto& id : data.items) CHECK(maps.item_id(*maps.item_index(id)) == id);
  CHECK(maps.n_items() == 2);
  CHECK_THROWS_AS(reindex(Interactions{}), Error);
}

TEST_CASE("id map files round-trip") {
  const std::vector<std::string> ids = {"alpha", "beta", "gamma"};
  std::ostringstream out;
  write_id_map(out, ids);
  CHECK(out.str() == "alpha\t0\nbeta\t1\ngamma\t2\n");
  std::istringstream in(out.str());
  CHECK(read_id_map(in) == ids);
  std::istringstream gap("a\t0\nb\t2\n");
  CHECK_THROWS_AS(read_id_map(gap), ParseError);
}

TEST_CASE("to_baskets groups by order with distinct items") {
  const auto data = parse(std::string(kHeader) + "u2,i3,o2,5\nu1,i2,o1,4\nu1,i1,o1,4\nu1,i2,o1,4\n");
  const auto maps = reindex(data);
  const auto baskets = to_baskets(data, maps);
  REQUIRE(baskets.size() == 2);
  CHECK(baskets[0].user == 0);
  CHECK(baskets[0].timestamp == 4);
  CHECK(baskets[0].items == std::vector<std::uint32_t>{0, 1});
  CHECK(baskets[1].user == 1);
  CHECK(baskets[1].items == std::vector<std::uint32_t>{2});

  const IdMaps partial({"u1"}, {"i1", "i2"});
  CHECK_THROWS_AS(to_baskets(data, partial), Error);
}
