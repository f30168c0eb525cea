#include "vbcar/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string_view>

#include "vbcar/error.hpp"

namespace vbcar {
namespace {

std::vector<std::string> sorted_unique(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::vector<std::string_view> split_line(std::string_view line, char delimiter) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

std::size_t column_index(const std::vector<std::string_view>& header,
                         const std::string& name) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ParseError(1, "missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

Interactions Interactions::from_records(std::vector<InteractionRecord> records) {
  Interactions data;
  std::unordered_map<std::string_view, std::string_view> order_owner;
  std::vector<std::string> users, items, orders;
  users.reserve(records.size());
  items.reserve(records.size());
  orders.reserve(records.size());
  for (const auto& r : records) {
    if (r.user_id.empty() || r.item_id.empty() || r.order_id.empty()) {
      throw Error(ErrorKind::invalid_argument, "interaction with an empty id");
    }
    if (r.timestamp < 0) {
      throw Error(ErrorKind::invalid_argument,
                  "negative timestamp in order " + r.order_id);
    }
    auto [it, inserted] = order_owner.emplace(r.order_id, r.user_id);
    if (!inserted && it->second != r.user_id) {
      throw Error(ErrorKind::invalid_argument,
                  "order " + r.order_id + " belongs to more than one user");
    }
    users.push_back(r.user_id);
    items.push_back(r.item_id);
    orders.push_back(r.order_id);
  }
  data.users = sorted_unique(std::move(users));
  data.items = sorted_unique(std::move(items));
  data.orders = sorted_unique(std::move(orders));
  data.records = std::move(records);
  return data;
}

Interactions parse_interactions(std::istream& in, const ColumnSpec& columns) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  // Strip a UTF-8 byte order mark.
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);

  const auto header = split_line(line, columns.delimiter);
  const std::size_t n_cols = header.size();
  const std::size_t user_col = column_index(header, columns.user);
  const std::size_t item_col = column_index(header, columns.item);
  const std::size_t order_col = column_index(header, columns.order);
  const std::size_t time_col = column_index(header, columns.timestamp);

  std::vector<InteractionRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_line(line, columns.delimiter);
    if (fields.size() != n_cols) {
      throw ParseError(line_no, "expected " + std::to_string(n_cols) + " columns, got " +
                                    std::to_string(fields.size()));
    }
    InteractionRecord rec;
    rec.user_id = std::string(fields[user_col]);
    rec.item_id = std::string(fields[item_col]);
    rec.order_id = std::string(fields[order_col]);
    if (rec.user_id.empty() || rec.item_id.empty() || rec.order_id.empty()) {
      throw ParseError(line_no, "empty id field");
    }
    const std::string_view ts = fields[time_col];
    auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), rec.timestamp);
    if (ec != std::errc() || ptr != ts.data() + ts.size() || rec.timestamp < 0) {
      throw ParseError(line_no, "bad timestamp '" + std::string(ts) + "'");
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw ParseError(line_no, "no data rows");
  try {
    return Interactions::from_records(std::move(records));
  } catch (const Error& e) {
    throw ParseError(line_no, e.what());
  }
}

void write_interactions(std::ostream& out, const Interactions& data,
                        const ColumnSpec& columns) {
  const char d = columns.delimiter;
  out << columns.user << d << columns.item << d << columns.order << d
      << columns.timestamp << '\n';
  for (const auto& r : data.records) {
    out << r.user_id << d << r.item_id << d << r.order_id << d << r.timestamp << '\n';
  }
}

Interactions filter_dataset(const Interactions& data, const FilterThresholds& thresholds) {
  std::map<std::string_view, std::set<std::string_view>> orders_of_user;
  std::map<std::string_view, std::set<std::string_view>> items_of_user;
  for (const auto& r : data.records) {
    orders_of_user[r.user_id].insert(r.order_id);
    items_of_user[r.user_id].insert(r.item_id);
  }
  std::set<std::string_view> kept_users;
  for (const auto& [user, orders] : orders_of_user) {
    if (orders.size() >= thresholds.min_orders_per_user &&
        items_of_user[user].size() >= thresholds.min_items_per_user) {
      kept_users.insert(user);
    }
  }

  std::map<std::string_view, std::set<std::string_view>> users_of_item;
  for (const auto& r : data.records) {
    if (kept_users.count(r.user_id)) users_of_item[r.item_id].insert(r.user_id);
  }

  std::vector<InteractionRecord> kept;
  for (const auto& r : data.records) {
    if (!kept_users.count(r.user_id)) continue;
    if (users_of_item[r.item_id].size() < thresholds.min_users_per_item) continue;
    kept.push_back(r);
  }
  if (kept.empty()) {
    throw Error(ErrorKind::over_filtering, "filter thresholds removed every interaction");
  }
  return Interactions::from_records(std::move(kept));
}

SplitDataset temporal_split(const Interactions& data, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(ErrorKind::invalid_argument, "split ratio must lie in (0, 1)");
  }
  std::map<std::string_view, std::int64_t> order_time;
  for (const auto& r : data.records) {
    auto [it, inserted] = order_time.emplace(r.order_id, r.timestamp);
    if (!inserted && it->second != r.timestamp) {
      throw Error(ErrorKind::invalid_argument,
                  "order " + r.order_id + " has more than one timestamp");
    }
  }
  const std::size_t n_orders = order_time.size();
  if (n_orders < 2) {
    throw Error(ErrorKind::insufficient_data, "temporal split needs at least 2 orders");
  }

  std::vector<std::pair<std::int64_t, std::string_view>> sequence;
  sequence.reserve(n_orders);
  for (const auto& [order, ts] : order_time) sequence.emplace_back(ts, order);
  std::sort(sequence.begin(), sequence.end());

  // The epsilon absorbs representation error in ratio * L (0.8 * 5 etc).
  auto n_train = static_cast<std::size_t>(
      std::ceil(ratio * static_cast<double>(n_orders) - 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, n_orders - 1);

  std::set<std::string_view> train_orders;
  for (std::size_t k = 0; k < n_train; ++k) train_orders.insert(sequence[k].second);

  std::vector<InteractionRecord> train, test;
  for (const auto& r : data.records) {
    (train_orders.count(r.order_id) ? train : test).push_back(r);
  }
  SplitDataset split;
  split.train = Interactions::from_records(std::move(train));
  split.test = Interactions::from_records(std::move(test));
  split.split_ratio = ratio;
  return split;
}

IdMaps::IdMaps(std::vector<std::string> users, std::vector<std::string> items)
    : users_(std::move(users)), items_(std::move(items)) {
  for (std::size_t k = 0; k < users_.size(); ++k) {
    if (!user_lookup_.emplace(users_[k], static_cast<std::uint32_t>(k)).second) {
      throw Error(ErrorKind::invalid_argument, "duplicate user id " + users_[k]);
    }
  }
  for (std::size_t k = 0; k < items_.size(); ++k) {
    if (!item_lookup_.emplace(items_[k], static_cast<std::uint32_t>(k)).second) {
      throw Error(ErrorKind::invalid_argument, "duplicate item id " + items_[k]);
    }
  }
}

std::optional<std::uint32_t> IdMaps::user_index(const std::string& id) const {
  auto it = user_lookup_.find(id);
  if (it == user_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint32_t> IdMaps::item_index(const std::string& id) const {
  auto it = item_lookup_.find(id);
  if (it == item_lookup_.end()) return std::nullopt;
  return it->second;
}

IdMaps reindex(const Interactions& data) {
  if (data.empty()) throw Error(ErrorKind::insufficient_data, "cannot reindex empty data");
  return IdMaps(data.users, data.items);
}

void write_id_map(std::ostream& out, std::span<const std::string> ids) {
  for (std::size_t k = 0; k < ids.size(); ++k) out << ids[k] << '\t' << k << '\n';
}

std::vector<std::string> read_id_map(std::istream& in) {
  std::vector<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(line_no, "expected id<TAB>index");
    std::size_t index = 0;
    const char* first = line.data() + tab + 1;
    const char* last = line.data() + line.size();
    auto [ptr, ec] = std::from_chars(first, last, index);
    if (ec != std::errc() || ptr != last || index != ids.size()) {
      throw ParseError(line_no, "indices must be dense and ascending");
    }
    ids.push_back(line.substr(0, tab));
  }
  return ids;
}

std::vector<Basket> to_baskets(const Interactions& data, const IdMaps& maps) {
  std::map<std::string_view, Basket> by_order;
  for (const auto& r : data.records) {
    const auto user = maps.user_index(r.user_id);
    const auto item = maps.item_index(r.item_id);
    if (!user || !item) {
      throw Error(ErrorKind::invalid_argument,
                  "record (" + r.user_id + ", " + r.item_id + ") not covered by id maps");
    }
    auto& basket = by_order[r.order_id];
    basket.user = *user;
    basket.timestamp = r.timestamp;
    basket.items.push_back(*item);
  }
  std::vector<Basket> baskets;
  baskets.reserve(by_order.size());
  for (auto& [order, basket] : by_order) {
    std::sort(basket.items.begin(), basket.items.end());
    basket.items.erase(std::unique(basket.items.begin(), basket.items.end()),
                       basket.items.end());
    baskets.push_back(std::move(basket));
  }
  return baskets;
}

}  // namespace vbcar
