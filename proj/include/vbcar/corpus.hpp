#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace vbcar {

/// One (user, item, order) purchase event with its basket time.
struct InteractionRecord {
  std::string user_id;
  std::string item_id;
  std::string order_id;
  std::int64_t timestamp = 0;

  bool operator==(const InteractionRecord&) const = default;
};

/// A purchase history together with its user, item and order universes.
/// Universes are sorted lexicographically and hold each id once.
struct Interactions {
  std::vector<InteractionRecord> records;
  std::vector<std::string> users;
  std::vector<std::string> items;
  std::vector<std::string> orders;

  /// Builds the universes from `records`. Throws if an order id is shared by
  /// two users or any record violates the field invariants.
  static Interactions from_records(std::vector<InteractionRecord> records);

  std::size_t n_users() const { return users.size(); }
  std::size_t n_items() const { return items.size(); }
  std::size_t n_orders() const { return orders.size(); }
  bool empty() const { return records.empty(); }

  bool operator==(const Interactions&) const = default;
};

/// Column names of the delimited text format.
struct ColumnSpec {
  std::string user = "user_id";
  std::string item = "item_id";
  std::string order = "order_id";
  std::string timestamp = "timestamp";
  char delimiter = ',';
};

Interactions parse_interactions(std::istream& in, const ColumnSpec& columns = {});

/// Writes a header plus one row per record, in record order.
void write_interactions(std::ostream& out, const Interactions& data,
                        const ColumnSpec& columns = {});

struct FilterThresholds {
  std::size_t min_orders_per_user = 7;
  std::size_t min_items_per_user = 30;
  std::size_t min_users_per_item = 16;
};

/// Drops inactive users, then rarely bought items, in a single pass. The
/// result is not necessarily a fixpoint of the thresholds.
Interactions filter_dataset(const Interactions& data, const FilterThresholds& thresholds);

struct SplitDataset {
  Interactions train;
  Interactions test;
  double split_ratio = 0.8;
};

/// Orders are sorted by (timestamp, order_id); the earliest ceil(ratio * L)
/// go to train. Both sides always keep at least one order.
SplitDataset temporal_split(const Interactions& data, double ratio);

/// Dense, lexicographically ordered indices for users and items.
class IdMaps {
 public:
  IdMaps() = default;
  IdMaps(std::vector<std::string> users, std::vector<std::string> items);

  std::size_t n_users() const { return users_.size(); }
  std::size_t n_items() const { return items_.size(); }

  std::optional<std::uint32_t> user_index(const std::string& id) const;
  std::optional<std::uint32_t> item_index(const std::string& id) const;
  const std::string& user_id(std::uint32_t index) const { return users_.at(index); }
  const std::string& item_id(std::uint32_t index) const { return items_.at(index); }

  const std::vector<std::string>& users() const { return users_; }
  const std::vector<std::string>& items() const { return items_; }

 private:
  std::vector<std::string> users_;
  std::vector<std::string> items_;
  std::unordered_map<std::string, std::uint32_t> user_lookup_;
  std::unordered_map<std::string, std::uint32_t> item_lookup_;
};

IdMaps reindex(const Interactions& data);

/// "external_id<TAB>index" lines.
void write_id_map(std::ostream& out, std::span<const std::string> ids);
std::vector<std::string> read_id_map(std::istream& in);

/// A single order in dense ids: distinct items, ascending.
struct Basket {
  std::uint32_t user = 0;
  std::int64_t timestamp = 0;
  std::vector<std::uint32_t> items;
};

/// One basket per order, in order-id order. Throws if an id is missing from
/// `maps`.
std::vector<Basket> to_baskets(const Interactions& data, const IdMaps& maps);

}  // namespace vbcar
