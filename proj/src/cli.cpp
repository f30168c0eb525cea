#include "vbcar/cli.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vbcar/checkpoint.hpp"
#include "vbcar/corpus.hpp"
#include "vbcar/error.hpp"
#include "vbcar/evaluator.hpp"
#include "vbcar/recommender.hpp"
#include "vbcar/synthgen.hpp"
#include "vbcar/trainer.hpp"

namespace fs = std::filesystem;

namespace vbcar::cli {
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MissingInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const char* const kCommands[] = {"ingest", "synth", "train", "eval", "compare", "export"};

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

class Config {
 public:
  explicit Config(Settings values) : values_(std::move(values)) {}

  const std::string& str(const std::string& key) const { return values_.at(key); }

  std::uint64_t u64(const std::string& key) const {
    const std::string& v = str(key);
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw UsageError(key + ": expected a non-negative integer, got '" + v + "'");
    }
    return out;
  }

  std::size_t size(const std::string& key) const { return static_cast<std::size_t>(u64(key)); }

  double real(const std::string& key) const {
    const std::string& v = str(key);
    char* end = nullptr;
    const double out = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size()) {
      throw UsageError(key + ": expected a number, got '" + v + "'");
    }
    return out;
  }

  bool flag(const std::string& key) const {
    const std::string& v = str(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw UsageError(key + ": expected true or false, got '" + v + "'");
  }

  fs::path require_path(const std::string& key) const {
    const std::string& v = str(key);
    if (v.empty()) throw UsageError("--" + key + " is required");
    return v;
  }

  const Settings& values() const { return values_; }

 private:
  Settings values_;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void require_file(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw MissingInput("missing input " + path.string());
}

std::string digest_file(const fs::path& path) {
  const std::string bytes = read_file(path);
  const auto h = fnv1a64(std::span<const unsigned char>(
      reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << content)) throw Error(ErrorKind::io, "cannot write " + path.string());
}

template <typename Fn>
void write_stream(const fs::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  fn(out);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
}

/// One run per output directory.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".vbcar.lock") {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
    FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) throw Error(ErrorKind::io, "output directory is locked or unwritable: " + dir.string());
    std::fclose(f);
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
};

void write_manifest(const fs::path& out_dir, const std::string& command, const Config& cfg,
                    const std::vector<fs::path>& inputs) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["seed"] = cfg.str("seed");
  j["config"] = nlohmann::ordered_json::object();
  std::ostringstream conf;
  for (const auto& [key, value] : cfg.values()) {
    j["config"][key] = value;
    conf << key << '=' << value << '\n';
  }
  j["inputs"] = nlohmann::ordered_json::array();
  for (const auto& p : inputs) {
    j["inputs"].push_back({{"path", p.string()}, {"fnv1a64", digest_file(p)}});
  }
  write_file(out_dir / ("manifest-" + command + ".json"), j.dump(2) + "\n");
  write_file(out_dir / (command + ".conf"), conf.str());
}

ColumnSpec columns(const Config& cfg) {
  ColumnSpec c;
  c.user = cfg.str("col-user");
  c.item = cfg.str("col-item");
  c.order = cfg.str("col-order");
  c.timestamp = cfg.str("col-time");
  const std::string& d = cfg.str("delimiter");
  if (d == "\\t" || d == "tab") {
    c.delimiter = '\t';
  } else if (d.size() == 1) {
    c.delimiter = d[0];
  } else {
    throw UsageError("delimiter must be a single character");
  }
  return c;
}

TrainConfig train_config(const Config& cfg) {
  TrainConfig t;
  t.epochs = cfg.size("epochs");
  t.batch_size = cfg.size("batch-size");
  t.learning_rate = cfg.real("lr");
  t.rms_decay = cfg.real("rms-decay");
  t.rms_epsilon = cfg.real("rms-epsilon");
  t.seed = cfg.u64("seed");
  t.neg_ratio = cfg.size("neg-ratio");
  t.max_retries = cfg.size("max-retries");
  const std::string& kl = cfg.str("kl-scale");
  if (kl == "per-batch") {
    t.kl_scale_mode = KlScaleMode::per_batch;
  } else if (kl == "off") {
    t.kl_scale_mode = KlScaleMode::off;
  } else {
    throw UsageError("kl-scale must be per-batch or off");
  }
  try {
    t.mode = parse_mode(cfg.str("mode"));
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  t.dim = cfg.size("dim");
  t.hidden = cfg.size("hidden");
  t.alpha = cfg.real("alpha");
  t.fixed_corpus = cfg.flag("fixed-corpus");
  try {
    t.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return t;
}

struct Corpus {
  SplitDataset split;
  IdMaps maps;
  std::vector<fs::path> files;
};

/// Loads an ingest output directory.
Corpus load_corpus(const fs::path& dir, const Config& cfg) {
  Corpus c;
  c.files = {dir / "train.csv", dir / "test.csv", dir / "users.tsv", dir / "items.tsv"};
  for (const auto& f : c.files) require_file(f);
  const ColumnSpec cols = columns(cfg);
  std::ifstream train(c.files[0]), test(c.files[1]), users(c.files[2]), items(c.files[3]);
  c.split.train = parse_interactions(train, cols);
  c.split.test = parse_interactions(test, cols);
  c.maps = IdMaps(read_id_map(users), read_id_map(items));
  return c;
}

EncoderParams load_params(const fs::path& path) {
  require_file(path);
  std::ifstream in(path);
  return load_checkpoint(in);
}

fs::path checkpoint_path(const Config& cfg, const fs::path& out_dir) {
  const std::string& explicit_path = cfg.str("checkpoint");
  return explicit_path.empty() ? out_dir / "checkpoint.txt" : fs::path(explicit_path);
}

int cmd_synth(const Config& cfg, std::ostream& out) {
  const fs::path dir = cfg.require_path("out");
  SynthConfig s;
  s.n_users = cfg.size("n-users");
  s.n_items = cfg.size("n-items");
  s.n_clusters = cfg.size("n-clusters");
  s.orders_per_user = cfg.size("orders-per-user");
  s.items_per_order = cfg.size("items-per-order");
  s.in_cluster_prob = cfg.real("in-cluster-prob");
  s.pantry_size = cfg.size("pantry-size");
  s.seed = cfg.u64("seed");
  DirLock lock(dir);
  const Interactions data = generate(s);
  write_stream(dir / "corpus.csv", [&](std::ostream& o) { write_interactions(o, data, columns(cfg)); });
  write_manifest(dir, "synth", cfg, {});
  out << "synth: " << data.records.size() << " interactions, " << data.n_orders() << " orders -> "
      << (dir / "corpus.csv").string() << '\n';
  return kOk;
}

int cmd_ingest(const Config& cfg, std::ostream& out) {
  const fs::path input = cfg.require_path("data");
  const fs::path dir = cfg.require_path("out");
  require_file(input);
  const ColumnSpec cols = columns(cfg);
  std::ifstream in(input);
  const Interactions raw = parse_interactions(in, cols);
  const Interactions filtered = filter_dataset(
      raw, {cfg.size("min-orders"), cfg.size("min-items"), cfg.size("min-users")});
  const SplitDataset split = temporal_split(filtered, cfg.real("split-ratio"));
  const IdMaps maps = reindex(filtered);

  DirLock lock(dir);
  write_stream(dir / "train.csv", [&](std::ostream& o) { write_interactions(o, split.train, cols); });
  write_stream(dir / "test.csv", [&](std::ostream& o) { write_interactions(o, split.test, cols); });
  write_stream(dir / "users.tsv", [&](std::ostream& o) { write_id_map(o, maps.users()); });
  write_stream(dir / "items.tsv", [&](std::ostream& o) { write_id_map(o, maps.items()); });
  write_manifest(dir, "ingest", cfg, {input});
  out << "ingest: " << filtered.n_users() << " users, " << filtered.n_items() << " items, "
      << filtered.n_orders() << " orders (" << split.train.n_orders() << " train / "
      << split.test.n_orders() << " test)\n";
  return kOk;
}

int cmd_train(const Config& cfg, std::ostream& out) {
  const fs::path data_dir = cfg.require_path("data");
  const fs::path dir = cfg.require_path("out");
  const Corpus corpus = load_corpus(data_dir, cfg);
  const TrainConfig tc = train_config(cfg);
  const std::size_t every = cfg.size("checkpoint-every");

  DirLock lock(dir);
  auto on_epoch = [&](const EpochStats& s, const EncoderParams& params) {
    out << "epoch " << s.epoch << " elbo " << s.elbo << " recon " << s.recon << " kl " << s.kl
        << '\n';
    if (every > 0 && s.epoch % every == 0) {
      write_stream(dir / ("checkpoint-epoch" + std::to_string(s.epoch) + ".txt"),
                   [&](std::ostream& o) { save_checkpoint(o, params); });
    }
  };
  const TrainResult result = train(corpus.split, corpus.maps, tc, cfg.size("triples-per-epoch"), on_epoch);
  write_stream(dir / "checkpoint.txt", [&](std::ostream& o) { save_checkpoint(o, result.params); });
  write_file(dir / "train_report.json", result.report.to_json());
  write_file(dir / "train_report.csv", result.report.to_csv());
  write_file(dir / "train_timing.csv", result.report.timing_csv());
  write_manifest(dir, "train", cfg, corpus.files);
  return kOk;
}

int cmd_eval(const Config& cfg, std::ostream& out) {
  const fs::path data_dir = cfg.require_path("data");
  const fs::path dir = cfg.require_path("out");
  const fs::path ckpt = checkpoint_path(cfg, dir);
  require_file(ckpt);
  const Corpus corpus = load_corpus(data_dir, cfg);
  const EncoderParams params = load_params(ckpt);
  const std::string& scoring = cfg.str("scoring");
  if (scoring != "mean" && scoring != "sampled") throw UsageError("scoring must be mean or sampled");
  Rng rng(derive_seed(cfg.u64("seed"), 0x5C0FE));
  const PointEmbeddings emb =
      point_embeddings(params, scoring == "mean" ? ScoringMode::mean : ScoringMode::sampled, &rng);
  const std::size_t k = cfg.size("k");
  const auto truth = ground_truth(corpus.split.test, corpus.maps);
  const MetricsReport report = evaluate(emb.users, emb.items, truth, k);

  DirLock lock(dir);
  write_file(dir / "metrics.json", report.to_json(true));
  write_stream(dir / "recommendations.tsv", [&](std::ostream& o) {
    std::vector<RankedResult> results;
    for (const auto& m : report.per_user) results.push_back(recommend(m.user, emb.users, emb.items, k));
    write_recommendations(o, results);
  });
  std::vector<fs::path> inputs = corpus.files;
  inputs.push_back(ckpt);
  write_manifest(dir, "eval", cfg, inputs);
  out << "eval: users " << report.users() << " recall@" << k << ' ' << report.recall_mean
      << " ndcg@" << k << ' ' << report.ndcg_mean << '\n';
  return kOk;
}

int cmd_compare(const Config& cfg, std::ostream& out) {
  const fs::path a_path = cfg.require_path("a");
  const fs::path b_path = cfg.require_path("b");
  const fs::path dir = cfg.require_path("out");
  const MetricsReport a = MetricsReport::from_json(read_file(a_path));
  const MetricsReport b = MetricsReport::from_json(read_file(b_path));
  const Comparison cmp = compare_reports(a, b);
  DirLock lock(dir);
  write_file(dir / "compare.json", cmp.to_json());
  write_manifest(dir, "compare", cfg, {a_path, b_path});
  out << "compare: recall t=" << cmp.recall.t << " p=" << cmp.recall.p << "; ndcg t=" << cmp.ndcg.t
      << " p=" << cmp.ndcg.p << '\n';
  return kOk;
}

int cmd_export(const Config& cfg, std::ostream& out) {
  const fs::path data_dir = cfg.require_path("data");
  const fs::path dir = cfg.require_path("out");
  const fs::path ckpt = checkpoint_path(cfg, dir);
  require_file(ckpt);
  const Corpus corpus = load_corpus(data_dir, cfg);
  const EncoderParams params = load_params(ckpt);
  DirLock lock(dir);
  write_stream(dir / "embeddings.tsv",
               [&](std::ostream& o) { write_embeddings(o, params, corpus.maps); });
  std::vector<fs::path> inputs = corpus.files;
  inputs.push_back(ckpt);
  write_manifest(dir, "export", cfg, inputs);
  out << "export: " << (dir / "embeddings.tsv").string() << '\n';
  return kOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::numerical:
      return kTrainingAbort;
    case ErrorKind::degenerate:
      return kDegenerate;
    case ErrorKind::io:
      return kIoError;
    case ErrorKind::invalid_argument:
    case ErrorKind::parse:
    case ErrorKind::over_filtering:
    case ErrorKind::insufficient_data:
    case ErrorKind::sampling:
      return kDataError;
  }
  return kInternal;
}

}  // namespace

Settings default_settings() {
  return {
      // paths
      {"data", ""},
      {"out", ""},
      {"checkpoint", ""},
      {"a", ""},
      {"b", ""},
      // training
      {"seed", "0"},
      {"mode", "variational"},
      {"epochs", "30"},
      {"batch-size", "512"},
      {"lr", "0.001"},
      {"rms-decay", "0.9"},
      {"rms-epsilon", "1e-8"},
      {"neg-ratio", "5"},
      {"max-retries", "100"},
      {"triples-per-epoch", "1000000"},
      {"fixed-corpus", "false"},
      {"kl-scale", "per-batch"},
      {"dim", "64"},
      {"hidden", "0"},
      {"alpha", "1"},
      {"checkpoint-every", "0"},
      // evaluation
      {"k", "10"},
      {"scoring", "mean"},
      // ingestion
      {"min-orders", "7"},
      {"min-items", "30"},
      {"min-users", "16"},
      {"split-ratio", "0.8"},
      {"col-user", "user_id"},
      {"col-item", "item_id"},
      {"col-order", "order_id"},
      {"col-time", "timestamp"},
      {"delimiter", ","},
      // synthetic corpus
      {"n-users", "200"},
      {"n-items", "200"},
      {"n-clusters", "4"},
      {"orders-per-user", "10"},
      {"items-per-order", "5"},
      {"in-cluster-prob", "0.9"},
      {"pantry-size", "0"},
  };
}

Settings parse_config(std::istream& in) {
  const Settings known = default_settings();
  Settings out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string key = trim(line.substr(0, eq));
    if (!known.count(key)) {
      throw UsageError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Settings defaults = default_settings();
  CLI::App app{"Variational Bayesian basket-aware recommendation"};
  app.set_version_flag("--version", "vbcar 1.0");
  std::string command;
  std::string config_path;
  app.add_option("command", command, "ingest | synth | train | eval | compare | export")
      ->required()
      ->check(CLI::IsMember(std::vector<std::string>(std::begin(kCommands), std::end(kCommands))));
  app.add_option("--config", config_path, "key=value configuration file");
  std::map<std::string, std::string> flag_values;
  std::map<std::string, CLI::Option*> flag_options;
  for (const auto& [key, value] : defaults) {
    flag_options[key] = app.add_option("--" + key, flag_values[key])->default_str(value);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  try {
    Settings merged = defaults;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw MissingInput("cannot open config " + config_path);
      for (auto& [key, value] : parse_config(in)) merged[key] = value;
    }
    for (const auto& [key, opt] : flag_options) {
      if (opt->count() > 0) merged[key] = flag_values[key];
    }
    const Config cfg(std::move(merged));

    if (command == "synth") return cmd_synth(cfg, out);
    if (command == "ingest") return cmd_ingest(cfg, out);
    if (command == "train") return cmd_train(cfg, out);
    if (command == "eval") return cmd_eval(cfg, out);
    if (command == "compare") return cmd_compare(cfg, out);
    return cmd_export(cfg, out);
  } catch (const UsageError& e) {
    err << "vbcar: " << e.what() << '\n';
    return kUsage;
  } catch (const MissingInput& e) {
    err << "vbcar: " << e.what() << '\n';
    return kMissingInput;
  } catch (const Error& e) {
    err << "vbcar: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "vbcar: internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace vbcar::cli
