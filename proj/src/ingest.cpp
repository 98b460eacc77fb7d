#include "granq/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "granq/csv.hpp"
#include "granq/digest.hpp"
#include "granq/error.hpp"

namespace granq {

namespace fs = std::filesystem;

nlohmann::ordered_json to_json(const IngestReport& r) {
  nlohmann::ordered_json j;
  j["tx_nodes"] = r.tx;
  j["addr_nodes"] = r.addr;
  j["input_edges"] = r.input_edges;
  j["output_edges"] = r.output_edges;
  j["txtx_edges"] = r.txtx_edges;
  j["timestep_range"] = {r.min_timestep, r.max_timestep};
  j["tx_labels"] = {{"illicit", r.tx_labels[0]}, {"licit", r.tx_labels[1]}, {"unknown", r.tx_labels[2]}};
  j["addr_labels"] = {{"illicit", r.addr_labels[0]}, {"licit", r.addr_labels[1]}, {"unknown", r.addr_labels[2]}};
  j["dedup_addresses"] = {{"train", r.train_addresses},
                          {"validation", r.validation_addresses},
                          {"test", r.test_addresses}};
  auto imp = nlohmann::ordered_json::array();
  for (const auto& s : r.imputation) {
    imp.push_back({{"column", s.column}, {"median", s.median}, {"train_values", s.train_values},
                   {"imputed", s.imputed}});
  }
  j["imputation"] = imp;
  auto files = nlohmann::ordered_json::array();
  for (const auto& f : r.files) {
    files.push_back({{"role", f.role}, {"path", f.path}, {"sha256", f.sha256}, {"rows", f.rows}});
  }
  j["files"] = files;
  return j;
}

namespace {

struct Table {
  std::vector<std::string> header;  // empty when the file has none
  std::size_t rows = 0;
};

void need_columns(const csv::Reader& r, const std::vector<std::string_view>& f, std::size_t n) {
  if (f.size() != n) {
    throw ValidationError(r.where("expected " + std::to_string(n) + " columns, found " + std::to_string(f.size())));
  }
}

FileRecord record(std::string role, const fs::path& p, std::size_t rows) {
  return {std::move(role), p.string(), sha256_file(p), rows};
}

std::vector<bool> kept_columns(const std::vector<std::string>& header, std::size_t width,
                               const std::vector<std::string>& drop, const std::string& file) {
  std::vector<bool> keep(width, true);
  for (const auto& name : drop) {
    auto it = std::ranges::find(header, name);
    if (it == header.end()) throw ValidationError(file + ": cannot drop unknown column '" + name + "'");
    keep[static_cast<std::size_t>(it - header.begin())] = false;
  }
  return keep;
}

real median_of(std::vector<real> v) {
  std::ranges::sort(v);
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Label parse_class(const csv::Reader& r, std::string_view s) {
  auto c = csv::parse_int(s);
  if (!c || *c < 1 || *c > 3) throw ValidationError(r.where("label class '" + std::string(s) + "' outside {1,2,3}"));
  return static_cast<Label>(*c);
}

// Reads id,class rows into `labels` through `find`. Returns rows read.
template <typename Find>
std::size_t read_labels(const fs::path& path, LabelTable& labels, std::array<std::size_t, 3>& counts, Find&& find) {
  csv::Reader r(path);
  std::vector<std::string_view> f;
  std::vector<bool> seen(labels.size(), false);
  std::size_t rows = 0;
  bool first = true;
  while (r.next(f)) {
    need_columns(r, f, 2);
    if (first) {
      first = false;
      if (!csv::parse_int(f[1])) continue;  // header
    }
    const Label l = parse_class(r, f[1]);
    auto h = find(f[0]);
    if (!h) throw ValidationError(r.where("dangling endpoint: label for unknown id '" + std::string(f[0]) + "'"));
    const std::size_t i = h->index();
    if (seen[i] && labels[i] != l) throw ValidationError(r.where("conflicting labels for '" + std::string(f[0]) + "'"));
    if (!seen[i]) {
      seen[i] = true;
      labels.set(i, l);
      counts[static_cast<std::size_t>(l) - 1]++;
    }
    ++rows;
  }
  return rows;
}

}  // namespace

Dataset load_dataset(const DataPaths& paths, const SplitSpec& split) {
  split.validate();
  LedgerGraph::Builder b;
  IngestReport rep;
  std::vector<std::string_view> f;

  // Transactions.
  std::vector<std::vector<real>> feats;
  std::vector<std::string> feat_names;
  std::vector<Timestep> tx_steps;
  {
    csv::Reader r(paths.transactions);
    std::vector<std::string> header;
    std::vector<bool> keep;
    std::size_t width = 0, rows = 0;
    bool first = true;
    while (r.next(f)) {
      if (first) {
        first = false;
        width = f.size();
        if (width < 2) throw ValidationError(r.where("transactions need at least txId and timestep"));
        if (!csv::parse_int(f[1])) {
          header.assign(f.begin(), f.end());
          keep = kept_columns(header, width, paths.tx_drop_columns, r.file());
          for (std::size_t c = 2; c < width; ++c) {
            if (keep[c]) feat_names.push_back(header[c]);
          }
          continue;
        }
        if (!paths.tx_drop_columns.empty()) throw ValidationError(r.file() + ": dropping columns needs a header row");
        keep.assign(width, true);
        for (std::size_t c = 2; c < width; ++c) feat_names.push_back("f" + std::to_string(c - 1));
      }
      need_columns(r, f, width);
      auto t = csv::parse_int(f[1]);
      if (!t) throw ValidationError(r.where("non-numeric timestep '" + std::string(f[1]) + "'"));
      if (*t < 1) throw ValidationError(r.where("timestep must be >= 1"));
      if (b.find_tx(f[0])) throw ValidationError(r.where("duplicate transaction id '" + std::string(f[0]) + "'"));
      b.add_tx(std::string(f[0]), static_cast<Timestep>(*t));
      tx_steps.push_back(static_cast<Timestep>(*t));
      std::vector<real> row;
      row.reserve(feat_names.size());
      for (std::size_t c = 2; c < width; ++c) {
        if (!keep[c]) continue;
        auto v = csv::parse_double_or_nan(f[c]);
        if (!v) throw ValidationError(r.where("non-numeric feature '" + std::string(f[c]) + "'"));
        row.push_back(*v);
      }
      feats.push_back(std::move(row));
      ++rows;
    }
    rep.files.push_back(record("transactions", paths.transactions, rows));
  }

  // Train-split median imputation.
  if (!feat_names.empty()) {
    const std::size_t n = feats.size(), w = feat_names.size();
    MatrixXr m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(w));
    for (std::size_t c = 0; c < w; ++c) {
      std::vector<real> train;
      std::size_t missing = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const real v = feats[i][c];
        if (std::isnan(v)) ++missing;
        else if (split.train.contains(tx_steps[i])) train.push_back(v);
      }
      real med = 0;
      if (missing > 0) {
        ImputationStat s{feat_names[c], 0, train.size(), missing};
        if (!train.empty()) med = s.median = median_of(train);
        rep.imputation.push_back(s);
      }
      for (std::size_t i = 0; i < n; ++i) {
        const real v = feats[i][c];
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = std::isnan(v) ? med : v;
      }
    }
    b.set_tx_features(std::move(m), feat_names);
  }

  // Address features (optional); defines the first address handles.
  std::vector<std::vector<real>> addr_rows;
  std::vector<std::string> addr_names;
  if (paths.addr_features) {
    csv::Reader r(*paths.addr_features);
    std::vector<std::string> header;
    std::vector<bool> keep;
    std::size_t width = 0, rows = 0;
    bool first = true;
    while (r.next(f)) {
      if (first) {
        first = false;
        width = f.size();
        bool numeric = true;
        for (std::size_t c = 1; c < width; ++c) numeric = numeric && csv::parse_double_or_nan(f[c]).has_value();
        if (!numeric || width == 1) {
          header.assign(f.begin(), f.end());
          keep = kept_columns(header, width, paths.addr_drop_columns, r.file());
          for (std::size_t c = 1; c < width; ++c) {
            if (keep[c]) addr_names.push_back(header[c]);
          }
          continue;
        }
        if (!paths.addr_drop_columns.empty()) throw ValidationError(r.file() + ": dropping columns needs a header row");
        keep.assign(width, true);
        for (std::size_t c = 1; c < width; ++c) addr_names.push_back("g" + std::to_string(c));
      }
      need_columns(r, f, width);
      std::vector<real> row;
      for (std::size_t c = 1; c < width; ++c) {
        if (!keep[c]) continue;
        auto v = csv::parse_double_or_nan(f[c]);
        if (!v) throw ValidationError(r.where("non-numeric feature '" + std::string(f[c]) + "'"));
        row.push_back(*v);
      }
      ++rows;
      if (auto h = b.find_addr(f[0])) {
        auto& old = addr_rows[h->index()];
        const bool same = std::ranges::equal(old, row, [](real x, real y) {
          return x == y || (std::isnan(x) && std::isnan(y));
        });
        if (paths.addr_duplicates == "last") old = std::move(row);
        else if (paths.addr_duplicates == "error" && !same) {
          throw ValidationError(r.where("address '" + std::string(f[0]) + "' repeated with different features"));
        }
        continue;
      }
      b.add_addr(std::string(f[0]));
      addr_rows.push_back(std::move(row));
    }
    rep.files.push_back(record("addr_features", *paths.addr_features, rows));
  }

  auto read_edges = [&](const fs::path& path, const char* role, int tx_col, auto&& add) {
    csv::Reader r(path);
    std::size_t rows = 0;
    bool first = true;
    while (r.next(f)) {
      need_columns(r, f, 2);
      auto tx = b.find_tx(f[static_cast<std::size_t>(tx_col)]);
      if (!tx) {
        if (first) {
          first = false;
          continue;  // header
        }
        throw ValidationError(r.where("dangling endpoint: unknown transaction '" +
                                      std::string(f[static_cast<std::size_t>(tx_col)]) + "'"));
      }
      first = false;
      add(*tx, f[static_cast<std::size_t>(1 - tx_col)], r);
      ++rows;
    }
    rep.files.push_back(record(role, path, rows));
    return rows;
  };

  // Addresses are the union of the feature file and the edge endpoints.
  rep.input_edges = read_edges(paths.input_edges, "input_edges", 1, [&](TxHandle tx, std::string_view a, auto&) {
    b.add_input_edge(b.intern_addr(a), tx);
  });
  rep.output_edges = read_edges(paths.output_edges, "output_edges", 0, [&](TxHandle tx, std::string_view a, auto&) {
    b.add_output_edge(tx, b.intern_addr(a));
  });
  if (paths.txtx_edges) {
    rep.txtx_edges = read_edges(*paths.txtx_edges, "txtx_edges", 0, [&](TxHandle tx, std::string_view other, auto& r) {
      auto o = b.find_tx(other);
      if (!o) throw ValidationError(r.where("dangling endpoint: unknown transaction '" + std::string(other) + "'"));
      b.add_txtx_edge(tx, *o);
    });
  }

  if (paths.addr_features) {
    const std::size_t n = b.addr_count(), w = addr_names.size();
    MatrixXr m = MatrixXr::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(w));
    for (std::size_t i = 0; i < addr_rows.size(); ++i) {
      for (std::size_t c = 0; c < w; ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = addr_rows[i][c];
    }
    b.set_addr_features(std::move(m), addr_names);
  }

  Dataset d;
  const std::size_t n_tx = b.tx_count(), n_addr = b.addr_count();
  d.tx_labels = LabelTable(n_tx);
  d.addr_labels = LabelTable(n_addr);
  if (paths.tx_labels) {
    auto rows = read_labels(*paths.tx_labels, d.tx_labels, rep.tx_labels, [&](std::string_view id) {
      auto h = b.find_tx(id);
      return h ? std::optional<TxHandle>(*h) : std::nullopt;
    });
    rep.files.push_back(record("tx_labels", *paths.tx_labels, rows));
  }
  if (paths.addr_labels) {
    auto rows = read_labels(*paths.addr_labels, d.addr_labels, rep.addr_labels, [&](std::string_view id) {
      auto h = b.find_addr(id);
      return h ? std::optional<AddrHandle>(*h) : std::nullopt;
    });
    rep.files.push_back(record("addr_labels", *paths.addr_labels, rows));
  }

  d.graph = std::move(b).build();
  rep.tx = d.graph.tx_count();
  rep.addr = d.graph.addr_count();
  rep.min_timestep = d.graph.min_timestep();
  rep.max_timestep = d.graph.max_timestep();
  rep.train_addresses = split_addresses(d.graph, split.train).size();
  rep.validation_addresses = split_addresses(d.graph, split.validation).size();
  rep.test_addresses = split_addresses(d.graph, split.test).size();
  d.report = std::move(rep);
  return d;
}

ScoreTable load_scores(const fs::path& path, const LedgerGraph& graph, Level level, Stage stage,
                       const std::string& regime, ScoreLoadInfo* info) {
  const std::size_t n = level == Level::transaction ? graph.tx_count() : graph.addr_count();
  auto table = ScoreTable::empty(level, stage, regime, n);
  csv::Reader r(path);
  std::vector<std::string_view> f;
  std::vector<std::string> unknown;
  std::size_t unknown_count = 0, rows = 0;
  bool first = true;
  while (r.next(f)) {
    need_columns(r, f, 2);
    auto v = csv::parse_double(f[1]);
    if (first) {
      first = false;
      if (!v) continue;  // header
    }
    if (!v) throw ValidationError(r.where("non-numeric score '" + std::string(f[1]) + "'"));
    if (!(*v >= 0 && *v <= 1)) throw ValidationError(r.where("score " + std::string(f[1]) + " outside [0,1]"));
    std::optional<std::size_t> idx;
    if (level == Level::transaction) {
      if (auto h = graph.find_tx(f[0])) idx = h->index();
    } else if (auto h = graph.find_addr(f[0])) {
      idx = h->index();
    }
    ++rows;
    if (!idx) {
      if (unknown.size() < 20) unknown.emplace_back(f[0]);
      ++unknown_count;
      continue;
    }
    if (table.has(*idx)) throw ValidationError(r.where("duplicate id '" + std::string(f[0]) + "'"));
    table.set(*idx, *v);
  }
  if (unknown_count > 0) {
    std::string msg = path.string() + ": " + std::to_string(unknown_count) + " id(s) absent from the graph:";
    for (const auto& u : unknown) msg += " " + u;
    if (unknown_count > unknown.size()) msg += " ...";
    throw ValidationError(msg);
  }
  if (info) {
    info->path = path.string();
    info->sha256 = sha256_file(path);
    info->rows = rows;
    info->coverage = n ? static_cast<real>(table.covered()) / static_cast<real>(n) : 0;
  }
  return table;
}

void write_scores(const fs::path& path, const LedgerGraph& graph, const ScoreTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "id,score\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (!table.has(i)) continue;
    out << (table.level == Level::transaction ? graph.tx_id(TxHandle(i)) : graph.addr_id(AddrHandle(i))) << ','
        << csv::format_double(table[i]) << '\n';
  }
}

void write_dataset_csv(const Dataset& d, const fs::path& dir) {
  fs::create_directories(dir);
  const auto& g = d.graph;
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("transactions.csv");
    out << "txId,timestep";
    for (const auto& n : g.tx_feature_names()) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < g.tx_count(); ++i) {
      out << g.tx_id(TxHandle(i)) << ',' << g.timestep(TxHandle(i));
      if (g.has_tx_features()) {
        for (Eigen::Index c = 0; c < g.tx_features().cols(); ++c) {
          out << ',' << csv::format_double(g.tx_features()(static_cast<Eigen::Index>(i), c));
        }
      }
      out << '\n';
    }
  }
  {
    // Written even without features so address handles survive the round trip.
    auto out = open("addr_features.csv");
    out << "addrId";
    for (const auto& n : g.addr_feature_names()) out << ',' << n;
    out << '\n';
    for (std::size_t i = 0; i < g.addr_count(); ++i) {
      out << g.addr_id(AddrHandle(i));
      if (g.has_addr_features()) {
        for (Eigen::Index c = 0; c < g.addr_features().cols(); ++c) {
          out << ',' << csv::format_double(g.addr_features()(static_cast<Eigen::Index>(i), c));
        }
      }
      out << '\n';
    }
  }
  {
    auto out = open("input_edges.csv");
    out << "addrId,txId\n";
    for (auto [a, t] : g.input_edges()) out << g.addr_id(a) << ',' << g.tx_id(t) << '\n';
  }
  {
    auto out = open("output_edges.csv");
    out << "txId,addrId\n";
    for (auto [t, a] : g.output_edges()) out << g.tx_id(t) << ',' << g.addr_id(a) << '\n';
  }
  {
    auto out = open("txtx_edges.csv");
    out << "txId1,txId2\n";
    for (auto [x, y] : g.txtx_edges()) out << g.tx_id(x) << ',' << g.tx_id(y) << '\n';
  }
  {
    auto out = open("tx_labels.csv");
    out << "txId,class\n";
    for (std::size_t i = 0; i < g.tx_count(); ++i) {
      out << g.tx_id(TxHandle(i)) << ',' << static_cast<int>(d.tx_labels[i]) << '\n';
    }
  }
  {
    auto out = open("addr_labels.csv");
    out << "addrId,class\n";
    for (std::size_t i = 0; i < g.addr_count(); ++i) {
      out << g.addr_id(AddrHandle(i)) << ',' << static_cast<int>(d.addr_labels[i]) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Binary cache: little-endian host layout, versioned by a magic string.

namespace {

constexpr char kMagic[8] = {'G', 'R', 'N', 'Q', 'C', 'A', '0', '1'};

class Out {
 public:
  explicit Out(const fs::path& p) : f_(p, std::ios::binary) {
    if (!f_) throw Error("cannot write cache " + p.string());
    f_.write(kMagic, sizeof kMagic);
  }
  template <typename T>
  void pod(const T& v) {
    f_.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    f_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void strs(const std::vector<std::string>& v) {
    pod<std::uint64_t>(v.size());
    for (const auto& s : v) str(s);
  }
  void matrix(const MatrixXr* m) {
    pod<std::uint8_t>(m != nullptr);
    if (!m) return;
    pod<std::int64_t>(m->rows());
    pod<std::int64_t>(m->cols());
    f_.write(reinterpret_cast<const char*>(m->data()), static_cast<std::streamsize>(m->size() * sizeof(real)));
  }

 private:
  std::ofstream f_;
};

class In {
 public:
  explicit In(const fs::path& p) : f_(p, std::ios::binary), name_(p.string()) {
    if (!f_) throw ValidationError("cannot open cache " + name_);
    char magic[8];
    f_.read(magic, sizeof magic);
    if (!f_ || std::memcmp(magic, kMagic, sizeof magic) != 0) throw ValidationError(name_ + ": not a granq cache");
  }
  template <typename T>
  T pod() {
    T v{};
    f_.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!f_) throw ValidationError(name_ + ": truncated cache");
    return v;
  }
  std::string str() {
    auto n = pod<std::uint64_t>();
    std::string s(n, '\0');
    f_.read(s.data(), static_cast<std::streamsize>(n));
    if (!f_) throw ValidationError(name_ + ": truncated cache");
    return s;
  }
  std::vector<std::string> strs() {
    std::vector<std::string> v(pod<std::uint64_t>());
    for (auto& s : v) s = str();
    return v;
  }
  std::optional<MatrixXr> matrix() {
    if (!pod<std::uint8_t>()) return std::nullopt;
    const auto r = pod<std::int64_t>(), c = pod<std::int64_t>();
    MatrixXr m(r, c);
    f_.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(real)));
    if (!f_) throw ValidationError(name_ + ": truncated cache");
    return m;
  }

 private:
  std::ifstream f_;
  std::string name_;
};

}  // namespace

void save_cache(const Dataset& d, const fs::path& path) {
  const auto& g = d.graph;
  Out o(path);
  std::vector<std::string> tx_ids, addr_ids;
  for (std::size_t i = 0; i < g.tx_count(); ++i) tx_ids.push_back(g.tx_id(TxHandle(i)));
  for (std::size_t i = 0; i < g.addr_count(); ++i) addr_ids.push_back(g.addr_id(AddrHandle(i)));
  o.strs(tx_ids);
  for (std::size_t i = 0; i < g.tx_count(); ++i) o.pod<std::int32_t>(g.timestep(TxHandle(i)));
  o.strs(addr_ids);
  o.pod<std::uint64_t>(g.input_edges().size());
  for (auto [a, t] : g.input_edges()) {
    o.pod(a.value);
    o.pod(t.value);
  }
  o.pod<std::uint64_t>(g.output_edges().size());
  for (auto [t, a] : g.output_edges()) {
    o.pod(t.value);
    o.pod(a.value);
  }
  o.pod<std::uint64_t>(g.txtx_edges().size());
  for (auto [x, y] : g.txtx_edges()) {
    o.pod(x.value);
    o.pod(y.value);
  }
  o.matrix(g.has_tx_features() ? &g.tx_features() : nullptr);
  o.strs(g.tx_feature_names());
  o.matrix(g.has_addr_features() ? &g.addr_features() : nullptr);
  o.strs(g.addr_feature_names());
  for (std::size_t i = 0; i < g.tx_count(); ++i) o.pod(static_cast<std::uint8_t>(d.tx_labels[i]));
  for (std::size_t i = 0; i < g.addr_count(); ++i) o.pod(static_cast<std::uint8_t>(d.addr_labels[i]));
  o.str(to_json(d.report).dump());
}

Dataset load_cache(const fs::path& path) {
  In in(path);
  LedgerGraph::Builder b;
  auto tx_ids = in.strs();
  std::vector<Timestep> steps(tx_ids.size());
  for (auto& t : steps) t = in.pod<std::int32_t>();
  for (std::size_t i = 0; i < tx_ids.size(); ++i) b.add_tx(std::move(tx_ids[i]), steps[i]);
  for (auto& a : in.strs()) b.add_addr(std::move(a));
  for (auto n = in.pod<std::uint64_t>(); n > 0; --n) {
    const auto a = in.pod<std::uint32_t>(), t = in.pod<std::uint32_t>();
    b.add_input_edge(AddrHandle(a), TxHandle(t));
  }
  for (auto n = in.pod<std::uint64_t>(); n > 0; --n) {
    const auto t = in.pod<std::uint32_t>(), a = in.pod<std::uint32_t>();
    b.add_output_edge(TxHandle(t), AddrHandle(a));
  }
  for (auto n = in.pod<std::uint64_t>(); n > 0; --n) {
    const auto x = in.pod<std::uint32_t>(), y = in.pod<std::uint32_t>();
    b.add_txtx_edge(TxHandle(x), TxHandle(y));
  }
  if (auto m = in.matrix()) b.set_tx_features(std::move(*m), in.strs());
  else in.strs();
  if (auto m = in.matrix()) b.set_addr_features(std::move(*m), in.strs());
  else in.strs();

  Dataset d;
  d.tx_labels = LabelTable(b.tx_count());
  d.addr_labels = LabelTable(b.addr_count());
  for (std::size_t i = 0; i < b.tx_count(); ++i) d.tx_labels.set(i, static_cast<Label>(in.pod<std::uint8_t>()));
  for (std::size_t i = 0; i < b.addr_count(); ++i) d.addr_labels.set(i, static_cast<Label>(in.pod<std::uint8_t>()));
  const auto rep = nlohmann::json::parse(in.str());
  d.graph = std::move(b).build();

  IngestReport& r = d.report;
  r.tx = rep.at("tx_nodes");
  r.addr = rep.at("addr_nodes");
  r.input_edges = rep.at("input_edges");
  r.output_edges = rep.at("output_edges");
  r.txtx_edges = rep.at("txtx_edges");
  r.min_timestep = rep.at("timestep_range")[0];
  r.max_timestep = rep.at("timestep_range")[1];
  const char* cls[] = {"illicit", "licit", "unknown"};
  for (int k = 0; k < 3; ++k) {
    r.tx_labels[static_cast<std::size_t>(k)] = rep.at("tx_labels").at(cls[k]);
    r.addr_labels[static_cast<std::size_t>(k)] = rep.at("addr_labels").at(cls[k]);
  }
  r.train_addresses = rep.at("dedup_addresses").at("train");
  r.validation_addresses = rep.at("dedup_addresses").at("validation");
  r.test_addresses = rep.at("dedup_addresses").at("test");
  for (const auto& s : rep.at("imputation")) {
    r.imputation.push_back({s.at("column"), s.at("median"), s.at("train_values"), s.at("imputed")});
  }
  for (const auto& f : rep.at("files")) r.files.push_back({f.at("role"), f.at("path"), f.at("sha256"), f.at("rows")});
  return d;
}

}  // namespace granq
