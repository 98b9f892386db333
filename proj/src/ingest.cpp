#include "gem/ingest.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>

#include "gem/error.hpp"
#include "gem/rng.hpp"

namespace gem {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

double parse_value(std::string_view s, std::size_t line) {
  double v = 0.0;
  if (!parse_double(s, v)) throw FormatError("malformed number '" + std::string(trim(s)) + "'", line);
  if (!std::isfinite(v)) throw FormatError("non-finite feature value", line);
  return v;
}

bool is_integer_label(std::string_view s, long long& value) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  return ec == std::errc() && ptr == s.data() + s.size();
}

/// Builds the sorted label map and 0-based indices from canonical strings.
void assign_labels(const std::vector<std::string>& raw, LabeledDataset& out) {
  std::vector<std::string> names(raw);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  bool numeric = true;
  long long tmp = 0;
  for (const auto& n : names) numeric = numeric && is_integer_label(n, tmp);
  if (numeric) {
    std::sort(names.begin(), names.end(), [](const std::string& a, const std::string& b) {
      long long x = 0, y = 0;
      is_integer_label(a, x);
      is_integer_label(b, y);
      return x < y;
    });
  }
  std::map<std::string, std::uint32_t> index;
  for (std::size_t c = 0; c < names.size(); ++c) index[names[c]] = static_cast<std::uint32_t>(c);
  out.labels.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out.labels[i] = index.at(raw[i]);
  out.label_names = std::move(names);
}

void put_double(std::ostream& out, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, ptr - buf);
}

std::vector<std::uint8_t> read_maybe_gzip(const std::filesystem::path& path) {
  gzFile file = gzopen(path.string().c_str(), "rb");
  if (!file) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  int got = 0;
  while ((got = gzread(file, buf, sizeof(buf))) > 0) out.insert(out.end(), buf, buf + got);
  const bool failed = got < 0;
  gzclose(file);
  if (failed) throw IoError("read error in " + path.string());
  return out;
}

std::uint32_t be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

}  // namespace

std::string canonical_label(std::string_view raw) {
  raw = trim(raw);
  double v = 0.0;
  if (parse_double(raw, v) && std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9.0e15) {
    return std::to_string(static_cast<long long>(v));
  }
  return std::string(raw);
}

std::size_t LabeledDataset::dim() const {
  return std::visit([](const auto& m) { return static_cast<std::size_t>(m.cols()); }, features);
}

const RowMatrix& LabeledDataset::matrix() const {
  if (const auto* dense = std::get_if<RowMatrix>(&features)) return *dense;
  throw ConfigError("dataset is stored sparse; call make_dense() first");
}

void LabeledDataset::make_dense() {
  if (auto* sparse = std::get_if<SparseRowMatrix>(&features)) {
    RowMatrix dense = RowMatrix(*sparse);
    features = std::move(dense);
  }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
  LabeledDataset out;
  out.label_names = label_names;
  out.tag = tag;
  out.image_rows = image_rows;
  out.image_cols = image_cols;
  out.labels.reserve(rows.size());
  for (auto r : rows) {
    if (r >= size()) throw DimensionError("subset row out of range");
    out.labels.push_back(labels[r]);
  }
  if (const auto* dense = std::get_if<RowMatrix>(&features)) {
    RowMatrix m(static_cast<Eigen::Index>(rows.size()), dense->cols());
    for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = dense->row(static_cast<Eigen::Index>(rows[i]));
    out.features = std::move(m);
  } else {
    const auto& sp = std::get<SparseRowMatrix>(features);
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (SparseRowMatrix::InnerIterator it(sp, static_cast<Eigen::Index>(rows[i])); it; ++it) {
        trips.emplace_back(static_cast<Eigen::Index>(i), it.col(), it.value());
      }
    }
    SparseRowMatrix m(static_cast<Eigen::Index>(rows.size()), sp.cols());
    m.setFromTriplets(trips.begin(), trips.end());
    out.features = std::move(m);
  }
  return out;
}

DataFormat parse_data_format(std::string_view text) {
  if (text == "csv" || text == "csv-dense") return DataFormat::csv;
  if (text == "libsvm" || text == "libsvm-sparse") return DataFormat::libsvm;
  if (text == "idx") return DataFormat::idx;
  throw ConfigError("unknown data format '" + std::string(text) + "' (expected csv, libsvm or idx)");
}

std::string_view to_string(DataFormat f) {
  switch (f) {
    case DataFormat::csv:
      return "csv";
    case DataFormat::libsvm:
      return "libsvm";
    case DataFormat::idx:
      return "idx";
  }
  return "unknown";
}

LabeledDataset read_csv(std::istream& in) {
  std::vector<std::string> raw_labels;
  std::vector<double> values;
  std::size_t width = 0;
  bool have_width = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    std::size_t fields = 0;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = text.find(',', pos);
      const std::string_view field = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
      if (fields == 0) {
        if (trim(field).empty()) throw FormatError("missing label", lineno);
        raw_labels.push_back(canonical_label(field));
      } else {
        values.push_back(parse_value(field, lineno));
      }
      ++fields;
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    const std::size_t row_width = fields - 1;
    if (!have_width) {
      width = row_width;
      have_width = true;
    } else if (row_width != width) {
      throw FormatError("row has " + std::to_string(row_width) + " features, expected " + std::to_string(width), lineno);
    }
  }
  if (raw_labels.empty()) throw FormatError("no examples in csv input");
  LabeledDataset out;
  out.features = RowMatrix(Eigen::Map<const RowMatrix>(values.data(), static_cast<Eigen::Index>(raw_labels.size()),
                                                       static_cast<Eigen::Index>(width)));
  assign_labels(raw_labels, out);
  return out;
}

LabeledDataset read_libsvm(std::istream& in) {
  std::vector<std::string> raw_labels;
  std::vector<Eigen::Triplet<double>> trips;
  std::size_t width = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view text = line;
    if (auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;

    const auto row = static_cast<Eigen::Index>(raw_labels.size());
    std::size_t pos = 0;
    long long previous = 0;
    bool first = true;
    while (pos < text.size()) {
      while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
      if (pos >= text.size()) break;
      std::size_t end = pos;
      while (end < text.size() && text[end] != ' ' && text[end] != '\t') ++end;
      const std::string_view token = text.substr(pos, end - pos);
      pos = end;
      if (first) {
        raw_labels.push_back(canonical_label(token));
        first = false;
        continue;
      }
      const std::size_t colon = token.find(':');
      if (colon == std::string_view::npos) throw FormatError("expected index:value, got '" + std::string(token) + "'", lineno);
      const std::string_view key = token.substr(0, colon);
      if (key == "qid") continue;
      long long index = 0;
      if (!is_integer_label(key, index) || index < 1) throw FormatError("bad feature index '" + std::string(key) + "'", lineno);
      if (index <= previous) throw FormatError("feature indices must be strictly ascending", lineno);
      previous = index;
      const double v = parse_value(token.substr(colon + 1), lineno);
      if (v != 0.0) trips.emplace_back(row, static_cast<Eigen::Index>(index - 1), v);
      width = std::max(width, static_cast<std::size_t>(index));
    }
  }
  if (raw_labels.empty()) throw FormatError("no examples in libsvm input");
  LabeledDataset out;
  SparseRowMatrix m(static_cast<Eigen::Index>(raw_labels.size()), static_cast<Eigen::Index>(width));
  m.setFromTriplets(trips.begin(), trips.end());
  out.features = std::move(m);
  assign_labels(raw_labels, out);
  return out;
}

LabeledDataset read_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto img = read_maybe_gzip(images);
  const auto lab = read_maybe_gzip(labels);
  if (img.size() < 16 || img[0] != 0 || img[1] != 0 || img[2] != 0x08 || img[3] != 3) {
    throw FormatError("unknown idx magic in " + images.string() + " (expected unsigned-byte 3-d images)");
  }
  if (lab.size() < 8 || lab[0] != 0 || lab[1] != 0 || lab[2] != 0x08 || lab[3] != 1) {
    throw FormatError("unknown idx magic in " + labels.string() + " (expected unsigned-byte labels)");
  }
  const std::size_t n = be32(img.data() + 4);
  const std::size_t rows = be32(img.data() + 8);
  const std::size_t cols = be32(img.data() + 12);
  const std::size_t n_labels = be32(lab.data() + 4);
  if (n != n_labels) throw FormatError("idx image and label counts differ");
  const std::size_t d = rows * cols;
  if (img.size() != 16 + n * d || lab.size() != 8 + n) throw FormatError("idx payload size does not match its header");

  LabeledDataset out;
  RowMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  const std::uint8_t* px = img.data() + 16;
  for (std::size_t i = 0; i < n * d; ++i) m.data()[i] = px[i] / 255.0;
  out.features = std::move(m);
  std::vector<std::string> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = std::to_string(lab[8 + i]);
  assign_labels(raw, out);
  out.image_rows = rows;
  out.image_cols = cols;
  return out;
}

LabeledDataset load(const std::filesystem::path& path, DataFormat format, const std::filesystem::path& labels_path) {
  if (!std::filesystem::exists(path)) throw IoError("dataset not found: " + path.string());
  switch (format) {
    case DataFormat::csv: {
      std::ifstream in(path);
      if (!in) throw IoError("cannot open " + path.string());
      return read_csv(in);
    }
    case DataFormat::libsvm: {
      std::ifstream in(path);
      if (!in) throw IoError("cannot open " + path.string());
      return read_libsvm(in);
    }
    case DataFormat::idx:
      if (labels_path.empty()) throw ConfigError("idx format needs a separate label file");
      if (!std::filesystem::exists(labels_path)) throw IoError("label file not found: " + labels_path.string());
      return read_idx(path, labels_path);
  }
  throw ConfigError("unknown data format");
}

void write_csv(std::ostream& out, const LabeledDataset& data) {
  LabeledDataset copy;
  const RowMatrix* m = std::get_if<RowMatrix>(&data.features);
  RowMatrix dense;
  if (!m) {
    dense = RowMatrix(std::get<SparseRowMatrix>(data.features));
    m = &dense;
  }
  for (Eigen::Index i = 0; i < m->rows(); ++i) {
    out << data.label_names.at(data.labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < m->cols(); ++j) {
      out << ',';
      put_double(out, (*m)(i, j));
    }
    out << '\n';
  }
}

void write_libsvm(std::ostream& out, const LabeledDataset& data) {
  SparseRowMatrix sparse;
  const SparseRowMatrix* m = std::get_if<SparseRowMatrix>(&data.features);
  if (!m) {
    sparse = std::get<RowMatrix>(data.features).sparseView(0.0, 0.0);
    m = &sparse;
  }
  for (Eigen::Index i = 0; i < m->rows(); ++i) {
    out << data.label_names.at(data.labels[static_cast<std::size_t>(i)]);
    for (SparseRowMatrix::InnerIterator it(*m, i); it; ++it) {
      if (it.value() == 0.0) continue;
      out << ' ' << it.col() + 1 << ':';
      put_double(out, it.value());
    }
    out << '\n';
  }
}

void remap_labels(LabeledDataset& data, const std::vector<std::string>& names) {
  std::map<std::string, std::uint32_t> index;
  for (std::size_t c = 0; c < names.size(); ++c) index[names[c]] = static_cast<std::uint32_t>(c);
  for (auto& y : data.labels) {
    const auto it = index.find(data.label_names.at(y));
    if (it == index.end()) throw LabelError("label '" + data.label_names[y] + "' is not known to the model");
    y = it->second;
  }
  data.label_names = names;
}

std::vector<LabeledDataset> split(const LabeledDataset& data, std::span<const double> fractions, std::uint64_t seed) {
  if (fractions.empty()) throw ConfigError("split needs at least one fraction");
  double total = 0.0;
  for (double f : fractions) {
    if (!(f >= 0.0)) throw ConfigError("split fractions must be nonnegative");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");

  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span(order));

  static const char* three[] = {"train", "validation", "test"};
  static const char* two[] = {"train", "test"};
  std::vector<LabeledDataset> parts;
  double cumulative = 0.0;
  std::size_t start = 0;
  for (std::size_t p = 0; p < fractions.size(); ++p) {
    cumulative += fractions[p];
    std::size_t end = p + 1 == fractions.size() ? n : static_cast<std::size_t>(std::llround(cumulative * static_cast<double>(n)));
    end = std::clamp(end, start, n);
    auto part = data.subset(std::span(order).subspan(start, end - start));
    if (fractions.size() == 2) {
      part.tag = two[p];
    } else if (fractions.size() == 3) {
      part.tag = three[p];
    } else {
      part.tag = "part" + std::to_string(p);
    }
    parts.push_back(std::move(part));
    start = end;
  }
  return parts;
}

LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b) {
  if (a.label_names != b.label_names) throw LabelError("cannot concatenate datasets with different label maps");
  if (a.dim() != b.dim()) throw DimensionError("cannot concatenate datasets of different widths");
  LabeledDataset out;
  out.label_names = a.label_names;
  out.tag = a.tag;
  out.image_rows = a.image_rows;
  out.image_cols = a.image_cols;
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  auto dense_of = [](const LabeledDataset& d) {
    if (const auto* m = std::get_if<RowMatrix>(&d.features)) return *m;
    return RowMatrix(std::get<SparseRowMatrix>(d.features));
  };
  RowMatrix m(static_cast<Eigen::Index>(out.labels.size()), static_cast<Eigen::Index>(a.dim()));
  m << dense_of(a), dense_of(b);
  out.features = std::move(m);
  return out;
}

void append_bias(LabeledDataset& data) {
  data.make_dense();
  auto& m = std::get<RowMatrix>(data.features);
  RowMatrix out(m.rows(), m.cols() + 1);
  out.leftCols(m.cols()) = m;
  out.col(m.cols()).setOnes();
  m = std::move(out);
  data.image_rows = 0;
  data.image_cols = 0;
}

}  // namespace gem
