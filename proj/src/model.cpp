#include "gem/model.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string_view>

#include "gem/binary_io.hpp"
#include "gem/error.hpp"

namespace gem {
namespace {

constexpr std::string_view kMagic = "GEMMODEL";

enum Tag : std::uint32_t { kMeta = 1, kRff = 2, kGem = 3, kClassifier = 4 };

// Sanity bound on any stored dimension.
constexpr std::uint64_t kMaxDim = std::uint64_t{1} << 28;

std::uint64_t checked_dim(ByteReader& r, const char* what) {
  const std::uint64_t v = r.u64();
  if (v > kMaxDim) throw FormatError(std::string("implausible ") + what + " in model container");
  return v;
}

void put_vector(ByteWriter& w, const Vector& v) {
  w.u64(static_cast<std::uint64_t>(v.size()));
  w.f64s(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

Vector get_vector(ByteReader& r) {
  Vector v(static_cast<Eigen::Index>(r.length(8)));
  r.f64s(std::span<double>(v.data(), static_cast<std::size_t>(v.size())));
  return v;
}

void put_pairs(ByteWriter& w, const std::vector<ClassPair>& pairs) {
  w.u64(pairs.size());
  for (const auto& p : pairs) {
    w.u32(p.numerator);
    w.u32(p.denominator);
  }
}

std::vector<ClassPair> get_pairs(ByteReader& r) {
  std::vector<ClassPair> pairs(r.length(8));
  for (auto& p : pairs) {
    p.numerator = r.u32();
    p.denominator = r.u32();
  }
  return pairs;
}

PairStrategy get_strategy(ByteReader& r) {
  const std::uint32_t s = r.u32();
  if (s > static_cast<std::uint32_t>(PairStrategy::listed)) throw FormatError("unknown pair strategy in model container");
  return static_cast<PairStrategy>(s);
}

void write_meta(ByteWriter& w, const GemModel& m) {
  w.u64(m.label_names.size());
  for (const auto& name : m.label_names) w.str(name);
  w.u8(m.append_bias ? 1 : 0);
  w.u64(m.input_dim);
  w.u64(m.image_rows);
  w.u64(m.image_cols);
  w.u64(m.train_metrics.n);
  w.u64(m.train_metrics.errors);
  w.f64(m.train_metrics.error_rate);
  w.f64(m.train_metrics.cross_entropy);
}

void read_meta(ByteReader& r, GemModel& m) {
  m.label_names.resize(r.length(8));
  for (auto& name : m.label_names) name = r.str();
  m.append_bias = r.u8() != 0;
  m.input_dim = checked_dim(r, "input dimension");
  m.image_rows = checked_dim(r, "image height");
  m.image_cols = checked_dim(r, "image width");
  m.train_metrics.n = r.u64();
  m.train_metrics.errors = r.u64();
  m.train_metrics.error_rate = r.f64();
  m.train_metrics.cross_entropy = r.f64();
}

void write_rff(ByteWriter& w, const RffStage& s) {
  w.u64(s.map.input_dim());
  w.u64(s.map.output_dim());
  w.f64(s.map.sigma());
  w.u64(s.map.seed());
}

RffStage read_rff(ByteReader& r) {
  const std::uint64_t d = checked_dim(r, "rff input dimension");
  const std::uint64_t D = checked_dim(r, "rff feature count");
  const double sigma = r.f64();
  const std::uint64_t seed = r.u64();
  try {
    return RffStage{RffMap(d, D, sigma, seed)};
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid rff stage: ") + e.what());
  }
}

void write_gem(ByteWriter& w, const GemLayer& g) {
  w.f64(g.hyper.gamma);
  w.f64(g.hyper.theta);
  w.u64(g.hyper.m_max);
  w.u32(static_cast<std::uint32_t>(g.hyper.pairs.strategy));
  w.u64(g.hyper.pairs.seed);
  w.u64(g.hyper.pairs.count);
  put_pairs(w, g.hyper.pairs.listed);

  w.u32(static_cast<std::uint32_t>(g.plan.strategy));
  w.u64(g.plan.seed);
  put_pairs(w, g.plan.pairs);

  const auto& layout = g.layout;
  w.u64(layout.input_dim());
  w.u8(layout.passthrough() ? 1 : 0);
  w.u64(layout.detector_count());
  for (const auto& det : layout.detectors()) {
    w.u64(det.numerator);
    w.u64(det.denominator);
    w.u64(det.rank);
    w.f64(det.lambda);
    w.f64s(std::span<const double>(det.v.data(), static_cast<std::size_t>(det.v.size())));
  }
  put_vector(w, g.standardizer.shift);
  put_vector(w, g.standardizer.scale);
}

GemLayer read_gem(ByteReader& r) {
  GemLayer g;
  g.hyper.gamma = r.f64();
  g.hyper.theta = r.f64();
  g.hyper.m_max = r.u64();
  g.hyper.pairs.strategy = get_strategy(r);
  g.hyper.pairs.seed = r.u64();
  g.hyper.pairs.count = r.u64();
  g.hyper.pairs.listed = get_pairs(r);

  g.plan.strategy = get_strategy(r);
  g.plan.seed = r.u64();
  g.plan.pairs = get_pairs(r);

  const std::uint64_t d = checked_dim(r, "layer input dimension");
  const bool passthrough = r.u8() != 0;
  const std::size_t count = r.length(32 + 8 * d);
  std::vector<Detector> dets(count);
  for (auto& det : dets) {
    det.numerator = r.u64();
    det.denominator = r.u64();
    det.rank = r.u64();
    det.lambda = r.f64();
    det.v.resize(static_cast<Eigen::Index>(d));
    r.f64s(std::span<double>(det.v.data(), d));
  }
  g.layout = FeatureLayout(std::move(dets), d, passthrough);
  g.standardizer.shift = get_vector(r);
  g.standardizer.scale = get_vector(r);
  if (g.standardizer.shift.size() != g.standardizer.scale.size() ||
      (!g.standardizer.empty() && static_cast<std::size_t>(g.standardizer.shift.size()) != g.output_dim())) {
    throw FormatError("standardization width does not match the layer");
  }
  return g;
}

void write_classifier(ByteWriter& w, const MultiLogitModel& c) {
  w.u64(static_cast<std::uint64_t>(c.weights.rows()));
  w.u64(static_cast<std::uint64_t>(c.weights.cols()));
  w.f64(c.l2);
  w.u64(c.iterations);
  w.f64(c.objective);
  w.f64s(std::span<const double>(c.weights.data(), static_cast<std::size_t>(c.weights.size())));
}

MultiLogitModel read_classifier(ByteReader& r) {
  MultiLogitModel c;
  const std::uint64_t rows = checked_dim(r, "class count");
  const std::uint64_t cols = checked_dim(r, "classifier width");
  c.l2 = r.f64();
  c.iterations = r.u64();
  c.objective = r.f64();
  if (rows * cols * 8 > r.remaining()) throw FormatError("truncated binary container");
  c.weights.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  r.f64s(std::span<double>(c.weights.data(), rows * cols));
  return c;
}

void put_shortest(std::ostream& out, double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, ptr - buf);
}

}  // namespace

RowMatrix GemLayer::transform(const RowMatrix& X) const {
  RowMatrix out = layout.expand(X);
  if (!standardizer.empty()) standardizer.apply(out);
  return out;
}

Vector GemLayer::transform(std::span<const double> x) const {
  Vector out = layout.expand(x);
  if (!standardizer.empty()) standardizer.apply(std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

std::size_t stage_input_dim(const Stage& s) {
  return std::visit([](const auto& st) { return st.input_dim(); }, s);
}

std::size_t stage_output_dim(const Stage& s) {
  return std::visit([](const auto& st) { return st.output_dim(); }, s);
}

RowMatrix GemModel::transform(const RowMatrix& X) const {
  if (static_cast<std::size_t>(X.cols()) != input_dim) {
    throw DimensionError("model expects " + std::to_string(input_dim) + " input features, got " +
                         std::to_string(X.cols()));
  }
  RowMatrix cur;
  if (append_bias) {
    cur.resize(X.rows(), X.cols() + 1);
    cur.leftCols(X.cols()) = X;
    cur.col(X.cols()).setOnes();
  } else {
    cur = X;
  }
  for (const auto& stage : stages) {
    if (const auto* rff = std::get_if<RffStage>(&stage)) {
      cur = rff->map.apply(cur);
    } else {
      cur = std::get<GemLayer>(stage).transform(cur);
    }
  }
  return cur;
}

Vector GemModel::transform(std::span<const double> x) const {
  if (x.size() != input_dim) {
    throw DimensionError("model expects " + std::to_string(input_dim) + " input features, got " +
                         std::to_string(x.size()));
  }
  Vector cur(static_cast<Eigen::Index>(x.size() + (append_bias ? 1 : 0)));
  std::copy(x.begin(), x.end(), cur.data());
  if (append_bias) cur[cur.size() - 1] = 1.0;
  for (const auto& stage : stages) {
    const std::span<const double> in(cur.data(), static_cast<std::size_t>(cur.size()));
    if (const auto* rff = std::get_if<RffStage>(&stage)) {
      cur = rff->map.apply(in);
    } else {
      cur = std::get<GemLayer>(stage).transform(in);
    }
  }
  return cur;
}

RowMatrix GemModel::predict_proba(const RowMatrix& X) const { return classifier.predict_proba(transform(X)); }

Vector GemModel::predict_proba(std::span<const double> x) const {
  const Vector z = transform(x);
  return classifier.predict_proba(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())));
}

std::vector<const GemLayer*> GemModel::gem_layers() const {
  std::vector<const GemLayer*> out;
  for (const auto& stage : stages) {
    if (const auto* g = std::get_if<GemLayer>(&stage)) out.push_back(g);
  }
  return out;
}

void GemModel::check_widths() const {
  std::size_t width = input_dim + (append_bias ? 1 : 0);
  for (std::size_t s = 0; s < stages.size(); ++s) {
    if (stage_input_dim(stages[s]) != width) {
      throw FormatError("stage " + std::to_string(s + 1) + " expects width " + std::to_string(stage_input_dim(stages[s])) +
                        " but receives " + std::to_string(width));
    }
    width = stage_output_dim(stages[s]);
  }
  if (classifier.width() != width) {
    throw FormatError("classifier expects width " + std::to_string(classifier.width()) + " but receives " +
                      std::to_string(width));
  }
  if (classifier.classes() != label_names.size()) throw FormatError("classifier and label map disagree on the class count");
}

std::vector<std::uint8_t> serialize(const GemModel& model) {
  model.check_widths();
  std::vector<std::pair<Tag, std::vector<std::uint8_t>>> sections;
  {
    ByteWriter w;
    write_meta(w, model);
    sections.emplace_back(kMeta, w.take());
  }
  for (const auto& stage : model.stages) {
    ByteWriter w;
    if (const auto* rff = std::get_if<RffStage>(&stage)) {
      write_rff(w, *rff);
      sections.emplace_back(kRff, w.take());
    } else {
      write_gem(w, std::get<GemLayer>(stage));
      sections.emplace_back(kGem, w.take());
    }
  }
  {
    ByteWriter w;
    write_classifier(w, model.classifier);
    sections.emplace_back(kClassifier, w.take());
  }

  ByteWriter out;
  out.raw(kMagic);
  out.u32(GemModel::kVersion);
  out.u32(static_cast<std::uint32_t>(sections.size()));
  for (const auto& [tag, payload] : sections) {
    out.u32(tag);
    out.u64(payload.size());
    out.bytes(payload);
  }
  return out.take();
}

GemModel deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  if (bytes.size() < kMagic.size() || r.raw(kMagic.size()) != kMagic) throw FormatError("not a model file (bad magic)");
  const std::uint32_t version = r.u32();
  if (version != GemModel::kVersion) throw FormatError("unsupported model version " + std::to_string(version));
  const std::uint32_t count = r.u32();

  GemModel model;
  bool have_meta = false;
  bool have_classifier = false;
  for (std::uint32_t s = 0; s < count; ++s) {
    const std::uint32_t tag = r.u32();
    const std::size_t len = r.length(1);
    ByteReader section(r.bytes(len));
    if (have_classifier) throw FormatError("model section after the classifier");
    switch (tag) {
      case kMeta:
        if (have_meta) throw FormatError("duplicate model metadata section");
        read_meta(section, model);
        have_meta = true;
        break;
      case kRff:
        model.stages.emplace_back(read_rff(section));
        break;
      case kGem:
        model.stages.emplace_back(read_gem(section));
        break;
      case kClassifier:
        model.classifier = read_classifier(section);
        have_classifier = true;
        break;
      default:
        throw FormatError("unknown model section tag " + std::to_string(tag));
    }
    if (!section.done()) throw FormatError("trailing bytes in model section " + std::to_string(tag));
  }
  if (!r.done()) throw FormatError("trailing bytes after the last model section");
  if (!have_meta || !have_classifier) throw FormatError("model file lacks a required section");
  model.check_widths();
  return model;
}

void save_model(const std::filesystem::path& path, const GemModel& model) { write_file(path, serialize(model)); }

GemModel load_model(const std::filesystem::path& path) { return deserialize(read_file(path)); }

void write_detectors(std::ostream& out, const FeatureLayout& layout, const std::vector<std::string>& label_names) {
  out << "# labels";
  for (const auto& name : label_names) out << ' ' << name;
  out << "\n# i j rank lambda v_1 .. v_" << layout.input_dim() << '\n';
  for (const auto& det : layout.detectors()) {
    out << det.numerator + 1 << ' ' << det.denominator + 1 << ' ' << det.rank << ' ';
    put_shortest(out, det.lambda);
    for (Eigen::Index i = 0; i < det.v.size(); ++i) {
      out << ' ';
      put_shortest(out, det.v[i]);
    }
    out << '\n';
  }
}

std::vector<Detector> read_detectors(std::istream& in) {
  std::vector<Detector> out;
  std::string line;
  std::size_t lineno = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.front() == '#') continue;
    std::istringstream fields(line);
    std::size_t i = 0, j = 0;
    Detector det;
    if (!(fields >> i >> j >> det.rank) || i < 1 || j < 1) throw FormatError("bad detector header fields", lineno);
    det.numerator = i - 1;
    det.denominator = j - 1;
    std::vector<double> values;
    std::string token;
    while (fields >> token) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc() || ptr != token.data() + token.size()) throw FormatError("malformed number '" + token + "'", lineno);
      values.push_back(v);
    }
    if (values.size() < 2) throw FormatError("detector row has no vector entries", lineno);
    det.lambda = values.front();
    det.v = Eigen::Map<const Vector>(values.data() + 1, static_cast<Eigen::Index>(values.size() - 1));
    if (dim == 0) dim = values.size() - 1;
    if (values.size() - 1 != dim) throw FormatError("detector rows differ in length", lineno);
    out.push_back(std::move(det));
  }
  return out;
}

}  // namespace gem
