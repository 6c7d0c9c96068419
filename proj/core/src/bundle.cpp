#include "phishkey/bundle.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

namespace phishkey {
namespace {

constexpr char kMagic[4] = {'P', 'H', 'K', 'B'};

class ByteWriter {
 public:
  void u32(std::uint32_t v) { little_endian(v, 4); }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void u64(std::uint64_t v) { little_endian(v, 8); }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  template <typename T>
  void f32_array(const std::vector<T>& values) {
    for (T v : values) f32(static_cast<double>(v));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  void little_endian(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size, std::string context)
      : data_(data), size_(size), context_(std::move(context)) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(little_endian(4)); }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::uint64_t u64() { return little_endian(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  std::vector<double> f32_array(std::size_t n) {
    need_elements(n, 4);
    std::vector<double> out(n);
    for (double& v : out) v = f32();
    return out;
  }
  const std::uint8_t* take(std::size_t n) {
    need(n);
    const std::uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  std::size_t remaining() const { return size_ - pos_; }
  std::size_t position() const { return pos_; }
  void need_elements(std::uint64_t count, std::uint64_t width) {
    if (count > remaining() / width) truncated();
  }
  void expect_end() {
    if (pos_ != size_) {
      throw BundleError(BundleError::Kind::Malformed, context_ + ": trailing bytes in section");
    }
  }

 private:
  void need(std::uint64_t n) {
    if (n > remaining()) truncated();
  }
  [[noreturn]] void truncated() {
    throw BundleError(BundleError::Kind::Truncated, context_ + ": unexpected end of data");
  }
  std::uint64_t little_endian(int n) {
    need(static_cast<std::uint64_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  std::string context_;
};

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (n > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

[[noreturn]] void malformed(const std::string& what) {
  throw BundleError(BundleError::Kind::Malformed, what);
}

std::vector<std::uint8_t> encode_embeddings(const EmbeddingModel& m) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(m.size()));
  w.u32(static_cast<std::uint32_t>(m.dim()));
  for (std::size_t i = 0; i < m.size(); ++i) {
    w.str(m.token(i));
    for (float v : m.row(i)) w.f32(v);
  }
  return w.take();
}

EmbeddingModel decode_embeddings(ByteReader& r) {
  const std::uint32_t count = r.u32();
  const std::uint32_t dim = r.u32();
  if (dim == 0) malformed("embeddings: zero dimension");
  std::vector<std::string> tokens;
  std::vector<float> vectors;
  r.need_elements(count, 4ull + 4ull * dim);
  tokens.reserve(count);
  vectors.reserve(static_cast<std::size_t>(count) * dim);
  for (std::uint32_t i = 0; i < count; ++i) {
    tokens.push_back(r.str());
    for (std::uint32_t k = 0; k < dim; ++k) vectors.push_back(r.f32());
  }
  return EmbeddingModel(std::move(tokens), std::move(vectors), dim);
}

std::vector<std::uint8_t> encode_centroids(const ClassCentroids& c) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(c.dim()));
  w.f32_array(c.phishing);
  w.f32_array(c.legitimate);
  w.u64(c.phishing_count);
  w.u64(c.legitimate_count);
  return w.take();
}

ClassCentroids decode_centroids(ByteReader& r) {
  ClassCentroids c;
  const std::uint32_t dim = r.u32();
  c.phishing = r.f32_array(dim);
  c.legitimate = r.f32_array(dim);
  c.phishing_count = r.u64();
  c.legitimate_count = r.u64();
  return c;
}

std::vector<std::uint8_t> encode_vocabulary(const Vocabulary& v) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (const auto& tok : v.entries()) w.str(tok);
  return w.take();
}

Vocabulary decode_vocabulary(ByteReader& r) {
  const std::uint32_t n = r.u32();
  r.need_elements(n, 4);
  std::vector<std::string> entries;
  entries.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) entries.push_back(r.str());
  return Vocabulary(std::move(entries));
}

std::vector<std::uint8_t> encode_forest(const ForestModel& f) {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(f.trees().size()));
  w.u32(static_cast<std::uint32_t>(f.n_features()));
  for (const DecisionTree& tree : f.trees()) {
    w.u32(static_cast<std::uint32_t>(tree.nodes().size()));
    for (const TreeNode& n : tree.nodes()) {
      w.i32(n.feature);
      w.f32(n.threshold);
      w.i32(n.left);
      w.i32(n.right);
      w.f32(n.phishing);
      w.f32(n.legitimate);
    }
  }
  return w.take();
}

ForestModel decode_forest(ByteReader& r) {
  const std::uint32_t n_trees = r.u32();
  const std::uint32_t n_features = r.u32();
  r.need_elements(n_trees, 4);
  std::vector<DecisionTree> trees;
  trees.reserve(n_trees);
  for (std::uint32_t t = 0; t < n_trees; ++t) {
    const std::uint32_t n_nodes = r.u32();
    r.need_elements(n_nodes, 24);
    std::vector<TreeNode> nodes(n_nodes);
    for (TreeNode& n : nodes) {
      n.feature = r.i32();
      n.threshold = r.f32();
      n.left = r.i32();
      n.right = r.i32();
      n.phishing = r.f32();
      n.legitimate = r.f32();
    }
    trees.emplace_back(std::move(nodes));
  }
  return ForestModel(std::move(trees), n_features);
}

// Each tensor: rank, dims, then row-major float32 data.
void write_tensor(ByteWriter& w, const std::string& name, const std::vector<std::uint32_t>& dims,
                  const std::vector<double>& data) {
  w.str(name);
  w.u32(static_cast<std::uint32_t>(dims.size()));
  for (auto d : dims) w.u32(d);
  w.f32_array(data);
}

std::vector<double> read_tensor(ByteReader& r, const std::string& name,
                                const std::vector<std::uint32_t>& expected_dims) {
  const std::string got = r.str();
  if (got != name) malformed("urlnet: expected tensor '" + name + "', found '" + got + "'");
  const std::uint32_t rank = r.u32();
  if (rank != expected_dims.size()) malformed("urlnet: tensor '" + name + "' has wrong rank");
  std::uint64_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const std::uint32_t d = r.u32();
    if (d != expected_dims[i]) malformed("urlnet: tensor '" + name + "' has wrong shape");
    count *= d;
  }
  return r.f32_array(count);
}

std::vector<std::uint8_t> encode_urlnet(const UrlNetModel& m) {
  const UrlNetShape& s = m.shape();
  ByteWriter w;
  for (std::size_t v : {s.vocab, s.length, s.embed_dim, s.filters, s.kernel}) {
    w.u32(static_cast<std::uint32_t>(v));
  }
  const auto u = [](std::size_t v) { return static_cast<std::uint32_t>(v); };
  const UrlNetTensors& t = m.weights();
  write_tensor(w, "embedding", {u(s.vocab), u(s.embed_dim)}, t.embedding);
  write_tensor(w, "conv", {u(s.filters), u(s.kernel), u(s.embed_dim)}, t.conv);
  write_tensor(w, "conv_bias", {u(s.filters)}, t.conv_bias);
  write_tensor(w, "dense", {u(s.filters)}, t.dense);
  write_tensor(w, "dense_bias", {1}, t.dense_bias);
  return w.take();
}

UrlNetModel decode_urlnet(ByteReader& r) {
  UrlNetShape s;
  s.vocab = r.u32();
  s.length = r.u32();
  s.embed_dim = r.u32();
  s.filters = r.u32();
  s.kernel = r.u32();
  const auto u = [](std::size_t v) { return static_cast<std::uint32_t>(v); };
  UrlNetTensors t;
  t.embedding = read_tensor(r, "embedding", {u(s.vocab), u(s.embed_dim)});
  t.conv = read_tensor(r, "conv", {u(s.filters), u(s.kernel), u(s.embed_dim)});
  t.conv_bias = read_tensor(r, "conv_bias", {u(s.filters)});
  t.dense = read_tensor(r, "dense", {u(s.filters)});
  t.dense_bias = read_tensor(r, "dense_bias", {1});
  return UrlNetModel(s, std::move(t));
}

}  // namespace

std::vector<std::uint8_t> write_archive(const std::vector<BundleSection>& sections,
                                        std::uint32_t version) {
  ByteWriter w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(version);
  w.u32(static_cast<std::uint32_t>(sections.size()));
  for (const BundleSection& s : sections) {
    w.str(s.name);
    w.u64(s.payload.size());
    w.bytes(s.payload.data(), s.payload.size());
  }
  std::vector<std::uint8_t> out = w.take();
  const std::uint32_t crc = crc32_of(out.data(), out.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(crc >> (8 * i)));
  return out;
}

std::vector<BundleSection> read_archive(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes.data(), bytes.size(), "bundle");
  const std::uint8_t* magic = r.take(sizeof kMagic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw BundleError(BundleError::Kind::BadMagic, "not a model bundle (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kBundleFormatVersion) {
    throw BundleError(BundleError::Kind::VersionMismatch,
                      "bundle format version " + std::to_string(version) + " is not supported (expected " +
                          std::to_string(kBundleFormatVersion) + ")");
  }
  const std::uint32_t count = r.u32();
  std::vector<BundleSection> sections;
  for (std::uint32_t i = 0; i < count; ++i) {
    BundleSection s;
    s.name = r.str();
    const std::uint64_t n = r.u64();
    const std::uint8_t* p = r.take(static_cast<std::size_t>(std::min<std::uint64_t>(n, r.remaining() + 1)));
    s.payload.assign(p, p + n);
    sections.push_back(std::move(s));
  }
  const std::size_t body = r.position();
  const std::uint32_t stored = r.u32();
  if (r.remaining() != 0) {
    throw BundleError(BundleError::Kind::Malformed, "bundle: trailing bytes after checksum");
  }
  if (crc32_of(bytes.data(), body) != stored) {
    throw BundleError(BundleError::Kind::ChecksumMismatch, "bundle checksum mismatch (file corrupted)");
  }
  return sections;
}

std::vector<std::uint8_t> encode_model_bundle(const PhishKeyModel& model) {
  ByteWriter cape;
  cape.u32(static_cast<std::uint32_t>(model.m));
  ByteWriter ensemble;
  ensemble.f32(model.weights.w_url);
  ensemble.f32(model.weights.w_html);

  std::vector<BundleSection> sections;
  sections.push_back({"embeddings", encode_embeddings(model.embeddings)});
  sections.push_back({"centroids", encode_centroids(model.centroids)});
  sections.push_back({"cape", cape.take()});
  sections.push_back({"vocabulary", encode_vocabulary(model.vocabulary)});
  sections.push_back({"forest", encode_forest(model.forest)});
  sections.push_back({"urlnet", encode_urlnet(model.urlnet)});
  sections.push_back({"ensemble", ensemble.take()});
  return write_archive(sections);
}

PhishKeyModel decode_model_bundle(const std::vector<std::uint8_t>& bytes) {
  std::map<std::string, const BundleSection*> by_name;
  const std::vector<BundleSection> sections = read_archive(bytes);
  for (const BundleSection& s : sections) {
    if (!by_name.emplace(s.name, &s).second) malformed("bundle: duplicate section '" + s.name + "'");
  }
  auto section = [&](const std::string& name) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw BundleError(BundleError::Kind::Incomplete, "incomplete bundle: missing section '" + name + "'");
    }
    return ByteReader(it->second->payload.data(), it->second->payload.size(), name);
  };
  for (const char* name : {"embeddings", "centroids", "cape", "vocabulary", "forest", "urlnet", "ensemble"}) {
    section(name);
  }

  PhishKeyModel model;
  {
    auto r = section("embeddings");
    model.embeddings = decode_embeddings(r);
    r.expect_end();
  }
  {
    auto r = section("centroids");
    model.centroids = decode_centroids(r);
    r.expect_end();
    if (model.centroids.dim() != model.embeddings.dim()) malformed("centroid dimension mismatch");
  }
  {
    auto r = section("cape");
    model.m = r.u32();
    r.expect_end();
    if (model.m == 0) malformed("cape: selection size is zero");
  }
  {
    auto r = section("vocabulary");
    model.vocabulary = decode_vocabulary(r);
    r.expect_end();
  }
  {
    auto r = section("forest");
    model.forest = decode_forest(r);
    r.expect_end();
  }
  {
    auto r = section("urlnet");
    model.urlnet = decode_urlnet(r);
    r.expect_end();
  }
  {
    auto r = section("ensemble");
    model.weights.w_url = r.f32();
    model.weights.w_html = r.f32();
    r.expect_end();
    try {
      model.weights.validate();
    } catch (const ConfigError& e) {
      malformed(std::string("ensemble: ") + e.what());
    }
  }
  return model;
}

void save_model_bundle(const PhishKeyModel& model, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = encode_model_bundle(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ModelError("cannot write bundle " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ModelError("failed writing bundle " + path.string());
}

PhishKeyModel load_model_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot read bundle " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_model_bundle(bytes);
}

}  // namespace phishkey
