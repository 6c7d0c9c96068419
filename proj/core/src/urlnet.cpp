#include "phishkey/urlnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "phishkey/error.hpp"
#include "phishkey/random.hpp"

namespace phishkey {

Charset::Charset(std::string_view symbols) : symbols_(symbols) {
  std::fill(std::begin(table_), std::end(table_), kUnknown);
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    table_[static_cast<unsigned char>(symbols_[i])] = static_cast<std::uint32_t>(i + 2);
  }
}

const Charset& Charset::ascii_printable() {
  static const Charset charset = [] {
    std::string symbols;
    for (char c = 0x20; c <= 0x7E; ++c) symbols.push_back(c);
    return Charset(symbols);
  }();
  return charset;
}

UrlEncoding encode_url(std::string_view url, const Charset& charset, std::size_t length) {
  UrlEncoding enc;
  enc.indices.assign(length, Charset::kPad);
  const std::size_t n = std::min(length, url.size());
  for (std::size_t i = 0; i < n; ++i) {
    char c = url[i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    enc.indices[i] = charset.index_of(c);
  }
  return enc;
}

UrlNetTensors UrlNetTensors::zeros(const UrlNetShape& s) {
  UrlNetTensors t;
  t.embedding.assign(s.vocab * s.embed_dim, 0.0);
  t.conv.assign(s.filters * s.kernel * s.embed_dim, 0.0);
  t.conv_bias.assign(s.filters, 0.0);
  t.dense.assign(s.filters, 0.0);
  t.dense_bias.assign(1, 0.0);
  return t;
}

std::size_t UrlNetTensors::parameter_count() const {
  return embedding.size() + conv.size() + conv_bias.size() + dense.size() + dense_bias.size();
}

namespace {

void check_shape(const UrlNetShape& s) {
  if (s.vocab < 2 || s.embed_dim == 0 || s.filters == 0 || s.kernel == 0 || s.length < s.kernel) {
    throw ModelError("invalid url model shape");
  }
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

// Per-character conv response: proj[(c * kernel + k) * filters + f] =
// sum_e conv[f, k, e] * embedding[c, e].
std::vector<double> project(const UrlNetShape& s, const UrlNetTensors& w) {
  std::vector<double> proj(s.vocab * s.kernel * s.filters, 0.0);
  for (std::size_t c = 0; c < s.vocab; ++c) {
    const double* emb = &w.embedding[c * s.embed_dim];
    for (std::size_t k = 0; k < s.kernel; ++k) {
      double* out = &proj[(c * s.kernel + k) * s.filters];
      for (std::size_t f = 0; f < s.filters; ++f) {
        const double* kernel = &w.conv[(f * s.kernel + k) * s.embed_dim];
        double acc = 0.0;
        for (std::size_t e = 0; e < s.embed_dim; ++e) acc += kernel[e] * emb[e];
        out[f] = acc;
      }
    }
  }
  return proj;
}

struct Pooled {
  std::vector<double> value;         // max over positions of the conv pre-activation
  std::vector<std::size_t> argmax;   // first position attaining it
};

Pooled conv_maxpool(const UrlNetShape& s, const UrlNetTensors& w, const std::vector<double>& proj,
                    std::span<const std::uint32_t> indices) {
  Pooled out;
  out.value.assign(s.filters, -std::numeric_limits<double>::infinity());
  out.argmax.assign(s.filters, 0);
  std::vector<double> z(s.filters);
  for (std::size_t p = 0; p < s.positions(); ++p) {
    std::copy(w.conv_bias.begin(), w.conv_bias.end(), z.begin());
    for (std::size_t k = 0; k < s.kernel; ++k) {
      const double* row = &proj[(indices[p + k] * s.kernel + k) * s.filters];
      for (std::size_t f = 0; f < s.filters; ++f) z[f] += row[f];
    }
    for (std::size_t f = 0; f < s.filters; ++f) {
      if (z[f] > out.value[f]) {
        out.value[f] = z[f];
        out.argmax[f] = p;
      }
    }
  }
  return out;
}

void check_indices(const UrlNetShape& s, std::span<const std::uint32_t> indices) {
  if (indices.size() != s.length) {
    throw ModelError("url encoding has length " + std::to_string(indices.size()) + ", model expects " +
                     std::to_string(s.length));
  }
  for (auto i : indices) {
    if (i >= s.vocab) throw ModelError("url encoding index out of charset range");
  }
}

}  // namespace

class UrlNetTrainer;

UrlNetModel::UrlNetModel(UrlNetShape shape, UrlNetTensors weights)
    : shape_(shape), weights_(std::move(weights)) {
  check_shape(shape_);
  const UrlNetTensors expected = UrlNetTensors::zeros(shape_);
  if (weights_.embedding.size() != expected.embedding.size() ||
      weights_.conv.size() != expected.conv.size() ||
      weights_.conv_bias.size() != expected.conv_bias.size() ||
      weights_.dense.size() != expected.dense.size() ||
      weights_.dense_bias.size() != expected.dense_bias.size()) {
    throw ModelError("url model tensors do not match the declared shape");
  }
  weights_.for_each([](const char* name, const std::vector<double>& t) {
    for (double v : t) {
      if (!std::isfinite(v)) throw ModelError(std::string("non-finite weight in url model tensor ") + name);
    }
  });
  projection_ = project(shape_, weights_);
}

double UrlNetModel::logit(std::span<const std::uint32_t> indices) const {
  check_indices(shape_, indices);
  const Pooled pooled = conv_maxpool(shape_, weights_, projection_, indices);
  double out = weights_.dense_bias[0];
  for (std::size_t f = 0; f < shape_.filters; ++f) {
    out += weights_.dense[f] * std::max(pooled.value[f], 0.0);
  }
  return out;
}

double UrlNetModel::predict_proba(std::span<const std::uint32_t> indices) const {
  return stable_sigmoid(logit(indices));
}

double UrlNetModel::accumulate_gradient(std::span<const std::uint32_t> indices, Label label,
                                        UrlNetTensors& grad) const {
  check_indices(shape_, indices);
  const UrlNetShape& s = shape_;
  const Pooled pooled = conv_maxpool(s, weights_, projection_, indices);
  double z = weights_.dense_bias[0];
  for (std::size_t f = 0; f < s.filters; ++f) z += weights_.dense[f] * std::max(pooled.value[f], 0.0);

  const double y = is_phishing(label) ? 1.0 : 0.0;
  const double loss = softplus(z) - y * z;
  const double dz = stable_sigmoid(z) - y;

  grad.dense_bias[0] += dz;
  for (std::size_t f = 0; f < s.filters; ++f) {
    const double h = pooled.value[f];
    if (h <= 0.0) continue;  // ReLU closed: no gradient below the dense layer
    grad.dense[f] += dz * h;
    const double dh = dz * weights_.dense[f];
    grad.conv_bias[f] += dh;
    // Max-pool routes the gradient to the winning window only.
    const std::size_t p = pooled.argmax[f];
    for (std::size_t k = 0; k < s.kernel; ++k) {
      const std::size_t c = indices[p + k];
      const double* emb = &weights_.embedding[c * s.embed_dim];
      const double* kernel = &weights_.conv[(f * s.kernel + k) * s.embed_dim];
      double* g_kernel = &grad.conv[(f * s.kernel + k) * s.embed_dim];
      double* g_emb = &grad.embedding[c * s.embed_dim];
      for (std::size_t e = 0; e < s.embed_dim; ++e) {
        g_kernel[e] += dh * emb[e];
        g_emb[e] += dh * kernel[e];
      }
    }
  }
  return loss;
}

UrlNetModel init_urlnet(const UrlNetShape& shape, std::uint64_t seed) {
  check_shape(shape);
  Rng rng(seed);
  UrlNetTensors w = UrlNetTensors::zeros(shape);
  auto fill_uniform = [&](std::vector<double>& t, double limit) {
    for (double& v : t) v = static_cast<double>(static_cast<float>(rng.uniform(-limit, limit)));
  };
  fill_uniform(w.embedding, 0.05);
  const auto fan_in = static_cast<double>(shape.kernel * shape.embed_dim);
  const auto fan_out = static_cast<double>(shape.kernel * shape.filters);
  fill_uniform(w.conv, std::sqrt(6.0 / (fan_in + fan_out)));
  fill_uniform(w.dense, std::sqrt(6.0 / (static_cast<double>(shape.filters) + 1.0)));
  return UrlNetModel(shape, std::move(w));
}

class UrlNetTrainer {
 public:
  static void set_weights(UrlNetModel& model, const UrlNetTensors& w) {
    model.weights_ = w;
    model.projection_ = project(model.shape_, model.weights_);
  }
};

UrlNetTrainResult train_urlnet(std::span<const UrlEncoding> encodings, std::span<const Label> labels,
                               const UrlNetParams& params) {
  if (encodings.size() != labels.size()) throw DataError("url training: encodings/labels mismatch");
  if (encodings.empty()) throw DataError("url training: empty training set");
  const bool has_p = std::find(labels.begin(), labels.end(), Label::Phishing) != labels.end();
  const bool has_l = std::find(labels.begin(), labels.end(), Label::Legitimate) != labels.end();
  if (!has_p || !has_l) throw DataError("url training: both classes must be present");
  if (params.batch == 0) throw ConfigError("url training: batch must be positive");

  UrlNetTrainResult result;
  bool all_identical = true;
  for (const auto& e : encodings) {
    if (e.indices != encodings.front().indices) {
      all_identical = false;
      break;
    }
  }
  if (all_identical) {
    result.warnings.push_back(
        "all url encodings are identical while labels are mixed; the task is not separable");
  }

  result.model = init_urlnet(params.shape, params.seed);
  UrlNetTensors weights = result.model.weights();
  UrlNetTensors m1 = UrlNetTensors::zeros(params.shape);
  UrlNetTensors m2 = UrlNetTensors::zeros(params.shape);

  Rng rng(Rng::derive(params.seed, 1));
  std::vector<std::size_t> order(encodings.size());
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t step = 0;

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += params.batch) {
      const std::size_t end = std::min(order.size(), start + params.batch);
      UrlNetTensors grad = UrlNetTensors::zeros(params.shape);
      for (std::size_t i = start; i < end; ++i) {
        epoch_loss += result.model.accumulate_gradient(encodings[order[i]].indices,
                                                       labels[order[i]], grad);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      ++step;
      const double bias1 = 1.0 - std::pow(params.adam_beta1, static_cast<double>(step));
      const double bias2 = 1.0 - std::pow(params.adam_beta2, static_cast<double>(step));
      const double lr = params.learning_rate * std::sqrt(bias2) / bias1;

      auto update = [&](std::vector<double>& w, std::vector<double>& g, std::vector<double>& a,
                        std::vector<double>& b) {
        for (std::size_t j = 0; j < w.size(); ++j) {
          const double gj = g[j] * scale;
          a[j] = params.adam_beta1 * a[j] + (1.0 - params.adam_beta1) * gj;
          b[j] = params.adam_beta2 * b[j] + (1.0 - params.adam_beta2) * gj * gj;
          w[j] -= lr * a[j] / (std::sqrt(b[j]) + params.adam_epsilon);
        }
      };
      update(weights.embedding, grad.embedding, m1.embedding, m2.embedding);
      update(weights.conv, grad.conv, m1.conv, m2.conv);
      update(weights.conv_bias, grad.conv_bias, m1.conv_bias, m2.conv_bias);
      update(weights.dense, grad.dense, m1.dense, m2.dense);
      update(weights.dense_bias, grad.dense_bias, m1.dense_bias, m2.dense_bias);
      UrlNetTrainer::set_weights(result.model, weights);
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
  }

  weights.for_each([](const char*, std::vector<double>& t) {
    for (double& v : t) v = static_cast<double>(static_cast<float>(v));
  });
  result.model = UrlNetModel(params.shape, std::move(weights));
  return result;
}

}  // namespace phishkey
