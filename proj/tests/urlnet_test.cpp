#include <gtest/gtest.h>

#include <cmath>

#include "phishkey/error.hpp"
#include "phishkey/random.hpp"
#include "phishkey/urlnet.hpp"
#include "support/oracles.hpp"

using namespace phishkey;

namespace {

UrlNetShape tiny_shape() {
  UrlNetShape s;
  s.vocab = 8;
  s.length = 12;
  s.embed_dim = 4;
  s.filters = 2;
  s.kernel = 3;
  return s;
}

UrlNetTensors random_weights(const UrlNetShape& s, Rng& rng, double scale = 0.5) {
  UrlNetTensors w = UrlNetTensors::zeros(s);
  w.for_each([&](const char*, std::vector<double>& t) {
    for (double& x : t) x = rng.uniform(-scale, scale);
  });
  return w;
}

std::vector<std::uint32_t> random_indices(const UrlNetShape& s, Rng& rng) {
  std::vector<std::uint32_t> idx(s.length);
  for (auto& i : idx) i = static_cast<std::uint32_t>(rng.uniform_index(s.vocab));
  return idx;
}

}  // namespace

TEST(UrlEncoding, PaddingAndTruncation) {
  const UrlEncoding short_url = encode_url("http://a.b");
  ASSERT_EQ(short_url.indices.size(), 180u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_GE(short_url.indices[i], 2u);
  for (std::size_t i = 10; i < 180; ++i) EXPECT_EQ(short_url.indices[i], 0u);

  std::string long_url(300, 'x');
  long_url[179] = 'y';
  long_url[200] = 'z';
  const UrlEncoding lu = encode_url(long_url);
  EXPECT_EQ(lu.indices[179], Charset::ascii_printable().index_of('y'));
  EXPECT_EQ(lu.indices, encode_url(long_url.substr(0, 180)).indices);

  const UrlEncoding empty = encode_url("");
  EXPECT_EQ(empty.indices, std::vector<std::uint32_t>(180, 0));
}

TEST(UrlEncoding, LowercaseAndUnknown) {
  const Charset& cs = Charset::ascii_printable();
  EXPECT_EQ(cs.size(), 97u);
  const UrlEncoding e = encode_url("A\xC3\xA9", cs, 4);
  EXPECT_EQ(e.indices[0], cs.index_of('a'));
  EXPECT_EQ(e.indices[1], Charset::kUnknown);
  EXPECT_EQ(e.indices[2], Charset::kUnknown);
  EXPECT_EQ(e.indices[3], Charset::kPad);
}

TEST(UrlNet, ForwardMatchesNaiveConvolution) {
  Rng rng(1);
  UrlNetShape s;
  s.filters = 16;
  for (int round = 0; round < 20; ++round) {
    const UrlNetTensors w = random_weights(s, rng, 0.2);
    const UrlNetModel m(s, w);
    const auto idx = random_indices(s, rng);
    EXPECT_NEAR(m.predict_proba(idx), oracle::urlnet_proba(s, w, idx), 1e-9);
  }
}

TEST(UrlNet, LogisticRange) {
  UrlNetShape s = tiny_shape();
  UrlNetTensors zero = UrlNetTensors::zeros(s);
  EXPECT_DOUBLE_EQ(UrlNetModel(s, zero).predict_proba(std::vector<std::uint32_t>(12, 3)), 0.5);
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const UrlNetModel m(s, random_weights(s, rng, 2.0));
    const double p = m.predict_proba(random_indices(s, rng));
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
}

TEST(UrlNet, GradientMatchesCentralDifferences) {
  const UrlNetShape s = tiny_shape();
  Rng rng(3);
  for (int round = 0; round < 5; ++round) {
    const UrlNetTensors w = random_weights(s, rng);
    const auto idx = random_indices(s, rng);
    const Label label = round % 2 ? Label::Phishing : Label::Legitimate;
    UrlNetTensors grad = UrlNetTensors::zeros(s);
    UrlNetModel(s, w).accumulate_gradient(idx, label, grad);

    const auto loss = [&](const UrlNetTensors& t) {
      UrlNetTensors scratch = UrlNetTensors::zeros(s);
      return UrlNetModel(s, t).accumulate_gradient(idx, label, scratch);
    };
    const double h = 1e-6;
    std::vector<std::vector<double>*> analytic;
    grad.for_each([&](const char*, std::vector<double>& t) { analytic.push_back(&t); });
    std::size_t tensor = 0;
    UrlNetTensors probe = w;
    probe.for_each([&](const char* name, std::vector<double>& t) {
      for (std::size_t i = 0; i < t.size(); ++i) {
        const double keep = t[i];
        t[i] = keep + h;
        const double up = loss(probe);
        t[i] = keep - h;
        const double down = loss(probe);
        t[i] = keep;
        const double numeric = (up - down) / (2 * h);
        const double a = (*analytic[tensor])[i];
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-7});
        EXPECT_LT(std::abs(a - numeric) / denom, 1e-4) << name << "[" << i << "] analytic " << a << " numeric " << numeric;
      }
      ++tensor;
    });
  }
}

TEST(UrlNet, MaxPoolRoutesGradientToArgmaxOnly) {
  UrlNetShape s;
  s.vocab = 4;
  s.length = 6;
  s.embed_dim = 1;
  s.filters = 1;
  s.kernel = 1;
  UrlNetTensors w = UrlNetTensors::zeros(s);
  w.embedding = {0.0, 0.1, 0.5, 0.2};
  w.conv = {1.0};
  w.dense = {1.0};
  // Character 2 (activation 0.5) sits only at position 3: the argmax.
  const std::vector<std::uint32_t> idx = {1, 3, 1, 2, 3, 0};
  UrlNetTensors grad = UrlNetTensors::zeros(s);
  UrlNetModel(s, w).accumulate_gradient(idx, Label::Phishing, grad);
  EXPECT_NE(grad.embedding[2], 0.0);
  EXPECT_EQ(grad.embedding[0], 0.0);
  EXPECT_EQ(grad.embedding[1], 0.0);
  EXPECT_EQ(grad.embedding[3], 0.0);
}

TEST(UrlNet, ToyTaskLettersZ) {
  Rng rng(4);
  const auto make = [&](std::size_t n, std::vector<UrlEncoding>& enc, std::vector<Label>& labels) {
    const std::string letters = "abcdefghijklmnopqrstuvwxy";
    for (std::size_t i = 0; i < n; ++i) {
      std::string u = "http://";
      const std::size_t len = 8 + rng.uniform_index(20);
      for (std::size_t k = 0; k < len; ++k) u += letters[rng.uniform_index(letters.size())];
      const bool phish = i % 2 == 0;
      if (phish) u[7 + rng.uniform_index(len)] = 'z';
      enc.push_back(encode_url(u + ".com"));
      labels.push_back(phish ? Label::Phishing : Label::Legitimate);
    }
  };
  std::vector<UrlEncoding> train_x, val_x;
  std::vector<Label> train_y, val_y;
  make(160, train_x, train_y);
  make(40, val_x, val_y);
  UrlNetParams p;
  p.shape.filters = 32;
  p.epochs = 30;
  p.learning_rate = 5e-3;
  p.batch = 16;
  const UrlNetTrainResult r = train_urlnet(train_x, train_y, p);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < val_x.size(); ++i) {
    ok += (r.model.predict_proba(val_x[i]) >= 0.5) == (val_y[i] == Label::Phishing);
  }
  EXPECT_GE(static_cast<double>(ok) / val_x.size(), 0.95);
  EXPECT_LT(r.epoch_loss.back(), 0.1);
}

TEST(UrlNet, DeterministicAndZeroEpochsIsInit) {
  Rng rng(5);
  UrlNetParams p;
  p.shape = tiny_shape();
  p.epochs = 3;
  p.batch = 4;
  p.seed = 11;
  std::vector<UrlEncoding> x;
  std::vector<Label> y;
  for (int i = 0; i < 20; ++i) {
    x.push_back(UrlEncoding{random_indices(p.shape, rng)});
    y.push_back(i % 2 ? Label::Phishing : Label::Legitimate);
  }
  const auto a = train_urlnet(x, y, p);
  const auto b = train_urlnet(x, y, p);
  EXPECT_EQ(a.model.weights(), b.model.weights());
  p.epochs = 0;
  EXPECT_EQ(train_urlnet(x, y, p).model.weights(), init_urlnet(p.shape, p.seed).weights());
  // Trained weights are float-representable.
  a.model.weights().for_each([](const char*, const std::vector<double>& t) {
    for (double v : t) ASSERT_EQ(v, static_cast<double>(static_cast<float>(v)));
  });
}

TEST(UrlNet, IdenticalInputsWithMixedLabelsWarn) {
  UrlNetParams p;
  p.shape = tiny_shape();
  p.epochs = 1;
  const std::vector<UrlEncoding> x(6, UrlEncoding{std::vector<std::uint32_t>(12, 2)});
  const std::vector<Label> y = {Label::Phishing, Label::Legitimate, Label::Phishing,
                                Label::Legitimate, Label::Phishing, Label::Legitimate};
  EXPECT_FALSE(train_urlnet(x, y, p).warnings.empty());
  EXPECT_THROW(train_urlnet(x, std::vector<Label>(6, Label::Phishing), p), DataError);
}

TEST(UrlNet, ConstructorValidates) {
  const UrlNetShape s = tiny_shape();
  UrlNetTensors w = UrlNetTensors::zeros(s);
  w.dense.pop_back();
  EXPECT_THROW(UrlNetModel(s, w), ModelError);
  w = UrlNetTensors::zeros(s);
  w.conv[0] = std::nan("");
  EXPECT_THROW(UrlNetModel(s, w), ModelError);
}
