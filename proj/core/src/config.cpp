#include "phishkey/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "phishkey/error.hpp"
#include "phishkey/random.hpp"

namespace phishkey {
namespace {

using nlohmann::json;

std::string_view rule_name(FeatureRule rule) {
  switch (rule) {
    case FeatureRule::Sqrt: return "sqrt";
    case FeatureRule::Log2: return "log2";
    case FeatureRule::All: return "all";
  }
  return "sqrt";
}

json to_json(const RunConfig& c) {
  const PipelineConfig& p = c.pipeline;
  json j;
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  j["tokenizer"] = {{"prune_long_tokens", p.embeddings.prune_long_tokens}};
  j["embeddings"] = {{"dim", p.embeddings.dim},
                     {"window", p.embeddings.window},
                     {"negatives", p.embeddings.negatives},
                     {"epochs", p.embeddings.epochs},
                     {"min_count", p.embeddings.min_count},
                     {"learning_rate", p.embeddings.learning_rate},
                     {"subsample", p.embeddings.subsample},
                     {"threads", p.embeddings.threads}};
  j["cape"] = {{"m", p.cape.m},
               {"vocab_cap", p.cape.vocab_cap},
               {"kmeans_clusters", p.cape.centroids.kmeans_clusters},
               {"kmeans_iterations", p.cape.centroids.kmeans_iterations}};
  j["forest"] = {{"n_trees", p.forest.n_trees},
                 {"max_depth", p.forest.max_depth},
                 {"min_leaf", p.forest.min_leaf},
                 {"feature_rule", rule_name(p.forest.feature_rule)},
                 {"bootstrap", p.forest.bootstrap},
                 {"threads", p.forest.threads}};
  const UrlNetParams& u = p.urlnet;
  j["urlnet"] = {{"length", u.shape.length},
                 {"embed_dim", u.shape.embed_dim},
                 {"filters", u.shape.filters},
                 {"kernel", u.shape.kernel},
                 {"epochs", u.epochs},
                 {"learning_rate", u.learning_rate},
                 {"batch", u.batch},
                 {"adam_beta1", u.adam_beta1},
                 {"adam_beta2", u.adam_beta2},
                 {"adam_epsilon", u.adam_epsilon}};
  j["ensemble"] = {{"grid_step", p.grid_step}};
  const HarnessConfig& h = c.harness;
  j["harness"] = {{"folds", h.folds},
                  {"reduction_fractions", h.reduction_fractions},
                  {"injection_words", h.injection_words},
                  {"crop_baseline", h.crop_baseline},
                  {"crop_words", h.crop_words},
                  {"pipeline", h.pipeline}};
  return j;
}

bool compatible(const json& def, const json& value) {
  if (def.is_number_unsigned()) return value.is_number_unsigned();
  if (def.is_number()) return value.is_number();
  if (def.is_boolean()) return value.is_boolean();
  if (def.is_string()) return value.is_string();
  if (def.is_array()) {
    if (!value.is_array()) return false;
    for (const json& v : value) {
      if (!v.is_number()) return false;
    }
    return true;
  }
  return false;
}

void merge(json& base, const json& user, const std::string& where) {
  if (!user.is_object()) throw ConfigError(where.empty() ? "config must be a JSON object" : where + " must be an object");
  for (const auto& [key, value] : user.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    json& slot = base[key];
    if (path == "seed") {
      if (!value.is_null() && !value.is_number_unsigned()) {
        throw ConfigError("seed must be a non-negative integer");
      }
      slot = value;
    } else if (slot.is_object()) {
      merge(slot, value, path);
    } else {
      if (!compatible(slot, value)) {
        throw ConfigError("config key '" + path + "' has the wrong type (expected " +
                          std::string(slot.type_name()) + ", got " + value.dump() + ")");
      }
      slot = value;
    }
  }
}

template <typename T>
T get(const json& j, const char* section, const char* key) {
  return j.at(section).at(key).get<T>();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

RunConfig from_json(const json& j) {
  RunConfig c;
  if (!j.at("seed").is_null()) c.seed = j.at("seed").get<std::uint64_t>();
  PipelineConfig& p = c.pipeline;
  p.embeddings.prune_long_tokens = get<bool>(j, "tokenizer", "prune_long_tokens");
  p.embeddings.dim = get<std::size_t>(j, "embeddings", "dim");
  p.embeddings.window = get<std::size_t>(j, "embeddings", "window");
  p.embeddings.negatives = get<std::size_t>(j, "embeddings", "negatives");
  p.embeddings.epochs = get<std::size_t>(j, "embeddings", "epochs");
  p.embeddings.min_count = get<std::size_t>(j, "embeddings", "min_count");
  p.embeddings.learning_rate = get<double>(j, "embeddings", "learning_rate");
  p.embeddings.subsample = get<double>(j, "embeddings", "subsample");
  p.embeddings.threads = get<std::size_t>(j, "embeddings", "threads");
  p.cape.m = get<std::size_t>(j, "cape", "m");
  p.cape.vocab_cap = get<std::size_t>(j, "cape", "vocab_cap");
  p.cape.centroids.kmeans_clusters = get<std::size_t>(j, "cape", "kmeans_clusters");
  p.cape.centroids.kmeans_iterations = get<std::size_t>(j, "cape", "kmeans_iterations");
  p.forest.n_trees = get<std::size_t>(j, "forest", "n_trees");
  p.forest.max_depth = get<std::size_t>(j, "forest", "max_depth");
  p.forest.min_leaf = get<std::size_t>(j, "forest", "min_leaf");
  const auto rule = get<std::string>(j, "forest", "feature_rule");
  if (rule == "sqrt") {
    p.forest.feature_rule = FeatureRule::Sqrt;
  } else if (rule == "log2") {
    p.forest.feature_rule = FeatureRule::Log2;
  } else if (rule == "all") {
    p.forest.feature_rule = FeatureRule::All;
  } else {
    throw ConfigError("forest.feature_rule must be sqrt, log2 or all, got '" + rule + "'");
  }
  p.forest.bootstrap = get<bool>(j, "forest", "bootstrap");
  p.forest.threads = get<std::size_t>(j, "forest", "threads");
  UrlNetParams& u = p.urlnet;
  u.shape.length = get<std::size_t>(j, "urlnet", "length");
  u.shape.embed_dim = get<std::size_t>(j, "urlnet", "embed_dim");
  u.shape.filters = get<std::size_t>(j, "urlnet", "filters");
  u.shape.kernel = get<std::size_t>(j, "urlnet", "kernel");
  u.epochs = get<std::size_t>(j, "urlnet", "epochs");
  u.learning_rate = get<double>(j, "urlnet", "learning_rate");
  u.batch = get<std::size_t>(j, "urlnet", "batch");
  u.adam_beta1 = get<double>(j, "urlnet", "adam_beta1");
  u.adam_beta2 = get<double>(j, "urlnet", "adam_beta2");
  u.adam_epsilon = get<double>(j, "urlnet", "adam_epsilon");
  p.grid_step = get<double>(j, "ensemble", "grid_step");
  HarnessConfig& h = c.harness;
  h.folds = get<std::size_t>(j, "harness", "folds");
  h.reduction_fractions = get<std::vector<double>>(j, "harness", "reduction_fractions");
  h.injection_words = get<std::size_t>(j, "harness", "injection_words");
  h.crop_baseline = get<bool>(j, "harness", "crop_baseline");
  h.crop_words = get<std::size_t>(j, "harness", "crop_words");
  h.pipeline = get<std::string>(j, "harness", "pipeline");

  require(p.embeddings.dim > 0, "embeddings.dim must be positive");
  require(p.embeddings.window > 0, "embeddings.window must be positive");
  require(p.embeddings.epochs > 0, "embeddings.epochs must be positive");
  require(p.embeddings.min_count > 0, "embeddings.min_count must be positive");
  require(p.embeddings.learning_rate > 0.0, "embeddings.learning_rate must be positive");
  require(p.embeddings.subsample >= 0.0, "embeddings.subsample must be non-negative");
  require(p.cape.m > 0, "cape.m must be positive");
  require(p.cape.vocab_cap > 0, "cape.vocab_cap must be positive");
  require(p.forest.n_trees > 0, "forest.n_trees must be positive");
  require(p.forest.min_leaf > 0, "forest.min_leaf must be positive");
  require(u.shape.kernel > 0 && u.shape.kernel <= u.shape.length, "urlnet.kernel must be in [1, length]");
  require(u.shape.filters > 0 && u.shape.embed_dim > 0, "urlnet.filters and urlnet.embed_dim must be positive");
  require(u.epochs > 0 && u.batch > 0, "urlnet.epochs and urlnet.batch must be positive");
  require(u.learning_rate > 0.0, "urlnet.learning_rate must be positive");
  const double inverse = 1.0 / p.grid_step;
  const long steps = std::lround(inverse);
  require(p.grid_step > 0.0 && steps >= 2 && steps % 2 == 0 && std::abs(inverse - static_cast<double>(steps)) < 1e-9,
          "ensemble.grid_step must divide 1 into an even number of intervals");
  require(h.folds >= 2, "harness.folds must be at least 2");
  require(!h.reduction_fractions.empty(), "harness.reduction_fractions must not be empty");
  for (double f : h.reduction_fractions) {
    require(f > 0.0 && f <= 1.0, "harness.reduction_fractions entries must be in (0, 1]");
  }
  require(h.injection_words > 0 && h.crop_words > 0, "harness word counts must be positive");
  require(h.pipeline == "phishkey" || h.pipeline == "label-oracle",
          "harness.pipeline must be 'phishkey' or 'label-oracle'");
  return c;
}

void apply_override(json& doc, const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + text + "' is not key=value");
  const std::string key = text.substr(0, eq);
  const std::string raw = text.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  // Build {"a": {"b": value}} and merge it, so overrides get the same checks.
  json patch = value;
  std::string rest = key;
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    const auto dot = rest.find('.', pos);
    parts.push_back(rest.substr(pos, dot - pos));
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (it->empty()) throw ConfigError("override key '" + key + "' has an empty component");
    patch = json{{*it, patch}};
  }
  merge(doc, patch, "");
}

}  // namespace

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw ConfigError("a seed is required: set \"seed\" in the config or pass --seed");
  return *seed;
}

PipelineConfig RunConfig::pipeline_config(std::uint64_t s) const {
  PipelineConfig p = pipeline;
  p.embeddings.seed = Rng::derive(s, 1);
  p.cape.centroids.seed = Rng::derive(s, 2);
  p.forest.seed = Rng::derive(s, 3);
  p.urlnet.seed = Rng::derive(s, 4);
  return p;
}

RunConfig parse_config(std::string_view json_text, const std::vector<std::string>& overrides) {
  json doc = to_json(RunConfig{});
  const std::string text(json_text);
  if (text.find_first_not_of(" \t\r\n") != std::string::npos) {
    json user;
    try {
      user = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    merge(doc, user, "");
  }
  for (const std::string& o : overrides) apply_override(doc, o);
  try {
    return from_json(doc);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

RunConfig load_config(const std::optional<std::filesystem::path>& path,
                      const std::vector<std::string>& overrides) {
  if (!path) return parse_config("", overrides);
  std::ifstream in(*path);
  if (!in) throw ConfigError("cannot read config file " + path->string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), overrides);
}

std::string config_to_json(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

}  // namespace phishkey
