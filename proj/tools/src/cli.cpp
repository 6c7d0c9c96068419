#include "phishkey_cli/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>

#include "phishkey/bundle.hpp"
#include "phishkey/config.hpp"
#include "phishkey/detectors.hpp"
#include "phishkey/error.hpp"
#include "phishkey/harness.hpp"
#include "phishkey/html_tokenizer.hpp"
#include "phishkey/metrics.hpp"
#include "phishkey/pipeline.hpp"
#include "phishkey/synthetic.hpp"

namespace phishkey::cli {
namespace {

namespace fs = std::filesystem;

struct ConfigArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--set", overrides, "Override a config value, e.g. --set forest.n_trees=50");
    cmd->add_option("--seed", seed, "Seed for splits and every trained component");
  }

  RunConfig load() const {
    RunConfig c = load_config(config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path), overrides);
    if (seed) c.seed = seed;
    return c;
  }
};

struct CorpusArgs {
  std::string path;
  std::string provenance;

  void attach(CLI::App* cmd, const char* flag = "--corpus", const char* help = "Corpus (JSONL file or directory)") {
    cmd->add_option(flag, path, help)->required();
  }

  LoadedCorpus load(std::ostream& err) const {
    const fs::path p(path);
    const CorpusFormat format = fs::is_directory(p) ? CorpusFormat::Directory : CorpusFormat::Jsonl;
    LoadedCorpus loaded = load_corpus(p, format, provenance.empty() ? p.stem().string() : provenance);
    for (const std::string& m : loaded.report.messages) err << "warning: " << m << '\n';
    return loaded;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::string read_file(const std::string& path) {
  if (path == "-") return std::string(std::istreambuf_iterator<char>(std::cin), {});
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

DetectorFactory make_factory(const RunConfig& config, std::uint64_t seed, std::ostream& err) {
  if (config.harness.pipeline == "label-oracle") return label_oracle_factory();
  DetectorOptions options;
  options.pipeline = config.pipeline_config(seed);
  options.crop_baseline = config.harness.crop_baseline;
  options.crop_words = config.harness.crop_words;
  options.on_trained = [&err](const TrainReport& r) {
    err << "  validation F1: url " << fmt(r.val_f1_url) << ", html " << fmt(r.val_f1_html) << ", fused "
        << fmt(r.val_f1_fused) << '\n';
    for (const std::string& w : r.warnings) err << "  warning: " << w << '\n';
  };
  return phishkey_factory(std::move(options));
}

// Shared body of evaluate, reduce-sweep and inject-eval.
void run_and_write(const Corpus& corpus, const RunConfig& config, std::vector<double> fractions,
                   const Corpus* donors, const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  const std::uint64_t seed = config.require_seed();
  ExperimentOptions options;
  options.dataset = corpus.provenance();
  options.folds = config.harness.folds;
  options.fractions = std::move(fractions);
  options.seed = seed;
  options.donors = donors;
  options.injection_words = config.harness.injection_words;
  options.progress = [&err](std::string_view msg) { err << msg << '\n'; };

  const std::vector<ResultRow> rows = run_experiment(corpus, make_factory(config, seed, err), options);
  const std::vector<MethodReport> reports = summarize_rows(rows);

  fs::create_directories(out_dir);
  auto results = open_out(out_dir / "results.csv");
  write_results_csv(rows, results);
  auto summary = open_out(out_dir / "summary.csv");
  write_summary_csv(reports, summary);

  for (const MethodReport& r : reports) {
    out << r.injection << ' ' << r.method << " @" << r.reduction << ": f1 " << fmt(r.summary.mean.f1) << " +- "
        << fmt(r.summary.stddev.f1) << ", accuracy " << fmt(r.summary.mean.accuracy) << '\n';
  }
  out << "wrote " << (out_dir / "results.csv").string() << " and " << (out_dir / "summary.csv").string() << '\n';
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"PhishKey: phishing page detection from URL characters and CAPE-selected HTML tokens", "phishkey"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a corpus and write it as canonical JSONL");
  CorpusArgs ingest_in;
  std::string ingest_out;
  ingest_in.attach(ingest, "--input", "JSONL file or phishing/ legitimate/ directory tree");
  ingest->add_option("--provenance", ingest_in.provenance, "Corpus name (default: file stem)");
  ingest->add_option("--output", ingest_out, "Canonical JSONL output")->required();

  // train
  auto* train = app.add_subcommand("train", "Train a model bundle on the 64/16/20 split of a corpus");
  CorpusArgs train_in;
  ConfigArgs train_cfg;
  std::string train_out;
  train_in.attach(train);
  train_cfg.attach(train);
  train->add_option("--output", train_out, "Model bundle to write")->required();

  // evaluate / reduce-sweep / inject-eval
  auto* evaluate = app.add_subcommand("evaluate", "k-fold cross-validation; writes results.csv and summary.csv");
  auto* sweep = app.add_subcommand("reduce-sweep", "Cross-validation at every configured training fraction");
  auto* inject = app.add_subcommand("inject-eval", "Cross-validation on clean and injection-attacked test folds");
  CorpusArgs exp_in;
  ConfigArgs exp_cfg;
  std::string exp_out;
  CorpusArgs donors_in;
  for (auto* cmd : {evaluate, sweep, inject}) {
    exp_in.attach(cmd);
    exp_cfg.attach(cmd);
    cmd->add_option("--out", exp_out, "Output directory")->required();
  }
  donors_in.attach(inject, "--donors", "Donor corpus from a different dataset");

  // predict
  auto* predict = app.add_subcommand("predict", "Score one page with a model bundle");
  std::string bundle_path;
  std::string url;
  std::string html_file;
  std::string html_inline;
  predict->add_option("--bundle", bundle_path, "Model bundle")->required()->check(CLI::ExistingFile);
  predict->add_option("--url", url, "Page URL")->required();
  auto* html_file_opt = predict->add_option("--html-file", html_file, "HTML file, or - for stdin");
  predict->add_option("--html", html_inline, "HTML given inline")->excludes(html_file_opt);

  // export-features
  auto* features = app.add_subcommand("export-features", "Write CAPE bag-of-words rows, vocabulary and embeddings");
  std::string features_bundle;
  CorpusArgs features_in;
  std::string features_out;
  features->add_option("--bundle", features_bundle, "Model bundle")->required()->check(CLI::ExistingFile);
  features_in.attach(features);
  features->add_option("--out", features_out, "Output directory")->required();

  // tokenize
  auto* tok = app.add_subcommand("tokenize", "Print the HTML tokens of a file, one per line");
  std::string tok_file = "-";
  tok->add_option("file", tok_file, "HTML file, or - for stdin");

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic corpus as JSONL");
  SyntheticOptions gen_opts;
  bool gen_donor = false;
  std::string gen_out;
  gen->add_option("--samples", gen_opts.samples, "Number of pages")->capture_default_str();
  gen->add_option("--seed", gen_opts.seed, "Generator seed")->capture_default_str();
  gen->add_flag("--donor", gen_donor, "Long pages in a second dialect, for use as injection donors");
  gen->add_option("--dialect", gen_opts.dialect, "Pseudo-word dialect")->capture_default_str();
  gen->add_option("--url-signal", gen_opts.url_signal, "Probability a URL shows its class style")
      ->capture_default_str();
  gen->add_option("--provenance", gen_opts.provenance, "Corpus name")->capture_default_str();
  gen->add_option("--output", gen_out, "JSONL output")->required();

  // config
  auto* cfg = app.add_subcommand("config", "Print the effective configuration as JSON");
  ConfigArgs cfg_args;
  cfg_args.attach(cfg);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  if (*ingest) {
    const LoadedCorpus loaded = ingest_in.load(err);
    save_corpus_jsonl(loaded.corpus, ingest_out);
    const ClassCounts counts = loaded.corpus.class_counts();
    out << "records " << loaded.report.records_read << ", malformed " << loaded.report.malformed << ", kept "
        << loaded.corpus.size() << " (phishing " << counts.phishing << ", legitimate " << counts.legitimate << ")\n";
  } else if (*train) {
    const RunConfig config = train_cfg.load();
    const std::uint64_t seed = config.require_seed();
    const LoadedCorpus loaded = train_in.load(err);
    const SplitCorpora split = materialize(loaded.corpus, make_splits(loaded.corpus, seed));
    err << "train " << split.train.size() << ", validation " << split.validation.size() << ", test "
        << split.test.size() << '\n';
    TrainReport report;
    const PhishKeyModel model = train_phishkey(split.train, split.validation, config.pipeline_config(seed), &report);
    for (const std::string& w : report.warnings) err << "warning: " << w << '\n';
    save_model_bundle(model, train_out);

    const PhishKeyClassifier classifier(model);
    std::vector<Label> truth;
    std::vector<double> p_final;
    for (const Sample& s : split.test.samples()) {
      truth.push_back(s.label);
      p_final.push_back(classifier.predict(s).vote.p_final);
    }
    const Metrics m = compute_metrics(confusion_from_proba(truth, p_final));
    out << "weights w_url=" << fmt(model.weights.w_url) << " w_html=" << fmt(model.weights.w_html) << '\n'
        << "validation f1 url=" << fmt(report.val_f1_url) << " html=" << fmt(report.val_f1_html)
        << " fused=" << fmt(report.val_f1_fused) << '\n'
        << "test accuracy=" << fmt(m.accuracy) << " f1=" << fmt(m.f1) << " precision=" << fmt(m.precision)
        << " recall=" << fmt(m.recall) << '\n'
        << "wrote " << train_out << '\n';
  } else if (*evaluate || *sweep || *inject) {
    const RunConfig config = exp_cfg.load();
    config.require_seed();
    const LoadedCorpus loaded = exp_in.load(err);
    if (*inject) {
      const LoadedCorpus donors = donors_in.load(err);
      run_and_write(loaded.corpus, config, {1.0}, &donors.corpus, exp_out, out, err);
    } else {
      const std::vector<double> fractions = *sweep ? config.harness.reduction_fractions : std::vector<double>{1.0};
      run_and_write(loaded.corpus, config, fractions, nullptr, exp_out, out, err);
    }
  } else if (*predict) {
    const std::string html = html_file.empty() ? html_inline : read_file(html_file);
    const PhishKeyModel model = load_model_bundle(bundle_path);
    const PhishKeyClassifier classifier(model);
    const Prediction p = classifier.predict(url, html);
    out << "p_url=" << fmt(p.p_url) << '\n'
        << "p_html=" << fmt(p.p_html) << '\n'
        << "p_final=" << fmt(p.vote.p_final) << '\n'
        << "label=" << to_string(p.vote.label) << '\n';
  } else if (*features) {
    const PhishKeyModel model = load_model_bundle(features_bundle);
    const PhishKeyClassifier classifier(model);
    const LoadedCorpus loaded = features_in.load(err);
    std::vector<BowVector> rows;
    rows.reserve(loaded.corpus.size());
    for (const Sample& s : loaded.corpus.samples()) rows.push_back(classifier.features(tokenize_sample(s)));
    const fs::path dir(features_out);
    fs::create_directories(dir);
    auto bow = open_out(dir / "features.tsv");
    write_bow_triplets(rows, bow);
    auto labels = open_out(dir / "labels.tsv");
    for (const Sample& s : loaded.corpus.samples()) labels << s.id << '\t' << to_string(s.label) << '\n';
    auto vocab = open_out(dir / "vocabulary.txt");
    write_vocabulary(model.vocabulary, vocab);
    auto emb = open_out(dir / "embeddings.txt");
    write_embeddings_text(model.embeddings, emb);
    out << "wrote " << rows.size() << " rows over " << model.vocabulary.size() << " features to " << dir.string()
        << '\n';
  } else if (*tok) {
    for (const std::string& t : tokenize(read_file(tok_file))) out << t << '\n';
  } else if (*gen) {
    SyntheticOptions o = gen_opts;
    if (gen_donor) {
      SyntheticOptions d = donor_options(gen_opts.seed, gen_opts.samples);
      if (gen->count("--dialect")) d.dialect = gen_opts.dialect;
      if (gen->count("--provenance")) d.provenance = gen_opts.provenance;
      d.url_signal = gen_opts.url_signal;
      o = d;
    }
    const Corpus corpus = generate_corpus(o);
    save_corpus_jsonl(corpus, gen_out);
    const ClassCounts counts = corpus.class_counts();
    out << "wrote " << corpus.size() << " samples (phishing " << counts.phishing << ", legitimate "
        << counts.legitimate << ") to " << gen_out << '\n';
  } else if (*cfg) {
    out << config_to_json(cfg_args.load());
  }
  return kOk;
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return run(args, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const ModelError& e) {
    err << "model error: " << e.what() << '\n';
    return kModelError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace phishkey::cli
