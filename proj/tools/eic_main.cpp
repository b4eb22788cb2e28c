#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eic/compete.hpp"
#include "eic/corpus.hpp"
#include "eic/embed.hpp"
#include "eic/error.hpp"
#include "eic/fixture_suite.hpp"
#include "eic/pipeline.hpp"

namespace {

using namespace eic;

struct Options {
  std::string dataset;
  std::string embeddings;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::vector<std::string> ablate;

  std::string mode = "soft_mask";
  std::size_t top_k = 1;
  std::size_t max_steps = 2;
  std::size_t beam_width = 2;
  double lambda = 1.0;
  std::string retriever = "cosine";
  std::string integrator = "cosine";
  double bm25_k1 = 1.2;
  double bm25_b = 0.75;

  std::string scorer_cmd;
  long scorer_timeout_ms = 30000;
  bool scorer_fallback = false;

  double margin = 0.5;
  double learning_rate = 0.05;
  std::size_t epochs = 200;

  // fixture
  std::string out_dataset;
  std::string out_embeddings;
  std::size_t questions = 200;
  std::uint64_t vocab_seed = 7;
  std::string prefix = "s";

  // stage files
  std::string evidence;
  std::string predictions;
  std::string verifier;
  std::string out;

  // eval
  std::string methods;
  std::string train_dataset;
  std::string out_json;
  std::string out_csv;
};

Bm25Params bm25_params(const Options& o) { return Bm25Params{o.bm25_k1, o.bm25_b}; }

ScorerConfig scorer_config(const Options& o, const std::string& kind) {
  ScorerConfig config;
  config.kind = parse_scorer_kind(kind);
  config.bm25 = bm25_params(o);
  config.command = o.scorer_cmd;
  config.timeout = std::chrono::milliseconds(o.scorer_timeout_ms);
  config.fallback_to_cosine = o.scorer_fallback;
  return config;
}

ExtractorConfig extractor_config(const Options& o) {
  ExtractorConfig config;
  config.mode = parse_extract_mode(o.mode);
  config.top_k = o.top_k;
  config.max_steps = o.max_steps;
  config.beam_width = o.beam_width;
  config.lambda = o.lambda;
  config.validate();
  return config;
}

CompetitionConfig competition_config(const Options& o, const Ablations& ablations) {
  CompetitionConfig config;
  config.margin = o.margin;
  config.learning_rate = o.learning_rate;
  config.epochs = o.epochs;
  config.seed = o.seed;
  config.objective = ablations.no_competition ? Objective::Pointwise : Objective::Pairwise;
  config.validate();
  return config;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error("config", std::string("missing required option ") + flag);
}

Dataset load_required_dataset(const std::string& path, const char* flag) {
  require(path, flag);
  return load_dataset(path);
}

EmbeddingTable load_required_embeddings(const Options& o) {
  require(o.embeddings, "--embeddings");
  return load_embeddings(o.embeddings);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write '" + path + "'");
  out << text;
}

void cmd_fixture(const Options& o) {
  require(o.out_dataset, "--out-dataset");
  require(o.out_embeddings, "--out-embeddings");
  SuiteSpec spec;
  spec.questions = o.questions;
  spec.seed = o.seed;
  spec.vocab_seed = o.vocab_seed;
  spec.id_prefix = o.prefix;
  const FixtureSuite suite = make_fixture_suite(spec);
  write_dataset(suite.dataset, std::filesystem::path(o.out_dataset));
  write_embeddings(suite.embeddings, std::filesystem::path(o.out_embeddings));
}

void cmd_extract(const Options& o) {
  require(o.out, "--out");
  const Dataset dataset = load_required_dataset(o.dataset, "--dataset");
  const EmbeddingTable table = load_required_embeddings(o);
  ExtractionSettings settings;
  settings.extractor = extractor_config(o);
  settings.retriever = scorer_config(o, o.retriever);
  settings.integrator = scorer_config(o, o.integrator);
  settings.ablations = parse_ablations(o.ablate);
  settings.workers = o.workers;
  write_evidence(run_extraction(dataset, table, settings), std::filesystem::path(o.out));
}

void cmd_train_scorer(const Options& o) {
  require(o.evidence, "--evidence");
  require(o.out, "--out");
  const Dataset dataset = load_required_dataset(o.dataset, "--dataset");
  const EmbeddingTable table = load_required_embeddings(o);
  const auto evidence = read_evidence(std::filesystem::path(o.evidence));
  const auto examples = build_examples(dataset, table, evidence, bm25_params(o));
  const auto result = train_linear_verifier(examples, competition_config(o, parse_ablations(o.ablate)));
  save_verifier(result.verifier, o.out);
}

void cmd_answer(const Options& o) {
  require(o.evidence, "--evidence");
  require(o.out, "--out");
  const Dataset dataset = load_required_dataset(o.dataset, "--dataset");
  const EmbeddingTable table = load_required_embeddings(o);
  const auto evidence = read_evidence(std::filesystem::path(o.evidence));
  AnswerSettings settings;
  if (!o.verifier.empty()) settings.verifier = load_verifier(o.verifier);
  settings.external = scorer_config(o, "external");
  settings.independent = parse_ablations(o.ablate).no_competition;
  settings.bm25 = bm25_params(o);
  settings.workers = o.workers;
  write_predictions(run_answer(dataset, table, evidence, settings), std::filesystem::path(o.out));
}

std::vector<std::string> split_methods(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    std::string name = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!name.empty()) out.push_back(std::move(name));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw Error("config", "--methods names no method");
  return out;
}

void emit_reports(const Options& o, const std::vector<MethodReport>& reports) {
  const std::string json = report_to_json(reports) + "\n";
  if (!o.out_json.empty()) write_text(o.out_json, json);
  if (!o.out_csv.empty()) {
    std::ofstream out(o.out_csv);
    if (!out) throw Error("io", "cannot write '" + o.out_csv + "'");
    write_report_csv(reports, out);
  }
  if (o.out_json.empty() && o.out_csv.empty()) std::cout << json;
}

void cmd_eval(const Options& o) {
  const Dataset dataset = load_required_dataset(o.dataset, "--dataset");
  if (o.methods.empty()) {
    require(o.predictions, "--predictions");
    require(o.evidence, "--evidence");
    const auto predictions = read_predictions(std::filesystem::path(o.predictions));
    const auto evidence = read_evidence(std::filesystem::path(o.evidence));
    std::string name = o.mode + ablation_suffix(parse_ablations(o.ablate));
    emit_reports(o, {evaluate_run(std::move(name), dataset, predictions, evidence)});
    return;
  }

  const Dataset train = load_required_dataset(o.train_dataset, "--train-dataset");
  const EmbeddingTable table = load_required_embeddings(o);
  ExtractorConfig defaults = extractor_config(o);
  const std::string suffix = ablation_suffix(parse_ablations(o.ablate));
  std::vector<MethodReport> reports;
  for (const auto& method : split_methods(o.methods)) {
    MethodSpec spec = method_spec(method + suffix, defaults);
    spec.extraction.integrator = scorer_config(o, o.integrator);
    if (spec.extraction.extractor.mode != ExtractMode::OneOffTopK) {
      spec.extraction.retriever = scorer_config(o, o.retriever);
    }
    const CompetitionConfig competition = competition_config(o, spec.extraction.ablations);
    reports.push_back(run_method(spec, train, dataset, table, competition, o.workers).report);
  }
  emit_reports(o, reports);
}

void add_pipeline_options(CLI::App& app, Options& o) {
  app.add_option("--dataset", o.dataset, "Dataset JSON-lines file");
  app.add_option("--embeddings", o.embeddings, "word2vec text embeddings");
  app.add_option("--seed", o.seed, "Random seed")->capture_default_str();
  app.add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--ablate", o.ablate, "no_iterative | no_integration | no_competition (repeatable)");

  app.add_option("--mode", o.mode, "hard_mask | soft_mask | top_k | query_append")->capture_default_str();
  app.add_option("--top-k", o.top_k)->capture_default_str();
  app.add_option("--max-steps", o.max_steps)->capture_default_str();
  app.add_option("--beam-width", o.beam_width)->capture_default_str();
  app.add_option("--lambda", o.lambda, "Soft-mask softmax temperature")->capture_default_str();
  app.add_option("--retriever", o.retriever, "cosine | bm25 | external")->capture_default_str();
  app.add_option("--integrator", o.integrator, "cosine | bm25 | external")->capture_default_str();
  app.add_option("--bm25-k1", o.bm25_k1)->capture_default_str();
  app.add_option("--bm25-b", o.bm25_b)->capture_default_str();

  app.add_option("--scorer-cmd", o.scorer_cmd, "External scorer command (EIC_SCORER_CMD overrides)");
  app.add_option("--scorer-timeout-ms", o.scorer_timeout_ms)->capture_default_str();
  app.add_flag("--scorer-fallback", o.scorer_fallback, "Fall back to cosine when the external scorer fails");

  app.add_option("--margin", o.margin)->capture_default_str();
  app.add_option("--learning-rate", o.learning_rate)->capture_default_str();
  app.add_option("--epochs", o.epochs)->capture_default_str();
}

int run(int argc, char** argv) {
  Options o;
  CLI::App app{"Extract-Integrate-Compete evidence retrieval and answer selection", "eic"};
  app.set_config("--config", "", "Key-value config file; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough();
  add_pipeline_options(app, o);

  auto* fixture = app.add_subcommand("fixture", "Generate a synthetic corpus and its embeddings");
  fixture->add_option("--out-dataset", o.out_dataset);
  fixture->add_option("--out-embeddings", o.out_embeddings);
  fixture->add_option("--questions", o.questions)->check(CLI::PositiveNumber)->capture_default_str();
  fixture->add_option("--vocab-seed", o.vocab_seed)->capture_default_str();
  fixture->add_option("--prefix", o.prefix)->capture_default_str();

  auto* extract = app.add_subcommand("extract", "Write per-option evidence");
  extract->add_option("--out", o.out, "Evidence JSON-lines output");

  auto* train = app.add_subcommand("train-scorer", "Train the linear verifier on extracted evidence");
  train->add_option("--evidence", o.evidence);
  train->add_option("--out", o.out, "Verifier JSON output");

  auto* answer = app.add_subcommand("answer", "Score options and write predictions");
  answer->add_option("--evidence", o.evidence);
  answer->add_option("--verifier", o.verifier, "Trained verifier; the external scorer is used when omitted");
  answer->add_option("--out", o.out, "Predictions JSON-lines output");

  auto* eval = app.add_subcommand("eval", "Evidence and answer metrics");
  eval->add_option("--predictions", o.predictions);
  eval->add_option("--evidence", o.evidence);
  eval->add_option("--methods", o.methods, "Comma-separated methods run end to end on --dataset");
  eval->add_option("--train-dataset", o.train_dataset, "Verifier training data for --methods");
  eval->add_option("--out-json", o.out_json);
  eval->add_option("--out-csv", o.out_csv);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    std::cerr << "eic: error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (fixture->parsed()) cmd_fixture(o);
    if (extract->parsed()) cmd_extract(o);
    if (train->parsed()) cmd_train_scorer(o);
    if (answer->parsed()) cmd_answer(o);
    if (eval->parsed()) cmd_eval(o);
  } catch (const Error& e) {
    std::string message = e.what();
    for (char& c : message) {
      if (c == '\n') c = ' ';
    }
    std::cerr << "eic: error: " << e.code() << ": " << message << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "eic: error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
