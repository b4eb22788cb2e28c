#include "eic/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "eic/error.hpp"
#include "json.hpp"

namespace eic {

using nlohmann::json;

Ablations parse_ablations(const std::vector<std::string>& names) {
  Ablations out;
  for (const auto& name : names) {
    if (name == "no_iterative") {
      out.no_iterative = true;
    } else if (name == "no_integration") {
      out.no_integration = true;
    } else if (name == "no_competition") {
      out.no_competition = true;
    } else {
      throw Error("config", "unknown ablation '" + name + "' (no_iterative|no_integration|no_competition)");
    }
  }
  return out;
}

std::string ablation_suffix(const Ablations& ablations) {
  std::string out;
  if (ablations.no_iterative) out += "+no_iterative";
  if (ablations.no_integration) out += "+no_integration";
  if (ablations.no_competition) out += "+no_competition";
  return out;
}

namespace {

// Runs `count` items on up to `workers` threads. Each thread builds its own
// item handler (and with it its own scorers) via make_handler. The first
// exception thrown by any worker is rethrown after all threads join.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<std::function<void(std::size_t)>()>& make_handler) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::atomic<bool> stop{false};

  auto body = [&] {
    try {
      auto handle = make_handler();
      for (;;) {
        if (stop.load()) return;
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        handle(i);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      stop.store(true);
    }
  };

  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(body);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

std::vector<const QuestionInstance*> sorted_questions(const Dataset& dataset) {
  std::vector<const QuestionInstance*> out;
  for (const auto& q : dataset.questions()) out.push_back(&q);
  std::sort(out.begin(), out.end(), [](const auto* a, const auto* b) { return a->qid < b->qid; });
  return out;
}

}  // namespace

IntegratedEvidence select_evidence(const TokenList& option_tokens, const Passage& passage,
                                   const ExtractionSettings& settings, const EmbeddingTable& table,
                                   Scorer& retriever, Scorer& integrator) {
  ExtractorConfig config = settings.extractor;
  if (settings.ablations.no_iterative) config.max_steps = 1;
  auto chains = extract_chains(option_tokens, passage, config, table, retriever);
  if (config.mode == ExtractMode::OneOffTopK) {
    IntegratedEvidence out = assemble(chains.front(), passage);
    out.rerank_score = chains.front().score;
    return out;
  }
  if (settings.ablations.no_integration) return select_without_integration(chains, passage);
  return integrate(chains, passage, option_tokens, integrator);
}

std::vector<EvidenceRecord> run_extraction(const Dataset& dataset, const EmbeddingTable& table,
                                           const ExtractionSettings& settings) {
  settings.extractor.validate();
  const auto questions = sorted_questions(dataset);
  std::vector<EvidenceRecord> records(questions.size() * kOptionsPerQuestion);

  parallel_for(records.size(), settings.workers, [&]() -> std::function<void(std::size_t)> {
    auto retriever = std::shared_ptr<Scorer>(make_scorer(settings.retriever, table));
    auto integrator = std::shared_ptr<Scorer>(make_scorer(settings.integrator, table));
    return [&, retriever, integrator](std::size_t i) {
      const QuestionInstance& question = *questions[i / kOptionsPerQuestion];
      const std::size_t option = i % kOptionsPerQuestion;
      const Passage& passage = dataset.passage_for(question);
      IntegratedEvidence evidence = select_evidence(question.options[option].text_tokens, passage,
                                                    settings, table, *retriever, *integrator);
      records[i] = EvidenceRecord{question.qid, option, evidence.passage_order_indices,
                                  evidence.rerank_score};
    };
  });
  return records;
}

void write_evidence(const std::vector<EvidenceRecord>& records, std::ostream& out) {
  for (const auto& r : records) {
    json line = {{"qid", r.qid},
                 {"option_index", r.option_index},
                 {"sentence_indices", r.sentence_indices},
                 {"score", r.score}};
    out << line.dump() << '\n';
  }
}

void write_evidence(const std::vector<EvidenceRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write evidence file '" + path.string() + "'");
  write_evidence(records, out);
}

namespace {

template <typename Parse>
auto read_json_lines(std::istream& in, std::string_view what, Parse parse) {
  std::vector<decltype(parse(json{}))> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(json::parse(text)));
    } catch (const json::exception& e) {
      throw Error(std::string(what), std::string(what) + " line " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

std::vector<EvidenceRecord> read_evidence(std::istream& in) {
  return read_json_lines(in, "evidence", [](const json& j) {
    EvidenceRecord r;
    r.qid = j.at("qid").get<std::string>();
    r.option_index = j.at("option_index").get<std::size_t>();
    r.sentence_indices = j.at("sentence_indices").get<std::vector<std::size_t>>();
    r.score = j.at("score").get<double>();
    return r;
  });
}

std::vector<EvidenceRecord> read_evidence(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open evidence file '" + path.string() + "'");
  return read_evidence(in);
}

EvidenceIndex::EvidenceIndex(const Dataset& dataset, const std::vector<EvidenceRecord>& records) {
  std::set<std::string> qids;
  for (const auto& q : dataset.questions()) qids.insert(q.qid);
  for (const auto& r : records) {
    if (!qids.count(r.qid)) throw Error("mismatch", "evidence names unknown qid '" + r.qid + "'");
    if (r.option_index >= kOptionsPerQuestion) {
      throw Error("evidence", "evidence for '" + r.qid + "' has option_index " + std::to_string(r.option_index));
    }
    if (!by_key_.emplace(std::make_pair(r.qid, r.option_index), &r).second) {
      throw Error("evidence", "duplicate evidence for (" + r.qid + ", " + std::to_string(r.option_index) + ")");
    }
  }
  for (const auto& q : dataset.questions()) {
    const Passage& passage = dataset.passage_for(q);
    for (std::size_t o = 0; o < kOptionsPerQuestion; ++o) {
      auto it = by_key_.find({q.qid, o});
      if (it == by_key_.end()) {
        throw Error("missing_evidence", "no evidence for (" + q.qid + ", " + std::to_string(o) + ")");
      }
      if (it->second->sentence_indices.empty()) {
        throw Error("evidence", "empty evidence for (" + q.qid + ", " + std::to_string(o) + ")");
      }
      for (std::size_t idx : it->second->sentence_indices) {
        if (idx >= passage.size()) {
          throw Error("evidence", "evidence for (" + q.qid + ", " + std::to_string(o) + ") names sentence " +
                                      std::to_string(idx) + " beyond the passage");
        }
      }
    }
  }
}

const EvidenceRecord& EvidenceIndex::at(const std::string& qid, std::size_t option) const {
  auto it = by_key_.find({qid, option});
  if (it == by_key_.end()) {
    throw Error("missing_evidence", "no evidence for (" + qid + ", " + std::to_string(option) + ")");
  }
  return *it->second;
}

TokenList EvidenceIndex::text(const Dataset& dataset, const QuestionInstance& question,
                              std::size_t option) const {
  EvidenceChain chain;
  chain.sentence_indices = at(question.qid, option).sentence_indices;
  return assemble(chain, dataset.passage_for(question)).text_tokens;
}

std::vector<CompetitionExample> build_examples(const Dataset& dataset, const EmbeddingTable& table,
                                               const std::vector<EvidenceRecord>& evidence,
                                               Bm25Params bm25) {
  const EvidenceIndex index(dataset, evidence);
  std::vector<CompetitionExample> examples;
  for (const auto* question : sorted_questions(dataset)) {
    CompetitionExample example;
    example.polarity = question->polarity;
    example.answer = question->answer_index();
    const Passage& passage = dataset.passage_for(*question);
    for (std::size_t o = 0; o < kOptionsPerQuestion; ++o) {
      example.features[o] = verifier_features(question->options[o].text_tokens,
                                              index.text(dataset, *question, o), passage, table, bm25);
    }
    examples.push_back(std::move(example));
  }
  return examples;
}

std::vector<PredictionRecord> run_answer(const Dataset& dataset, const EmbeddingTable& table,
                                         const std::vector<EvidenceRecord>& evidence,
                                         const AnswerSettings& settings) {
  if (settings.verifier) {
    settings.verifier->validate();
    if (settings.verifier->feature_names != default_feature_names()) {
      throw Error("verifier", "verifier features do not match the built-in feature set");
    }
  }
  const EvidenceIndex index(dataset, evidence);
  const auto questions = sorted_questions(dataset);
  std::vector<PredictionRecord> records(questions.size());

  parallel_for(records.size(), settings.workers, [&]() -> std::function<void(std::size_t)> {
    std::shared_ptr<Scorer> external;
    if (!settings.verifier) external = make_scorer(settings.external, table);
    return [&, external](std::size_t i) {
      const QuestionInstance& question = *questions[i];
      const Passage& passage = dataset.passage_for(question);
      PredictionRecord record;
      record.qid = question.qid;
      for (std::size_t o = 0; o < kOptionsPerQuestion; ++o) {
        const TokenList text = index.text(dataset, question, o);
        double g = 0.0;
        if (settings.verifier) {
          g = settings.verifier->score(
              verifier_features(question.options[o].text_tokens, text, passage, table, settings.bm25));
        } else {
          std::vector<TokenList> candidates{text};
          g = external->score_texts(question.options[o].text_tokens, candidates).at(0);
        }
        record.scores[o] = settings.independent ? sigmoid(g) : g;
      }
      record.option_index = select_answer(question, record.scores);
      records[i] = std::move(record);
    };
  });
  return records;
}

void write_predictions(const std::vector<PredictionRecord>& records, std::ostream& out) {
  for (const auto& r : records) {
    json line = {{"qid", r.qid}, {"option_index", r.option_index}, {"scores", r.scores}};
    out << line.dump() << '\n';
  }
}

void write_predictions(const std::vector<PredictionRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write predictions file '" + path.string() + "'");
  write_predictions(records, out);
}

std::vector<PredictionRecord> read_predictions(std::istream& in) {
  return read_json_lines(in, "prediction", [](const json& j) {
    PredictionRecord r;
    r.qid = j.at("qid").get<std::string>();
    r.option_index = j.at("option_index").get<std::size_t>();
    if (auto it = j.find("scores"); it != j.end()) {
      auto scores = it->get<std::vector<double>>();
      if (scores.size() != kOptionsPerQuestion) throw Error("prediction", "scores must have 4 entries");
      std::copy(scores.begin(), scores.end(), r.scores.begin());
    }
    return r;
  });
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open predictions file '" + path.string() + "'");
  return read_predictions(in);
}

MethodReport evaluate_run(std::string method, const Dataset& dataset,
                          const std::vector<PredictionRecord>& predictions,
                          const std::vector<EvidenceRecord>& evidence) {
  MethodReport report;
  report.method = std::move(method);

  std::set<std::string> qids;
  for (const auto& q : dataset.questions()) qids.insert(q.qid);
  std::unordered_map<std::string, std::size_t> predicted;
  for (const auto& p : predictions) {
    if (!qids.count(p.qid)) throw Error("mismatch", "prediction names unknown qid '" + p.qid + "'");
    if (p.option_index >= kOptionsPerQuestion) {
      throw Error("prediction", "prediction for '" + p.qid + "' has option_index " + std::to_string(p.option_index));
    }
    if (!predicted.emplace(p.qid, p.option_index).second) {
      throw Error("prediction", "duplicate prediction for '" + p.qid + "'");
    }
  }
  report.qa = qa_accuracy(predicted, dataset.questions());

  const EvidenceIndex index(dataset, evidence);
  if (!dataset.has_gold_evidence()) {
    std::cerr << "notice: dataset has no gold evidence; evidence metrics skipped\n";
    return report;
  }
  std::vector<OptionEvidenceResult> options;
  std::size_t skipped = 0;
  for (const auto* question : sorted_questions(dataset)) {
    for (std::size_t o = 0; o < kOptionsPerQuestion; ++o) {
      const auto& gold = question->options[o].gold_evidence;
      if (!gold) {
        ++skipped;
        continue;
      }
      options.push_back(score_option(question->qid, o, index.at(question->qid, o).sentence_indices, *gold));
    }
  }
  report.evidence = aggregate(options);
  report.evidence->skipped = skipped;
  return report;
}

namespace {

json prf_json(const Prf& prf) {
  return {{"precision", prf.precision}, {"recall", prf.recall}, {"f1", prf.f1}};
}

}  // namespace

std::string report_to_json(const std::vector<MethodReport>& reports) {
  json methods = json::array();
  for (const auto& r : reports) {
    json entry;
    entry["method"] = r.method;
    if (r.evidence) {
      entry["evidence"] = {{"macro", prf_json(r.evidence->macro)},
                           {"micro", prf_json(r.evidence->micro)},
                           {"options_evaluated", r.evidence->evaluated},
                           {"options_skipped", r.evidence->skipped},
                           {"empty_predictions", r.evidence->empty_predictions}};
    } else {
      entry["evidence"] = nullptr;
    }
    entry["qa"] = {{"accuracy", r.qa.accuracy}, {"correct", r.qa.correct}, {"total", r.qa.total}};
    methods.push_back(std::move(entry));
  }
  return json{{"methods", methods}}.dump(2);
}

void write_report_csv(const std::vector<MethodReport>& reports, std::ostream& out) {
  out << "method,P,R,F1,Acc\n";
  std::ostringstream row;
  for (const auto& r : reports) {
    row.str("");
    row << r.method << std::fixed << std::setprecision(2);
    if (r.evidence) {
      row << ',' << 100.0 * r.evidence->macro.precision << ',' << 100.0 * r.evidence->macro.recall << ','
          << 100.0 * r.evidence->macro.f1;
    } else {
      row << ",,,";
    }
    row << ',' << 100.0 * r.qa.accuracy << '\n';
    out << row.str();
  }
}

std::vector<std::string> known_methods() {
  return {"bm25_top1", "bm25_top2", "cosine_top1", "cosine_top2", "query_append", "hard_mask", "soft_mask"};
}

MethodSpec method_spec(std::string_view name, const ExtractorConfig& defaults) {
  MethodSpec spec;
  spec.name = std::string(name);
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (;;) {
    const auto plus = name.find('+', start);
    parts.emplace_back(name.substr(start, plus - start));
    if (plus == std::string_view::npos) break;
    start = plus + 1;
  }
  const std::string base = parts.front();
  spec.extraction.ablations = parse_ablations({parts.begin() + 1, parts.end()});
  if (spec.extraction.ablations.no_competition) spec.objective = Objective::Pointwise;

  ExtractorConfig& config = spec.extraction.extractor;
  config = defaults;
  ScorerConfig& retriever = spec.extraction.retriever;
  if (base == "bm25_top1" || base == "bm25_top2" || base == "cosine_top1" || base == "cosine_top2") {
    config.mode = ExtractMode::OneOffTopK;
    config.top_k = base.back() == '1' ? 1 : 2;
    retriever.kind = base.starts_with("bm25") ? ScorerKind::Bm25 : ScorerKind::Cosine;
  } else if (base == "query_append") {
    config.mode = ExtractMode::QueryAppend;
  } else if (base == "hard_mask") {
    config.mode = ExtractMode::HardMask;
  } else if (base == "soft_mask") {
    config.mode = ExtractMode::SoftMask;
  } else {
    throw Error("config", "unknown method '" + base + "'");
  }
  return spec;
}

MethodRun run_method(const MethodSpec& spec, const Dataset& train, const Dataset& test,
                     const EmbeddingTable& table, const CompetitionConfig& competition,
                     std::size_t workers) {
  ExtractionSettings extraction = spec.extraction;
  extraction.workers = workers;
  MethodRun run;
  const auto train_evidence = run_extraction(train, table, extraction);
  CompetitionConfig config = competition;
  config.objective = spec.objective;
  const auto examples = build_examples(train, table, train_evidence);
  run.verifier = train_linear_verifier(examples, config).verifier;

  run.evidence = run_extraction(test, table, extraction);
  AnswerSettings answer;
  answer.verifier = run.verifier;
  answer.independent = spec.extraction.ablations.no_competition;
  answer.workers = workers;
  run.predictions = run_answer(test, table, run.evidence, answer);
  run.report = evaluate_run(spec.name, test, run.predictions, run.evidence);
  return run;
}

}  // namespace eic
