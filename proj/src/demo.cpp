#include <fstream>
#include <sstream>

#include "core/error.hpp"
#include "core/pipeline.hpp"

namespace core {

using nlohmann::json;

std::vector<RouteExample> read_route_examples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<RouteExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto rec = json::parse(line);
      out.push_back({rec.at("question").get<std::string>(),
                     parse_question_type(rec.at("label").get<std::string>())});
    } catch (const std::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

namespace {

std::vector<Vector> route_features(const EmbeddingProvider& provider, const std::vector<RouteExample>& examples) {
  std::vector<Vector> xs;
  xs.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    xs.push_back(provider.embed_question("route:" + std::to_string(i), examples[i].question));
  }
  return xs;
}

}  // namespace

LinearClassifier train_router(const EmbeddingProvider& provider, const std::vector<RouteExample>& examples,
                              const LogisticTraining& opts) {
  std::vector<int> labels;
  for (const auto& e : examples) labels.push_back(static_cast<int>(e.label));
  return train_logistic(route_features(provider, examples), labels, opts);
}

double route_accuracy(const LinearClassifier& clf, const EmbeddingProvider& provider,
                      const std::vector<RouteExample>& examples) {
  if (examples.empty()) return 0.0;
  const auto xs = route_features(provider, examples);
  std::size_t right = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) right += route(clf, xs[i]) == examples[i].label;
  return static_cast<double>(right) / static_cast<double>(xs.size());
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << s)) throw IoError("cannot write " + path.string());
}

void add_answers(MetricReport& report, const std::vector<QuestionResult>& results,
                 const std::vector<Question>& questions, const std::vector<GoldAnnotation>& gold) {
  std::vector<Prediction> preds;
  for (std::size_t i = 0; i < results.size(); ++i) {
    std::vector<std::string> texts;
    for (const auto& c : results[i].chains) texts.push_back(c.reader_text);
    preds.push_back({results[i].qid, overlap_reader(questions[i].question, texts)});
  }
  auto answers = evaluate_answers(report.name, preds, gold);
  for (auto& [col, vals] : answers.columns) report.columns[col] = vals;
}

}  // namespace

DemoReport run_demo(const DemoOptions& opts) {
  namespace fs = std::filesystem;
  const auto& dir = opts.data_dir;
  fs::create_directories(opts.out_dir);

  CorpusStore store = load_corpus(dir / "passages.jsonl", dir / "tables.jsonl");
  write_corpus_dir(store, opts.out_dir / "corpus");
  const auto gold = read_gold(dir / "gold.jsonl");
  validate_gold(gold, store);
  std::vector<Question> questions;
  for (const auto& g : gold) questions.push_back({g.qid, g.question});

  ReferenceProvider provider(opts.dim);
  const auto chunk_docs = index_documents(store, true, false);
  const auto passage_docs = index_documents(store, false, true);
  const auto joint_docs = index_documents(store, true, true);
  const DenseIndex passage_index = build_index(provider, passage_docs);
  passage_index.save(opts.out_dir / "passages.cidx");

  ChainerParams params = ChainerParams::for_profile(opts.profile);
  const DenseIndex first_hop = build_index(provider, params.scope == Scope::Joint ? joint_docs : chunk_docs);
  first_hop.save(opts.out_dir / "first_hop.cidx");

  TaggerTraining topts = opts.tagger;
  topts.seed = opts.seed;
  const LinearTagger tagger = train_tagger_on_titles(store, provider, topts);
  save_tagger(tagger, opts.out_dir / "tagger.ctag");
  const EvidenceGraph graph = build_evidence_graph(store, provider, tagger, passage_index);
  save_links(graph, opts.out_dir / "links.jsonl");

  std::vector<GoldLink> gold_links;
  for (const auto& g : gold) gold_links.insert(gold_links.end(), g.gold_links.begin(), g.gold_links.end());

  DemoReport report;
  report.linker = eval_links(graph, gold_links);

  ReferenceQgScorer scorer;
  ScoreCache cache;
  PipelineInputs in{&store, &provider, &first_hop, &graph, &scorer, nullptr};
  const std::vector<std::size_t> r_ks = {20, 100};
  const std::vector<std::size_t> ar_ks = {20, 50};

  auto run_mode = [&](const std::string& name, Ablation ablation, const PipelineInputs& inputs,
                      std::vector<QuestionResult>* keep) {
    ChainerParams p = params;
    p.ablation = ablation;
    auto results = run_pipeline(inputs, questions, p, cache);
    auto m = evaluate_runs(name, runs_from_results(results), gold, r_ks, ar_ks);
    add_answers(m, results, questions, gold);
    m.config = params_json(p);
    if (keep) *keep = std::move(results);
    return m;
  };

  PipelineInputs no_links = in;
  no_links.graph = nullptr;
  std::vector<QuestionResult> full_results;
  report.main.push_back(run_mode("retriever-only", Ablation::RetrieverOnly, no_links, nullptr));
  report.main.push_back(run_mode("linker+chainer", Ablation::Full, in, &full_results));
  write_chains(opts.out_dir / "chains.jsonl", full_results);

  const auto route_train = dir / "route_train.jsonl";
  if (fs::exists(route_train)) {
    LogisticTraining lopts;
    lopts.seed = opts.seed;
    const auto train = read_route_examples(route_train);
    const LinearClassifier router = train_router(provider, train, lopts);
    save_classifier(router, opts.out_dir / "router.crtr");
    const auto route_dev = dir / "route_dev.jsonl";
    report.router_accuracy = route_accuracy(router, provider, fs::exists(route_dev) ? read_route_examples(route_dev) : train);
    PipelineInputs routed = in;
    routed.router = &router;
    report.main.push_back(run_mode("classifier-routed", Ablation::Full, routed, nullptr));
  }

  for (auto a : {Ablation::Full, Ablation::NoQgsHop1, Ablation::NoQgsAll, Ablation::NoChainer}) {
    report.ablations.push_back(run_mode(std::string(to_string(a)), a, in, nullptr));
  }

  const std::vector<std::string> cols = {"R@20", "R@100", "AR@20", "AR@50", "EM", "F1"};
  std::ostringstream txt;
  txt << "corpus: " << store.counts().tables << " tables, " << store.counts().chunks << " chunks, "
      << store.counts().passages << " passages, " << questions.size() << " questions\n";
  txt << "profile " << to_string(params.profile) << ", alpha " << params.alpha << ", beta " << params.beta
      << ", K " << params.K << ", k1 " << params.k1 << "\n\n";
  txt << "retrieval (percent)\n" << format_table(report.main, cols) << '\n';
  txt << "chainer ablations (percent)\n" << format_table(report.ablations, cols) << '\n';
  char buf[160];
  std::snprintf(buf, sizeof buf, "linker: P %.3f R %.3f F1 %.3f (%zu/%zu predicted, %zu gold)\n",
                report.linker.precision, report.linker.recall, report.linker.f1, report.linker.correct,
                report.linker.predicted, report.linker.gold);
  txt << buf;
  std::snprintf(buf, sizeof buf, "router held-out accuracy: %.1f%%\n", 100.0 * report.router_accuracy);
  txt << buf;
  report.text = txt.str();

  json j;
  j["config"] = params_json(params);
  j["seed"] = opts.seed;
  j["main"] = json::array();
  for (const auto& m : report.main) j["main"].push_back(m.to_json());
  j["ablations"] = json::array();
  for (const auto& m : report.ablations) j["ablations"].push_back(m.to_json());
  j["linker"] = {{"precision", report.linker.precision}, {"recall", report.linker.recall},
                 {"f1", report.linker.f1}, {"correct", report.linker.correct},
                 {"predicted", report.linker.predicted}, {"gold", report.linker.gold}};
  j["router_accuracy"] = report.router_accuracy;
  write_text(opts.out_dir / "report.json", j.dump(2) + "\n");
  write_text(opts.out_dir / "report.txt", report.text);
  return report;
}

}  // namespace core
