#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "core/bm25.hpp"
#include "core/error.hpp"
#include "core/kernels.hpp"
#include "core/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  core::ProviderConfig provider;
  core::ScorerConfig scorer;
  std::uint64_t seed = 0;
  int threads = 0;
};

void add_provider_options(CLI::App* cmd, Common& c) {
  cmd->add_option("--provider", c.provider.kind, "Embedding provider: reference|vectors-file|external")
      ->capture_default_str();
  cmd->add_option("--dim", c.provider.dim, "Embedding dimension")->capture_default_str();
  cmd->add_option("--vectors", c.provider.vectors_file, "Vector file for the vectors-file provider");
  cmd->add_option("--service", c.provider.service_command, "Command speaking the line-JSON protocol");
}

void add_scorer_options(CLI::App* cmd, Common& c) {
  cmd->add_option("--scorer", c.scorer.kind, "Question-generation scorer: reference|external")
      ->capture_default_str();
  cmd->add_option("--scorer-service", c.scorer.service_command, "Command for the external scorer");
}

std::vector<std::size_t> parse_ks(const std::string& s) {
  std::vector<std::size_t> ks;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    try {
      std::size_t used = 0;
      long v = std::stol(part, &used);
      if (used != part.size() || v < 1) throw std::invalid_argument(part);
      ks.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw core::ValidationError("bad k list: " + s);
    }
  }
  if (ks.empty()) throw core::ValidationError("empty k list");
  return ks;
}

std::pair<int, int> parse_range(const std::string& s) {
  auto colon = s.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument(s);
    return {std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1))};
  } catch (const std::exception&) {
    throw core::ValidationError("bad range (expected lo:hi): " + s);
  }
}

void require_file(const fs::path& p, const std::string& stage) {
  if (!fs::exists(p)) throw core::IoError(stage + ": missing " + p.string());
}

void apply_threads(int threads) {
  if (threads <= 0) {
    if (const char* env = std::getenv("CORE_THREADS")) threads = std::atoi(env);
  }
  if (threads > 0) core::kernels::set_threads(threads);
}

core::EvidenceGraph maybe_links(const std::string& path) {
  if (path.empty()) return {};
  require_file(path, "links");
  return core::load_links(path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Table-text retrieval pipeline: ingest, index, link, chain, route, evaluate"};
  app.set_config("--config", "", "Flat config file (TOML/INI)");
  app.require_subcommand(1);
  app.fallthrough();
  Common common;
  app.add_option("--seed", common.seed, "Seed for every random stream")->capture_default_str();
  app.add_option("--threads", common.threads, "Worker threads (default: CORE_THREADS or all cores)");

  // ingest
  std::string passages_path, tables_path, corpus_dir;
  std::size_t budget = core::kDefaultChunkBudget;
  auto* ingest = app.add_subcommand("ingest", "Validate, flatten and chunk a corpus");
  ingest->add_option("--passages", passages_path, "passages.jsonl")->required();
  ingest->add_option("--tables", tables_path, "tables.jsonl")->required();
  ingest->add_option("--out", corpus_dir, "Output corpus directory")->required();
  ingest->add_option("--budget", budget, "Chunk budget in whitespace tokens")->capture_default_str();

  // index build
  std::string index_kind = "tables", index_out;
  auto* index = app.add_subcommand("index", "Dense index commands");
  index->require_subcommand(1);
  auto* index_build = index->add_subcommand("build", "Embed and index corpus documents");
  index_build->add_option("--corpus", corpus_dir, "Corpus directory from ingest")->required();
  index_build->add_option("--kind", index_kind, "tables|passages|all")->capture_default_str();
  index_build->add_option("--out", index_out, "Index file")->required();
  add_provider_options(index_build, common);

  // link build
  std::string passage_index_path, links_out, tagger_in, tagger_out;
  core::LinkerConfig link_cfg;
  core::TaggerTraining tagger_opts;
  auto* link = app.add_subcommand("link", "Entity linking commands");
  link->require_subcommand(1);
  auto* link_build = link->add_subcommand("build", "Tag mentions in every chunk and link them to passages");
  link_build->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  link_build->add_option("--passage-index", passage_index_path, "Passage index file")->required();
  link_build->add_option("--out", links_out, "links.jsonl")->required();
  link_build->add_option("--tagger", tagger_in, "Trained tagger (default: train from title matches)");
  link_build->add_option("--tagger-out", tagger_out, "Where to save the trained tagger");
  link_build->add_option("--threshold", link_cfg.threshold, "Mention probability threshold")->capture_default_str();
  link_build->add_option("--top-m", link_cfg.top_m, "Passages kept per mention")->capture_default_str();
  link_build->add_option("--epochs", tagger_opts.epochs, "Tagger epochs")->capture_default_str();
  link_build->add_option("--lr", tagger_opts.learning_rate, "Tagger learning rate")->capture_default_str();
  add_provider_options(link_build, common);

  // negatives mine
  std::string neg_links, neg_out, strategy = "title";
  std::size_t neg_n = 1;
  auto* negatives = app.add_subcommand("negatives", "Hard negative mining");
  negatives->require_subcommand(1);
  auto* neg_mine = negatives->add_subcommand("mine", "BM25 hard negatives for each linked mention");
  neg_mine->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  neg_mine->add_option("--links", neg_links, "links.jsonl with the positive passages")->required();
  neg_mine->add_option("--strategy", strategy, "title|title+first-sentence")->capture_default_str();
  neg_mine->add_option("--n", neg_n, "Negatives per mention")->capture_default_str();
  neg_mine->add_option("--out", neg_out, "negatives.jsonl")->required();

  // chain
  std::string chain_index, chain_links, questions_path, chains_out, hits_out, router_path, gold_path;
  std::string profile = "ottqa", ablation = "full", sr_sign = "log-prob", scope, singleton_weight = "alpha";
  std::optional<double> alpha, beta;
  std::optional<std::size_t> K, k1, max_len;
  double singleton_scale = 2.0;
  auto* chain = app.add_subcommand("chain", "Retrieve, expand through links and rank evidence chains");
  chain->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  chain->add_option("--index", chain_index, "First-hop index file")->required();
  chain->add_option("--links", chain_links, "links.jsonl (omit for no expansion)");
  chain->add_option("--questions", questions_path, "JSONL with qid and question")->required();
  chain->add_option("--out", chains_out, "chains.jsonl")->required();
  chain->add_option("--hits-out", hits_out, "Write first-hop hits here");
  chain->add_option("--router", router_path, "Question-type classifier; single-hop skips the linker");
  chain->add_option("--gold", gold_path, "Print retrieval metrics against this gold file");
  chain->add_option("--profile", profile, "ottqa|nq")->capture_default_str();
  chain->add_option("--ablation", ablation, "full|no-qgs-hop1|no-qgs-all|no-chainer|retriever-only")
      ->capture_default_str();
  chain->add_option("--sr-sign", sr_sign, "log-prob|paper-literal")->capture_default_str();
  chain->add_option("--alpha", alpha, "Hop-1 weight (overrides the profile)");
  chain->add_option("--beta", beta, "Hop-2 weight (overrides the profile)");
  chain->add_option("--K", K, "Chains kept per question");
  chain->add_option("--k1", k1, "First-hop documents per question");
  chain->add_option("--scope", scope, "tables-only|joint (overrides the profile)");
  chain->add_option("--max-len", max_len, "Reader tokens per chain");
  chain->add_option("--singleton-scale", singleton_scale, "Singleton coefficient multiplier")->capture_default_str();
  chain->add_option("--singleton-passage-weight", singleton_weight, "alpha|beta")->capture_default_str();
  add_provider_options(chain, common);
  add_scorer_options(chain, common);

  // route train
  std::string route_examples, route_out;
  core::LogisticTraining route_opts;
  auto* route = app.add_subcommand("route", "Question-type router");
  route->require_subcommand(1);
  auto* route_train = route->add_subcommand("train", "Train the single-hop / multi-hop classifier");
  route_train->add_option("--examples", route_examples, "JSONL with question and label")->required();
  route_train->add_option("--out", route_out, "Classifier file")->required();
  route_train->add_option("--epochs", route_opts.epochs, "Gradient steps over the data")->capture_default_str();
  route_train->add_option("--lr", route_opts.learning_rate, "Learning rate")->capture_default_str();
  route_train->add_option("--batch-size", route_opts.batch_size, "0 = full batch")->capture_default_str();
  add_provider_options(route_train, common);

  // eval retrieval / answers
  std::string eval_chains, eval_pred, ks = "20,50,100", report_out;
  auto* eval = app.add_subcommand("eval", "Metrics");
  eval->require_subcommand(1);
  auto* eval_retrieval = eval->add_subcommand("retrieval", "Chunk recall and answer recall at k");
  eval_retrieval->add_option("--gold", gold_path, "gold.jsonl")->required();
  eval_retrieval->add_option("--chains", eval_chains, "chains.jsonl")->required();
  eval_retrieval->add_option("--k", ks, "Comma-separated cutoffs")->capture_default_str();
  eval_retrieval->add_option("--corpus", corpus_dir, "Corpus directory (identifies table chunks)");
  eval_retrieval->add_option("--json-out", report_out, "Write the report as JSON");
  auto* eval_answers = eval->add_subcommand("answers", "Exact match and F1");
  eval_answers->add_option("--pred", eval_pred, "JSONL with qid and prediction")->required();
  eval_answers->add_option("--gold", gold_path, "gold.jsonl")->required();
  eval_answers->add_option("--json-out", report_out, "Write the report as JSON");

  // demo
  std::string demo_data = CORE_TOY_DATA_DIR, demo_out = "demo_out";
  auto* demo = app.add_subcommand("demo", "Run the whole pipeline on the bundled toy corpus");
  demo->add_option("--data", demo_data, "Corpus directory with gold.jsonl")->capture_default_str();
  demo->add_option("--out", demo_out, "Output directory")->capture_default_str();
  demo->add_option("--profile", profile, "ottqa|nq")->capture_default_str();
  std::size_t demo_dim = core::kDemoEmbeddingDim;
  core::TaggerTraining demo_tagger;
  demo->add_option("--dim", demo_dim, "Reference embedding dimension")->capture_default_str();
  demo->add_option("--epochs", demo_tagger.epochs, "Tagger epochs")->capture_default_str();
  demo->add_option("--lr", demo_tagger.learning_rate, "Tagger learning rate")->capture_default_str();

  // tune
  std::string alpha_range = "1:20", beta_range = "1:20";
  std::size_t tune_k = 20;
  auto* tune = app.add_subcommand("tune", "Integer grid search over alpha and beta");
  tune->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  tune->add_option("--index", chain_index, "First-hop index file")->required();
  tune->add_option("--links", chain_links, "links.jsonl")->required();
  tune->add_option("--gold", gold_path, "Dev gold.jsonl")->required();
  tune->add_option("--profile", profile, "ottqa|nq")->capture_default_str();
  tune->add_option("--alpha-range", alpha_range, "lo:hi")->capture_default_str();
  tune->add_option("--beta-range", beta_range, "lo:hi")->capture_default_str();
  tune->add_option("--k", tune_k, "Optimize AR@k")->capture_default_str();
  add_provider_options(tune, common);
  add_scorer_options(tune, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  try {
    apply_threads(common.threads);

    auto chainer_params = [&] {
      auto p = core::ChainerParams::for_profile(core::parse_profile(profile));
      p.ablation = core::parse_ablation(ablation);
      p.sr_sign = core::parse_sr_sign(sr_sign);
      if (alpha) p.alpha = *alpha;
      if (beta) p.beta = *beta;
      if (K) p.K = *K;
      if (k1) p.k1 = *k1;
      if (!scope.empty()) p.scope = core::parse_scope(scope);
      if (max_len) p.max_len = *max_len;
      p.singleton_scale = singleton_scale;
      p.singleton_passage_weight = core::parse_singleton_passage_weight(singleton_weight);
      p.validate();
      return p;
    };

    if (*ingest) {
      auto store = core::load_corpus(passages_path, tables_path, budget);
      core::write_corpus_dir(store, corpus_dir);
      auto c = store.counts();
      std::cout << "ingested " << c.passages << " passages, " << c.tables << " tables, " << c.chunks
                << " chunks into " << corpus_dir << '\n';
    } else if (*index_build) {
      auto store = core::load_corpus_dir(corpus_dir);
      bool chunks = index_kind == "tables" || index_kind == "all";
      bool passages = index_kind == "passages" || index_kind == "all";
      if (!chunks && !passages) throw core::ValidationError("--kind must be tables|passages|all");
      core::Backends backends(common.provider, common.scorer);
      auto docs = core::index_documents(store, chunks, passages);
      auto idx = core::build_index(backends.provider(), docs);
      idx.save(index_out);
      std::cout << "indexed " << idx.size() << " documents (dim " << idx.dim() << ") into " << index_out << '\n';
    } else if (*link_build) {
      auto store = core::load_corpus_dir(corpus_dir);
      require_file(passage_index_path, "link build");
      auto passage_index = core::DenseIndex::load(passage_index_path);
      core::Backends backends(common.provider, common.scorer);
      core::LinearTagger tagger;
      if (!tagger_in.empty()) {
        require_file(tagger_in, "link build");
        tagger = core::load_tagger(tagger_in);
      } else {
        tagger_opts.seed = common.seed;
        tagger = core::train_tagger_on_titles(store, backends.provider(), tagger_opts);
      }
      if (!tagger_out.empty()) core::save_tagger(tagger, tagger_out);
      auto graph = core::build_evidence_graph(store, backends.provider(), tagger, passage_index, link_cfg);
      core::save_links(graph, links_out);
      std::size_t edges = 0;
      for (const auto& [id, e] : graph) edges += e.size();
      std::cout << "linked " << edges << " mentions across " << graph.size() << " chunks into " << links_out
                << '\n';
    } else if (*neg_mine) {
      auto store = core::load_corpus_dir(corpus_dir);
      require_file(neg_links, "negatives mine");
      auto graph = core::load_links(neg_links);
      core::NegativeMiner miner(store, core::parse_negative_strategy(strategy));
      std::ofstream out(neg_out, std::ios::binary);
      if (!out) throw core::IoError("cannot write " + neg_out);
      for (const auto& [chunk_id, edges] : graph) {
        const auto& title = store.table(store.chunk(chunk_id).table_id).title;
        for (const auto& e : edges) {
          auto negs = miner.mine(e.mention.surface, title, e.passage_id, neg_n);
          out << json{{"chunk_id", chunk_id}, {"start", e.mention.start}, {"end", e.mention.end},
                      {"positive", e.passage_id}, {"negatives", negs}}
                     .dump()
              << '\n';
        }
      }
      if (!out) throw core::IoError("write failed: " + neg_out);
    } else if (*chain) {
      auto params = chainer_params();
      auto store = core::load_corpus_dir(corpus_dir);
      require_file(chain_index, "chain");
      auto first_hop = core::DenseIndex::load(chain_index);
      auto graph = maybe_links(chain_links);
      require_file(questions_path, "chain");
      auto questions = core::read_questions(questions_path);
      core::Backends backends(common.provider, common.scorer);
      core::LinearClassifier router;
      if (!router_path.empty()) {
        require_file(router_path, "chain");
        router = core::load_classifier(router_path);
      }
      core::PipelineInputs in{&store, &backends.provider(), &first_hop, chain_links.empty() ? nullptr : &graph,
                              &backends.scorer(), router_path.empty() ? nullptr : &router};
      core::ScoreCache cache;
      auto results = core::run_pipeline(in, questions, params, cache);
      core::write_chains(chains_out, results);
      if (!hits_out.empty()) core::write_hits(hits_out, results);
      std::size_t failed = 0;
      for (const auto& r : results) failed += !r.error.empty();
      std::cout << "params " << core::params_json(params).dump() << '\n';
      std::cout << "wrote chains for " << results.size() - failed << " of " << results.size()
                << " questions to " << chains_out << '\n';
      if (!gold_path.empty()) {
        auto gold = core::read_gold(gold_path);
        auto report = core::evaluate_runs(std::string(core::to_string(params.ablation)),
                                          core::runs_from_results(results), gold, {20, 100}, {20, 50});
        report.config = core::params_json(params);
        std::cout << core::format_table({report}, {"R@20", "R@100", "AR@20", "AR@50"});
      }
    } else if (*route_train) {
      core::Backends backends(common.provider, common.scorer);
      auto examples = core::read_route_examples(route_examples);
      route_opts.seed = common.seed;
      auto clf = core::train_router(backends.provider(), examples, route_opts);
      core::save_classifier(clf, route_out);
      char buf[96];
      std::snprintf(buf, sizeof buf, "training accuracy %.1f%% on %zu examples\n",
                    100.0 * core::route_accuracy(clf, backends.provider(), examples), examples.size());
      std::cout << buf;
    } else if (*eval_retrieval) {
      auto gold = core::read_gold(gold_path);
      auto chains = core::read_chains(eval_chains);
      std::optional<core::CorpusStore> store;
      if (!corpus_dir.empty()) store = core::load_corpus_dir(corpus_dir);
      auto cutoffs = parse_ks(ks);
      auto runs = core::runs_from_chains(chains, store ? &*store : nullptr);
      auto report = core::evaluate_runs("retrieval", runs, gold, cutoffs, cutoffs);
      std::vector<std::string> cols;
      for (auto k : cutoffs) cols.push_back("R@" + std::to_string(k));
      for (auto k : cutoffs) cols.push_back("AR@" + std::to_string(k));
      std::cout << core::format_table({report}, cols);
      if (!report_out.empty()) {
        std::ofstream out(report_out);
        if (!(out << report.to_json().dump(2) << '\n')) throw core::IoError("cannot write " + report_out);
      }
    } else if (*eval_answers) {
      auto gold = core::read_gold(gold_path);
      auto preds = core::read_predictions(eval_pred);
      auto report = core::evaluate_answers("answers", preds, gold);
      std::cout << core::format_table({report}, {"EM", "F1"});
      if (!report_out.empty()) {
        std::ofstream out(report_out);
        if (!(out << report.to_json().dump(2) << '\n')) throw core::IoError("cannot write " + report_out);
      }
    } else if (*demo) {
      core::DemoOptions opts;
      opts.data_dir = demo_data;
      opts.out_dir = demo_out;
      opts.seed = common.seed;
      opts.profile = core::parse_profile(profile);
      opts.dim = demo_dim;
      opts.tagger = demo_tagger;
      auto report = core::run_demo(opts);
      std::cout << report.text;
    } else if (*tune) {
      auto params = chainer_params();
      auto store = core::load_corpus_dir(corpus_dir);
      require_file(chain_index, "tune");
      auto first_hop = core::DenseIndex::load(chain_index);
      require_file(chain_links, "tune");
      auto graph = core::load_links(chain_links);
      auto gold = core::read_gold(gold_path);
      std::vector<core::Question> questions;
      for (const auto& g : gold) questions.push_back({g.qid, g.question});
      core::Backends backends(common.provider, common.scorer);
      core::PipelineInputs in{&store, &backends.provider(), &first_hop, &graph, &backends.scorer(), nullptr};
      core::ScoreCache cache;
      auto best = core::tune_alpha_beta(in, questions, gold, params, parse_range(alpha_range),
                                        parse_range(beta_range), tune_k, cache);
      std::cout << json{{"alpha", best.alpha}, {"beta", best.beta}, {"AR@" + std::to_string(tune_k), best.metric}}
                       .dump()
                << '\n';
    }
  } catch (const core::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const core::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
