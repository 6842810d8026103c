#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "hrank/checkpoint.hpp"
#include "hrank/train.hpp"

namespace {

using namespace hrank;

// Scheme labels accepted on the command line. Besides the six scheme
// names, "mtl_point|mtl_pair|mtl_list" select the MTL reporting head and
// "list_only" is the single-objective list baseline (MTL(list) with the
// point and pair weights zeroed).
void apply_scheme_label(RunConfig& cfg, const std::string& label) {
  if (label == "mtl_point" || label == "mtl_pair" || label == "mtl_list") {
    cfg.scheme.scheme = Scheme::mtl;
    cfg.scheme.mtl_main_level = parse_level(label.substr(4));
    return;
  }
  if (label == "list_only") {
    cfg.scheme.scheme = Scheme::mtl;
    cfg.scheme.mtl_main_level = Level::list;
    cfg.scheme.lambda_point = 0.0;
    cfg.scheme.lambda_pair = 0.0;
    cfg.scheme.lambda_list = 1.0;
    return;
  }
  cfg.scheme.scheme = parse_scheme(label);
}

struct CommonArgs {
  std::string config_path;
  std::string scheme;
  std::string profile;
  std::string out;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run configuration");
    cmd->add_option("--scheme", scheme,
                    "mtl[_point|_pair|_list], ri_point, ri_pair, ri_list, "
                    "pri_point, pri_list or list_only");
    cmd->add_option("--profile", profile, "wikiqa-like, trecqa-like or synthetic");
    cmd->add_option("--seed", seed, "single seed override");
    cmd->add_option("--out", out, "output directory override");
  }

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty())
      cfg = RunConfig::from_json_file(config_path);
    else
      cfg = RunConfig::for_profile(profile.empty() ? Profile::synthetic
                                                   : parse_profile(profile));
    if (!config_path.empty() && !profile.empty()) {
      RunConfig fresh = RunConfig::for_profile(parse_profile(profile));
      fresh.train_path = cfg.train_path;
      fresh.dev_path = cfg.dev_path;
      fresh.test_path = cfg.test_path;
      fresh.embedding_path = cfg.embedding_path;
      fresh.out_dir = cfg.out_dir;
      cfg = fresh;
    }
    if (!scheme.empty()) apply_scheme_label(cfg, scheme);
    if (seed) cfg.seeds = {*seed};
    if (!out.empty()) cfg.out_dir = out;
    cfg.scheme.validate();
    return cfg;
  }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
}

const std::vector<QuestionGroup>& eval_split(const LoadedCorpus& corpus) {
  return corpus.test.empty() ? corpus.dev : corpus.test;
}

int cmd_train(const CommonArgs& args) {
  RunConfig cfg = args.resolve();
  std::filesystem::create_directories(cfg.out_dir);
  write_text(cfg.out_dir + "/config.json", cfg.to_json());
  LoadedCorpus corpus = load_run_corpus(cfg);

  const std::string label = cfg.scheme_label();
  SeedAggregate agg = run_seeds(cfg, corpus, [&](std::uint64_t seed, const TrainOutput& out) {
    const std::string tag = label + "_seed" + std::to_string(seed);
    write_text(cfg.out_dir + "/trace_" + tag + ".csv", out.trace.to_csv());
    save_checkpoint(out.model.named_parameters(), cfg.out_dir + "/checkpoint_" + tag + ".bin");
    RankReport rep = evaluate_corpus(eval_split(corpus), [&](const QuestionGroup& g) {
      return out.model.score_group(g);
    });
    rep.scheme = label;
    rep.seed = seed;
    rep.epoch = out.trace.best_epoch;
    write_report(rep, cfg.out_dir + "/report_" + tag + ".json");
    std::printf("seed %llu: %zu epochs, best dev MAP %.4f @ %d, test MAP %.4f MRR %.4f\n",
                static_cast<unsigned long long>(seed), out.trace.epochs.size(),
                out.trace.best_dev_map, out.trace.best_epoch, rep.map, rep.mrr);
  });
  write_text(cfg.out_dir + "/aggregate.json", agg.to_json());
  std::printf("%s: mean test MAP %.4f MRR %.4f over %zu seed(s)%s\n", label.c_str(),
              agg.mean_map, agg.mean_mrr, agg.runs.size(), agg.partial ? " [partial]" : "");
  return agg.partial ? 1 : 0;
}

int cmd_eval(const CommonArgs& args, const std::string& checkpoint_path,
             const std::string& split) {
  RunConfig cfg = args.resolve();
  LoadedCorpus corpus = load_run_corpus(cfg);
  Rng rng(0);
  RankingModel model(cfg.model_config(),
                     EmbeddingMatrix::zeros(corpus.vocab.size(), cfg.emb_dim), rng);
  load_checkpoint(model.named_parameters(), checkpoint_path);

  const std::vector<QuestionGroup>* groups = &eval_split(corpus);
  if (split == "train") groups = &corpus.train;
  else if (split == "dev") groups = &corpus.dev;
  else if (split == "test") groups = &corpus.test;
  if (groups->empty()) throw std::runtime_error("eval: split '" + split + "' is empty");

  RankReport rep = evaluate_corpus(*groups, [&](const QuestionGroup& g) {
    return model.score_group(g);
  });
  rep.scheme = cfg.scheme_label();
  if (!args.out.empty()) {
    std::filesystem::create_directories(args.out);
    write_report(rep, args.out + "/report.json");
  }
  std::printf("%s on %zu questions: MAP %.4f MRR %.4f\n", rep.scheme.c_str(),
              rep.questions.size(), rep.map, rep.mrr);
  return 0;
}

int cmd_gradcheck(const std::string& config_path, std::optional<std::uint64_t> seed_flag,
                  double step, double tolerance, std::string out) {
  std::uint64_t seed = 0;
  if (!config_path.empty()) {
    RunConfig cfg = RunConfig::from_json_file(config_path);
    if (!cfg.seeds.empty()) seed = cfg.seeds.front();
    if (out.empty()) out = cfg.out_dir;
  }
  if (seed_flag) seed = *seed_flag;
  auto results = grad_check_all(seed, step, tolerance);
  bool all_pass = true;
  for (const auto& r : results) {
    std::printf("%-22s %5d params  max rel err %.3e  fixtures %d  %s\n", r.label.c_str(),
                r.params_checked, r.max_rel_err, r.fixtures_tried, r.pass ? "PASS" : "FAIL");
    all_pass = all_pass && r.pass;
  }
  std::printf("gradcheck: %s\n", all_pass ? "PASS" : "FAIL");
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    std::string csv = "label,params,max_rel_err,fixtures,pass\n";
    for (const auto& r : results) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.6e", r.max_rel_err);
      csv += r.label + "," + std::to_string(r.params_checked) + "," + buf + "," +
             std::to_string(r.fixtures_tried) + "," + (r.pass ? "1" : "0") + "\n";
    }
    write_text(out + "/gradcheck.csv", csv);
  }
  return all_pass ? 0 : 1;
}

int cmd_curves(const CommonArgs& args, const std::string& schemes_csv, double list_threshold,
               double map_threshold) {
  RunConfig base = args.resolve();
  std::filesystem::create_directories(base.out_dir);
  LoadedCorpus corpus = load_run_corpus(base);

  std::vector<std::string> labels;
  std::string cur;
  for (char c : schemes_csv + ",") {
    if (c == ',') {
      if (!cur.empty()) labels.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }

  std::vector<TrainTrace> traces;
  for (const auto& label : labels) {
    RunConfig cfg = base;
    apply_scheme_label(cfg, label);
    double sum_epochs = 0.0;
    int reached = 0;
    for (std::uint64_t seed : cfg.seeds) {
      TrainOutput out = train_model(cfg, corpus, seed);
      out.trace.label = label + "_seed" + std::to_string(seed);
      if (auto e = out.trace.first_epoch_with_dev_map_at_least(map_threshold)) {
        sum_epochs += *e;
        ++reached;
      }
      traces.push_back(std::move(out.trace));
    }
    if (reached > 0)
      std::printf("%s: dev MAP >= %.2f after %.1f epochs on average (%d/%zu seeds)\n",
                  label.c_str(), map_threshold, sum_epochs / reached, reached,
                  cfg.seeds.size());
    else
      std::printf("%s: dev MAP threshold %.2f not reached\n", label.c_str(), map_threshold);
  }
  emit_curves(traces, base.out_dir, list_threshold, map_threshold);
  std::printf("curves written to %s\n", base.out_dir.c_str());
  return 0;
}

int cmd_synth(const std::string& config_path, std::optional<int> n_flag,
              std::optional<std::uint64_t> seed_flag, std::string out) {
  int n = 50;
  std::uint64_t seed = 0;
  if (!config_path.empty()) {
    RunConfig cfg = RunConfig::from_json_file(config_path);
    n = cfg.synth_questions;
    seed = cfg.synth_seed;
    if (out.empty()) out = cfg.out_dir;
  }
  if (n_flag) n = *n_flag;
  if (seed_flag) seed = *seed_flag;
  if (out.empty()) out = "synth_corpus";
  SynthCorpus corpus = synth_corpus(n, seed);
  std::filesystem::create_directories(out);
  write_corpus(corpus.train, corpus.vocab, out + "/train.jsonl");
  write_corpus(corpus.dev, corpus.vocab, out + "/dev.jsonl");
  write_corpus(corpus.test, corpus.vocab, out + "/test.jsonl");
  std::printf("synthetic corpus: %zu train / %zu dev / %zu test questions in %s\n",
              corpus.train.size(), corpus.dev.size(), corpus.test.size(), out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical ranking for answer selection"};
  app.require_subcommand(1);

  CommonArgs train_args, eval_args, curves_args;

  CLI::App* train = app.add_subcommand("train", "train one scheme over the configured seeds");
  train_args.attach(train);

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a corpus split");
  eval_args.attach(eval);
  std::string checkpoint_path, split = "test";
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval->add_option("--split", split, "train, dev or test (default test)");

  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "finite-difference gradient check of every scheme and ablation");
  std::string gc_config;
  std::optional<std::uint64_t> gc_seed;
  double gc_step = 1e-4, gc_tol = 1e-3;
  std::string gc_out;
  gradcheck->add_option("--config", gc_config, "JSON run configuration (seed/out defaults)");
  gradcheck->add_option("--seed", gc_seed, "fixture seed (default 0)");
  gradcheck->add_option("--step", gc_step, "central difference step (default 1e-4)");
  gradcheck->add_option("--tolerance", gc_tol, "max relative error (default 1e-3)");
  gradcheck->add_option("--out", gc_out, "directory for gradcheck.csv");

  CLI::App* curves = app.add_subcommand("curves", "train schemes and emit loss-curve CSVs");
  curves_args.attach(curves);
  std::string schemes_csv = "pri_list,list_only";
  double list_threshold = 0.05, map_threshold = 0.9;
  curves->add_option("--schemes", schemes_csv, "comma-separated scheme labels");
  curves->add_option("--list-threshold", list_threshold, "list-loss threshold for the summary");
  curves->add_option("--map-threshold", map_threshold, "dev-MAP threshold for the summary");

  CLI::App* synth = app.add_subcommand("synth", "generate the deterministic synthetic corpus");
  std::string synth_config;
  std::optional<int> synth_n;
  std::optional<std::uint64_t> synth_seed;
  std::string synth_out;
  synth->add_option("--config", synth_config, "JSON run configuration (n/seed/out defaults)");
  synth->add_option("--n", synth_n, "number of training questions (default 50)");
  synth->add_option("--seed", synth_seed, "corpus seed (default 0)");
  synth->add_option("--out", synth_out, "output directory (default synth_corpus)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(train_args);
    if (eval->parsed()) return cmd_eval(eval_args, checkpoint_path, split);
    if (gradcheck->parsed()) return cmd_gradcheck(gc_config, gc_seed, gc_step, gc_tol, gc_out);
    if (curves->parsed())
      return cmd_curves(curves_args, schemes_csv, list_threshold, map_threshold);
    if (synth->parsed()) return cmd_synth(synth_config, synth_n, synth_seed, synth_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
