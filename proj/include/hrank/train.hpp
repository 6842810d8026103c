#ifndef HRANK_TRAIN_HPP_
#define HRANK_TRAIN_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hrank/data.hpp"
#include "hrank/eval.hpp"
#include "hrank/schemes.hpp"

namespace hrank {

enum class Profile { wikiqa_like, trecqa_like, synthetic };

const char* profile_name(Profile p);
Profile parse_profile(const std::string& name);

// Everything a run needs. Profiles pre-fill the hyperparameters; a JSON
// config (see from_json_file) can override any field and rejects keys it
// does not know.
struct RunConfig {
  Profile profile = Profile::synthetic;

  std::string train_path, dev_path, test_path;
  std::string embedding_path;  // optional GloVe-format text file

  SchemeConfig scheme;
  PairGenConfig pair_gen;
  AttentionConfig attention;

  int emb_dim = 300;
  int hidden = 300;
  int channels = 150;
  std::vector<int> kernel_sizes{1, 2, 3, 4, 5};
  int head_hidden = 300;

  double lr_model = 5e-4;
  double lr_embeddings = 5e-5;
  bool train_embeddings = true;
  double emb_init_stddev = 0.0;  // > 0: random rows when no file is given

  int batch_questions = 30;
  int early_stop_patience = 10;
  int max_epochs = 100;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};

  int synth_questions = 50;  // synthetic profile corpus size
  std::uint64_t synth_seed = 0;

  std::string out_dir = "runs/out";

  static RunConfig for_profile(Profile p);
  static RunConfig from_json_file(const std::string& path);
  std::string to_json() const;

  ModelConfig model_config() const;
  std::string scheme_label() const;  // e.g. "pri_list" or "pri_list+no_pair"
};

struct LoadedCorpus {
  Vocabulary vocab;
  std::vector<QuestionGroup> train, dev, test;
};

// Files when paths are set, otherwise the deterministic synthetic corpus.
LoadedCorpus load_run_corpus(const RunConfig& cfg);

struct EpochRecord {
  int epoch = 0;  // 1-based
  std::optional<double> l_point, l_pair, l_list;
  double joint = 0.0;
  double dev_map = 0.0;
  double dev_mrr = 0.0;
  double wall_sec = 0.0;  // informational; never serialized or compared
};

struct TrainTrace {
  std::string label;
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_dev_map = 0.0;

  // columns: epoch,L_point,L_pair,L_list,joint,dev_map
  std::string to_csv() const;
  std::optional<int> first_epoch_with_list_loss_below(double threshold) const;
  std::optional<int> first_epoch_with_dev_map_at_least(double threshold) const;
};

// Strictly-improving dev-MAP tracker with patience in epochs.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}
  bool offer(int epoch, double dev_map);  // true when this is a new best
  bool should_stop(int epoch) const { return epoch - best_epoch_ >= patience_; }
  int best_epoch() const { return best_epoch_; }
  double best() const { return best_; }

 private:
  int patience_;
  int best_epoch_ = 0;
  double best_ = -1.0;
};

struct TrainOutput {
  RankingModel model;  // best-dev-MAP parameters restored
  TrainTrace trace;
};

// Optional per-epoch observer; returning true stops training after the
// current epoch (used by budgeted experiments; early stopping still
// applies). The model reference is mutable so tests and experiments can
// intervene between epochs.
using EpochHook = std::function<bool(RankingModel&, const TrainTrace&)>;

// One seed: init, epoch loop over batches of whole question groups, one
// optimizer step per batch, dev evaluation per epoch, patience-based stop,
// best-checkpoint restore. Throws on non-finite loss (divergence).
TrainOutput train_model(const RunConfig& cfg, const LoadedCorpus& corpus, std::uint64_t seed,
                        const EpochHook& hook = nullptr);

struct SeedRun {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double test_map = 0.0;
  double test_mrr = 0.0;
  int best_epoch = 0;
  int epochs_trained = 0;
};

struct SeedAggregate {
  std::vector<SeedRun> runs;
  double mean_map = 0.0;  // over successful runs
  double mean_mrr = 0.0;
  bool partial = false;   // some seed aborted
  std::string to_json() const;
};

// The callback, when given, sees every successful run (artifact writing).
using SeedRunCallback = std::function<void(std::uint64_t seed, const TrainOutput&)>;
SeedAggregate run_seeds(const RunConfig& cfg, const LoadedCorpus& corpus,
                        const SeedRunCallback& on_run = nullptr);

// --- gradient checking ----------------------------------------------------

// Central finite differences of loss_fn against the supplied analytic
// grads. Relative error uses max(|analytic|, |fd|, 1e-4) as denominator.
double compare_grads_with_fd(const std::function<Tensor()>& loss_fn,
                             std::vector<Tensor>& params,
                             const std::vector<std::vector<double>>& analytic, double step);

struct GradCheckResult {
  std::string label;
  double max_rel_err = 0.0;
  int params_checked = 0;
  int fixtures_tried = 0;
  bool pass = false;
};

// One scheme/ablation on the tiny double-precision profile (hidden 8,
// channels 4, kernels [1,2], vocab 20) with a small fixed batch. The loss
// is only piecewise differentiable, so a fixture whose evaluation point
// sits within the FD step of a relu/hinge/argmax boundary is redrawn
// (deterministically); a genuinely wrong backward rule fails every draw.
GradCheckResult grad_check_scheme(const SchemeConfig& scheme, std::uint64_t seed,
                                  double step = 1e-4, double tolerance = 1e-3);

// The six schemes plus the three PRI(list) ablations.
std::vector<GradCheckResult> grad_check_all(std::uint64_t seed = 0, double step = 1e-4,
                                            double tolerance = 1e-3);

// --- loss curves ------------------------------------------------------------

// One CSV per trace (curve_<label>.csv) plus curves_summary.csv with
// epochs-to-threshold for the list loss and dev MAP.
void emit_curves(const std::vector<TrainTrace>& traces, const std::string& out_dir,
                 double list_loss_threshold = 0.05, double dev_map_threshold = 0.9);

}  // namespace hrank

#endif  // HRANK_TRAIN_HPP_
