#ifndef HRANK_SCHEMES_HPP_
#define HRANK_SCHEMES_HPP_

#include <optional>
#include <string>
#include <vector>

#include "hrank/backbone.hpp"
#include "hrank/data.hpp"
#include "hrank/ranking.hpp"
#include "hrank/tensor.hpp"

namespace hrank {

enum class Scheme { mtl, ri_point, ri_pair, ri_list, pri_point, pri_list };
enum class Ablation { none, no_point, no_pair, all_list };

const char* scheme_name(Scheme s);
const char* ablation_name(Ablation a);
Scheme parse_scheme(const std::string& name);
Ablation parse_ablation(const std::string& name);

struct SchemeConfig {
  Scheme scheme = Scheme::mtl;
  // Only consulted for MTL; RI/PRI fix their main level.
  Level mtl_main_level = Level::list;
  double lambda_point = 1.0;
  double lambda_pair = 1.0;
  double lambda_list = 1.0;
  Ablation ablation = Ablation::none;
  // Stop-gradient at concatenation boundaries (experimentation toggle;
  // default lets auxiliary branches receive main-objective gradient).
  bool detach_auxiliary = false;

  Level main_level() const;
  bool level_active(Level level) const;
  void validate() const;
};

// Enhanced feature length per level for a given raw feature length;
// 0 marks an ablated branch.
struct FeatureDims {
  int point = 0;
  int pair = 0;
  int list = 0;
  int of(Level level) const;
};
FeatureDims enhanced_dims(const SchemeConfig& cfg, int base_dim);

// Raw per-level matching features and their scheme-wired versions.
// Works on [n x base] stacks (one row per candidate) or single rows.
struct MatchFeatures {
  Tensor r_point, r_pair, r_list;
  Tensor enhanced_point, enhanced_pair, enhanced_list;
  const Tensor& enhanced(Level level) const;
};
MatchFeatures build_features(const Tensor& r_point, const Tensor& r_pair, const Tensor& r_list,
                             const SchemeConfig& cfg);

// L = lambda_point*L_point + lambda_pair*L_pair + lambda_list*L_list over
// the active levels. Undefined loss tensors are only legal for ablated levels.
Tensor joint_loss(const Tensor& l_point, const Tensor& l_pair, const Tensor& l_list,
                  const SchemeConfig& cfg);

struct ModelConfig {
  int emb_dim = 300;
  int hidden = 300;
  int channels = 150;
  std::vector<int> kernel_sizes{1, 2, 3, 4, 5};
  int head_hidden = 300;
  AttentionConfig attention;
  SchemeConfig scheme;
  PairGenConfig pair_gen;
  bool train_embeddings = true;

  int base_feature_dim() const {
    return 2 * channels * static_cast<int>(kernel_sizes.size());
  }
};

// The compare-aggregate network with three level-specific branches, wired
// per the configured integration scheme. Encoding and interaction are
// shared; comparison/aggregation and heads are per level. Under the
// all_list ablation every branch scores list-style (single output, list
// loss) while the concatenation topology is kept.
class RankingModel {
 public:
  RankingModel(const ModelConfig& cfg, EmbeddingMatrix embeddings, Rng& rng);

  struct GroupForward {
    Tensor point_probs;  // [n x 2] softmax rows (undefined when inactive or all_list)
    Tensor point_scores; // [n x 1] raw branch output under all_list
    Tensor pair_scores;  // [n x 1]
    Tensor list_scores;  // [n x 1]
  };
  GroupForward forward_group(const QuestionGroup& group) const;

  struct GroupLoss {
    Tensor joint;
    std::optional<double> point, pair, list;  // per-level values for traces
  };
  GroupLoss group_loss(const QuestionGroup& group) const;

  // Main-objective prediction scores, one per candidate.
  std::vector<double> score_group(const QuestionGroup& group) const;

  struct RankedCandidate {
    int index;
    double score;
  };
  // Descending stable order, ties to the lower candidate index.
  std::vector<RankedCandidate> rank_question(const QuestionGroup& group) const;

  const ModelConfig& config() const { return cfg_; }
  const FeatureDims& dims() const { return dims_; }
  const EmbeddingMatrix& embeddings() const { return embeddings_; }

  // Deterministic order; "embeddings" first, then encoder, branches, heads.
  NamedTensors named_parameters() const;

 private:
  ModelConfig cfg_;
  FeatureDims dims_;
  EmbeddingMatrix embeddings_;
  EncoderParams encoder_;
  std::optional<AggregatorParams> agg_point_, agg_pair_, agg_list_;
  std::optional<HeadParams> head_point_, head_pair_, head_list_;
};

}  // namespace hrank

#endif  // HRANK_SCHEMES_HPP_
