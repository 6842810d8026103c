#include "hrank/schemes.hpp"

#include <stdexcept>

#include "hrank/eval.hpp"

namespace hrank {

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::mtl: return "mtl";
    case Scheme::ri_point: return "ri_point";
    case Scheme::ri_pair: return "ri_pair";
    case Scheme::ri_list: return "ri_list";
    case Scheme::pri_point: return "pri_point";
    case Scheme::pri_list: return "pri_list";
  }
  return "?";
}

const char* ablation_name(Ablation a) {
  switch (a) {
    case Ablation::none: return "none";
    case Ablation::no_point: return "no_point";
    case Ablation::no_pair: return "no_pair";
    case Ablation::all_list: return "all_list";
  }
  return "?";
}

Scheme parse_scheme(const std::string& name) {
  for (Scheme s : {Scheme::mtl, Scheme::ri_point, Scheme::ri_pair, Scheme::ri_list,
                   Scheme::pri_point, Scheme::pri_list})
    if (name == scheme_name(s)) return s;
  throw std::invalid_argument("unknown scheme: " + name);
}

Ablation parse_ablation(const std::string& name) {
  for (Ablation a : {Ablation::none, Ablation::no_point, Ablation::no_pair, Ablation::all_list})
    if (name == ablation_name(a)) return a;
  throw std::invalid_argument("unknown ablation: " + name);
}

Level SchemeConfig::main_level() const {
  switch (scheme) {
    case Scheme::mtl: return mtl_main_level;
    case Scheme::ri_point:
    case Scheme::pri_point: return Level::point;
    case Scheme::ri_pair: return Level::pair;
    case Scheme::ri_list:
    case Scheme::pri_list: return Level::list;
  }
  return Level::list;
}

bool SchemeConfig::level_active(Level level) const {
  if (ablation == Ablation::no_point && level == Level::point) return false;
  if (ablation == Ablation::no_pair && level == Level::pair) return false;
  return true;
}

void SchemeConfig::validate() const {
  if (lambda_point < 0 || lambda_pair < 0 || lambda_list < 0)
    throw std::invalid_argument("scheme config: negative loss weight");
  if (!level_active(main_level()))
    throw std::invalid_argument(std::string("scheme config: ablation ") +
                                ablation_name(ablation) + " removes the main level " +
                                level_name(main_level()));
}

int FeatureDims::of(Level level) const {
  switch (level) {
    case Level::point: return point;
    case Level::pair: return pair;
    case Level::list: return list;
  }
  return 0;
}

namespace {

constexpr Level kChainUp[] = {Level::point, Level::pair, Level::list};    // PRI(list)
constexpr Level kChainDown[] = {Level::list, Level::pair, Level::point};  // PRI(point)

int& dim_of(FeatureDims& d, Level level) {
  switch (level) {
    case Level::point: return d.point;
    case Level::pair: return d.pair;
    case Level::list: return d.list;
  }
  return d.point;
}

}  // namespace

FeatureDims enhanced_dims(const SchemeConfig& cfg, int base_dim) {
  cfg.validate();
  FeatureDims dims;
  int active = 0;
  for (Level l : kChainUp) active += cfg.level_active(l);

  switch (cfg.scheme) {
    case Scheme::mtl:
      for (Level l : kChainUp)
        if (cfg.level_active(l)) dim_of(dims, l) = base_dim;
      break;
    case Scheme::ri_point:
    case Scheme::ri_pair:
    case Scheme::ri_list:
      for (Level l : kChainUp)
        if (cfg.level_active(l)) dim_of(dims, l) = base_dim;
      dim_of(dims, cfg.main_level()) = base_dim * active;
      break;
    case Scheme::pri_list:
    case Scheme::pri_point: {
      int running = 0;
      for (Level l : (cfg.scheme == Scheme::pri_list ? kChainUp : kChainDown)) {
        if (!cfg.level_active(l)) continue;
        running += base_dim;
        dim_of(dims, l) = running;
      }
      break;
    }
  }
  return dims;
}

const Tensor& MatchFeatures::enhanced(Level level) const {
  switch (level) {
    case Level::point: return enhanced_point;
    case Level::pair: return enhanced_pair;
    case Level::list: return enhanced_list;
  }
  return enhanced_point;
}

MatchFeatures build_features(const Tensor& r_point, const Tensor& r_pair, const Tensor& r_list,
                             const SchemeConfig& cfg) {
  cfg.validate();
  MatchFeatures mf;
  mf.r_point = r_point;
  mf.r_pair = r_pair;
  mf.r_list = r_list;

  auto raw = [&](Level l) -> const Tensor& {
    switch (l) {
      case Level::point: return mf.r_point;
      case Level::pair: return mf.r_pair;
      case Level::list: return mf.r_list;
    }
    return mf.r_point;
  };
  auto set = [&](Level l, Tensor t) {
    switch (l) {
      case Level::point: mf.enhanced_point = std::move(t); break;
      case Level::pair: mf.enhanced_pair = std::move(t); break;
      case Level::list: mf.enhanced_list = std::move(t); break;
    }
  };
  for (Level l : kChainUp)
    if (cfg.level_active(l) && !raw(l).defined())
      throw std::invalid_argument(std::string("build_features: missing raw feature for ") +
                                  level_name(l));
  auto import = [&](const Tensor& t) { return cfg.detach_auxiliary ? t.detached() : t; };

  switch (cfg.scheme) {
    case Scheme::mtl:
      for (Level l : kChainUp)
        if (cfg.level_active(l)) set(l, raw(l));
      break;
    case Scheme::ri_point:
    case Scheme::ri_pair:
    case Scheme::ri_list: {
      const Level main = cfg.main_level();
      std::vector<Tensor> parts;
      for (Level l : kChainUp) {
        if (!cfg.level_active(l) || l == main) continue;
        set(l, raw(l));
        parts.push_back(import(raw(l)));
      }
      parts.push_back(raw(main));
      set(main, parts.size() == 1 ? parts[0] : concat_cols(parts));
      break;
    }
    case Scheme::pri_list:
    case Scheme::pri_point: {
      Tensor prev;
      for (Level l : (cfg.scheme == Scheme::pri_list ? kChainUp : kChainDown)) {
        if (!cfg.level_active(l)) continue;
        Tensor e;
        if (prev.defined()) {
          Tensor parts[] = {import(prev), raw(l)};
          e = concat_cols(parts);
        } else {
          e = raw(l);
        }
        set(l, e);
        prev = e;
      }
      break;
    }
  }
  return mf;
}

Tensor joint_loss(const Tensor& l_point, const Tensor& l_pair, const Tensor& l_list,
                  const SchemeConfig& cfg) {
  cfg.validate();
  struct Term {
    Level level;
    const Tensor* loss;
    double weight;
  };
  const Term terms[] = {{Level::point, &l_point, cfg.lambda_point},
                        {Level::pair, &l_pair, cfg.lambda_pair},
                        {Level::list, &l_list, cfg.lambda_list}};
  Tensor total;
  for (const auto& t : terms) {
    if (!cfg.level_active(t.level)) continue;
    if (!t.loss->defined())
      throw std::invalid_argument(std::string("joint_loss: missing loss for active level ") +
                                  level_name(t.level));
    Tensor weighted = scale(*t.loss, t.weight);
    total = total.defined() ? add(total, weighted) : weighted;
  }
  return total;
}

RankingModel::RankingModel(const ModelConfig& cfg, EmbeddingMatrix embeddings, Rng& rng)
    : cfg_(cfg), embeddings_(std::move(embeddings)) {
  cfg_.scheme.validate();
  if (embeddings_.dim != cfg_.emb_dim)
    throw std::invalid_argument("model: embedding dim " + std::to_string(embeddings_.dim) +
                                " does not match config emb_dim " +
                                std::to_string(cfg_.emb_dim));
  embeddings_.table.set_requires_grad(cfg_.train_embeddings);
  dims_ = enhanced_dims(cfg_.scheme, cfg_.base_feature_dim());

  encoder_ = EncoderParams::init(cfg_.emb_dim, cfg_.hidden, rng);
  const bool all_list = cfg_.scheme.ablation == Ablation::all_list;

  struct Branch {
    Level level;
    std::optional<AggregatorParams>* agg;
    std::optional<HeadParams>* head;
  };
  Branch branches[] = {{Level::point, &agg_point_, &head_point_},
                       {Level::pair, &agg_pair_, &head_pair_},
                       {Level::list, &agg_list_, &head_list_}};
  for (auto& b : branches) {
    if (!cfg_.scheme.level_active(b.level)) continue;
    *b.agg = AggregatorParams::init(cfg_.hidden, cfg_.channels, cfg_.kernel_sizes, rng);
    const int out_dim = (b.level == Level::point && !all_list) ? 2 : 1;
    *b.head = HeadParams::init(dims_.of(b.level), cfg_.head_hidden, out_dim, rng);
    if ((*b.head)->in_dim() != dims_.of(b.level))
      throw std::logic_error("model: head input dim disagrees with the dimension ledger");
  }
}

RankingModel::GroupForward RankingModel::forward_group(const QuestionGroup& group) const {
  const int n = static_cast<int>(group.candidates.size());
  if (n < 1) throw std::invalid_argument("forward_group: question " + group.qid +
                                         " has no candidates");
  const SchemeConfig& sc = cfg_.scheme;

  Tensor eq = gather_rows(embeddings_.table, group.question);
  Tensor hq = gated_projection(eq, encoder_);

  std::vector<Tensor> r_point, r_pair, r_list;
  for (const auto& cand : group.candidates) {
    Tensor ea = gather_rows(embeddings_.table, cand.tokens);
    Tensor ha = gated_projection(ea, encoder_);
    Alignment al = attend_align(hq, ha, cfg_.attention);
    Tensor cq = compare(al.hq_hat, hq);
    Tensor ca = compare(al.ha_hat, ha);
    if (agg_point_) r_point.push_back(aggregate(cq, ca, *agg_point_));
    if (agg_pair_) r_pair.push_back(aggregate(cq, ca, *agg_pair_));
    if (agg_list_) r_list.push_back(aggregate(cq, ca, *agg_list_));
  }
  auto stack = [](std::vector<Tensor>& rows) {
    return rows.empty() ? Tensor() : concat_rows(rows);
  };
  MatchFeatures mf = build_features(stack(r_point), stack(r_pair), stack(r_list), sc);

  GroupForward out;
  const bool all_list = sc.ablation == Ablation::all_list;
  if (head_point_) {
    Tensor o = head_point_->apply(mf.enhanced(Level::point));
    if (all_list)
      out.point_scores = o;
    else
      out.point_probs = row_softmax(o);
  }
  if (head_pair_) out.pair_scores = head_pair_->apply(mf.enhanced(Level::pair));
  if (head_list_) out.list_scores = head_list_->apply(mf.enhanced(Level::list));
  return out;
}

RankingModel::GroupLoss RankingModel::group_loss(const QuestionGroup& group) const {
  const SchemeConfig& sc = cfg_.scheme;
  const std::vector<int> labels = group.labels();
  GroupForward fwd = forward_group(group);

  Tensor l_point, l_pair, l_list;
  const bool all_list = sc.ablation == Ablation::all_list;
  if (sc.level_active(Level::point))
    l_point = all_list ? list_loss(fwd.point_scores, labels)
                       : point_loss(fwd.point_probs, labels);
  if (sc.level_active(Level::pair)) {
    if (all_list) {
      l_pair = list_loss(fwd.pair_scores, labels);
    } else {
      CandidateScores cs{fwd.pair_scores.values(), labels};
      l_pair = pair_loss(fwd.pair_scores, generate_pairs(cs, cfg_.pair_gen), cfg_.pair_gen);
    }
  }
  if (sc.level_active(Level::list)) l_list = list_loss(fwd.list_scores, labels);

  GroupLoss out;
  out.joint = joint_loss(l_point, l_pair, l_list, sc);
  if (l_point.defined()) out.point = l_point.value();
  if (l_pair.defined()) out.pair = l_pair.value();
  if (l_list.defined()) out.list = l_list.value();
  return out;
}

std::vector<double> RankingModel::score_group(const QuestionGroup& group) const {
  const SchemeConfig& sc = cfg_.scheme;
  GroupForward fwd = forward_group(group);
  if (sc.ablation == Ablation::all_list) {
    const Tensor& main_scores = sc.main_level() == Level::point  ? fwd.point_scores
                                : sc.main_level() == Level::pair ? fwd.pair_scores
                                                                 : fwd.list_scores;
    return predict_scores(Level::list, Tensor(), Tensor(), main_scores);
  }
  return predict_scores(sc.main_level(), fwd.point_probs, fwd.pair_scores, fwd.list_scores);
}

std::vector<RankingModel::RankedCandidate> RankingModel::rank_question(
    const QuestionGroup& group) const {
  const std::vector<double> scores = score_group(group);
  std::vector<RankedCandidate> out;
  out.reserve(scores.size());
  for (int idx : rank_candidates(scores)) out.push_back({idx, scores[idx]});
  return out;
}

NamedTensors RankingModel::named_parameters() const {
  NamedTensors out;
  out.emplace_back("embeddings", embeddings_.table);
  encoder_.collect("encoder", out);
  if (agg_point_) agg_point_->collect("agg_point", out);
  if (agg_pair_) agg_pair_->collect("agg_pair", out);
  if (agg_list_) agg_list_->collect("agg_list", out);
  if (head_point_) head_point_->collect("head_point", out);
  if (head_pair_) head_pair_->collect("head_pair", out);
  if (head_list_) head_list_->collect("head_list", out);
  return out;
}

}  // namespace hrank
