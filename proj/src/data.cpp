#include "hrank/data.hpp"

#include <json.hpp>

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hrank {

int QuestionGroup::positives() const {
  int k = 0;
  for (const auto& c : candidates) k += (c.label == 1);
  return k;
}

std::vector<int> QuestionGroup::labels() const {
  std::vector<int> out;
  out.reserve(candidates.size());
  for (const auto& c : candidates) out.push_back(c.label);
  return out;
}

int Vocabulary::add(const std::string& token) {
  auto it = token_to_id_.find(token);
  if (it != token_to_id_.end()) return it->second;
  const int id = static_cast<int>(id_to_token_.size());
  token_to_id_.emplace(token, id);
  id_to_token_.push_back(token);
  return id;
}

int Vocabulary::lookup(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kPadId : it->second;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (unsigned char ch : text) {
    if (std::isspace(ch)) {
      flush();
    } else if (ch < 128 && std::ispunct(ch)) {
      flush();
      out.emplace_back(1, static_cast<char>(ch));
    } else {
      cur.push_back(static_cast<char>(std::tolower(ch)));
    }
  }
  flush();
  return out;
}

namespace {

[[noreturn]] void corpus_error(const std::string& path, int line, const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::vector<int> to_ids(const std::vector<std::string>& tokens, Vocabulary& vocab) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.add(t));
  return ids;
}

}  // namespace

std::vector<QuestionGroup> load_corpus(const std::string& path, Split /*split*/,
                                       Vocabulary& vocab, LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_corpus: cannot open " + path);

  std::vector<QuestionGroup> groups;
  LoadStats local;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      corpus_error(path, lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("qid") || !j.contains("question") ||
        !j.contains("candidates"))
      corpus_error(path, lineno, "record needs qid, question and candidates");

    QuestionGroup g;
    g.qid = j["qid"].get<std::string>();
    g.question = to_ids(tokenize(j["question"].get<std::string>()), vocab);
    if (g.question.empty()) corpus_error(path, lineno, "question has no tokens");

    const auto& cands = j["candidates"];
    if (!cands.is_array() || cands.empty())
      corpus_error(path, lineno, "empty candidate list");
    for (const auto& c : cands) {
      if (!c.contains("text") || !c.contains("label"))
        corpus_error(path, lineno, "candidate needs text and label");
      const int label = c["label"].get<int>();
      if (label != 0 && label != 1)
        corpus_error(path, lineno, "label must be 0 or 1, got " + std::to_string(label));
      QuestionGroup::Candidate cand;
      cand.tokens = to_ids(tokenize(c["text"].get<std::string>()), vocab);
      if (cand.tokens.empty()) corpus_error(path, lineno, "candidate has no tokens");
      cand.label = label;
      g.candidates.push_back(std::move(cand));
    }

    if (g.positives() == 0) {
      ++local.dropped_zero_positive;
      continue;
    }
    local.groups += 1;
    local.pairs += static_cast<int>(g.candidates.size());
    groups.push_back(std::move(g));
  }
  if (lineno == 0) throw std::runtime_error("load_corpus: " + path + " is empty");
  if (stats) *stats = local;
  return groups;
}

void write_corpus(const std::vector<QuestionGroup>& groups, const Vocabulary& vocab,
                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_corpus: cannot open " + path);
  auto join = [&](const std::vector<int>& ids) {
    std::string s;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) s += ' ';
      s += vocab.token(ids[i]);
    }
    return s;
  };
  for (const auto& g : groups) {
    nlohmann::ordered_json j;
    j["qid"] = g.qid;
    j["question"] = join(g.question);
    j["candidates"] = nlohmann::ordered_json::array();
    for (const auto& c : g.candidates)
      j["candidates"].push_back({{"text", join(c.tokens)}, {"label", c.label}});
    out << j.dump() << '\n';
  }
}

EmbeddingMatrix EmbeddingMatrix::zeros(int vocab_size, int dim) {
  EmbeddingMatrix e;
  e.dim = dim;
  e.table = Tensor::parameter(vocab_size, dim,
                              std::vector<double>(static_cast<std::size_t>(vocab_size) * dim, 0.0));
  e.provenance.assign(vocab_size, RowSource::zero_init);
  return e;
}

EmbeddingMatrix EmbeddingMatrix::random(int vocab_size, int dim, double stddev, Rng& rng) {
  EmbeddingMatrix e = zeros(vocab_size, dim);
  auto& v = e.table.mutable_values();
  // row 0 is the padding row and stays zero
  for (std::size_t i = dim; i < v.size(); ++i) v[i] = rng.normal(0.0, stddev);
  for (int r = 1; r < vocab_size; ++r) e.provenance[r] = RowSource::random_init;
  return e;
}

EmbeddingMatrix EmbeddingMatrix::from_file(const std::string& path, const Vocabulary& vocab,
                                           int dim) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_embeddings: cannot open " + path);
  EmbeddingMatrix e = zeros(vocab.size(), dim);
  auto& table = e.table.mutable_values();

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    // fold the same way the corpus tokenizer does
    for (auto& ch : token) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    std::vector<double> vals;
    vals.reserve(dim);
    double v;
    while (ss >> v) vals.push_back(v);
    if (static_cast<int>(vals.size()) != dim)
      throw std::runtime_error("load_embeddings: " + path + ":" + std::to_string(lineno) +
                               ": expected " + std::to_string(dim) + " values, got " +
                               std::to_string(vals.size()));
    const int id = vocab.lookup(token);
    if (id == Vocabulary::kPadId) continue;  // token not in corpus
    if (e.provenance[id] == RowSource::loaded) continue;
    std::copy(vals.begin(), vals.end(), table.begin() + static_cast<std::size_t>(id) * dim);
    e.provenance[id] = RowSource::loaded;
  }
  return e;
}

double EmbeddingMatrix::coverage() const {
  if (provenance.size() <= 1) return 0.0;
  int loaded = 0;
  for (std::size_t r = 1; r < provenance.size(); ++r)
    loaded += (provenance[r] == RowSource::loaded);
  return static_cast<double>(loaded) / static_cast<double>(provenance.size() - 1);
}

std::vector<std::vector<QuestionGroup>> make_batches(const std::vector<QuestionGroup>& groups,
                                                     int batch_size, std::uint64_t seed) {
  if (batch_size < 1)
    throw std::invalid_argument("make_batches: batch_size must be >= 1, got " +
                                std::to_string(batch_size));
  std::vector<QuestionGroup> shuffled = groups;
  Rng rng(seed);
  rng.shuffle(shuffled);
  std::vector<std::vector<QuestionGroup>> batches;
  for (std::size_t i = 0; i < shuffled.size(); i += batch_size) {
    const std::size_t end = std::min(shuffled.size(), i + batch_size);
    batches.emplace_back(shuffled.begin() + i, shuffled.begin() + end);
  }
  return batches;
}

BatchStats count_batch_items(const std::vector<QuestionGroup>& batch) {
  BatchStats s;
  for (const auto& g : batch) {
    const int k = g.positives();
    const int t = static_cast<int>(g.candidates.size()) - k;
    s.point_items += k + t;
    s.all_pairs_items += k * t;
    s.max_negative_items += (t > 0 ? k : 0);
    s.lists += 1;
  }
  return s;
}

namespace {

struct SynthLexicon {
  static constexpr int kTopics = 12;
  static constexpr int kKeywordsPerTopic = 6;
  std::vector<std::vector<int>> topic_keywords;
  std::vector<int> question_fillers;
  std::vector<int> candidate_fillers;
  std::vector<int> distractors;

  explicit SynthLexicon(Vocabulary& vocab) {
    for (int t = 0; t < kTopics; ++t) {
      auto& kws = topic_keywords.emplace_back();
      for (int k = 0; k < kKeywordsPerTopic; ++k)
        kws.push_back(vocab.add("kw" + std::to_string(t) + "x" + std::to_string(k)));
    }
    for (const char* w : {"what", "is", "the", "of", "which", "how", "why", "a"})
      question_fillers.push_back(vocab.add(w));
    for (const char* w : {"it", "that", "was", "because", "so", "then", "also", "this"})
      candidate_fillers.push_back(vocab.add(w));
    for (int d = 0; d < 40; ++d) distractors.push_back(vocab.add("noise" + std::to_string(d)));
  }
};

int pick(const std::vector<int>& pool, Rng& rng) {
  return pool[rng.uniform_u64(pool.size())];
}

std::vector<int> sample_distinct(const std::vector<int>& pool, int count, Rng& rng) {
  std::vector<int> shuffled = pool;
  rng.shuffle(shuffled);
  shuffled.resize(count);
  return shuffled;
}

QuestionGroup make_synth_group(const SynthLexicon& lex, Rng& rng, const std::string& qid) {
  QuestionGroup g;
  g.qid = qid;
  const int topic = rng.uniform_int(0, SynthLexicon::kTopics - 1);
  const auto& kws = lex.topic_keywords[topic];

  std::vector<int> q_keywords = sample_distinct(kws, 3, rng);
  g.question = q_keywords;
  g.question.push_back(pick(lex.question_fillers, rng));
  g.question.push_back(pick(lex.question_fillers, rng));
  rng.shuffle(g.question);

  const int k = rng.uniform_int(1, 2);
  const int t = rng.uniform_int(2, 4);

  for (int i = 0; i < k; ++i) {
    QuestionGroup::Candidate c;
    c.label = 1;
    // two of the question's own keywords, sometimes a third topic keyword
    std::vector<int> shared = sample_distinct(q_keywords, 2, rng);
    c.tokens = shared;
    if (rng.uniform_real() < 0.5) c.tokens.push_back(pick(kws, rng));
    c.tokens.push_back(pick(lex.candidate_fillers, rng));
    c.tokens.push_back(pick(lex.distractors, rng));
    rng.shuffle(c.tokens);
    g.candidates.push_back(std::move(c));
  }
  for (int i = 0; i < t; ++i) {
    QuestionGroup::Candidate c;
    c.label = 0;
    if (rng.uniform_real() < 0.5) c.tokens.push_back(pick(q_keywords, rng));  // at most one
    int other_topic = rng.uniform_int(0, SynthLexicon::kTopics - 1);
    if (other_topic == topic) other_topic = (other_topic + 1) % SynthLexicon::kTopics;
    c.tokens.push_back(pick(lex.topic_keywords[other_topic], rng));
    c.tokens.push_back(pick(lex.candidate_fillers, rng));
    c.tokens.push_back(pick(lex.distractors, rng));
    c.tokens.push_back(pick(lex.distractors, rng));
    rng.shuffle(c.tokens);
    g.candidates.push_back(std::move(c));
  }
  rng.shuffle(g.candidates);
  return g;
}

}  // namespace

SynthCorpus synth_corpus(int n_train_questions, std::uint64_t seed) {
  if (n_train_questions < 10)
    throw std::invalid_argument("synth_corpus: need at least 10 questions, got " +
                                std::to_string(n_train_questions));
  SynthCorpus corpus;
  SynthLexicon lex(corpus.vocab);
  Rng rng(seed);
  const int n_eval = std::max(5, (2 * n_train_questions) / 5);
  for (int i = 0; i < n_train_questions; ++i)
    corpus.train.push_back(make_synth_group(lex, rng, "synth-train-" + std::to_string(i)));
  for (int i = 0; i < n_eval; ++i)
    corpus.dev.push_back(make_synth_group(lex, rng, "synth-dev-" + std::to_string(i)));
  for (int i = 0; i < n_eval; ++i)
    corpus.test.push_back(make_synth_group(lex, rng, "synth-test-" + std::to_string(i)));
  return corpus;
}

}  // namespace hrank
