#ifndef HRANK_DATA_HPP_
#define HRANK_DATA_HPP_

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hrank/rng.hpp"
#include "hrank/tensor.hpp"

namespace hrank {

// One question with its full ordered candidate list; the unit of
// batching, list-level loss, and evaluation.
struct QuestionGroup {
  std::string qid;
  std::vector<int> question;  // token ids
  struct Candidate {
    std::vector<int> tokens;
    int label = 0;
    bool operator==(const Candidate&) const = default;
  };
  std::vector<Candidate> candidates;

  int positives() const;
  std::vector<int> labels() const;
  bool operator==(const QuestionGroup&) const = default;
};

// Token ids; id 0 is reserved for padding / out-of-vocabulary.
class Vocabulary {
 public:
  static constexpr int kPadId = 0;

  Vocabulary() : id_to_token_{"<pad>"} {}

  int add(const std::string& token);           // insert-or-get, never 0
  int lookup(const std::string& token) const;  // kPadId when absent
  const std::string& token(int id) const { return id_to_token_.at(id); }
  int size() const { return static_cast<int>(id_to_token_.size()); }

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

// Lowercase, split punctuation from words, then split on whitespace.
std::vector<std::string> tokenize(const std::string& text);

enum class Split { train, dev, test };

struct LoadStats {
  int groups = 0;
  int pairs = 0;
  int dropped_zero_positive = 0;
};

// JSON-lines corpus: one object per line,
//   {"qid": str, "question": str, "candidates": [{"text": str, "label": 0|1}]}
// Questions without a single positive candidate are dropped on every split.
std::vector<QuestionGroup> load_corpus(const std::string& path, Split split, Vocabulary& vocab,
                                       LoadStats* stats = nullptr);

void write_corpus(const std::vector<QuestionGroup>& groups, const Vocabulary& vocab,
                  const std::string& path);

// [vocab_size x dim] lookup table. Rows stay attributable to where their
// initial values came from; unmatched vocabulary rows are zero.
struct EmbeddingMatrix {
  enum class RowSource : unsigned char { zero_init, loaded, random_init };

  Tensor table;
  std::vector<RowSource> provenance;
  int dim = 0;

  static EmbeddingMatrix zeros(int vocab_size, int dim);
  static EmbeddingMatrix random(int vocab_size, int dim, double stddev, Rng& rng);
  // GloVe text format: "token v1 ... v<dim>". File tokens are case-folded
  // the same way the corpus is.
  static EmbeddingMatrix from_file(const std::string& path, const Vocabulary& vocab, int dim);

  double coverage() const;  // fraction of non-pad rows that were loaded
};

// Deterministic shuffle by seed, then chunking into groups of batch_size.
std::vector<std::vector<QuestionGroup>> make_batches(const std::vector<QuestionGroup>& groups,
                                                     int batch_size, std::uint64_t seed);

// Training-item accounting for one batch of question groups.
struct BatchStats {
  int point_items = 0;
  int all_pairs_items = 0;
  int max_negative_items = 0;
  int lists = 0;
};
BatchStats count_batch_items(const std::vector<QuestionGroup>& batch);

// Deterministic keyword-overlap corpus. Positives share at least two
// topic keywords with their question, negatives at most one, so a
// bag-of-words overlap scorer ranks it almost perfectly and a trainable
// model has clean signal to find.
struct SynthCorpus {
  Vocabulary vocab;
  std::vector<QuestionGroup> train, dev, test;
};
SynthCorpus synth_corpus(int n_train_questions, std::uint64_t seed);

}  // namespace hrank

#endif  // HRANK_DATA_HPP_
