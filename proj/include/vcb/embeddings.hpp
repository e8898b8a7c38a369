#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vcb/linalg.hpp"
#include "vcb/text_norm.hpp"

namespace vcb {

/// Word -> dense vector table, all vectors of length `dimension()`.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(Eigen::Index dimension) : dimension_(dimension) {}

  Eigen::Index dimension() const { return dimension_; }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  /// Inserts unless the word is already present (first occurrence wins).
  bool insert(std::string word, Vector v) {
    require_dim("EmbeddingStore::insert", dimension_, v.size());
    auto [it, inserted] = table_.try_emplace(word, std::move(v));
    if (inserted) words_.push_back(std::move(word));
    return inserted;
  }

  const Vector* find(std::string_view word) const {
    auto it = table_.find(std::string(word));
    return it == table_.end() ? nullptr : &it->second;
  }

 private:
  Eigen::Index dimension_ = 0;
  std::unordered_map<std::string, Vector> table_;
  std::vector<std::string> words_;
};

struct EmbeddingLoad {
  EmbeddingStore store;
  std::size_t skipped_lines = 0;      // malformed or wrong dimension
  std::size_t duplicate_words = 0;
};

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

// Parses "word v1 ... vD"; returns false when any value is not a number.
inline bool parse_embedding_line(std::string_view line, std::string& word, std::vector<double>& values) {
  auto fields = split_ws(line);
  if (fields.size() < 2) return false;
  word.assign(fields[0]);
  values.resize(fields.size() - 1);
  for (std::size_t k = 1; k < fields.size(); ++k)
    if (!parse_double(fields[k], values[k - 1])) return false;
  return true;
}

}  // namespace detail

/// Reads the whitespace-separated text format "word v1 ... vD", one word per
/// line. D comes from the first line. Lines that fail to parse or have a
/// different length are skipped and counted; more than half of the lines
/// having the wrong length means the file is not an embedding table.
inline EmbeddingLoad load_embeddings(std::istream& in) {
  EmbeddingLoad result;
  std::string line;
  std::string word;
  std::vector<double> values;
  std::size_t total = 0;
  std::size_t wrong_dim = 0;
  bool have_first = false;
  Eigen::Index dim = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    ++total;
    const bool ok = detail::parse_embedding_line(line, word, values);
    if (!have_first) {
      if (!ok) throw Error("load_embeddings: first line is not 'word v1 ... vD'");
      dim = static_cast<Eigen::Index>(values.size());
      result.store = EmbeddingStore(dim);
      have_first = true;
    }
    if (!ok) {
      ++result.skipped_lines;
      continue;
    }
    if (static_cast<Eigen::Index>(values.size()) != dim) {
      ++wrong_dim;
      ++result.skipped_lines;
      continue;
    }
    Vector v = Eigen::Map<const Vector>(values.data(), dim);
    if (!result.store.insert(word, std::move(v))) ++result.duplicate_words;
  }
  if (total == 0) throw Error("load_embeddings: empty input");
  if (2 * wrong_dim > total)
    throw Error("load_embeddings: " + std::to_string(wrong_dim) + " of " + std::to_string(total) +
                " lines disagree with dimension " + std::to_string(dim));
  return result;
}

inline EmbeddingLoad load_embeddings_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embeddings: " + path);
  return load_embeddings(in);
}

struct PhraseVector {
  std::optional<Vector> vector;
  std::vector<std::string> missing;
};

/// Mean of the stored vectors of the words present in the store. Words are
/// summed in sorted order, so the result does not depend on word order.
inline PhraseVector phrase_vector(const EmbeddingStore& store, const std::vector<std::string>& words) {
  PhraseVector out;
  std::vector<const std::string*> found;
  for (const auto& w : words) {
    if (store.find(w))
      found.push_back(&w);
    else
      out.missing.push_back(w);
  }
  if (found.empty()) return out;
  std::sort(found.begin(), found.end(), [](const std::string* a, const std::string* b) { return *a < *b; });
  Vector sum = Vector::Zero(store.dimension());
  for (const auto* w : found) sum += *store.find(*w);
  out.vector = sum / static_cast<double>(found.size());
  return out;
}

}  // namespace vcb
