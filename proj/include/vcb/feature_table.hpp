#pragma once

// Image features and target labels.
//
// Binary feature file:
//   "VCBFEAT 1 <count> <dim>\n"
//   then per row: u32 LE id length, id bytes (UTF-8), dim x f32 LE
// TSV feature file: "id\tv1\t...\tvd" per line.
// Label file: "image_id\tlabel[;label...]" per line.

#include <charconv>
#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vcb/embeddings.hpp"
#include "vcb/io.hpp"
#include "vcb/linalg.hpp"

namespace vcb {

class FeatureTable {
 public:
  FeatureTable() = default;
  explicit FeatureTable(Eigen::Index dimension) : dim_(dimension), rows_(0, dimension) {}

  FeatureTable(std::vector<std::string> ids, Matrix rows)
      : dim_(rows.cols()), ids_(std::move(ids)), rows_(std::move(rows)) {
    require_dim("FeatureTable: id count", rows_.rows(), static_cast<Eigen::Index>(ids_.size()));
    for (std::size_t i = 0; i < ids_.size(); ++i)
      if (!index_.emplace(ids_[i], static_cast<Eigen::Index>(i)).second)
        throw Error("FeatureTable: duplicate id '" + ids_[i] + "'");
  }

  Eigen::Index dimension() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const Matrix& rows() const { return rows_; }

  std::optional<Eigen::Index> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  Eigen::Index at(std::string_view id) const {
    auto idx = find(id);
    if (!idx) throw Error("no features for image '" + std::string(id) + "'");
    return *idx;
  }

  auto row(std::string_view id) const { return rows_.row(at(id)); }

  /// Rows for the given ids, in the given order.
  Matrix gather(const std::vector<std::string>& ids) const {
    Matrix out(static_cast<Eigen::Index>(ids.size()), dim_);
    for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = row(ids[i]);
    return out;
  }

  FeatureTable subset(const std::vector<std::string>& ids) const { return FeatureTable(ids, gather(ids)); }

 private:
  Eigen::Index dim_ = 0;
  std::vector<std::string> ids_;
  Matrix rows_;
  std::unordered_map<std::string, Eigen::Index> index_;
};

inline constexpr std::string_view kFeatureMagic = "VCBFEAT";

inline std::string encode_features_binary(const FeatureTable& table) {
  std::string out = std::string(kFeatureMagic) + " 1 " + std::to_string(table.size()) + " " +
                    std::to_string(table.dimension()) + "\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& id = table.ids()[i];
    io::put_u32_le(out, static_cast<std::uint32_t>(id.size()));
    out += id;
    for (Eigen::Index j = 0; j < table.dimension(); ++j)
      io::put_f32_le(out, table.rows()(static_cast<Eigen::Index>(i), j));
  }
  return out;
}

inline FeatureTable decode_features_binary(std::string_view bytes) {
  const auto newline = bytes.find('\n');
  if (newline == std::string_view::npos) throw Error("feature file: missing header");
  std::istringstream header{std::string(bytes.substr(0, newline))};
  std::string magic;
  int version = 0;
  long long count = -1, dim = -1;
  header >> magic >> version >> count >> dim;
  if (magic != kFeatureMagic || !header || count < 0 || dim < 0)
    throw Error("feature file: malformed header");
  if (version != 1) throw Error("feature file: unsupported version " + std::to_string(version));
  std::size_t at = newline + 1;
  std::vector<std::string> ids;
  Matrix rows(count, dim);
  for (long long i = 0; i < count; ++i) {
    if (at + 4 > bytes.size()) throw Error("feature file: truncated at row " + std::to_string(i));
    const auto len = io::get_u32_le(bytes, at);
    at += 4;
    if (at + len + 4 * static_cast<std::size_t>(dim) > bytes.size())
      throw Error("feature file: truncated at row " + std::to_string(i));
    ids.emplace_back(bytes.substr(at, len));
    at += len;
    for (long long j = 0; j < dim; ++j, at += 4) rows(i, j) = io::get_f32_le(bytes, at);
  }
  if (at != bytes.size()) throw Error("feature file: trailing bytes after last row");
  return FeatureTable(std::move(ids), std::move(rows));
}

inline FeatureTable decode_features_tsv(std::string_view text) {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> values;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    std::vector<double> row(fields.size() - 1);
    for (std::size_t k = 1; k < fields.size(); ++k)
      if (!detail::parse_double(fields[k], row[k - 1]))
        throw Error("feature TSV line " + std::to_string(line_no) + ": bad number");
    if (!values.empty() && row.size() != values.front().size())
      throw DimensionError("feature TSV line " + std::to_string(line_no),
                           static_cast<Eigen::Index>(values.front().size()),
                           static_cast<Eigen::Index>(row.size()));
    ids.emplace_back(fields[0]);
    values.push_back(std::move(row));
  }
  const Eigen::Index dim = values.empty() ? 0 : static_cast<Eigen::Index>(values.front().size());
  Matrix rows(static_cast<Eigen::Index>(values.size()), dim);
  for (std::size_t i = 0; i < values.size(); ++i)
    for (Eigen::Index j = 0; j < dim; ++j) rows(static_cast<Eigen::Index>(i), j) = values[i][j];
  return FeatureTable(std::move(ids), std::move(rows));
}

/// Reads either feature format; the binary one is recognized by its magic.
inline FeatureTable load_feature_table(const std::filesystem::path& path) {
  const std::string bytes = io::read_file(path);
  if (std::string_view(bytes).starts_with(kFeatureMagic)) return decode_features_binary(bytes);
  return decode_features_tsv(bytes);
}

/// image id -> ordered set of labels.
struct LabelSet {
  std::vector<std::string> ids;                    // file order
  std::map<std::string, std::vector<std::string>> labels;

  /// Sorted distinct labels.
  std::vector<std::string> classes() const {
    std::set<std::string> all;
    for (const auto& [_, ls] : labels) all.insert(ls.begin(), ls.end());
    return {all.begin(), all.end()};
  }

  bool multi_label() const {
    for (const auto& [_, ls] : labels)
      if (ls.size() != 1) return true;
    return false;
  }
};

inline LabelSet parse_labels(std::string_view text) {
  LabelSet out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw Error("label file line " + std::to_string(line_no) + ": expected 'id<TAB>labels'");
    std::string id(line.substr(0, tab));
    std::vector<std::string> labels;
    std::string_view rest = line.substr(tab + 1);
    std::size_t start = 0;
    while (start <= rest.size()) {
      auto semi = rest.find(';', start);
      auto piece = rest.substr(start, semi == std::string_view::npos ? std::string_view::npos : semi - start);
      if (!piece.empty()) labels.emplace_back(piece);
      if (semi == std::string_view::npos) break;
      start = semi + 1;
    }
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    if (!out.labels.emplace(id, std::move(labels)).second)
      throw Error("label file line " + std::to_string(line_no) + ": duplicate id '" + id + "'");
    out.ids.push_back(std::move(id));
  }
  return out;
}

inline std::string encode_labels(const LabelSet& set) {
  std::string out;
  for (const auto& id : set.ids) {
    out += id;
    out += '\t';
    const auto& ls = set.labels.at(id);
    for (std::size_t k = 0; k < ls.size(); ++k) {
      if (k) out += ';';
      out += ls[k];
    }
    out += '\n';
  }
  return out;
}

inline LabelSet load_labels(const std::filesystem::path& path) { return parse_labels(io::read_file(path)); }

}  // namespace vcb
