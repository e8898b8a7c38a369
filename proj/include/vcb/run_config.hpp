#pragma once

// Run configuration for the command-line tools.
//
// File format: one "key = value" per line, '#' starts a comment line, blank
// lines ignored. Unknown keys are errors. Relative paths resolve against the
// directory of the config file. Encoding writes every key in schema order, so
// decode(encode(c)) == c.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vcb/io.hpp"
#include "vcb/linalg.hpp"
#include "vcb/text_norm.hpp"

namespace vcb {

enum class ValueKind { Path, Text, Integer, Real, Flag, IntegerList };

struct ConfigKey {
  std::string_view name;
  ValueKind kind;
  std::string_view default_value;
  std::string_view doc;
};

// clang-format off
inline constexpr ConfigKey kConfigSchema[] = {
  {"features",        ValueKind::Path,    "", "feature table (binary or TSV)"},
  {"annotations",     ValueKind::Path,    "", "region annotations (JSON lines)"},
  {"embeddings",      ValueKind::Path,    "", "word embeddings (text); empty disables clustering"},
  {"train_labels",    ValueKind::Path,    "", "training labels (TSV)"},
  {"test_labels",     ValueKind::Path,    "", "evaluation labels (TSV)"},
  {"stopwords_noun",  ValueKind::Path,    "", "noun stopword list; empty uses the bundled list"},
  {"stopwords_attr",  ValueKind::Path,    "", "attribute stopword list; empty uses the bundled list"},
  {"aliases",         ValueKind::Path,    "", "class-name alias list; optional"},
  {"out_dir",         ValueKind::Path,    "run", "run directory for all outputs"},
  {"concept_kind",    ValueKind::Text,    "obj", "obj | attr | objattr"},
  {"min_count",       ValueKind::Integer, "10", "minimum image count per concept"},
  {"k_clusters",      ValueKind::Integer, "100", "embedding clusters for negative mining"},
  {"max_pos",         ValueKind::Integer, "1000", "positive cap per concept"},
  {"neg_ratio",       ValueKind::Real,    "3", "negatives per positive"},
  {"C",               ValueKind::Real,    "1", "SVM regularization"},
  {"tol",             ValueKind::Real,    "0.0001", "SVM duality-gap tolerance"},
  {"max_epochs",      ValueKind::Integer, "1000", "SVM epoch limit"},
  {"pca_n",           ValueKind::Integer, "900", "PCA dimension for target models; 0 disables PCA"},
  {"label_mode",      ValueKind::Text,    "auto", "auto | single | multi"},
  {"train_direct",    ValueKind::Flag,    "false", "also train a target model on raw features"},
  {"alpha",           ValueKind::Real,    "0.5", "fusion weight of the concept model"},
  {"top_k",           ValueKind::Integer, "5", "keywords per class"},
  {"weight_window",   ValueKind::Integer, "50", "moving-average window over concepts"},
  {"select_ks",       ValueKind::IntegerList, "0,5,10,15,20,25,30,35,40,45,50,55,60,65,70,75,80,85,90,95,100",
                                              "concept counts for selection curves"},
  {"frequency_ascending", ValueKind::Flag, "false", "order concepts by ascending frequency"},
  {"seed",            ValueKind::Integer, "7", "master seed"},
  {"threads",         ValueKind::Integer, "1", "worker threads; never changes results"},
  {"synth_feature_dim",      ValueKind::Integer, "64", ""},
  {"synth_concepts",         ValueKind::Integer, "50", ""},
  {"synth_classes",          ValueKind::Integer, "10", ""},
  {"synth_constituents",     ValueKind::Integer, "5", ""},
  {"synth_concept_images",   ValueKind::Integer, "4000", ""},
  {"synth_train_per_class",  ValueKind::Integer, "200", ""},
  {"synth_test_per_class",   ValueKind::Integer, "100", ""},
  {"synth_tail_exponent",    ValueKind::Real,    "0.5", ""},
  {"synth_noise_sigma",      ValueKind::Real,    "0.05", ""},
  {"synth_background",       ValueKind::Real,    "4", "expected background concepts per image"},
  {"synth_constituent_prob", ValueKind::Real,    "0.7", ""},
  {"synth_embedding_dim",    ValueKind::Integer, "16", ""},
  {"synth_embedding_noise",  ValueKind::Real,    "0.1", ""},
  {"synth_disjoint",         ValueKind::Flag,    "false", "constituent sets disjoint across classes"},
};
// clang-format on

inline const ConfigKey* find_config_key(std::string_view name) {
  for (const auto& k : kConfigSchema)
    if (k.name == name) return &k;
  return nullptr;
}

namespace detail {

inline bool parse_integer(std::string_view s, long long& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

inline bool parse_real(std::string_view s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

inline std::vector<long long> parse_integer_list(std::string_view key, std::string_view s) {
  std::vector<long long> out;
  std::size_t pos = 0;
  while (pos <= s.size() && !s.empty()) {
    const auto comma = std::min(s.find(',', pos), s.size());
    long long v = 0;
    if (!parse_integer(detail::trim(s.substr(pos, comma - pos)), v))
      throw Error("config: '" + std::string(key) + "' expects comma-separated integers, got '" + std::string(s) + "'");
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

}  // namespace detail

class RunConfig {
 public:
  RunConfig() {
    for (const auto& k : kConfigSchema) values_.emplace(std::string(k.name), std::string(k.default_value));
  }

  /// Sets a value after checking it parses as the key's kind and lies in range.
  void set(std::string_view key, std::string_view value) {
    const ConfigKey* spec = find_config_key(key);
    if (!spec) throw Error("config: unknown key '" + std::string(key) + "'");
    const std::string v(detail::trim(value));
    check(*spec, v);
    values_[std::string(key)] = v;
  }

  /// Parses "key=value".
  void set_assignment(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw Error("config: expected key=value, got '" + std::string(assignment) + "'");
    set(detail::trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
  }

  const std::string& raw(std::string_view key) const {
    auto it = values_.find(std::string(key));
    if (it == values_.end()) throw Error("config: unknown key '" + std::string(key) + "'");
    return it->second;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  std::string text(std::string_view key) const { return raw(key); }

  long long integer(std::string_view key) const {
    long long v = 0;
    detail::parse_integer(raw(key), v);
    return v;
  }

  double real(std::string_view key) const {
    double v = 0;
    detail::parse_real(raw(key), v);
    return v;
  }

  bool flag(std::string_view key) const { return raw(key) == "true"; }

  std::vector<long long> integer_list(std::string_view key) const {
    return detail::parse_integer_list(key, raw(key));
  }

  /// Path value resolved against the config file's directory; empty when unset.
  std::filesystem::path path(std::string_view key) const {
    const auto& v = raw(key);
    if (v.empty()) return {};
    std::filesystem::path p(v);
    return p.is_absolute() ? p : base_dir_ / p;
  }

  const std::filesystem::path& base_dir() const { return base_dir_; }
  void set_base_dir(std::filesystem::path dir) { base_dir_ = std::move(dir); }

  bool operator==(const RunConfig& other) const { return values_ == other.values_; }

 private:
  static void check(const ConfigKey& spec, const std::string& v) {
    const std::string name(spec.name);
    auto fail = [&](const std::string& why) { throw Error("config: '" + name + "' " + why + ", got '" + v + "'"); };
    switch (spec.kind) {
      case ValueKind::Path:
        break;
      case ValueKind::Text:
        if (name == "concept_kind" && v != "obj" && v != "attr" && v != "objattr")
          fail("must be obj, attr or objattr");
        if (name == "label_mode" && v != "auto" && v != "single" && v != "multi") fail("must be auto, single or multi");
        break;
      case ValueKind::Flag:
        if (v != "true" && v != "false") fail("must be true or false");
        break;
      case ValueKind::Integer: {
        long long x = 0;
        if (!detail::parse_integer(v, x)) fail("expects an integer");
        const bool may_be_zero = name == "pca_n" || name == "seed" || name == "min_count";
        if (x < 0 || (x == 0 && !may_be_zero)) fail(may_be_zero ? "must be non-negative" : "must be positive");
        break;
      }
      case ValueKind::Real: {
        double x = 0;
        if (!detail::parse_real(v, x)) fail("expects a number");
        if (name == "alpha" || name == "synth_constituent_prob") {
          if (!(x >= 0.0 && x <= 1.0)) fail("must lie in [0, 1]");
        } else if (name == "C" || name == "tol" || name == "synth_background") {
          if (!(x > 0.0)) fail("must be positive");
        } else if (!(x >= 0.0)) {
          fail("must be non-negative");
        }
        break;
      }
      case ValueKind::IntegerList:
        for (long long x : detail::parse_integer_list(spec.name, v))
          if (x < 0) fail("must hold non-negative integers");
        break;
    }
  }

  std::map<std::string, std::string> values_;
  std::filesystem::path base_dir_ = ".";
};

inline std::string encode_config(const RunConfig& config) {
  std::string out = "# vcb run configuration\n";
  for (const auto& k : kConfigSchema) out += std::string(k.name) + " = " + config.raw(k.name) + "\n";
  return out;
}

inline RunConfig decode_config(std::string_view text, std::filesystem::path base_dir = ".") {
  RunConfig config;
  config.set_base_dir(std::move(base_dir));
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    const auto line = detail::trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    try {
      config.set_assignment(line);
    } catch (const Error& e) {
      throw Error(std::string(e.what()) + " (line " + std::to_string(line_no) + ")");
    }
  }
  return config;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  return decode_config(io::read_file(path), path.parent_path().empty() ? "." : path.parent_path());
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
  return out;
}

/// Hash of every setting that can influence results. The thread count and
/// the output directory are left out: neither changes any output byte.
inline std::string config_hash(const RunConfig& config) {
  std::string canonical;
  for (const auto& k : kConfigSchema) {
    if (k.name == "threads" || k.name == "out_dir") continue;
    canonical += std::string(k.name) + "=" + config.raw(k.name) + "\n";
  }
  return hex64(fnv1a64(canonical));
}

}  // namespace vcb
