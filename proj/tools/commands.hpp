#pragma once

// Subcommands of the vcb tool. Each command computes all of its outputs in
// memory, checks that every output decodes back to the same bytes, and only
// then writes them (each through a temporary file) together with a run
// manifest. A failing command therefore leaves no new outputs behind.

#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vcb/vcb.hpp"

namespace vcb::cli {

inline constexpr std::string_view kVersion = "1.0.0";

struct Output {
  std::string name;  // file name under out_dir
  std::string bytes;
  std::function<void(const std::string&)> validate;  // throws on failure
};

struct InputRecord {
  std::string key;
  std::filesystem::path path;
};

class Run {
 public:
  Run(std::string command, const RunConfig& config, std::ostream& log, std::ostream& warn)
      : command_(std::move(command)), config_(config), log_(log), warn_(warn) {}

  const RunConfig& config() const { return config_; }
  std::ostream& log() { return log_; }

  void warn(const std::string& message) { warn_ << "warning: " << message << "\n"; }

  /// Resolved path of a required input, recorded for the manifest.
  std::filesystem::path input(std::string_view key) {
    auto p = config_.path(key);
    if (p.empty()) throw Error("config key '" + std::string(key) + "' is required by " + command_);
    if (!std::filesystem::exists(p)) throw Error("input '" + std::string(key) + "' not found: " + p.string());
    inputs_.push_back({std::string(key), p});
    return p;
  }

  /// An input produced by an earlier command inside the run directory.
  std::filesystem::path artifact(const std::string& name) {
    auto p = out_dir() / name;
    if (!std::filesystem::exists(p))
      throw Error(name + " not found in " + out_dir().string() + " (run the command that produces it first)");
    inputs_.push_back({name, p});
    return p;
  }

  /// Bundled data file used when the config leaves a path empty.
  std::filesystem::path input_or_data(std::string_view key, std::string_view data_file) {
    if (!config_.raw(key).empty()) return input(key);
    std::filesystem::path p = std::filesystem::path(VCB_DATA_DIR) / data_file;
    if (!std::filesystem::exists(p)) throw Error("bundled data file missing: " + p.string());
    inputs_.push_back({std::string(key), p});
    return p;
  }

  std::filesystem::path out_dir() const { return config_.path("out_dir"); }

  void add(std::string name, std::string bytes, std::function<void(const std::string&)> validate) {
    outputs_.push_back({std::move(name), std::move(bytes), std::move(validate)});
  }

  /// Validates every output, then writes outputs and the manifest.
  void commit() {
    for (const auto& o : outputs_) {
      try {
        o.validate(o.bytes);
      } catch (const std::exception& e) {
        throw Error("output " + o.name + " failed validation: " + e.what());
      }
    }
    const auto manifest = encode_manifest();
    for (const auto& o : outputs_) io::write_file_atomic(out_dir() / o.name, o.bytes);
    io::write_file_atomic(out_dir() / ("manifest_" + command_ + ".json"), manifest);
  }

 private:
  std::string encode_manifest() const {
    nlohmann::ordered_json j;
    j["command"] = command_;
    j["version"] = kVersion;
    j["seed"] = config_.integer("seed");
    j["config_hash"] = config_hash(config_);
    auto settings = nlohmann::ordered_json::object();
    for (const auto& [key, value] : config_.values())
      if (key != "threads" && key != "out_dir") settings[key] = value;
    j["config"] = settings;
    auto ins = nlohmann::ordered_json::array();
    for (const auto& in : inputs_)
      ins.push_back({{"key", in.key}, {"file", in.path.filename().string()}, {"fnv1a64", hex64(fnv1a64(io::read_file(in.path)))}});
    j["inputs"] = ins;
    auto outs = nlohmann::ordered_json::array();
    for (const auto& o : outputs_) outs.push_back({{"file", o.name}, {"bytes", o.bytes.size()}, {"fnv1a64", hex64(fnv1a64(o.bytes))}});
    j["outputs"] = outs;
    return j.dump(1) + "\n";
  }

  std::string command_;
  const RunConfig& config_;
  std::ostream& log_;
  std::ostream& warn_;
  std::vector<InputRecord> inputs_;
  std::vector<Output> outputs_;
};

// --- validators ---------------------------------------------------------------

/// Re-encoding the decoded bytes must reproduce them exactly.
template <class Decode, class Encode>
std::function<void(const std::string&)> round_trip(Decode decode, Encode encode) {
  return [decode, encode](const std::string& bytes) {
    if (encode(decode(bytes)) != bytes) throw Error("re-encoding changed the bytes");
  };
}

inline void validate_json(const std::string& bytes) {
  if (nlohmann::json::parse(bytes).is_discarded()) throw Error("invalid JSON");
}

/// Rectangular TSV: every line has the header's column count.
inline void validate_tsv(const std::string& bytes) {
  std::size_t pos = 0;
  std::ptrdiff_t columns = -1;
  while (pos < bytes.size()) {
    const auto end = std::min(bytes.find('\n', pos), bytes.size());
    const auto line = std::string_view(bytes).substr(pos, end - pos);
    const auto cols = std::count(line.begin(), line.end(), '\t') + 1;
    if (columns < 0) columns = cols;
    if (cols != columns) throw Error("ragged TSV row");
    pos = end + 1;
  }
  if (columns < 0) throw Error("empty TSV");
}

// --- shared loading ---------------------------------------------------------------

inline SvmParams svm_params(const RunConfig& c) {
  SvmParams p;
  p.C = c.real("C");
  p.tol = c.real("tol");
  p.max_epochs = static_cast<int>(c.integer("max_epochs"));
  return p;
}

inline int threads(const RunConfig& c) { return static_cast<int>(c.integer("threads")); }
inline std::uint64_t seed(const RunConfig& c) { return static_cast<std::uint64_t>(c.integer("seed")); }

inline StopwordPolicy stopwords(Run& run) {
  const auto noun = run.input_or_data("stopwords_noun", "stopwords_noun.txt");
  const auto attr = run.input_or_data("stopwords_attr", "stopwords_attr.txt");
  return load_stopword_policy(noun.string(), attr.string());
}

inline ExtractedConcepts extract(Run& run, const StopwordPolicy& policy) {
  const auto annotations = load_annotations(run.input("annotations"));
  return extract_concepts(annotations, parse_concept_kind(run.config().text("concept_kind")), policy);
}

inline ConceptBank load_bank(Run& run) { return decode_bank(io::read_file(run.artifact("bank.vcbb"))); }

inline FeatureTable load_features(Run& run) { return load_feature_table(run.input("features")); }

inline bool multi_label_mode(const RunConfig& c, const LabelSet& labels) {
  const auto mode = c.text("label_mode");
  if (mode == "auto") return labels.multi_label();
  return mode == "multi";
}

/// Feature rows of the labeled images, in label-file order.
inline FeatureTable labeled_rows(const FeatureTable& features, const LabelSet& labels, const char* what) {
  std::vector<std::string> missing;
  for (const auto& id : labels.ids)
    if (!features.find(id)) missing.push_back(id);
  if (!missing.empty())
    throw Error(std::string(what) + ": " + std::to_string(missing.size()) + " labeled images have no features (first: '" +
                missing.front() + "')");
  return features.subset(labels.ids);
}

inline void require_bank_dim(const ConceptBank& bank, const FeatureTable& features) {
  if (bank.feature_dim() != features.dimension())
    throw DimensionError("feature dimension " + std::to_string(features.dimension()) +
                             " does not match the concept bank's feature dimension " +
                             std::to_string(bank.feature_dim()) + "; feature dimension",
                         bank.feature_dim(), features.dimension());
}

inline std::string encode_score_table(const std::vector<std::string>& ids, const std::vector<std::string>& classes,
                                      const Matrix& scores, bool with_prediction) {
  std::string out = "id";
  if (with_prediction) out += "\tpredicted";
  for (const auto& c : classes) out += "\t" + c;
  out += "\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out += ids[i];
    if (with_prediction) out += "\t" + classes[static_cast<std::size_t>(argmax_row(scores.row(r)))];
    for (Eigen::Index j = 0; j < scores.cols(); ++j) out += "\t" + io::format_double(scores(r, j));
    out += "\n";
  }
  return out;
}

// --- commands -------------------------------------------------------------------

inline SynthSpec synth_spec(const RunConfig& c) {
  SynthSpec s;
  s.feature_dim = c.integer("synth_feature_dim");
  s.n_concepts = static_cast<std::size_t>(c.integer("synth_concepts"));
  s.n_classes = static_cast<std::size_t>(c.integer("synth_classes"));
  s.constituents_per_class = static_cast<std::size_t>(c.integer("synth_constituents"));
  s.concept_images = static_cast<std::size_t>(c.integer("synth_concept_images"));
  s.train_per_class = static_cast<std::size_t>(c.integer("synth_train_per_class"));
  s.test_per_class = static_cast<std::size_t>(c.integer("synth_test_per_class"));
  s.tail_exponent = c.real("synth_tail_exponent");
  s.noise_sigma = c.real("synth_noise_sigma");
  s.background_per_image = c.real("synth_background");
  s.constituent_prob = c.real("synth_constituent_prob");
  s.embedding_dim = c.integer("synth_embedding_dim");
  s.embedding_noise = c.real("synth_embedding_noise");
  s.disjoint_constituents = c.flag("synth_disjoint");
  s.seed = seed(c);
  return s;
}

/// Config for running the pipeline on a generated dataset: paths point at the
/// generated files, clustering and selection are sized to the dataset.
inline RunConfig synth_pipeline_config(const RunConfig& base, const SynthSpec& s) {
  RunConfig c = base;
  c.set("features", "features.vcbf");
  c.set("annotations", "annotations.jsonl");
  c.set("embeddings", "embeddings.txt");
  c.set("train_labels", "train_labels.tsv");
  c.set("test_labels", "test_labels.tsv");
  c.set("out_dir", "pipeline");
  c.set("threads", "1");  // -j on the command line still applies
  c.set("concept_kind", "obj");
  c.set("k_clusters", std::to_string(std::max<std::size_t>(1, s.n_concepts * 2 / 5)));
  c.set("weight_window", std::to_string(std::max<std::size_t>(1, s.n_concepts / 10)));
  std::string ks;
  for (std::size_t k = 0; k <= s.n_concepts; k += 5) ks += (ks.empty() ? "" : ",") + std::to_string(k);
  if (s.n_concepts % 5 != 0) ks += "," + std::to_string(s.n_concepts);
  c.set("select_ks", ks);
  return c;
}

inline int cmd_synth(Run& run) {
  const auto& cfg = run.config();
  const auto spec = synth_spec(cfg);
  const auto ds = generate_synthetic(spec);
  std::string annotations;
  for (const auto& a : ds.annotations) annotations += encode_annotation(a) + "\n";

  run.add("features.vcbf", encode_features_binary(ds.features),
          round_trip([](const std::string& b) { return decode_features_binary(b); },
                     [](const FeatureTable& t) { return encode_features_binary(t); }));
  run.add("annotations.jsonl", annotations, [](const std::string& b) {
    std::istringstream in(b);
    std::string again;
    for (const auto& a : parse_annotations(in)) again += encode_annotation(a) + "\n";
    if (again != b) throw Error("re-encoding changed the bytes");
  });
  auto labels_rt = round_trip([](const std::string& b) { return parse_labels(b); },
                              [](const LabelSet& l) { return encode_labels(l); });
  run.add("train_labels.tsv", encode_labels(ds.train_labels), labels_rt);
  run.add("test_labels.tsv", encode_labels(ds.test_labels), labels_rt);
  run.add("embeddings.txt", encode_embeddings_text(ds.embeddings), [](const std::string& b) {
    std::istringstream in(b);
    const auto loaded = load_embeddings(in);
    if (loaded.skipped_lines != 0 || encode_embeddings_text(loaded.store) != b)
      throw Error("re-encoding changed the bytes");
  });
  run.add("ground_truth.json", encode_ground_truth(ds), validate_json);
  const auto pipeline = synth_pipeline_config(cfg, spec);
  run.add("pipeline.conf", encode_config(pipeline), [&](const std::string& b) {
    if (!(decode_config(b) == pipeline)) throw Error("config does not round-trip");
  });
  run.commit();
  run.log() << "synth: " << ds.concept_names.size() << " concepts, " << ds.class_names.size() << " classes, "
            << ds.features.size() << " images (" << ds.train_labels.ids.size() << " train, "
            << ds.test_labels.ids.size() << " test), " << ds.annotations.size() << " annotations -> "
            << run.out_dir().string() << "\n";
  return 0;
}

inline int cmd_build_vocab(Run& run) {
  const auto& cfg = run.config();
  const auto policy = stopwords(run);
  const auto extracted = extract(run, policy);
  auto vocab = filter_min_count(extracted.vocabulary, static_cast<std::size_t>(cfg.integer("min_count")));

  std::size_t embeddable = 0;
  if (!cfg.raw("embeddings").empty()) {
    const auto loaded = load_embeddings_file(run.input("embeddings").string());
    if (loaded.skipped_lines) run.warn(std::to_string(loaded.skipped_lines) + " malformed embedding lines skipped");
    for (const auto& e : vocab.entries)
      if (phrase_vector(loaded.store, concept_words(e.key)).vector) ++embeddable;
    const int k = embeddable ? static_cast<int>(cfg.integer("k_clusters")) : 0;
    vocab = cluster_concepts(vocab, loaded.store, k, derive_seed(seed(cfg), 0));
  } else {
    vocab = cluster_concepts(vocab, EmbeddingStore(), 0, 0);
  }
  if (vocab.empty())
    run.warn("vocabulary is empty: no concept reaches min_count = " + std::to_string(cfg.integer("min_count")));

  std::string histogram = "rank\tfrequency\tconcept\n";
  {
    auto sorted = vocab.entries;
    sort_by_frequency(sorted);
    const auto series = frequency_histogram(vocab);
    for (std::size_t i = 0; i < series.size(); ++i)
      histogram += std::to_string(series[i].first) + "\t" + std::to_string(series[i].second) + "\t" + sorted[i].key + "\n";
  }
  run.add("vocab.tsv", encode_vocabulary(vocab),
          round_trip([](const std::string& b) { return decode_vocabulary(b); },
                     [](const ConceptVocabulary& v) { return encode_vocabulary(v); }));
  run.add("histogram.tsv", histogram, validate_tsv);
  run.commit();
  run.log() << "build-vocab: " << extracted.images.image_ids.size() << " annotated images, "
            << extracted.vocabulary.size() << " distinct " << cfg.text("concept_kind") << " keys, " << vocab.size()
            << " kept (min_count " << cfg.integer("min_count") << "), " << embeddable << " with embeddings\n";
  return 0;
}

inline int cmd_train_concepts(Run& run) {
  const auto& cfg = run.config();
  const auto vocab = decode_vocabulary(io::read_file(run.artifact("vocab.tsv")));
  if (vocab.empty()) throw Error("train-concepts: the vocabulary is empty");
  const auto policy = stopwords(run);
  const auto extracted = extract(run, policy);
  const auto features = load_features(run);
  const auto sets = index_concepts(extracted.images, vocab);
  for (const auto& id : sets.image_ids)
    if (!features.find(id)) throw Error("train-concepts: annotated image '" + id + "' has no features");

  MiningCaps caps;
  caps.max_pos = static_cast<std::size_t>(cfg.integer("max_pos"));
  caps.neg_ratio = cfg.real("neg_ratio");
  const auto bank = train_concept_bank(vocab, features, sets, svm_params(cfg), caps, seed(cfg), threads(cfg));

  std::string log = "concept\tpositives\tnegatives\tepochs\tduality_gap\tconverged\n";
  std::size_t unconverged = 0;
  for (std::size_t c = 0; c < bank.size(); ++c) {
    const auto& s = bank.stats[c];
    if (!s.svm.converged) ++unconverged;
    log += vocab.entries[c].key + "\t" + std::to_string(s.positives) + "\t" + std::to_string(s.negatives) + "\t" +
           std::to_string(s.svm.epochs_run) + "\t" + io::format_double(s.svm.final_duality_gap) + "\t" +
           (s.svm.converged ? "true" : "false") + "\n";
  }
  if (unconverged) run.warn(std::to_string(unconverged) + " concept classifiers stopped at max_epochs");
  run.add("bank.vcbb", encode_bank(bank),
          round_trip([](const std::string& b) { return decode_bank(b); },
                     [](const ConceptBank& b) { return encode_bank(b); }));
  run.add("concept_training.tsv", log, validate_tsv);
  run.commit();
  run.log() << "train-concepts: " << bank.size() << " concept classifiers over " << bank.feature_dim()
            << "-dimensional features\n";
  return 0;
}

inline TargetOptions target_options(const RunConfig& cfg, TargetMode mode, bool multi) {
  TargetOptions opt;
  opt.mode = mode;
  opt.pca_n = cfg.integer("pca_n");
  opt.svm = svm_params(cfg);
  opt.seed = derive_seed(seed(cfg), mode == TargetMode::Concept ? 10 : 11);
  opt.threads = threads(cfg);
  opt.multi_label = multi;
  return opt;
}

inline int cmd_train_target(Run& run) {
  const auto& cfg = run.config();
  const auto bank = load_bank(run);
  const auto features = load_features(run);
  const auto labels = load_labels(run.input("train_labels"));
  require_bank_dim(bank, features);
  const bool multi = multi_label_mode(cfg, labels);
  const auto rows = labeled_rows(features, labels, "train-target");

  auto model_rt = round_trip([](const std::string& b) { return decode_target_model(b); },
                             [](const TargetModel& m) { return encode_target_model(m); });
  const auto concept_fit = train_target(score_concepts(bank, rows), labels, target_options(cfg, TargetMode::Concept, multi));
  for (const auto& w : concept_fit.warnings) run.warn("concept model: " + w);
  run.add("target.json", encode_target_model(concept_fit.model), model_rt);
  if (cfg.flag("train_direct")) {
    const auto direct = train_target(rows, labels, target_options(cfg, TargetMode::Direct, multi));
    for (const auto& w : direct.warnings) run.warn("direct model: " + w);
    run.add("target_direct.json", encode_target_model(direct.model), model_rt);
  }
  run.commit();
  run.log() << "train-target: " << concept_fit.model.num_classes() << " classes, " << labels.ids.size() << " images, "
            << (multi ? "multi" : "single") << "-label, PCA " << concept_fit.model.input_dim() << " -> "
            << concept_fit.model.pca.output_dim() << (cfg.flag("train_direct") ? ", direct model trained" : "") << "\n";
  return 0;
}

inline int cmd_evaluate(Run& run) {
  const auto& cfg = run.config();
  const auto bank = load_bank(run);
  const auto model = decode_target_model(io::read_file(run.artifact("target.json")));
  const auto features = load_features(run);
  const auto labels = load_labels(run.input("test_labels"));
  require_bank_dim(bank, features);
  if (model.input_dim() != static_cast<Eigen::Index>(bank.size()))
    throw DimensionError("target model expects " + std::to_string(model.input_dim()) +
                             " concept scores but the bank has " + std::to_string(bank.size()) + " concepts; score dimension",
                         model.input_dim(), static_cast<Eigen::Index>(bank.size()));
  const auto rows = labeled_rows(features, labels, "evaluate");
  const Matrix H = predict_target(model, score_concepts(bank, rows));
  const auto report = evaluate(H, rows.ids(), model.class_labels, labels, model.multi_label);

  run.add("report.json", encode_report(report), validate_json);
  run.add("predictions.tsv", encode_score_table(rows.ids(), model.class_labels, H, !model.multi_label), validate_tsv);
  std::string summary = "evaluate: " + std::to_string(report.images) + " images, " +
                        (report.accuracy ? "accuracy " + io::format_double(*report.accuracy) + ", " : "") + "mAP " +
                        io::format_double(report.map);
  if (!report.excluded_classes.empty())
    run.warn(std::to_string(report.excluded_classes.size()) + " classes have no positives and are excluded from mAP");

  const auto direct_path = run.out_dir() / "target_direct.json";
  if (cfg.flag("train_direct") || std::filesystem::exists(direct_path)) {
    const auto direct = decode_target_model(io::read_file(run.artifact("target_direct.json")));
    if (direct.input_dim() != features.dimension())
      throw DimensionError("direct model expects " + std::to_string(direct.input_dim()) +
                               "-dimensional features, got " + std::to_string(features.dimension()) + "; feature dimension",
                           direct.input_dim(), features.dimension());
    if (direct.class_labels != model.class_labels) throw Error("evaluate: concept and direct models disagree on classes");
    const Matrix D = predict_target(direct, rows);
    const Matrix F = fuse_score_matrices(H, D, cfg.real("alpha"));
    const auto rd = evaluate(D, rows.ids(), model.class_labels, labels, model.multi_label);
    const auto rf = evaluate(F, rows.ids(), model.class_labels, labels, model.multi_label);
    run.add("report_direct.json", encode_report(rd), validate_json);
    run.add("report_fused.json", encode_report(rf), validate_json);
    summary += rd.accuracy ? "; direct accuracy " + io::format_double(*rd.accuracy) + ", fused accuracy " +
                                 io::format_double(*rf.accuracy)
                           : "; direct mAP " + io::format_double(rd.map) + ", fused mAP " + io::format_double(rf.map);
  }
  run.commit();
  run.log() << summary << "\n";
  return 0;
}

inline int cmd_keywords(Run& run) {
  const auto& cfg = run.config();
  const auto bank = load_bank(run);
  const auto model = decode_target_model(io::read_file(run.artifact("target.json")));
  const auto k = static_cast<std::size_t>(cfg.integer("top_k"));
  const auto table = top_keywords(model, bank, k);
  if (table.clipped) run.warn("top_k = " + std::to_string(k) + " exceeds " + std::to_string(bank.size()) + " concepts");

  const auto order = frequency_order(bank.vocabulary);
  const Vector mean_abs = mean_abs_weights(model.effective_weights());
  Vector by_freq(mean_abs.size());
  for (std::size_t r = 0; r < order.size(); ++r)
    by_freq[static_cast<Eigen::Index>(r)] = mean_abs[static_cast<Eigen::Index>(order[r])];
  const auto series = weight_vs_frequency(by_freq, static_cast<std::size_t>(cfg.integer("weight_window")));
  std::string weights = "rank\tconcept\tfrequency\tmean_abs_weight\tmoving_average\n";
  for (std::size_t r = 0; r < series.size(); ++r) {
    const auto& e = bank.vocabulary.entries[order[r]];
    weights += std::to_string(series[r].rank) + "\t" + e.key + "\t" + std::to_string(e.frequency) + "\t" +
               io::format_double(series[r].weight) + "\t" + io::format_double(series[r].moving_average) + "\n";
  }
  run.add("keywords.tsv", encode_keywords_tsv(table), validate_tsv);
  run.add("weights.tsv", weights, validate_tsv);
  run.commit();
  for (std::size_t j = 0; j < table.classes.size(); ++j) {
    run.log() << table.classes[j] << ":";
    for (const auto& [key, w] : table.keywords[j]) run.log() << " " << key;
    run.log() << "\n";
  }
  return 0;
}

inline int cmd_select_features(Run& run) {
  const auto& cfg = run.config();
  const auto bank = load_bank(run);
  const auto features = load_features(run);
  const auto train = load_labels(run.input("train_labels"));
  const auto test = load_labels(run.input("test_labels"));
  require_bank_dim(bank, features);
  if (multi_label_mode(cfg, train)) throw Error("select-features: selection curves need single-label data");
  const auto loaded = load_embeddings_file(run.input("embeddings").string());
  const auto policy = stopwords(run);
  AliasMap aliases;
  if (!cfg.raw("aliases").empty()) aliases = load_alias_list(run.input("aliases").string());

  std::vector<NamedVector> concepts;
  for (const auto& e : bank.vocabulary.entries)
    concepts.push_back({e.key, phrase_vector(loaded.store, concept_words(e.key)).vector});
  std::vector<NamedVector> classes;
  for (const auto& label : train.classes())
    classes.push_back({label, phrase_vector(loaded.store, tokenize_class_name(label, policy.noun_stopwords, aliases)).vector});
  const auto ranking = relatedness_rank(concepts, classes);
  if (!ranking.excluded_classes.empty())
    run.warn(std::to_string(ranking.excluded_classes.size()) + " class names have no embedding");
  if (!ranking.excluded_concepts.empty())
    run.warn(std::to_string(ranking.excluded_concepts.size()) + " concepts have no embedding and are ranked last");

  const auto by_frequency = frequency_order(bank.vocabulary, cfg.flag("frequency_ascending"));
  const auto by_relatedness = relatedness_order(bank.vocabulary, ranking);
  std::vector<std::size_t> ks;
  for (long long k : cfg.integer_list("select_ks")) ks.push_back(static_cast<std::size_t>(k));

  const auto train_scores = score_concepts(bank, labeled_rows(features, train, "select-features"));
  const auto test_scores = score_concepts(bank, labeled_rows(features, test, "select-features"));
  const SelectionData data{&train_scores, &train, &test_scores, &test};
  const auto svm = svm_params(cfg);
  const auto s = derive_seed(seed(cfg), 12);
  const auto freq_curve = selection_curve(data, by_frequency, ks, svm, s, threads(cfg));
  const auto rel_curve = selection_curve(data, by_relatedness, ks, svm, s, threads(cfg));

  std::string selection = "k\tfrequency\trelatedness\n";
  for (std::size_t i = 0; i < ks.size(); ++i)
    selection += std::to_string(ks[i]) + "\t" + io::format_double(freq_curve[i].accuracy) + "\t" +
                 io::format_double(rel_curve[i].accuracy) + "\n";
  std::string related = "order\tconcept\tr\tfrequency\n";
  std::map<std::string, double> r_of;
  for (std::size_t c = 0; c < ranking.concepts.size(); ++c) r_of.emplace(ranking.concepts[c], ranking.r_values[c]);
  for (std::size_t i = 0; i < by_relatedness.size(); ++i) {
    const auto& e = bank.vocabulary.entries[by_relatedness[i]];
    auto it = r_of.find(e.key);
    related += std::to_string(i + 1) + "\t" + e.key + "\t" + (it == r_of.end() ? "nan" : io::format_double(it->second)) +
               "\t" + std::to_string(e.frequency) + "\n";
  }
  run.add("selection.tsv", selection, validate_tsv);
  run.add("relatedness.tsv", related, validate_tsv);
  run.commit();
  run.log() << "select-features:\n" << selection;
  return 0;
}

struct CommandInfo {
  std::string_view name;
  std::string_view help;
  int (*fn)(Run&);
};

inline constexpr CommandInfo kCommands[] = {
    {"synth", "generate a synthetic dataset with planted ground truth", cmd_synth},
    {"build-vocab", "normalize annotations into a filtered, clustered concept vocabulary", cmd_build_vocab},
    {"train-concepts", "train the concept classifier bank", cmd_train_concepts},
    {"train-target", "train target classifiers on concept scores", cmd_train_target},
    {"evaluate", "score held-out images and write evaluation reports", cmd_evaluate},
    {"keywords", "per-class keyword tables and weight statistics", cmd_keywords},
    {"select-features", "frequency vs relatedness concept selection curves", cmd_select_features},
};

}  // namespace vcb::cli
