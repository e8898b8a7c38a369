// Acceptance harness: one PASS/FAIL line per criterion, exit 1 if any fails.
//
//   acceptance [work_dir]
//
// Criteria 2, 3, 9 and 10 drive the vcb binary on generated data; the rest
// run library code against the oracles in tests/oracles.hpp.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>

#include "oracles.hpp"
#include "process.hpp"
#include "vcb/vcb.hpp"

namespace fs = std::filesystem;
using namespace vcb;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

std::string cli() { return VCB_CLI_PATH; }

// Runs one CLI command; a nonzero exit becomes an exception carrying its output.
void vcb_run(const std::vector<std::string>& args) {
  std::vector<std::string> argv{cli()};
  argv.insert(argv.end(), args.begin(), args.end());
  const auto r = proc::run(argv);
  if (r.status != 0) throw Error("'" + args.front() + "' exited " + std::to_string(r.status) + ": " + r.output);
}

const std::vector<std::string> kPipeline{"build-vocab", "train-concepts", "train-target", "evaluate"};

// Generates the reference synthetic set and runs the whole pipeline once;
// criteria 2, 3, 8 and 9 read its outputs.
struct ReferenceRun {
  fs::path dir;
  double pipeline_seconds = 0.0;
  std::string error;
};

ReferenceRun reference_run(const fs::path& work) {
  ReferenceRun run;
  run.dir = work / "reference";
  try {
    vcb_run({"synth", "-o", run.dir.string(), "-j", "1"});
    const auto conf = (run.dir / "pipeline.conf").string();
    const auto start = std::chrono::steady_clock::now();
    for (const auto& cmd : kPipeline) vcb_run({cmd, "-c", conf, "-j", "1"});
    run.pipeline_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    vcb_run({"keywords", "-c", conf, "-j", "1"});
    vcb_run({"select-features", "-c", conf, "-j", "1"});
  } catch (const std::exception& e) {
    run.error = e.what();
  }
  return run;
}

std::vector<std::vector<std::string>> read_tsv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(proc::slurp(p));
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      cells.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    rows.push_back(cells);
  }
  return rows;
}

// --- criteria -----------------------------------------------------------------

Outcome criterion1() {
  // Paper-scale check: needs the real datasets converted to vcb inputs.
  const char* conf = std::getenv("VCB_PAPER_CONFIG");
  if (!conf)
    return {false,
            "paper-scale results (Stanford-40 83.12% accuracy, HICO 31.54% mAP) need Visual Genome, Stanford-40, HICO "
            "and CNN features; none are available here (set VCB_PAPER_CONFIG to a Stanford-40 config to run). "
            "Criteria 2-10 are the property-based substitutes"};
  try {
    for (const auto& cmd : kPipeline) vcb_run({cmd, "-c", conf});
    const auto cfg = load_config(conf);
    const auto report = nlohmann::json::parse(proc::slurp(cfg.path("out_dir") / "report.json"));
    const double acc = report.at("accuracy").get<double>();
    return {acc >= 0.8312, "Stanford-40 accuracy " + fmt(acc) + " (paper 0.8312)"};
  } catch (const std::exception& e) {
    return {false, e.what()};
  }
}

Outcome criterion2(const ReferenceRun& ref) {
  if (!ref.error.empty()) return {false, ref.error};
  const auto report = nlohmann::json::parse(proc::slurp(ref.dir / "pipeline" / "report.json"));
  const double acc = report.at("accuracy").get<double>();
  const bool ok = acc >= 0.90 && ref.pipeline_seconds <= 60.0;
  return {ok, "held-out accuracy " + fmt(acc) + " (>= 0.90), pipeline " + fmt(ref.pipeline_seconds) +
                  " s single-threaded (<= 60 s)"};
}

Outcome criterion3(const ReferenceRun& ref) {
  if (!ref.error.empty()) return {false, ref.error};
  const auto truth = nlohmann::json::parse(proc::slurp(ref.dir / "ground_truth.json"));
  const auto concepts = truth.at("concepts").get<std::vector<std::string>>();
  const auto classes = truth.at("classes").get<std::vector<std::string>>();
  std::map<std::string, std::vector<std::string>> top;
  for (const auto& row : read_tsv(ref.dir / "pipeline" / "keywords.tsv"))
    if (std::stoi(row.at(1)) <= 5) top[row.at(0)].push_back(row.at(2));
  std::size_t good = 0;
  std::string per_class;
  for (std::size_t p = 0; p < classes.size(); ++p) {
    std::set<std::string> planted;
    for (int c : truth.at("constituents").at(p).get<std::vector<int>>()) planted.insert(concepts.at(c));
    std::size_t hits = 0;
    for (const auto& k : top[classes[p]]) hits += planted.count(k);
    if (hits >= 3) ++good;
    per_class += (p ? "," : "") + std::to_string(hits);
  }
  return {good >= 8, std::to_string(good) + "/" + std::to_string(classes.size()) +
                         " classes with >= 3 planted constituents in the top 5 (hits per class " + per_class + ")"};
}

Outcome criterion4() {
  std::string why;
  // analytic two-point cases: x = +-e1, so w* = min(2C, 1) e1 and b* = 0
  for (double C : {0.1, 0.25, 0.5, 1.0, 10.0}) {
    for (bool bias : {false, true}) {
      Matrix X(2, 2);
      X << 1, 0, -1, 0;
      SvmParams p;
      p.C = C;
      p.fit_bias = bias;
      const auto m = train_linear_svm(X, std::vector<int>{1, -1}, p);
      Vector want = Vector::Zero(2);
      want[0] = std::min(2.0 * C, 1.0);
      const double err = std::max((m.weights - want).cwiseAbs().maxCoeff(), std::abs(m.bias));
      if (err > 1e-4) why += " analytic C=" + fmt(C) + " error " + fmt(err) + ";";
    }
  }
  Rng rng(2024);
  int primal_bad = 0;
  int gap_bad = 0;
  double worst_rel = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.index(20));
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.index(3));
    const Matrix X = oracle::random_matrix(rng, m, d);
    std::vector<int> y(static_cast<std::size_t>(m));
    for (auto& v : y) v = rng.bernoulli(0.5) ? 1 : -1;
    const double C = 0.05 + 5.0 * rng.uniform();
    const bool bias = rng.bernoulli(0.7);

    SvmParams tight;
    tight.C = C;
    tight.fit_bias = bias;
    tight.tol = 1e-9;
    tight.max_epochs = 1000000;
    tight.seed = static_cast<std::uint64_t>(t);
    const auto model = train_linear_svm(X, y, tight);
    const auto ref = oracle::svm_dual_reference(X, y, C, bias);
    const double rel = std::abs(svm_primal_objective(model, X, y, C, bias) - ref.primal) / std::max(ref.primal, 1e-300);
    worst_rel = std::max(worst_rel, rel);
    if (rel > 1e-6) ++primal_bad;

    if (!(model.train_meta.final_duality_gap <= tight.tol)) ++gap_bad;
    SvmParams dflt;
    dflt.C = C;
    dflt.fit_bias = bias;
    dflt.seed = static_cast<std::uint64_t>(t);
    const auto quick = train_linear_svm(X, y, dflt);
    if (!(quick.train_meta.final_duality_gap <= dflt.tol)) ++gap_bad;
  }
  if (primal_bad) why += " " + std::to_string(primal_bad) + " primal mismatches;";
  if (gap_bad) why += " " + std::to_string(gap_bad) + " gap violations;";
  return {why.empty(), "analytic cases within 1e-4; 100 random instances: worst primal relative error " +
                           fmt(worst_rel) + " (<= 1e-6), duality gap <= tol at tol 1e-9 and 1e-4" + why};
}

Outcome criterion5() {
  Rng rng(55);
  double worst_angle = 0.0;
  double worst_rel = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Matrix X = oracle::random_matrix(rng, 10, 5);
    const auto pca = fit_pca(X, 5);
    const auto ref = oracle::covariance_eigen(X);
    for (Eigen::Index k = 1; k <= 5; ++k) {
      worst_angle = std::max(worst_angle, oracle::max_principal_angle(pca.components.topRows(k), ref.vectors.topRows(k)));
      worst_rel = std::max(worst_rel, std::abs(pca.explained[k - 1] - ref.values[k - 1]) / ref.values[k - 1]);
    }
  }
  return {worst_angle <= 1e-8 && worst_rel <= 1e-8,
          "100 random 10x5 matrices: max principal angle " + fmt(worst_angle) + ", max explained relative error " +
              fmt(worst_rel)};
}

// AP of the unique permutation that is a valid ranking (scores descending,
// ties by ascending id), found by enumerating every permutation.
std::optional<double> enumerated_ap(const std::vector<double>& s, const std::vector<char>& pos,
                                    const std::vector<std::string>& ids) {
  std::vector<std::size_t> perm(s.size());
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool valid = true;
    for (std::size_t r = 1; r < perm.size() && valid; ++r) {
      const auto a = perm[r - 1];
      const auto b = perm[r];
      valid = s[a] > s[b] || (s[a] == s[b] && ids[a] < ids[b]);
    }
    if (!valid) continue;
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < perm.size(); ++r)
      if (pos[perm[r]]) sum += static_cast<double>(++hits) / static_cast<double>(r + 1);
    if (!hits) return std::nullopt;
    return sum / static_cast<double>(hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::nullopt;
}

Outcome criterion6() {
  // Every weak ordering of n <= 6 items appears among score vectors with
  // entries in {0..n-1}; each is checked against sampled positive masks.
  std::size_t cases = 0;
  std::size_t mismatches = 0;
  Rng rng(66);
  for (std::size_t n = 1; n <= 6; ++n) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("img" + std::to_string((i * 7) % n));
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::vector<std::size_t> digits(n, 0);
    while (true) {
      std::vector<double> s(n);
      for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<double>(digits[i]);
      // all masks for small n, a sample otherwise
      const std::size_t masks = std::size_t{1} << n;
      for (std::size_t mask = 0; mask < masks; ++mask) {
        if (n >= 5 && !rng.bernoulli(0.1)) continue;
        std::vector<char> pos(n);
        for (std::size_t i = 0; i < n; ++i) pos[i] = static_cast<char>((mask >> i) & 1u);
        const auto got = average_precision(s, pos, ids);
        const auto want = enumerated_ap(s, pos, ids);
        ++cases;
        if (got.has_value() != want.has_value() || (got && *got != *want)) ++mismatches;
      }
      std::size_t k = 0;
      while (k < n && ++digits[k] == n) digits[k++] = 0;
      if (k == n) break;
    }
  }
  // mAP is the mean of per-class AP over classes with positives
  double worst_map = 0.0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.index(5);
    const std::size_t L = 1 + rng.index(4);
    std::vector<std::string> ids;
    LabelSet truth;
    std::vector<std::string> classes;
    for (std::size_t j = 0; j < L; ++j) classes.push_back("c" + std::to_string(j));
    Matrix H(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(L));
    for (std::size_t i = 0; i < n; ++i) {
      ids.push_back("i" + std::to_string(i));
      truth.ids.push_back(ids.back());
      std::vector<std::string> ls;
      for (const auto& c : classes)
        if (rng.bernoulli(0.4)) ls.push_back(c);
      if (ls.empty()) ls.push_back(classes[rng.index(L)]);
      truth.labels[ids.back()] = ls;
      for (std::size_t j = 0; j < L; ++j)
        H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = static_cast<double>(rng.index(3));
    }
    const auto report = evaluate(H, ids, classes, truth, true);
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t j = 0; j < L; ++j) {
      std::vector<double> s(n);
      std::vector<char> pos(n);
      for (std::size_t i = 0; i < n; ++i) {
        s[i] = H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        const auto& ls = truth.labels.at(ids[i]);
        pos[i] = std::find(ls.begin(), ls.end(), classes[j]) != ls.end();
      }
      if (const auto ap = enumerated_ap(s, pos, ids)) {
        sum += *ap;
        ++counted;
      }
    }
    worst_map = std::max(worst_map, std::abs(report.map - sum / static_cast<double>(counted)));
  }
  return {mismatches == 0 && worst_map <= 1e-12,
          std::to_string(cases) + " AP cases over all weak orderings of <= 6 items, " + std::to_string(mismatches) +
              " mismatches; max |mAP - mean(AP)| " + fmt(worst_map)};
}

Outcome criterion7() {
  Rng rng(77);
  std::size_t pool_mismatch = 0;
  std::size_t violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto n_img = 1 + rng.index(30);
    const auto n_con = 1 + rng.index(10);
    const auto n_clu = 1 + rng.index(4);
    ConceptVocabulary vocab;
    std::vector<int> cluster_of(n_con);
    for (std::size_t c = 0; c < n_con; ++c) {
      cluster_of[c] = static_cast<int>(rng.index(n_clu));
      vocab.entries.push_back({"c" + std::to_string(c), ConceptKind::Obj, 1, {}, cluster_of[c]});
    }
    ConceptSets sets;
    for (std::size_t i = 0; i < n_img; ++i) {
      sets.image_ids.push_back("i" + std::to_string(i));
      std::vector<int> s;
      for (std::size_t c = 0; c < n_con; ++c)
        if (rng.bernoulli(0.3)) s.push_back(static_cast<int>(c));
      sets.concepts.push_back(s);
    }
    const int c = static_cast<int>(rng.index(n_con));
    const auto pools = mine_pools(c, sets, vocab);
    const auto [pos, neg] = oracle::brute_force_pools(c, sets.concepts, cluster_of);
    if (std::set<int>(pools.positives.begin(), pools.positives.end()) != pos ||
        std::set<int>(pools.negatives.begin(), pools.negatives.end()) != neg)
      ++pool_mismatch;
    if (pools.positives.empty()) continue;
    const auto sampled = build_training_sets(c, sets, vocab, {1 + rng.index(5), 3.0}, rng.next());
    for (int img : sampled.negatives)
      for (int other : sets.concepts[static_cast<std::size_t>(img)])
        if (cluster_of[static_cast<std::size_t>(other)] == cluster_of[static_cast<std::size_t>(c)]) ++violations;
  }
  return {pool_mismatch == 0 && violations == 0, "10000 randomized trials: " + std::to_string(pool_mismatch) +
                                                     " pool mismatches, " + std::to_string(violations) +
                                                     " negatives touching the concept's cluster"};
}

Outcome criterion8(const ReferenceRun& ref) {
  if (!ref.error.empty()) return {false, ref.error};
  const auto bank = decode_bank(proc::slurp(ref.dir / "pipeline" / "bank.vcbb"));
  const auto model = decode_target_model(proc::slurp(ref.dir / "pipeline" / "target.json"));
  const auto features = load_feature_table(ref.dir / "features.vcbf");
  const auto test = load_labels(ref.dir / "test_labels.tsv");
  const auto subset = features.subset(test.ids);
  const Matrix via_scores = predict_target(model, score_concepts(bank, subset));
  const Matrix via_composed = predict_composed(compose_with_bank(model, bank), bank, subset.rows());
  const double worst = (via_scores - via_composed).cwiseAbs().maxCoeff();
  return {worst <= 1e-10, std::to_string(test.ids.size()) + " test images, max two-path difference " + fmt(worst)};
}

Outcome criterion9(const ReferenceRun& ref) {
  if (!ref.error.empty()) return {false, ref.error};
  const auto rows = read_tsv(ref.dir / "pipeline" / "selection.tsv");
  std::optional<std::pair<double, double>> at15;
  std::pair<double, double> at_n{0, 1};
  std::size_t max_k = 0;
  for (const auto& r : rows) {
    const auto k = static_cast<std::size_t>(std::stoul(r.at(0)));
    const std::pair<double, double> v{std::stod(r.at(1)), std::stod(r.at(2))};
    if (k == 15) at15 = v;
    if (k >= max_k) {
      max_k = k;
      at_n = v;
    }
  }
  const auto vocab = decode_vocabulary(proc::slurp(ref.dir / "pipeline" / "vocab.tsv"));
  if (!at15 || max_k != vocab.size()) return {false, "selection.tsv lacks k=15 or k=N"};
  const double gain = at15->second - at15->first;
  const double at_n_diff = std::abs(at_n.first - at_n.second);
  return {gain >= 0.05 && at_n_diff <= 1e-12,
          "top-15 accuracy relatedness " + fmt(at15->second) + " vs frequency " + fmt(at15->first) + " (+" +
              fmt(100 * gain) + " points, need 5); k=N=" + std::to_string(max_k) + " difference " + fmt(at_n_diff)};
}

Outcome criterion10(const fs::path& work) {
  const std::vector<std::string> commands{"build-vocab", "train-concepts", "train-target", "evaluate",
                                          "keywords",    "select-features"};
  auto full_run = [&](const std::string& name, int threads) {
    const auto dir = work / name;
    const auto j = std::to_string(threads);
    vcb_run({"synth", "-o", dir.string(), "-j", j});
    const auto conf = (dir / "pipeline.conf").string();
    for (const auto& cmd : commands) vcb_run({cmd, "-c", conf, "-j", j, "-s", "train_direct=true"});
    return proc::tree(dir);
  };
  try {
    const auto a = full_run("det_a", 1);
    const auto b = full_run("det_b", 1);
    const auto c = full_run("det_c", 8);
    std::string diff;
    for (const auto* other : {&b, &c}) {
      if (other->size() != a.size()) diff += " file sets differ;";
      for (const auto& [file, bytes] : a) {
        auto it = other->find(file);
        if (it == other->end() || it->second != bytes) diff += " " + file + (other == &b ? " (rerun)" : " (8 threads)");
      }
    }
    return {diff.empty(), std::to_string(a.size()) +
                              " output files from 7 commands compared across a rerun and 8 threads" +
                              (diff.empty() ? ", all bit-identical" : "; differing:" + diff)};
  } catch (const std::exception& e) {
    return {false, e.what()};
  }
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = fs::absolute(argc > 1 ? argv[1] : "acceptance_work");
  fs::remove_all(work);
  fs::create_directories(work);

  const auto ref = reference_run(work);
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, criterion1},
      {2, [&] { return criterion2(ref); }},
      {3, [&] { return criterion3(ref); }},
      {4, criterion4},
      {5, criterion5},
      {6, criterion6},
      {7, criterion7},
      {8, [&] { return criterion8(ref); }},
      {9, [&] { return criterion9(ref); }},
      {10, [&] { return criterion10(work); }},
  };
  int failed = 0;
  for (const auto& [id, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << o.detail << std::endl;
  }
  std::cout << (10 - failed) << "/10 criteria passed" << std::endl;
  return failed ? 1 : 0;
}
