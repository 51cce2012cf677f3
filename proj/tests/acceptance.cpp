// Acceptance checks: prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero when any gating criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gramsteer/config.hpp"
#include "gramsteer/corpus.hpp"
#include "gramsteer/error.hpp"
#include "gramsteer/evaluation.hpp"
#include "gramsteer/geometry.hpp"
#include "gramsteer/persistence.hpp"
#include "gramsteer/pipeline.hpp"
#include "gramsteer/pos_tagger.hpp"
#include "gramsteer/probing.hpp"
#include "gramsteer/representation.hpp"
#include "gramsteer/steering.hpp"
#include "gramsteer/tasks.hpp"
#include "helpers.hpp"

using namespace gramsteer;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

Outcome criterion_1() {
  Outcome o;
  auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> alpha_dist(-40.0, 40.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Index d = 4 + i % 61;
    Vector h = fixtures::gaussian_vector(rng, d, 5.0);
    Vector t = fixtures::gaussian_vector(rng, d).normalized();
    Vector s = fixtures::gaussian_vector(rng, d).normalized();
    double a = alpha_dist(rng);
    worst = std::max(worst, (apply_TA(h, t, a) - (h + a * t)).cwiseAbs().maxCoeff());
    worst = std::max(worst, (apply_TA_SS(h, t, s, a) - (h + a * t - a * s)).cwiseAbs().maxCoeff());
    Vector p = apply_TA_ProjSS(h, t, s, a);
    worst = std::max(worst, (p - (h + a * t - h.dot(s) * s)).cwiseAbs().maxCoeff());
    worst = std::max(worst, std::abs(p.dot(s) - a * t.dot(s)));
  }
  double secs = seconds_since(t0);
  o.check(worst < 1e-6, "max deviation " + fmt_double(worst));
  o.check(secs < 5.0, "runtime " + fmt_double(secs) + " s");
  if (o.pass) o.detail = "max deviation " + fmt_double(worst) + ", " + fmt_double(secs) + " s";
  return o;
}

Outcome criterion_2() {
  Outcome o;
  std::mt19937_64 rng(1002);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index d = 2 + trial % 30;
    Vector m = fixtures::gaussian_vector(rng, d);
    auto dir = estimate_direction(stats_from_moments(m, Matrix::Identity(d, d), 50));
    worst = std::max(worst, (dir.unit - m.normalized()).cwiseAbs().maxCoeff());
  }
  o.check(worst < 1e-9, "identity covariance deviation " + fmt_double(worst));
  Vector m(2);
  m << 2, 2;
  Matrix cov(2, 2);
  cov << 4, 0, 0, 1;
  auto dir = estimate_direction(stats_from_moments(m, cov, 10));
  Vector expected(2);
  expected << 0.5 / std::sqrt(4.25), 2.0 / std::sqrt(4.25);
  double hand = (dir.unit - expected).cwiseAbs().maxCoeff();
  o.check(hand < 1e-9, "diagonal hand case deviation " + fmt_double(hand));
  if (o.pass) o.detail = "identity " + fmt_double(worst) + ", hand case " + fmt_double(hand);
  return o;
}

struct Clusters {
  Matrix x;
  std::vector<std::string> y;
};

Clusters clusters(std::mt19937_64& rng, int n, double separation) {
  const std::vector<std::string> names{"a", "b", "c"};
  Clusters c;
  c.x = fixtures::gaussian(rng, n, 8);
  for (int i = 0; i < n; ++i) {
    c.x(i, i % 3) += separation;
    c.y.push_back(names[static_cast<std::size_t>(i % 3)]);
  }
  return c;
}

Outcome criterion_3() {
  Outcome o;
  auto t0 = Clock::now();
  std::mt19937_64 rng(1003);
  auto sep = fixtures::separated_clusters(27);
  o.check(sep.margin > 0.0, "separated fixture has no margin");
  auto p = fit_probe_at(sep.x, sep.y, 0, Aggregation::mean, "train", {});
  double ceiling = evaluate_probe(p, sep.x, 0, Aggregation::mean, sep.y).macro_f1;
  o.check(ceiling == 1.0, "separated macro F1 " + fmt_double(ceiling));

  auto strain = clusters(rng, 500, 5.0);
  auto stest = clusters(rng, 500, 5.0);
  std::shuffle(strain.y.begin(), strain.y.end(), rng);
  std::shuffle(stest.y.begin(), stest.y.end(), rng);
  auto q = fit_probe_at(strain.x, strain.y, 0, Aggregation::mean, "train", {});
  double floor = evaluate_probe(q, stest.x, 0, Aggregation::mean, stest.y).macro_f1;
  o.check(std::abs(floor - 1.0 / 3.0) <= 0.1, "shuffled macro F1 " + fmt_double(floor));
  double secs = seconds_since(t0);
  o.check(secs < 30.0, "runtime " + fmt_double(secs) + " s");
  if (o.pass)
    o.detail = "ceiling " + fmt_double(ceiling) + ", shuffled " + fmt_double(floor) +
               " (chance 0.333), " + fmt_double(secs) + " s";
  return o;
}

Outcome criterion_4() {
  Outcome o;
  auto t0 = Clock::now();
  auto dir = (fs::temp_directory_path() / "gramsteer_acceptance_planted").string();
  fs::remove_all(dir);
  write_planted_fixture(dir);
  auto c = load_config(dir + "/config.json");
  cmd_extract(c);
  cmd_probe(c);
  auto d = cmd_directions(c);
  double recovery = d.at("min_planted_recovery_abs_cosine").get<double>();
  double contrast = d.at("max_abs_tense_aspect_contrast_cosine").get<double>();
  o.check(recovery > 0.99, "planted recovery |cos| " + fmt_double(recovery));
  o.check(contrast < 0.05, "tense/aspect contrast |cos| " + fmt_double(contrast));

  auto steer = cmd_steer(c);
  double best = steer.contains("best") ? steer["best"]["metrics"]["efficacy"].get<double>() : 0.0;
  o.check(best >= 0.95, "best efficacy " + fmt_double(best));

  // The alpha = 0 column must equal metrics computed from the unsteered outputs alone.
  const auto run_dir = c.output_dir + "/steer/" + steer_run_name(c);
  const auto N = read_json(run_dir + "/grid.json").at("N").get<std::size_t>();
  LexiconTagger tagger;
  for (int layer : c.steer_layers) {
    auto cell = read_json(run_dir + "/cells/layer" + std::to_string(layer) + "_alpha0.json");
    std::vector<EvaluationRecord> unsteered;
    bool identical = true;
    for (const auto& rj : cell.at("records")) {
      auto r = EvaluationRecord::from_json(rj);
      identical = identical && r.steered == r.unsteered;
      EvaluationRecord u;
      u.sample_id = r.sample_id;
      u.steered = r.unsteered;
      u.steered_labels = r.unsteered_labels;
      u.unsteered_labels = r.unsteered_labels;
      mark_record(u, LabelKind::tense, c.target, detect_degenerate(u.steered, tagger));
      unsteered.push_back(u);
    }
    auto want = compute_metrics(unsteered, N);
    const auto& got = cell.at("metrics");
    bool same = identical && got.at("steering_success").get<double>() == want.steering_success &&
                got.at("degenerate_rate").get<double>() == want.degenerate_rate &&
                got.at("efficacy").get<double>() == want.efficacy &&
                got.at("selectivity").get<double>() == want.selectivity;
    o.check(same, "alpha 0 differs from unsteered at layer " + std::to_string(layer));
  }
  double secs = seconds_since(t0);
  o.check(secs < 120.0, "runtime " + fmt_double(secs) + " s");
  if (o.pass)
    o.detail = "recovery " + fmt_double(recovery) + ", contrast " + fmt_double(contrast) +
               ", best efficacy " + fmt_double(best) + ", " + fmt_double(secs) + " s";
  return o;
}

struct DegenerationFixture {
  std::string text;
  std::set<DegenerationReason> reasons;
};

Outcome criterion_5() {
  using R = DegenerationReason;
  const std::vector<DegenerationFixture> fixtures{
      {"She has written a long letter to her friend.", {}},
      {"The children were playing in the garden after school.", {}},
      {"They will visit the museum tomorrow morning.", {}},
      {"He walked home.", {}},
      {"My brother has been learning French for two years.", {}},
      {"Paul has been visiting the school.", {}},
      {"I played chess with my father yesterday evening.", {}},
      {"the the the the dog barked", {R::unigram_rep, R::bigram_rep, R::low_diversity}},
      {"walked walked walked walked", {R::unigram_rep, R::bigram_rep, R::low_diversity}},
      {"she walked home she walked home she walked home",
       {R::unigram_rep, R::bigram_rep, R::fourgram_rep, R::low_diversity}},
      {"we sang and they danced and we sang and they danced",
       {R::unigram_rep, R::bigram_rep, R::fourgram_rep, R::low_diversity}},
      {"A quiet morning by the lake.", {R::no_verb}},
      {"The big red apple on the table.", {R::no_verb}},
      {"", {R::no_verb}},
      {"the sky the sky the sky",
       {R::no_verb, R::unigram_rep, R::bigram_rep, R::fourgram_rep, R::low_diversity}},
      // Boundary cases: a rate equal to its threshold is degenerate.
      {"the cat saw the dog and the bird", {R::unigram_rep}},
      {"the cat saw the dog and the small bird", {}},
      {"the cat sat on the mat the cat sat on it",
       {R::unigram_rep, R::bigram_rep, R::low_diversity}},
      {"go to the store go to the store",
       {R::unigram_rep, R::bigram_rep, R::fourgram_rep, R::low_diversity}},
      {"a b c d a b c d e f g h i j k l m n o p", {R::no_verb}},
  };
  Outcome o;
  LexiconTagger tagger;
  std::size_t right = 0;
  for (const auto& f : fixtures) {
    auto v = detect_degenerate(f.text, tagger);
    bool ok = v.reasons == f.reasons && v.is_degenerate == !f.reasons.empty();
    right += ok;
    if (!ok) {
      std::string got;
      for (auto r : v.reasons) got += std::string(to_string(r)) + " ";
      o.check(false, "'" + f.text + "' gave {" + got + "}");
    }
  }
  if (o.pass) o.detail = std::to_string(right) + "/" + std::to_string(fixtures.size()) + " fixtures";
  return o;
}

Outcome criterion_6() {
  Outcome o;
  std::vector<EvaluationRecord> hand;
  for (int i = 1; i <= 10; ++i) {
    EvaluationRecord r;
    r.sample_id = std::to_string(i);
    r.in_S = i <= 6;
    r.in_D = i >= 5 && i <= 7;
    r.in_SF = i <= 2;
    hand.push_back(r);
  }
  auto m = compute_metrics(hand, 10);
  o.check(m.steering_success == 0.6 && m.degenerate_rate == 0.3 && m.efficacy == 0.4 &&
              m.selectivity == 0.2,
          "hand case gave " + metrics_to_json(m).dump());
  std::mt19937_64 rng(1006);
  std::bernoulli_distribution coin(0.5);
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<EvaluationRecord> rs(1 + trial % 23);
    for (auto& r : rs) {
      r.in_S = coin(rng);
      r.in_D = coin(rng);
      r.in_SF = r.in_S && coin(rng);
    }
    auto x = compute_metrics(rs, rs.size());
    if (!(x.selectivity <= x.efficacy && x.efficacy <= x.steering_success)) ++violations;
  }
  o.check(violations == 0, std::to_string(violations) + " ordering violations");
  if (o.pass) o.detail = "hand case exact, 100 random sets ordered";
  return o;
}

Outcome criterion_7() {
  Outcome o;
  std::mt19937_64 rng(1007);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 1 + trial % 40;
    LayerActivations acts;
    for (int l = 0; l < 3; ++l) acts.states.push_back(fixtures::gaussian(rng, 16, n, 3.0));
    acts.token_texts.assign(static_cast<std::size_t>(n), "t");
    const double N = static_cast<double>(n);
    for (int l = 0; l < 3; ++l) {
      Vector sum = aggregate(acts, l, Aggregation::sum).vector;
      Vector ns = aggregate(acts, l, Aggregation::norm_sum).vector;
      Vector mean = aggregate(acts, l, Aggregation::mean).vector;
      worst = std::max(worst, (sum - std::sqrt(N) * ns).cwiseAbs().maxCoeff());
      worst = std::max(worst, (mean - sum / N).cwiseAbs().maxCoeff());
      if (n == 1) {
        Vector h = acts.states[static_cast<std::size_t>(l)].col(0);
        for (auto s : all_aggregations)
          worst = std::max(worst, (aggregate(acts, l, s).vector - h).cwiseAbs().maxCoeff());
      }
    }
  }
  o.check(worst < 1e-9, "max deviation " + fmt_double(worst));
  if (o.pass) o.detail = "max deviation " + fmt_double(worst);
  return o;
}

LabeledSentence ls(const std::string& text, Tense t, Aspect a) {
  return {text, t, a, Source::benchmark};
}

Outcome criterion_8() {
  Outcome o;
  LexiconTagger tagger;
  auto rep = repetition_prompt(ls("He has thought about this.", Tense::present, Aspect::perfect),
                               {ls("Maya was writing a story.", Tense::past, Aspect::progressive),
                                ls("She accepted that offer.", Tense::past, Aspect::simple)});
  o.check(rep.prompt_text ==
              "Maya was writing a story. \\\\ Maya was writing a story.\n\n"
              "She accepted that offer. \\\\ She accepted that offer.\n\n"
              "He has thought about this. \\\\",
          "repetition prompt differs");

  FeatureMapping m{LabelKind::aspect, "perfect_progressive", "perfect"};
  auto q = ls("He has been earning a six figure salary.", Tense::present,
              Aspect::perfect_progressive);
  auto tr = translation_prompt(
      q, m,
      {TranslationExample{ls("I have been walking through the park.", Tense::present,
                             Aspect::perfect_progressive),
                          ls("I have walked through the park.", Tense::present, Aspect::perfect)},
       TranslationExample{ls("Paul has been visiting the school.", Tense::present,
                             Aspect::perfect_progressive),
                          ls("Paul has visited the school.", Tense::present, Aspect::perfect)}},
      apply_mapping(q, m, tagger));
  o.check(tr.prompt_text ==
              "I have been walking through the park. \\\\ I have walked through the park.\n\n"
              "Paul has been visiting the school. \\\\ Paul has visited the school.\n\n"
              "He has been earning a six figure salary. \\\\",
          "translation prompt differs");
  o.check(tr.expected && *tr.expected == "He has earned a six figure salary.",
          "translation expectation differs");

  auto randoms = random_sentence_prompts();
  bool has_layout = false;
  for (const auto& p : randoms)
    has_layout = has_layout || p.prompt_text == "Formulate one grammatically correct sentence:";
  o.check(has_layout, "random-sentence prompt layout missing");

  // 281 sentences: 90 past, 70 perfect.
  std::vector<LabeledSentence> rows;
  for (int i = 0; i < 281; ++i) {
    Tense t = i < 90 ? Tense::past : (i < 190 ? Tense::present : Tense::future);
    Aspect a = i % 4 == 0 && i < 280 ? Aspect::perfect
               : i % 4 == 1          ? Aspect::progressive
                                     : Aspect::simple;
    rows.push_back(ls("Fixture sentence " + std::to_string(i) + ".", t, a));
  }
  LabeledCorpus corpus(rows, Split::test, "fixture");
  auto perfect = corpus.class_counts(LabelKind::aspect).at("perfect");
  auto past = corpus.class_counts(LabelKind::tense).at("past");
  auto no_past = build_steering_testset(corpus, LabelKind::tense, "past");
  auto no_perfect = build_steering_testset(corpus, LabelKind::aspect, "perfect");
  o.check(past == 90 && no_past.size() == 281 - 90, "tense exclusion count " +
                                                       std::to_string(no_past.size()));
  o.check(perfect == 70 && no_perfect.size() == 281 - 70,
          "aspect exclusion count " + std::to_string(no_perfect.size()));
  if (o.pass)
    o.detail = "prompts byte-exact, exclusion 281-90=" + std::to_string(no_past.size()) +
               ", 281-70=" + std::to_string(no_perfect.size());
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"steering method identities", criterion_1},
      {"LDA reduction", criterion_2},
      {"probe floor and ceiling", criterion_3},
      {"planted end-to-end", criterion_4},
      {"degeneration filter fixtures", criterion_5},
      {"metric arithmetic", criterion_6},
      {"aggregation identities", criterion_7},
      {"task fixtures", criterion_8},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::cout << "criterion " << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << " "
              << criteria[i].first << ": " << o.detail << std::endl;
  }
  std::cout << "criterion 9 SKIP optional accelerator reproduction: no pretrained checkpoint "
               "adapter in this build"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
