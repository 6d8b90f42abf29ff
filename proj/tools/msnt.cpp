// Command-line front end: generate / ingest / train / eval / report / recover.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "msnt/baseline.hpp"
#include "msnt/corpus.hpp"
#include "msnt/evaluation.hpp"
#include "msnt/generator.hpp"
#include "msnt/io.hpp"
#include "msnt/model.hpp"
#include "msnt/sampler.hpp"

namespace {

using namespace msnt;

struct HyperFlags {
  std::uint32_t topics = 0;
  double alpha = 0.0;  // 0 means "use 50/K"
  double beta_p = 0.01, beta_s = 0.01, beta_b = 0.01, lambda = 0.01;
  std::vector<double> tau_zs{0.5, 0.5};
  std::vector<double> tau_b{0.5, 0.5};

  Hyperparameters resolve() const {
    Hyperparameters hp = Hyperparameters::defaults(topics);
    if (alpha > 0.0) hp.alpha = alpha;
    hp.beta_p = beta_p;
    hp.beta_s = beta_s;
    hp.beta_b = beta_b;
    hp.lambda = lambda;
    hp.tau_zs = {tau_zs.at(0), tau_zs.at(1)};
    hp.tau_b = {tau_b.at(0), tau_b.at(1)};
    return hp;
  }

  void record(Manifest& m) const {
    const Hyperparameters hp = resolve();
    m.set("hp.topics", std::uint64_t(hp.topic_count));
    m.set("hp.alpha", hp.alpha);
    m.set("hp.beta_p", hp.beta_p);
    m.set("hp.beta_s", hp.beta_s);
    m.set("hp.beta_b", hp.beta_b);
    m.set("hp.lambda", hp.lambda);
    m.set("hp.tau_zs.global", hp.tau_zs.global);
    m.set("hp.tau_zs.local", hp.tau_zs.local);
    m.set("hp.tau_b.topical", hp.tau_b.topical);
    m.set("hp.tau_b.background", hp.tau_b.background);
  }
};

void add_hyper_flags(CLI::App* cmd, HyperFlags& hf, bool topics_required) {
  auto* topics = cmd->add_option("--topics,-k", hf.topics, "Number of topics K");
  if (topics_required) topics->required();
  cmd->add_option("--alpha", hf.alpha, "User-topic prior (default 50/K)");
  cmd->add_option("--beta-p", hf.beta_p, "Global topic-word prior");
  cmd->add_option("--beta-s", hf.beta_s, "Local topic-word prior");
  cmd->add_option("--beta-b", hf.beta_b, "Background word prior");
  cmd->add_option("--lambda", hf.lambda, "Network-choice prior");
  cmd->add_option("--tau-zs", hf.tau_zs, "Global/local switch prior (two values)")
      ->expected(2);
  cmd->add_option("--tau-b", hf.tau_b, "Topical/background switch prior (two values)")
      ->expected(2);
}

std::string default_manifest(const std::string& primary_output) {
  return primary_output + ".manifest";
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  GenConfig config;
  HyperFlags hyper;
  std::string mode = "balanced";
  double sigma_global = -1.0;
  double sigma_background = -1.0;
  std::string out;
  std::string truth_out;
  std::string manifest;
};

int run_generate(GenerateArgs& args) {
  args.config.topics = args.hyper.topics;
  args.config.mode = args.mode == "faithful" ? GenMode::kFaithful : GenMode::kBalanced;
  if (args.sigma_global >= 0.0) args.config.fixed_global_share = args.sigma_global;
  if (args.sigma_background >= 0.0) args.config.fixed_background_share = args.sigma_background;
  const Hyperparameters hp = args.hyper.resolve();

  GroundTruth truth = sample_ground_truth(args.config, hp);
  GeneratedCorpus generated = generate_corpus(truth, args.config);
  export_corpus(generated.corpus, std::filesystem::path(args.out));
  if (!args.truth_out.empty()) {
    save_model(args.truth_out, truth.params, generated.corpus,
               {{"rho_used", truth.rho_used ? "1" : "0"}, {"model_type", "truth"}});
  }

  Manifest m;
  m.set("command", "generate");
  m.set("seed", args.config.seed);
  m.set("gen.users", std::uint64_t(args.config.users));
  m.set("gen.networks", std::uint64_t(args.config.networks));
  m.set("gen.vocab", std::uint64_t(args.config.vocab));
  m.set("gen.posts_per_cell", std::uint64_t(args.config.posts_per_user_network));
  m.set("gen.tokens_per_post", std::uint64_t(args.config.tokens_per_post));
  m.set("gen.geometric_length", std::uint64_t(args.config.geometric_length ? 1 : 0));
  m.set("gen.mode", args.mode);
  if (args.config.fixed_global_share) m.set("gen.sigma_global", *args.config.fixed_global_share);
  if (args.config.fixed_background_share) {
    m.set("gen.sigma_background", *args.config.fixed_background_share);
  }
  args.hyper.record(m);
  m.set("output.corpus", args.out);
  if (!args.truth_out.empty()) m.set("output.truth", args.truth_out);
  m.write(args.manifest.empty() ? default_manifest(args.out) : args.manifest);

  std::cout << "generated users=" << generated.corpus.user_count()
            << " networks=" << generated.corpus.network_count()
            << " posts=" << generated.corpus.post_count()
            << " tokens=" << generated.corpus.token_count()
            << " vocab=" << generated.corpus.vocabulary().size() << '\n';
  return 0;
}

// ------------------------------------------------------------------ ingest

struct IngestArgs {
  std::string input;
  std::string out;
  std::size_t min_word_count = 5;
  std::string stopwords;
  std::string manifest;
};

int run_ingest(IngestArgs& args) {
  IngestOptions options;
  options.min_word_count = args.min_word_count;
  if (!args.stopwords.empty()) options.stopword_path = args.stopwords;
  Corpus corpus = ingest_corpus(args.input, options);
  if (!args.out.empty()) export_corpus(corpus, std::filesystem::path(args.out));

  Manifest m;
  m.set("command", "ingest");
  m.set("ingest.min_word_count", std::uint64_t(args.min_word_count));
  m.set_input("corpus", args.input);
  if (!args.stopwords.empty()) m.set_input("stopwords", args.stopwords);
  if (!args.out.empty()) m.set("output.corpus", args.out);
  m.set("vocab_hash", hex64(vocabulary_hash(corpus.vocabulary())));
  m.write(args.manifest.empty()
              ? default_manifest(args.out.empty() ? args.input : args.out)
              : args.manifest);

  std::cout << "users=" << corpus.user_count() << " networks=" << corpus.network_count()
            << " posts=" << corpus.post_count() << " tokens=" << corpus.token_count()
            << " vocab=" << corpus.vocabulary().size() << '\n';
  return 0;
}

// ------------------------------------------------------------------- train

struct TrainArgs {
  std::string input;
  std::size_t min_word_count = 5;
  std::string stopwords;
  HyperFlags hyper;
  TrainConfig config;
  std::uint32_t average_snapshots = 0;
  double holdout_fraction = 0.0;
  std::uint64_t split_seed = 1;
  std::string heldout_out;
  std::string model_kind = "msnt";
  std::string model_out;
  std::string checkpoint_out;
  std::string manifest;
};

int run_train(TrainArgs& args) {
  IngestOptions options;
  options.min_word_count = args.min_word_count;
  if (!args.stopwords.empty()) options.stopword_path = args.stopwords;
  Corpus full = ingest_corpus(args.input, options);

  Corpus train_corpus = std::move(full);
  std::optional<Corpus> heldout;
  if (args.holdout_fraction > 0.0) {
    auto [tr, held] = split_holdout(train_corpus, args.holdout_fraction, args.split_seed);
    train_corpus = std::move(tr);
    heldout = std::move(held);
    if (!args.heldout_out.empty()) {
      export_corpus(*heldout, std::filesystem::path(args.heldout_out));
    }
  }

  const Hyperparameters hp = args.hyper.resolve();
  if (args.average_snapshots > 0) {
    args.config.estimate_mode = EstimateMode::kSnapshotAverage;
    args.config.snapshot_count = args.average_snapshots;
  }

  Manifest m;
  m.set("command", "train");
  m.set("model", args.model_kind);
  m.set_input("corpus", args.input);
  if (!args.stopwords.empty()) m.set_input("stopwords", args.stopwords);
  m.set("ingest.min_word_count", std::uint64_t(args.min_word_count));
  args.hyper.record(m);
  m.set("train.max_iters", std::uint64_t(args.config.max_iters));
  m.set("train.burn_in", std::uint64_t(args.config.burn_in));
  m.set("train.log_every", std::uint64_t(args.config.log_every));
  m.set("train.chains", std::uint64_t(args.config.chains));
  m.set("train.estimate_mode", args.config.estimate_mode == EstimateMode::kSnapshotAverage
                                   ? std::string("snapshot-average")
                                   : std::string("final-state"));
  if (args.config.estimate_mode == EstimateMode::kSnapshotAverage) {
    m.set("train.snapshot_count", std::uint64_t(args.config.snapshot_count));
    m.set("train.snapshot_spacing", std::uint64_t(args.config.snapshot_spacing));
  }
  m.set("seed", args.config.seed);
  if (args.holdout_fraction > 0.0) {
    m.set("split.fraction", args.holdout_fraction);
    m.set("split.seed", args.split_seed);
    if (!args.heldout_out.empty()) m.set("output.heldout", args.heldout_out);
  }
  m.set("output.model", args.model_out);
  if (!args.checkpoint_out.empty()) m.set("output.checkpoint", args.checkpoint_out);

  if (args.model_kind == "lda") {
    LdaModel lda = train_lda(train_corpus, hp.topic_count, hp.alpha, hp.beta_p,
                             args.config.max_iters, args.config.seed);
    // Shared export layout: the LDA topic-word table rides in the phi_p slot
    // and the unused channels are degenerate (all-global, no background).
    PosteriorEstimates est;
    est.users = lda.docs;
    est.topics = lda.topics;
    est.networks = static_cast<std::uint32_t>(train_corpus.network_count());
    est.vocab = lda.vocab;
    est.theta = lda.theta;
    est.phi_p = lda.phi;
    est.phi_s.assign(std::size_t(est.networks) * est.topics * est.vocab,
                     1.0 / static_cast<double>(est.vocab));
    est.phi_b.assign(est.vocab, 1.0 / static_cast<double>(est.vocab));
    est.rho.assign(std::size_t(est.users) * est.topics * est.networks,
                   1.0 / static_cast<double>(est.networks));
    est.sigma_zs.assign(std::size_t(est.networks) * est.topics * 2, 0.0);
    for (std::size_t i = 0; i < est.sigma_zs.size(); i += 2) est.sigma_zs[i] = 1.0;
    est.sigma_b = {1.0, 0.0};
    save_model(args.model_out, est, train_corpus, {{"model_type", "lda"}});
    if (heldout && heldout->token_count() > 0) {
      std::cout << "heldout_lda_perplexity=" << lda_perplexity(lda, *heldout) << '\n';
    }
    m.write(args.manifest.empty() ? default_manifest(args.model_out) : args.manifest);
    return 0;
  }

  TrainResult result = train(train_corpus, hp, args.config);
  std::cout << "iteration,perplexity,global_fraction,local_fraction,background_fraction\n";
  for (const auto& point : result.diagnostics.points) {
    std::cout << point.iteration << ',' << point.train_perplexity << ','
              << point.switch_fractions[0] << ',' << point.switch_fractions[1] << ','
              << point.switch_fractions[2] << '\n';
  }
  save_model(args.model_out, result.estimates, train_corpus, {{"model_type", "msnt"}});
  if (!args.checkpoint_out.empty()) {
    save_checkpoint(args.checkpoint_out, hp, result.assignments, train_corpus);
  }
  if (heldout && heldout->token_count() > 0) {
    std::cout << "heldout_perplexity=" << perplexity(result.estimates, *heldout) << '\n';
    std::cout << "heldout_likelihood=" << likelihood(result.estimates, *heldout) << '\n';
  }
  m.set("train.winning_chain_seed", result.diagnostics.chain_seed);
  m.write(args.manifest.empty() ? default_manifest(args.model_out) : args.manifest);
  return 0;
}

// -------------------------------------------------------------------- eval

struct EvalArgs {
  std::string model;
  std::string heldout;
  std::string reference;
  std::string checkpoint;
  std::uint32_t pmi_top = 50;
  std::string pmi_network;
  bool include_network_choice = false;
  std::string out;
  std::string manifest;
};

int run_eval(EvalArgs& args) {
  ModelArtifact artifact = load_model(args.model);
  if (!args.checkpoint.empty()) {
    Checkpoint ckpt = load_checkpoint(args.checkpoint);
    if (ckpt.vocab_hash != artifact.vocab_hash) {
      throw MsntError("vocabulary mismatch between model and checkpoint");
    }
  }
  if (args.heldout.empty() && args.reference.empty()) {
    throw MsntError("eval: need --heldout and/or --reference");
  }

  const bool is_lda = artifact.extras.count("model_type") &&
                      artifact.extras.at("model_type") == "lda";
  const Vocabulary vocab = artifact.vocabulary();

  std::ostringstream report;
  if (!args.heldout.empty()) {
    Corpus heldout = align_corpus(args.heldout, artifact.users, artifact.networks, vocab);
    if (is_lda) {
      LdaModel lda;
      lda.docs = artifact.estimates.users;
      lda.topics = artifact.estimates.topics;
      lda.vocab = artifact.estimates.vocab;
      lda.theta = artifact.estimates.theta;
      lda.phi = artifact.estimates.phi_p;
      report << "perplexity=" << lda_perplexity(lda, heldout) << '\n';
    } else {
      MetricOptions metric_options;
      metric_options.include_network_choice = args.include_network_choice;
      report << "perplexity=" << perplexity(artifact.estimates, heldout, metric_options)
             << '\n';
      report << "likelihood=" << likelihood(artifact.estimates, heldout, metric_options)
             << '\n';
    }
  }
  if (!args.reference.empty()) {
    Corpus reference = align_corpus(args.reference, artifact.users, artifact.networks, vocab);
    PmiOptions pmi_options;
    pmi_options.top_words = args.pmi_top;
    if (!args.pmi_network.empty()) {
      auto it = std::find(artifact.networks.begin(), artifact.networks.end(), args.pmi_network);
      if (it == artifact.networks.end()) {
        throw MsntError("eval: unknown network " + args.pmi_network);
      }
      pmi_options.network = static_cast<std::uint32_t>(it - artifact.networks.begin());
    }
    report << "pmi_score=" << pmi_score(artifact.estimates, reference, pmi_options) << '\n';
  }

  std::cout << report.str();
  if (!args.out.empty()) {
    std::ofstream out(args.out);
    if (!out) throw MsntError("eval: cannot open " + args.out);
    out << report.str();

    Manifest m;
    m.set("command", "eval");
    m.set_input("model", args.model);
    if (!args.heldout.empty()) m.set_input("heldout", args.heldout);
    if (!args.reference.empty()) m.set_input("reference", args.reference);
    if (!args.checkpoint.empty()) m.set_input("checkpoint", args.checkpoint);
    m.set("pmi.top", std::uint64_t(args.pmi_top));
    if (!args.pmi_network.empty()) m.set("pmi.network", args.pmi_network);
    m.set("include_network_choice", std::uint64_t(args.include_network_choice ? 1 : 0));
    m.set("output.report", args.out);
    m.write(args.manifest.empty() ? default_manifest(args.out) : args.manifest);
  }
  return 0;
}

// ------------------------------------------------------------------ report

struct ReportArgs {
  std::string model;
  std::string out_prefix;
  std::uint32_t top = 10;
  std::uint32_t user_topics = 3;
  std::string manifest;
};

int run_report(ReportArgs& args) {
  ModelArtifact artifact = load_model(args.model);
  TopicReport topics = topic_report(artifact.estimates, args.top, args.user_topics);
  JsdReport divergences = jsd_report(artifact.estimates);

  const std::string text_path = args.out_prefix + ".topics.txt";
  const std::string records_path = args.out_prefix + ".topics.tsv";
  const std::string jsd_path = args.out_prefix + ".jsd.tsv";
  {
    std::ofstream out(text_path);
    if (!out) throw MsntError("report: cannot open " + text_path);
    write_topic_report_text(topics, artifact.words, artifact.networks, out);
  }
  {
    std::ofstream out(records_path);
    if (!out) throw MsntError("report: cannot open " + records_path);
    write_topic_report_records(topics, artifact.words, artifact.networks, artifact.users, out);
  }
  {
    std::ofstream out(jsd_path);
    if (!out) throw MsntError("report: cannot open " + jsd_path);
    write_jsd_report(divergences, artifact.networks, out);
  }

  Manifest m;
  m.set("command", "report");
  m.set_input("model", args.model);
  m.set("report.top", std::uint64_t(args.top));
  m.set("report.user_topics", std::uint64_t(args.user_topics));
  m.set("output.text", text_path);
  m.set("output.records", records_path);
  m.set("output.jsd", jsd_path);
  m.write(args.manifest.empty() ? default_manifest(args.out_prefix) : args.manifest);

  std::cout << "mean_local_vs_global_jsd=" << divergences.mean_local_vs_global << '\n';
  return 0;
}

// ----------------------------------------------------------------- recover

struct RecoverArgs {
  GenConfig gen;
  HyperFlags hyper;
  double sigma_global = -1.0;
  double sigma_background = -1.0;
  TrainConfig train_config;
  std::string out;
  std::string manifest;
};

int run_recover(RecoverArgs& args) {
  args.gen.topics = args.hyper.topics;
  if (args.sigma_global >= 0.0) args.gen.fixed_global_share = args.sigma_global;
  if (args.sigma_background >= 0.0) args.gen.fixed_background_share = args.sigma_background;
  const Hyperparameters hp = args.hyper.resolve();

  GroundTruth truth = sample_ground_truth(args.gen, hp);
  GeneratedCorpus generated = generate_corpus(truth, args.gen);
  TrainResult result = train(generated.corpus, hp, args.train_config);

  std::ostringstream summary;
  TopicMatch global_match =
      match_topics(result.estimates.phi_p, truth.params.phi_p, hp.topic_count, args.gen.vocab);
  summary << "mean_matched_jsd_global=" << global_match.mean_jsd << '\n';
  for (std::uint32_t s = 0; s < args.gen.networks; ++s) {
    auto est_rows = std::span<const double>(
        result.estimates.phi_s.data() + std::size_t(s) * hp.topic_count * args.gen.vocab,
        std::size_t(hp.topic_count) * args.gen.vocab);
    auto truth_rows = std::span<const double>(
        truth.params.phi_s.data() + std::size_t(s) * hp.topic_count * args.gen.vocab,
        std::size_t(hp.topic_count) * args.gen.vocab);
    TopicMatch local = match_topics(est_rows, truth_rows, hp.topic_count, args.gen.vocab);
    summary << "mean_matched_jsd_local_" << s << '=' << local.mean_jsd << '\n';
  }

  std::cout << summary.str();
  std::ofstream out(args.out);
  if (!out) throw MsntError("recover: cannot open " + args.out);
  out << summary.str();

  Manifest m;
  m.set("command", "recover");
  m.set("seed", args.gen.seed);
  m.set("train.seed", args.train_config.seed);
  m.set("train.max_iters", std::uint64_t(args.train_config.max_iters));
  m.set("train.burn_in", std::uint64_t(args.train_config.burn_in));
  m.set("gen.users", std::uint64_t(args.gen.users));
  m.set("gen.networks", std::uint64_t(args.gen.networks));
  m.set("gen.vocab", std::uint64_t(args.gen.vocab));
  m.set("gen.posts_per_cell", std::uint64_t(args.gen.posts_per_user_network));
  m.set("gen.tokens_per_post", std::uint64_t(args.gen.tokens_per_post));
  if (args.gen.fixed_global_share) m.set("gen.sigma_global", *args.gen.fixed_global_share);
  if (args.gen.fixed_background_share) {
    m.set("gen.sigma_background", *args.gen.fixed_background_share);
  }
  args.hyper.record(m);
  m.set("output.summary", args.out);
  m.write(args.manifest.empty() ? default_manifest(args.out) : args.manifest);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MSNT: multi-network topic model engine"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read option defaults from a config file (INI/TOML)");

  GenerateArgs gen_args;
  auto* generate = app.add_subcommand("generate", "Sample a synthetic corpus with ground truth");
  generate->add_option("--users", gen_args.config.users, "User count")->required();
  generate->add_option("--networks", gen_args.config.networks, "Network count")->required();
  generate->add_option("--vocab", gen_args.config.vocab, "Vocabulary size")->required();
  generate->add_option("--posts-per-cell", gen_args.config.posts_per_user_network,
                       "Posts per (user, network)")
      ->required();
  generate->add_option("--tokens-per-post", gen_args.config.tokens_per_post, "Tokens per post")
      ->required();
  generate->add_flag("--geometric-length", gen_args.config.geometric_length,
                     "Geometric post lengths with the given mean");
  generate->add_option("--mode", gen_args.mode, "balanced | faithful")
      ->check(CLI::IsMember({"balanced", "faithful"}));
  generate->add_option("--sigma-global", gen_args.sigma_global,
                       "Fix every global-vs-local switch probability");
  generate->add_option("--sigma-background", gen_args.sigma_background,
                       "Fix the background switch probability");
  generate->add_option("--seed", gen_args.config.seed, "Generator seed");
  add_hyper_flags(generate, gen_args.hyper, true);
  generate->add_option("--out", gen_args.out, "Corpus output path")->required();
  generate->add_option("--truth", gen_args.truth_out, "Ground-truth output path");
  generate->add_option("--manifest", gen_args.manifest, "Manifest path");

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand("ingest", "Validate, filter and re-export a corpus");
  ingest->add_option("--input", ingest_args.input, "Corpus records path")->required();
  ingest->add_option("--out", ingest_args.out, "Normalized corpus output path");
  ingest->add_option("--min-word-count", ingest_args.min_word_count,
                     "Drop words rarer than this");
  ingest->add_option("--stopwords", ingest_args.stopwords, "Stopword file (one per line)");
  ingest->add_option("--manifest", ingest_args.manifest, "Manifest path");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Run collapsed Gibbs training");
  train_cmd->add_option("--input", train_args.input, "Corpus records path")->required();
  train_cmd->add_option("--min-word-count", train_args.min_word_count,
                        "Drop words rarer than this");
  train_cmd->add_option("--stopwords", train_args.stopwords, "Stopword file");
  add_hyper_flags(train_cmd, train_args.hyper, true);
  train_cmd->add_option("--iters", train_args.config.max_iters, "Gibbs sweeps");
  train_cmd->add_option("--burn-in", train_args.config.burn_in, "Burn-in sweeps");
  train_cmd->add_option("--log-every", train_args.config.log_every, "Diagnostics interval");
  train_cmd->add_option("--seed", train_args.config.seed, "Chain seed");
  train_cmd->add_option("--chains", train_args.config.chains,
                        "Independent chains; keeps the best-likelihood one");
  train_cmd->add_option("--average-snapshots", train_args.average_snapshots,
                        "Average estimates over this many post-burn-in snapshots");
  train_cmd->add_option("--snapshot-spacing", train_args.config.snapshot_spacing,
                        "Sweeps between snapshots");
  train_cmd->add_option("--holdout-fraction", train_args.holdout_fraction,
                        "Per-cell holdout fraction in (0,1)");
  train_cmd->add_option("--split-seed", train_args.split_seed, "Holdout split seed");
  train_cmd->add_option("--heldout-out", train_args.heldout_out, "Heldout corpus output path");
  train_cmd->add_option("--model", train_args.model_kind, "msnt | lda")
      ->check(CLI::IsMember({"msnt", "lda"}));
  train_cmd->add_option("--model-out", train_args.model_out, "Estimates output path")
      ->required();
  train_cmd->add_option("--checkpoint-out", train_args.checkpoint_out,
                        "Checkpoint output path");
  train_cmd->add_option("--manifest", train_args.manifest, "Manifest path");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Score a trained model");
  eval_cmd->add_option("--model", eval_args.model, "Model estimates path")->required();
  eval_cmd->add_option("--heldout", eval_args.heldout, "Heldout corpus records");
  eval_cmd->add_option("--reference", eval_args.reference, "Reference corpus for PMI");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint,
                       "Checkpoint that must match the model's vocabulary");
  eval_cmd->add_option("--pmi-top", eval_args.pmi_top, "Top words per topic for PMI");
  eval_cmd->add_option("--pmi-network", eval_args.pmi_network,
                       "Score a local distribution instead of the global one");
  eval_cmd->add_flag("--include-network-choice", eval_args.include_network_choice,
                     "Multiply the rho factor into post probabilities");
  eval_cmd->add_option("--out", eval_args.out, "Write the metric report here too");
  eval_cmd->add_option("--manifest", eval_args.manifest, "Manifest path");

  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "Emit topic tables and JSD reports");
  report_cmd->add_option("--model", report_args.model, "Model estimates path")->required();
  report_cmd->add_option("--out", report_args.out_prefix, "Output path prefix")->required();
  report_cmd->add_option("--top", report_args.top, "Words per topic");
  report_cmd->add_option("--user-topics", report_args.user_topics, "Topics listed per user");
  report_cmd->add_option("--manifest", report_args.manifest, "Manifest path");

  RecoverArgs recover_args;
  auto* recover_cmd =
      app.add_subcommand("recover", "generate -> train -> match topics, one shot");
  recover_cmd->add_option("--users", recover_args.gen.users, "User count")->required();
  recover_cmd->add_option("--networks", recover_args.gen.networks, "Network count")->required();
  recover_cmd->add_option("--vocab", recover_args.gen.vocab, "Vocabulary size")->required();
  recover_cmd
      ->add_option("--posts-per-cell", recover_args.gen.posts_per_user_network,
                   "Posts per (user, network)")
      ->required();
  recover_cmd
      ->add_option("--tokens-per-post", recover_args.gen.tokens_per_post, "Tokens per post")
      ->required();
  recover_cmd->add_option("--sigma-global", recover_args.sigma_global,
                          "Fix every global-vs-local switch probability");
  recover_cmd->add_option("--sigma-background", recover_args.sigma_background,
                          "Fix the background switch probability");
  recover_cmd->add_option("--seed", recover_args.gen.seed, "Generator seed");
  add_hyper_flags(recover_cmd, recover_args.hyper, true);
  recover_cmd->add_option("--iters", recover_args.train_config.max_iters, "Gibbs sweeps");
  recover_cmd->add_option("--burn-in", recover_args.train_config.burn_in, "Burn-in sweeps");
  recover_cmd->add_option("--train-seed", recover_args.train_config.seed, "Chain seed");
  recover_cmd->add_option("--chains", recover_args.train_config.chains, "Independent chains");
  recover_cmd->add_option("--out", recover_args.out, "Summary output path")->required();
  recover_cmd->add_option("--manifest", recover_args.manifest, "Manifest path");

  CLI11_PARSE(app, argc, argv);

  // Keep the default burn-in proportional when only --iters is given.
  auto fit_burn_in = [](CLI::App* cmd, TrainConfig& config) {
    if (cmd->count("--burn-in") == 0 && config.burn_in >= config.max_iters) {
      config.burn_in = config.max_iters > 0 ? config.max_iters * 3 / 5 : 0;
    }
  };

  try {
    if (generate->parsed()) return run_generate(gen_args);
    if (ingest->parsed()) return run_ingest(ingest_args);
    if (train_cmd->parsed()) {
      fit_burn_in(train_cmd, train_args.config);
      return run_train(train_args);
    }
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (report_cmd->parsed()) return run_report(report_args);
    if (recover_cmd->parsed()) {
      fit_burn_in(recover_cmd, recover_args.train_config);
      return run_recover(recover_args);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
