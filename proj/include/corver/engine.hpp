#pragma once

// Full reward pipeline behind one configuration: sentence scoring, response
// grading, per-token returns and group advantages.

#include <corver/cooc_query.hpp>
#include <corver/extractor.hpp>
#include <corver/grading.hpp>
#include <corver/json_io.hpp>
#include <corver/returns.hpp>
#include <corver/reward.hpp>
#include <corver/segmentation.hpp>
#include <corver/text_index.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace corver {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExtractorConfig {
  std::string stub_path;  // JSONL lookup, or
  std::string command;    // external line-protocol process
};

struct EngineConfig {
  std::string index_path;
  ScoringConfig scoring;
  ChannelWeights weights;
  JudgeRewards judge_rewards;
  FormatRewards format_rewards;
  double fallback_threshold = 0.5;
  ScaleMode scale_mode = ScaleMode::Scalar;
  double epsilon = 1e-6;
  ExtractorConfig extractor;
  std::string stopwords_path;  // empty: built-in list

  void validate() const {
    scoring.map.validate();
    if (scoring.window < 1) throw ConfigError("window must be >= 1");
    if (!(fallback_threshold >= 0.0 && fallback_threshold <= 1.0))
      throw ConfigError("fallback_threshold must lie in [0, 1]");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
    if (!extractor.stub_path.empty() && !extractor.command.empty())
      throw ConfigError("extractor takes either 'stub' or 'command', not both");
    for (const auto* p : {&index_path, &extractor.stub_path, &stopwords_path})
      if (!p->empty() && !std::filesystem::exists(*p)) throw ConfigError("file not found: " + *p);
  }

  /// Relative paths resolve against `base_dir`. Unknown keys are rejected.
  static EngineConfig from_json(const json& j, const std::filesystem::path& base_dir = {}) {
    static const std::vector<std::string> kKeys{
        "index_path", "variant",        "alphas",        "taus",         "window",
        "relcheck_demotion", "weights", "judge_rewards", "format_rewards", "fallback_threshold",
        "scale_mode", "epsilon",        "extractor",     "stopwords_path", "early_exit"};
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [k, v] : j.items())
      if (std::find(kKeys.begin(), kKeys.end(), k) == kKeys.end())
        throw ConfigError("unknown config key '" + k + "'");

    auto path = [&](const json& v) {
      std::filesystem::path p(v.get<std::string>());
      return (p.is_relative() && !base_dir.empty() ? base_dir / p : p).string();
    };
    EngineConfig c;
    try {
      if (j.contains("index_path")) c.index_path = path(j["index_path"]);
      if (j.contains("variant")) c.scoring.variant = parse_variant(j["variant"].get<std::string>());
      if (j.contains("alphas")) {
        const auto a = j["alphas"].get<std::vector<double>>();
        if (a.size() != 4) throw ConfigError("alphas needs 4 values");
        c.scoring.map.alpha0 = a[0];
        c.scoring.map.alpha1 = a[1];
        c.scoring.map.alpha2 = a[2];
        c.scoring.map.alpha3 = a[3];
      }
      if (j.contains("taus")) {
        const auto t = j["taus"].get<std::vector<uint64_t>>();
        if (t.size() != 2) throw ConfigError("taus needs 2 values");
        c.scoring.map.tau1 = t[0];
        c.scoring.map.tau2 = t[1];
      }
      if (j.contains("window")) c.scoring.window = j["window"].get<uint64_t>();
      if (j.contains("relcheck_demotion")) c.scoring.relcheck_demotion = j["relcheck_demotion"].get<double>();
      if (j.contains("early_exit")) c.scoring.early_exit = j["early_exit"].get<bool>();
      if (j.contains("weights")) {
        const json& w = j["weights"];
        c.weights.lambda_f = w.value("format", c.weights.lambda_f);
        c.weights.lambda_j = w.value("judge", c.weights.lambda_j);
        c.weights.lambda_c = w.value("cooc", c.weights.lambda_c);
      }
      if (j.contains("judge_rewards")) {
        const json& r = j["judge_rewards"];
        c.judge_rewards.good = r.value("good", c.judge_rewards.good);
        c.judge_rewards.bad = r.value("bad", c.judge_rewards.bad);
        c.judge_rewards.na = r.value("na", c.judge_rewards.na);
      }
      if (j.contains("format_rewards")) {
        const json& r = j["format_rewards"];
        c.format_rewards.ok = r.value("ok", c.format_rewards.ok);
        c.format_rewards.fail = r.value("fail", c.format_rewards.fail);
      }
      if (j.contains("fallback_threshold")) c.fallback_threshold = j["fallback_threshold"].get<double>();
      if (j.contains("scale_mode")) c.scale_mode = parse_scale_mode(j["scale_mode"].get<std::string>());
      if (j.contains("epsilon")) c.epsilon = j["epsilon"].get<double>();
      if (j.contains("extractor")) {
        const json& e = j["extractor"];
        if (e.contains("stub")) c.extractor.stub_path = path(e["stub"]);
        if (e.contains("command")) c.extractor.command = e["command"].get<std::string>();
      }
      if (j.contains("stopwords_path")) c.stopwords_path = path(j["stopwords_path"]);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
  }

  static EngineConfig from_file(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + file);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(file + ": " + e.what());
    }
    return from_json(j, std::filesystem::path(file).parent_path());
  }

  /// Explicit path, else $CORVER_CONFIG.
  static EngineConfig resolve(const std::string& file) {
    if (!file.empty()) return from_file(file);
    if (const char* env = std::getenv("CORVER_CONFIG"); env && *env) return from_file(env);
    throw ConfigError("no config given and CORVER_CONFIG is not set");
  }
};

struct SentenceError {
  size_t sentence_index = 0;
  std::string message;
};

/// Count or extraction failure. No reward is produced for the completion.
struct ScoringError : std::runtime_error {
  ScoringError(const std::string& what, std::vector<SentenceError> s)
      : std::runtime_error(what), sentences(std::move(s)) {}
  std::vector<SentenceError> sentences;
};

struct GroupResult {
  std::vector<CompletionScore> completions;
  GroupAdvantages advantages;
};

class Engine {
 public:
  /// Loads the index, stop words and extractor named by the config.
  explicit Engine(EngineConfig config) : config_(std::move(config)) {
    config_.validate();
    if (config_.index_path.empty()) throw ConfigError("config needs index_path");
    index_ = std::make_shared<TextIndex>(TextIndex::load(config_.index_path));
    counter_ = std::make_shared<IndexCounter>(*index_);
    stops_ = config_.stopwords_path.empty() ? StopWordList::defaults()
                                            : StopWordList::from_file(config_.stopwords_path);
    if (!config_.extractor.command.empty())
      extractor_ = std::make_shared<ProcessExtractor>(config_.extractor.command);
    else if (!config_.extractor.stub_path.empty())
      extractor_ = std::make_shared<StubExtractor>(StubExtractor::from_file(config_.extractor.stub_path));
    else
      extractor_ = std::make_shared<StubExtractor>();
  }

  /// Injected components; no files are touched.
  Engine(EngineConfig config, std::shared_ptr<const CoocCounter> counter,
         std::shared_ptr<Extractor> extractor, StopWordList stops = StopWordList::defaults())
      : config_(std::move(config)),
        counter_(std::move(counter)),
        extractor_(std::move(extractor)),
        stops_(std::move(stops)) {
    config_.scoring.map.validate();
  }

  const EngineConfig& config() const { return config_; }
  const TextIndex* text_index() const { return index_.get(); }
  uint64_t index_tokens() const { return index_ ? index_->index().size() : 0; }

  CnfCount count(const std::vector<std::string>& words, std::optional<uint64_t> window = {}) const {
    if (words.empty()) throw std::invalid_argument("count needs at least one word");
    const uint64_t w = window.value_or(config_.scoring.window);
    if (w < 1) throw std::invalid_argument("window must be >= 1");
    return counter_->count(WordQuery{words, WordQuery::Source::HeadTail}, w);
  }

  CompletionScore score_completion(const Completion& completion, const GoldAnswers& gold) const {
    CompletionScore out;
    out.mask = completion.mask;
    const std::u32string text = unicode::decode(completion.text);
    out.sentences = split_sentences(std::u32string_view(text));
    out.alignment = align_tokens(completion, out.sentences, config_.fallback_threshold);
    out.prediction = extract_answer(completion.text);
    out.judge = judge(out.prediction, gold, config_.judge_rewards);
    out.format = format_reward(completion.text, config_.format_rewards);
    out.response_return = response_return(out.judge, out.format, config_.weights);

    std::vector<std::string> texts;
    texts.reserve(out.sentences.size());
    for (const auto& s : out.sentences) texts.push_back(sentence_text(text, s));
    std::vector<ExtractorOutput> extracted;
    if (!texts.empty()) {
      try {
        extracted = extractor_->extract_batch(texts);
      } catch (const std::exception& e) {
        std::vector<SentenceError> errs;
        for (const auto& s : out.sentences) errs.push_back({s.index, e.what()});
        throw ScoringError(std::string("extractor failed: ") + e.what(), std::move(errs));
      }
    }

    const SentenceScorer scorer(*counter_, stops_, config_.scoring);
    std::vector<SentenceError> errors;
    out.sentence_scores.reserve(out.sentences.size());
    for (size_t i = 0; i < out.sentences.size(); ++i) {
      try {
        out.sentence_scores.push_back(scorer.score(out.sentences[i].index, extracted[i]));
      } catch (const std::exception& e) {
        errors.push_back({out.sentences[i].index, e.what()});
        out.sentence_scores.emplace_back();
      }
    }
    if (!errors.empty())
      throw ScoringError("count query failed for " + std::to_string(errors.size()) + " sentence(s)",
                         std::move(errors));

    out.token_returns = token_returns(out.response_return, out.sentence_scores, out.alignment,
                                      completion.mask, config_.weights);
    return out;
  }

  GroupResult score_group(const std::vector<Completion>& completions,
                          const std::vector<GoldAnswers>& golds) const {
    if (completions.size() != golds.size())
      throw std::invalid_argument("one gold per completion required");
    GroupResult r;
    for (size_t k = 0; k < completions.size(); ++k)
      r.completions.push_back(score_completion(completions[k], golds[k]));
    r.advantages = group_advantages(r.completions, config_.epsilon, config_.scale_mode);
    return r;
  }

 private:
  EngineConfig config_;
  std::shared_ptr<const TextIndex> index_;
  std::shared_ptr<const CoocCounter> counter_;
  std::shared_ptr<Extractor> extractor_;
  StopWordList stops_ = StopWordList::defaults();
};

}  // namespace corver
