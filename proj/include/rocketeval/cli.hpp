// Copyright 2026 The RocketEval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. Exit codes: 0 success, 1 invalid input or usage,
// 2 runtime failure. Every command writes `<out>.manifest.json` next to its
// output.

#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rocketeval/checklist.hpp"
#include "rocketeval/config.hpp"
#include "rocketeval/diagnostics.hpp"
#include "rocketeval/elo.hpp"
#include "rocketeval/error.hpp"
#include "rocketeval/gateway.hpp"
#include "rocketeval/grading.hpp"
#include "rocketeval/hashing.hpp"
#include "rocketeval/io.hpp"
#include "rocketeval/metrics.hpp"
#include "rocketeval/parallel.hpp"
#include "rocketeval/scoring.hpp"

namespace rocketeval::cli {

inline constexpr std::string_view kVersion = "0.1.0";

struct Options {
  std::string config;
  std::string dataset;
  std::string responses;
  std::string checklists;
  std::string judgments;
  std::string annotations;
  std::string scores;
  std::string matches;
  std::string gold;
  std::string ground_truth;
  std::string predictors;
  std::string judge_id;
  std::string out;
  std::string mode = "checklist";
  std::string probe = "both";
  std::vector<std::string> train_models;
  std::vector<std::string> eval_models;
  bool supervised = false;
  bool allow_overlap = false;
  std::optional<std::uint64_t> seed;
  std::optional<double> tie_eps;
  std::optional<int> max_parallel;
  std::optional<int> rounds;
  std::optional<int> samples;
  std::optional<double> temperature;
};

// Reproducibility record written next to every output.
class Manifest {
 public:
  Manifest(std::string command, const Config& config) : command_(std::move(command)) {
    json_["command"] = command_;
    json_["version"] = kVersion;
    json_["config"] = ConfigToJson(config);
    json_["seeds"] = {{"run", config.seed}};
  }

  void Input(const std::string& role, const std::string& path) {
    if (path.empty()) return;
    json_["inputs"][role] = {{"path", path}, {"sha256", FileSha256Hex(path)}};
  }
  void Output(const std::string& role, const std::filesystem::path& path) {
    json_["outputs"][role] = path.string();
  }
  void PromptHashes(std::vector<std::string> hashes) {
    std::sort(hashes.begin(), hashes.end());
    std::string joined;
    for (const auto& h : hashes) joined += h + "\n";
    json_["prompt_hashes"] = {{"count", hashes.size()}, {"digest", Sha256Hex(joined)}};
  }
  void Set(const std::string& key, Json value) { json_[key] = std::move(value); }

  void Write(const std::filesystem::path& out) const {
    const std::filesystem::path path = out.string() + ".manifest.json";
    std::ofstream f(path);
    if (!f) throw Error("cannot write " + path.string());
    f << json_.dump(2) << "\n";
  }

 private:
  std::string command_;
  Json json_;
};

namespace detail {

inline void Need(const std::string& value, const std::string& flag) {
  if (value.empty()) throw ValidationError("missing required flag " + flag);
}

inline Config ResolveConfig(const Options& o, std::ostream& err) {
  ConfigOverrides ov{o.seed, o.tie_eps, o.max_parallel, o.train_models, o.eval_models};
  Config c;
  if (o.config.empty()) {
    ApplyOverrides(c, ov);
    ValidateConfig(c);
  } else {
    c = LoadConfig(o.config, ov);
  }
  for (const auto& w : c.warnings) err << "warning: " << w << "\n";
  return c;
}

inline std::unique_ptr<Gateway> MakeGateway(const BackendConfig& b, const Config& c) {
  return Gateway::FromConfig(Seeded(b, c.seed));
}

inline std::string Fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

inline std::map<std::string, const EvalInstance*> IndexSessions(const std::vector<EvalInstance>& xs) {
  std::map<std::string, const EvalInstance*> out;
  for (const auto& x : xs) out[x.session_id] = &x;
  return out;
}

inline const EvalInstance& SessionOf(const std::map<std::string, const EvalInstance*>& index,
                                     const std::string& session) {
  auto it = index.find(session);
  if (it == index.end()) throw ValidationError("response for unknown session " + session);
  return *it->second;
}

// Latest record per (session, model, item) for a single judge.
inline std::vector<JudgmentRecord> LoadJudgmentsForScoring(const std::string& path,
                                                           const std::string& judge_id) {
  auto all = JudgmentCache(path).Load();
  std::set<std::string> judges;
  for (const auto& r : all) judges.insert(r.judge_id);
  std::string judge = judge_id;
  if (judge.empty()) {
    if (judges.size() > 1) {
      std::string names;
      for (const auto& j : judges) names += (names.empty() ? "" : ", ") + j;
      throw ValidationError("judgment file holds several judges (" + names +
                            "); pick one with --judge-id");
    }
    if (!judges.empty()) judge = *judges.begin();
  }
  std::map<std::tuple<std::string, std::string, int>, std::size_t> latest;
  std::vector<JudgmentRecord> out;
  for (auto& r : all) {
    if (r.judge_id != judge) continue;
    auto [it, inserted] = latest.emplace(std::tuple{r.session_id, r.model_id, r.item_index}, out.size());
    if (inserted) {
      out.push_back(std::move(r));
    } else {
      out[it->second] = std::move(r);
    }
  }
  if (out.empty()) throw ValidationError("no judgments in " + path + (judge.empty() ? "" : " for judge " + judge));
  return out;
}

// ---- commands ----------------------------------------------------------------

inline int CreateChecklists(const Options& o, std::ostream& out, std::ostream& err) {
  Need(o.dataset, "--dataset");
  Need(o.out, "--out");
  const Config c = ResolveConfig(o, err);
  auto creator = MakeGateway(c.RequireCreator(), c);
  const auto dataset = LoadDataset(o.dataset);
  std::vector<Checklist> lists(dataset.size());
  std::vector<std::string> hashes;
  for (const auto& x : dataset) hashes.push_back(Sha256Hex(RenderCreationPrompt(x)));
  ParallelFor(dataset.size(), static_cast<std::size_t>(creator->config().max_parallel),
              [&](std::size_t i) { lists[i] = CreateChecklist(dataset[i], *creator); });
  std::size_t unusual = 0;
  for (const auto& l : lists) {
    if (l.size_warning()) {
      ++unusual;
      err << "warning: checklist for " << l.session_id << " has " << l.items.size() << " items\n";
    }
  }
  WriteChecklists(o.out, lists);
  Manifest m("create-checklists", c);
  m.Input("dataset", o.dataset);
  m.Output("checklists", o.out);
  m.PromptHashes(hashes);
  m.Set("backend_calls", creator->backend_calls());
  m.Write(o.out);
  out << "create-checklists: " << lists.size() << " checklists (" << unusual
      << " outside 5-10 items) -> " << o.out << "\n";
  return 0;
}

inline int GradeChecklist(const Options& o, const Config& c, Gateway& judge,
                          const std::vector<EvalInstance>& dataset,
                          const std::vector<ModelResponse>& responses, std::ostream& out) {
  std::vector<Checklist> lists;
  if (o.mode == "fixed") {
    for (const auto& x : dataset) lists.push_back(FixedChecklist(x.session_id));
  } else {
    Need(o.checklists, "--checklists");
    lists = LoadChecklists(o.checklists);
  }
  const JudgmentCache cache(o.out);
  GradeOptions go{c.failure_threshold, &cache};
  Manifest m("grade", c);
  m.Input("dataset", o.dataset);
  m.Input("responses", o.responses);
  m.Input("checklists", o.checklists);
  m.Set("mode", o.mode);
  if (o.mode == "fixed") m.Set("fixed_checklist_version", kFixedChecklistVersion);
  m.Output("judgments", o.out);
  GradeReport report;
  try {
    report = GradeAll(dataset, responses, lists, judge, go);
  } catch (const FailureThresholdError&) {
    m.Set("backend_calls", judge.backend_calls());
    m.Write(o.out);
    throw;
  }
  m.PromptHashes(report.prompt_hashes);
  m.Set("backend_calls", judge.backend_calls());
  m.Set("cache_hits", report.cache_hits);
  m.Set("failures", report.failures.size());
  m.Write(o.out);
  out << "grade: " << report.records.size() << " judgments (" << report.cache_hits
      << " cached, " << report.dispatched << " requested, " << report.failures.size()
      << " failed, " << judge.backend_calls() << " backend calls) -> " << o.out << "\n";
  return 0;
}

inline int GradeHolistic(const Options& o, const Config& c, Gateway& judge,
                         const std::vector<EvalInstance>& dataset,
                         const std::vector<ModelResponse>& responses, std::ostream& out,
                         std::ostream& err) {
  const bool direct = o.mode == "direct";
  const TemplateId id = direct ? TemplateId::kDirectScoring : TemplateId::kCotScoring;
  std::map<std::string, const Checklist*> checklist_of;
  std::vector<Checklist> lists;
  if (!o.checklists.empty()) {
    lists = LoadChecklists(o.checklists);
    for (const auto& l : lists) checklist_of[l.session_id] = &l;
  }
  const auto index = IndexSessions(dataset);
  const auto guidance_for = [&](const EvalInstance& x) {
    if (checklist_of.empty()) return ReferenceGuidance(x);
    auto it = checklist_of.find(x.session_id);
    if (it == checklist_of.end()) throw ValidationError("no checklist for session " + x.session_id);
    return ChecklistGuidance(*it->second);
  };

  std::vector<std::optional<ScoreRecord>> slots(responses.size());
  std::vector<std::string> errors(responses.size());
  std::vector<std::string> hashes;
  for (const auto& r : responses) {
    const auto& x = SessionOf(index, r.session_id);
    hashes.push_back(Sha256Hex(RenderJudgePrompt(id, x, r, guidance_for(x))));
  }
  ParallelFor(responses.size(), static_cast<std::size_t>(judge.config().max_parallel),
              [&](std::size_t i) {
                const auto& r = responses[i];
                const auto& x = SessionOf(index, r.session_id);
                try {
                  slots[i] = direct ? DirectScore(x, r, judge, guidance_for(x))
                                    : CotScore(x, r, judge, guidance_for(x));
                } catch (const TransportError& e) {
                  errors[i] = e.what();
                } catch (const RequestError& e) {
                  errors[i] = e.what();
                } catch (const ExtractionError& e) {
                  errors[i] = e.what();
                }
              });
  std::vector<ScoreRecord> scores;
  std::vector<Json> error_rows;
  for (std::size_t i = 0; i < responses.size(); ++i) {
    if (slots[i]) {
      scores.push_back(*slots[i]);
    } else {
      error_rows.push_back({{"session_id", responses[i].session_id},
                            {"model_id", responses[i].model_id},
                            {"error", errors[i]}});
    }
  }
  WriteScores(o.out, scores);
  const std::filesystem::path err_path = o.out + ".errors.jsonl";
  if (!error_rows.empty()) {
    jsonl::Write(err_path, error_rows);
  } else if (std::filesystem::exists(err_path)) {
    std::filesystem::remove(err_path);
  }
  Manifest m("grade", c);
  m.Input("dataset", o.dataset);
  m.Input("responses", o.responses);
  m.Input("checklists", o.checklists);
  m.Set("mode", o.mode);
  m.Output("scores", o.out);
  m.PromptHashes(hashes);
  m.Set("backend_calls", judge.backend_calls());
  m.Set("failures", error_rows.size());
  m.Write(o.out);
  if (!responses.empty()) {
    const double rate = static_cast<double>(error_rows.size()) / static_cast<double>(responses.size());
    if (rate > c.failure_threshold) {
      err << "first error: " << error_rows.front()["error"].get<std::string>() << "\n";
      throw FailureThresholdError(std::to_string(error_rows.size()) + " of " +
                                  std::to_string(responses.size()) + " " + o.mode +
                                  " requests failed");
    }
  }
  out << "grade: " << scores.size() << " " << o.mode << " scores (" << error_rows.size()
      << " failed, " << judge.backend_calls() << " backend calls) -> " << o.out << "\n";
  return 0;
}

inline int Grade(const Options& o, std::ostream& out, std::ostream& err) {
  Need(o.dataset, "--dataset");
  Need(o.responses, "--responses");
  Need(o.out, "--out");
  const Config c = ResolveConfig(o, err);
  auto judge = MakeGateway(c.RequireJudge(), c);
  const auto dataset = LoadDataset(o.dataset);
  const auto responses = LoadResponses(o.responses);
  if (o.mode == "checklist" || o.mode == "fixed") {
    return GradeChecklist(o, c, *judge, dataset, responses, out);
  }
  return GradeHolistic(o, c, *judge, dataset, responses, out, err);
}

inline int Predict(const Options& o, std::ostream& out, std::ostream& err) {
  Need(o.judgments, "--judgments");
  Need(o.out, "--out");
  const Config c = ResolveConfig(o, err);
  const auto judgments = LoadJudgmentsForScoring(o.judgments, o.judge_id);
  Manifest m("predict", c);
  m.Input("judgments", o.judgments);
  std::vector<std::string> hashes;
  for (const auto& j : judgments) hashes.push_back(j.prompt_hash);
  m.PromptHashes(hashes);

  std::vector<ScoreRecord> scores;
  std::string detail;
  if (!o.supervised) {
    scores = ScoreResponses(judgments, {}, c.range, c.eval_models);
  } else {
    Need(o.checklists, "--checklists");
    Need(o.annotations, "--annotations");
    if (c.train_models.empty()) {
      throw ValidationError("supervised prediction needs --train-models (or [scoring] train_models)");
    }
    std::set<std::string> eval = c.eval_models;
    if (eval.empty()) {
      for (const auto& j : judgments) {
        if (!c.train_models.contains(j.model_id)) eval.insert(j.model_id);
      }
    }
    CheckDisjoint(c.train_models, eval, o.allow_overlap);
    std::map<std::string, std::size_t> sizes;
    for (const auto& l : LoadChecklists(o.checklists)) sizes[l.session_id] = l.items.size();
    std::map<ResponseKey, FeatureVector> features;
    for (const auto& [key, js] : GroupJudgments(judgments)) {
      auto it = sizes.find(key.first);
      if (it == sizes.end()) throw ValidationError("no checklist for session " + key.first);
      features.emplace(key, BuildFeatureVector(js, it->second));
    }
    const auto annotations = LoadAnnotations(o.annotations);
    SupervisedSetup setup{c.train_models, c.trees, c.smoothing};
    setup.params.seed = c.seed;
    const auto predictors = FitSessionPredictors(features, annotations, c.range, setup);
    scores = ScoreResponses(judgments, sizes, c.range, eval, &predictors);
    if (!o.predictors.empty()) {
      WritePredictors(o.predictors, predictors);
      m.Output("predictors", o.predictors);
    }
    m.Input("checklists", o.checklists);
    m.Input("annotations", o.annotations);
    m.Set("eval_models", eval);
    m.Set("allow_overlap", o.allow_overlap);
    detail = ", " + std::to_string(predictors.size()) + " session predictors";
  }
  WriteScores(o.out, scores);
  m.Output("scores", o.out);
  m.Set("mode", o.supervised ? "checklist_sup" : "checklist_unsup");
  m.Set("backend_calls", 0);
  m.Write(o.out);
  out << "predict: " << scores.size() << (o.supervised ? " supervised" : " unsupervised")
      << " scores" << detail << " -> " << o.out << "\n";
  return 0;
}

inline Json EloJson(const EloRating& e) {
  return {{"model_id", e.model_id}, {"rating", e.rating}, {"ci_low", e.ci_low}, {"ci_high", e.ci_high}};
}

inline int Report(const Options& o, std::ostream& out, std::ostream& err) {
  Need(o.scores, "--scores");
  Need(o.out, "--out");
  const Config c = ResolveConfig(o, err);
  const auto scores = LoadScores(o.scores);
  if (scores.empty()) throw ValidationError("no scores in " + o.scores);
  const auto models = SummarizeModels(scores);
  const auto matches = ScoresToMatches(scores, c.tie_eps);
  const auto elo = BootstrapElo(matches, c.bootstrap_rounds, c.seed, c.elo);
  std::map<std::string, EloRating> elo_of;
  for (const auto& e : elo) elo_of[e.model_id] = e;

  std::vector<Json> rows;
  for (const auto& s : models) {
    Json row = {{"type", "model"},
                {"model_id", s.model_id},
                {"mean_score", s.mean_score},
                {"n_sessions", s.n_sessions},
                {"rank", s.rank}};
    if (auto it = elo_of.find(s.model_id); it != elo_of.end()) {
      row["elo"] = it->second.rating;
      row["ci_low"] = it->second.ci_low;
      row["ci_high"] = it->second.ci_high;
    }
    rows.push_back(std::move(row));
  }
  Manifest m("report", c);
  m.Input("scores", o.scores);
  std::string summary = std::to_string(models.size()) + " models, " +
                        std::to_string(matches.size()) + " pairwise outcomes";
  if (!o.ground_truth.empty()) {
    const auto corr = CorrelateWithGroundTruth(models, LoadGroundTruth(o.ground_truth));
    rows.push_back({{"type", "correlation"},
                    {"kendall_tau", corr.kendall_tau},
                    {"spearman", corr.spearman},
                    {"n_models", corr.n_models}});
    m.Input("ground_truth", o.ground_truth);
    summary += ", tau " + Fixed(corr.kendall_tau) + ", rho " + Fixed(corr.spearman);
  }
  if (!o.gold.empty()) {
    const auto gold = LoadMatches(o.gold);
    const double agreement = Agreement(matches, gold);
    rows.push_back({{"type", "agreement"}, {"agreement", agreement}, {"n_pairs", gold.size()}});
    m.Input("gold", o.gold);
    summary += ", agreement " + Fixed(agreement);
  }
  jsonl::Write(o.out, rows);
  m.Output("report", o.out);
  m.Set("backend_calls", 0);
  m.Write(o.out);
  out << "report: " << summary << " -> " << o.out << "\n";
  return 0;
}

inline int EloCommand(const Options& o, std::ostream& out, std::ostream& err) {
  Need(o.out, "--out");
  if (o.scores.empty() == o.matches.empty()) {
    throw ValidationError("elo needs exactly one of --scores or --matches");
  }
  Config c = ResolveConfig(o, err);
  if (o.rounds) c.bootstrap_rounds = *o.rounds;
  ValidateConfig(c);
  const auto matches = o.matches.empty() ? ScoresToMatches(LoadScores(o.scores), c.tie_eps)
                                         : LoadMatches(o.matches);
  const auto ratings = BootstrapElo(matches, c.bootstrap_rounds, c.seed, c.elo);
  std::vector<Json> rows;
  for (const auto& e : ratings) rows.push_back(ToJson(e));
  jsonl::Write(o.out, rows);
  Manifest m("elo", c);
  m.Input("scores", o.scores);
  m.Input("matches", o.matches);
  m.Output("ratings", o.out);
  m.Set("backend_calls", 0);
  m.Write(o.out);
  out << "elo: " << ratings.size() << " models from " << matches.size() << " matches, "
      << c.bootstrap_rounds << " bootstrap rounds -> " << o.out << "\n";
  return 0;
}

inline int Diagnose(const Options& o, std::ostream& out, std::ostream& err) {
  Need(o.dataset, "--dataset");
  Need(o.responses, "--responses");
  Need(o.checklists, "--checklists");
  Need(o.out, "--out");
  if (o.probe != "sampling" && o.probe != "position" && o.probe != "both") {
    throw ValidationError("--probe must be sampling, position or both");
  }
  Config c = ResolveConfig(o, err);
  if (o.samples) c.diag_samples = *o.samples;
  if (o.temperature) c.diag_temperature = *o.temperature;
  ValidateConfig(c);
  auto judge = MakeGateway(c.RequireJudge(), c);
  const auto dataset = LoadDataset(o.dataset);
  const auto responses = LoadResponses(o.responses);
  const auto lists = LoadChecklists(o.checklists);
  const auto index = IndexSessions(dataset);
  std::map<std::string, const Checklist*> checklist_of;
  for (const auto& l : lists) checklist_of[l.session_id] = &l;
  const auto list_for = [&](const std::string& session) -> const Checklist& {
    auto it = checklist_of.find(session);
    if (it == checklist_of.end()) throw ValidationError("no checklist for session " + session);
    return *it->second;
  };

  Manifest m("diagnose", c);
  m.Input("dataset", o.dataset);
  m.Input("responses", o.responses);
  m.Input("checklists", o.checklists);
  std::string summary;
  const std::size_t workers = static_cast<std::size_t>(judge->config().max_parallel);

  if (o.probe != "position") {
    if (c.diag_samples < 2) throw ValidationError("sampling probe needs --samples >= 2");
    std::vector<SamplingRecord> records;
    for (const auto& r : responses) {
      for (const auto& item : list_for(r.session_id).items) {
        records.push_back({{r.session_id, r.model_id, item.index}, {}});
      }
    }
    std::map<std::pair<std::string, std::string>, const ModelResponse*> response_of;
    for (const auto& r : responses) response_of[{r.session_id, r.model_id}] = &r;
    ParallelFor(records.size(), workers, [&](std::size_t i) {
      auto& rec = records[i];
      const auto& r = *response_of.at({rec.key.session_id, rec.key.model_id});
      const auto& item = list_for(r.session_id).items[static_cast<std::size_t>(rec.key.item_index - 1)];
      rec.samples = SampleBinaryJudgments(SessionOf(index, r.session_id), r, item, *judge,
                                          c.diag_samples, c.diag_temperature);
    });
    std::vector<std::vector<BinaryAnswer>> per_item;
    for (const auto& rec : records) per_item.push_back(rec.samples);
    const std::string path = o.out + ".sampling.jsonl";
    WriteSamplingReport(path, records);
    m.Output("sampling", path);
    const double ratio = per_item.empty() ? 0.0 : DisagreementRatio(per_item);
    m.Set("disagreement_ratio", ratio);
    summary += "disagreement " + Fixed(ratio) + " over " + std::to_string(per_item.size()) +
               " items at k=" + std::to_string(c.diag_samples);
  }
  if (o.probe != "sampling") {
    std::vector<std::vector<int>> indicators(responses.size());
    ParallelFor(responses.size(), workers, [&](std::size_t i) {
      const auto& r = responses[i];
      const auto& x = SessionOf(index, r.session_id);
      const auto& list = list_for(r.session_id);
      if (list.items.size() < 2) return;
      const auto yes = PositionBiasProbe(x, r, list, *judge, BinaryAnswer::kYes);
      const auto no = PositionBiasProbe(x, r, list, *judge, BinaryAnswer::kNo);
      indicators[i] = PositionDisagreement(yes, no);
    });
    const auto curve = AggregatePositionDisagreement(indicators);
    const std::string path = o.out + ".position.jsonl";
    WritePositionReport(path, curve);
    m.Output("position", path);
    double overall = 0.0;
    std::size_t n = 0;
    for (const auto& p : curve) {
      overall += p.mean * static_cast<double>(p.n);
      n += p.n;
    }
    if (!summary.empty()) summary += ", ";
    summary += "position disagreement " + Fixed(n == 0 ? 0.0 : overall / static_cast<double>(n)) +
               " over " + std::to_string(curve.size()) + " positions";
  }
  m.Set("backend_calls", judge->backend_calls());
  m.Write(o.out);
  out << "diagnose: " << summary << " (" << judge->backend_calls() << " backend calls)\n";
  return 0;
}

}  // namespace detail

// Parses `args` (without the program name) and runs one subcommand.
inline int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Checklist-based evaluation of model responses with lightweight judges",
               "rocketeval"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  Options o;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "INI configuration file");
    sub->add_option("--out", o.out, "Output file");
    sub->add_option("--seed", o.seed, "Master seed (overrides [run] seed)");
    sub->add_option("--max-parallel", o.max_parallel, "Concurrent backend requests")
        ->check(CLI::PositiveNumber);
    sub->add_option("--tie-eps", o.tie_eps, "Tie margin for score differences")
        ->check(CLI::NonNegativeNumber);
  };

  auto* create = app.add_subcommand("create-checklists", "Draft one checklist per instance");
  common(create);
  create->add_option("--dataset", o.dataset, "Instances (JSONL)");

  auto* grade = app.add_subcommand("grade", "Grade responses with the judge");
  common(grade);
  grade->add_option("--dataset", o.dataset, "Instances (JSONL)");
  grade->add_option("--responses", o.responses, "Model responses (JSONL)");
  grade->add_option("--checklists", o.checklists, "Checklists (JSONL)");
  grade->add_option("--mode", o.mode, "checklist, direct, cot or fixed")
      ->check(CLI::IsMember({"checklist", "direct", "cot", "fixed"}));

  auto* predict = app.add_subcommand("predict", "Turn judgments into scores");
  common(predict);
  predict->add_option("--judgments", o.judgments, "Judgment file written by grade");
  predict->add_option("--checklists", o.checklists, "Checklists (JSONL)");
  predict->add_option("--annotations", o.annotations, "Reference scores for training models");
  predict->add_flag("--supervised", o.supervised, "Fit per-session predictors");
  predict->add_option("--train-models", o.train_models, "Models with annotations to train on")
      ->delimiter(',');
  predict->add_option("--eval-models", o.eval_models, "Models to score")->delimiter(',');
  predict->add_flag("--allow-overlap", o.allow_overlap, "Permit train/eval model overlap");
  predict->add_option("--predictors", o.predictors, "Also write fitted predictors here");
  predict->add_option("--judge-id", o.judge_id, "Judge to read when the file holds several");

  auto* report = app.add_subcommand("report", "Rank models and compare with references");
  common(report);
  report->add_option("--scores", o.scores, "Scores (JSONL)");
  report->add_option("--ground-truth", o.ground_truth, "model_id,rating CSV");
  report->add_option("--gold", o.gold, "Gold pairwise outcomes (JSONL)");

  auto* elo = app.add_subcommand("elo", "Bradley-Terry ratings with bootstrap intervals");
  common(elo);
  elo->add_option("--scores", o.scores, "Scores (JSONL)");
  elo->add_option("--matches", o.matches, "Pairwise outcomes (JSONL)");
  elo->add_option("--rounds", o.rounds, "Bootstrap rounds")->check(CLI::PositiveNumber);

  auto* diagnose = app.add_subcommand("diagnose", "Judge reliability probes");
  common(diagnose);
  diagnose->add_option("--dataset", o.dataset, "Instances (JSONL)");
  diagnose->add_option("--responses", o.responses, "Model responses (JSONL)");
  diagnose->add_option("--checklists", o.checklists, "Checklists (JSONL)");
  diagnose->add_option("--probe", o.probe, "sampling, position or both");
  diagnose->add_option("--samples", o.samples, "Samples per item")->check(CLI::PositiveNumber);
  diagnose->add_option("--temperature", o.temperature, "Sampling temperature")
      ->check(CLI::NonNegativeNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (create->parsed()) return detail::CreateChecklists(o, out, err);
    if (grade->parsed()) return detail::Grade(o, out, err);
    if (predict->parsed()) return detail::Predict(o, out, err);
    if (report->parsed()) return detail::Report(o, out, err);
    if (elo->parsed()) return detail::EloCommand(o, out, err);
    if (diagnose->parsed()) return detail::Diagnose(o, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace rocketeval::cli
