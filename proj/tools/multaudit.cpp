/*
 * Copyright 2026 The Multiplicity Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// multaudit: validate inputs, audit predictive multiplicity, generate
// synthetic ensembles and export plot data.
//
// Exit codes: 0 success, 1 usage, 2 parse, 3 alignment, 4 configuration,
// 5 internal. Diagnostics go to stderr; stdout carries one summary line.

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "multiplicity/multiplicity.hpp"

namespace fs = std::filesystem;
using namespace multiplicity;

namespace {

int ExitCode(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return 1;
    case ErrorKind::kParse:
    case ErrorKind::kValidation: return 2;
    case ErrorKind::kAlignment: return 3;
    case ErrorKind::kConfiguration:
    case ErrorKind::kDomain: return 4;
    case ErrorKind::kInternal: return 5;
  }
  return 5;
}

void ReportError(const std::string& kind, const std::string& message,
                 const std::string& file = {}, const ParseError* parse = nullptr) {
  Json j;
  j["error"] = kind;
  j["message"] = message;
  if (!file.empty()) j["file"] = file;
  if (parse) {
    j["line"] = parse->line();
    if (!parse->column().empty()) j["column"] = parse->column();
  }
  std::cerr << j.dump() << "\n";
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kUsage, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string Sha256(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::kInternal, "sha256 failed");
  static const char* kHex = "0123456789abcdef";
  std::string out = "sha256:";
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

// File currently being parsed, so diagnostics can name it.
std::string g_current_file;

PredictionFormat ResolveFormat(const std::string& flag, const fs::path& path) {
  if (flag == "csv") return PredictionFormat::kCsv;
  if (flag == "jsonl") return PredictionFormat::kJsonl;
  return path.extension() == ".jsonl" ? PredictionFormat::kJsonl : PredictionFormat::kCsv;
}

struct Inputs {
  PredictionMatrix predictions;
  SampleManifest manifest;
  std::string predictions_digest;
  std::string manifest_digest;
};

Inputs LoadInputs(const fs::path& preds_path, const fs::path& manifest_path,
                  PredictionFormat format) {
  Inputs in;
  g_current_file = preds_path.string();
  const std::string pred_bytes = ReadFile(preds_path);
  in.predictions_digest = Sha256(pred_bytes);
  in.predictions = ParsePredictions(pred_bytes, format);
  g_current_file = manifest_path.string();
  const std::string manifest_bytes = ReadFile(manifest_path);
  in.manifest_digest = Sha256(manifest_bytes);
  in.manifest = ParseManifest(manifest_bytes);
  g_current_file.clear();
  return in;
}

std::string CsvField(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// ---------------------------------------------------------------------------

struct ValidateOptions {
  std::string predictions;
  std::string manifest;
  std::string format = "auto";
};

int RunValidate(const ValidateOptions& opt) {
  Inputs in = LoadInputs(opt.predictions, opt.manifest,
                         ResolveFormat(opt.format, opt.predictions));
  AlignedView view = Align(in.predictions, in.manifest);
  std::size_t per_split[3] = {0, 0, 0};
  std::size_t annotated = 0;
  std::size_t single = 0;
  for (const auto& r : view.manifest.records()) {
    ++per_split[static_cast<int>(r.split)];
    if (!r.annotator_labels.empty()) ++annotated;
    if (r.annotator_labels.size() == 1) ++single;
  }
  std::cerr << "models: " << in.predictions.n_models() << "\n"
            << "aligned samples: " << view.manifest.size() << "\n"
            << "dropped (predictions only): " << view.dropped_prediction_only << "\n"
            << "dropped (manifest only): " << view.dropped_manifest_only << "\n"
            << "split sizes: train=" << per_split[0] << " val=" << per_split[1]
            << " test=" << per_split[2] << "\n"
            << "annotator coverage: " << annotated << "/" << view.manifest.size()
            << " (single-annotator: " << single << ")\n";
  std::cout << "valid: " << in.predictions.n_models() << " models x "
            << view.manifest.size() << " aligned samples\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct AuditOptions {
  std::string predictions;
  std::string manifest;
  std::string pred_format = "auto";
  std::string reference;
  std::optional<double> epsilon;
  std::optional<double> cp_confidence;
  std::optional<double> zero_error_slack;
  std::string split = "train";
  std::string eval_split = "all";
  std::string ci = "sem";
  std::size_t bootstrap_b = 1000;
  double level = 0.95;
  std::uint64_t seed = kDefaultSeed;
  std::size_t threads = 1;
  bool exclude_reference = false;
  std::optional<double> majority_margin;
  std::string out;
  std::vector<std::string> formats = {"json"};
};

SplitSelector ParseSelector(const std::string& s) {
  if (s == "all") return std::nullopt;
  auto split = ParseSplit(s);
  if (!split) throw Error(ErrorKind::kUsage, "unknown split '" + s + "'");
  return *split;
}

int RunAudit(const AuditOptions& opt) {
  if (opt.epsilon.has_value() == opt.cp_confidence.has_value())
    throw Error(ErrorKind::kUsage, "give exactly one of --epsilon or --cp-confidence");
  Inputs in = LoadInputs(opt.predictions, opt.manifest,
                         ResolveFormat(opt.pred_format, opt.predictions));
  AlignedView view = Align(in.predictions, in.manifest);
  if (view.dropped_prediction_only || view.dropped_manifest_only)
    std::cerr << "note: dropped " << view.dropped_prediction_only
              << " prediction-only and " << view.dropped_manifest_only
              << " manifest-only samples\n";

  const std::string reference =
      opt.reference.empty() ? view.predictions.model_ids().front() : opt.reference;
  const EpsilonPolicy policy = opt.epsilon
                                   ? EpsilonPolicy::Fixed(*opt.epsilon, opt.zero_error_slack)
                                   : EpsilonPolicy::CpBound(*opt.cp_confidence,
                                                            opt.zero_error_slack);
  const ErrorVector errors = ComputeErrors(view, ParseSelector(opt.split));
  const RashomonSelection selection = FilterRashomon(errors, reference, policy);

  const SplitSelector eval = ParseSelector(opt.eval_split);
  std::vector<std::size_t> columns;
  for (std::size_t i = 0; i < view.manifest.size(); ++i) {
    if (!eval || view.manifest[i].split == *eval) columns.push_back(i);
  }
  if (columns.empty())
    throw Error(ErrorKind::kConfiguration, "evaluation split '" + opt.eval_split + "' is empty");
  const PredictionMatrix members =
      view.predictions.SelectModels(selection.included_model_ids).SelectSamples(columns);
  const SampleManifest eval_manifest = view.manifest.Select(columns);
  const PerSampleMultiplicity ps =
      ComputePerSample(members, reference, !opt.exclude_reference);
  if (selection.included_model_ids.size() == 1)
    std::cerr << "warning: the Rashomon set holds a single model\n";

  ResamplingPlan plan;
  plan.method = opt.ci == "bootstrap" ? ResamplingMethod::kBootstrapPercentile
                                      : ResamplingMethod::kSemNormal;
  plan.replicates = opt.bootstrap_b;
  plan.seed = opt.seed;
  plan.level = opt.level;
  plan.threads = opt.threads;
  AuditReport report = AssembleReport(selection, ps, eval_manifest, plan);
  auto& settings = report.provenance.settings;
  settings["reference"] = reference;
  settings["policy"] = EpsilonKindName(policy.kind);
  if (opt.epsilon) settings["epsilon"] = FormatDouble(*opt.epsilon);
  if (opt.cp_confidence) settings["cp_confidence"] = FormatDouble(*opt.cp_confidence);
  if (opt.zero_error_slack) settings["zero_error_slack"] = FormatDouble(*opt.zero_error_slack);
  settings["split"] = opt.split;
  settings["eval_split"] = opt.eval_split;
  settings["ci"] = opt.ci;
  settings["level"] = FormatDouble(opt.level);
  if (plan.method == ResamplingMethod::kBootstrapPercentile)
    settings["bootstrap_B"] = std::to_string(opt.bootstrap_b);
  settings["include_reference"] = opt.exclude_reference ? "false" : "true";
  report.provenance.input_digests["predictions"] = in.predictions_digest;
  report.provenance.input_digests["manifest"] = in.manifest_digest;
  for (const auto& w : report.provenance.warnings) std::cerr << "warning: " << w << "\n";

  if (auto violations = ValidateReport(report); !violations.empty()) {
    for (const auto& v : violations) std::cerr << v.path << ": " << v.message << "\n";
    throw Error(ErrorKind::kInternal, "assembled report failed schema validation");
  }

  const fs::path out_dir(opt.out);
  fs::create_directories(out_dir);
  WriteFileAtomic(out_dir / "report.json", EmitReport(report, ReportFormat::kJson));
  for (const auto& f : opt.formats) {
    if (f == "csv") {
      WriteFileAtomic(out_dir / "report_tables.csv", EmitReport(report, ReportFormat::kCsvTables));
    } else if (f == "markdown") {
      WriteFileAtomic(out_dir / "report.md", EmitReport(report, ReportFormat::kMarkdown));
    }
  }

  std::vector<std::string> stratum(eval_manifest.size());
  for (std::size_t i = 0; i < eval_manifest.size(); ++i) {
    const auto& labels = eval_manifest[i].annotator_labels;
    if (labels.empty()) continue;
    const bool mixed = std::find(labels.begin(), labels.end(), 0) != labels.end() &&
                       std::find(labels.begin(), labels.end(), 1) != labels.end();
    stratum[i] = std::string(mixed ? kUnclear : kClear);
  }
  std::vector<Vote> votes;
  if (opt.majority_margin) votes = MajorityVote(members, *opt.majority_margin);
  std::string per_sample = "sample_id,a,pd,arbitrary,groups,stratum";
  if (!votes.empty()) per_sample += ",vote";
  per_sample += "\n";
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& row = ps.rows[i];
    std::string groups;
    for (const auto& g : eval_manifest[i].group_tags) {
      if (!groups.empty()) groups += ';';
      groups += g;
    }
    per_sample += CsvField(ps.sample_ids[i]) + ',' + std::to_string(row.ones) + ',' +
                  FormatDouble(row.pd) + ',' + (row.arbitrary ? "1" : "0") + ',' +
                  CsvField(groups) + ',' + stratum[i];
    if (!votes.empty()) {
      per_sample += ',';
      per_sample += votes[i] == Vote::kAbstain ? "abstain" : (votes[i] == Vote::kToxic ? "1" : "0");
    }
    per_sample += '\n';
  }
  WriteFileAtomic(out_dir / "per_sample.csv", per_sample);

  const auto& arb = report.overall.at(std::string(kArbitrariness));
  const auto& pd = report.overall.at(std::string(kAvgPairwiseDisagreement));
  std::cout << "audit: " << selection.included_model_ids.size() << "/"
            << in.predictions.n_models() << " models in Rashomon set (epsilon "
            << FormatDouble(selection.epsilon) << "), arbitrariness "
            << FormatDouble(arb.point) << ", avg_pairwise_disagreement "
            << FormatDouble(pd.point) << ", n=" << arb.n_effective << " -> "
            << (out_dir / "report.json").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct SynthOptions {
  std::string spec;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int RunSynth(const SynthOptions& opt) {
  SyntheticSpec spec;
  g_current_file = opt.spec;
  try {
    spec = SpecFromJson(Json::parse(ReadFile(opt.spec)));
  } catch (const Json::exception& e) {
    throw ParseError(std::string("bad synthetic spec: ") + e.what(), 1);
  }
  g_current_file.clear();
  if (opt.seed) spec.seed = *opt.seed;
  const SyntheticData data = Generate(spec);
  WriteSynthetic(data, opt.out);
  std::cout << "synth: " << data.predictions.n_models() << " models x "
            << data.predictions.n_samples() << " samples, arbitrariness "
            << FormatDouble(data.truth.overall.arbitrariness) << " -> " << opt.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct ExportOptions {
  std::string report;
  std::string out;
};

std::string PlotTable(const char* axis, const Breakdown& b) {
  std::string out = axis;
  out += ",n";
  for (auto m : kMetricNames) {
    const std::string name(m);
    out += "," + name + "," + name + "_ci_low," + name + "_ci_high";
  }
  out += "\n";
  for (const auto& [label, block] : b) {
    std::size_t n = 0;
    if (auto it = block.find(std::string(kArbitrariness)); it != block.end())
      n = it->second.n_effective;
    out += CsvField(label) + "," + std::to_string(n);
    for (auto m : kMetricNames) {
      auto it = block.find(std::string(m));
      if (it == block.end()) {
        out += ",,,";
      } else {
        out += "," + FormatDouble(it->second.point) + "," + FormatDouble(it->second.ci_low) +
               "," + FormatDouble(it->second.ci_high);
      }
    }
    out += "\n";
  }
  return out;
}

int RunExport(const ExportOptions& opt) {
  const AuditReport report = ParseReport(ReadFile(opt.report));
  const fs::path dir(opt.out);
  fs::create_directories(dir);
  std::size_t written = 0;
  auto emit = [&](const char* file, const char* axis, const Breakdown& b, const char* block) {
    if (b.empty()) {
      std::cerr << "notice: report has no " << block << " entries; " << file << " not written\n";
      return;
    }
    WriteFileAtomic(dir / file, PlotTable(axis, b));
    ++written;
  };
  emit("group_metrics.csv", "group", report.per_group, "per_group");
  emit("stratum_metrics.csv", "stratum", report.per_stratum, "per_stratum");
  emit("dataset_metrics.csv", "dataset", report.per_dataset, "per_dataset");
  std::cout << "export-plotdata: " << written << " tables -> " << opt.out << "\n";
  return 0;
}

int RunValidateReport(const std::string& path) {
  const auto violations = ValidateReport(ReadFile(path));
  for (const auto& v : violations) {
    Json j;
    j["error"] = "validation";
    j["path"] = v.path;
    j["message"] = v.message;
    std::cerr << j.dump() << "\n";
  }
  std::cout << (violations.empty() ? "report valid" : "report invalid: " +
                                                          std::to_string(violations.size()) +
                                                          " violations")
            << "\n";
  return violations.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Predictive multiplicity audits for binary classifiers"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.set_config("--config", "", "key = value file supplying any flag");
  app.require_subcommand(1);

  ValidateOptions vopt;
  auto* validate = app.add_subcommand("validate", "Parse and align predictions with a manifest");
  validate->add_option("--predictions", vopt.predictions, "predictions.csv or .jsonl")->required();
  validate->add_option("--manifest", vopt.manifest, "manifest.jsonl")->required();
  validate->add_option("--pred-format", vopt.format, "csv, jsonl or auto (by extension)")
      ->check(CLI::IsMember({"auto", "csv", "jsonl"}));

  AuditOptions aopt;
  auto* audit = app.add_subcommand("audit", "Filter the Rashomon set and report multiplicity");
  audit->add_option("--predictions", aopt.predictions)->required();
  audit->add_option("--manifest", aopt.manifest)->required();
  audit->add_option("--pred-format", aopt.pred_format)->check(CLI::IsMember({"auto", "csv", "jsonl"}));
  audit->add_option("--reference", aopt.reference, "reference model id (default: first model)");
  auto* eps = audit->add_option("--epsilon", aopt.epsilon, "fixed Rashomon parameter");
  auto* cp = audit->add_option("--cp-confidence", aopt.cp_confidence,
                               "derive epsilon from a binomial bound at this confidence");
  eps->excludes(cp);
  audit->add_option("--zero-error-slack", aopt.zero_error_slack,
                    "absolute error slack when the reference error is 0");
  audit->add_option("--split", aopt.split, "split for Rashomon errors")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));
  audit->add_option("--eval-split", aopt.eval_split, "split the metrics are computed on")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));
  audit->add_option("--ci", aopt.ci)->check(CLI::IsMember({"sem", "bootstrap"}));
  audit->add_option("--bootstrap-B", aopt.bootstrap_b)->check(CLI::PositiveNumber);
  audit->add_option("--level", aopt.level)->check(CLI::Range(0.0, 1.0));
  audit->add_option("--seed", aopt.seed);
  audit->add_option("--threads", aopt.threads)->check(CLI::PositiveNumber);
  audit->add_flag("--exclude-reference-from-set", aopt.exclude_reference,
                  "reference anchors ambiguity but does not vote");
  audit->add_option("--majority-margin", aopt.majority_margin,
                    "add a majority-vote column with this abstention margin");
  audit->add_option("--out", aopt.out)->required();
  audit->add_option("--format", aopt.formats, "json, csv, markdown (repeatable)")
      ->check(CLI::IsMember({"json", "csv", "markdown"}));

  SynthOptions sopt;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic ensemble with ground truth");
  synth->add_option("--spec", sopt.spec, "synthetic spec (JSON)")->required();
  synth->add_option("--out", sopt.out)->required();
  synth->add_option("--seed", sopt.seed, "override the generator seed");

  ExportOptions eopt;
  auto* exporter = app.add_subcommand("export-plotdata", "Write per-figure CSVs from a report");
  exporter->add_option("--report", eopt.report)->required();
  exporter->add_option("--out", eopt.out)->required();

  std::string report_path;
  auto* vreport = app.add_subcommand("validate-report", "Check report.json against the schema");
  vreport->add_option("report", report_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    ReportError("usage", e.what());
    return 1;
  }

  try {
    if (*validate) return RunValidate(vopt);
    if (*audit) return RunAudit(aopt);
    if (*synth) return RunSynth(sopt);
    if (*exporter) return RunExport(eopt);
    if (*vreport) return RunValidateReport(report_path);
  } catch (const ParseError& e) {
    ReportError(ErrorKindName(e.kind()), e.what(), g_current_file, &e);
    return ExitCode(e.kind());
  } catch (const Error& e) {
    ReportError(ErrorKindName(e.kind()), e.what());
    return ExitCode(e.kind());
  } catch (const std::exception& e) {
    ReportError("internal", e.what());
    return 5;
  }
  return 1;
}
