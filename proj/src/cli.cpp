#include "sdwanfp/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "sdwanfp/io.hpp"
#include "sdwanfp/pipeline.hpp"

namespace sdwanfp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

json load_config(const Globals& g) {
  if (g.config.empty()) return json::object();
  return read_json_file(g.config);
}

// A config file may hold one section or both, keyed "scenario" / "pipeline".
json section(const json& doc, const char* key) {
  return doc.contains(key) ? doc[key] : doc;
}

PipelineConfig pipeline_config(const Globals& g) {
  PipelineConfig c = pipeline_config_from_json(section(load_config(g), "pipeline"));
  if (g.seed) {
    c.train.seed = *g.seed;
    if (c.defense) c.defense->seed = *g.seed;
  }
  return c;
}

fs::path out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out);
  return fs::path(g.out) / name;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

std::ifstream open_in(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + p);
  return in;
}

Trace load_trace(const std::string& path) {
  auto in = open_in(path);
  return read_trace_jsonl(in);
}

std::vector<SequenceSample> load_samples(const std::string& path) {
  auto in = open_in(path);
  return read_samples_jsonl(in);
}

SequenceModel load_model(const std::string& path) { return model_from_json(read_json_file(path)); }

// ---------------------------------------------------------------------------

int cmd_simulate(const Globals& g, std::optional<double> duration) {
  json doc = section(load_config(g), "scenario");
  if (!doc.contains("cluster")) throw ValidationError("scenario config needs a \"cluster\" object");
  ScenarioConfig sc = scenario_from_json(doc);
  if (g.seed) sc.seed = *g.seed;
  if (duration) {
    if (*duration < 0) throw ValidationError("duration must be >= 0");
    sc.duration = *duration;
  }
  const Trace trace = simulate_scenario(sc);
  {
    auto out = open_out(out_path(g, "trace.jsonl"));
    write_trace_jsonl(out, trace);
  }
  write_json_file(out_path(g, "truth_graph.json").string(), to_json(truth_graph(trace, sc.cluster)));
  write_json_file(out_path(g, "scenario.json").string(), to_json(sc));
  std::cout << "wrote " << trace.size() << " records to " << out_path(g, "trace.jsonl").string() << '\n';
  return kExitOk;
}

int cmd_ingest(const Globals& g, const std::string& pcap) {
  auto in = open_in(pcap);
  PcapStats stats;
  const Trace trace = read_pcap(in, &stats);
  auto out = open_out(out_path(g, "trace.jsonl"));
  write_trace_jsonl(out, trace);
  std::cout << "read " << stats.frames << " frames, kept " << trace.size() << ", skipped "
            << stats.skipped << '\n';
  return kExitOk;
}

int cmd_featurize(const Globals& g, const std::string& trace_path, int phase) {
  const PipelineConfig cfg = pipeline_config(g);
  const Trace trace = load_trace(trace_path);
  const auto samples = phase == 1 ? phase1_samples(trace, cfg) : phase2_samples(trace, cfg);
  const auto path = out_path(g, "samples_phase" + std::to_string(phase) + ".jsonl");
  auto out = open_out(path);
  write_samples_jsonl(out, samples);
  std::cout << "wrote " << samples.size() << " samples to " << path.string() << '\n';
  return kExitOk;
}

int cmd_train(const Globals& g, const std::string& samples_path, Task task, double test_fraction,
              bool balance) {
  const PipelineConfig cfg = pipeline_config(g);
  auto samples = load_samples(samples_path);
  const auto want = task == Task::binary ? Granularity::two_tuple : Granularity::five_tuple;
  for (const auto& s : samples) {
    if (s.granularity != want) {
      throw ValidationError(std::string("samples must be ") + std::string(to_string(want)) +
                            " for this phase");
    }
  }
  samples = balance_classes(samples, balance ? 0 : samples.size(), cfg.train.seed);
  Split split;
  if (test_fraction > 0) {
    split = split_samples(samples, 1.0 - test_fraction, cfg.train.seed);
  } else {
    split.train = samples;
  }
  const TrainResult r = train(split.train, cfg.train, task);
  const std::string tag = task == Task::binary ? "phase1" : "phase2";
  write_json_file(out_path(g, "model_" + tag + ".json").string(), model_to_json(r.model, cfg.train));

  json report = {{"epoch_losses", r.report.epoch_losses},
                 {"train_accuracy", r.report.train_accuracy},
                 {"train_samples", split.train.size()},
                 {"test_samples", split.test.size()}};
  if (!r.report.fold_macro_f1.empty()) {
    report["fold_macro_f1"] = r.report.fold_macro_f1;
    report["cv_macro_f1"] = r.report.cv_macro_f1;
  }
  write_json_file(out_path(g, "train_" + tag + ".json").string(), report);
  if (!split.test.empty()) {
    const EvalReport e = evaluate(r.model, split.test);
    write_json_file(out_path(g, "eval_" + tag + ".json").string(), to_json(e));
    std::cout << "held-out macro F1 " << std::fixed << std::setprecision(4) << e.macro_f1 << '\n';
  }
  return kExitOk;
}

int cmd_defend(const Globals& g, const std::string& samples_path, const std::string& kind,
               const std::string& reference) {
  const json doc = section(load_config(g), "pipeline");
  DefenseConfig d = doc.contains("defense") ? defense_config_from_json(doc["defense"]) : DefenseConfig{};
  if (!kind.empty()) d.kind = defense_kind_from_string(kind);
  if (g.seed) d.seed = *g.seed;
  const auto samples = load_samples(samples_path);
  std::optional<StepFeatures> ref;
  if (!reference.empty()) ref = rms(load_samples(reference));
  const auto out_samples = apply_defense(samples, d, ref);
  auto out = open_out(out_path(g, "samples_defended.jsonl"));
  write_samples_jsonl(out, out_samples);
  std::cout << "perturbed " << out_samples.size() << " samples with " << to_string(d.kind) << '\n';
  return kExitOk;
}

int cmd_infer(const Globals& g, const std::string& trace_path, const std::string& m1,
              const std::string& m2, const std::string& truth) {
  const PipelineConfig cfg = pipeline_config(g);
  const SequenceModel p1 = load_model(m1);
  const SequenceModel p2 = load_model(m2);
  const Trace trace = load_trace(trace_path);
  const InferResult r = infer(trace, p1, p2, cfg);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';

  json report = to_json(r);
  if (!truth.empty()) {
    const ClusterGraph t = graph_from_json(read_json_file(truth));
    const SimilarityScore s = similarity(r.graph, t);
    report["similarity"] = to_json(s);
    std::cout << "similarity " << std::fixed << std::setprecision(4) << s.sim
              << (s.exact ? "" : " (GED upper bound)") << '\n';
  }
  write_json_file(out_path(g, "graph.json").string(), to_json(r.graph));
  auto dot = open_out(out_path(g, "graph.dot"));
  dot << to_dot(r.graph);
  write_json_file(out_path(g, "infer_report.json").string(), report);
  std::cout << r.graph.vertex_count() << " vertices, " << r.graph.edge_count() << " edges\n";
  return kExitOk;
}

int cmd_eval(const Globals& g, const std::string& model_path, const std::string& samples_path) {
  const SequenceModel m = load_model(model_path);
  const auto samples = load_samples(samples_path);
  const EvalReport e = evaluate(m, samples);
  write_json_file(out_path(g, "eval.json").string(), to_json(e));
  std::cout << "macro F1 " << std::fixed << std::setprecision(4) << e.macro_f1 << '\n';
  return kExitOk;
}

std::string fmt4(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << v;
  return s.str();
}

int cmd_report(const Globals& g, const std::vector<std::string>& evals) {
  std::ostringstream table;
  std::ostringstream csv;
  csv << "source,class,precision,recall,f1,support\n";
  for (const auto& path : evals) {
    const EvalReport e = eval_report_from_json(read_json_file(path));
    const std::string src = fs::path(path).filename().string();
    table << src << '\n';
    table << std::left << std::setw(12) << "class" << std::right << std::setw(11) << "precision"
          << std::setw(11) << "recall" << std::setw(11) << "f1" << std::setw(10) << "support" << '\n';
    std::size_t total = 0;
    for (std::size_t c = 0; c < e.class_names.size(); ++c) {
      const auto& m = e.per_class[c];
      total += m.support;
      table << std::left << std::setw(12) << e.class_names[c] << std::right << std::setw(11)
            << fmt4(m.precision) << std::setw(11) << fmt4(m.recall) << std::setw(11) << fmt4(m.f1)
            << std::setw(10) << m.support << '\n';
      csv << src << ',' << e.class_names[c] << ',' << fmt4(m.precision) << ',' << fmt4(m.recall)
          << ',' << fmt4(m.f1) << ',' << m.support << '\n';
    }
    table << std::left << std::setw(12) << "macro" << std::right << std::setw(33) << fmt4(e.macro_f1)
          << std::setw(10) << total << "\n\n";
    csv << src << ",macro,,," << fmt4(e.macro_f1) << ',' << total << '\n';
  }
  std::cout << table.str();
  auto out = open_out(out_path(g, "metrics.csv"));
  out << csv.str();
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"SD-WAN control-plane fingerprinting toolkit"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "JSON config (scenario and/or pipeline sections)");
  auto* seed_opt = app.add_option("--seed", seed, "Override every seed in the config");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.fallthrough();

  auto* sim = app.add_subcommand("simulate", "Simulate a labeled trace (trace.jsonl, truth_graph.json)");
  double duration = 0;
  auto* dur_opt = sim->add_option("--duration", duration, "Override the scenario duration (s)");

  auto* ingest = app.add_subcommand("ingest", "Convert a classic pcap file to trace.jsonl");
  std::string pcap;
  ingest->add_option("pcap", pcap, "Capture file")->required();

  auto* feat = app.add_subcommand("featurize", "Build samples_phase<N>.jsonl from a trace");
  std::string trace_path;
  int phase = 1;
  feat->add_option("--trace", trace_path, "Trace JSONL")->required();
  feat->add_option("--phase", phase, "1: two-tuple control/data, 2: five-tuple protocols")
      ->check(CLI::IsMember({1, 2}))
      ->capture_default_str();

  std::string samples_path;
  double test_fraction = 0.3;
  bool no_balance = false;
  auto add_train = [&](const char* name, const char* help) {
    auto* c = app.add_subcommand(name, help);
    c->add_option("--samples", samples_path, "Samples JSONL")->required();
    c->add_option("--test-fraction", test_fraction, "Held-out fraction (0 disables)")
        ->check(CLI::Range(0.0, 0.95))
        ->capture_default_str();
    c->add_flag("--no-balance", no_balance, "Keep class proportions as they are");
    return c;
  };
  auto* train1 = add_train("train-phase1", "Train the control/data classifier");
  auto* train2 = add_train("train-phase2", "Train the protocol classifier");

  auto* defend = app.add_subcommand("defend", "Perturb sample sequences (samples_defended.jsonl)");
  std::string kind, reference;
  defend->add_option("--samples", samples_path, "Samples JSONL")->required();
  defend->add_option("--kind", kind, "fpa or random_noise")->check(CLI::IsMember({"fpa", "random_noise"}));
  defend->add_option("--reference", reference, "Samples whose RMS scales the noise (default: input)");

  auto* inf = app.add_subcommand("infer", "Run all three phases and reconstruct the graph");
  std::string m1, m2, truth;
  inf->add_option("--trace", trace_path, "Trace JSONL")->required();
  inf->add_option("--phase1", m1, "Phase-1 model")->required();
  inf->add_option("--phase2", m2, "Phase-2 model")->required();
  inf->add_option("--truth", truth, "Ground-truth graph JSON for scoring");

  auto* ev = app.add_subcommand("eval", "Evaluate a model on labeled samples (eval.json)");
  std::string model_path;
  ev->add_option("--model", model_path, "Model checkpoint")->required();
  ev->add_option("--samples", samples_path, "Samples JSONL")->required();

  auto* rep = app.add_subcommand(
      "report",
      "Print per-class tables and write metrics.csv\n"
      "CSV columns: source,class,precision,recall,f1,support; one row per class plus a macro row");
  std::vector<std::string> evals;
  rep->add_option("evals", evals, "Eval JSON files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*sim) return cmd_simulate(g, *dur_opt ? std::optional<double>(duration) : std::nullopt);
    if (*ingest) return cmd_ingest(g, pcap);
    if (*feat) return cmd_featurize(g, trace_path, phase);
    if (*train1) return cmd_train(g, samples_path, Task::binary, test_fraction, !no_balance);
    if (*train2) return cmd_train(g, samples_path, Task::multiclass, test_fraction, !no_balance);
    if (*defend) return cmd_defend(g, samples_path, kind, reference);
    if (*inf) return cmd_infer(g, trace_path, m1, m2, truth);
    if (*ev) return cmd_eval(g, model_path, samples_path);
    if (*rep) return cmd_report(g, evals);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace sdwanfp
