// kspace command-line front end. Exit codes: 0 ok, 1 validation or I/O
// failure (one line on stderr), 2 usage error.
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "kspace/controller.hpp"
#include "kspace/dd_screener.hpp"
#include "kspace/engagement.hpp"
#include "kspace/error.hpp"
#include "kspace/event_log.hpp"
#include "kspace/io.hpp"
#include "kspace/knowledge_model.hpp"
#include "kspace/reports.hpp"
#include "kspace/simulator.hpp"
#include "kspace/skill_net.hpp"
#include "kspace/temporal_clustering.hpp"
#include "kspace/trait_clustering.hpp"

namespace fs = std::filesystem;
using namespace kspace;

namespace {

constexpr const char* kVersionText =
    "kspace 1.0.0\n"
    "event-log schema 1\n"
    "skill-net schema 1\n"
    "knowledge-params schema 1\n"
    "erp-model schema 1\n"
    "cluster-model schema 1\n"
    "screener-model schema 1\n"
    "feature-bank schema 1\n"
    "truth-sidecar schema 1\n"
    "csv reports schema 1\n";

Json read_json(const fs::path& p) {
  try {
    return Json::parse(io::read_text_file(p));
  } catch (const Json::parse_error& e) {
    throw ParseError(p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const Json& j) { io::write_atomic(p, j.dump(2) + "\n"); }

SkillNet load_net(const std::string& path) { return SkillNet::load(path.empty() ? sample_skill_net_path() : fs::path(path)); }

ParamSet load_params(const SkillNet& net, const std::string& path) {
  return path.empty() ? default_params(net) : params_from_json(net, read_json(path));
}

std::vector<AnswerSequence> answer_sequences(const std::vector<Event>& events, const SkillNet& net,
                                             std::size_t* skipped) {
  std::vector<AnswerSequence> out;
  for (const auto& [sid, evs] : by_student(events)) {
    AnswerSequence seq;
    for (const auto& a : answers(evs)) {
      if (!net.contains(a.skill)) {
        ++*skipped;
        continue;
      }
      seq.push_back({net.index_of(a.skill), a.correct});
    }
    out.push_back(std::move(seq));
  }
  return out;
}

// ---------------------------------------------------------------------------

struct Options {
  std::string config, out, truth, students, logs, skill_net, params, summary, kind, model, model_out, bank, labels,
      engagement_out, smoothing = "adaptive", stop_model = "dbn";
  std::uint64_t seed = 1;
  bool seed_set = false;
  int folds = 10, k = 0, sessions = 0;
  double gamma = 0.9, alpha = 1.0, threshold = 0.85;
  bool bonferroni = false;
};

int cmd_simulate(const Options& o) {
  auto cfg = o.config.empty() ? sim::SimConfig{} : sim::SimConfig::from_json(read_json(o.config));
  if (o.seed_set) cfg.seed = o.seed;
  const SkillNet net = load_net(cfg.skill_net);
  std::vector<WordEntry> words;
  if (cfg.scenario == sim::Scenario::Spelling) {
    words = load_word_database(cfg.words.empty() ? fs::path(KSPACE_DATA_DIR) / "words_sample.json" : fs::path(cfg.words));
  }
  std::vector<sim::SyntheticStudent> pop;
  const auto run = sim::simulate(cfg, net, words, &pop);
  write_log(o.out, run.events);
  if (!o.truth.empty()) {
    std::string text;
    for (const auto& r : run.truth) text += sim::format_truth(r, net) + "\n";
    io::write_atomic(o.truth, text);
  }
  if (!o.students.empty()) {
    io::CsvWriter csv({"student_id", "subgroup", "dd", "wheel_spin"});
    for (const auto& s : pop) {
      const bool spin = !s.wheel_spin.empty() && s.wheel_spin.front();
      csv.cell(s.id).cell(s.subgroup).cell(s.dd ? 1 : 0).cell(spin ? 1 : 0);
      csv.end_row();
    }
    io::write_atomic(o.students, csv.str());
  }
  return 0;
}

int cmd_fit_knowledge(const Options& o) {
  const SkillNet net = load_net(o.skill_net);
  std::size_t skipped = 0;
  const auto seqs = answer_sequences(read_log(o.logs), net, &skipped);
  if (skipped > 0) throw ValidationError(std::to_string(skipped) + " answers reference skills missing from the net");
  FitSummary summary;
  const auto params = fit_params(seqs, net, {}, &summary);
  write_json(o.out, params_to_json(net, params));
  if (!o.summary.empty()) write_json(o.summary, summary.to_json());
  return 0;
}

int cmd_fit_erp(const Options& o) {
  const auto sessions = sessionize(read_log(o.logs));
  std::vector<std::vector<EngagementStep>> steps;
  for (const auto& s : sessions) steps.push_back(extract_engagement_features(s));
  const auto eng = fit_engagement(steps);
  const auto data = build_erp_dataset(sessions, eng);
  ErpFitOptions fo;
  fo.folds = o.folds;
  fo.seed = o.seed;
  const auto model = fit_erp(data, fo);
  write_json(o.out, model.to_json());
  if (!o.engagement_out.empty()) write_json(o.engagement_out, eng.to_json());
  return 0;
}

int cmd_cluster(const Options& o) {
  const SkillNet net = load_net(o.skill_net);
  const auto profiles = build_profiles(read_log(o.logs), net, o.sessions);
  ClusterOptions co;
  co.seed = o.seed;
  co.fixed_k = o.k;
  const auto res = cluster_offline(profiles, co);
  const std::size_t shown = res.warnings.size() > 5 ? 3 : res.warnings.size();
  for (std::size_t i = 0; i < shown; ++i) std::cerr << "warning: " << res.warnings[i] << "\n";
  if (shown < res.warnings.size()) std::cerr << "warning: ... and " << res.warnings.size() - shown << " more\n";
  std::vector<std::string> ids;
  for (const auto& s : profiles.students) ids.push_back(s.student_id);
  io::write_atomic(o.out, report::assignments(ids, res.labels));
  if (!o.model_out.empty()) write_json(o.model_out, res.model.to_json());
  return 0;
}

TemporalOptions temporal_options(const Options& o) {
  TemporalOptions t;
  t.k = o.k > 0 ? o.k : 3;
  t.seed = o.seed;
  t.fixed_gamma = o.gamma;
  if (o.smoothing == "adaptive") t.mode = SmoothingMode::Adaptive;
  else if (o.smoothing == "fixed") t.mode = SmoothingMode::Fixed;
  else if (o.smoothing == "none") t.mode = SmoothingMode::None;
  else throw ValidationError("--smoothing must be adaptive, fixed or none");
  return t;
}

int cmd_temporal(const Options& o) {
  io::write_atomic(o.out, report::ribbons(read_log(o.logs), temporal_options(o)));
  return 0;
}

std::map<std::string, int> read_labels(const fs::path& p) {
  std::istringstream in(io::read_text_file(p));
  std::string line;
  std::map<std::string, int> out;
  std::size_t no = 0;
  int col = -1;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    if (col < 0) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i] == "dd") col = static_cast<int>(i);
      }
      if (col < 0 || cells.empty() || cells[0] != "student_id") {
        throw ParseError(no, p.string() + ": header needs student_id and dd columns");
      }
      continue;
    }
    if (static_cast<int>(cells.size()) <= col) throw ParseError(no, p.string() + ": short row");
    if (cells[static_cast<std::size_t>(col)] != "0" && cells[static_cast<std::size_t>(col)] != "1") {
      throw ParseError(no, p.string() + ": dd must be 0 or 1");
    }
    out[cells[0]] = cells[static_cast<std::size_t>(col)] == "1";
  }
  return out;
}

int cmd_fit_screener(const Options& o) {
  const auto bank = FeatureBank::load(o.bank.empty() ? fs::path(KSPACE_DATA_DIR) / "screener_bank.json" : fs::path(o.bank));
  std::vector<std::string> ids;
  for (const auto& f : bank.features) ids.push_back(f.id);
  auto data = extract_screen_features(read_log(o.logs), ids);
  const auto labels = read_labels(o.labels);
  for (const auto& sid : data.student_ids) {
    auto it = labels.find(sid);
    if (it == labels.end()) throw ValidationError("no dd label for student " + sid);
    data.y.push_back(it->second);
  }
  SelectOptions so;
  so.alpha = o.alpha;
  so.bonferroni = o.bonferroni;
  std::vector<std::string> order;
  for (const auto& f : select_features(data, so)) order.push_back(f.id);
  write_json(o.out, fit_screener(data, order, &bank).to_json());
  return 0;
}

int cmd_screen(const Options& o) {
  const auto model = ScreenerModel::from_json(read_json(o.model));
  const auto data = extract_screen_features(read_log(o.logs), model.features);
  std::vector<ScreenResult> results;
  for (const auto& row : model_rows(model, data)) results.push_back(screen(model, row));
  io::write_atomic(o.out, report::screen_results(data.student_ids, results));
  return 0;
}

int cmd_stop_policy(const Options& o) {
  const SkillNet net = load_net(o.skill_net);
  const auto params = load_params(net, o.params);
  if (o.stop_model != "dbn" && o.stop_model != "frequency") throw ValidationError("--model must be dbn or frequency");
  const StopPolicyConfig cfg{};
  io::CsvWriter csv({"student_id", "skill_id", "decision", "attempts", "answers"});
  auto grouped = by_student(read_log(o.logs));
  std::stable_sort(grouped.begin(), grouped.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [sid, evs] : grouped) {
    std::map<std::string, std::vector<bool>> per_skill;
    for (const auto& a : answers(evs)) {
      if (!net.contains(a.skill)) throw ValidationError("unknown skill '" + a.skill + "' for student " + sid);
      per_skill[a.skill].push_back(a.correct);
    }
    for (const auto& [skill, ans] : per_skill) {
      const std::vector<bool>& seq = ans;
      std::unique_ptr<NextCorrectModel> m;
      if (o.stop_model == "dbn") m = std::make_unique<SkillModelAdapter>(net, params, net.index_of(skill));
      else m = std::make_unique<FrequencyModel>();
      const auto buf = std::make_unique<bool[]>(seq.size());
      std::copy(seq.begin(), seq.end(), buf.get());
      const auto run = run_stop_policy(*m, std::span<const bool>(buf.get(), seq.size()), cfg);
      csv.cell(sid).cell(skill).cell(to_string(run.decision)).cell(run.attempts).cell(seq.size());
      csv.end_row();
    }
  }
  io::write_atomic(o.out, csv.str());
  return 0;
}

int cmd_report(const Options& o) {
  const auto kind = report::parse_kind(o.kind);
  const auto events = read_log(o.logs);
  std::string text;
  switch (kind) {
    case report::Kind::ErrorProb: text = report::error_prob(events); break;
    case report::Kind::RangeProgress: text = report::range_progress(events, load_net(o.skill_net)); break;
    case report::Kind::SkillStatus: {
      const auto net = load_net(o.skill_net);
      text = report::skill_status(events, net, load_params(net, o.params), o.threshold);
      break;
    }
    case report::Kind::Path: text = report::path(events); break;
    case report::Kind::Ribbons: text = report::ribbons(events, temporal_options(o)); break;
  }
  io::write_atomic(o.out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Computational knowledge space: simulation, model fitting and reports", "kspace"};
  app.require_subcommand(0, 1);
  app.set_version_flag("--version", std::string(kVersionText, std::strlen(kVersionText) - 1));
  Options o;

  auto seed_opt = [&](CLI::App* c) {
    c->add_option_function<std::uint64_t>(
         "--seed", [&](std::uint64_t s) { o.seed = s, o.seed_set = true; }, "random seed")
        ->type_name("UINT");
  };
  auto logs_opt = [&](CLI::App* c) { c->add_option("--logs", o.logs, "event log (JSONL)")->required()->check(CLI::ExistingFile); };
  auto net_opt = [&](CLI::App* c) {
    c->add_option("--skill-net", o.skill_net, "skill net JSON (default: shipped sample)")->check(CLI::ExistingFile);
  };

  auto* simulate = app.add_subcommand("simulate", "generate synthetic event logs");
  simulate->add_option("--config", o.config, "simulation config JSON")->check(CLI::ExistingFile);
  simulate->add_option("--out", o.out, "output event log")->required();
  simulate->add_option("--truth", o.truth, "ground-truth sidecar JSONL");
  simulate->add_option("--students", o.students, "per-student metadata CSV");
  seed_opt(simulate);

  auto* fit_k = app.add_subcommand("fit-knowledge", "fit per-skill slip/guess/learn/forget");
  logs_opt(fit_k);
  net_opt(fit_k);
  fit_k->add_option("--out", o.out, "parameter JSON")->required();
  fit_k->add_option("--summary", o.summary, "fit summary JSON");

  auto* fit_e = app.add_subcommand("fit-erp", "fit the error-repetition model");
  logs_opt(fit_e);
  fit_e->add_option("--out", o.out, "ERP model JSON")->required();
  fit_e->add_option("--engagement-out", o.engagement_out, "engagement HMM JSON");
  fit_e->add_option("--folds", o.folds, "cross-validation folds")->check(CLI::Range(2, 100));
  seed_opt(fit_e);

  auto* cluster = app.add_subcommand("cluster", "offline trait clustering");
  logs_opt(cluster);
  net_opt(cluster);
  cluster->add_option("--out", o.out, "assignments CSV")->required();
  cluster->add_option("--model-out", o.model_out, "cluster model JSON");
  cluster->add_option("--k", o.k, "fixed cluster count (default: BIC)")->check(CLI::Range(2, 1000));
  cluster->add_option("--sessions", o.sessions, "use only the first N sessions per student")->check(CLI::NonNegativeNumber);
  seed_opt(cluster);

  auto* temporal = app.add_subcommand("temporal-cluster", "session-wise clustering of navigation behavior");
  logs_opt(temporal);
  temporal->add_option("--out", o.out, "ribbon CSV")->required();
  temporal->add_option("--k", o.k, "clusters per session (default 3)")->check(CLI::Range(1, 1000));
  temporal->add_option("--smoothing", o.smoothing, "adaptive | fixed | none");
  temporal->add_option("--gamma", o.gamma, "gamma for fixed smoothing")->check(CLI::Range(0.0, 1.0));
  seed_opt(temporal);

  auto* fit_s = app.add_subcommand("fit-screener", "select features and fit the screening model");
  logs_opt(fit_s);
  fit_s->add_option("--labels", o.labels, "CSV with student_id and dd columns")->required()->check(CLI::ExistingFile);
  fit_s->add_option("--bank", o.bank, "feature bank JSON")->check(CLI::ExistingFile);
  fit_s->add_option("--alpha", o.alpha, "keep representatives with p < alpha")->check(CLI::Range(0.0, 1.0));
  fit_s->add_flag("--bonferroni", o.bonferroni, "Bonferroni-adjust alpha");
  fit_s->add_option("--out", o.out, "screener model JSON")->required();

  auto* scr = app.add_subcommand("screen", "screen students from their logs");
  scr->add_option("--model", o.model, "screener model JSON")->required()->check(CLI::ExistingFile);
  logs_opt(scr);
  scr->add_option("--out", o.out, "results CSV")->required();

  auto* stop = app.add_subcommand("stop-policy-eval", "replay the when-to-stop policy per student and skill");
  logs_opt(stop);
  net_opt(stop);
  stop->add_option("--params", o.params, "knowledge parameter JSON")->check(CLI::ExistingFile);
  stop->add_option("--model", o.stop_model, "dbn | frequency");
  stop->add_option("--out", o.out, "decisions CSV")->required();

  auto* rep = app.add_subcommand("report", "plot-ready CSV reports");
  logs_opt(rep);
  rep->add_option("--kind", o.kind, "error-prob | range-progress | skill-status | path | ribbons")->required();
  rep->add_option("--out", o.out, "output CSV")->required();
  net_opt(rep);
  rep->add_option("--params", o.params, "knowledge parameter JSON")->check(CLI::ExistingFile);
  rep->add_option("--threshold", o.threshold, "learned threshold for skill-status")->check(CLI::Range(0.0, 1.0));
  rep->add_option("--k", o.k, "clusters for ribbons")->check(CLI::Range(1, 1000));
  rep->add_option("--smoothing", o.smoothing, "adaptive | fixed | none");
  rep->add_option("--gamma", o.gamma, "gamma for fixed smoothing")->check(CLI::Range(0.0, 1.0));
  seed_opt(rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(o);
    if (fit_k->parsed()) return cmd_fit_knowledge(o);
    if (fit_e->parsed()) return cmd_fit_erp(o);
    if (cluster->parsed()) return cmd_cluster(o);
    if (temporal->parsed()) return cmd_temporal(o);
    if (fit_s->parsed()) return cmd_fit_screener(o);
    if (scr->parsed()) return cmd_screen(o);
    if (stop->parsed()) return cmd_stop_policy(o);
    if (rep->parsed()) return cmd_report(o);
    std::cerr << app.help();
    return 2;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n' || c == '\r') c = ' ';
    }
    std::cerr << "error: " << msg << "\n";
    return 1;
  }
}
