// keydyn: keystroke-dynamics experiments and the enroll/verify service.
//
//   keydyn gen    --out data.csv --seed 7
//   keydyn run    --input data.csv --classifier dvc --layout concept3 --format machine --out run.json
//   keydyn sweep  --input data.csv --user user01 --out det.txt
//   keydyn report run1.json run2.json --scheme scheme.json
//   keydyn serve  --port 8080 --store store.json --static-dir web

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "keydyn/keydyn.hpp"
#include "keydyn/service/http.hpp"

namespace {

using keydyn::Error;
using keydyn::ErrorCode;
using nlohmann::json;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open '" + path + "'");
  const auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::ConfigError, "'" + path + "' is not valid JSON");
  return j;
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream os(out_path);
  if (!os) throw Error(ErrorCode::InvalidArgument, "cannot write '" + out_path + "'");
  os << text;
}

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> classifier;
  std::optional<std::string> layout;
  std::string out;
  std::string format = "human";
};

void add_common(CLI::App* cmd, CommonOptions& o, bool with_format) {
  cmd->add_option("--config", o.config_path, "ExperimentConfig JSON file");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--classifier", o.classifier, "classifier")->check(CLI::IsMember({"mvp", "dvc", "svm"}));
  cmd->add_option("--layout", o.layout, "feature layout")->check(CLI::IsMember({"concept1", "concept2", "concept3"}));
  cmd->add_option("--out", o.out, "output path (default stdout)");
  if (with_format) cmd->add_option("--format", o.format, "output format")->check(CLI::IsMember({"human", "machine"}));
}

keydyn::harness::ExperimentConfig resolve_config(const CommonOptions& o) {
  keydyn::harness::ExperimentConfig c;
  if (!o.config_path.empty()) c = keydyn::harness::config_from_json(read_json_file(o.config_path));
  if (o.seed) c.seed = *o.seed;
  if (o.classifier) c.classifier = keydyn::classifier_kind_from_string(*o.classifier);
  if (o.layout) c.layout = *o.layout;
  c.validate();
  return c;
}

struct SynthOptions {
  std::size_t users = 5;
  std::size_t samples = 30;
  double hold_step = 50.0;
  double hold_std = 10.0;
  std::string text;
  bool identical = false;
};

void add_synth(CLI::App* cmd, SynthOptions& s) {
  cmd->add_option("--users", s.users, "synthetic users")->check(CLI::PositiveNumber);
  cmd->add_option("--samples", s.samples, "samples per synthetic user")->check(CLI::PositiveNumber);
  cmd->add_option("--hold-step", s.hold_step, "ms between users' mean hold times");
  cmd->add_option("--hold-std", s.hold_std, "hold-time standard deviation (ms)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--text", s.text, "text to type (one key per character)");
  cmd->add_flag("--identical", s.identical, "give every user the same profile");
}

keydyn::Dataset synthesize(const SynthOptions& s, const std::string& layout, std::uint64_t seed) {
  const auto text = s.text.empty() ? keydyn::harness::default_text(layout) : keydyn::harness::keys_of(s.text);
  keydyn::harness::SyntheticProfile base;
  base.hold_std = s.hold_std;
  const auto profiles = keydyn::harness::spaced_profiles(s.users, s.identical ? 0.0 : s.hold_step, text, base);
  return keydyn::harness::generate_synthetic(profiles, s.samples, seed);
}

keydyn::Dataset obtain_dataset(const std::string& input, const SynthOptions& s,
                               const keydyn::harness::ExperimentConfig& cfg) {
  if (input.empty()) return synthesize(s, cfg.layout, cfg.seed);
  auto loaded = keydyn::harness::load_events_csv(input);
  for (const auto& r : loaded.rejected) {
    std::cerr << "rejected " << r.user_id << "/" << r.sample_id << " (line " << r.first_line << "):";
    for (const auto& v : r.violations) std::cerr << " " << v << ";";
    std::cerr << "\n";
  }
  return std::move(loaded.dataset);
}

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Keystroke-dynamics authentication toolkit"};
  app.require_subcommand(1);

  // gen
  CommonOptions gen_opts;
  SynthOptions gen_synth;
  auto* gen = app.add_subcommand("gen", "generate a synthetic event CSV");
  add_common(gen, gen_opts, false);
  add_synth(gen, gen_synth);

  // run
  CommonOptions run_opts;
  SynthOptions run_synth;
  std::string run_input;
  auto* run = app.add_subcommand("run", "run an experiment and print its report");
  add_common(run, run_opts, true);
  add_synth(run, run_synth);
  run->add_option("--input", run_input, "event CSV (default: synthetic data from --seed)");

  // sweep
  CommonOptions sweep_opts;
  SynthOptions sweep_synth;
  std::string sweep_input;
  std::string sweep_user;
  auto* sweep = app.add_subcommand("sweep", "export a DET curve (threshold far frr)");
  add_common(sweep, sweep_opts, false);
  add_synth(sweep, sweep_synth);
  sweep->add_option("--input", sweep_input, "event CSV (default: synthetic data from --seed)");
  sweep->add_option("--user", sweep_user, "user whose curve to export (default: pooled scores)");

  // report
  std::vector<std::string> report_inputs;
  std::string report_scheme;
  std::string report_out;
  std::string report_format = "human";
  auto* report = app.add_subcommand("report", "merge machine-readable run reports into a comparison");
  report->add_option("reports", report_inputs, "run reports (JSON)")->required()->check(CLI::ExistingFile);
  report->add_option("--scheme", report_scheme, "qualitative scheme JSON")->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "output path (default stdout)");
  report->add_option("--format", report_format, "output format")->check(CLI::IsMember({"human", "machine"}));

  // serve
  std::string serve_host = "127.0.0.1";
  int serve_port = 8080;
  std::string serve_config;
  std::string serve_static = "web";
  keydyn::service::ServiceConfig service_cfg;
  service_cfg.store_path = "keydyn-store.json";
  std::optional<std::string> serve_classifier;
  std::optional<std::string> serve_layout;
  std::optional<std::string> serve_store;
  std::optional<std::size_t> serve_min;
  auto* serve = app.add_subcommand("serve", "start the enroll/verify HTTP service");
  serve->add_option("--host", serve_host, "bind address");
  serve->add_option("--port", serve_port, "port")->check(CLI::Range(1, 65535));
  serve->add_option("--config", serve_config, "service config JSON");
  serve->add_option("--store", serve_store, "template store path");
  serve->add_option("--static-dir", serve_static, "capture UI bundle to host at /");
  serve->add_option("--classifier", serve_classifier, "classifier")->check(CLI::IsMember({"mvp", "dvc", "svm"}));
  serve->add_option("--layout", serve_layout, "feature layout")
      ->check(CLI::IsMember({"concept1", "concept2", "concept3"}));
  serve->add_option("--min-samples", serve_min, "samples required before training")->check(CLI::Range(2, 1000));

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const auto cfg = resolve_config(gen_opts);
      std::ostringstream os;
      keydyn::harness::write_events_csv(os, synthesize(gen_synth, cfg.layout, cfg.seed));
      emit(gen_opts.out, os.str());
    } else if (run->parsed()) {
      const auto cfg = resolve_config(run_opts);
      const auto result = keydyn::harness::run_experiment(obtain_dataset(run_input, run_synth, cfg), cfg);
      emit(run_opts.out, run_opts.format == "machine" ? keydyn::harness::to_json(result).dump(2) + "\n"
                                                      : keydyn::harness::render_human(result));
    } else if (sweep->parsed()) {
      const auto cfg = resolve_config(sweep_opts);
      const auto result = keydyn::harness::run_experiment(obtain_dataset(sweep_input, sweep_synth, cfg), cfg);
      keydyn::ScoreSet scores;
      for (const auto& u : result.users) {
        if (!u.rates || (!sweep_user.empty() && u.user_id != sweep_user)) continue;
        scores.genuine.insert(scores.genuine.end(), u.scores.genuine.begin(), u.scores.genuine.end());
        scores.impostor.insert(scores.impostor.end(), u.scores.impostor.begin(), u.scores.impostor.end());
      }
      if (scores.genuine.empty()) throw Error(ErrorCode::EmptyScores, "no evaluated user matches");
      std::ostringstream os;
      keydyn::write_det_curve(os, keydyn::sweep_rates(scores));
      emit(sweep_opts.out, os.str());
    } else if (report->parsed()) {
      std::vector<keydyn::harness::ComparisonRow> rows;
      for (const auto& path : report_inputs) rows.push_back(keydyn::harness::comparison_row_from_json(read_json_file(path)));
      keydyn::harness::QualitativeScheme scheme;
      if (!report_scheme.empty()) scheme = keydyn::harness::scheme_from_json(read_json_file(report_scheme));
      const auto doc = keydyn::harness::comparison_report(std::move(rows), scheme);
      emit(report_out, report_format == "machine" ? keydyn::harness::to_json(doc).dump(2) + "\n"
                                                  : keydyn::harness::render_human(doc));
    } else if (serve->parsed()) {
      if (!serve_config.empty()) {
        const auto j = read_json_file(serve_config);
        static const std::set<std::string> known = {"classifier", "layout", "min_samples", "store",
                                                    "svm_c",      "mvp_band", "impostor_seed"};
        for (const auto& [key, _] : j.items()) {
          if (known.count(key) == 0) throw Error(ErrorCode::ConfigError, "unknown service config key '" + key + "'");
        }
        if (j.contains("classifier")) service_cfg.classifier = keydyn::classifier_kind_from_string(j["classifier"].get<std::string>());
        if (j.contains("layout")) service_cfg.layout = j["layout"].get<std::string>();
        if (j.contains("min_samples")) service_cfg.min_samples = j["min_samples"].get<std::size_t>();
        if (j.contains("store")) service_cfg.store_path = j["store"].get<std::string>();
        if (j.contains("svm_c")) service_cfg.svm_c = j["svm_c"].get<double>();
        if (j.contains("mvp_band")) service_cfg.mvp_band = j["mvp_band"].get<double>();
        if (j.contains("impostor_seed")) service_cfg.impostor_seed = j["impostor_seed"].get<std::uint64_t>();
      }
      if (serve_classifier) service_cfg.classifier = keydyn::classifier_kind_from_string(*serve_classifier);
      if (serve_layout) service_cfg.layout = *serve_layout;
      if (serve_store) service_cfg.store_path = *serve_store;
      if (serve_min) service_cfg.min_samples = *serve_min;

      keydyn::service::VerificationService service(service_cfg);
      httplib::Server server;
      keydyn::service::install_routes(server, service, serve_static);
      g_server = &server;
      std::signal(SIGINT, stop_server);
      std::signal(SIGTERM, stop_server);
      std::cerr << "listening on http://" << serve_host << ":" << serve_port << " (store "
                << service_cfg.store_path.string() << ")\n";
      if (!server.listen(serve_host, serve_port)) {
        std::cerr << "error: cannot bind " << serve_host << ":" << serve_port << "\n";
        return 1;
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& d : e.details()) std::cerr << "  " << d << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
