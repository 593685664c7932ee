// afshape: waveform design, metric queries and experiment runs.
//
// Exit status: 0 success, 2 configuration error, 3 infeasible request,
// 4 solver failure, 1 anything else. Failures print one JSON object on stderr.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "afshape/acf.hpp"
#include "afshape/constellation.hpp"
#include "afshape/designer.hpp"
#include "afshape/detection.hpp"
#include "afshape/errors.hpp"
#include "afshape/harness.hpp"
#include "afshape/io.hpp"
#include "afshape/receivers.hpp"
#include "afshape/sensing_sim.hpp"

namespace fs = std::filesystem;
using afs::io::json;

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> threads;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
  auto* opt = cmd->add_option("--config", f.config, "JSON input document");
  if (config_required) opt->required();
  cmd->add_option("--out", f.out, "Output directory (stdout when omitted)");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--trials", f.trials, "Monte-Carlo trials");
  cmd->add_option("--threads", f.threads, "Worker threads, 0 = hardware parallelism");
  cmd->add_option("--set", f.overrides, "Override a config key: dotted.key=value");
}

/// Loads --config (or an empty object), then applies --set and the numeric flags.
afs::io::JsonDocument load_document(const CommonFlags& f) {
  afs::io::JsonDocument doc;
  if (!f.config.empty()) {
    doc = afs::io::load_json_file(f.config);
  } else {
    doc.root = json::object();
    doc.origin = "<defaults>";
  }
  if (!doc.root.is_object()) throw afs::ConfigError(doc.origin + ": top level must be an object");
  for (const auto& o : f.overrides) afs::apply_override(doc.root, o);
  if (f.seed) doc.root["seed"] = *f.seed;
  if (f.trials) doc.root["trials"] = *f.trials;
  if (f.threads) doc.root["threads"] = *f.threads;
  return doc;
}

void emit(const CommonFlags& f, const std::string& name, const std::string& content) {
  if (f.out.empty()) {
    std::cout << content;
    return;
  }
  fs::create_directories(f.out);
  std::ofstream os(fs::path(f.out) / name, std::ios::binary);
  if (!os) throw afs::Error("cannot write " + (fs::path(f.out) / name).string());
  os << content;
}

json db_or_none(double linear) {
  if (!(linear > 0.0)) return "none";
  return afs::linear_to_db(linear);
}

// --------------------------------------------------------------------------

int cmd_design(const CommonFlags& f) {
  const afs::io::JsonDocument doc = load_document(f);
  const afs::DesignRequest req = afs::io::design_request_from_json(doc);
  const afs::DesignResult result = afs::solve_p2(req);
  const json out = {{"schema_version", afs::kSchemaVersion},
                    {"request", afs::io::to_json(req)},
                    {"result", afs::io::to_json(result)}};
  std::ostringstream table;
  table << "metric,linear,db\n";
  table << "rate_bps," << result.predicted.rate << ",\n";
  table << "snr_loss," << result.predicted.snr_loss << ',' << afs::linear_to_db(result.predicted.snr_loss) << '\n';
  table << "psl," << result.predicted.psl << ',' << afs::linear_to_db(result.predicted.psl) << '\n';
  table << "isl," << result.predicted.isl << ',' << afs::linear_to_db(result.predicted.isl) << '\n';
  emit(f, "design.json", out.dump(2) + "\n");
  if (f.out.empty()) {
    std::cerr << table.str();
  } else {
    emit(f, "predicted_metrics.csv", table.str());
  }
  return 0;
}

struct AllocationInput {
  afs::PowerAllocation alloc;
  afs::Constellation constellation;
  afs::OfdmGrid grid;
  afs::CommChannel channel;
};

/// {"allocation": {...}, "constellation": "16QAM", "grid": {...}, "channel": {...}}
AllocationInput read_allocation_input(const afs::io::JsonDocument& source, bool allow_run_keys) {
  auto doc = std::make_shared<afs::io::JsonDocument>(source);
  afs::io::ObjectReader r(doc->root, "", doc);
  r.integer("schema_version", afs::kSchemaVersion);
  if (allow_run_keys) {
    r.unsigned_integer("seed", 0);
    r.integer("trials", 0);
    r.integer("threads", 0);
  }
  AllocationInput in;
  if (!r.has("allocation")) r.fail("allocation", "required key is missing");
  in.alloc = afs::io::allocation_from_json(r.object("allocation"));
  try {
    in.constellation = afs::make_constellation(r.string("constellation", "16QAM"));
  } catch (const afs::NameError& e) {
    r.fail("constellation", e.what());
  }
  const bool explicit_grid = r.has("grid");
  in.grid = afs::io::grid_from_json(r.object("grid"));
  if (!explicit_grid) in.grid.n = in.alloc.n();
  if (in.grid.n != in.alloc.n()) r.fail("grid", "subcarrier count differs from the allocation length");
  if (r.has("channel")) {
    in.channel = afs::io::channel_from_json(r.object("channel"), in.grid.n);
  } else {
    in.channel = afs::flat_channel(in.grid.n, afs::db_to_linear(10.0));
  }
  r.finish();
  afs::validate_allocation(in.alloc, 0.0);
  return in;
}

int cmd_metrics(const CommonFlags& f) {
  const AllocationInput in = read_allocation_input(load_document(f), false);
  const bool stochastic = in.alloc.structure && in.alloc.structure->jitter > 0.0;
  const afs::AcfProfile profile = stochastic ? afs::expected_sq_acf(in.alloc, in.constellation)
                                             : afs::expected_sq_acf_exact(in.alloc, in.constellation);
  const afs::SecurityMetrics m = afs::metrics_from_profile(profile);
  json out = {{"psl_db", db_or_none(m.psl_linear)},
              {"isl_db", db_or_none(m.isl_linear)},
              {"snr_loss_db", afs::linear_to_db(afs::snr_loss_closed_form(in.alloc, in.constellation))},
              {"rate_bps", afs::comm_rate(in.channel, in.alloc, in.grid)},
              {"constellation", in.constellation.name}};
  if (stochastic) {
    out["note"] = "expectation over symbols and allocation jitter (variance term included)";
  }
  emit(f, "metrics.json", out.dump(2) + "\n");
  return 0;
}

int cmd_acf(const CommonFlags& f) {
  const afs::io::JsonDocument doc = load_document(f);
  const AllocationInput in = read_allocation_input(doc, true);
  const int trials = doc.root.value("trials", 0);
  const std::uint64_t seed = doc.root.value("seed", std::uint64_t{2025});
  const afs::AcfProfile expected = afs::expected_sq_acf_exact(in.alloc, in.constellation);
  std::ostringstream csv;
  if (trials > 0) {
    const afs::AcfProfile mc = afs::monte_carlo_sq_acf(in.alloc, in.constellation, trials, seed);
    csv << "k,range_m,expected_sq,monte_carlo,std_error\n";
    for (int k = 0; k < expected.n(); ++k) {
      csv << k << ',' << k * in.grid.bin_range_m() << ',' << expected.squared[k] << ','
          << mc.squared[k] << ',' << mc.std_error[k] << '\n';
    }
  } else {
    afs::write_acf_csv(csv, expected, in.grid.bin_range_m());
  }
  emit(f, "acf.csv", csv.str());
  return 0;
}

/// One frame through one receiver, then CA-CFAR on the integrated profile.
int cmd_simulate(const CommonFlags& f) {
  auto doc = std::make_shared<afs::io::JsonDocument>(load_document(f));
  afs::io::ObjectReader r(doc->root, "", doc);
  r.integer("schema_version", afs::kSchemaVersion);
  r.integer("trials", 0);
  r.integer("threads", 0);
  const std::uint64_t seed = r.unsigned_integer("seed", 2025);
  afs::SensingSetup setup;
  setup.grid = afs::io::grid_from_json(r.object("grid"));
  try {
    setup.constellation = afs::make_constellation(r.string("constellation", "16QAM"));
  } catch (const afs::NameError& e) {
    r.fail("constellation", e.what());
  }
  setup.alloc = r.has("allocation") ? afs::io::allocation_from_json(r.object("allocation"))
                                    : afs::equal_allocation(setup.grid.n);
  if (setup.alloc.n() != setup.grid.n) r.fail("allocation", "length differs from grid.n");

  afs::ReceiverChoice rx;
  {
    afs::io::ObjectReader rr = r.object("receiver");
    const std::string who = rr.string("observer", "alice");
    const std::string kind = rr.string("kind", "rf");
    if (who != "alice" && who != "eve") rr.fail("observer", "expected alice or eve");
    if (kind != "mf" && kind != "rf") rr.fail("kind", "expected mf or rf");
    rx.who = who == "alice" ? afs::Observer::Alice : afs::Observer::Eve;
    rx.kind = kind == "mf" ? afs::ReceiverKind::MF : afs::ReceiverKind::RF;
    rr.finish();
  }
  {
    afs::io::ObjectReader er = r.object("eve_reference");
    const double sinr_db = er.number("sinr_db", 0.0);
    const double k = er.number_or_inf("k_factor", 10.0);
    er.finish();
    setup.eve_ref = afs::RicianRef::from_sinr(afs::db_to_linear(sinr_db), k);
  }
  afs::CfarConfig cfar;
  {
    afs::io::ObjectReader cr = r.object("cfar");
    cfar.pfa = cr.number("pfa", cfar.pfa);
    cfar.train_cells = cr.integer("train_cells", cfar.train_cells);
    cfar.guard_cells = cr.integer("guard_cells", cfar.guard_cells);
    cr.finish();
  }
  const double noise_var = rx.who == afs::Observer::Alice ? setup.alice_noise_var : setup.eve_noise_var;
  const afs::RadarScene scene = afs::io::scene_from_json(r.object("scene"), setup.grid, noise_var);
  r.finish();

  const afs::CMatrix filtered = afs::simulate_filtered(setup, scene, rx, seed);
  const afs::RangeProfile profile = afs::integrated_profile(filtered, setup.grid, rx.kind, rx.who);
  const afs::DetectionResult det = afs::ca_cfar(profile, cfar);
  std::ostringstream csv;
  csv << "k,range_m,power_db,threshold_db\n";
  const double peak = profile.bins.cwiseAbs2().maxCoeff();
  for (int k = 0; k < setup.grid.n; ++k) {
    csv << k << ',' << k * setup.grid.bin_range_m() << ','
        << afs::linear_to_db(std::norm(profile.bins[k]) / peak) << ','
        << afs::linear_to_db(det.threshold_profile[k] / peak) << '\n';
  }
  json detections = json::array();
  for (int k : det.detected_bins) detections.push_back({{"bin", k}, {"range_m", k * setup.grid.bin_range_m()}});
  emit(f, "profile.csv", csv.str());
  const json summary = {{"receiver", std::string(afs::to_string(rx.who)) + "-" + afs::to_string(rx.kind)},
                        {"detections", detections}};
  if (f.out.empty()) {
    std::cerr << summary.dump() << '\n';
  } else {
    emit(f, "detections.json", summary.dump(2) + "\n");
  }
  return 0;
}

int run_config(const afs::io::JsonDocument& doc, const CommonFlags& f, const std::string& id) {
  const afs::ExperimentConfig cfg = afs::config_from_json(doc, id);
  const fs::path root = f.out.empty() ? fs::path("out") : fs::path(f.out);
  const afs::RunRecord rec = afs::run_and_write(cfg, root);
  std::cout << json{{"experiment", cfg.experiment},
                    {"dir", rec.dir.string()},
                    {"config_hash", rec.manifest["config_hash"]},
                    {"content_hash", rec.manifest["content_hash"]},
                    {"wall_time_s", rec.manifest["wall_time_s"]}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_sweep(const CommonFlags& f) { return run_config(load_document(f), f, ""); }

int cmd_reproduce(const CommonFlags& f, const std::string& id) {
  const auto& ids = afs::experiment_ids();
  if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
    throw afs::NameError("unknown experiment id '" + id + "'");
  }
  afs::io::JsonDocument doc = load_document(f);
  if (!doc.root.contains("experiment")) doc.root["experiment"] = id;
  return run_config(doc, f, id);
}

// --------------------------------------------------------------------------

int fail(const std::string& type, const std::string& message, int code) {
  std::cerr << json{{"error", {{"type", type}, {"message", message}, {"exit_code", code}}}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensing-secure OFDM waveform design and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", afs::kToolVersion);

  CommonFlags flags;
  std::string figure;
  auto* design = app.add_subcommand("design", "Solve a waveform-design request");
  add_common(design, flags, true);
  auto* metrics = app.add_subcommand("metrics", "PSL, ISL, SNR loss and rate of an allocation");
  add_common(metrics, flags, true);
  auto* acf = app.add_subcommand("acf", "Expected (and optionally Monte-Carlo) squared ACF");
  add_common(acf, flags, true);
  auto* simulate = app.add_subcommand("simulate", "One sensing frame through one receiver");
  add_common(simulate, flags, false);
  auto* sweep = app.add_subcommand("sweep", "Run an experiment described by a config file");
  add_common(sweep, flags, true);
  auto* reproduce = app.add_subcommand("reproduce", "Run a figure experiment with its default settings");
  add_common(reproduce, flags, false);
  reproduce->add_option("figure", figure, "Experiment id")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("UsageError", e.what(), 2);
  }

  try {
    if (*design) return cmd_design(flags);
    if (*metrics) return cmd_metrics(flags);
    if (*acf) return cmd_acf(flags);
    if (*simulate) return cmd_simulate(flags);
    if (*sweep) return cmd_sweep(flags);
    if (*reproduce) return cmd_reproduce(flags, figure);
  } catch (const afs::InfeasibleSecurityError& e) {
    return fail("InfeasibleSecurityError", e.what(), 3);
  } catch (const afs::InfeasibleAcfError& e) {
    return fail("InfeasibleAcfError", e.what(), 3);
  } catch (const afs::SolverError& e) {
    return fail("SolverError", e.what(), 4);
  } catch (const afs::ConfigError& e) {
    return fail("ConfigError", e.what(), 2);
  } catch (const afs::NameError& e) {
    return fail("NameError", e.what(), 2);
  } catch (const afs::FloorError& e) {
    return fail("FloorError", e.what(), 2);
  } catch (const afs::DivisibilityError& e) {
    return fail("DivisibilityError", e.what(), 2);
  } catch (const afs::IsiRegionError& e) {
    return fail("IsiRegionError", e.what(), 2);
  } catch (const afs::StructureError& e) {
    return fail("StructureError", e.what(), 2);
  } catch (const afs::Error& e) {
    return fail("Error", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("InternalError", e.what(), 1);
  }
  return 0;
}
