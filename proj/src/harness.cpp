#include "afshape/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "afshape/acf.hpp"
#include "afshape/constellation.hpp"
#include "afshape/csv.hpp"
#include "afshape/designer.hpp"
#include "afshape/detection.hpp"
#include "afshape/errors.hpp"
#include "afshape/estimation.hpp"
#include "afshape/parallel.hpp"
#include "afshape/receivers.hpp"
#include "afshape/rng.hpp"
#include "afshape/sensing_sim.hpp"

namespace afs {

using io::json;
using io::ObjectReader;

namespace {

std::vector<double> arange(double start, double stop, double step) {
  std::vector<double> v;
  const int count = static_cast<int>(std::floor((stop - start) / step + 1e-9)) + 1;
  for (int i = 0; i < count; ++i) v.push_back(start + i * step);
  return v;
}

json comb_specs() { return json::array({{0.75, 3}, {0.5, 3}, {0.25, 7}}); }

json eve_link_defaults(json p) {
  p["reference_sinr_db"] = 0.0;
  p["k_factor"] = 10.0;
  p["nlos_per_symbol"] = false;
  return p;
}

json music_defaults(json p) {
  p["num_sources"] = 2;
  p["subarray_len"] = 0;
  p["forward_backward"] = true;
  p["average_symbols"] = true;
  p["rooting"] = "newton";
  p["gap_db"] = {4.0, 6.0};
  p["min_range_m"] = 10.0;
  p["max_range_m"] = 180.0;
  p["min_separation_m"] = 15.0;
  return p;
}

json cfar_defaults(json p) {
  p["pfa"] = 1e-5;
  p["train_cells"] = 16;
  p["guard_cells"] = 4;
  p["credit_bins"] = 1;
  return p;
}

json default_params(const std::string& id) {
  if (id == "fig2") {
    return {{"target_range_m", 99.0},
            {"input_snr_db", 0.0},
            {"sinr_db", arange(-10.0, 30.0, 5.0)},
            {"k_factor", nullptr},
            {"include_perfect", true}};
  }
  if (id == "fig4") return {{"specs", comb_specs()}};
  if (id == "fig5") return {{"specs", comb_specs()}, {"target_range_m", 99.0}, {"input_snr_db", 0.0}};
  if (id == "fig6") {
    std::vector<double> qs{0.01};
    for (double q : arange(0.05, 0.95, 0.05)) qs.push_back(q);
    return {{"kappas", {2, 4, 8, 16, 32}}, {"q", qs}, {"comm_snr_db", 10.0}};
  }
  if (id == "fig7") {
    return {{"eps_isl_db", 7.0},
            {"eps_psl_db", {-3.0, -4.0, -5.0, -6.0}},
            {"rho", arange(0.0, 1.0, 0.1)},
            {"comm_snr_db", 10.0},
            {"channel", "rayleigh"},
            {"n0", "search"}};
  }
  if (id == "fig8") {
    json p = {{"target_ranges_m", {24.0, 45.0, 100.0, 135.0, 180.0}},
              {"target_snr_db", {0.0, -3.0, -6.0, -9.0, -12.0}},
              {"eps_psl_db", -5.0},
              {"eps_isl_db", 7.0},
              {"rho", 0.0},
              {"comm_snr_db", 10.0}};
    p = cfar_defaults(eve_link_defaults(p));
    // Neighbouring targets sit 7 to 18 bins apart; a shorter window keeps
    // them out of each other's training cells.
    p["train_cells"] = 4;
    p["guard_cells"] = 2;
    return p;
  }
  if (id == "fig9" || id == "fig1R") {
    json p = {{"clutter_range_m", 30.0},
              {"clutter_snr_db", 10.0},
              {"target_range_m", 100.0},
              {"snr_db", arange(-40.0, 10.0, 1.0)},
              {"eps_psl_db", -5.0},
              {"eps_isl_db", id == "fig9" ? json({-0.5, 3.0, 7.0}) : json({7.0})},
              {"rho", 0.0},
              {"comm_snr_db", 10.0}};
    return cfar_defaults(eve_link_defaults(p));
  }
  if (id == "fig10") {
    json p = {{"snr_db", arange(-30.0, -6.0, 3.0)},
              {"eps_psl_db", -5.0},
              {"eps_isl_db", 7.0},
              {"rho", 0.0},
              {"comm_snr_db", 10.0}};
    return music_defaults(eve_link_defaults(p));
  }
  if (id == "fig11") {
    json p = {{"snr_db", -19.0},
              {"kappas", {8, 16, 32}},
              {"eps_psl_db", {-1.0, -2.0, -3.0, -4.0, -5.0, -6.0, -8.0, -10.0, -13.0, -16.0, -20.0}},
              {"comm_snr_db", 10.0}};
    return music_defaults(eve_link_defaults(p));
  }
  throw ConfigError("unknown experiment id '" + id + "'");
}

// ---------------------------------------------------------------------------
// Parameter readers. Defaults always sit in the merged params, so every key
// is present; the readers only check types and ranges.

struct EveLink {
  double sinr_db;
  double k_factor;
  bool per_symbol;

  RicianRef reference() const {
    return RicianRef::from_sinr(db_to_linear(sinr_db), k_factor, 1.0,
                                per_symbol ? NlosCoherence::PerSymbol : NlosCoherence::PerFrame);
  }
};

EveLink read_eve_link(ObjectReader& r) {
  EveLink e{r.number("reference_sinr_db"), r.number_or_inf("k_factor", 10.0),
            r.boolean("nlos_per_symbol", false)};
  if (!(e.k_factor >= 0.0)) r.fail("k_factor", "must be non-negative");
  return e;
}

struct SecureDesign {
  double eps_psl_db;
  std::vector<double> eps_isl_db;
  double rho;
  double comm_snr_db;
};

SecureDesign read_design(ObjectReader& r) {
  SecureDesign d{r.number("eps_psl_db"), r.numbers("eps_isl_db", {}), r.number("rho"),
                 r.number("comm_snr_db")};
  if (d.eps_isl_db.empty()) r.fail("eps_isl_db", "needs at least one value");
  if (!(d.rho >= 0.0 && d.rho <= 1.0)) r.fail("rho", "must lie in [0, 1]");
  return d;
}

CfarConfig read_cfar(ObjectReader& r, int& credit) {
  CfarConfig c;
  c.pfa = r.number("pfa");
  c.train_cells = r.integer("train_cells", c.train_cells);
  c.guard_cells = r.integer("guard_cells", c.guard_cells);
  credit = r.integer("credit_bins", 1);
  if (!(c.pfa > 0.0 && c.pfa < 1.0)) r.fail("pfa", "must lie in (0, 1)");
  if (c.train_cells < 1 || c.guard_cells < 0) r.fail("train_cells", "window sizes must be positive");
  if (credit < 0) r.fail("credit_bins", "must be non-negative");
  return c;
}

struct MusicParams {
  MusicConfig music;
  double gap_low_db, gap_high_db, min_range_m, max_range_m, min_separation_m;
};

MusicParams read_music(ObjectReader& r) {
  MusicParams m{};
  m.music.num_sources = r.integer("num_sources", 2);
  m.music.subarray_len = r.integer("subarray_len", 0);
  m.music.forward_backward = r.boolean("forward_backward", true);
  m.music.average_symbols = r.boolean("average_symbols", true);
  const std::string rooting = r.string("rooting", "newton");
  if (rooting == "newton") {
    m.music.rooting = RootingMethod::Newton;
  } else if (rooting == "companion") {
    m.music.rooting = RootingMethod::Companion;
  } else {
    r.fail("rooting", "expected newton or companion");
  }
  const auto gap = r.numbers("gap_db", {});
  if (gap.size() != 2 || gap[0] > gap[1]) r.fail("gap_db", "expected [low, high]");
  m.gap_low_db = gap[0];
  m.gap_high_db = gap[1];
  m.min_range_m = r.number("min_range_m");
  m.max_range_m = r.number("max_range_m");
  m.min_separation_m = r.number("min_separation_m");
  if (m.music.num_sources != 2) r.fail("num_sources", "the two-target sampler needs exactly 2");
  return m;
}

std::vector<std::pair<double, int>> read_specs(ObjectReader& r) {
  const json* raw = r.raw("specs");
  std::vector<std::pair<double, int>> specs;
  if (!raw || !raw->is_array() || raw->empty()) r.fail("specs", "expected [[alpha_frac, num_peaks], ...]");
  for (const auto& s : *raw) {
    if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number_integer()) {
      r.fail("specs", "each entry must be [alpha_frac, num_peaks]");
    }
    specs.emplace_back(s[0].get<double>(), s[1].get<int>());
  }
  return specs;
}

// ---------------------------------------------------------------------------

std::string fmt_db(double db) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", db);
  return buf;
}

PowerAllocation secure_allocation(const ExperimentConfig& cfg, const Constellation& c,
                                  double eps_psl_db, double eps_isl_db, double rho,
                                  double comm_snr_db) {
  DesignRequest req;
  req.rho = rho;
  req.eps_psl = db_to_linear(eps_psl_db);
  req.eps_isl = db_to_linear(eps_isl_db);
  req.constellation = c;
  req.grid = cfg.grid;
  req.channel = flat_channel(cfg.grid.n, db_to_linear(comm_snr_db));
  req.n0 = 1;
  return solve_p2(req).alloc;
}

SensingSetup make_setup(const ExperimentConfig& cfg, const Constellation& c, PowerAllocation alloc,
                        const RicianRef& ref) {
  SensingSetup s;
  s.grid = cfg.grid;
  s.constellation = c;
  s.alloc = std::move(alloc);
  s.eve_ref = ref;
  return s;
}

std::string label(ReceiverChoice rx) {
  return std::string(to_string(rx.who)) + "-" + to_string(rx.kind);
}

/// Mean-signal / masked-noise output SNR over `trials` frames, single fixed-phase target.
double empirical_output_snr(const SensingSetup& setup, const RadarScene& scene, ReceiverChoice rx,
                            int target_bin, int trials, std::uint64_t seed, int threads,
                            bool noise_from_separate_run) {
  const OfdmGrid& g = setup.grid;
  std::vector<CVector> prof(static_cast<std::size_t>(trials)), noise(prof.size());
  parallel_for(prof.size(), threads, [&](std::size_t t) {
    const std::uint64_t fs = derive_seed(seed, t);
    prof[t] = integrated_profile(simulate_filtered(setup, scene, rx, fs), g, rx.kind, rx.who).bins;
    if (noise_from_separate_run) {
      noise[t] = integrated_profile(simulate_filtered_noise(setup, rx, fs), g, rx.kind, rx.who).bins;
    }
  });
  const int kappa = setup.alloc.structure ? setup.alloc.structure->kappa : 1;
  OutputSnrEstimator est(target_bin, noise_bin_mask(g.n, {target_bin}, kappa));
  for (std::size_t t = 0; t < prof.size(); ++t) {
    if (noise_from_separate_run) {
      est.add(prof[t], noise[t]);
    } else {
      est.add(prof[t]);
    }
  }
  return est.snr();
}

// --------------------------------------------------------------------------- fig2

ExperimentResult run_fig2(const ExperimentConfig& cfg, ObjectReader r, bool parse_only) {
  const double range = r.number("target_range_m");
  const double snr_db = r.number("input_snr_db");
  const auto sinrs = r.numbers("sinr_db", {});
  const double k_factor = r.number_or_inf("k_factor", 10.0);
  const bool perfect = r.boolean("include_perfect", true);
  r.finish();
  if (parse_only) return {};

  const Constellation c = make_constellation(cfg.constellation);
  const OfdmGrid& g = cfg.grid;
  RadarScene scene;
  scene.reflectors.push_back(reflector_at_range(g, range, db_to_linear(snr_db), 1.0));
  scene.validate(g);
  const int tb = static_cast<int>(std::lround(g.bin_for_range(range)));

  std::ostringstream csv;
  CsvWriter w(csv, {"reference_sinr_db", "gamma_mf_db", "gamma_rf_db"});
  ExperimentResult out;
  auto run_point = [&](const RicianRef& ref, const std::string& label_db) {
    const SensingSetup setup = make_setup(cfg, c, equal_allocation(g.n), ref);
    const double mf = empirical_output_snr(setup, scene, {Observer::Eve, ReceiverKind::MF}, tb,
                                           cfg.trials, cfg.seed, cfg.threads, false);
    const double rf = empirical_output_snr(setup, scene, {Observer::Eve, ReceiverKind::RF}, tb,
                                           cfg.trials, cfg.seed, cfg.threads, false);
    w.row(label_db, linear_to_db(mf), linear_to_db(rf));
    out.summary["points"].push_back(
        {{"reference_sinr_db", label_db}, {"gamma_mf_db", linear_to_db(mf)}, {"gamma_rf_db", linear_to_db(rf)}});
  };
  for (double s : sinrs) {
    run_point(RicianRef::from_sinr(db_to_linear(s), k_factor), fmt_db(s));
  }
  if (perfect) {
    RicianRef ideal;
    ideal.k_factor = std::numeric_limits<double>::infinity();
    ideal.noise_var = 0.0;
    run_point(ideal, "inf");
  }
  out.summary["processing_gain_db"] = linear_to_db(static_cast<double>(g.n) * g.m_sym);
  out.tables.push_back({"fig2_output_snr.csv", csv.str()});
  return out;
}

// --------------------------------------------------------------------------- fig4

ExperimentResult run_fig4(const ExperimentConfig& cfg, ObjectReader r, bool parse_only) {
  const auto specs = read_specs(r);
  r.finish();
  if (parse_only) return {};
  const Constellation c = make_constellation(cfg.constellation);
  const OfdmGrid& g = cfg.grid;
  std::ostringstream acf_csv, met_csv;
  CsvWriter acf(acf_csv, {"spec_id", "k", "range_m", "expected_sq", "expected_sq_db", "monte_carlo",
                          "monte_carlo_db", "std_error"});
  CsvWriter met(met_csv, {"spec_id", "alpha_frac", "num_peaks", "p", "q", "kappa", "psl_db_closed",
                          "isl_db_closed", "psl_db_mc", "isl_db_mc"});
  ExperimentResult out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const SecureAcfSpec spec{specs[i].first, specs[i].second};
    const PowerAllocation alloc = structured_allocation(spec, g.n);
    const AcfProfile closed = expected_sq_acf(alloc, c);
    const AcfProfile mc = monte_carlo_sq_acf(alloc, c, cfg.trials, derive_seed(cfg.seed, i));
    for (int k = 0; k < g.n; ++k) {
      acf.row(static_cast<int>(i), k, k * g.bin_range_m(), closed.squared[k],
              linear_to_db(closed.squared[k] / closed.squared[0]), mc.squared[k],
              linear_to_db(mc.squared[k] / mc.squared[0]), mc.std_error[k]);
    }
    const SecurityMetrics th = metrics_closed_form(spec, c);
    const SecurityMetrics em = metrics_from_profile(mc);
    met.row(static_cast<int>(i), spec.alpha_frac, spec.num_peaks, spec.p(), spec.q(), spec.kappa(),
            th.psl_db, th.isl_db, em.psl_db, em.isl_db);
    out.summary["specs"].push_back({{"alpha_frac", spec.alpha_frac},
                                    {"num_peaks", spec.num_peaks},
                                    {"psl_db_closed", th.psl_db},
                                    {"isl_db_closed", th.isl_db},
                                    {"psl_db_mc", em.psl_db},
                                    {"isl_db_mc", em.isl_db}});
  }
  out.tables.push_back({"fig4_acf.csv", acf_csv.str()});
  out.tables.push_back({"fig4_metrics.csv", met_csv.str()});
  return out;
}

// --------------------------------------------------------------------------- fig5

ExperimentResult run_fig5(const ExperimentConfig& cfg, ObjectReader r, bool parse_only) {
  const auto specs = read_specs(r);
  const double range = r.number("target_range_m");
  const double snr_db = r.number("input_snr_db");
  r.finish();
  if (parse_only) return {};
  const Constellation c = make_constellation(cfg.constellation);
  const OfdmGrid& g = cfg.grid;
  RadarScene scene;
  scene.reflectors.push_back(reflector_at_range(g, range, db_to_linear(snr_db), 1.0));
  scene.validate(g);
  const int tb = static_cast<int>(std::lround(g.bin_for_range(range)));

  std::ostringstream loss_csv, floor_csv;
  CsvWriter loss(loss_csv, {"spec_id", "alpha_frac", "num_peaks", "kappa", "loss_closed_db",
                            "gamma_mf_db", "gamma_rf_db", "loss_empirical_db"});
  CsvWriter floor(floor_csv, {"spec_id", "k", "range_m", "mf_floor_db", "rf_floor_db"});
  ExperimentResult out;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const SecureAcfSpec spec{specs[i].first, specs[i].second};
    const SensingSetup setup = make_setup(cfg, c, structured_allocation(spec, g.n), RicianRef{});
    const std::size_t trials = static_cast<std::size_t>(cfg.trials);
    std::vector<CVector> mf(trials), rf(trials), mf_noise(trials), rf_noise(trials);
    parallel_for(trials, cfg.threads, [&](std::size_t t) {
      const std::uint64_t fs = derive_seed(cfg.seed, t);
      const ReceiverChoice a_mf{Observer::Alice, ReceiverKind::MF}, a_rf{Observer::Alice, ReceiverKind::RF};
      mf[t] = integrated_profile(simulate_filtered(setup, scene, a_mf, fs), g, a_mf.kind, a_mf.who).bins;
      rf[t] = integrated_profile(simulate_filtered(setup, scene, a_rf, fs), g, a_rf.kind, a_rf.who).bins;
      mf_noise[t] = integrated_profile(simulate_filtered_noise(setup, a_mf, fs), g, a_mf.kind, a_mf.who).bins;
      rf_noise[t] = integrated_profile(simulate_filtered_noise(setup, a_rf, fs), g, a_rf.kind, a_rf.who).bins;
    });
    const auto mask = noise_bin_mask(g.n, {tb}, spec.kappa());
    OutputSnrEstimator est_mf(tb, mask), est_rf(tb, mask);
    RVector mf_floor = RVector::Zero(g.n), rf_floor = RVector::Zero(g.n);
    for (std::size_t t = 0; t < trials; ++t) {
      est_mf.add(mf[t], mf_noise[t]);
      est_rf.add(rf[t], rf_noise[t]);
      mf_floor += mf_noise[t].array().abs2().matrix();
      rf_floor += rf_noise[t].array().abs2().matrix();
    }
    mf_floor /= static_cast<double>(trials);
    rf_floor /= static_cast<double>(trials);
    const double closed = snr_loss_closed_form(setup.alloc, c);
    const double empirical = est_mf.snr() / est_rf.snr();
    loss.row(static_cast<int>(i), spec.alpha_frac, spec.num_peaks, spec.kappa(), linear_to_db(closed),
             linear_to_db(est_mf.snr()), linear_to_db(est_rf.snr()), linear_to_db(empirical));
    for (int k = 0; k < g.n; ++k) {
      floor.row(static_cast<int>(i), k, k * g.bin_range_m(),
                linear_to_db(mf_floor[k] / est_mf.signal_power()),
                linear_to_db(rf_floor[k] / est_rf.signal_power()));
    }
    out.summary["specs"].push_back({{"alpha_frac", spec.alpha_frac},
                                    {"num_peaks", spec.num_peaks},
                                    {"loss_closed_db", linear_to_db(closed)},
                                    {"loss_empirical_db", linear_to_db(empirical)}});
  }
  out.tables.push_back({"fig5_snr_loss.csv", loss_csv.str()});
  out.tables.push_back({"fig5_noise_floor.csv", floor_csv.str()});
  return out;
}

// --------------------------------------------------------------------------- fig6

ExperimentResult run_fig6(const ExperimentConfig& cfg, ObjectReader r, bool parse_only) {
  const auto kappas = r.integers("kappas", {});
  const auto qs = r.numbers("q", {});
  const double comm_snr_db = r.number("comm_snr_db");
  r.finish();
  if (parse_only) return {};
  const Constellation c = make_constellation(cfg.constellation);
  const auto rows = tradeoff_sweep(kappas, qs, c, flat_channel(cfg.grid.n, db_to_linear(comm_snr_db)),
                                   cfg.grid);
  std::ostringstream csv;
  write_tradeoff_csv(csv, rows);
  ExperimentResult out;
  out.summary["rows"] = rows.size();
  out.tables.push_back({"fig6_tradeoff.csv", csv.str()});
  return out;
}

// --------------------------------------------------------------------------- fig7

ExperimentResult run_fig7(const ExperimentConfig& cfg, ObjectReader r, bool parse_only) {
  const double eps_isl_db = r.number("eps_isl_db");
  const auto eps_psl_db = r.numbers("eps_psl_db", {});
  const auto rhos = r.numbers("rho", {});
  const double comm_snr_db = r.number("comm_snr_db");
  const std::string channel = r.string("channel", "rayleigh");
  if (channel != "rayleigh" && channel != "flat") r.fail("channel", "expected rayleigh or flat");
  std::optional<int> n0;
  if (const json* v = r.raw("n0")) {
    if (v->is_number_integer()) {
      n0 = v->get<int>();
    } else if (!(v->is_string() && v->get<std::string>() == "search")) {
      r.fail("n0", "expected \"search\" or an integer");
    }
  }
  r.finish();
  if (parse_only) return {};

  const Constellation c = make_constellation(cfg.constellation);
  const int n = cfg.grid.n;
  const CommChannel ch = channel == "flat" ? flat_channel(n, db_to_linear(comm_snr_db))
                                           : rayleigh_channel(n, db_to_linear(comm_snr_db),
                                                              derive_seed(cfg.seed, 7));
  std::ostringstream csv;
  CsvWriter w(csv, {"eps_psl_db", "rho", "kappa", "n0", "rate_bps", "snr_loss_db", "psl_db",
                    "isl_db", "objective"});
  ExperimentResult out;
  for (double psl_db : eps_psl_db) {
    for (double rho : rhos) {
      DesignRequest req;
      req.rho = rho;
      req.eps_psl = db_to_linear(psl_db);
      req.eps_isl = db_to_linear(eps_isl_db);
      req.constellation = c;
      req.grid = cfg.grid;
      req.channel = ch;
      req.n0 = n0;
      const DesignResult d = solve_p2(req);
      w.row(psl_db, rho, d.kappa, d.n0, d.predicted.rate, linear_to_db(d.predicted.snr_loss),
            linear_to_db(d.predicted.psl), linear_to_db(d.predicted.isl), d.objective_value);
      out.summary["kappa"] = d.kappa;
    }
  }
  out.tables.push_back({"fig7_frontier.csv", csv.str()});
  return out;
}

// --------------------------------------------------------------------------- fig8

ExperimentResult run_fig8(const ExperimentConfig& cfg, ObjectReader r, bool parse_only) {
  const auto ranges = r.numbers("target_ranges_m", {});
  const auto snrs = r.numbers("target_snr_db", {});
  if (ranges.size() != snrs.size()) r.fail("target_snr_db", "needs one SNR per target range");
  const SecureDesign design = read_design(r);
  const EveLink link = read_eve_link(r);
  int credit = 1;
  const CfarConfig cfar = read_cfar(r, credit);
  r.finish();
  if (parse_only) return {};

  const Constellation c = make_constellation(cfg.constellation);
  const OfdmGrid& g = cfg.grid;
  Rng phases(derive_seed(cfg.seed, 11));
  RadarScene scene;
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    scene.reflectors.push_back(reflector_at_range(g, ranges[i], db_to_linear(snrs[i]), 1.0,
                                                  ReflectorKind::Target, 2.0 * kPi * phases.uniform()));
  }
  scene.validate(g);
  const PowerAllocation secure = secure_allocation(cfg, c, design.eps_psl_db, design.eps_isl_db.front(),
                                                   design.rho, design.comm_snr_db);

  std::ostringstream det_csv;
  CsvWriter det(det_csv, {"map", "target_range_m", "target_snr_db", "detected"});
  ExperimentResult out;
  const std::vector<std::pair<std::string, PowerAllocation>> waveforms{
      {"plain", equal_allocation(g.n)}, {"secure", secure}};
  const std::vector<ReceiverChoice> receivers{{Observer::Alice, ReceiverKind::RF},
                                              {Observer::Eve, ReceiverKind::MF}};
  for (const auto& rx : receivers) {
    for (const auto& [wid, alloc] : waveforms) {
      const SensingSetup setup = make_setup(cfg, c, alloc, link.reference());
      const CMatrix filtered = simulate_filtered(setup, scene, rx, cfg.seed);
      const RangeDopplerMap map = rd_map(filtered, g, rx.kind, rx.who);
      const std::string name = label(rx) + "_" + wid;
      const double peak = map.cells.cwiseAbs2().maxCoeff();
      std::ostringstream csv;
      CsvWriter w(csv, {"range_bin", "range_m", "doppler_bin", "doppler_hz", "power_db"});
      for (int k = 0; k < g.n; ++k) {
        for (Eigen::Index d = 0; d < map.cells.cols(); ++d) {
          w.row(k, map.range_axis_m[k], static_cast<int>(d), map.doppler_axis_hz[d],
                linear_to_db(std::norm(map.cells(k, d)) / peak));
        }
      }
      out.tables.push_back({"fig8_rd_" + name + ".csv", csv.str()});

      const RVector cut = map.zero_doppler().array().abs2();
      const auto found = ca_cfar(std::span<const double>(cut.data(), static_cast<std::size_t>(g.n)), cfar);
      int hits = 0;
      std::vector<bool> explained(found.detected_bins.size(), false);
      for (std::size_t i = 0; i < ranges.size(); ++i) {
        const double tb = std::round(g.bin_for_range(ranges[i]));
        bool hit = false;
        for (std::size_t j = 0; j < found.detected_bins.size(); ++j) {
          if (dsp::circular_distance(found.detected_bins[j], tb, g.n) <= credit) {
            hit = true;
            explained[j] = true;
          }
        }
        hits += hit ? 1 : 0;
        det.row(name, ranges[i], snrs[i], hit ? 1 : 0);
      }
      const auto spurious = std::count(explained.begin(), explained.end(), false);
      out.summary["maps"][name] = {{"targets_detected", hits},
                                   {"targets", ranges.size()},
                                   {"spurious_detections", spurious}};
    }
  }
  out.tables.push_back({"fig8_detections.csv", det_csv.str()});
  return out;
}

// --------------------------------------------------------------------------- fig9 / fig1R

ExperimentResult run_detection(const ExperimentConfig& cfg, ObjectReader r, bool eve_rf_study,
                               bool parse_only) {
  const double clutter_range = r.number("clutter_range_m");
  const double clutter_snr_db = r.number("clutter_snr_db");
  const double target_range = r.number("target_range_m");
  const auto snr_grid = r.numbers("snr_db", {});
  const SecureDesign design = read_design(r);
  const EveLink link = read_eve_link(r);
  int credit = 1;
  const CfarConfig cfar = read_cfar(r, credit);
  r.finish();
  if (parse_only) return {};

  const Constellation c = make_constellation(cfg.constellation);
  const OfdmGrid& g = cfg.grid;
  std::vector<std::pair<std::string, PowerAllocation>> waveforms{{"plain", equal_allocation(g.n)}};
  for (double isl_db : design.eps_isl_db) {
    waveforms.emplace_back("secure_isl" + fmt_db(isl_db) + "dB",
                           secure_allocation(cfg, c, design.eps_psl_db, isl_db, design.rho,
                                             design.comm_snr_db));
  }
  const std::vector<ReceiverChoice> receivers =
      eve_rf_study ? std::vector<ReceiverChoice>{{Observer::Eve, ReceiverKind::MF}, {Observer::Eve, ReceiverKind::RF}}
                   : std::vector<ReceiverChoice>{{Observer::Alice, ReceiverKind::RF}, {Observer::Eve, ReceiverKind::MF}};

  std::ostringstream csv;
  csv << "snr_db,pd,ci_low,ci_high,receiver,waveform_id\n";
  ExperimentResult out;
  for (const auto& rx : receivers) {
    for (const auto& [wid, alloc] : waveforms) {
      PdScenario sc;
      sc.setup = make_setup(cfg, c, alloc, link.reference());
      sc.clutter = {{clutter_range, db_to_linear(clutter_snr_db)}};
      sc.target_range_m = target_range;
      sc.rx = rx;
      sc.waveform_id = wid;
      sc.credit_bins = credit;
      const auto curve = pd_curve(sc, cfar, snr_grid, cfg.trials, cfg.seed, cfg.threads);
      write_pd_csv(csv, curve, label(rx), wid, false);
      const double s90 = snr_at_pd(curve, 0.9);
      out.summary["snr_at_pd90_db"][label(rx) + "/" + wid] = std::isnan(s90) ? json(nullptr) : json(s90);
      if (alloc.structure) {
        const SecurityMetrics m = metrics_from_profile(expected_sq_acf_exact(alloc, c));
        out.summary["waveforms"][wid] = {{"kappa", alloc.structure->kappa},
                                         {"psl_db", m.psl_db},
                                         {"isl_db", m.isl_db},
                                         {"snr_loss_db", linear_to_db(snr_loss_closed_form(alloc, c))}};
      }
    }
  }
  out.tables.push_back({std::string(eve_rf_study ? "fig1R" : "fig9") + "_pd.csv", csv.str()});
  return out;
}

// --------------------------------------------------------------------------- fig10 / fig11

RmseReport rmse_point(const ExperimentConfig& cfg, const Constellation& c, const PowerAllocation& alloc,
                      const EveLink& link, const MusicParams& mp, double strong_snr_db) {
  RmseScenario sc;
  sc.setup = make_setup(cfg, c, alloc, link.reference());
  sc.music = mp.music;
  sc.sampler = two_target_sampler(cfg.grid, db_to_linear(strong_snr_db), db_to_linear(mp.gap_low_db),
                                  db_to_linear(mp.gap_high_db), mp.min_range_m, mp.max_range_m,
                                  mp.min_separation_m);
  return rmse_experiment(sc, cfg.trials, cfg.seed, cfg.threads);
}

ExperimentResult run_fig10(const ExperimentConfig& cfg, ObjectReader r, bool parse_only) {
  const auto snr_grid = r.numbers("snr_db", {});
  const SecureDesign design = read_design(r);
  const EveLink link = read_eve_link(r);
  const MusicParams mp = read_music(r);
  r.finish();
  if (parse_only) return {};
  const Constellation c = make_constellation(cfg.constellation);
  const OfdmGrid& g = cfg.grid;
  const PowerAllocation secure = secure_allocation(cfg, c, design.eps_psl_db, design.eps_isl_db.front(),
                                                   design.rho, design.comm_snr_db);
  const double gain_db = linear_to_db(static_cast<double>(g.n) * g.m_sym);
  std::ostringstream csv;
  CsvWriter w(csv, {"waveform_id", "snr_db", "post_snr_db", "rmse_alice_m", "rmse_eve_m", "gap_m",
                    "ci_gap_m", "eve_replica_lock_fraction"});
  ExperimentResult out;
  for (const auto& [wid, alloc] :
       std::vector<std::pair<std::string, PowerAllocation>>{{"plain", equal_allocation(g.n)}, {"secure", secure}}) {
    for (double s : snr_grid) {
      const RmseReport rep = rmse_point(cfg, c, alloc, link, mp, s);
      w.row(wid, s, s + gain_db, rep.rmse_alice_m, rep.rmse_eve_m, rep.gap_m, rep.ci_gap_m,
            rep.eve_replica_lock_fraction);
      out.summary[wid].push_back({{"snr_db", s}, {"gap_m", rep.gap_m}});
    }
  }
  out.tables.push_back({"fig10_rmse.csv", csv.str()});
  return out;
}

ExperimentResult run_fig11(const ExperimentConfig& cfg, ObjectReader r, bool parse_only) {
  const double snr_db = r.number("snr_db");
  const auto kappas = r.integers("kappas", {});
  const auto eps_psl_db = r.numbers("eps_psl_db", {});
  const double comm_snr_db = r.number("comm_snr_db");
  const EveLink link = read_eve_link(r);
  const MusicParams mp = read_music(r);
  r.finish();
  if (parse_only) return {};
  const Constellation c = make_constellation(cfg.constellation);
  const OfdmGrid& g = cfg.grid;
  const CommChannel ch = flat_channel(g.n, db_to_linear(comm_snr_db));
  std::ostringstream csv;
  CsvWriter w(csv, {"kappa", "eps_psl_db", "q", "rate_bps", "snr_loss_db", "rmse_alice_m", "rmse_eve_m",
                    "gap_m", "ci_gap_m"});
  ExperimentResult out;
  for (int kappa : kappas) {
    for (double psl_db : eps_psl_db) {
      const double q = 1.0 - std::sqrt(db_to_linear(psl_db));
      const PowerAllocation alloc = structured_allocation(SecureAcfSpec::from_kappa_q(kappa, q), g.n);
      const RmseReport rep = rmse_point(cfg, c, alloc, link, mp, snr_db);
      w.row(kappa, psl_db, q, rate(alloc.power, ch, g), linear_to_db(snr_loss_closed_form(alloc, c)),
            rep.rmse_alice_m, rep.rmse_eve_m, rep.gap_m, rep.ci_gap_m);
    }
  }
  out.tables.push_back({"fig11_gap.csv", csv.str()});
  return out;
}

using Runner = ExperimentResult (*)(const ExperimentConfig&, ObjectReader, bool);

ExperimentResult run_fig9(const ExperimentConfig& cfg, ObjectReader r, bool parse_only) { return run_detection(cfg, std::move(r), false, parse_only); }
ExperimentResult run_fig1r(const ExperimentConfig& cfg, ObjectReader r, bool parse_only) { return run_detection(cfg, std::move(r), true, parse_only); }

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> table{
      {"fig2", run_fig2},   {"fig4", run_fig4},   {"fig5", run_fig5},   {"fig6", run_fig6},
      {"fig7", run_fig7},   {"fig8", run_fig8},   {"fig9", run_fig9},   {"fig10", run_fig10},
      {"fig11", run_fig11}, {"fig1R", run_fig1r}};
  return table;
}

std::string default_constellation(const std::string& id) { return id == "fig2" ? "QPSK" : "16QAM"; }

std::string hex(const unsigned char* data, unsigned len) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (unsigned i = 0; i < len; ++i) {
    s.push_back(digits[data[i] >> 4]);
    s.push_back(digits[data[i] & 0xF]);
  }
  return s;
}

std::string sha1_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha1(), nullptr) != 1) {
    throw Error("SHA-1 digest failed");
  }
  return hex(md, len);
}

}  // namespace

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids{"fig2", "fig4",  "fig5",  "fig6", "fig7",
                                            "fig8", "fig9", "fig10", "fig11", "fig1R"};
  return ids;
}

ExperimentConfig default_config(const std::string& experiment) {
  ExperimentConfig cfg;
  cfg.params = default_params(experiment);
  cfg.experiment = experiment;
  cfg.constellation = default_constellation(experiment);
  if (experiment == "fig4") cfg.grid.n = 64;
  return cfg;
}

ExperimentConfig config_from_json(const io::JsonDocument& source, const std::string& experiment) {
  auto doc = std::make_shared<io::JsonDocument>(source);
  ObjectReader r(doc->root, "", doc);
  const int version = r.integer("schema_version", kSchemaVersion);
  if (version != kSchemaVersion) r.fail("schema_version", "unsupported schema version");
  std::string id = r.string("experiment", experiment);
  if (!experiment.empty() && id != experiment) r.fail("experiment", "does not match the requested experiment " + experiment);
  if (id.empty()) r.fail("experiment", "required key is missing");
  if (!runners().count(id)) r.fail("experiment", "unknown experiment id '" + id + "'");

  ExperimentConfig cfg = default_config(id);
  cfg.seed = r.unsigned_integer("seed", cfg.seed);
  cfg.trials = r.integer("trials", cfg.trials);
  cfg.threads = r.integer("threads", cfg.threads);
  if (cfg.trials < 2) r.fail("trials", "must be at least 2");
  if (cfg.threads < 0) r.fail("threads", "must be non-negative");
  cfg.grid = io::grid_from_json(r.object("grid"));
  cfg.constellation = r.string("constellation", cfg.constellation);
  try {
    make_constellation(cfg.constellation);
  } catch (const NameError& e) {
    r.fail("constellation", e.what());
  }
  if (const json* p = r.raw("params")) {
    if (!p->is_object()) r.fail("params", "expected an object");
    for (auto it = p->begin(); it != p->end(); ++it) cfg.params[it.key()] = it.value();
  }
  r.finish();
  // Runners read and range-check every param before doing any work.
  runners().at(id)(cfg, ObjectReader(cfg.params, "params", doc), true);
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  return {{"schema_version", cfg.schema_version},
          {"experiment", cfg.experiment},
          {"seed", cfg.seed},
          {"trials", cfg.trials},
          {"threads", cfg.threads},
          {"grid", io::to_json(cfg.grid)},
          {"constellation", cfg.constellation},
          {"params", cfg.params}};
}

void apply_override(json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object()) throw ConfigError("override key '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("threads");
  return sha1_hex(j.dump());
}

std::string git_blob_sha1(std::string_view content) {
  std::string blob = "blob " + std::to_string(content.size());
  blob.push_back('\0');
  blob.append(content);
  return sha1_hex(blob);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const auto it = runners().find(cfg.experiment);
  if (it == runners().end()) throw ConfigError("unknown experiment id '" + cfg.experiment + "'");
  auto doc = std::make_shared<io::JsonDocument>();
  doc->root = cfg.params;
  doc->text = cfg.params.dump(2);
  doc->origin = "params";
  return it->second(cfg, ObjectReader(doc->root, "params", doc), false);
}

RunRecord run_and_write(const ExperimentConfig& cfg, const std::filesystem::path& out_root) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentResult result = run_experiment(cfg);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const std::string hash = config_hash(cfg);
  RunRecord rec;
  rec.dir = out_root / cfg.experiment / hash.substr(0, 12);
  std::filesystem::create_directories(rec.dir);

  std::vector<Table> files = result.tables;
  json cfg_json = to_json(cfg);
  cfg_json.erase("threads");
  files.push_back({"config.json", cfg_json.dump(2) + "\n"});
  files.push_back({"summary.json", result.summary.dump(2) + "\n"});

  json listing = json::array();
  std::string tree;
  for (const auto& f : files) {
    std::ofstream os(rec.dir / f.name, std::ios::binary);
    if (!os) throw Error("cannot write " + (rec.dir / f.name).string());
    os << f.csv;
    const std::string sha = git_blob_sha1(f.csv);
    listing.push_back({{"name", f.name}, {"bytes", f.csv.size()}, {"sha1", sha}});
    tree += sha + "  " + f.name + "\n";
  }
  rec.manifest = {{"schema_version", kSchemaVersion},
                  {"tool", kToolVersion},
                  {"experiment", cfg.experiment},
                  {"config_hash", hash},
                  {"seed", cfg.seed},
                  {"trials", cfg.trials},
                  {"threads", resolve_threads(cfg.threads)},
                  {"files", listing},
                  {"content_hash", git_blob_sha1(tree)},
                  {"wall_time_s", wall}};
  std::ofstream(rec.dir / "manifest.json") << rec.manifest.dump(2) << "\n";
  return rec;
}

}  // namespace afs
