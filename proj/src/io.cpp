#include "afshape/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "afshape/constellation.hpp"
#include "afshape/errors.hpp"

namespace afs::io {

int JsonDocument::line_of(const std::string& key) const {
  const std::string needle = "\"" + key + "\"";
  const auto pos = text.find(needle);
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
}

JsonDocument parse_json(const std::string& text, const std::string& origin) {
  JsonDocument doc;
  doc.text = text;
  doc.origin = origin;
  try {
    doc.root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return doc;
}

JsonDocument load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_json(ss.str(), path);
}

ObjectReader::ObjectReader(const json& object, std::string path,
                           std::shared_ptr<const JsonDocument> doc)
    : object_(object), path_(std::move(path)), doc_(std::move(doc)) {
  if (!object_.is_object()) {
    const std::string where = path_.empty() ? "document root" : path_;
    throw ConfigError((doc_ ? doc_->origin : std::string("<config>")) + ": " + where +
                      " must be a JSON object");
  }
}

void ObjectReader::fail(const std::string& key, const std::string& message) const {
  std::ostringstream msg;
  msg << (doc_ ? doc_->origin : std::string("<config>"));
  const int line = doc_ ? doc_->line_of(key) : 0;
  if (line > 0) msg << ':' << line;
  msg << ": " << (path_.empty() ? key : path_ + "." + key) << ": " << message;
  throw ConfigError(msg.str());
}

bool ObjectReader::has(const std::string& key) const { return object_.contains(key); }

const json* ObjectReader::fetch(const std::string& key) {
  known_.insert(key);
  const auto it = object_.find(key);
  return it == object_.end() ? nullptr : &*it;
}

const json* ObjectReader::raw(const std::string& key) { return fetch(key); }

double ObjectReader::number(const std::string& key, double fallback) {
  const json* v = fetch(key);
  if (!v) return fallback;
  if (!v->is_number()) fail(key, "expected a number");
  return v->get<double>();
}

double ObjectReader::number(const std::string& key) {
  if (!has(key)) fail(key, "required key is missing");
  return number(key, 0.0);
}

double ObjectReader::number_or_inf(const std::string& key, double fallback) {
  const json* v = fetch(key);
  if (!v) return fallback;
  if (v->is_null()) return std::numeric_limits<double>::infinity();
  if (!v->is_number()) fail(key, "expected a number or null");
  return v->get<double>();
}

int ObjectReader::integer(const std::string& key, int fallback) {
  const json* v = fetch(key);
  if (!v) return fallback;
  if (!v->is_number_integer()) fail(key, "expected an integer");
  return v->get<int>();
}

std::uint64_t ObjectReader::unsigned_integer(const std::string& key, std::uint64_t fallback) {
  const json* v = fetch(key);
  if (!v) return fallback;
  if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
    fail(key, "expected a non-negative integer");
  }
  return v->get<std::uint64_t>();
}

bool ObjectReader::boolean(const std::string& key, bool fallback) {
  const json* v = fetch(key);
  if (!v) return fallback;
  if (!v->is_boolean()) fail(key, "expected true or false");
  return v->get<bool>();
}

std::string ObjectReader::string(const std::string& key, const std::string& fallback) {
  const json* v = fetch(key);
  if (!v) return fallback;
  if (!v->is_string()) fail(key, "expected a string");
  return v->get<std::string>();
}

std::vector<double> ObjectReader::numbers(const std::string& key, const std::vector<double>& fallback) {
  const json* v = fetch(key);
  if (!v) return fallback;
  if (v->is_number()) return {v->get<double>()};
  if (!v->is_array()) fail(key, "expected a number or an array of numbers");
  std::vector<double> out;
  for (const auto& e : *v) {
    if (!e.is_number()) fail(key, "array entries must be numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<int> ObjectReader::integers(const std::string& key, const std::vector<int>& fallback) {
  const json* v = fetch(key);
  if (!v) return fallback;
  if (v->is_number_integer()) return {v->get<int>()};
  if (!v->is_array()) fail(key, "expected an integer or an array of integers");
  std::vector<int> out;
  for (const auto& e : *v) {
    if (!e.is_number_integer()) fail(key, "array entries must be integers");
    out.push_back(e.get<int>());
  }
  return out;
}

ObjectReader ObjectReader::object(const std::string& key) {
  static const json kEmpty = json::object();
  const json* v = fetch(key);
  if (!v) return ObjectReader(kEmpty, path_.empty() ? key : path_ + "." + key, doc_);
  if (!v->is_object()) fail(key, "expected an object");
  return ObjectReader(*v, path_.empty() ? key : path_ + "." + key, doc_);
}

void ObjectReader::finish() const {
  for (auto it = object_.begin(); it != object_.end(); ++it) {
    if (!known_.count(it.key())) fail(it.key(), "unknown key");
  }
}

namespace {

std::shared_ptr<const JsonDocument> wrap(const json& j) {
  auto doc = std::make_shared<JsonDocument>();
  doc->root = j;
  doc->text = j.dump(2);
  return doc;
}

}  // namespace

json to_json(const PowerAllocation& alloc) {
  json j;
  j["n"] = alloc.n();
  j["power"] = std::vector<double>(alloc.power.data(), alloc.power.data() + alloc.power.size());
  if (alloc.structure) {
    const auto& s = *alloc.structure;
    j["structure"] = {{"p", s.p}, {"q", s.q}, {"kappa", s.kappa}, {"n0", s.n0}, {"jitter", s.jitter}};
  }
  return j;
}

PowerAllocation allocation_from_json(ObjectReader r) {
  PowerAllocation a;
  const auto power = r.numbers("power", {});
  if (power.empty()) r.fail("power", "required non-empty array");
  const int n = r.integer("n", static_cast<int>(power.size()));
  if (n != static_cast<int>(power.size())) r.fail("n", "does not match the length of power");
  a.power = Eigen::Map<const RVector>(power.data(), static_cast<Eigen::Index>(power.size()));
  if (r.has("structure")) {
    ObjectReader s = r.object("structure");
    AllocationStructure st;
    st.p = s.number("p");
    st.q = s.number("q");
    st.kappa = s.integer("kappa", 1);
    st.n0 = s.integer("n0", 1);
    st.jitter = s.number("jitter", 0.0);
    s.finish();
    a.structure = st;
  }
  r.finish();
  return a;
}

PowerAllocation allocation_from_json(const json& j) {
  auto doc = wrap(j);
  return allocation_from_json(ObjectReader(doc->root, "", doc));
}

json to_json(const OfdmGrid& g) {
  return {{"n", g.n}, {"n_cp", g.n_cp}, {"bandwidth_hz", g.bandwidth_hz}, {"m_sym", g.m_sym}};
}

OfdmGrid grid_from_json(ObjectReader r) {
  OfdmGrid g;
  g.n = r.integer("n", g.n);
  g.n_cp = r.integer("n_cp", g.n_cp);
  g.bandwidth_hz = r.number("bandwidth_hz", g.bandwidth_hz);
  g.m_sym = r.integer("m_sym", g.m_sym);
  r.finish();
  if (g.n < 2) r.fail("n", "must be at least 2");
  if (g.n_cp < 0 || g.n_cp > g.n) r.fail("n_cp", "must lie in [0, n]");
  if (!(g.bandwidth_hz > 0.0)) r.fail("bandwidth_hz", "must be positive");
  if (g.m_sym < 1) r.fail("m_sym", "must be positive");
  return g;
}

CommChannel channel_from_json(ObjectReader r, int n) {
  const std::string type = r.string("type", "flat");
  CommChannel ch;
  if (type == "flat") {
    ch = flat_channel(n, db_to_linear(r.number("snr_db", 10.0)));
  } else if (type == "rayleigh") {
    ch = rayleigh_channel(n, db_to_linear(r.number("snr_db", 10.0)), r.unsigned_integer("seed", 1));
  } else if (type == "custom") {
    const auto re = r.numbers("gains_re", {});
    const auto im = r.numbers("gains_im", std::vector<double>(re.size(), 0.0));
    if (static_cast<int>(re.size()) != n || im.size() != re.size()) {
      r.fail("gains_re", "custom gains must have exactly N entries");
    }
    ch.gains.resize(n);
    for (int i = 0; i < n; ++i) ch.gains[i] = cd(re[i], im[i]);
    ch.noise_var = r.number("noise_var", 1.0);
  } else {
    r.fail("type", "expected flat, rayleigh or custom");
  }
  r.finish();
  return ch;
}

json to_json(const CommChannel& ch) {
  std::vector<double> re(ch.n()), im(ch.n());
  for (int i = 0; i < ch.n(); ++i) {
    re[i] = ch.gains[i].real();
    im[i] = ch.gains[i].imag();
  }
  return {{"type", "custom"}, {"gains_re", re}, {"gains_im", im}, {"noise_var", ch.noise_var}};
}

DesignRequest design_request_from_json(const JsonDocument& source) {
  auto doc = std::make_shared<JsonDocument>(source);
  ObjectReader r(doc->root, "", doc);
  DesignRequest req;
  r.integer("schema_version", 1);
  req.rho = r.number("rho", req.rho);
  req.eps_psl = db_to_linear(r.number("eps_psl_db", linear_to_db(req.eps_psl)));
  req.eps_isl = db_to_linear(r.number("eps_isl_db", linear_to_db(req.eps_isl)));
  try {
    req.constellation = make_constellation(r.string("constellation", "16QAM"));
  } catch (const NameError& e) {
    r.fail("constellation", e.what());
  }
  req.grid = grid_from_json(r.object("grid"));
  req.channel = channel_from_json(r.object("channel"), req.grid.n);
  if (const json* n0 = r.raw("n0")) {
    if (n0->is_string() && n0->get<std::string>() == "search") {
      req.n0.reset();
    } else if (n0->is_number_integer()) {
      req.n0 = n0->get<int>();
    } else {
      r.fail("n0", "expected \"search\" or an integer");
    }
  } else {
    req.n0 = 1;
  }
  req.power_floor = r.number("power_floor", req.power_floor);
  ObjectReader solver = r.object("solver");
  req.solver.tolerance = solver.number("tolerance", req.solver.tolerance);
  req.solver.max_iterations = solver.integer("max_iterations", req.solver.max_iterations);
  req.solver.accept_tolerance = solver.number("accept_tolerance", req.solver.accept_tolerance);
  solver.finish();
  r.finish();
  if (!(req.rho >= 0.0 && req.rho <= 1.0)) r.fail("rho", "must lie in [0, 1]");
  return req;
}

json to_json(const DesignRequest& req) {
  json j;
  j["rho"] = req.rho;
  j["eps_psl_db"] = linear_to_db(req.eps_psl);
  j["eps_isl_db"] = linear_to_db(req.eps_isl);
  j["constellation"] = req.constellation.name;
  j["grid"] = to_json(req.grid);
  j["channel"] = to_json(req.channel);
  j["n0"] = req.n0 ? json(*req.n0) : json("search");
  j["power_floor"] = req.power_floor;
  j["solver"] = {{"tolerance", req.solver.tolerance},
                 {"max_iterations", req.solver.max_iterations},
                 {"accept_tolerance", req.solver.accept_tolerance}};
  return j;
}

json to_json(const DesignResult& r) {
  json j;
  j["alloc"] = to_json(r.alloc);
  j["kappa"] = r.kappa;
  j["n0"] = r.n0;
  j["complement_budget"] = r.budget;
  j["predicted"] = {{"rate_bps", r.predicted.rate},
                    {"snr_loss", r.predicted.snr_loss},
                    {"snr_loss_db", linear_to_db(r.predicted.snr_loss)},
                    {"psl", r.predicted.psl},
                    {"psl_db", linear_to_db(r.predicted.psl)},
                    {"isl", r.predicted.isl},
                    {"isl_db", linear_to_db(r.predicted.isl)}};
  j["objective_value"] = r.objective_value;
  j["normalizers"] = {{"snr_loss_min", r.snr_loss_normalizer}, {"rate_max_bps", r.rate_normalizer}};
  j["slack"] = {{"psl", r.psl_slack}, {"isl", r.isl_slack}};
  j["solver"] = {{"iterations", r.trace.iterations},
                 {"pg_norm", r.trace.pg_norm},
                 {"converged", r.trace.converged}};
  return j;
}

RadarScene scene_from_json(ObjectReader r, const OfdmGrid& grid, double noise_var) {
  RadarScene scene;
  const json* list = r.raw("reflectors");
  if (!list || !list->is_array()) r.fail("reflectors", "expected an array of reflectors");
  for (std::size_t i = 0; i < list->size(); ++i) {
    ObjectReader e((*list)[i], "reflectors[" + std::to_string(i) + "]", r.document());
    const double range = e.number("range_m");
    const double snr = db_to_linear(e.number("snr_db", 0.0));
    const std::string kind = e.string("kind", "target");
    if (kind != "target" && kind != "clutter") e.fail("kind", "expected target or clutter");
    const double phase = e.number("phase_rad", 0.0);
    e.finish();
    scene.reflectors.push_back(reflector_at_range(
        grid, range, snr, noise_var, kind == "target" ? ReflectorKind::Target : ReflectorKind::Clutter,
        phase));
  }
  r.finish();
  scene.validate(grid);
  return scene;
}

}  // namespace afs::io
