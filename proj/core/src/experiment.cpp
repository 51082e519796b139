#include "mslab/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "mslab/error.hpp"
#include "mslab/estimators.hpp"
#include "mslab/metric.hpp"
#include "mslab/parallel.hpp"
#include "mslab/random.hpp"

#ifndef MSLAB_VERSION
#define MSLAB_VERSION "0.0.0"
#endif

namespace mslab {

const char* version() { return MSLAB_VERSION; }

namespace {

const std::set<std::string> kKeys{"experiment", "laws",  "joint",  "base",  "strategy", "sampler", "N",
                                  "m",          "delta", "R",      "epsilon", "t",      "samples", "inner_samples",
                                  "budget",     "paths", "steps",  "spike", "seed",     "workers"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Splits on commas outside parentheses and brackets.
std::vector<std::string> split_top_level(const std::string& s) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(' || c == '[') ++depth;
    if (c == ')' || c == ']') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

std::vector<std::string> list_items(const std::string& key, const std::string& value) {
  std::string v = trim(value);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') throw ConfigError(key + ": unterminated array");
    v = v.substr(1, v.size() - 2);
  }
  auto items = split_top_level(v);
  for (const auto& it : items)
    if (it.empty()) throw ConfigError(key + ": empty array element");
  return items;
}

double to_double(const std::string& key, const std::string& s) {
  if (s == "inf" || s == "infinity" || s == "+inf") return std::numeric_limits<double>::infinity();
  double x = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ConfigError(key + ": '" + s + "' is not a number");
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& s) {
  std::uint64_t x = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ConfigError(key + ": '" + s + "' is not a nonnegative integer");
  return x;
}

int to_int(const std::string& key, const std::string& s) {
  int x = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ConfigError(key + ": '" + s + "' is not an integer");
  return x;
}

template <class T, class F>
std::vector<T> parse_list(const std::string& key, const std::string& value, F convert) {
  std::vector<T> out;
  for (const auto& it : list_items(key, value)) out.push_back(convert(key, it));
  return out;
}

struct Strategy {
  BaseTupleStrategy::Kind kind = BaseTupleStrategy::Kind::Diagonalized;
  int count = 1;
};

Strategy parse_strategy(const std::string& s) {
  if (s == "diagonalized") return {};
  if (s == "fixed") return {BaseTupleStrategy::Kind::Fixed, 1};
  const std::string prefix = "best_of_random";
  if (s.rfind(prefix, 0) == 0) {
    std::string rest = trim(s.substr(prefix.size()));
    if (rest.empty()) return {BaseTupleStrategy::Kind::BestOfRandom, 1};
    if (rest.front() == '(' && rest.back() == ')') {
      const int k = to_int("strategy", trim(rest.substr(1, rest.size() - 2)));
      if (k < 1) throw ConfigError("strategy: best_of_random needs k >= 1");
      return {BaseTupleStrategy::Kind::BestOfRandom, k};
    }
  }
  throw ConfigError("strategy: expected diagonalized, fixed or best_of_random(k), got '" + s + "'");
}

// ---------------------------------------------------------------------------
// Laws

struct LawSet {
  std::vector<NCLaw> marginals;
  NCLaw joint;
};

NCLaw load_joint_file(const ExperimentConfig& cfg) { return law_from_json(read_json_file(cfg.joint.substr(5))); }

bool joint_from_file(const ExperimentConfig& cfg) { return cfg.joint.rfind("file:", 0) == 0; }

LawSet build_laws(const ExperimentConfig& cfg, int degree) {
  LawSet s;
  if (joint_from_file(cfg)) {
    const NCLaw file = load_joint_file(cfg);
    if (file.max_degree() < degree)
      throw InvalidInput("joint law file covers degree " + std::to_string(file.max_degree()) + ", need " +
                         std::to_string(degree));
    s.joint = restrict_degree(file, degree);
    for (std::size_t g = 0; g < cfg.laws.size() && static_cast<int>(g) < s.joint.alphabet().group_count(); ++g) {
      if (s.joint.alphabet().arity(static_cast<int>(g)) != 1) continue;
      s.joint.set_distribution(static_cast<int>(g), standard_law(cfg.laws[g], 1).distribution(0));
    }
    s.marginals = group_marginals(s.joint);
    return s;
  }
  for (const auto& spec : cfg.laws) s.marginals.push_back(standard_law(spec, degree));
  s.joint = free_product_law(s.marginals, degree);
  return s;
}

BaseTupleStrategy make_strategy(const ExperimentConfig& cfg) {
  const Strategy st = parse_strategy(cfg.strategy);
  switch (st.kind) {
    case BaseTupleStrategy::Kind::Fixed:
      return BaseTupleStrategy::fixed_bases({base_from_json(read_json_file(cfg.base))});
    case BaseTupleStrategy::Kind::BestOfRandom:
      return BaseTupleStrategy::best_of_random(st.count, cfg.budget);
    case BaseTupleStrategy::Kind::Diagonalized:
      break;
  }
  return BaseTupleStrategy::diagonalized();
}

UnitarySampler make_sampler(const ExperimentConfig& cfg) {
  return cfg.sampler == "su" ? UnitarySampler::RotatedSpecialUnitary : UnitarySampler::Haar;
}

// ---------------------------------------------------------------------------
// Grid

enum Axis : unsigned { kAxisN = 1, kAxisM = 2, kAxisDelta = 4, kAxisR = 8, kAxisEps = 16, kAxisT = 32 };

unsigned axes_of(const std::string& experiment) {
  if (experiment == "freeness-scan") return kAxisN | kAxisM | kAxisDelta;
  if (experiment == "brownian-moments") return kAxisN | kAxisT;
  if (experiment == "brownian-dimension-proxy") return kAxisN | kAxisM | kAxisDelta | kAxisEps;
  return kAxisN | kAxisM | kAxisDelta | kAxisR;
}

struct GridPoint {
  int n = 1;
  int m = 1;
  double delta = 0.0;
  double radius = std::numeric_limits<double>::infinity();
  double epsilon = 0.0;
  double t = 0.0;
  MicrostateParams params() const { return {n, m, delta, radius}; }
};

std::vector<GridPoint> make_grid(const ExperimentConfig& cfg) {
  const unsigned ax = axes_of(cfg.experiment);
  auto axis = [&](unsigned bit, const auto& values, auto fallback) {
    using V = typename std::decay_t<decltype(values)>::value_type;
    return (ax & bit) ? values : std::vector<V>{static_cast<V>(fallback)};
  };
  const auto ns = axis(kAxisN, cfg.N, 1);
  const auto ms = axis(kAxisM, cfg.m, 1);
  const auto ds = axis(kAxisDelta, cfg.delta, 0.0);
  const auto rs = axis(kAxisR, cfg.R, std::numeric_limits<double>::infinity());
  const auto es = axis(kAxisEps, cfg.epsilon, 0.0);
  const auto ts = axis(kAxisT, cfg.t, 0.0);
  std::vector<GridPoint> grid;
  for (int n : ns)
    for (int m : ms)
      for (double d : ds)
        for (double r : rs)
          for (double e : es)
            for (double t : ts) grid.push_back({n, m, d, r, e, t});
  return grid;
}

// ---------------------------------------------------------------------------
// Records

struct Context {
  const ExperimentConfig& cfg;
  const GridPoint& point;
  std::uint64_t stream;
  RandomSeed seed;
  std::vector<Json>& records;
  std::uint64_t row = 0;

  Json record() {
    const unsigned ax = axes_of(cfg.experiment);
    Json j;
    j["experiment"] = cfg.experiment;
    j["N"] = point.n;
    if (ax & kAxisM) j["m"] = point.m;
    if (ax & kAxisDelta) j["delta"] = number(point.delta);
    if (ax & kAxisR) j["R"] = number(point.radius);
    if (ax & kAxisEps) j["epsilon"] = number(point.epsilon);
    if (ax & kAxisT) j["t"] = number(point.t);
    j["strategy"] = cfg.strategy;
    j["seed"] = cfg.seed;
    j["stream"] = stream;
    j["row"] = row++;
    j["version"] = version();
    Json echo = Json::object();
    for (const auto& [k, v] : cfg.raw) echo[k] = v;
    j["config"] = std::move(echo);
    j["status"] = "ok";
    return j;
  }
  void emit(Json j) { records.push_back(std::move(j)); }
};

void merge(Json& into, const Json& from) {
  for (auto it = from.begin(); it != from.end(); ++it) into[it.key()] = it.value();
}

SamplingOptions options_for(const Context& c) {
  SamplingOptions o;
  o.samples = c.cfg.samples;
  o.seed = c.seed;
  o.workers = c.cfg.workers;
  o.sampler = make_sampler(c.cfg);
  return o;
}

// ---------------------------------------------------------------------------
// Experiments

void run_freeness_scan(Context& c) {
  const auto laws = build_laws(c.cfg, c.point.m);
  const MicrostateParams params = c.point.params();
  const auto cands = candidate_bases(make_strategy(c.cfg), laws.joint, params, c.seed);
  const auto& base = cands.bases.front();
  const auto opts = options_for(c);
  const int groups = static_cast<int>(base.size());
  std::vector<FreenessReport> reports(opts.samples);
  parallel_for(opts.samples, opts.workers, [&](std::size_t k) {
    StreamEngine rng(c.seed.derive(stream_tag::kHaar, 0).child(k));
    const UnitaryTuple u = sample_unitary_tuple(groups, params.n, rng, opts.sampler);
    reports[k] = mdelta_freeness(conjugate_groups(base, u), params.m, params.delta);
  });
  std::uint64_t hits = 0;
  double sum = 0.0, worst = 0.0;
  for (const auto& r : reports) {
    hits += r.free;
    sum += r.deviation;
    worst = std::max(worst, r.deviation);
  }
  const VolumeEstimate e = make_volume_estimate(hits, opts.samples, 0.0, params.n);
  Json j = c.record();
  j["surrogate"] = "free-product deviation of the joint empirical law";
  j["free_hits"] = hits;
  j["samples"] = opts.samples;
  j["rate"] = number(e.p_hat);
  j["stderr"] = number(e.std_error);
  j["mean_deviation"] = number(sum / static_cast<double>(opts.samples));
  j["max_deviation"] = number(worst);
  c.emit(std::move(j));
}

void run_orbital_volume(Context& c) {
  const auto laws = build_laws(c.cfg, c.point.m);
  const ChiOrbResult r = chi_orb_bar_estimate(make_strategy(c.cfg), laws.joint, c.point.params(), options_for(c));
  Json j = c.record();
  merge(j, volume_to_json(r.best));
  j["sampler"] = c.cfg.sampler;
  j["best_index"] = r.best_index;
  Json cand = Json::array();
  for (const auto& e : r.candidates) cand.push_back(number(e.log_measure_per_N2));
  j["candidate_log_per_N2"] = std::move(cand);
  j["candidate_attempts"] = r.candidate_attempts;
  c.emit(std::move(j));
}

void run_chi_volume(Context& c) {
  const auto laws = build_laws(c.cfg, c.point.m);
  const LebesgueEstimate r = lebesgue_volume_estimate(laws.joint, c.point.params(), options_for(c));
  int variables = 0;
  for (int a : laws.joint.alphabet().arities()) variables += a;
  Json j = c.record();
  merge(j, volume_to_json(r.volume));
  j["chi_proxy"] = number(r.chi_proxy);
  j["log_opball_reference"] = number(variables * log_opnorm_ball_volume(c.point.n, c.point.radius));
  c.emit(std::move(j));
}

void run_fubini(Context& c) {
  const auto laws = build_laws(c.cfg, c.point.m);
  const FubiniRecord r = fubini_check(laws.marginals, laws.joint, c.point.params(), c.cfg.samples,
                                      c.cfg.inner_samples, c.seed, c.cfg.workers, c.cfg.budget);
  Json j = c.record();
  merge(j, fubini_to_json(r));
  c.emit(std::move(j));
}

void run_brownian_moments(Context& c) {
  const int n = c.point.n;
  const double t = c.point.t;
  struct Path {
    Complex tr1, tr2;
    double opdev = 0.0;
  };
  std::vector<Path> paths(c.cfg.paths);
  parallel_for(c.cfg.paths, c.cfg.workers, [&](std::size_t k) {
    const UnitaryMatrix v = brownian_unitary({n, t, c.cfg.steps, c.seed.child(k)});
    const CMatrix& vm = v.matrix();
    paths[k] = {normalized_trace(vm), normalized_trace(vm * vm),
                op_norm(CMatrix(vm - CMatrix::Identity(n, n)))};
  });
  const double np = static_cast<double>(paths.size());
  Complex m1 = 0.0, m2 = 0.0;
  double opdev = 0.0, opmax = 0.0;
  for (const auto& p : paths) {
    m1 += p.tr1;
    m2 += p.tr2;
    opdev += p.opdev;
    opmax = std::max(opmax, p.opdev);
  }
  m1 /= np;
  m2 /= np;
  double var = 0.0;
  for (const auto& p : paths) var += std::norm(p.tr1 - m1);
  const double se = paths.size() > 1 ? std::sqrt(var / (np - 1.0) / np) : 0.0;
  const double target1 = free_unitary_bm_moment(t, 1);
  Json j = c.record();
  j["paths"] = c.cfg.paths;
  j["steps"] = c.cfg.steps;
  j["mean_tr_re"] = number(m1.real());
  j["mean_tr_im"] = number(m1.imag());
  j["mean_tr_se"] = number(se);
  j["target_tr"] = number(target1);
  j["deviation_tr"] = number(std::abs(m1 - target1));
  j["mean_tr2_re"] = number(m2.real());
  j["target_tr2"] = number(free_unitary_bm_moment(t, 2));
  if (t > 0.0) {
    j["mean_opdev_per_sqrt_t"] = number(opdev / np / std::sqrt(t));
    j["max_opdev_per_sqrt_t"] = number(opmax / std::sqrt(t));
  } else {
    j["mean_opdev_per_sqrt_t"] = nullptr;
    j["max_opdev_per_sqrt_t"] = nullptr;
  }
  c.emit(std::move(j));
}

void run_packing_profile(Context& c) {
  const auto laws = build_laws(c.cfg, c.point.m);
  const PackingProfile p =
      delta1_profile(laws.joint, c.point.params(), make_strategy(c.cfg), c.cfg.epsilon, options_for(c));
  for (const auto& r : p.rows) {
    Json j = c.record();
    j["epsilon"] = number(r.epsilon);
    j["cloud_size"] = p.cloud_size;
    j["samples"] = p.samples;
    j["greedy_cover"] = r.greedy_cover;
    j["greedy_pack"] = r.greedy_pack;
    j["K_upper"] = r.K_upper;
    j["P_lower"] = r.P_lower;
    j["K_exact"] = r.exact ? Json(r.exact->covering) : Json(nullptr);
    j["P_exact"] = r.exact ? Json(r.exact->packing) : Json(nullptr);
    j["log_K_per_N2"] = number(r.log_K_per_N2);
    j["log_P_per_N2"] = number(r.log_P_per_N2);
    j["slope_minus_n"] = r.slope ? number(*r.slope) : Json(nullptr);
    c.emit(std::move(j));
  }
}

void run_truncation(Context& c) {
  const auto laws_m = build_laws(c.cfg, c.point.m);
  const TruncationParameters tp =
      truncation_parameters(laws_m.joint.norm_bound(), c.point.radius, c.point.m, c.point.delta);
  const auto laws = build_laws(c.cfg, tp.m_prime);
  const TruncationReport r = truncation_check(laws.joint, tp, c.point.n, c.cfg.spike, options_for(c));
  Json j = c.record();
  j["rho"] = number(tp.rho);
  j["L"] = number(tp.L);
  j["m_prime"] = tp.m_prime;
  j["delta_prime"] = number(tp.delta_prime);
  j["residual_bound"] = number(tp.residual_bound);
  j["residual_estimate"] = number(tp.residual_estimate);
  j["spike"] = number(c.cfg.spike);
  j["samples"] = r.samples;
  j["premise_hits"] = r.premise_hits;
  j["truncated"] = r.truncated;
  j["truncated_premise_hits"] = r.truncated_premise_hits;
  j["conclusion_failures"] = r.conclusion_failures;
  j["residual_failures"] = r.residual_failures;
  j["max_residual"] = number(r.max_residual);
  j["max_op_norm"] = number(r.max_op_norm);
  c.emit(std::move(j));
}

void run_brownian_dimension_proxy(Context& c) {
  const int m = c.point.m;
  const auto laws = build_laws(c.cfg, 3 * m);
  const int groups = static_cast<int>(laws.marginals.size());
  std::vector<NCLaw> bm(static_cast<std::size_t>(groups), free_unitary_bm_law(c.point.epsilon, 3 * m));
  const NCLaw law = conjugated_presence_law(laws.marginals, bm, m);
  const MicrostateParams params = c.point.params();
  const auto base = candidate_bases(make_strategy(c.cfg), laws.joint, params, c.seed).bases.front();
  const auto opts = options_for(c);
  std::vector<std::uint8_t> flags(opts.samples, 0);
  parallel_for(opts.samples, opts.workers, [&](std::size_t k) {
    const RandomSeed s = c.seed.derive(stream_tag::kHaar, 0).child(k);
    StreamEngine rng(s);
    const UnitaryTuple w = sample_unitary_tuple(groups, params.n, rng, opts.sampler);
    std::vector<UnitaryMatrix> vs;
    for (int i = 0; i < groups; ++i)
      vs.push_back(brownian_unitary({params.n, c.point.epsilon, c.cfg.steps, s.child(static_cast<std::uint64_t>(i))}));
    const UnitaryTuple v(params.n, vs);
    const UnitaryTuple u = multiply_right(v, w);
    flags[k] = presence_membership(base, v, law, params, &u, Scan::StopAtFirstFailure).member ? 1 : 0;
  });
  std::uint64_t hits = 0;
  for (auto f : flags) hits += f;
  Json j = c.record();
  merge(j, volume_to_json(make_volume_estimate(hits, opts.samples, 0.0, params.n)));
  j["steps"] = c.cfg.steps;
  j["log_per_N2_over_abs_log_eps"] =
      (hits > 0 && c.point.epsilon < 1.0)
          ? number(std::log(static_cast<double>(hits) / static_cast<double>(opts.samples)) /
                   (static_cast<double>(params.n) * params.n) / std::abs(std::log(c.point.epsilon)))
          : Json(nullptr);
  c.emit(std::move(j));
}

void dispatch(Context& c) {
  const std::string& e = c.cfg.experiment;
  if (e == "freeness-scan") return run_freeness_scan(c);
  if (e == "orbital-volume") return run_orbital_volume(c);
  if (e == "chi-volume") return run_chi_volume(c);
  if (e == "fubini-check") return run_fubini(c);
  if (e == "brownian-moments") return run_brownian_moments(c);
  if (e == "packing-profile") return run_packing_profile(c);
  if (e == "truncation-check") return run_truncation(c);
  if (e == "brownian-dimension-proxy") return run_brownian_dimension_proxy(c);
  throw ConfigError("unknown experiment '" + e + "'");
}

bool needs_laws(const std::string& e) { return e != "brownian-moments"; }
bool needs_finite_r(const std::string& e) {
  return e == "chi-volume" || e == "fubini-check" || e == "truncation-check";
}

std::string fmt(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& raw_value) {
  const std::string value = trim(raw_value);
  if (!kKeys.count(key)) throw ConfigError("unknown key '" + key + "'");
  if (key == "experiment") cfg.experiment = value;
  else if (key == "laws") cfg.laws = list_items(key, value);
  else if (key == "joint") cfg.joint = value;
  else if (key == "base") cfg.base = value;
  else if (key == "strategy") cfg.strategy = value;
  else if (key == "sampler") cfg.sampler = value;
  else if (key == "N") cfg.N = parse_list<int>(key, value, to_int);
  else if (key == "m") cfg.m = parse_list<int>(key, value, to_int);
  else if (key == "delta") cfg.delta = parse_list<double>(key, value, to_double);
  else if (key == "R") cfg.R = parse_list<double>(key, value, to_double);
  else if (key == "epsilon") cfg.epsilon = parse_list<double>(key, value, to_double);
  else if (key == "t") cfg.t = parse_list<double>(key, value, to_double);
  else if (key == "samples") cfg.samples = to_u64(key, value);
  else if (key == "inner_samples") cfg.inner_samples = to_u64(key, value);
  else if (key == "budget") cfg.budget = to_u64(key, value);
  else if (key == "paths") cfg.paths = to_u64(key, value);
  else if (key == "steps") cfg.steps = to_int(key, value);
  else if (key == "spike") cfg.spike = to_double(key, value);
  else if (key == "seed") cfg.seed = to_u64(key, value);
  else if (key == "workers") cfg.workers = to_int(key, value);
  if (key == "workers") return;
  auto it = std::find_if(cfg.raw.begin(), cfg.raw.end(), [&](const auto& kv) { return kv.first == key; });
  if (it == cfg.raw.end()) cfg.raw.emplace_back(key, value);
  else it->second = value;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    try {
      set_config_value(cfg, key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (cfg.experiment.empty()) throw ConfigError("missing key 'experiment'");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::string> validate(const ExperimentConfig& cfg) {
  std::vector<std::string> problems;
  auto add = [&](std::string p) { problems.push_back(std::move(p)); };
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), cfg.experiment) == names.end()) {
    add("unknown experiment '" + cfg.experiment + "'");
    return problems;
  }
  const std::string& e = cfg.experiment;
  const unsigned ax = axes_of(e);

  if (cfg.samples == 0) add("samples must be positive");
  if (cfg.budget == 0) add("budget must be positive");
  if (e == "fubini-check" && cfg.inner_samples == 0) add("inner_samples must be positive");
  if (e == "brownian-moments" && cfg.paths == 0) add("paths must be positive");
  if ((e == "brownian-moments" || e == "brownian-dimension-proxy") && cfg.steps < 1) add("steps must be positive");
  if (cfg.workers < 1) add("workers must be positive");
  if (cfg.sampler != "haar" && cfg.sampler != "su") add("sampler must be 'haar' or 'su'");

  if ((ax & kAxisN) && cfg.N.empty()) add("grid N is empty");
  for (int n : cfg.N)
    if (n < 1) add("N = " + std::to_string(n) + " must be positive");
  if (ax & kAxisM) {
    if (cfg.m.empty()) add("grid m is empty");
    for (int m : cfg.m) {
      if (m < 1) add("m = " + std::to_string(m) + " must be positive");
      else if (m > kMaxLawDegree)
        add("m = " + std::to_string(m) + " exceeds the degree cap " + std::to_string(kMaxLawDegree));
      else if (e == "brownian-dimension-proxy" && 3 * m > kMaxLawDegree)
        add("m = " + std::to_string(m) + ": brownian-dimension-proxy needs 3m <= " + std::to_string(kMaxLawDegree));
    }
  }
  if (ax & kAxisDelta) {
    if (cfg.delta.empty()) add("grid delta is empty");
    for (double d : cfg.delta)
      if (!(d > 0.0)) add("delta = " + fmt(d) + " must be positive");
  }
  if (ax & kAxisR) {
    if (cfg.R.empty()) add("grid R is empty");
    for (double r : cfg.R) {
      if (!(r > 0.0)) add("R = " + fmt(r) + " must be positive");
      else if (!std::isfinite(r) && needs_finite_r(e)) add(e + " requires a finite R");
    }
  }
  if (ax & kAxisEps) {
    if (cfg.epsilon.empty()) add("grid epsilon is empty");
    for (double x : cfg.epsilon)
      if (!(x > 0.0) || !std::isfinite(x)) add("epsilon = " + fmt(x) + " must be positive and finite");
  }
  if (e == "packing-profile") {
    if (cfg.epsilon.empty()) add("epsilon grid is empty");
    for (double x : cfg.epsilon)
      if (!(x > 0.0) || !std::isfinite(x)) add("epsilon = " + fmt(x) + " must be positive and finite");
  }
  if (ax & kAxisT) {
    if (cfg.t.empty()) add("grid t is empty");
    for (double x : cfg.t)
      if (!(x >= 0.0) || !std::isfinite(x)) add("t = " + fmt(x) + " must be nonnegative and finite");
  }
  if (!needs_laws(e)) return problems;

  // Laws and alphabet.
  std::vector<int> arities;
  std::vector<bool> has_distribution;
  int file_degree = kMaxLawDegree;
  for (const auto& spec : cfg.laws) {
    try {
      const NCLaw l = standard_law(spec, 1);
      if (l.alphabet().group_count() != 1) add("law '" + spec + "' is not a self-adjoint variable law");
      else {
        arities.push_back(1);
        has_distribution.push_back(l.distribution(0).has_value());
      }
    } catch (const std::exception& ex) {
      add(ex.what());
    }
  }
  if (joint_from_file(cfg)) {
    try {
      const NCLaw j = load_joint_file(cfg);
      if (j.alphabet().unitary_count() != 0) add("joint law file must not declare unitaries");
      file_degree = j.max_degree();
      if (!cfg.laws.empty() && static_cast<int>(cfg.laws.size()) != j.alphabet().group_count())
        add("laws lists " + std::to_string(cfg.laws.size()) + " groups, joint law file declares " +
            std::to_string(j.alphabet().group_count()));
      arities = j.alphabet().arities();
      has_distribution.assign(arities.size(), false);
      for (std::size_t g = 0; g < arities.size() && g < cfg.laws.size(); ++g)
        has_distribution[g] = arities[g] == 1;
    } catch (const std::exception& ex) {
      add(std::string("joint: ") + ex.what());
    }
  } else if (cfg.joint != "free") {
    add("joint must be 'free' or 'file:PATH'");
  } else if (cfg.laws.empty()) {
    add("laws is empty");
  }
  if (arities.empty()) return problems;

  int needed = 0;
  for (int m : cfg.m) needed = std::max(needed, e == "brownian-dimension-proxy" ? 3 * m : m);
  if (e == "truncation-check") {
    for (int m : cfg.m)
      for (double d : cfg.delta)
        for (double r : cfg.R) {
          if (m < 1 || m > kMaxLawDegree || !(d > 0.0) || !(r > 0.0) || !std::isfinite(r)) continue;
          try {
            double rho = 0.0;
            if (!joint_from_file(cfg))
              for (const auto& spec : cfg.laws) rho = std::max(rho, standard_law(spec, 1).norm_bound());
            else
              rho = load_joint_file(cfg).norm_bound();
            needed = std::max(needed, truncation_parameters(rho, r, m, d).m_prime);
          } catch (const std::exception& ex) {
            add("m = " + std::to_string(m) + ", delta = " + fmt(d) + ", R = " + fmt(r) + ": " + ex.what());
          }
        }
  }
  if (joint_from_file(cfg) && needed > file_degree)
    add("joint law file covers degree " + std::to_string(file_degree) + ", experiment needs " + std::to_string(needed));

  // Strategy.
  if (e == "freeness-scan" || e == "orbital-volume" || e == "packing-profile" || e == "brownian-dimension-proxy" ||
      e == "truncation-check") {
    try {
      const Strategy st = parse_strategy(cfg.strategy);
      const bool diagonal = st.kind == BaseTupleStrategy::Kind::Diagonalized || e == "truncation-check";
      if (diagonal) {
        for (std::size_t g = 0; g < arities.size(); ++g) {
          if (arities[g] != 1)
            add("group " + std::to_string(g + 1) + " has " + std::to_string(arities[g]) +
                " variables; the diagonalized strategy needs single-variable groups");
          else if (!has_distribution[g])
            add("group " + std::to_string(g + 1) + " has no closed-form distribution for the diagonalized strategy");
        }
      }
      if (st.kind == BaseTupleStrategy::Kind::Fixed && e != "truncation-check") {
        if (cfg.base.empty()) add("strategy fixed needs a base file");
        else {
          try {
            const auto base = base_from_json(read_json_file(cfg.base));
            if (base.size() != arities.size()) add("base file group count does not match the law");
            for (std::size_t g = 0; g < base.size() && g < arities.size(); ++g) {
              if (base[g].arity() != arities[g]) add("base group " + std::to_string(g + 1) + " has the wrong arity");
              for (int n : cfg.N)
                if (base[g].size() != n) add("base matrices have size " + std::to_string(base[g].size()) +
                                             ", grid has N = " + std::to_string(n));
            }
          } catch (const std::exception& ex) {
            add(std::string("base: ") + ex.what());
          }
        }
      }
      if (st.kind == BaseTupleStrategy::Kind::BestOfRandom)
        for (double r : cfg.R)
          if (!std::isfinite(r)) add("best_of_random requires a finite R");
    } catch (const ConfigError& ex) {
      add(ex.what());
    }
  }
  return problems;
}

RunResult run(const ExperimentConfig& cfg) {
  RunResult out;
  const auto problems = validate(cfg);
  if (!problems.empty()) {
    out.exit_code = kExitUsage;
    out.diagnostics = problems;
    return out;
  }
  const auto grid = make_grid(cfg);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::size_t before = out.records.size();
    Context c{cfg, grid[i], i, RandomSeed{cfg.seed, i}, out.records};
    try {
      dispatch(c);
    } catch (const FeasibilityError& ex) {
      out.records.resize(before);
      Json j = c.record();
      j["status"] = "failed";
      j["error"] = ex.what();
      out.records.push_back(std::move(j));
      out.diagnostics.push_back("grid point " + std::to_string(i) + ": " + ex.what());
      out.exit_code = kExitFeasibility;
    }
  }
  canonical_sort(out.records);
  return out;
}

void canonical_sort(std::vector<Json>& records) {
  std::stable_sort(records.begin(), records.end(), [](const Json& a, const Json& b) {
    const auto ka = std::make_pair(a.value("stream", std::uint64_t{0}), a.value("row", std::uint64_t{0}));
    const auto kb = std::make_pair(b.value("stream", std::uint64_t{0}), b.value("row", std::uint64_t{0}));
    if (ka != kb) return ka < kb;
    return a.dump() < b.dump();
  });
}

std::string format_jsonl(const std::vector<Json>& records) {
  std::string s;
  for (const auto& r : records) {
    s += r.dump();
    s += '\n';
  }
  return s;
}

namespace {

std::string csv_cell(const Json& v) {
  std::string s;
  if (v.is_null()) return s;
  if (v.is_string()) s = v.get<std::string>();
  else if (v.is_array()) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ';';
      s += v[i].is_string() ? v[i].get<std::string>() : v[i].dump();
    }
  } else {
    s = v.dump();
  }
  if (s.find_first_of(",\"\n") != std::string::npos) {
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }
  return s;
}

}  // namespace

std::string format_csv(const std::vector<Json>& records) {
  std::vector<std::string> columns;
  std::set<std::string> known;
  auto flat = [](const Json& r) {
    std::vector<std::pair<std::string, Json>> out;
    for (auto it = r.begin(); it != r.end(); ++it) {
      if (it.value().is_object())
        for (auto jt = it.value().begin(); jt != it.value().end(); ++jt) out.emplace_back(it.key() + "." + jt.key(), jt.value());
      else
        out.emplace_back(it.key(), it.value());
    }
    return out;
  };
  for (const auto& r : records)
    for (const auto& [k, v] : flat(r))
      if (known.insert(k).second) columns.push_back(k);
  std::string s;
  for (std::size_t i = 0; i < columns.size(); ++i) s += (i ? "," : "") + columns[i];
  s += '\n';
  for (const auto& r : records) {
    std::map<std::string, Json> row;
    for (auto& [k, v] : flat(r)) row[k] = v;
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) s += ',';
      auto it = row.find(columns[i]);
      if (it != row.end()) s += csv_cell(it->second);
    }
    s += '\n';
  }
  return s;
}

}  // namespace mslab
