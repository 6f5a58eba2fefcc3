#include "codedmm/cli.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "codedmm/errors.hpp"
#include "codedmm/lt_code.hpp"
#include "codedmm/solvers.hpp"
#include "codedmm/storage_assign.hpp"

namespace codedmm::cli {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<SweepAxis, std::string_view>, 8> kAxes{{
    {SweepAxis::none, "none"},
    {SweepAxis::T, "T"},
    {SweepAxis::K, "K"},
    {SweepAxis::n, "n"},
    {SweepAxis::epsilon_min, "epsilon_min"},
    {SweepAxis::pf_target, "pf_target"},
    {SweepAxis::omega, "omega"},
    {SweepAxis::t, "t"},
}};

std::string num(double x) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

std::string index_field(std::string_view base, std::size_t i, std::string_view leaf = {}) {
  std::string s(base);
  s += "[" + std::to_string(i) + "]";
  if (!leaf.empty()) {
    s += ".";
    s += leaf;
  }
  return s;
}

void check_keys(const json &j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  for (const auto &[key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(where.empty() ? key : std::string(where) + "." + key, "unknown key");
    }
  }
}

double get_number(const json &j, const std::string &field) {
  if (!j.is_number()) {
    throw ConfigError(field, "must be a number");
  }
  return j.get<double>();
}

std::int64_t get_integer(const json &j, const std::string &field) {
  if (!j.is_number_integer()) {
    throw ConfigError(field, "must be an integer");
  }
  return j.get<std::int64_t>();
}

std::uint64_t get_count(const json &j, const std::string &field) {
  const auto v = get_integer(j, field);
  if (v < 0) {
    throw ConfigError(field, "must be nonnegative");
  }
  return static_cast<std::uint64_t>(v);
}

std::int64_t as_integral(double v, const std::string &field) {
  if (v != std::floor(v) || std::abs(v) > 9e15) {
    throw ConfigError(field, "must be an integer, got " + num(v));
  }
  return static_cast<std::int64_t>(v);
}

SchemeSpec parse_scheme(const json &j, std::size_t i) {
  SchemeSpec s;
  const auto f = [&](std::string_view leaf) { return index_field("schemes", i, leaf); };
  try {
    if (j.is_string()) {
      s.kind = parse_scheme_kind(j.get<std::string>());
      return s;
    }
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
      throw ConfigError(f("kind"), "missing");
    }
    check_keys(j, index_field("schemes", i),
               {"kind", "T", "solver", "epsilon_min", "pf_target", "g_model"});
    s.kind = parse_scheme_kind(j.at("kind").get<std::string>());
  } catch (const RangeError &e) {
    throw ConfigError(f("kind"), e.what());
  }
  if (j.contains("T")) {
    s.T = get_integer(j.at("T"), f("T"));
  }
  if (j.contains("solver")) {
    try {
      s.solver = parse_solver_kind(j.at("solver").get<std::string>());
    } catch (const std::exception &e) {
      throw ConfigError(f("solver"), e.what());
    }
  }
  if (j.contains("epsilon_min")) {
    s.epsilon_min = get_number(j.at("epsilon_min"), f("epsilon_min"));
  }
  if (j.contains("pf_target")) {
    s.pf_target = get_number(j.at("pf_target"), f("pf_target"));
  }
  if (j.contains("g_model")) {
    const auto name = j.at("g_model").is_string() ? j.at("g_model").get<std::string>() : "";
    if (name == "bound") {
      s.g_model = DecodabilityModel::bound;
    } else if (name == "decoder") {
      s.g_model = DecodabilityModel::decoder;
    } else if (name == "mds") {
      s.g_model = DecodabilityModel::mds;
    } else {
      throw ConfigError(f("g_model"), "must be bound, decoder or mds");
    }
  }
  return s;
}

void apply_sampling(SchemeSpec &s, const Sampling &sm) {
  s.g_trials = sm.g_trials;
  s.decode_runs = sm.decode_runs;
  s.load_samples = sm.load_samples;
  s.subset_budget = sm.subset_budget;
  s.solver_options.node_budget = sm.node_budget;
}

bool is_lt(SchemeKind k) { return k == SchemeKind::lt || k == SchemeKind::bdc_lt; }

void write_audit_csv(std::ostream &os, const ExperimentConfig &cfg, Command cmd) {
  os << "# codedmm " << kVersion << '\n'
     << "# command: " << to_string(cmd) << '\n'
     << "# config_hash: " << config_hash(cfg) << '\n'
     << "# seed: " << cfg.seed << '\n';
}

json audit_json(const ExperimentConfig &cfg, Command cmd) {
  return json{{"version", std::string(kVersion)},
              {"command", std::string(to_string(cmd))},
              {"config_hash", config_hash(cfg)},
              {"seed", cfg.seed}};
}

json sweep_value_json(const std::optional<double> &v) { return v ? json(*v) : json(nullptr); }

// Runs fn(i) for i in [0, count) on up to `threads` workers and rethrows the
// exception of the lowest failing index.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn fn) {
  std::vector<std::exception_ptr> errors(count);
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(threads, 1U), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (const auto &e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
}

std::ostream &open_output(const ExperimentConfig &cfg, std::ofstream &file, std::ostream &fallback) {
  if (!cfg.output_path) {
    return fallback;
  }
  file.open(*cfg.output_path, std::ios::binary);
  if (!file) {
    throw ConfigError("output.path", "cannot open " + *cfg.output_path);
  }
  return file;
}

} // namespace

std::string_view to_string(Command c) {
  switch (c) {
  case Command::evaluate:
    return "evaluate";
  case Command::solve:
    return "solve";
  case Command::design_lt:
    return "design-lt";
  case Command::deadline:
    return "deadline";
  }
  return "?";
}

std::string_view to_string(SweepAxis a) {
  for (const auto &[axis, name] : kAxes) {
    if (axis == a) {
      return name;
    }
  }
  return "?";
}

ExperimentConfig parse_config(const json &j) {
  if (!j.is_object()) {
    throw ConfigError("config", "must be a JSON object");
  }
  check_keys(j, "",
             {"params", "schemes", "sweep", "sampling", "deadline", "solve", "design", "seed",
              "output"});
  ExperimentConfig cfg;
  cfg.source = j;
  if (!j.contains("params")) {
    throw ConfigError("params", "missing");
  }
  cfg.params = raw_params_from_json(j.at("params"));

  if (j.contains("sampling")) {
    const auto &s = j.at("sampling");
    check_keys(s, "sampling",
               {"g_trials", "decode_runs", "load_samples", "subset_budget", "deadline_trials",
                "node_budget"});
    auto &sm = cfg.sampling;
    if (s.contains("g_trials")) {
      sm.g_trials = static_cast<std::int64_t>(get_count(s.at("g_trials"), "sampling.g_trials"));
    }
    if (s.contains("decode_runs")) {
      sm.decode_runs = static_cast<std::int64_t>(get_count(s.at("decode_runs"), "sampling.decode_runs"));
    }
    if (s.contains("load_samples") && !s.at("load_samples").is_null()) {
      sm.load_samples = get_count(s.at("load_samples"), "sampling.load_samples");
    }
    if (s.contains("subset_budget")) {
      sm.subset_budget = get_count(s.at("subset_budget"), "sampling.subset_budget");
    }
    if (s.contains("deadline_trials")) {
      sm.deadline_trials = get_count(s.at("deadline_trials"), "sampling.deadline_trials");
    }
    if (s.contains("node_budget")) {
      sm.node_budget = get_count(s.at("node_budget"), "sampling.node_budget");
    }
  }

  if (j.contains("schemes")) {
    const auto &list = j.at("schemes");
    if (!list.is_array()) {
      throw ConfigError("schemes", "must be an array");
    }
    for (std::size_t i = 0; i < list.size(); ++i) {
      cfg.schemes.push_back(parse_scheme(list.at(i), i));
    }
  }

  if (j.contains("sweep")) {
    const auto &s = j.at("sweep");
    check_keys(s, "sweep", {"axis", "values"});
    const auto name = s.contains("axis") && s.at("axis").is_string() ? s.at("axis").get<std::string>() : "";
    const auto it = std::find_if(kAxes.begin(), kAxes.end(), [&](const auto &a) { return a.second == name; });
    if (it == kAxes.end()) {
      throw ConfigError("sweep.axis", "must be one of T, K, n, epsilon_min, pf_target, omega, t");
    }
    cfg.axis = it->first;
    if (cfg.axis != SweepAxis::none) {
      if (!s.contains("values") || !s.at("values").is_array() || s.at("values").empty()) {
        throw ConfigError("sweep.values", "must be a nonempty array");
      }
      const auto &vals = s.at("values");
      for (std::size_t i = 0; i < vals.size(); ++i) {
        cfg.values.push_back(get_number(vals.at(i), index_field("sweep.values", i)));
      }
    }
  }

  if (j.contains("deadline")) {
    const auto &d = j.at("deadline");
    check_keys(d, "deadline", {"t"});
    if (d.contains("t")) {
      if (!d.at("t").is_array()) {
        throw ConfigError("deadline.t", "must be an array");
      }
      for (std::size_t i = 0; i < d.at("t").size(); ++i) {
        cfg.deadlines.push_back(get_number(d.at("t").at(i), index_field("deadline.t", i)));
      }
    }
  }

  if (j.contains("solve")) {
    const auto &s = j.at("solve");
    check_keys(s, "solve", {"T", "solver", "trace"});
    if (s.contains("T")) {
      cfg.solve.T = get_integer(s.at("T"), "solve.T");
    }
    if (s.contains("solver")) {
      try {
        cfg.solve.solver = parse_solver_kind(s.at("solver").get<std::string>());
      } catch (const std::exception &e) {
        throw ConfigError("solve.solver", e.what());
      }
    }
    if (s.contains("trace")) {
      cfg.solve.trace_path = s.at("trace").get<std::string>();
    }
  }

  if (j.contains("design")) {
    const auto &d = j.at("design");
    check_keys(d, "design", {"m", "epsilon_min", "pf_target"});
    if (d.contains("m")) {
      cfg.design.m = get_integer(d.at("m"), "design.m");
    }
    if (d.contains("epsilon_min")) {
      cfg.design.epsilon_min = get_number(d.at("epsilon_min"), "design.epsilon_min");
    }
    if (d.contains("pf_target")) {
      cfg.design.pf_target = get_number(d.at("pf_target"), "design.pf_target");
    }
  }

  if (j.contains("seed")) {
    cfg.seed = get_count(j.at("seed"), "seed");
  }

  if (j.contains("output")) {
    const auto &o = j.at("output");
    check_keys(o, "output", {"path", "format"});
    if (o.contains("path")) {
      cfg.output_path = o.at("path").get<std::string>();
    }
    if (o.contains("format")) {
      const auto f = o.at("format").is_string() ? o.at("format").get<std::string>() : "";
      if (f == "csv") {
        cfg.format = Format::csv;
      } else if (f == "json") {
        cfg.format = Format::json;
      } else {
        throw ConfigError("output.format", "must be csv or json");
      }
    }
  }

  for (auto &s : cfg.schemes) {
    apply_sampling(s, cfg.sampling);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("config", "cannot open " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

void apply_overrides(ExperimentConfig &cfg, const Overrides &o) {
  if (o.seed) {
    cfg.seed = *o.seed;
  }
  if (o.out) {
    cfg.output_path = *o.out;
  }
  if (o.format) {
    cfg.format = *o.format;
  }
  if (o.sample_budget) {
    cfg.sampling.deadline_trials = *o.sample_budget;
    cfg.sampling.g_trials = static_cast<std::int64_t>(*o.sample_budget);
    for (auto &s : cfg.schemes) {
      apply_sampling(s, cfg.sampling);
    }
  }
}

std::string config_hash(const ExperimentConfig &cfg) {
  std::string text = cfg.source.dump();
  text += "|seed=" + std::to_string(cfg.seed);
  text += "|g_trials=" + std::to_string(cfg.sampling.g_trials);
  text += "|deadline_trials=" + std::to_string(cfg.sampling.deadline_trials);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::vector<SweepPoint> sweep_points(const ExperimentConfig &cfg) {
  std::vector<SweepPoint> points;
  if (cfg.axis == SweepAxis::none || cfg.axis == SweepAxis::t) {
    points.push_back(SweepPoint{std::nullopt, cfg.params, cfg.schemes, std::nullopt});
    return points;
  }
  for (std::size_t i = 0; i < cfg.values.size(); ++i) {
    const double v = cfg.values[i];
    const auto field = index_field("sweep.values", i);
    SweepPoint pt{v, cfg.params, cfg.schemes, std::nullopt};
    switch (cfg.axis) {
    case SweepAxis::T:
      for (auto &s : pt.schemes) {
        if (s.kind == SchemeKind::bdc) {
          s.T = as_integral(v, field);
        }
      }
      break;
    case SweepAxis::K:
      pt.params.K = as_integral(v, field);
      break;
    case SweepAxis::n:
      pt.params.n = as_integral(v, field);
      break;
    case SweepAxis::epsilon_min:
      for (auto &s : pt.schemes) {
        s.epsilon_min = v;
      }
      break;
    case SweepAxis::pf_target:
      for (auto &s : pt.schemes) {
        s.pf_target = v;
      }
      break;
    case SweepAxis::omega:
      if (v < 0) {
        throw ConfigError(field, "omega must be nonnegative");
      }
      pt.omega = v;
      break;
    default:
      break;
    }
    points.push_back(std::move(pt));
  }
  return points;
}

void validate(const ExperimentConfig &cfg, Command cmd) {
  if ((cmd == Command::evaluate || cmd == Command::deadline) && cfg.schemes.empty()) {
    throw ConfigError("schemes", "must list at least one scheme");
  }
  if (cmd == Command::evaluate && cfg.axis == SweepAxis::t) {
    throw ConfigError("sweep.axis", "t applies to the deadline command only");
  }
  if (cmd == Command::deadline) {
    if (cfg.axis == SweepAxis::omega) {
      throw ConfigError("sweep.axis", "the deadline command uses the main runtime model");
    }
    if (cfg.axis != SweepAxis::t && cfg.deadlines.empty()) {
      throw ConfigError("deadline.t", "required unless sweep.axis is t");
    }
    if (cfg.sampling.deadline_trials == 0) {
      throw ConfigError("sampling.deadline_trials", "must be positive");
    }
  }
  if (cfg.sampling.g_trials <= 0) {
    throw ConfigError("sampling.g_trials", "must be positive");
  }

  const auto points = sweep_points(cfg);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto &pt = points[i];
    const std::string where = pt.value ? index_field("sweep.values", i) : std::string("params");
    SystemParams p;
    try {
      p = derive(pt.params);
    } catch (const ConfigError &) {
      throw;
    } catch (const Error &e) {
      throw ConfigError(where, e.what());
    }
    if (cmd == Command::solve) {
      try {
        partition(p, cfg.solve.T);
      } catch (const Error &e) {
        throw ConfigError("solve.T", e.what());
      }
      continue;
    }
    if (cmd == Command::design_lt) {
      const auto m = cfg.design.m.value_or(p.m);
      if (m < 1) {
        throw ConfigError("design.m", "must be positive");
      }
      if (cfg.design.epsilon_min < 0) {
        throw ConfigError("design.epsilon_min", "must be nonnegative");
      }
      if (!(cfg.design.pf_target > 0)) {
        throw ConfigError("design.pf_target", "must be positive");
      }
      continue;
    }
    for (std::size_t s = 0; s < pt.schemes.size(); ++s) {
      const auto &spec = pt.schemes[s];
      const auto field = pt.value ? where : index_field("schemes", s);
      try {
        const auto bp = baseline_params(spec.kind, p);
        if (spec.kind == SchemeKind::bdc) {
          partition(bp, spec.T);
        } else if (spec.kind == SchemeKind::sc) {
          partition(bp, bp.m / bp.q);
        } else if (spec.kind == SchemeKind::bdc_lt) {
          partition(bp, partition_limit(bp));
        }
      } catch (const Error &e) {
        throw ConfigError(field, e.what());
      }
      if (is_lt(spec.kind)) {
        if (spec.epsilon_min < 0) {
          throw ConfigError(index_field("schemes", s, "epsilon_min"), "must be nonnegative");
        }
        if (!(spec.pf_target > 0)) {
          throw ConfigError(index_field("schemes", s, "pf_target"), "must be positive");
        }
      }
    }
  }
}

std::vector<EvalRow> evaluate_rows(const ExperimentConfig &cfg, unsigned threads) {
  const auto points = sweep_points(cfg);
  std::vector<std::vector<EvalRow>> per_point(points.size());
  parallel_for(points.size(), threads, [&](std::size_t i) {
    const auto &pt = points[i];
    const auto p = derive(pt.params);
    const auto run = [&](const SchemeSpec &spec, std::uint64_t stream) {
      Rng rng(Rng::derive_seed(Rng::derive_seed(cfg.seed, i), stream));
      const auto plan = plan_scheme(spec, p, rng);
      return pt.omega ? alt_runtime_metrics(plan, p, *pt.omega) : metrics(plan);
    };
    SchemeSpec uc;
    uc.kind = SchemeKind::uncoded;
    const auto base = run(uc, 0);
    for (std::size_t s = 0; s < pt.schemes.size(); ++s) {
      EvalRow row;
      row.sweep_value = pt.value;
      row.metrics = pt.schemes[s].kind == SchemeKind::uncoded ? base : run(pt.schemes[s], s + 1);
      row.load_norm = base.load > 0 ? row.metrics.load / base.load : 0.0;
      row.delay_norm = base.d > 0 ? row.metrics.d / base.d : 0.0;
      per_point[i].push_back(std::move(row));
    }
  });
  std::vector<EvalRow> rows;
  for (auto &v : per_point) {
    for (auto &r : v) {
      rows.push_back(std::move(r));
    }
  }
  return rows;
}

std::vector<DeadlineRow> deadline_rows(const ExperimentConfig &cfg, unsigned threads) {
  const auto points = sweep_points(cfg);
  const auto &ts = cfg.axis == SweepAxis::t ? cfg.values : cfg.deadlines;
  std::vector<DeadlineRow> rows;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto &pt = points[i];
    const auto p = derive(pt.params);
    for (std::size_t s = 0; s < pt.schemes.size(); ++s) {
      const std::uint64_t stream = Rng::derive_seed(Rng::derive_seed(cfg.seed, i), s + 1);
      Rng rng(stream);
      const auto plan = plan_scheme(pt.schemes[s], p, rng);
      const auto curve =
          deadline_curve(plan, ts, cfg.sampling.deadline_trials, rng.next_u64(), threads);
      for (const auto &point : curve) {
        const auto value = cfg.axis == SweepAxis::t ? std::optional<double>(point.t) : pt.value;
        rows.push_back(DeadlineRow{value, pt.schemes[s].label(), point, cfg.sampling.deadline_trials});
      }
    }
  }
  return rows;
}

void cmd_evaluate(const ExperimentConfig &cfg, unsigned threads, std::ostream &out) {
  const auto rows = evaluate_rows(cfg, threads);
  const auto axis = std::string(to_string(cfg.axis));
  if (cfg.format.value_or(Format::csv) == Format::json) {
    json doc{{"audit", audit_json(cfg, Command::evaluate)}, {"sweep_axis", axis}, {"rows", json::array()}};
    for (const auto &r : rows) {
      const auto &m = r.metrics;
      doc["rows"].push_back(json{{"sweep_value", sweep_value_json(r.sweep_value)},
                                 {"scheme", m.scheme},
                                 {"kind", std::string(to_string(m.kind))},
                                 {"T", m.T},
                                 {"L", m.load},
                                 {"D_encode", m.d_encode},
                                 {"D_map", m.d_map},
                                 {"D_reduce", m.d_reduce},
                                 {"D", m.d},
                                 {"g_mean", m.g_mean},
                                 {"L_norm", r.load_norm},
                                 {"D_norm", r.delay_norm}});
    }
    out << doc.dump(2) << '\n';
    return;
  }
  write_audit_csv(out, cfg, Command::evaluate);
  out << kEvaluateColumns << '\n';
  for (const auto &r : rows) {
    const auto &m = r.metrics;
    out << axis << ',' << (r.sweep_value ? num(*r.sweep_value) : "") << ',' << '"' << m.scheme << '"'
        << ',' << to_string(m.kind) << ',' << m.T << ',' << num(m.load) << ',' << num(m.d_encode)
        << ',' << num(m.d_map) << ',' << num(m.d_reduce) << ',' << num(m.d) << ',' << num(m.g_mean)
        << ',' << num(r.load_norm) << ',' << num(r.delay_norm) << '\n';
  }
}

void cmd_deadline(const ExperimentConfig &cfg, unsigned threads, std::ostream &out) {
  const auto rows = deadline_rows(cfg, threads);
  const auto axis = std::string(to_string(cfg.axis));
  if (cfg.format.value_or(Format::csv) == Format::json) {
    json doc{{"audit", audit_json(cfg, Command::deadline)}, {"sweep_axis", axis}, {"rows", json::array()}};
    for (const auto &r : rows) {
      doc["rows"].push_back(json{{"sweep_value", sweep_value_json(r.sweep_value)},
                                 {"scheme", r.scheme},
                                 {"t", r.point.t},
                                 {"miss", r.point.miss.value},
                                 {"ci_lower", r.point.miss.lower},
                                 {"ci_upper", r.point.miss.upper},
                                 {"gamma_extrapolation", r.point.gamma_extrapolation},
                                 {"trials", r.trials}});
    }
    out << doc.dump(2) << '\n';
    return;
  }
  write_audit_csv(out, cfg, Command::deadline);
  out << kDeadlineColumns << '\n';
  for (const auto &r : rows) {
    out << axis << ',' << (r.sweep_value ? num(*r.sweep_value) : "") << ',' << '"' << r.scheme << '"'
        << ',' << num(r.point.t) << ',' << num(r.point.miss.value) << ',' << num(r.point.miss.lower)
        << ',' << num(r.point.miss.upper) << ',' << num(r.point.gamma_extrapolation) << ','
        << r.trials << '\n';
  }
}

void cmd_solve(const ExperimentConfig &cfg, std::ostream &out, std::ostream &summary) {
  const auto p = derive(cfg.params);
  const auto pp = partition(p, cfg.solve.T);
  Rng rng(Rng::derive_seed(cfg.seed, 0));
  SolverOptions opt;
  opt.node_budget = cfg.sampling.node_budget;

  const auto start = std::chrono::steady_clock::now();
  SolveResult res;
  switch (cfg.solve.solver) {
  case SolverKind::bnb:
    res = branch_and_bound(pp, AssignmentMatrix(p.batches, pp.T, 0), opt);
    break;
  case SolverKind::hybrid:
    res = hybrid_assign(pp, rng, HybridOptions{}, opt);
    break;
  default: {
    switch (cfg.solve.solver) {
    case SolverKind::heuristic:
      res.P = heuristic_assign(pp);
      break;
    case SolverKind::theorem1:
      res.P = theorem1_assignment(pp);
      break;
    default:
      res.P = random_assignment(rng, pp);
      break;
    }
    const auto s1 = strategy_load(pp, res.P, Strategy::first);
    res.exact_load = s1;
    res.strategy = Strategy::first;
    if (multicast_profile(p).last_round(Strategy::second)) {
      const auto s2 = strategy_load(pp, res.P, Strategy::second);
      if (s2 < s1) {
        res.exact_load = s2;
        res.strategy = Strategy::second;
      }
    }
    res.load = res.exact_load.to_double();
    break;
  }
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json sum{{"audit", audit_json(cfg, Command::solve)},
           {"solver", std::string(to_string(cfg.solve.solver))},
           {"T", pp.T},
           {"objective", res.load},
           {"objective_exact", res.exact_load.str()},
           {"strategy", static_cast<int>(res.strategy)},
           {"nodes", res.nodes},
           {"budget_hit", res.budget_hit},
           {"wall_seconds", wall}};
  if (!res.trace.empty()) {
    sum["trace"] = res.trace;
  }

  if (cfg.solve.trace_path) {
    std::ofstream trace(*cfg.solve.trace_path);
    if (!trace) {
      throw ConfigError("solve.trace", "cannot open " + *cfg.solve.trace_path);
    }
    write_audit_csv(trace, cfg, Command::solve);
    trace << "iteration,load\n";
    for (std::size_t i = 0; i < res.trace.size(); ++i) {
      trace << i << ',' << num(res.trace[i]) << '\n';
    }
  }

  if (cfg.format.value_or(Format::csv) == Format::json) {
    json doc = sum;
    json matrix = json::array();
    for (std::int64_t b = 0; b < res.P.batches(); ++b) {
      json row = json::array();
      for (std::int64_t t = 0; t < res.P.partitions(); ++t) {
        row.push_back(res.P.at(b, t));
      }
      matrix.push_back(std::move(row));
    }
    doc["assignment"] = std::move(matrix);
    out << doc.dump(2) << '\n';
  } else {
    write_audit_csv(out, cfg, Command::solve);
    write_assignment_csv(out, res.P, p);
  }
  summary << sum.dump(2) << '\n';
}

void cmd_design_lt(const ExperimentConfig &cfg, std::ostream &out) {
  const auto m = cfg.design.m.value_or(cfg.params.m);
  const auto d = design_code(m, cfg.design.epsilon_min, cfg.design.pf_target);
  if (cfg.format.value_or(Format::json) == Format::csv) {
    write_audit_csv(out, cfg, Command::design_lt);
    out << "m,epsilon_min,pf_target,M,delta,mean_degree,bound_at_min\n"
        << d.m << ',' << num(d.epsilon_min) << ',' << num(d.pf_target) << ',' << d.M << ','
        << num(d.delta) << ',' << num(d.dist.mean_degree()) << ',' << num(d.bound_at_min) << '\n';
    return;
  }
  json doc{{"audit", audit_json(cfg, Command::design_lt)},
           {"m", d.m},
           {"epsilon_min", d.epsilon_min},
           {"pf_target", d.pf_target},
           {"M", d.M},
           {"delta", d.delta},
           {"mean_degree", d.dist.mean_degree()},
           {"bound_at_min", d.bound_at_min}};
  out << doc.dump(2) << '\n';
}

int exit_code(const std::exception &e) noexcept {
  if (dynamic_cast<const ConfigError *>(&e) != nullptr) {
    return exit_config;
  }
  if (dynamic_cast<const BudgetExceeded *>(&e) != nullptr) {
    return exit_budget;
  }
  if (dynamic_cast<const Infeasible *>(&e) != nullptr) {
    return exit_infeasible;
  }
  return exit_failure;
}

int run(Command cmd, const std::string &config_path, const Overrides &o, std::ostream &out,
        std::ostream &err) {
  try {
    auto cfg = load_config(config_path);
    apply_overrides(cfg, o);
    validate(cfg, cmd);
    std::ofstream file;
    auto &dest = open_output(cfg, file, out);
    switch (cmd) {
    case Command::evaluate:
      cmd_evaluate(cfg, o.threads, dest);
      break;
    case Command::deadline:
      cmd_deadline(cfg, o.threads, dest);
      break;
    case Command::solve:
      cmd_solve(cfg, dest, cfg.output_path ? out : err);
      break;
    case Command::design_lt:
      cmd_design_lt(cfg, dest);
      break;
    }
    dest.flush();
    if (!dest) {
      err << "error: failed writing output\n";
      return exit_failure;
    }
    return exit_ok;
  } catch (const std::exception &e) {
    const int code = exit_code(e);
    err << "error: " << e.what() << '\n';
    return code;
  }
}

} // namespace codedmm::cli
