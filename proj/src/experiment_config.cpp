#include "gppa/csv.hpp"
#include "gppa/experiment.hpp"
#include "json_support.hpp"

#include <functional>
#include <set>

namespace gppa {

namespace {

using detail::json;

std::string num(double v) { return csv::format_double(v); }

/// Collects errors instead of stopping at the first one.
class Checker {
 public:
  void error(const std::string& field, const std::string& what) {
    errors.push_back(field + ": " + what);
  }

  /// Runs fn, turning a thrown library error into a recorded error.
  template <class Fn>
  bool guard(const std::string& field, Fn&& fn) {
    try {
      fn();
      return true;
    } catch (const IoError& e) {
      io_error = true;
      error(field, e.what());
    } catch (const ParseError& e) {
      errors.emplace_back(e.what());
    } catch (const Error& e) {
      error(field, e.what());
    } catch (const json::exception& e) {
      error(field, e.what());
    }
    return false;
  }

  std::optional<double> number(const json& j, const std::string& field) {
    if (!j.is_number()) {
      error(field, "expected a number");
      return std::nullopt;
    }
    return j.get<double>();
  }

  std::optional<std::int64_t> integer(const json& j, const std::string& field) {
    if (!j.is_number_integer()) {
      error(field, "expected an integer");
      return std::nullopt;
    }
    return j.get<std::int64_t>();
  }

  std::optional<std::vector<double>> numbers(const json& j, const std::string& field) {
    if (!j.is_array()) {
      error(field, "expected an array of numbers");
      return std::nullopt;
    }
    std::vector<double> out;
    bool ok = true;
    for (std::size_t i = 0; i < j.size(); ++i) {
      auto v = number(j[i], field + "[" + std::to_string(i) + "]");
      if (v) out.push_back(*v);
      else ok = false;
    }
    if (!ok) return std::nullopt;
    return out;
  }

  void unknown_keys(const json& j, const std::string& prefix, const std::set<std::string>& allowed) {
    for (const auto& [key, _] : j.items()) {
      if (!allowed.count(key)) error(prefix.empty() ? key : prefix + "." + key, "unknown key");
    }
  }

  void check_gamma(double g, const std::string& field) {
    if (!(g > 0.0 && g < 2.0)) error(field, "must lie in the open interval (0,2), got " + num(g));
  }

  void check_c(double c, const std::string& field) {
    if (!(c > 0.0) || !std::isfinite(c)) error(field, "must be > 0, got " + num(c));
  }

  std::vector<std::string> errors;
  bool io_error = false;
};

const std::set<std::string> kTopLevelKeys = {
    "kind",   "description", "operator", "problem",  "problem_file",   "gamma",
    "c",      "delta",       "max_iter", "residual_tol", "seed",       "z0",
    "p0",     "window_fraction", "rate_tolerance", "sweep", "out_dir", "workers"};

std::optional<CSchedule> parse_c_schedule(Checker& chk, const json& j) {
  if (j.is_number()) {
    const double c = j.get<double>();
    chk.check_c(c, "c");
    if (!(c > 0.0) || !std::isfinite(c)) return std::nullopt;
    return CSchedule::constant(c);
  }
  if (!j.is_object()) {
    chk.error("c", "expected a number or a schedule object");
    return std::nullopt;
  }
  if (!j.contains("type") || !j["type"].is_string()) {
    chk.error("c.type", "expected one of 'constant', 'geometric', 'list'");
    return std::nullopt;
  }
  const auto type = j["type"].get<std::string>();
  std::optional<double> kappa;
  if (j.contains("kappa")) {
    kappa = chk.number(j["kappa"], "c.kappa");
    if (kappa && !(*kappa > 0.0)) chk.error("c.kappa", "must be > 0, got " + num(*kappa));
  }
  std::optional<CSchedule> out;
  const std::size_t before = chk.errors.size();
  if (type == "constant") {
    chk.unknown_keys(j, "c", {"type", "value", "kappa"});
    if (!j.contains("value")) {
      chk.error("c.value", "missing");
    } else if (auto v = chk.number(j["value"], "c.value")) {
      chk.check_c(*v, "c.value");
      if (chk.errors.size() == before) out = CSchedule::constant(*v);
    }
  } else if (type == "geometric") {
    chk.unknown_keys(j, "c", {"type", "c0", "ratio", "kappa"});
    std::optional<double> c0;
    std::optional<double> ratio;
    if (!j.contains("c0")) chk.error("c.c0", "missing");
    else c0 = chk.number(j["c0"], "c.c0");
    if (!j.contains("ratio")) chk.error("c.ratio", "missing");
    else ratio = chk.number(j["ratio"], "c.ratio");
    if (c0) chk.check_c(*c0, "c.c0");
    if (ratio && !(*ratio >= 1.0 && std::isfinite(*ratio))) {
      chk.error("c.ratio", "must be >= 1, got " + num(*ratio));
    }
    if (chk.errors.size() == before && c0 && ratio) out = CSchedule::geometric(*c0, *ratio);
  } else if (type == "list") {
    chk.unknown_keys(j, "c", {"type", "values", "kappa"});
    if (!j.contains("values")) {
      chk.error("c.values", "missing");
    } else if (auto vs = chk.numbers(j["values"], "c.values")) {
      if (vs->empty()) chk.error("c.values", "must be nonempty");
      for (std::size_t i = 0; i < vs->size(); ++i) {
        chk.check_c((*vs)[i], "c.values[" + std::to_string(i) + "]");
      }
      if (chk.errors.size() == before) out = CSchedule::list(*vs);
    }
  } else {
    chk.error("c.type", "expected one of 'constant', 'geometric', 'list', got '" + type + "'");
  }
  if (out && kappa && *kappa > 0.0) out = out->with_kappa(*kappa);
  if (out) {
    for (const auto& e : out->validation_errors()) chk.error("c", e);
    if (chk.errors.size() != before) out.reset();
  }
  return out;
}

std::optional<OperatorConfig> parse_operator(Checker& chk, const json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    chk.error("operator.type", "expected 'rotation' or 'affine'");
    return std::nullopt;
  }
  const auto type = j["type"].get<std::string>();
  OperatorConfig op;
  const std::size_t before = chk.errors.size();
  if (type == "rotation") {
    chk.unknown_keys(j, "operator", {"type", "a"});
    op.type = OperatorConfig::Type::Rotation;
    if (j.contains("a")) {
      if (auto a = chk.number(j["a"], "operator.a")) {
        op.a = *a;
        if (!(op.a > 0.0) || !std::isfinite(op.a)) {
          chk.error("operator.a", "must be > 0, got " + num(op.a));
        }
      }
    }
  } else if (type == "affine") {
    chk.unknown_keys(j, "operator", {"type", "G", "h", "modulus"});
    op.type = OperatorConfig::Type::Affine;
    if (!j.contains("G")) chk.error("operator.G", "missing");
    if (!j.contains("h")) chk.error("operator.h", "missing");
    if (chk.errors.size() != before) return std::nullopt;
    chk.guard("operator", [&] {
      op.G = detail::matrix_field(j["G"], "operator.G");
      op.h = detail::vector_field(j["h"], "operator.h");
    });
    if (j.contains("modulus")) op.modulus = chk.number(j["modulus"], "operator.modulus");
    if (chk.errors.size() == before) chk.guard("operator", [&] { build_operator(op); });
  } else {
    chk.error("operator.type", "expected 'rotation' or 'affine', got '" + type + "'");
  }
  if (chk.errors.size() != before) return std::nullopt;
  return op;
}

void parse_sweep(Checker& chk, const json& j, SweepGrid& grid) {
  if (!j.is_object()) {
    chk.error("sweep", "expected an object with gamma, c and/or delta0 lists");
    return;
  }
  chk.unknown_keys(j, "sweep", {"gamma", "c", "delta0"});
  const auto axis = [&](const char* key, std::vector<double>& out,
                        const std::function<void(double, const std::string&)>& check) {
    if (!j.contains(key)) return;
    const std::string field = std::string("sweep.") + key;
    auto vs = chk.numbers(j[key], field);
    if (!vs) return;
    if (vs->empty()) chk.error(field, "grid must be nonempty");
    for (std::size_t i = 0; i < vs->size(); ++i) check((*vs)[i], field + "[" + std::to_string(i) + "]");
    out = *vs;
  };
  axis("gamma", grid.gamma, [&](double v, const std::string& f) { chk.check_gamma(v, f); });
  axis("c", grid.c, [&](double v, const std::string& f) { chk.check_c(v, f); });
  axis("delta0", grid.delta0, [&](double v, const std::string& f) {
    if (!(v >= 0.0) || !std::isfinite(v)) chk.error(f, "must be >= 0, got " + num(v));
  });
  if (grid.empty() && chk.errors.empty()) chk.error("sweep", "needs at least one nonempty grid");
}

Index problem_dual_dim(const Problem& p) {
  return std::holds_alternative<LinearlyConstrainedQP>(p) ? std::get<LinearlyConstrainedQP>(p).m()
                                                          : std::get<SeparableQP>(p).m();
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::GppaExact: return "gppa_exact";
    case ExperimentKind::GppaInexact: return "gppa_inexact";
    case ExperimentKind::Alm: return "alm";
    case ExperimentKind::Admm: return "admm";
    case ExperimentKind::RateSweep: return "rate_sweep";
    case ExperimentKind::SuperlinearProbe: return "superlinear_probe";
    case ExperimentKind::Equivalence: return "equivalence";
  }
  return "unknown";
}

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::GppaExact, ExperimentKind::GppaInexact, ExperimentKind::Alm,
                 ExperimentKind::Admm, ExperimentKind::RateSweep, ExperimentKind::SuperlinearProbe,
                 ExperimentKind::Equivalence}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

MonotoneOperator build_operator(const OperatorConfig& config) {
  if (config.type == OperatorConfig::Type::Rotation) return make_rotation_operator({config.a});
  AffineOperatorSpec spec;
  spec.G = config.G;
  spec.h = config.h;
  spec.inverse_lipschitz_modulus = config.modulus;
  return make_affine_operator(spec);
}

ConfigParse parse_config_text(std::string_view text, const std::filesystem::path& base_dir) {
  ConfigParse result;
  Checker chk;
  json doc;
  try {
    doc = detail::parse_json_text(text, "config");
  } catch (const ParseError& e) {
    result.errors.emplace_back(e.what());
    return result;
  }
  if (!doc.is_object()) {
    result.errors.emplace_back("config: expected a JSON object");
    return result;
  }
  chk.unknown_keys(doc, "", kTopLevelKeys);

  ExperimentConfig cfg;
  bool kind_known = false;
  if (!doc.contains("kind") || !doc["kind"].is_string()) {
    chk.error("kind", "missing; expected one of gppa_exact, gppa_inexact, alm, admm, rate_sweep, "
                      "superlinear_probe, equivalence");
  } else if (auto k = parse_experiment_kind(doc["kind"].get<std::string>())) {
    cfg.kind = *k;
    kind_known = true;
  } else {
    chk.error("kind", "unknown experiment kind '" + doc["kind"].get<std::string>() + "'");
  }

  if (doc.contains("gamma")) {
    if (auto g = chk.number(doc["gamma"], "gamma")) {
      cfg.gppa.gamma = *g;
      chk.check_gamma(*g, "gamma");
    }
  }
  bool c_given = doc.contains("c");
  if (c_given) {
    if (auto s = parse_c_schedule(chk, doc["c"])) cfg.gppa.c_schedule = *s;
  }
  if (doc.contains("delta")) {
    const auto& d = doc["delta"];
    if (!d.is_object()) {
      chk.error("delta", "expected an object with delta0 and rate");
    } else {
      chk.unknown_keys(d, "delta", {"delta0", "rate"});
      DeltaSchedule ds;
      if (!d.contains("delta0")) chk.error("delta.delta0", "missing");
      else if (auto v = chk.number(d["delta0"], "delta.delta0")) ds.delta0 = *v;
      if (d.contains("rate")) {
        if (auto v = chk.number(d["rate"], "delta.rate")) ds.rate = *v;
      }
      for (const auto& e : ds.validation_errors()) chk.error("delta", e);
      cfg.gppa.delta_schedule = ds;
    }
  }
  if (doc.contains("max_iter")) {
    if (auto v = chk.integer(doc["max_iter"], "max_iter")) {
      if (*v < 1 || *v > 10'000'000) chk.error("max_iter", "must be >= 1, got " + std::to_string(*v));
      else cfg.gppa.max_iter = static_cast<int>(*v);
    }
  }
  if (doc.contains("residual_tol")) {
    if (auto v = chk.number(doc["residual_tol"], "residual_tol")) {
      if (!(*v >= 0.0)) chk.error("residual_tol", "must be >= 0, got " + num(*v));
      cfg.gppa.residual_tol = *v;
    }
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) chk.error("seed", "expected a nonnegative integer");
    else cfg.gppa.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("window_fraction")) {
    if (auto v = chk.number(doc["window_fraction"], "window_fraction")) {
      if (!(*v > 0.0 && *v <= 1.0)) chk.error("window_fraction", "must lie in (0,1], got " + num(*v));
      cfg.window_fraction = *v;
    }
  }
  if (doc.contains("rate_tolerance")) {
    if (auto v = chk.number(doc["rate_tolerance"], "rate_tolerance")) {
      if (!(*v >= 0.0)) chk.error("rate_tolerance", "must be >= 0, got " + num(*v));
      cfg.rate_tolerance = *v;
    }
  }
  if (doc.contains("out_dir")) {
    if (!doc["out_dir"].is_string()) chk.error("out_dir", "expected a path string");
    else cfg.out_dir = doc["out_dir"].get<std::string>();
  }
  if (doc.contains("workers")) {
    if (auto v = chk.integer(doc["workers"], "workers")) {
      if (*v < 1 || *v > 1024) chk.error("workers", "must be in [1, 1024], got " + std::to_string(*v));
      else cfg.workers = static_cast<int>(*v);
    }
  }
  for (const char* key : {"z0", "p0"}) {
    if (!doc.contains(key)) continue;
    if (auto v = chk.numbers(doc[key], key)) {
      Vector vec = Eigen::Map<const Vector>(v->data(), static_cast<Index>(v->size()));
      (std::string(key) == "z0" ? cfg.z0 : cfg.p0) = vec;
    }
  }
  if (doc.contains("operator")) cfg.op = parse_operator(chk, doc["operator"]);
  if (doc.contains("problem") && doc.contains("problem_file")) {
    chk.error("problem", "give either an inline problem or problem_file, not both");
  } else if (doc.contains("problem")) {
    chk.guard("problem", [&] { cfg.problem = detail::problem_from_json_value(doc["problem"], "problem"); });
  } else if (doc.contains("problem_file")) {
    if (!doc["problem_file"].is_string()) {
      chk.error("problem_file", "expected a path string");
    } else {
      std::filesystem::path p = doc["problem_file"].get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      cfg.problem_file = p;
      chk.guard("problem_file", [&] { cfg.problem = load_problem_file(p); });
    }
  }
  if (cfg.problem) {
    const auto errs = std::visit([](const auto& p) { return p.validation_errors(); }, *cfg.problem);
    for (const auto& e : errs) chk.error("problem", e);
  }
  if (doc.contains("sweep")) parse_sweep(chk, doc["sweep"], cfg.sweep);

  if (kind_known) {
    const auto kind = cfg.kind;
    const bool uses_operator = kind == ExperimentKind::GppaExact ||
                               kind == ExperimentKind::GppaInexact ||
                               kind == ExperimentKind::RateSweep ||
                               kind == ExperimentKind::SuperlinearProbe;
    const std::string kname(to_string(kind));
    const auto forbid = [&](bool present, const char* field) {
      if (present) chk.error(field, "not used by " + kname + " experiments");
    };
    if (uses_operator) {
      if (!doc.contains("operator")) chk.error("operator", "required for " + kname);
      if (!doc.contains("z0")) chk.error("z0", "required for " + kname);
      forbid(doc.contains("problem") || doc.contains("problem_file"), "problem");
      forbid(doc.contains("p0"), "p0");
      // a rotation fixes the dimension even when its other fields are invalid
      std::optional<Index> dim;
      if (cfg.op) {
        dim = cfg.op->type == OperatorConfig::Type::Rotation ? 2 : cfg.op->G.rows();
      } else if (doc.contains("operator") && doc["operator"].is_object() &&
                 doc["operator"].value("type", json()) == "rotation") {
        dim = 2;
      }
      if (dim && cfg.z0 && cfg.z0->size() != *dim) {
        chk.error("z0", "expected dimension " + std::to_string(*dim) + ", got " +
                            std::to_string(cfg.z0->size()));
      }
    } else {
      if (!doc.contains("problem") && !doc.contains("problem_file")) {
        chk.error("problem", "required for " + kname + " (inline or problem_file)");
      }
      forbid(doc.contains("operator"), "operator");
      forbid(doc.contains("delta"), "delta");
      forbid(!cfg.sweep.delta0.empty(), "sweep.delta0");
    }

    const bool inexact_capable = kind == ExperimentKind::GppaInexact || kind == ExperimentKind::RateSweep;
    if (kind == ExperimentKind::GppaExact || kind == ExperimentKind::SuperlinearProbe) {
      forbid(doc.contains("delta"), "delta");
      forbid(!cfg.sweep.delta0.empty(), "sweep.delta0");
    }
    if (kind == ExperimentKind::GppaInexact && !doc.contains("delta")) {
      chk.error("delta", "required for gppa_inexact");
    }
    if (inexact_capable && !cfg.sweep.delta0.empty() && !doc.contains("delta") &&
        kind == ExperimentKind::RateSweep) {
      cfg.gppa.delta_schedule = DeltaSchedule{};
    }
    if (kind == ExperimentKind::RateSweep && (cfg.sweep.gamma.empty() || cfg.sweep.c.empty())) {
      chk.error("sweep", "rate_sweep needs nonempty gamma and c grids");
    }
    if (kind == ExperimentKind::SuperlinearProbe) {
      if (cfg.op && cfg.op->type != OperatorConfig::Type::Rotation) {
        chk.error("operator.type", "superlinear_probe needs the rotation operator");
      }
      if (!c_given || !doc["c"].is_object() || doc["c"].value("type", "") != "geometric") {
        chk.error("c", "superlinear_probe needs a geometric schedule {type: geometric, c0, ratio}");
      }
      forbid(!cfg.sweep.c.empty(), "sweep.c");
      if (cfg.gppa.max_iter < 10) chk.error("max_iter", "superlinear_probe needs max_iter >= 10");
    }
    const bool separable = cfg.problem && std::holds_alternative<SeparableQP>(*cfg.problem);
    const bool lcqp = cfg.problem && std::holds_alternative<LinearlyConstrainedQP>(*cfg.problem);
    if (kind == ExperimentKind::Alm && cfg.problem && !lcqp) {
      chk.error("problem", "alm needs a linearly_constrained_qp");
    }
    if (kind == ExperimentKind::Admm && cfg.problem && !separable) {
      chk.error("problem", "admm needs a separable_qp");
    }
    if (kind == ExperimentKind::Admm || (kind == ExperimentKind::Equivalence && separable)) {
      forbid(c_given, "c");
      forbid(!cfg.sweep.c.empty(), "sweep.c");
      forbid(doc.contains("p0"), "p0");
    }
    if (kind == ExperimentKind::Alm || (kind == ExperimentKind::Equivalence && lcqp)) {
      forbid(doc.contains("z0"), "z0");
    }
    if (cfg.problem) {
      const Index m = problem_dual_dim(*cfg.problem);
      for (const auto& [vec, name] : {std::pair{&cfg.z0, "z0"}, std::pair{&cfg.p0, "p0"}}) {
        if (*vec && (*vec)->size() != m && !uses_operator) {
          chk.error(name, "expected dimension " + std::to_string(m) + ", got " +
                              std::to_string((*vec)->size()));
        }
      }
    }
  }

  result.errors = std::move(chk.errors);
  result.io_error = chk.io_error;
  if (result.errors.empty()) result.config = std::move(cfg);
  return result;
}

ConfigParse parse_config_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  return parse_config_text(text, path.parent_path());
}

std::vector<PlannedRun> plan_runs(const ExperimentConfig& config) {
  const auto axis = [](const std::vector<double>& grid) {
    std::vector<std::optional<double>> out(grid.begin(), grid.end());
    if (out.empty()) out.emplace_back();
    return out;
  };
  std::vector<PlannedRun> runs;
  for (const auto& g : axis(config.sweep.gamma)) {
    for (const auto& c : axis(config.sweep.c)) {
      for (const auto& d : axis(config.sweep.delta0)) {
        PlannedRun run;
        run.order = static_cast<int>(runs.size());
        char id[32];
        std::snprintf(id, sizeof id, "run_%04d", run.order);
        run.id = id;
        run.gamma = g.value_or(config.gppa.gamma);
        run.c = c;
        run.delta0 = d;
        run.seed = config.gppa.seed + static_cast<std::uint64_t>(run.order);
        runs.push_back(std::move(run));
      }
    }
  }
  return runs;
}

}  // namespace gppa
