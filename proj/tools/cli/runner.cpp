#include "runner.hpp"

#include <CLI11.hpp>

#include <Eigen/Core>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

namespace oulcut::cli {

namespace fs = std::filesystem;

namespace {

struct Artifacts {
  std::map<std::string, std::string> files;  // sorted: deterministic manifest order
  json results = json::object();
  json invariants = json::object();
};

json report_json(const ConditionReport& r) {
  json ev = json::array();
  for (const auto& [x, y] : r.evidence) ev.push_back({x, y});
  return {{"condition", to_string(r.name)}, {"verdict", to_string(r.verdict)}, {"note", r.note},
          {"evidence", ev}};
}

json check(bool pass, double value) { return {{"pass", pass}, {"value", value}}; }

std::string base_dir(const ExperimentConfig& c) {
  return fs::path(c.path).parent_path().empty() ? "." : fs::path(c.path).parent_path().string();
}

Vec parse_x0(const json& raw, int dim) {
  if (!raw.contains("x0")) throw ValidationError("config: missing 'x0'");
  const auto& j = raw.at("x0");
  Vec v;
  if (j.is_number()) {
    v = Vec::Constant(1, j.get<double>());
  } else {
    v.resize(j.size());
    for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  }
  if (v.size() != dim) throw ValidationError("config: x0 dimension does not match the model");
  return v;
}

std::vector<double> parse_eps(const json& raw, const char* key = "eps") {
  if (!raw.contains(key)) throw ValidationError(std::string("config: missing '") + key + "'");
  const auto eps = parse_grid(raw.at(key));
  for (double e : eps)
    if (!(e > 0.0 && e < 1.0)) throw ValidationError("epsilon out of (0,1)");
  return eps;
}

std::vector<double> grid_or(const json& raw, const char* key, std::vector<double> fallback) {
  return raw.contains(key) ? parse_grid(raw.at(key)) : fallback;
}

std::vector<double> default_c_grid() {
  std::vector<double> c;
  for (int k = 0; k < 25; ++k) c.push_back(-4.0 + k / 3.0);
  return c;
}

ProfileMethod parse_method(const json& raw, ProfileMethod fallback = ProfileMethod::DensityShift) {
  if (!raw.contains("method")) return fallback;
  const auto m = raw.at("method").get<std::string>();
  if (m == "density") return ProfileMethod::DensityShift;
  if (m == "monte_carlo") return ProfileMethod::MonteCarlo;
  throw ValidationError("config: unknown method '" + m + "'");
}

MonteCarloOptions mc_options(const ExperimentConfig& c) {
  MonteCarloOptions mc;
  mc.samples = c.raw.contains("samples") ? c.raw.at("samples").get<long>() : 100000;
  mc.seed = c.seed;
  mc.workers = c.workers;
  if (mc.samples < 1000) throw ValidationError("config: 'samples' must be >= 1000");
  return mc;
}

// cheap invariant suites of the modules a model-based run touches
void model_invariants(Artifacts& art, const LevyModel& model, const DriftSpectrum& spec,
                      const Vec& x0) {
  const int d = model.dim();
  const double psi0 = std::abs(char_exponent(model, Vec::Zero(d)));
  art.invariants["levy_models"] = {{"char_exponent_at_zero", check(psi0 < 1e-14, psi0)},
                                   {"log_moment", to_string(has_log_moment(model).verdict)}};
  json md = {{"spectrum_in_M_plus", check(spec.min_real() > 0.0, spec.min_real())}};
  if (x0.norm() > 0.0) {
    const auto asym = asymptotic_decomposition(spec, x0);
    const double r = asym.expansion_residual(spec, 50.0 / asym.gamma);
    md["expansion_residual_t50"] = check(r <= 1e-6, r);
  }
  art.invariants["matrix_dynamics"] = md;
  try {
    require_density_regime(model, spec);
    CfEvaluator ev(model, spec);
    const cplx one = ev.invariant(1.0, Vec::Zero(d));
    const auto f = natural_invariant_density(ev, 0.0);
    art.invariants["char_engine"] = {
        {"invariant_cf_at_zero", check(std::abs(one - 1.0) < 1e-12, std::abs(one - 1.0))},
        {"invariant_density_mass", check(std::abs(f.pre_clip_mass - 1.0) < 1e-4, f.pre_clip_mass)}};
    json tv = json::object();
    const auto rep = property_suite_appendix(f, {});
    for (const auto& it : rep.items)
      tv[it.name] = {{"pass", it.pass}, {"skipped", it.skipped}, {"max_violation", it.max_violation}};
    tv["all_pass"] = rep.all_pass();
    art.invariants["tv_metrics"] = tv;
  } catch (const DensityRegimeUnavailable& e) {
    art.invariants["char_engine"] = {{"skipped", e.what()}};
    art.invariants["tv_metrics"] = {{"skipped", e.what()}};
  }
}

// ---------------------------------------------------------------- kinds

void run_distance(const ExperimentConfig& c, Artifacts& art) {
  const LevyModel model = parse_model(c.raw.at("model"), base_dir(c));
  const DriftSpectrum spec = parse_drift(c.raw);
  const Vec x0 = parse_x0(c.raw, model.dim());
  const auto eps_list = parse_eps(c.raw);
  const auto method = parse_method(c.raw);
  const auto mc = mc_options(c);
  const auto asym = asymptotic_decomposition(spec, x0);
  const bool relative = c.raw.contains("c");
  const auto grid = relative ? parse_grid(c.raw.at("c")) : parse_grid(c.raw.at("t"));

  CsvWriter out({"eps", "c", "t", "d", "stderr", "method", "beyond_resolution"});
  CsvWriter plot({"eps", "t", "d", "stderr"});
  json sched = json::array();
  for (double eps : eps_list) {
    const auto s = cutoff_schedule(asym.gamma, asym.ell, eps);
    sched.push_back({{"eps", eps}, {"t_eps", s.t_eps}, {"w_eps", s.w_eps}});
    std::vector<double> ts;
    for (double g : grid) ts.push_back(relative ? s.time(g) : g);
    const auto pts = distance_curve(model, spec, eps, x0, ts, method, mc);
    for (size_t k = 0; k < pts.size(); ++k) {
      const auto& e = pts[k].estimate;
      out.row({num(eps), relative ? num(grid[k]) : "", num(pts[k].t), num(e.value), num(e.std_error),
               to_string(e.method), e.beyond_resolution ? "true" : "false"});
      plot.row({num(eps), num(pts[k].t), num(e.value), num(e.std_error)});
    }
  }
  art.files["distance.csv"] = out.str();
  art.files["plot_distance.csv"] = plot.str();
  art.results = {{"schedules", sched}, {"gamma", asym.gamma}, {"ell", asym.ell}};
  model_invariants(art, model, spec, x0);
}

void run_profile(const ExperimentConfig& c, Artifacts& art) {
  const LevyModel model = parse_model(c.raw.at("model"), base_dir(c));
  const DriftSpectrum spec = parse_drift(c.raw);
  const Vec x0 = parse_x0(c.raw, model.dim());
  const auto grid = grid_or(c.raw, "c", default_c_grid());
  const auto method = parse_method(c.raw);
  const auto asym = asymptotic_decomposition(spec, x0);
  CsvWriter plot({"c", "G", "stderr"});
  json checks = json::object();
  if (!asym.oscillatory) {
    const auto curve = profile_curve(model, spec, asym, grid, method, mc_options(c));
    CsvWriter out({"c", "G", "stderr", "method"});
    for (size_t k = 0; k < grid.size(); ++k) {
      const auto& e = curve.values[k];
      out.row({num(grid[k]), num(e.value), num(e.std_error), to_string(e.method)});
      plot.row({num(grid[k]), num(e.value), num(e.std_error)});
    }
    art.files["profile.csv"] = out.str();
    checks = {{"monotone", curve.monotone},
              {"limits", {{"left", curve.left_limit}, {"right", curve.right_limit}, {"pass", curve.limits_ok()}}}};
  } else {
    CsvWriter out({"c", "lower", "upper", "width", "collapsed"});
    for (double cc : grid) {
      const auto b = oscillation_profile_band(model, spec, asym, cc);
      out.row({num(cc), num(b.lower.value), num(b.upper.value), num(b.width()), b.collapsed ? "true" : "false"});
      plot.row({num(cc), num(0.5 * (b.lower.value + b.upper.value)), num(0.5 * b.width())});
    }
    art.files["profile_band.csv"] = out.str();
  }
  art.files["plot_profile.csv"] = plot.str();
  art.results = {{"gamma", asym.gamma}, {"ell", asym.ell}, {"oscillatory", asym.oscillatory},
                 {"method", to_string(method)}, {"points", grid.size()}};
  art.invariants["cutoff_lab"] = checks;
  model_invariants(art, model, spec, x0);
}

CutoffLevel parse_level(const json& raw) {
  const std::string l = raw.contains("level") ? raw.at("level").get<std::string>() : "profile";
  if (l == "cutoff") return CutoffLevel::Cutoff;
  if (l == "window") return CutoffLevel::Window;
  if (l == "profile") return CutoffLevel::Profile;
  throw ValidationError("config: unknown level '" + l + "'");
}

void run_verify(const ExperimentConfig& c, Artifacts& art) {
  const LevyModel model = parse_model(c.raw.at("model"), base_dir(c));
  const DriftSpectrum spec = parse_drift(c.raw);
  const Vec x0 = parse_x0(c.raw, model.dim());
  const auto eps_list = parse_eps(c.raw);
  const auto rep = verify_cutoff(model, spec, eps_list, x0, parse_level(c.raw), c.workers);
  CsvWriter rows({"eps", "c", "t", "d", "stderr", "reference", "tag"});
  CsvWriter plot({"eps", "t", "d", "stderr"});
  for (const auto& r : rep.rows) {
    rows.row({num(r.eps), num(r.c), num(r.t), num(r.estimate.value), num(r.estimate.std_error),
              r.reference >= 0.0 ? num(r.reference) : "", r.tag});
    plot.row({num(r.eps), num(r.t), num(r.estimate.value), num(r.estimate.std_error)});
  }
  CsvWriter checks({"check", "pass", "detail"});
  json cj = json::object();
  for (const auto& ch : rep.checks) {
    checks.row({ch.name, ch.pass ? "true" : "false", ch.detail});
    cj[ch.name] = ch.pass;
  }
  art.files["cutoff_rows.csv"] = rows.str();
  art.files["cutoff_checks.csv"] = checks.str();
  art.files["plot_cutoff.csv"] = plot.str();
  art.results = {{"level", to_string(rep.level)},
                 {"pass", rep.pass},
                 {"max_profile_deviation", rep.max_profile_deviation},
                 {"band_width", rep.band_width}};
  cj["all_pass"] = rep.pass;
  art.invariants["cutoff_lab"] = cj;
  model_invariants(art, model, spec, x0);
}

SuperpositionConfig parse_superposition(const ExperimentConfig& c) {
  SuperpositionConfig s;
  const auto& blocks = c.raw.at("blocks");
  if (!blocks.is_array() || blocks.empty()) throw ValidationError("config: 'blocks' must be a nonempty list");
  for (const auto& b : blocks)
    s.blocks.push_back({b.at("m").get<double>(), b.at("gamma").get<double>(), b.at("x").get<double>(),
                        parse_model(b.at("model"), base_dir(c))});
  if (c.raw.contains("tail_certificates"))
    for (const auto& [k, v] : c.raw.at("tail_certificates").items()) s.tail_certificates[k] = v.get<double>();
  if (c.raw.contains("j_max")) s.j_max = c.raw.at("j_max").get<int>();
  return s;
}

void run_superposition(const ExperimentConfig& c, Artifacts& art) {
  const auto s = parse_superposition(c);
  const auto rep = validate_superposition(s);
  CsvWriter series({"series", "block", "partial_sum", "declared_tail"});
  json ser = json::object();
  for (const auto& sc : rep.series) {
    for (size_t k = 0; k < sc.partial_sums.size(); ++k)
      series.row({sc.name, std::to_string(k + 1), num(sc.partial_sums[k]), num(sc.declared_tail)});
    ser[sc.name] = {{"finite", sc.finite}, {"divergence_trend", sc.divergence_trend}};
  }
  art.files["series.csv"] = series.str();
  json flags = json::array();
  for (const auto& f : rep.flags) flags.push_back(f);
  art.invariants["ensembles"] = {{"pass", rep.pass}, {"coercive", rep.coercive},
                                 {"degenerate_leading_term", rep.degenerate_leading_term},
                                 {"series", ser}, {"flags", flags}};
  art.results = {{"gamma_hat", rep.gamma_hat}, {"J", rep.J}, {"leading_sum", rep.leading_sum},
                 {"declared_tail_mass", rep.declared_tail_mass}};

  const auto grid = grid_or(c.raw, "c", default_c_grid());
  const auto method = parse_method(c.raw);
  CsvWriter prof({"c", "G", "stderr"});
  if (method == ProfileMethod::DensityShift) {
    const auto vals = superposition_profile_curve(s, grid);
    for (size_t k = 0; k < grid.size(); ++k) prof.row({num(grid[k]), num(vals[k].value), num(vals[k].std_error)});
  } else {
    const auto mc = mc_options(c);
    for (double cc : grid) {
      const auto e = superposition_profile(s, cc, method, mc);
      prof.row({num(cc), num(e.value), num(e.std_error)});
    }
  }
  art.files["superposition_profile.csv"] = prof.str();
  art.files["plot_superposition.csv"] = prof.str();

  if (c.raw.contains("eps")) {
    CsvWriter dist({"eps", "c", "t", "d"});
    json triples = json::array();
    for (double eps : parse_eps(c.raw)) {
      const auto sched = superposition_schedule(s, eps);
      for (double cc : grid) {
        const double t = sched.time(cc);
        dist.row({num(eps), num(cc), num(t), num(superposition_distance(s, eps, t).value)});
      }
      const auto tr = superposition_limit_triple(s, eps);
      triples.push_back({{"eps", eps}, {"t_eps", sched.t_eps}, {"w_eps", sched.w_eps},
                         {"a", tr.triple.a[0]}, {"sigma", tr.triple.sigma(0, 0)},
                         {"sigma_unscaled", tr.sigma_unscaled}, {"flags", tr.flags}});
    }
    art.files["superposition_distance.csv"] = dist.str();
    art.results["limit_triples"] = triples;
  }
}

AverageConfig parse_average(const ExperimentConfig& c) {
  AverageConfig a;
  const auto& st = c.raw.at("stable");
  a.stable.alpha = st.at("alpha").get<double>();
  a.stable.c = st.value("c", 1.0);
  a.stable.beta = st.value("beta", 0.0);
  a.stable.a = st.value("a", 0.0);
  a.gamma = c.raw.at("gamma").get<double>();
  a.x0 = c.raw.at("x0").get<double>();
  a.n = c.raw.at("n").get<long>();
  if (c.raw.contains("eps_n")) {
    a.eps_n = c.raw.at("eps_n").get<double>();
  } else {
    const auto rule = c.raw.value("eps_rule", std::string("1/n"));
    if (rule != "1/n") throw ValidationError("config: unknown eps_rule '" + rule + "'");
    a.eps_n = 1.0 / static_cast<double>(a.n);
  }
  a.validate();
  return a;
}

void run_average(const ExperimentConfig& c, Artifacts& art) {
  const auto a = parse_average(c);
  const auto sched = average_schedule(a);
  const auto grid = grid_or(c.raw, "c", {-2.0, 0.0, 2.0});
  const auto method = parse_method(c.raw, ProfileMethod::MonteCarlo);
  const long paths = c.raw.value("paths", 100000L);
  CsvWriter out({"c", "t", "d", "stderr", "profile", "profile_transition_scale"});
  CsvWriter plot({"c", "d", "stderr"});
  json agree = json::array();
  for (size_t k = 0; k < grid.size(); ++k) {
    const double t = sched.time(grid[k]);
    const auto e = method == ProfileMethod::MonteCarlo
                       ? average_distance_mc(a, t, paths, c.seed + k, c.workers)
                       : average_distance_density(a, t);
    const double g = average_profile(a, grid[k]).value;
    const double gt = average_profile_transition_scale(a, grid[k]).value;
    out.row({num(grid[k]), num(t), num(e.value), num(e.std_error), num(g), num(gt)});
    plot.row({num(grid[k]), num(e.value), num(e.std_error)});
    const double tol = std::max(0.03, 3.0 * e.std_error);
    agree.push_back({{"c", grid[k]}, {"stated_profile", std::abs(e.value - g) <= tol},
                     {"transition_scale_profile", std::abs(e.value - gt) <= tol}});
  }
  art.files["average.csv"] = out.str();
  art.files["plot_average.csv"] = plot.str();
  art.results = {{"t_n", sched.t_eps}, {"w_n", sched.w_eps}, {"eps_n", a.eps_n}, {"n", a.n},
                 {"method", to_string(method)}};
  const LevyModel agg = average_driving_model(a);
  double worst = 0.0;
  for (double z : {-3.0, -0.5, 0.7, 4.0}) {
    const double nn = static_cast<double>(a.n);
    worst = std::max(worst, std::abs(char_exponent(agg, Vec::Constant(1, z)) - nn * a.stable.exponent(z / nn)));
  }
  art.invariants["ensembles"] = {{"aggregate_exponent_identity", check(worst < 1e-10, worst)},
                                 {"profile_agreement", agree}};
}

void run_conditions(const ExperimentConfig& c, Artifacts& art) {
  const LevyModel model = parse_model(c.raw.at("model"), base_dir(c));
  std::vector<double> r_grid;
  for (int k = 1; k <= 300; ++k) r_grid.push_back(std::pow(10.0, -k));
  if (c.raw.contains("r_grid")) r_grid = parse_grid(c.raw.at("r_grid"));
  std::vector<ConditionReport> reps;
  reps.push_back(has_log_moment(model));
  const std::pair<SmallJumpVariant, ConditionName> variants[] = {
      {SmallJumpVariant::Kallenberg, ConditionName::Kallenberg},
      {SmallJumpVariant::BK1d, ConditionName::BodnarchukKulyk1d},
      {SmallJumpVariant::BKmulti, ConditionName::BodnarchukKulykMultiD},
      {SmallJumpVariant::NecessaryBound, ConditionName::NecessaryBound}};
  for (const auto& [v, name] : variants) {
    try {
      reps.push_back(check_small_jump_activity(model, r_grid, v));
    } catch (const ValidationError& e) {
      reps.push_back({name, Verdict::Inconclusive, {}, std::string("not applicable: ") + e.what()});
    }
  }
  if (c.raw.contains("orey_masuda")) {
    const auto& om = c.raw.at("orey_masuda");
    std::vector<double> radii;
    for (int k = 1; k <= 12; ++k) radii.push_back(std::pow(10.0, k));
    reps.push_back(check_orey_masuda(model, om.at("alpha").get<double>(), om.at("c").get<double>(),
                                     probe_directions(model.dim(), 8), radii));
  }
  json regime = nullptr;
  if (c.raw.contains("Q") || c.raw.contains("gamma")) {
    const DriftSpectrum spec = parse_drift(c.raw);
    reps.push_back(check_condition_H(model, spec, {2, 4, 8, 16, 32}, [](double r) { return std::log1p(r); }));
    const auto cert = smoothness_regime(model, spec);
    regime = {{"regime", to_string(cert.regime)}, {"alpha", cert.alpha}, {"constant", cert.constant},
              {"kappa_family", cert.kappa_family}, {"note", cert.note}};
  }
  CsvWriter out({"condition", "verdict", "note"});
  CsvWriter ev({"condition", "x", "y"});
  json list = json::array();
  for (const auto& r : reps) {
    out.row({to_string(r.name), to_string(r.verdict), r.note});
    for (const auto& [x, y] : r.evidence) ev.row({to_string(r.name), num(x), num(y)});
    list.push_back({{"condition", to_string(r.name)}, {"verdict", to_string(r.verdict)}});
  }
  art.files["conditions.csv"] = out.str();
  art.files["evidence.csv"] = ev.str();
  art.results = {{"conditions", list}, {"smoothness_regime", regime}};
  const double psi0 = std::abs(char_exponent(model, Vec::Zero(model.dim())));
  art.invariants["levy_models"] = {{"char_exponent_at_zero", check(psi0 < 1e-14, psi0)}};
}

json versions() {
  return {{"oulcut", "1.0.0"},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"cli11", CLI11_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream o(p, std::ios::binary);
  o << content;
  if (!o) throw NumericError("cannot write " + p.string());
}

json error_json(int code, const std::string& type, const std::string& msg) {
  return {{"schema", kManifestSchema}, {"status", "error"}, {"exit_code", code}, {"type", type}, {"message", msg}};
}

}  // namespace

RunResult run(const std::string& config_path, const RunOptions& opt) {
  RunResult res;
  auto fail = [&](int code, json err) {
    res.exit_code = code;
    res.error = std::move(err);
    if (!res.out_dir.empty()) {
      std::error_code ec;
      fs::create_directories(res.out_dir, ec);
      if (!ec) write_file(fs::path(res.out_dir) / "error.json", res.error.dump(2) + "\n");
    }
    return res;
  };
  try {
    const ExperimentConfig cfg = load_config(config_path, opt);
    res.out_dir = cfg.output_dir;
    Artifacts art;
    switch (cfg.kind) {
      case ExperimentKind::DistanceCurve: run_distance(cfg, art); break;
      case ExperimentKind::Profile: run_profile(cfg, art); break;
      case ExperimentKind::VerifyCutoff: run_verify(cfg, art); break;
      case ExperimentKind::Superposition: run_superposition(cfg, art); break;
      case ExperimentKind::Average: run_average(cfg, art); break;
      case ExperimentKind::ConditionChecks: run_conditions(cfg, art); break;
    }
    fs::create_directories(res.out_dir);
    json outputs = json::array();
    for (const auto& [name, content] : art.files) {
      write_file(fs::path(res.out_dir) / name, content);
      res.files.push_back(name);
      outputs.push_back(name);
    }
    res.manifest = {{"schema", kManifestSchema},
                    {"status", "ok"},
                    {"kind", to_string(cfg.kind)},
                    {"config", cfg.raw},
                    {"seed", cfg.seed},
                    {"workers", cfg.workers},
                    {"versions", versions()},
                    {"outputs", outputs},
                    {"results", art.results},
                    {"invariants", art.invariants}};
    write_file(fs::path(res.out_dir) / "manifest.json", res.manifest.dump(2) + "\n");
    res.files.push_back("manifest.json");
    return res;
  } catch (const DensityRegimeUnavailable& e) {
    auto err = error_json(3, "DensityRegimeUnavailable", e.what());
    err["report"] = report_json(e.report());
    return fail(3, err);
  } catch (const ValidationError& e) {
    return fail(2, error_json(2, "ValidationError", e.what()));
  } catch (const json::exception& e) {
    return fail(2, error_json(2, "ValidationError", std::string("config: ") + e.what()));
  } catch (const NumericError& e) {
    return fail(3, error_json(3, "NumericError", e.what()));
  } catch (const std::exception& e) {
    return fail(3, error_json(3, "NumericError", e.what()));
  }
}

int describe(const std::string& config_path, std::ostream& out, const RunOptions& opt) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path, opt);
  } catch (const std::exception& e) {
    out << error_json(2, "ValidationError", e.what()).dump() << "\n";
    return 2;
  }
  out << "kind: " << to_string(cfg.kind) << "\n"
      << "seed: " << cfg.seed << "\n"
      << "workers: " << (cfg.workers == 0 ? "available parallelism" : std::to_string(cfg.workers)) << "\n"
      << "output: " << cfg.output_dir << "\n";
  // everything below is informational; problems are printed, not raised
  auto line = [&](const std::string& k, const std::function<std::string()>& f) {
    try {
      out << k << ": " << f() << "\n";
    } catch (const std::exception& e) {
      out << k << ": invalid (" << e.what() << ")\n";
    }
  };
  const json& raw = cfg.raw;
  auto grid_size = [&](const char* key, size_t fallback) {
    return raw.contains(key) ? parse_grid(raw.at(key)).size() : fallback;
  };
  if (raw.contains("model")) {
    line("model", [&] {
      const auto m = parse_model(raw.at("model"), base_dir(cfg));
      return raw.at("model").at("type").get<std::string>() + " (dim " + std::to_string(m.dim()) + ")";
    });
    if (raw.contains("Q") || raw.contains("gamma")) {
      line("regime", [&] {
        const auto m = parse_model(raw.at("model"), base_dir(cfg));
        return to_string(smoothness_regime(m, parse_drift(raw)).regime);
      });
      line("asymptotics", [&] {
        const auto m = parse_model(raw.at("model"), base_dir(cfg));
        const auto a = asymptotic_decomposition(parse_drift(raw), parse_x0(raw, m.dim()));
        return "gamma=" + num(a.gamma) + " ell=" + std::to_string(a.ell) +
               (a.oscillatory ? " oscillatory" : "");
      });
    }
  }
  if (raw.contains("eps")) {
    line("schedules", [&] {
      std::string s;
      const auto eps = parse_eps(raw);
      double gamma = 1.0;
      int ell = 1;
      if (cfg.kind == ExperimentKind::Superposition) {
        const auto sc = superposition_schedule(parse_superposition(cfg), eps[0]);
        gamma = sc.gamma;
      } else {
        const auto m = parse_model(raw.at("model"), base_dir(cfg));
        const auto a = asymptotic_decomposition(parse_drift(raw), parse_x0(raw, m.dim()));
        gamma = a.gamma;
        ell = a.ell;
      }
      for (double e : eps) {
        const auto sc = cutoff_schedule(gamma, ell, e);
        s += "[eps=" + num(e) + " t_eps=" + num(sc.t_eps) + " w_eps=" + num(sc.w_eps) + "] ";
      }
      return s;
    });
  }
  if (cfg.kind == ExperimentKind::Average)
    line("schedule", [&] {
      const auto sc = average_schedule(parse_average(cfg));
      return "t_n=" + num(sc.t_eps) + " w_n=" + num(sc.w_eps);
    });
  line("work units", [&] {
    const size_t eps_n = raw.contains("eps") ? parse_grid(raw.at("eps")).size() : 1;
    size_t units = 0;
    switch (cfg.kind) {
      case ExperimentKind::DistanceCurve: units = eps_n * grid_size(raw.contains("c") ? "c" : "t", 0); break;
      case ExperimentKind::Profile: units = grid_size("c", 25); break;
      case ExperimentKind::VerifyCutoff: units = eps_n * 25; break;
      case ExperimentKind::Superposition: units = grid_size("c", 25) * (1 + (raw.contains("eps") ? eps_n : 0)); break;
      case ExperimentKind::Average: units = grid_size("c", 3); break;
      case ExperimentKind::ConditionChecks: units = 7; break;
    }
    return std::to_string(units) + " evaluations";
  });
  return 0;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Cut-off experiments for Levy-driven OU processes"};
  app.require_subcommand(1);
  RunOptions opt;
  std::string config;
  long long seed = -1;
  int workers = -1;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config, "experiment config (JSON)")->required();
    sub->add_option("--out-dir", opt.out_dir, "output directory");
    sub->add_option("--seed-override", seed, "replace the config seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--workers", workers, "worker threads (0: available parallelism)")
        ->check(CLI::NonNegativeNumber);
  };
  auto* run_cmd = app.add_subcommand("run", "execute an experiment");
  auto* desc_cmd = app.add_subcommand("describe", "print the resolved plan without running");
  add_common(run_cmd);
  add_common(desc_cmd);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (seed >= 0) opt.seed_override = static_cast<std::uint64_t>(seed);
  if (workers >= 0) opt.workers = workers;
  if (desc_cmd->parsed()) return describe(config, std::cout, opt);
  const auto res = run(config, opt);
  if (res.exit_code != 0) {
    std::cerr << res.error.dump() << "\n";
  } else {
    std::cout << "wrote " << res.files.size() << " files to " << res.out_dir << "\n";
  }
  return res.exit_code;
}

}  // namespace oulcut::cli
