#include "runner.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace oulcut::cli {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw ValidationError("config: " + msg); }

const json& at(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) bad(std::string("missing '") + key + "'");
  return j.at(key);
}

double number(const json& j, const char* what) {
  if (!j.is_number()) bad(std::string("'") + what + "' must be a number");
  return j.get<double>();
}

double number_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? number(j.at(key), key) : fallback;
}

std::vector<double> numbers(const json& j, const char* what) {
  std::vector<double> out;
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) bad(std::string("'") + what + "' must be a number or a list");
  for (const auto& v : j) out.push_back(number(v, what));
  return out;
}

Vec vec(const json& j, const char* what) {
  const auto xs = numbers(j, what);
  Vec v(xs.size());
  for (size_t i = 0; i < xs.size(); ++i) v[i] = xs[i];
  return v;
}

Mat matrix(const json& j, const char* what) {
  if (j.is_number()) return Mat::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) bad(std::string("'") + what + "' must be a list of rows");
  const size_t n = j.size();
  Mat m(n, n);
  for (size_t r = 0; r < n; ++r) {
    const auto row = numbers(j[r], what);
    if (row.size() != n) bad(std::string("'") + what + "' must be square");
    for (size_t c = 0; c < n; ++c) m(r, c) = row[c];
  }
  return m;
}

JumpLaw parse_law(const json& j, const std::string& base_dir) {
  const std::string kind = at(j, "kind").get<std::string>();
  if (kind == "atoms") {
    const auto& pts = at(j, "points");
    const auto w = numbers(at(j, "weights"), "weights");
    if (pts.is_array() && !pts.empty() && pts[0].is_array()) {
      std::vector<Vec> ps;
      for (const auto& p : pts) ps.push_back(vec(p, "points"));
      return JumpLaw::atoms(std::move(ps), w);
    }
    return JumpLaw::atoms_1d(numbers(pts, "points"), w);
  }
  if (kind == "exponential") return JumpLaw::exponential(number(at(j, "mean"), "mean"));
  if (kind == "pareto")
    return JumpLaw::pareto(number(at(j, "x_min"), "x_min"), number(at(j, "index"), "index"));
  if (kind == "log_tail") return JumpLaw::log_tail();
  if (kind == "gaussian") return JumpLaw::gaussian(vec(at(j, "mean"), "mean"), matrix(at(j, "cov"), "cov"));
  if (kind == "csv") {
    fs::path p = at(j, "path").get<std::string>();
    if (p.is_relative()) p = fs::path(base_dir) / p;
    if (!fs::exists(p)) bad("jump law file not found: " + p.string());
    return JumpLaw::from_csv(p.string());
  }
  bad("unknown jump law kind '" + kind + "'");
}

}  // namespace

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::DistanceCurve: return "DistanceCurve";
    case ExperimentKind::Profile: return "Profile";
    case ExperimentKind::VerifyCutoff: return "VerifyCutoff";
    case ExperimentKind::Superposition: return "Superposition";
    case ExperimentKind::Average: return "Average";
    case ExperimentKind::ConditionChecks: return "ConditionChecks";
  }
  return "?";
}

LevyModel parse_model(const json& j, const std::string& base_dir) {
  const std::string type = at(j, "type").get<std::string>();
  if (type == "brownian") {
    if (j.contains("cov")) return LevyModel::brownian(matrix(j.at("cov"), "cov"));
    return LevyModel::brownian(number_or(j, "variance", 1.0), number_or(j, "drift", 0.0));
  }
  if (type == "stable") {
    StableParams p;
    p.alpha = number(at(j, "alpha"), "alpha");
    p.c = number_or(j, "c", 1.0);
    p.beta = number_or(j, "beta", 0.0);
    p.a = number_or(j, "a", 0.0);
    return LevyModel::stable_1d(p);
  }
  if (type == "stable_isotropic")
    return LevyModel::stable_isotropic(static_cast<int>(number(at(j, "dim"), "dim")),
                                       number(at(j, "alpha"), "alpha"), number_or(j, "c", 1.0));
  if (type == "compound_poisson") {
    JumpLaw law = parse_law(at(j, "law"), base_dir);
    Vec drift = j.contains("drift") ? vec(j.at("drift"), "drift") : Vec();
    return LevyModel::compound_poisson(number(at(j, "rate"), "rate"), std::move(law), drift);
  }
  if (type == "factorial_series") return LevyModel::factorial_series();
  if (type == "sum") {
    const auto& parts = at(j, "parts");
    if (!parts.is_array() || parts.empty()) bad("'parts' must be a nonempty list");
    Vec drift;
    Mat gauss;
    std::vector<JumpComponent> jumps;
    for (const auto& p : parts) {
      const LevyModel m = parse_model(p, base_dir);
      if (drift.size() == 0) {
        drift = Vec::Zero(m.dim());
        gauss = Mat::Zero(m.dim(), m.dim());
      }
      if (m.dim() != drift.size()) bad("summands of different dimension");
      drift += m.drift();
      gauss += m.gaussian();
      jumps.insert(jumps.end(), m.jumps().begin(), m.jumps().end());
    }
    return LevyModel(drift, gauss, jumps);
  }
  bad("unknown model type '" + type + "'");
}

DriftSpectrum parse_drift(const json& cfg) {
  if (cfg.contains("Q")) return DriftSpectrum::validate(matrix(cfg.at("Q"), "Q"));
  if (cfg.contains("gamma")) return DriftSpectrum::scalar(number(cfg.at("gamma"), "gamma"));
  bad("missing 'Q' (matrix) or 'gamma'");
}

std::vector<double> parse_grid(const json& j) {
  std::vector<double> g;
  if (j.is_object()) {
    const double from = number(at(j, "from"), "from"), to = number(at(j, "to"), "to");
    const int count = static_cast<int>(number(at(j, "count"), "count"));
    if (count < 1) bad("grid count must be positive");
    if (count == 1) return {from};
    for (int k = 0; k < count; ++k) g.push_back(from + (to - from) * k / (count - 1));
  } else {
    g = numbers(j, "grid");
  }
  if (g.empty()) bad("empty grid");
  return g;
}

ExperimentConfig load_config(const std::string& path, const RunOptions& opt) {
  std::ifstream in(path);
  if (!in) bad("cannot open " + path);
  ExperimentConfig c;
  c.path = path;
  try {
    c.raw = json::parse(in);
  } catch (const json::parse_error& e) {
    bad(std::string("parse error: ") + e.what());
  }
  const std::string kind = at(c.raw, "kind").get<std::string>();
  bool found = false;
  for (auto k : {ExperimentKind::DistanceCurve, ExperimentKind::Profile, ExperimentKind::VerifyCutoff,
                 ExperimentKind::Superposition, ExperimentKind::Average, ExperimentKind::ConditionChecks})
    if (to_string(k) == kind) {
      c.kind = k;
      found = true;
    }
  if (!found) bad("unknown kind '" + kind + "'");
  if (opt.seed_override) {
    c.seed = *opt.seed_override;
  } else {
    const auto& s = at(c.raw, "seed");
    if (!s.is_number_unsigned() && !s.is_number_integer()) bad("'seed' must be a non-negative integer");
    c.seed = s.get<std::uint64_t>();
  }
  c.workers = opt.workers ? *opt.workers
                          : static_cast<int>(number_or(c.raw, "workers", 0.0));
  if (c.workers < 0) bad("'workers' must be >= 0");
  if (!opt.out_dir.empty()) {
    c.output_dir = opt.out_dir;
  } else if (c.raw.contains("output_dir")) {
    c.output_dir = c.raw.at("output_dir").get<std::string>();
  } else {
    const char* root = std::getenv(kOutputRootEnv);
    c.output_dir = (fs::path(root ? root : "out") / fs::path(path).stem()).string();
  }
  return c;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) { record(header); }

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != width_) throw std::logic_error("csv row width mismatch");
  record(fields);
}

void CsvWriter::record(const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) buf_ += ',';
    const std::string& f = fields[i];
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
      buf_ += f;
      continue;
    }
    buf_ += '"';
    for (char ch : f) {
      if (ch == '"') buf_ += '"';
      buf_ += ch;
    }
    buf_ += '"';
  }
  buf_ += "\r\n";
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace oulcut::cli
