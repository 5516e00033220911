#pragma once

#include "oulcut/ensembles.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace oulcut::cli {

using json = nlohmann::ordered_json;

inline constexpr const char* kManifestSchema = "v1";
inline constexpr const char* kOutputRootEnv = "OULCUT_OUTPUT_ROOT";

enum class ExperimentKind { DistanceCurve, Profile, VerifyCutoff, Superposition, Average, ConditionChecks };
std::string to_string(ExperimentKind k);

//! Parsed experiment document. `raw` keeps the input for the manifest.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Profile;
  json raw;
  std::string path;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string output_dir;
};

struct RunOptions {
  std::string out_dir;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> workers;
};

struct RunResult {
  int exit_code = 0;
  std::string out_dir;
  std::vector<std::string> files;  // relative to out_dir
  json manifest;
  json error;
};

//! Reads and checks the document; throws ValidationError on malformed input.
ExperimentConfig load_config(const std::string& path, const RunOptions& opt = {});

LevyModel parse_model(const json& j, const std::string& base_dir = ".");
DriftSpectrum parse_drift(const json& cfg);
std::vector<double> parse_grid(const json& j);

//! Executes the experiment and writes CSV, plot data and manifest.json (or error.json).
RunResult run(const std::string& config_path, const RunOptions& opt = {});

//! Dry run: prints the resolved plan; returns 0, or 2 on parse errors.
int describe(const std::string& config_path, std::ostream& out, const RunOptions& opt = {});

//! RFC-4180 writer with '.' decimals and CRLF records.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<std::string>& fields);
  std::string str() const { return buf_; }

 private:
  void record(const std::vector<std::string>& fields);
  std::size_t width_;
  std::string buf_;
};

std::string num(double v);

int main_entry(int argc, char** argv);

}  // namespace oulcut::cli
