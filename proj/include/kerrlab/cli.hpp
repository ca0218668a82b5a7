#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "kerrlab/evolution.hpp"
#include "kerrlab/multipliers.hpp"

namespace kerrlab::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int {
  kPass = 0,
  kFail = 1,       // a verification came out false
  kUsage = 2,      // bad command line
  kConfig = 3,     // config file unreadable or schema violation
  kNumerical = 4,  // blow-up, missing root, solver failure
  kIO = 5,
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error(field.empty() ? what : field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class IOError : public std::runtime_error {
 public:
  explicit IOError(const std::string& what) : std::runtime_error(what) {}
};

constexpr int kSchemaVersion = 1;

struct InitialSpec {
  std::string type = "pulse";     // zero | coulomb | pulse | mixed
  std::string field = "maxwell";  // pulse: fi (Upsilon only) | maxwell (curl of A_phi)
  double q_re = 0.0, q_im = 0.0;
  double center = 20.0, width = 3.0, amplitude = 1.0;
  int ell = 1, m = 0;
  std::vector<InitialSpec> components;
};

struct Scan {
  std::string parameter;  // a | T | n_r; empty: no scan
  std::vector<double> values;
};

// Lengths and times in units of M.
struct ScenarioConfig {
  ScenarioConfig();

  int schema_version = kSchemaVersion;
  double M = 1.0, a = 0.0;
  bool allow_large_a = false;
  evolution::GridSpec grid;
  InitialSpec initial;
  double T = 30.0;
  double r_gap = 0.1;
  double eps_dt2 = 0.05;
  double sample_dt = 1.0;
  double probe_rstar = 10.0;
  std::string output_dir = "out";
  unsigned seed = 0;
  // verification toggles
  bool refinement = true;       // core-estimates: rerun at 2 n_r
  bool window_doubling = true;  // core-estimates: rerun to 2T on a widened domain
  bool lower_bound = true;      // spectral-check
  int identity_samples = 10000; // verify-multiplier
  std::string variant = "basic";
  std::optional<double> C_lower; // spectral-check; unset: pass when some finite C works
  int spectral_stride = 1;      // spectral-check: keep every stride-th step
  Scan scan;

  KerrParams params() const { return KerrParams(M, a); }
};

// Strict: unknown keys, wrong types and out-of-range values throw ConfigError
// naming the JSON pointer of the field.
ScenarioConfig parse_config(const json& j);
// Syntax errors carry line and column.
ScenarioConfig load_config(const std::string& path);
json to_json(const ScenarioConfig& c);
// Cross-field checks, run again after command-line overrides.
void validate(const ScenarioConfig& c);

evolution::InitialData make_initial(const KerrParams& kp, const InitialSpec& s);
int initial_m(const InitialSpec& s);
bool has_maxwell(const InitialSpec& s);

// Same h, both ends moved out by `by`.
evolution::GridSpec widened(const evolution::GridSpec& g, double by);
// n_r - 1 scaled by 2^k, so nodes nest
evolution::GridSpec refined(const evolution::GridSpec& g, int k);

// Floats with 17 significant digits.
std::string dump(const json& j, int indent = 2);
std::string fmt(double x);

// Entry point; returns an ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kerrlab::cli
