#pragma once

// JSON and CSV formats for instances, run configurations, reports and
// per-iteration histories. Every writer is deterministic: identical inputs
// give identical bytes.

#include "madmm/conditions.hpp"
#include "madmm/diagnostics.hpp"
#include "madmm/instances.hpp"
#include "madmm/solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace madmm {

using Json = nlohmann::ordered_json;

inline constexpr const char* kInstanceFormat = "madmm-instance v1";
inline constexpr const char* kHistoryHeader = "# madmm-history v1";
inline constexpr const char* kRateHeader = "# madmm-rate v1";

// ------------------------------------------------------------------ files

Json parse_json(const std::string& text, const std::string& origin);
Json read_json_file(const std::string& path);
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
/// Two-space indented JSON with a trailing newline.
std::string dump(const Json& j);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t h);

// -------------------------------------------------------------- instances

Json to_json(const SetDescriptor& s);
SetDescriptor set_from_json(const Json& j, const std::string& where);

Json to_json(const InstanceSpec& spec);
InstanceSpec spec_from_json(const Json& j);

Json to_json(const InstanceData& data);
InstanceData instance_from_json(const Json& j);

// ----------------------------------------------------------------- config

/// How a semi-proximal operator is chosen in a config file.
struct ProxChoice {
  enum class Kind { automatic, zero, identity, explicit_matrix };
  Kind kind = Kind::automatic;
  double scale = 1.0;  ///< identity only
  double shift = 0.0;  ///< automatic only: alpha = lambda_max + shift
  Matrix matrix;       ///< explicit only
};

struct RunConfig {
  double sigma = 1.0;
  std::optional<double> tau;  ///< unset: 1.61 when case (ii) verifies, else 1
  std::optional<ProxChoice> s;  ///< unset: automatic unless p is zero/quadratic
  std::optional<ProxChoice> t;
  Backend u_backend = Backend::automatic;
  Backend v_backend = Backend::automatic;
  int max_iters = 1000;
  double kkt_tol = 1e-10;
  int record_every = 0;
  double divergence_cap = 1e12;
  std::uint64_t seed = 0;
};

Json to_json(const RunConfig& cfg);
RunConfig config_from_json(const Json& j);

/// Concrete operators and step length for a problem. `tau_source`, when
/// given, receives "config" or "default".
SolverConfig resolve_config(const CoupledProblem& prob, const RunConfig& cfg,
                            std::string* tau_source = nullptr);

// ---------------------------------------------------------------- reports

Json to_json(const ConditionReport& r);
Json to_json(const CertificateReport& r);
Json to_json(const ComplexityConstants& k);
Json to_json(const EnvelopeReport& r);
Json vector_json(const Vector& v);
Vector vector_from_json(const Json& j, const std::string& where);

// -------------------------------------------------------------------- CSV

/// Versioned per-iteration history. The phi_k, psi_k columns appear only
/// when the history carries a reference point.
std::string history_csv(const RunHistory& history);

struct HistoryTable {
  bool has_reference = false;
  std::vector<HistoryRow> rows;
};
/// Rejects a missing or unknown version line with a schema error.
HistoryTable parse_history_csv(const std::string& text);

struct RateRow {
  int k = 0;
  double min_bound_sq_times_k = 0.0;
  double feas_times_k = 0.0;
  double erg_feas_times_k = 0.0;
};

struct RateTable {
  std::vector<std::pair<std::string, double>> metadata;
  std::vector<RateRow> rows;
  double meta(const std::string& key) const;
};

std::string rate_csv(const RateTable& table);
RateTable parse_rate_csv(const std::string& text);

/// Shortest round-trip decimal text of a double ("nan", "inf", "-inf" for
/// non-finite values).
std::string format_double(double v);

}  // namespace madmm
