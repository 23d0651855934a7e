#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "boltzwall/certifier.hpp"
#include "boltzwall/transport.hpp"

namespace boltzwall::cli {

using Json = nlohmann::ordered_json;

/// printf("%.17g"); round-trips every double.
std::string format_double(double x);

/// Creates dir, which must not exist or be empty. Throws ConfigError otherwise.
void prepare_output_dir(const std::filesystem::path& dir);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Header t,x1,x2,v1,v2,f; one row per (cell, velocity node).
void write_snapshot(const std::filesystem::path& path, const DistributionField& f);

struct SnapshotRow {
  double t, x1, x2, v1, v2, f;
};
/// Throws ConfigError on a missing file, a wrong header or a malformed row.
std::vector<SnapshotRow> read_snapshot(const std::filesystem::path& path);

/// Header t,mass,min_f,max_f,clamped_mass,grazing_count.
void write_observables(const std::filesystem::path& path, const std::vector<StepStats>& series);

/// Python/matplotlib script plotting the observables and the density of each snapshot.
std::string plot_script(const std::vector<std::string>& snapshot_files);

/// Certificate record. Fields that do not apply to the certificate kind are null;
/// log_* companions carry values below the double range.
Json certificate_json(const LowerBoundCertificate& cert, const Json& inputs);

struct CertificateFile {
  LowerBoundCertificate cert;
  double h_v = 0.0;    // velocity grid of the run the certificate was issued for
  double v_max = 0.0;
  double V_check = 3.0;
};
/// Throws ConfigError when a required field is missing or has the wrong type.
CertificateFile certificate_from_json(const Json& j);

/// Header shell_speed,min_ratio,log_min_ratio,pass. min_ratio saturates at 0 or inf
/// when the envelope leaves the double range; log_min_ratio does not.
std::string check_csv(const CheckReport& report);

}  // namespace boltzwall::cli
