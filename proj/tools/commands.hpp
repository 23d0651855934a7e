#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "config.hpp"
#include "io.hpp"

namespace boltzwall::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsage = 2, kNumerical = 3, kRefused = 4 };

/// Runs f and maps exceptions to exit codes: ConfigError / InvalidArgument -> 2,
/// NumericalAbort -> 3, CertificateRefused -> 4. The message goes to err.
int guarded(const std::function<int()>& f, std::ostream& err);

/// Snapshots, observables, the resolved config and the plot script in `out`.
int cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);

struct CertifyOutcome {
  LowerBoundCertificate cert;
  Json inputs;
  std::optional<SpreadSequences> seq;  // cutoff route only
  std::optional<GrowthLedger> ledger;
};
/// Calibration, seed, wall bound, sequences and the certificate for the config's kernel.
CertifyOutcome certify(const RunConfig& cfg, std::ostream& log);

/// certificate.json in `out`; on refusal refusal.json and exit 4.
int cmd_certify(const RunConfig& cfg, const std::filesystem::path& out, std::ostream& log);

/// Margins of a snapshot against a certificate. The CSV goes to out/check.csv,
/// or to csv when out is empty. Exit 0 on pass, 1 on fail, 2 on a grid or time mismatch.
int cmd_check(const std::filesystem::path& snapshot, const std::filesystem::path& certificate,
              const std::optional<std::filesystem::path>& out, std::ostream& csv, std::ostream& log);

/// spread | iterated | bc-flux | kernel-asymptotics; writes oracle_<name>.json.
/// Exit 0 when every record passes, 1 otherwise, 2 for an unknown name.
int cmd_oracle(const std::string& name, const RunConfig& cfg, const std::filesystem::path& out,
               std::optional<std::uint64_t> seed, std::ostream& log);

}  // namespace boltzwall::cli
