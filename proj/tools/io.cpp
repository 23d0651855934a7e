#include "io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "config.hpp"

namespace boltzwall::cli {

namespace fs = std::filesystem;

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void prepare_output_dir(const fs::path& dir) {
  std::error_code ec;
  if (fs::exists(dir, ec)) {
    if (!fs::is_directory(dir, ec)) throw ConfigError("output path " + dir.string() + " is not a directory");
    if (!fs::is_empty(dir, ec)) throw ConfigError("output directory " + dir.string() + " is not empty");
    return;
  }
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_snapshot(const fs::path& path, const DistributionField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "t,x1,x2,v1,v2,f\n";
  const std::string t = format_double(f.time);
  for (std::size_t c = 0; c < f.cells(); ++c) {
    const Vec2 x = f.space().center(c);
    const std::string xs = format_double(x.x) + "," + format_double(x.y) + ",";
    for (std::size_t k = 0; k < f.nodes(); ++k) {
      const Vec2 v = f.velocity().velocity(k);
      out << t << ',' << xs << format_double(v.x) << ',' << format_double(v.y) << ',' << format_double(f(c, k))
          << '\n';
    }
  }
}

std::vector<SnapshotRow> read_snapshot(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read snapshot " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "t,x1,x2,v1,v2,f")
    throw ConfigError("snapshot " + path.string() + " lacks the header t,x1,x2,v1,v2,f");
  std::vector<SnapshotRow> rows;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    SnapshotRow r{};
    char tail = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf%c", &r.t, &r.x1, &r.x2, &r.v1, &r.v2, &r.f, &tail) != 6)
      throw ConfigError("snapshot " + path.string() + ": malformed row " + std::to_string(lineno));
    rows.push_back(r);
  }
  return rows;
}

void write_observables(const fs::path& path, const std::vector<StepStats>& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "t,mass,min_f,max_f,clamped_mass,grazing_count\n";
  for (const auto& s : series)
    out << format_double(s.t) << ',' << format_double(s.mass) << ',' << format_double(s.min_f) << ','
        << format_double(s.max_f) << ',' << format_double(s.clamped_mass) << ',' << s.grazing_count << '\n';
}

std::string plot_script(const std::vector<std::string>& snapshot_files) {
  std::ostringstream os;
  os << "#!/usr/bin/env python3\n"
        "# Plots the observables and the spatial density of each snapshot.\n"
        "# Run from this directory: python3 plot.py\n"
        "import csv\n"
        "from collections import defaultdict\n"
        "\n"
        "import matplotlib\n"
        "matplotlib.use(\"Agg\")\n"
        "import matplotlib.pyplot as plt\n"
        "\n"
        "SNAPSHOTS = [\n";
  for (const auto& f : snapshot_files) os << "    \"" << f << "\",\n";
  os << "]\n"
        "\n"
        "\n"
        "def read(path):\n"
        "    with open(path) as fh:\n"
        "        return list(csv.DictReader(fh))\n"
        "\n"
        "\n"
        "obs = read(\"observables.csv\")\n"
        "t = [float(r[\"t\"]) for r in obs]\n"
        "fig, ax = plt.subplots(1, 2, figsize=(10, 4))\n"
        "ax[0].plot(t, [float(r[\"mass\"]) for r in obs])\n"
        "ax[0].set_xlabel(\"t\")\n"
        "ax[0].set_ylabel(\"mass\")\n"
        "ax[1].semilogy(t, [max(float(r[\"min_f\"]), 1e-300) for r in obs], label=\"min f\")\n"
        "ax[1].semilogy(t, [float(r[\"max_f\"]) for r in obs], label=\"max f\")\n"
        "ax[1].set_xlabel(\"t\")\n"
        "ax[1].legend()\n"
        "fig.tight_layout()\n"
        "fig.savefig(\"observables.png\", dpi=120)\n"
        "\n"
        "for name in SNAPSHOTS:\n"
        "    # the density is sum_v f h_v^2; h_v is the smallest nonzero |v1| spacing\n"
        "    rows = read(name)\n"
        "    v1 = sorted({float(r[\"v1\"]) for r in rows})\n"
        "    h_v = min(b - a for a, b in zip(v1, v1[1:])) if len(v1) > 1 else 1.0\n"
        "    rho = defaultdict(float)\n"
        "    for r in rows:\n"
        "        rho[(float(r[\"x1\"]), float(r[\"x2\"]))] += float(r[\"f\"]) * h_v * h_v\n"
        "    xs = [k[0] for k in rho]\n"
        "    ys = [k[1] for k in rho]\n"
        "    fig, ax = plt.subplots(figsize=(5, 4.5))\n"
        "    sc = ax.scatter(xs, ys, c=list(rho.values()), s=12, cmap=\"viridis\")\n"
        "    fig.colorbar(sc, ax=ax, label=\"density\")\n"
        "    ax.set_aspect(\"equal\")\n"
        "    ax.set_title(name)\n"
        "    fig.tight_layout()\n"
        "    fig.savefig(name.replace(\".csv\", \".png\"), dpi=120)\n";
  return os.str();
}

namespace {

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

}  // namespace

Json certificate_json(const LowerBoundCertificate& c, const Json& inputs) {
  const bool maxw = c.kind == LowerBoundCertificate::Kind::Maxwellian;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Json j;
  j["kind"] = maxw ? "maxwellian" : "exponential";
  j["rho"] = maxw ? number_or_null(c.rho()) : Json(nullptr);
  j["theta"] = maxw ? number_or_null(c.theta) : Json(nullptr);
  j["C1"] = maxw ? Json(nullptr) : number_or_null(c.C1());
  j["C2"] = maxw ? Json(nullptr) : number_or_null(c.C2);
  j["K"] = maxw ? Json(nullptr) : number_or_null(c.K);
  j["tau"] = c.tau;
  j["alpha1"] = number_or_null(maxw ? std::exp(c.log_alpha1) : nan);
  j["alpha2"] = number_or_null(maxw ? std::exp(c.log_alpha2) : nan);
  j["lambda"] = number_or_null(c.lambda);
  j["c_r"] = c.c_r;
  j["cst_Q"] = c.cst_Q;
  j["cst_L"] = c.cst_L;
  j["b_wall"] = number_or_null(std::exp(c.log_b_wall));
  j["xi"] = c.xi;
  j["N"] = c.N;
  j["calibration_flags"] = c.calibration_flags;
  j["inputs"] = inputs;
  j["log_rho"] = maxw ? number_or_null(c.log_rho) : Json(nullptr);
  j["log_C1"] = maxw ? Json(nullptr) : number_or_null(c.log_C1);
  j["log_alpha1"] = number_or_null(c.log_alpha1);
  j["log_alpha2"] = number_or_null(c.log_alpha2);
  j["log_b_wall"] = number_or_null(c.log_b_wall);
  j["v_window"] = number_or_null(c.v_window);
  Json prov = Json::array();
  for (const auto& p : c.provenance) prov.push_back({{"name", p.name}, {"value", number_or_null(p.value)}, {"source", p.source}});
  j["provenance"] = prov;
  return j;
}

namespace {

double field(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) throw ConfigError(std::string("certificate: missing number ") + key);
  return j[key].get<double>();
}

}  // namespace

CertificateFile certificate_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) throw ConfigError("certificate: missing kind");
  CertificateFile out;
  auto& c = out.cert;
  const std::string kind = j["kind"];
  if (kind == "maxwellian") {
    c.kind = LowerBoundCertificate::Kind::Maxwellian;
    c.theta = field(j, "theta");
    c.log_rho = field(j, "log_rho");
  } else if (kind == "exponential") {
    c.kind = LowerBoundCertificate::Kind::Exponential;
    c.log_C1 = field(j, "log_C1");
    c.C2 = field(j, "C2");
    c.K = field(j, "K");
  } else {
    throw ConfigError("certificate: unknown kind " + kind);
  }
  c.tau = field(j, "tau");
  c.c_r = field(j, "c_r");
  c.xi = field(j, "xi");
  c.N = static_cast<int>(field(j, "N"));
  if (j.contains("v_window") && j["v_window"].is_number()) c.v_window = j["v_window"];
  if (!j.contains("inputs") || !j["inputs"].contains("grid")) throw ConfigError("certificate: missing inputs.grid");
  const auto& g = j["inputs"]["grid"];
  out.h_v = field(g, "h_v");
  out.v_max = field(g, "v_max");
  if (j["inputs"].contains("v_check")) out.V_check = field(j["inputs"], "v_check");
  return out;
}

std::string check_csv(const CheckReport& report) {
  std::ostringstream os;
  os << "shell_speed,min_ratio,log_min_ratio,pass\n";
  for (const auto& m : report.shells)
    os << format_double(m.shell_speed) << ',' << format_double(m.min_ratio) << ',' << format_double(m.log_min_ratio) << ','
       << (m.pass ? "true" : "false")
       << '\n';
  return os.str();
}

}  // namespace boltzwall::cli
