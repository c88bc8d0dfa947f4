#include "avsdoa/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "avsdoa/covariance.hpp"
#include "avsdoa/cpd_acdc.hpp"
#include "avsdoa/gauss_ml.hpp"

namespace avsdoa {

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::EJD: return "ejd";
    case Estimator::CPD: return "cpd";
    case Estimator::KLD: return "kld";
  }
  return "?";
}

std::string to_string(SweepAxis a) { return a == SweepAxis::Samples ? "T" : "snr_db"; }

Estimator parse_estimator(const std::string& s) {
  if (s == "ejd") return Estimator::EJD;
  if (s == "cpd") return Estimator::CPD;
  if (s == "kld") return Estimator::KLD;
  throw InvalidInput("unknown estimator: " + s);
}

SweepAxis parse_axis(const std::string& s) {
  if (s == "T") return SweepAxis::Samples;
  if (s == "snr_db") return SweepAxis::SnrDb;
  throw InvalidInput("unknown sweep axis: " + s);
}

std::vector<Estimator> parse_estimator_list(const std::string& s) {
  std::vector<Estimator> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const Estimator e = parse_estimator(item);
    if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
  }
  return out;
}

void ExperimentConfig::validate() const {
  array.validate();
  if (estimators.empty()) throw InvalidInput("config: empty estimator set");
  if (trials < 1) throw InvalidInput("config: trials must be >= 1");
  if (sweep.empty()) throw InvalidInput("config: empty sweep");
  if (threads < 1) throw InvalidInput("config: threads must be >= 1");
  if (doa_deg.empty()) throw InvalidInput("config: no DOAs");
  if (static_cast<int>(doa_deg.size()) >= array.sensors) throw InvalidInput("config: need D < M");
  std::vector<double> rad;
  for (double d : doa_deg) rad.push_back(deg2rad(d));
  RVector r = Eigen::Map<RVector>(rad.data(), static_cast<Eigen::Index>(rad.size()));
  DoaVector check(r);
  if (array.geometry == Geometry::Explicit && array.explicit_steering.cols() != check.size()) {
    throw InvalidInput("config: explicit steering must have D columns");
  }
  for (double v : sweep) {
    if (axis == SweepAxis::Samples && !(v >= 1.0 && v == std::floor(v))) {
      throw InvalidInput("config: T sweep values must be positive integers");
    }
    if (!std::isfinite(v)) throw InvalidInput("config: non-finite sweep value");
  }
  if (axis == SweepAxis::SnrDb && samples < 1) throw InvalidInput("config: T must be >= 1");
}

bool ExperimentConfig::has(Estimator e) const {
  return std::find(estimators.begin(), estimators.end(), e) != estimators.end();
}

std::vector<std::string> preset_names() { return {"fig1a", "fig1b", "fig2", "fig3", "fig4"}; }

ExperimentConfig preset(const std::string& id) {
  ExperimentConfig c;
  c.name = id;
  if (id == "fig1a" || id == "fig1b" || id == "fig2") {
    c.array.geometry = Geometry::ULA;
    c.array.sensors = 7;
    c.array.spacing = 0.5;
    c.doa_deg = {-56.0, 43.0, 71.0};
  } else if (id == "fig3" || id == "fig4") {
    c.array.geometry = Geometry::UCA;
    c.array.sensors = 5;
    c.array.radius = 0.5;
    c.array.faulty = {1, 3};
    c.doa_deg = {24.0, 92.0};
    c.source = SourceKind::GaussianMixture;
  } else {
    throw InvalidInput("unknown preset: " + id);
  }
  if (id == "fig1a") {
    c.axis = SweepAxis::Samples;
    c.sweep = {100, 300, 1000, 3000, 10000};
    c.snr_db = 10.0;
  } else if (id == "fig1b") {
    c.axis = SweepAxis::SnrDb;
    c.sweep = {0, 5, 10, 15, 20};
    c.samples = 100;
  } else if (id == "fig2") {
    c.source = SourceKind::QPSK;
    c.noise = NoiseKind::ComplexLaplace;
    c.calibration_errors = true;
    c.calibration_seed = 2;
    c.axis = SweepAxis::Samples;
    c.sweep = {100, 200, 500, 1000, 2000, 5000};
    c.snr_db = 5.0;
  } else if (id == "fig3") {
    c.axis = SweepAxis::SnrDb;
    c.sweep = {-5, 0, 5, 10, 15};
    c.samples = 500;
  } else {
    c.axis = SweepAxis::Samples;
    c.sweep = {100, 200, 500, 1000, 2000};
    c.snr_db = 0.0;
  }
  return c;
}

namespace {

nlohmann::json matrix_to_json(const RMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

RMatrix matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw InvalidInput("config: matrix must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
  RMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j.at(static_cast<std::size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw InvalidInput("config: ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

}  // namespace

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json arr;
  arr["geometry"] = to_string(c.array.geometry);
  arr["sensors"] = c.array.sensors;
  arr["spacing"] = c.array.spacing;
  arr["radius"] = c.array.radius;
  arr["wavenumber"] = c.array.wavenumber;
  std::vector<int> faulty;
  for (int m : c.array.faulty) faulty.push_back(m + 1);
  arr["faulty_sensors"] = faulty;
  if (c.array.geometry == Geometry::Explicit) {
    arr["explicit_steering_re"] = matrix_to_json(c.array.explicit_steering.real());
    arr["explicit_steering_im"] = matrix_to_json(c.array.explicit_steering.imag());
  }
  if (c.array.gains.size() != 0) {
    arr["gains"] = std::vector<double>(c.array.gains.data(), c.array.gains.data() + c.array.gains.size());
  }
  if (c.array.position_offsets.rows() != 0) arr["position_offsets"] = matrix_to_json(c.array.position_offsets);

  nlohmann::json j;
  j["name"] = c.name;
  j["array"] = arr;
  j["doa_deg"] = c.doa_deg;
  j["source"] = to_string(c.source);
  j["noise"] = to_string(c.noise);
  j["calibration_errors"] = c.calibration_errors;
  j["calibration_seed"] = c.calibration_seed;
  j["axis"] = to_string(c.axis);
  j["sweep"] = c.sweep;
  j["samples"] = c.samples;
  j["snr_db"] = c.snr_db;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  std::vector<std::string> est;
  for (Estimator e : c.estimators) est.push_back(to_string(e));
  j["estimators"] = est;
  j["threads"] = c.threads;
  j["out_dir"] = c.out_dir;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& input) {
  const nlohmann::json& j = input.contains("config") ? input.at("config") : input;
  ExperimentConfig c;
  try {
    if (j.contains("preset")) c = preset(j.at("preset").get<std::string>());
    if (j.contains("name")) c.name = j.at("name").get<std::string>();
    if (j.contains("array")) {
      const auto& a = j.at("array");
      if (a.contains("geometry")) c.array.geometry = parse_geometry(a.at("geometry").get<std::string>());
      if (a.contains("sensors")) c.array.sensors = a.at("sensors").get<int>();
      if (a.contains("spacing")) c.array.spacing = a.at("spacing").get<double>();
      if (a.contains("radius")) c.array.radius = a.at("radius").get<double>();
      if (a.contains("wavenumber")) c.array.wavenumber = a.at("wavenumber").get<double>();
      if (a.contains("faulty_sensors")) {
        c.array.faulty.clear();
        for (int m : a.at("faulty_sensors").get<std::vector<int>>()) {
          if (m < 1) throw InvalidInput("config: faulty_sensors are 1-based");
          c.array.faulty.insert(m - 1);
        }
      }
      if (a.contains("explicit_steering_re")) {
        const RMatrix re = matrix_from_json(a.at("explicit_steering_re"));
        RMatrix im = RMatrix::Zero(re.rows(), re.cols());
        if (a.contains("explicit_steering_im")) im = matrix_from_json(a.at("explicit_steering_im"));
        if (im.rows() != re.rows() || im.cols() != re.cols()) throw InvalidInput("config: steering shape mismatch");
        c.array.explicit_steering = re.cast<cplx>() + cplx(0.0, 1.0) * im.cast<cplx>();
      }
      if (a.contains("gains")) {
        const auto g = a.at("gains").get<std::vector<double>>();
        c.array.gains = Eigen::Map<const RVector>(g.data(), static_cast<Eigen::Index>(g.size()));
      }
      if (a.contains("position_offsets")) {
        const RMatrix off = matrix_from_json(a.at("position_offsets"));
        if (off.rows() != 0 && off.cols() != 2) throw InvalidInput("config: position_offsets must be M x 2");
        c.array.position_offsets = off;
      }
    }
    if (j.contains("doa_deg")) c.doa_deg = j.at("doa_deg").get<std::vector<double>>();
    if (j.contains("source")) c.source = parse_source_kind(j.at("source").get<std::string>());
    if (j.contains("noise")) c.noise = parse_noise_kind(j.at("noise").get<std::string>());
    if (j.contains("calibration_errors")) c.calibration_errors = j.at("calibration_errors").get<bool>();
    if (j.contains("calibration_seed")) c.calibration_seed = j.at("calibration_seed").get<std::uint64_t>();
    if (j.contains("axis")) c.axis = parse_axis(j.at("axis").get<std::string>());
    if (j.contains("sweep")) c.sweep = j.at("sweep").get<std::vector<double>>();
    if (j.contains("samples")) c.samples = j.at("samples").get<int>();
    if (j.contains("snr_db")) c.snr_db = j.at("snr_db").get<double>();
    if (j.contains("trials")) c.trials = j.at("trials").get<int>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("estimators")) {
      c.estimators.clear();
      for (const auto& s : j.at("estimators").get<std::vector<std::string>>()) {
        const Estimator e = parse_estimator(s);
        if (!c.has(e)) c.estimators.push_back(e);
      }
    }
    if (j.contains("threads")) c.threads = j.at("threads").get<int>();
    if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("config: " + std::string(e.what()));
  }
  return config_from_json(j);
}

double noise_variance_for_snr(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

ArrayScenario realized_array(const ExperimentConfig& c) {
  ArrayScenario a = c.array;
  if (c.calibration_errors) {
    Rng rng = trial_rng(c.calibration_seed, 0);
    draw_calibration_errors(a, rng);
  }
  return a;
}

const SummaryRow& ExperimentResult::row(double axis_value, int doa_index, Estimator e) const {
  for (const auto& r : summary) {
    if (r.axis_value == axis_value && r.doa_index == doa_index && r.estimator == e) return r;
  }
  throw InvalidInput("summary row not found");
}

const IsrRow& ExperimentResult::isr_row(double axis_value, Estimator e, int i, int j) const {
  for (const auto& r : isr) {
    if (r.axis_value == axis_value && r.estimator == e && r.i == i && r.j == j) return r;
  }
  throw InvalidInput("isr row not found");
}

namespace {

struct Estimate {
  bool failed = true;
  RVector theta;
  CMatrix a;
};

struct TrialOutcome {
  Estimate ejd, cpd, kld;
  double seconds = 0.0;
};

TrialOutcome run_trial(const ExperimentConfig& c, const RVector& theta,
                       const CMatrix& manifold, int samples, double s2, std::uint64_t stream) {
  const auto t0 = std::chrono::steady_clock::now();
  TrialOutcome out;
  Rng rng = trial_rng(c.seed, stream);
  const int dc = static_cast<int>(theta.size());
  try {
    const CMatrix s = generate_sources(c.source, dc, samples, rng);
    const CMatrix y = synthesize(manifold, s, NoiseSpec{c.noise, s2}, rng);
    const CovarianceStats stats = compute_stats(y, dc);

    const CpdState init = ejd_init(stats, dc);
    out.ejd = {false, init.theta, init.a};
    const CpdState cpd = acdc_run(stats, init);
    out.cpd = {!cpd.converged, cpd.theta, cpd.a};
    if (c.has(Estimator::KLD)) {
      const double s2_hat = std::max(stats.noise_variance(), 1e-12);
      const FsaResult fsa = fsa_run(pack(cpd.a, cpd.theta, s2_hat), stats.ry(), samples);
      const ModelParams mp = unpack(fsa.phi);
      out.kld = {!fsa.converged, mp.theta, mp.a};
    }
  } catch (const std::exception&) {
    // estimates not reached keep failed = true
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

double quiet_nan() { return std::numeric_limits<double>::quiet_NaN(); }

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& c) {
  c.validate();
  const auto wall0 = std::chrono::steady_clock::now();
  ExperimentResult res;
  res.config = c;
  const ArrayScenario arr = realized_array(c);
  RVector theta(static_cast<Eigen::Index>(c.doa_deg.size()));
  for (std::size_t d = 0; d < c.doa_deg.size(); ++d) theta(static_cast<Eigen::Index>(d)) = deg2rad(c.doa_deg[d]);
  const int dc = static_cast<int>(theta.size());
  const CMatrix a_true = arr.steering(theta);
  const CMatrix manifold = avs_manifold(a_true, theta).matrix;

  // phase-normalized truth for the bound
  CMatrix a_norm = a_true;
  for (int d = 0; d < dc; ++d) {
    const cplx first = a_norm(0, d);
    if (std::abs(first) > 0.0) a_norm.col(d) *= std::conj(first) / std::abs(first);
    a_norm(0, d) = cplx(a_norm(0, d).real(), 0.0);
  }

  for (std::size_t p = 0; p < c.sweep.size(); ++p) {
    const double value = c.sweep[p];
    const int samples = c.axis == SweepAxis::Samples ? static_cast<int>(value) : c.samples;
    const double snr = c.axis == SweepAxis::SnrDb ? value : c.snr_db;
    const double s2 = noise_variance_for_snr(snr);

    RVector bound = RVector::Constant(dc, quiet_nan());
    try {
      const CrlbResult cr = crlb(pack(a_norm, theta, s2), samples);
      const ParamLayout layout{arr.sensors, dc};
      for (int d = 0; d < dc; ++d) bound(d) = std::sqrt(cr.bound(layout.theta(d), layout.theta(d)));
    } catch (const std::exception&) {
    }
    res.crlb_sqrt.push_back(bound);

    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(c.trials));
    const std::uint64_t base = static_cast<std::uint64_t>(p) << 32;
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (int t = next.fetch_add(1); t < c.trials; t = next.fetch_add(1)) {
        outcomes[static_cast<std::size_t>(t)] =
            run_trial(c, theta, manifold, samples, s2, base + static_cast<std::uint64_t>(t));
      }
    };
    const int nthreads = std::min(c.threads, c.trials);
    if (nthreads <= 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
    }

    // ordered reduction
    for (Estimator e : c.estimators) {
      std::vector<TrialRecord> recs;
      for (int t = 0; t < c.trials; ++t) {
        const TrialOutcome& o = outcomes[static_cast<std::size_t>(t)];
        const Estimate& est = e == Estimator::EJD ? o.ejd : e == Estimator::CPD ? o.cpd : o.kld;
        TrialRecord r;
        r.scenario = c.name;
        r.estimator = to_string(e);
        r.samples = samples;
        r.snr_db = snr;
        r.seconds = o.seconds;
        r.failed = est.failed;
        r.errors = RVector::Constant(dc, quiet_nan());
        if (est.theta.size() == dc) {
          const Alignment al = align(est.theta, theta, est.a);
          for (int d = 0; d < dc; ++d) r.errors(d) = circular_error(al.theta(d), theta(d));
          try {
            r.isr = isr(al.a, a_true);
          } catch (const std::exception&) {
            r.isr.resize(0, 0);
          }
        } else {
          r.failed = true;
        }
        recs.push_back(std::move(r));
      }
      int failures = 0;
      for (const auto& r : recs) failures += r.failed ? 1 : 0;
      for (int d = 0; d < dc; ++d) {
        SummaryRow row;
        row.axis = c.axis;
        row.axis_value = value;
        row.doa_index = d;
        row.estimator = e;
        row.crlb_sqrt_rad = bound(d);
        row.trials = c.trials;
        row.failures = failures;
        if (failures < c.trials) {
          row.stats = rmse(recs, d);
        } else {
          row.stats.rmse_rad = row.stats.rmse_deg = row.stats.mse_std = quiet_nan();
        }
        res.summary.push_back(row);
      }
      for (int i = 0; i < dc; ++i) {
        for (int jj = 0; jj < dc; ++jj) {
          if (i == jj) continue;
          IsrRow row;
          row.axis = c.axis;
          row.axis_value = value;
          row.estimator = e;
          row.i = i;
          row.j = jj;
          row.trials = c.trials;
          std::vector<double> vals;
          for (const auto& r : recs) {
            if (r.failed || r.isr.size() == 0) continue;
            vals.push_back(r.isr(i, jj));
          }
          row.failures = c.trials - static_cast<int>(vals.size());
          if (vals.empty()) {
            row.mean = row.std = quiet_nan();
          } else {
            double m = 0.0;
            for (double v : vals) m += v;
            m /= static_cast<double>(vals.size());
            double var = 0.0;
            for (double v : vals) var += (v - m) * (v - m);
            row.mean = m;
            row.std = vals.size() > 1 ? std::sqrt(var / static_cast<double>(vals.size() - 1)) : 0.0;
          }
          res.isr.push_back(row);
        }
      }
      for (auto& r : recs) res.records.push_back(std::move(r));
    }
  }
  // records were appended estimator-major within each point; reorder to point, trial, estimator
  {
    std::vector<TrialRecord> ordered;
    ordered.reserve(res.records.size());
    const std::size_t ne = c.estimators.size();
    const std::size_t nt = static_cast<std::size_t>(c.trials);
    for (std::size_t p = 0; p < c.sweep.size(); ++p)
      for (std::size_t t = 0; t < nt; ++t)
        for (std::size_t e = 0; e < ne; ++e) ordered.push_back(res.records[p * ne * nt + e * nt + t]);
    res.records = std::move(ordered);
  }
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return res;
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string num_exact(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << content;
  if (!out) throw InvalidInput("write failed: " + path.string());
}

}  // namespace

std::string summary_csv(const ExperimentResult& r) {
  std::ostringstream os;
  os << kSummaryHeader << '\n';
  for (const auto& row : r.summary) {
    os << to_string(row.axis) << ',' << num(row.axis_value) << ',' << row.doa_index << ','
       << to_string(row.estimator) << ',' << num(row.stats.rmse_rad) << ',' << num(row.stats.rmse_deg) << ','
       << num(row.stats.mse_std) << ',' << num(row.crlb_sqrt_rad) << ',' << row.trials << ',' << row.failures
       << '\n';
  }
  return os.str();
}

std::string isr_csv(const ExperimentResult& r) {
  std::ostringstream os;
  os << kIsrHeader << '\n';
  for (const auto& row : r.isr) {
    os << to_string(row.axis) << ',' << num(row.axis_value) << ',' << to_string(row.estimator) << ',' << row.i
       << ',' << row.j << ',' << num(row.mean) << ',' << num(row.std) << ',' << row.trials << ',' << row.failures
       << '\n';
  }
  return os.str();
}

std::string trials_csv(const ExperimentResult& r) {
  std::ostringstream os;
  os << kTrialsHeader << '\n';
  const std::size_t ne = r.config.estimators.size();
  const std::size_t nt = static_cast<std::size_t>(r.config.trials);
  for (std::size_t k = 0; k < r.records.size(); ++k) {
    const TrialRecord& rec = r.records[k];
    const std::size_t p = k / (ne * nt);
    const std::size_t t = (k / ne) % nt;
    for (Eigen::Index d = 0; d < rec.errors.size(); ++d) {
      os << to_string(r.config.axis) << ',' << num(r.config.sweep[p]) << ',' << t << ',' << rec.estimator << ','
         << d << ',' << num_exact(rec.errors(d)) << ',' << (rec.failed ? 1 : 0) << '\n';
    }
  }
  return os.str();
}

nlohmann::json manifest(const ExperimentResult& r) {
  nlohmann::json j;
  j["config"] = to_json(r.config);
  j["seed"] = r.config.seed;
  j["version"] = kVersion;
  j["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                       std::to_string(EIGEN_MINOR_VERSION);
  j["wall_time_s"] = r.wall_seconds;
  j["outputs"] = {"summary.csv", "isr.csv", "trials.csv"};
  return j;
}

void emit(const ExperimentResult& r, const std::string& out_dir) {
  r.config.validate();
  if (r.summary.empty()) throw InvalidInput("emit: empty summary");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw InvalidInput("cannot create output directory " + out_dir + ": " + ec.message());
  const std::filesystem::path dir(out_dir);
  write_file(dir / "summary.csv", summary_csv(r));
  write_file(dir / "isr.csv", isr_csv(r));
  write_file(dir / "trials.csv", trials_csv(r));
  write_file(dir / "run.json", manifest(r).dump(2) + "\n");
}

}  // namespace avsdoa
