// Acceptance suite. `acceptance N` checks criterion N (1-8) and prints one
// PASS/FAIL line; `acceptance` with no argument runs all eight.
//
// Criteria 4-7 save their aggregated tables as acceptance_<N>.json in the
// working directory; criterion 8 reruns 4-7 and compares bytes.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

#include "sphcov/sphcov.hpp"

using namespace sphcov;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void save_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out << bytes;
}

// ---------------------------------------------------------------------------
// 1. Validity matrix

Outcome criterion1() {
  Outcome o;
  const Sphere s2(2, 1.0);
  const Sphere s1 = Sphere::unit_circle();
  struct Case {
    std::string name;
    Model model;
    int dim;
    bool expect;
  };
  auto gc = [&](Family f, std::vector<double> p, const Sphere& s = Sphere(2, 1.0)) {
    return Model(CovarianceModel(f, Metric::GreatCircle, s, std::move(p)));
  };
  std::vector<Case> cases;
  for (double a : {0.1, 0.5, 2.0}) cases.push_back({"exponential a=" + fmt(a), gc(Family::Exponential, {1, a}), 2, true});
  for (double a : {0.3, 1.0}) {
    cases.push_back({"matern nu=0.5 a=" + fmt(a), gc(Family::Matern, {1, a, 0.5}), 2, true});
    cases.push_back({"matern nu=0.51 a=" + fmt(a), gc(Family::Matern, {1, a, 0.51}), 2, false});
    cases.push_back({"matern nu=0.25 a=" + fmt(a), gc(Family::Matern, {1, a, 0.25}), 2, true});
    cases.push_back({"matern nu=1 a=" + fmt(a), gc(Family::Matern, {1, a, 1.0}), 2, false});
  }
  for (double b : {0.5, 1.0}) cases.push_back({"powexp beta=" + fmt(b), gc(Family::PoweredExponential, {1, 1.0, b}), 2, true});
  for (double b : {1.1, 1.5, 2.0})
    cases.push_back({"powexp beta=" + fmt(b), gc(Family::PoweredExponential, {1, 1.0, b}), 2, false});
  for (double b : {0.25, 1.0, 1.5, 2.0}) cases.push_back({"sine-power beta=" + fmt(b), gc(Family::SinePower, {1, b}), 2, true});
  for (double c : {0.5, 2.0, kPi})
    for (double t : {6.0, 10.0}) cases.push_back({"wendland c=" + fmt(c) + " tau=" + fmt(t), gc(Family::WendlandC4, {1, c, t}), 2, true});
  for (double a : {0.2, 1.0}) cases.push_back({"wave a=" + fmt(a), gc(Family::Wave, {1, a}), 2, false});
  cases.push_back({"cosine n=1 S2", gc(Family::Cosine, {1, 1.0}), 2, true});
  cases.push_back({"cosine n=2 S2", gc(Family::Cosine, {1, 2.0}), 2, false});
  cases.push_back({"cosine n=2 S1", gc(Family::Cosine, {1, 2.0}, s1), 1, true});

  const auto t0 = std::chrono::steady_clock::now();
  int wrong = 0;
  for (const auto& c : cases) {
    const auto v = check_validity(c.model, c.dim, 400);
    if (v.valid != c.expect) {
      ++wrong;
      o.require(false, c.name + (v.valid ? " reported valid" : " reported invalid"));
    }
  }
  // Parameter-domain edges: outside (0, pi] or below tau = 6 is rejected outright.
  bool rejected = true;
  for (auto p : std::vector<std::vector<double>>{{1, 3.2, 6}, {1, 1.0, 5.9}, {1, 0.0, 6}}) {
    try {
      gc(Family::WendlandC4, p);
      rejected = false;
    } catch (const InvalidArgument&) {
    }
  }
  o.require(rejected, "wendland parameters outside c in (0, pi], tau >= 6 accepted");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  o.require(secs < 60.0, "runtime " + fmt(secs) + " s exceeds 1 min");
  o.detail << cases.size() << " cases, " << wrong << " wrong, " << fmt(secs) << " s";
  return o;
}

// ---------------------------------------------------------------------------
// 2. Euclidean lower bound for chordal models

Outcome criterion2() {
  Outcome o;
  const Sphere s = Sphere::earth();
  RandomStream rng(20240601);
  const double bound = -0.2172 - 1e-4;
  double lowest = 1.0;
  for (int i = 0; i < 20; ++i) {
    const double a = std::exp(rng.uniform(std::log(100.0), std::log(20000.0)));
    Model m = CovarianceModel(Family::Exponential, Metric::Chordal, s, {1, a});
    switch (i % 5) {
      case 0: break;
      case 1: m = CovarianceModel(Family::Matern, Metric::Chordal, s, {rng.uniform(0.5, 3), a, rng.uniform(0.1, 5)}); break;
      case 2: m = CovarianceModel(Family::PoweredExponential, Metric::Chordal, s, {1, a / 6371.0, rng.uniform(0.1, 2)}); break;
      case 3: m = CovarianceModel(Family::Wave, Metric::Chordal, s, {rng.uniform(0.5, 3), a / 4}); break;
      case 4: {
        const double w = rng.uniform(0.01, 0.99);
        m = Model::convex_sum({Model(CovarianceModel(Family::WendlandC4, Metric::Chordal, s, {1, rng.uniform(0.2, 2), rng.uniform(6, 12)})),
                               Model(CovarianceModel(Family::Wave, Metric::Chordal, s, {1, a / 4}))},
                              {w, 1 - w});
        break;
      }
    }
    o.require(in_euclidean_class(m, 3), "random model " + std::to_string(i) + " not in the Euclidean class");
    const auto mc = min_correlation(m, 20000);
    lowest = std::min(lowest, mc.value);
    o.require(mc.value >= bound, "model " + std::to_string(i) + " min " + fmt(mc.value));
  }
  const Model wave = CovarianceModel(Family::Wave, Metric::Chordal, s, {1, 1000.0});
  const auto w = min_correlation(wave, 200000);
  o.require(std::abs(w.value - -0.2172) <= 1e-3, "wave minimum " + fmt(w.value));
  o.detail << "lowest random min " << fmt(lowest) << " (bound " << fmt(bound) << "), wave min " << fmt(w.value) << " at "
           << fmt(w.distance) << " km";
  return o;
}

// ---------------------------------------------------------------------------
// 3. CRPS oracle, Matern 1/2, kriging exactness

Outcome criterion3() {
  Outcome o;
  double crps_err = 0.0;
  for (double sigma : {0.1, 0.5, 1.0, 3.0, 10.0})
    for (double z = -5.0; z <= 5.0 + 1e-9; z += 0.25) {
      const double y = z * sigma;
      // CRPS = int (F(x) - 1{x >= y})^2 dx with F the N(0, sigma^2) cdf
      auto cdf = [&](double x) { return 0.5 * std::erfc(-x / (sigma * std::sqrt(2.0))); };
      const double lo = -12.0 * sigma, hi = 12.0 * sigma;
      auto f1 = [&](double x) { return cdf(x) * cdf(x); };
      auto f2 = [&](double x) { return (1 - cdf(x)) * (1 - cdf(x)); };
      using boost::math::quadrature::gauss_kronrod;
      const double left = y > lo ? gauss_kronrod<double, 61>::integrate(f1, lo, y, 15, 1e-13) : 0.0;
      const double right = y < hi ? gauss_kronrod<double, 61>::integrate(f2, y, hi, 15, 1e-13) : 0.0;
      crps_err = std::max(crps_err, std::abs(crps_gaussian(0.0, sigma, y) - (left + right)));
    }
  o.require(crps_err < 1e-6, "CRPS error " + fmt(crps_err));

  RandomStream rng(3);
  double matern_err = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double alpha = std::exp(rng.uniform(std::log(0.05), std::log(50.0)));
    const double s2 = rng.uniform(0.1, 10.0);
    const Sphere s(2, 1.0);
    const CovarianceModel m(Family::Matern, Metric::GreatCircle, s, {s2, alpha, 0.5});
    const CovarianceModel e(Family::Exponential, Metric::GreatCircle, s, {s2, alpha});
    const double t = rng.uniform(0.0, kPi);
    const double ref = e.evaluate(t);
    matern_err = std::max(matern_err, std::abs(m.evaluate(t) - ref) / ref);
  }
  o.require(matern_err <= 1e-12, "Matern 1/2 relative error " + fmt(matern_err));

  double krig_err = 0.0;
  for (double s2 : {0.5, 4.0}) {
    const Model m = CovarianceModel(Family::Exponential, Metric::GreatCircle, Sphere::earth(), {s2, 2000.0});
    std::vector<Location> locs;
    for (int i = 0; i < 60; ++i) locs.push_back(Location::latlon(rad2deg(std::asin(rng.uniform(-1, 1))), rng.uniform(-179, 180)));
    const auto field = simulate(m, locs, MeanModel::constant(3.0), 11);
    std::vector<Observation> obs;
    for (std::size_t i = 0; i < locs.size(); ++i) obs.push_back({locs[i], field.values[i]});
    const auto preds = krige(m, MeanModel::constant(3.0), obs, locs);
    for (std::size_t i = 0; i < locs.size(); ++i) {
      krig_err = std::max(krig_err, std::abs(preds[i].mean - obs[i].value) / std::sqrt(s2));
      krig_err = std::max(krig_err, preds[i].sd / std::sqrt(s2));
    }
  }
  o.require(krig_err <= 1e-6, "kriging at observations off by " + fmt(krig_err) + " sigma");
  o.detail << "CRPS max error " << fmt(crps_err) << ", Matern 1/2 max rel error " << fmt(matern_err)
           << ", kriging max error " << fmt(krig_err) << " sigma";
  return o;
}

// ---------------------------------------------------------------------------
// 4. S1 replication

S1Result run_criterion4() {
  Design d = Design::s1();
  d.seed = 2024;
  S1Options opt;
  opt.ranges = {2 * kPi, kPi / 4};
  return run_s1(d, opt);
}

std::string s1_bytes(const S1Result& r) {
  json j = json::array();
  for (const auto& x : r.ranges) {
    json t = to_json(x.table);
    t["alpha"] = x.alpha;
    j.push_back(t);
  }
  return j.dump(1);
}

Outcome criterion4(const S1Result& r) {
  Outcome o;
  const auto se = [](const Summary& s) { return s.sd / std::sqrt(static_cast<double>(s.n)); };
  // farthest prediction angle from the arc (pi/2, 3pi/2) is 0, index 0
  const auto& wide = r.ranges.at(0);
  const auto d = paired_difference(wide.points, "CH", "GC", 0);
  o.require(d.abs_error.n == 100, "alpha=2pi: " + std::to_string(d.abs_error.n) + " paired replicates");
  o.require(d.abs_error.mean > 2 * se(d.abs_error), "alpha=2pi MAE(CH)-MAE(GC)=" + fmt(d.abs_error.mean));
  o.require(d.crps.mean > 2 * se(d.crps), "alpha=2pi CRPS(CH)-CRPS(GC)=" + fmt(d.crps.mean));
  o.detail << "alpha=2pi angle 0: MAE diff " << fmt(d.abs_error.mean) << " (2SE " << fmt(2 * se(d.abs_error))
           << "), CRPS diff " << fmt(d.crps.mean) << " (2SE " << fmt(2 * se(d.crps)) << ")";
  const auto& narrow = r.ranges.at(1);
  double worst = 0.0;
  for (std::size_t k = 0; k < 10; ++k) {
    const auto e = paired_difference(narrow.points, "CH", "GC", k);
    const double ra = std::abs(e.abs_error.mean) / se(e.abs_error);
    const double rc = std::abs(e.crps.mean) / se(e.crps);
    worst = std::max({worst, ra, rc});
    o.require(ra <= 2 && rc <= 2, "alpha=pi/4 angle index " + std::to_string(k) + " differs by " + fmt(std::max(ra, rc)) + " SE");
  }
  o.detail << "; alpha=pi/4 largest |diff|/SE " << fmt(worst);
  for (const auto& x : r.ranges)
    for (const auto& m : x.table.models) o.require(m.failed == 0, m.model + " failures at alpha=" + fmt(x.alpha));
  return o;
}

// ---------------------------------------------------------------------------
// 5. MLE consistency on S1

S1Result run_criterion5() {
  Design d = Design::s1();
  d.seed = 5;
  S1Options opt;
  opt.ranges = {kPi};
  opt.models = {"GC"};
  return run_s1(d, opt);
}

Outcome criterion5(const S1Result& r) {
  Outcome o;
  const auto& m = r.ranges.at(0).table.model("GC");
  double s2 = NAN, alpha = NAN;
  for (const auto& [name, s] : m.parameters) {
    if (name == "sigma2") s2 = s.mean;
    if (name == "alpha") alpha = s.mean;
  }
  const double es = std::abs(s2 - 1.0), ea = std::abs(alpha - kPi) / kPi;
  o.require(m.succeeded == 100, std::to_string(m.succeeded) + " successful fits");
  o.require(es < 0.15, "sigma2 relative bias " + fmt(es));
  o.require(ea < 0.15, "alpha relative bias " + fmt(ea));
  o.detail << "mean sigma2 " << fmt(s2) << " (rel " << fmt(es) << "), mean alpha " << fmt(alpha) << " (rel " << fmt(ea)
           << ") over " << m.succeeded << " replicates";
  return o;
}

// ---------------------------------------------------------------------------
// 6. S2 ordering

GridExperimentResult run_criterion6() {
  Design d = Design::s2();
  d.replicates = 20;
  d.seed = 1;
  return run_s2(d, S2Options{});
}

Outcome criterion6(const GridExperimentResult& r) {
  Outcome o;
  const auto& t = r.table;
  const auto& mc = t.model("MC");
  const auto& mg = t.model("MG");
  const auto& c = t.model("C");
  const auto& h = t.model("H");
  o.require(c.rmse.mean < mg.rmse.mean, "RMSE(C) < RMSE(MG)");
  o.require(mg.rmse.mean < mc.rmse.mean, "RMSE(MG) < RMSE(MC)");
  for (const auto* m : {&mc, &mg, &c}) {
    o.require(h.rmse.mean > m->rmse.mean, "H RMSE worse than " + m->model);
    o.require(h.mae.mean > m->mae.mean, "H MAE worse than " + m->model);
    o.require(h.crps.mean > m->crps.mean, "H CRPS worse than " + m->model);
  }
  double lambda = NAN;
  for (const auto& [name, s] : c.parameters)
    if (name == "lambda") lambda = s.mean;
  o.require(lambda > 0.95, "mean lambda " + fmt(lambda));
  for (const auto& m : t.models) o.require(m.succeeded > 0, m.model + " never fitted");
  o.detail << "RMSE MC " << fmt(mc.rmse.mean) << " MG " << fmt(mg.rmse.mean) << " C " << fmt(c.rmse.mean) << " H "
           << fmt(h.rmse.mean) << "; CRPS MC " << fmt(mc.crps.mean) << " MG " << fmt(mg.crps.mean) << " C "
           << fmt(c.crps.mean) << " H " << fmt(h.crps.mean) << "; MAE H " << fmt(h.mae.mean) << "; mean lambda "
           << fmt(lambda) << " (" << t.replicates << " replicates)";
  return o;
}

// ---------------------------------------------------------------------------
// 7. Geo harness on a synthetic dataset

struct GeoRuns {
  GridExperimentResult constant, harmonic, hemisphere;
};

GridDataset criterion7_data() {
  const Sphere& e = Sphere::earth();
  const Model truth = Model::convex_sum({Model(CovarianceModel(Family::WendlandC4, Metric::GreatCircle, e, {0.82, 2.887, 9.426})),
                                         Model(CovarianceModel(Family::Cosine, Metric::GreatCircle, e, {0.82, 1.0}))},
                                        {0.8, 0.2});
  return synthetic_grid(truth, MeanModel::harmonic(75.45, 1.25, 0.3), GridDataset::regular(5.0), 17);
}

GeoRuns run_criterion7() {
  const GridDataset data = criterion7_data();
  GeoOptions opt;
  opt.fit.starts = 2;
  Design region = Design::geo_region();
  region.replicates = 10;
  region.n_estimation = 300;
  region.n_prediction = 100;
  region.seed = 11;
  GeoRuns out;
  opt.mean = MeanKind::Constant;
  out.constant = run_geo(data, region, opt);
  opt.mean = MeanKind::HarmonicLatitude;
  out.harmonic = run_geo(data, region, opt);
  Design half = Design::geo_hemisphere();
  half.replicates = 10;
  half.n_estimation = 300;
  half.n_prediction = 100;
  half.seed = 12;
  opt.mean = MeanKind::Constant;
  opt.models = {"WG", "WC"};
  out.hemisphere = run_geo(data, half, opt);
  return out;
}

std::string geo_bytes(const GeoRuns& r) {
  return json{to_json(r.constant.table), to_json(r.harmonic.table), to_json(r.hemisphere.table)}.dump(1);
}

Outcome criterion7(const GeoRuns& r) {
  Outcome o;
  const auto& t = r.constant.table;
  o.require(t.model("C").crps.mean < t.model("MC").crps.mean, "CRPS(C) < CRPS(MC)");
  for (const auto& m : t.models) {
    if (m.model == "MG") continue;
    o.require(t.model("MG").rmse.mean > m.rmse.mean, "MG RMSE worse than " + m.model);
    o.require(t.model("MG").mae.mean > m.mae.mean, "MG MAE worse than " + m.model);
    o.require(t.model("MG").crps.mean > m.crps.mean, "MG CRPS worse than " + m.model);
  }
  o.detail << "(a) CRPS constant mean:";
  for (const auto& m : t.models) o.detail << ' ' << m.model << '=' << fmt(m.crps.mean);
  o.detail << "; (b) harmonic/constant RMSE:";
  for (const auto& m : t.models) {
    const auto& h = r.harmonic.table.model(m.model);
    o.require(h.rmse.mean < m.rmse.mean && h.mae.mean < m.mae.mean && h.crps.mean < m.crps.mean,
              m.model + " not improved by the harmonic mean");
    o.detail << ' ' << m.model << '=' << fmt(h.rmse.mean) << '/' << fmt(m.rmse.mean);
  }
  for (const auto* tab : {&r.constant.table, &r.harmonic.table, &r.hemisphere.table})
    for (const auto& m : tab->models) o.require(m.succeeded > 0, m.model + " never fitted");
  // (c) WC - WG absolute-error gap in the farthest nearest-distance bin
  // exceeds the gap over all nearer bins, and is positive
  const auto b = binned_differences(r.hemisphere.points, "WC", "WG", 10);
  std::size_t top = 0;
  for (const auto& bin : b.bins)
    if (bin.abs_error_diff.n > 0) top = bin.bin;
  double near_sum = 0.0;
  std::size_t near_n = 0;
  for (const auto& p : b.points)
    if (p.bin < top) {
      near_sum += p.abs_error_diff;
      ++near_n;
    }
  const double near = near_n ? near_sum / static_cast<double>(near_n) : NAN;
  const double far = b.bins[top].abs_error_diff.mean;
  const double far_crps = b.bins[top].crps_diff.mean;
  o.require(far > 0.0 && far > near, "top-bin WC-WG gap " + fmt(far) + " vs nearer bins " + fmt(near));
  o.require(far_crps > 0.0, "top-bin WC-WG CRPS gap " + fmt(far_crps));
  o.detail << "; (c) WC-WG AE gap top bin " << fmt(far) << " (n=" << b.bins[top].abs_error_diff.n << ", CRPS "
           << fmt(far_crps) << ") vs nearer " << fmt(near);
  return o;
}

// ---------------------------------------------------------------------------
// 8. Determinism

Outcome criterion8() {
  Outcome o;
  struct Item {
    int n;
    std::function<std::string()> run;
  };
  const std::vector<Item> items{
      {4, [] { return s1_bytes(run_criterion4()); }},
      {5, [] { return s1_bytes(run_criterion5()); }},
      {6, [] { return to_json(run_criterion6().table).dump(1); }},
      {7, [] { return geo_bytes(run_criterion7()); }},
  };
  for (const auto& it : items) {
    const std::string file = "acceptance_" + std::to_string(it.n) + ".json";
    std::string first = read_file(file);
    const bool cached = !first.empty();
    if (!cached) first = it.run();
    const std::string second = it.run();
    const bool same = first == second;
    o.require(same, "criterion " + std::to_string(it.n) + " tables differ");
    o.detail << it.n << ": " << (same ? "identical" : "DIFFERENT") << " (" << second.size() << " bytes"
             << (cached ? ", against saved run" : "") << ") ";
  }
  return o;
}

Outcome run(int n) {
  switch (n) {
    case 1: return criterion1();
    case 2: return criterion2();
    case 3: return criterion3();
    case 4: {
      const auto r = run_criterion4();
      save_file("acceptance_4.json", s1_bytes(r));
      return criterion4(r);
    }
    case 5: {
      const auto r = run_criterion5();
      save_file("acceptance_5.json", s1_bytes(r));
      return criterion5(r);
    }
    case 6: {
      const auto r = run_criterion6();
      save_file("acceptance_6.json", to_json(r.table).dump(1));
      return criterion6(r);
    }
    case 7: {
      const auto r = run_criterion7();
      save_file("acceptance_7.json", geo_bytes(r));
      return criterion7(r);
    }
    case 8: return criterion8();
  }
  Outcome o;
  o.require(false, "no such criterion");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  if (argc > 1) {
    for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  } else {
    for (int i = 1; i <= 8; ++i) which.push_back(i);
  }
  bool all = true;
  for (int n : which) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run(n);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << ": " << o.detail.str() << " [" << fmt(secs) << " s]"
              << std::endl;
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
