// sphcov: covariance validity, simulation, fitting, kriging and experiments
// on the circle and the sphere. See README.md for config schemas.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "sphcov/sphcov.hpp"

namespace fs = std::filesystem;
using namespace sphcov;

namespace {

struct Flags {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  unsigned jobs = 1;
  std::string format = "csv";
};

struct Context {
  Flags flags;
  json config;
  fs::path base;  // relative paths in the config resolve against this
  OutputFormat format = OutputFormat::Csv;

  std::string resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? p : (base / path).string();
  }

  std::string out(const std::string& name) const { return (fs::path(flags.out) / name).string(); }
};

Context open(const Flags& f) {
  Context c;
  c.flags = f;
  c.config = io::read_json_file(f.config);
  c.base = fs::path(f.config).parent_path();
  c.format = f.format == "json" ? OutputFormat::Json : OutputFormat::Csv;
  std::error_code ec;
  fs::create_directories(f.out, ec);
  if (ec) throw ConfigError(f.out, "cannot create output directory: " + ec.message());
  return c;
}

json with_meta(const RunInfo& info, json body) {
  body["meta"] = to_json(info);
  return body;
}

void report(const std::string& what) { std::cout << what << '\n'; }

std::vector<Observation> read_data(const Context& c, const json& j, const std::string& key, bool need_value = true) {
  const std::string path = io::string(j, key, "");
  return load_observations(c.resolve(path), need_value);
}

/// Mean as configured: a fixed {kind, coefficients}, or a kind fitted by
/// least squares to `data`.
MeanModel configured_mean(const json& j, std::span<const Observation> data) {
  if (!j.contains("mean")) return MeanModel::zero();
  auto [kind, fixed] = mean_from_json(j.at("mean"), "/mean");
  if (fixed) return *fixed;
  return io::at_path("/mean", [&] { return fit_mean(kind, data); });
}

std::vector<Location> read_locations(const Context& c, const json& j) {
  if (j.contains("locations")) {
    const auto& a = io::array(j, "locations", "");
    std::vector<Location> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(location_from_json(a[i], "/locations/" + std::to_string(i)));
    if (out.empty()) throw ConfigError("/locations", "no locations");
    return out;
  }
  if (j.contains("locations_file")) {
    std::vector<Location> out;
    for (const auto& o : read_data(c, j, "locations_file", false)) out.push_back(o.location);
    return out;
  }
  throw ConfigError("", "need 'locations' or 'locations_file'");
}

// ---------------------------------------------------------------------------

int cmd_validate(const Flags& f) {
  const Context c = open(f);
  io::only_keys(c.config, {"model", "dimension", "n_max", "tolerance"}, "");
  const Model m = model_from_json(io::field(c.config, "model", ""), "/model");
  const int d = static_cast<int>(io::integer_or(c.config, "dimension", m.sphere().dimension(), ""));
  const int n_max = static_cast<int>(io::integer_or(c.config, "n_max", 200, ""));
  const double tol = io::number_or(c.config, "tolerance", 1e-8, "");
  if (d < 1) throw ConfigError("/dimension", "must be at least 1");
  if (n_max < 1) throw ConfigError("/n_max", "must be at least 1");
  const auto verdict = check_validity(m, d, n_max, tol);
  const RunInfo info{"validate", config_hash(c.config), 0};
  json out = with_meta(info, to_json(verdict));
  out["model"] = to_json(m);
  write_json(c.out("validity.json"), out);
  report(std::string(verdict.valid ? "valid" : "invalid"));
  return 0;
}

int cmd_simulate(const Flags& f) {
  const Context c = open(f);
  io::only_keys(c.config, {"model", "mean", "locations", "locations_file", "grid", "seed"}, "");
  const Model m = model_from_json(io::field(c.config, "model", ""), "/model");
  const std::uint64_t seed = f.seed ? *f.seed : io::seed_or(c.config, "seed", 1, "");
  MeanModel mean = MeanModel::zero();
  if (c.config.contains("mean")) {
    auto [kind, fixed] = mean_from_json(c.config.at("mean"), "/mean");
    if (!fixed && kind != MeanKind::Zero) throw ConfigError("/mean", "simulation needs fixed mean coefficients");
    if (fixed) mean = *fixed;
  }
  json effective = c.config;
  effective["seed"] = seed;
  const RunInfo info{"simulate", config_hash(effective), seed};

  if (c.config.contains("grid")) {
    const auto& g = c.config.at("grid");
    io::only_keys(g, {"step_deg"}, "/grid");
    const double step = io::number_or(g, "step_deg", 5.0, "/grid");
    if (!(step > 0.0) || std::abs(180.0 / step - std::round(180.0 / step)) > 1e-9)
      throw ConfigError("/grid/step_deg", "must divide 180");
    GridDataset grid = synthetic_grid(m, mean, GridDataset::regular(step), seed);
    grid.provenance = "simulate config_hash=" + info.config_hash + " seed=" + std::to_string(seed);
    save_grid(c.out("grid.csv"), grid);
    report(c.out("grid.csv"));
    return 0;
  }

  const auto locs = read_locations(c, c.config);
  const auto r = simulate(m, locs, mean, seed);
  Table t;
  add_location_columns(t.columns, locs.front().dimension());
  t.columns.push_back("value");
  for (std::size_t i = 0; i < locs.size(); ++i) {
    std::vector<json> row;
    add_location_cells(row, locs[i]);
    row.push_back(r.values[i]);
    t.add(std::move(row));
  }
  report(write_table(f.out, "simulated", t, info, c.format));
  return 0;
}

int cmd_fit(const Flags& f) {
  const Context c = open(f);
  io::only_keys(c.config, {"fit", "data", "mean"}, "");
  const FitSpec spec = fit_spec_from_json(io::field(c.config, "fit", ""), "/fit");
  const auto data = read_data(c, c.config, "data");
  const MeanModel mean = configured_mean(c.config, data);
  const FittedModel fitted = mle_fit(spec, mean, data);
  const RunInfo info{"fit", config_hash(c.config), 0};
  json out = with_meta(info, to_json(fitted));
  out["mean"] = to_json(mean);
  out["n"] = data.size();
  write_json(c.out("fit.json"), out);
  report(c.out("fit.json"));
  return 0;
}

int cmd_predict(const Flags& f) {
  const Context c = open(f);
  io::only_keys(c.config, {"model", "nugget", "data", "mean", "locations", "locations_file"}, "");
  const Model m = model_from_json(io::field(c.config, "model", ""), "/model");
  const double nugget = io::number_or(c.config, "nugget", 0.0, "");
  if (nugget < 0.0) throw ConfigError("/nugget", "must be nonnegative");
  const auto data = read_data(c, c.config, "data");
  const MeanModel mean = configured_mean(c.config, data);
  std::vector<Location> targets;
  std::vector<std::optional<double>> observed;
  if (c.config.contains("locations_file")) {
    for (const auto& o : read_data(c, c.config, "locations_file", false)) {
      targets.push_back(o.location);
      observed.push_back(std::isnan(o.value) ? std::nullopt : std::optional<double>(o.value));
    }
  } else {
    targets = read_locations(c, c.config);
    observed.resize(targets.size());
  }
  auto preds = krige(m, mean, data, targets, nugget);
  for (std::size_t i = 0; i < preds.size(); ++i) preds[i].observed = observed[i];
  const RunInfo info{"predict", config_hash(c.config), 0};
  report(write_table(f.out, "predictions", prediction_table(preds, targets.front().dimension()), info, c.format));
  return 0;
}

int cmd_variogram(const Flags& f) {
  const Context c = open(f);
  io::only_keys(c.config, {"data", "grid", "sphere", "mean", "bins", "max_distance"}, "");
  std::vector<Observation> data;
  if (c.config.contains("grid")) {
    const auto& g = c.config.at("grid");
    io::only_keys(g, {"path", "transform"}, "/grid");
    const auto t = io::at_path("/grid/transform", [&] { return transform_from_string(io::string_or(g, "transform", "none", "/grid")); });
    data = load_grid(c.resolve(io::string(g, "path", "/grid")), t).observations();
  } else {
    data = read_data(c, c.config, "data");
  }
  if (data.empty()) throw ConfigError("", "no data");
  const Sphere sphere = c.config.contains("sphere")
                            ? sphere_from_json(c.config.at("sphere"), "/sphere")
                            : (data.front().location.dimension() == 1 ? Sphere::unit_circle() : Sphere::earth());
  json cfg = c.config;
  if (!cfg.contains("mean")) cfg["mean"] = "constant";
  const MeanModel mean = configured_mean(cfg, data);
  std::vector<Observation> resid;
  for (const auto& o : data) resid.push_back({o.location, o.value - mean(o.location)});
  const int bins = static_cast<int>(io::integer_or(c.config, "bins", 25, ""));
  const double dmax = io::number_or(c.config, "max_distance", 0.5 * sphere.max_distance(Metric::GreatCircle), "");
  const auto v = io::at_path("", [&] { return empirical_semivariogram(resid, sphere, bins, dmax); });
  Table t;
  t.columns = {"distance", "semivariance", "pairs", "sample_variance"};
  for (std::size_t i = 0; i < v.bin_centers.size(); ++i) t.add({v.bin_centers[i], v.semivariance[i], v.counts[i], v.sample_variance});
  const RunInfo info{"variogram", config_hash(c.config), 0};
  report(write_table(f.out, "variogram", t, info, c.format));
  return 0;
}

// ---------------------------------------------------------------------------

void apply_overrides(const Flags& f, Design& d) {
  if (f.seed) d.seed = *f.seed;
  if (f.replicates) {
    if (*f.replicates == 0) throw ConfigError("--replicates", "must be positive");
    d.replicates = *f.replicates;
  }
}

std::vector<BinnedDifferences> boxplots(std::span<const PointRecord> points,
                                        const std::vector<std::pair<std::string, std::string>>& pairs,
                                        const std::vector<std::string>& models, std::size_t bins) {
  std::vector<BinnedDifferences> out;
  for (const auto& [a, b] : pairs) {
    const bool ok = std::find(models.begin(), models.end(), a) != models.end() &&
                    std::find(models.begin(), models.end(), b) != models.end();
    if (!ok) throw ConfigError("/boxplot_pairs", "pair " + a + "/" + b + " names a model that was not run");
    out.push_back(binned_differences(points, a, b, bins));
  }
  return out;
}

int cmd_s1(const Flags& f, const Context& c) {
  S1Config cfg = s1_config_from_json(c.config);
  apply_overrides(f, cfg.design);
  cfg.options.jobs = f.jobs;
  const json effective = to_json(cfg);
  const RunInfo info{"experiment s1", config_hash(effective), cfg.design.seed};
  const auto result = run_s1(cfg.design, cfg.options);
  json tables = json::array();
  Table reps, points, curves;
  for (const auto& r : result.ranges) {
    json t = to_json(r.table);
    t["alpha"] = r.alpha;
    tables.push_back(t);
    const std::vector<std::pair<std::string, json>> lead{{"alpha", r.alpha}};
    auto append = [](Table& into, Table part) {
      if (into.columns.empty()) into.columns = part.columns;
      for (auto& row : part.rows) into.rows.push_back(std::move(row));
    };
    append(reps, replicate_table(r.table, lead));
    append(points, point_table(r.points, 1, lead));
    append(curves, curve_table(r.curves, 1, lead));
  }
  write_json(c.out("s1_summary.json"), with_meta(info, {{"config", effective}, {"tables", tables}}));
  write_table(f.out, "s1_replicates", reps, info, c.format);
  write_table(f.out, "s1_points", points, info, c.format);
  report(write_table(f.out, "s1_curves", curves, info, c.format));
  return 0;
}

int cmd_s2(const Flags& f, const Context& c) {
  S2Config cfg = s2_config_from_json(c.config);
  apply_overrides(f, cfg.design);
  cfg.options.jobs = f.jobs;
  const json effective = to_json(cfg);
  const RunInfo info{"experiment s2", config_hash(effective), cfg.design.seed};
  const auto result = run_s2(cfg.design, cfg.options);
  const auto diffs = boxplots(result.points, cfg.boxplot_pairs, cfg.options.models, cfg.bins);
  write_json(c.out("s2_summary.json"), with_meta(info, {{"config", effective}, {"table", to_json(result.table)}}));
  write_table(f.out, "s2_replicates", replicate_table(result.table), info, c.format);
  write_table(f.out, "s2_points", point_table(result.points, 2), info, c.format);
  write_table(f.out, "s2_boxplot", boxplot_table(diffs), info, c.format);
  report(write_table(f.out, "s2_bins", bin_table(diffs), info, c.format));
  return 0;
}

int cmd_geo(const Flags& f, const Context& c) {
  GeoConfig cfg = geo_config_from_json(c.config);
  apply_overrides(f, cfg.design);
  cfg.options.jobs = f.jobs;
  if (!cfg.data.model) cfg.data.path = c.resolve(cfg.data.path);
  const json effective = to_json(cfg);
  const RunInfo info{"experiment geo", config_hash(effective), cfg.design.seed};
  const GridDataset data = load_geo_data(cfg.data);
  json tables = json::array();
  Table reps, points, box, bins;
  auto append = [](Table& into, Table part, const json& mean) {
    if (into.columns.empty()) {
      into.columns = part.columns;
      into.columns.insert(into.columns.begin(), "mean");
    }
    for (auto& row : part.rows) {
      row.insert(row.begin(), mean);
      into.rows.push_back(std::move(row));
    }
  };
  for (auto kind : cfg.means) {
    GeoOptions o = cfg.options;
    o.mean = kind;
    const auto result = run_geo(data, cfg.design, o);
    const json mean_name = std::string(to_string(kind));
    tables.push_back({{"mean", mean_name}, {"mean_model", to_json(result.mean)}, {"table", to_json(result.table)}});
    const auto diffs = boxplots(result.points, cfg.boxplot_pairs, cfg.options.models, cfg.bins);
    append(reps, replicate_table(result.table), mean_name);
    append(points, point_table(result.points, 2), mean_name);
    append(box, boxplot_table(diffs), mean_name);
    append(bins, bin_table(diffs), mean_name);
  }
  write_json(c.out("geo_summary.json"),
             with_meta(info, {{"config", effective}, {"data_provenance", data.provenance}, {"tables", tables}}));
  write_table(f.out, "geo_replicates", reps, info, c.format);
  write_table(f.out, "geo_points", points, info, c.format);
  write_table(f.out, "geo_boxplot", box, info, c.format);
  report(write_table(f.out, "geo_bins", bins, info, c.format));
  return 0;
}

int cmd_experiment(const Flags& f, const std::string& which) {
  const Context c = open(f);
  if (c.config.contains("experiment") && io::string(c.config, "experiment", "") != which)
    throw ConfigError("/experiment", "config is for '" + c.config.at("experiment").dump() + "', not '" + which + "'");
  if (which == "s1") return cmd_s1(f, c);
  if (which == "s2") return cmd_s2(f, c);
  return cmd_geo(f, c);
}

void error_report(const std::string& type, const std::string& message, const std::string& path = "") {
  json e = {{"type", type}, {"message", message}};
  if (!path.empty() || type == "config") e["path"] = path;
  std::cerr << json{{"error", e}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian random fields on the circle and sphere"};
  app.require_subcommand(1);
  Flags flags;

  auto common = [&](CLI::App* sub, bool experiment) {
    sub->add_option("--config", flags.config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", flags.out, "output directory")->capture_default_str();
    sub->add_option("--format", flags.format, "table format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    if (sub->get_name() == "simulate" || experiment)
      sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { flags.seed = s; }, "master seed");
    if (experiment) {
      sub->add_option_function<std::size_t>("--replicates", [&](const std::size_t& n) { flags.replicates = n; },
                                            "replicate count override");
      sub->add_option("--jobs", flags.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    }
  };

  auto* validate = app.add_subcommand("validate", "certify positive definiteness of a model");
  auto* simulate_cmd = app.add_subcommand("simulate", "draw a Gaussian random field");
  auto* fit = app.add_subcommand("fit", "maximum likelihood fit");
  auto* predict = app.add_subcommand("predict", "simple kriging");
  auto* variogram = app.add_subcommand("variogram", "empirical semivariogram");
  for (auto* s : {validate, simulate_cmd, fit, predict, variogram}) common(s, false);
  auto* experiment = app.add_subcommand("experiment", "run a replicated experiment");
  experiment->require_subcommand(1);
  std::vector<std::pair<std::string, CLI::App*>> experiments;
  for (const char* name : {"s1", "s2", "geo"}) {
    auto* s = experiment->add_subcommand(name, std::string("experiment ") + name);
    common(s, true);
    experiments.emplace_back(name, s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_report("usage", e.what());
    return 2;
  }

  try {
    if (*validate) return cmd_validate(flags);
    if (*simulate_cmd) return cmd_simulate(flags);
    if (*fit) return cmd_fit(flags);
    if (*predict) return cmd_predict(flags);
    if (*variogram) return cmd_variogram(flags);
    for (const auto& [name, s] : experiments)
      if (*s) return cmd_experiment(flags, name);
  } catch (const ConfigError& e) {
    error_report("config", e.what(), e.path());
    return 2;
  } catch (const DesignError& e) {
    error_report("design", e.what());
    return 2;
  } catch (const std::exception& e) {
    error_report("runtime", e.what());
    return 1;
  }
  return 1;
}
