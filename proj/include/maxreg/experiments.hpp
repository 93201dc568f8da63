#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "maxreg/bdgen.hpp"
#include "maxreg/maxop.hpp"
#include "maxreg/variation.hpp"

namespace maxreg {

// ---------------------------------------------------------------------------
// configuration: line-oriented "key = value", '#' starts a comment

struct ExperimentConfig {
  std::string experiment;
  std::filesystem::path out = "out";
  std::vector<double> grid_h;        // empty = experiment default
  std::optional<double> box;
  std::optional<NormSpec> norm;      // restrict sweeps to one norm
  std::optional<double> radius_cap;
  bool radius_cap_none = false;      // explicit "radius_cap = none"
  int threads = 1;
  std::uint64_t seed = 0;
  std::string corpus_sel = "all";    // all | id,id,... | random:<count>
  int m_max = 64;                    // counterexample ladder top
  std::optional<double> threshold;   // indicator jump threshold override
};

// numbers may be written as plain decimals or small fractions like 1/64
inline double parse_number(const std::string& s, const char* what) {
  auto slash = s.find('/');
  if (slash == std::string::npos) return parse_double(s, what);
  double num = parse_double(trim(s.substr(0, slash)), what);
  double den = parse_double(trim(s.substr(slash + 1)), what);
  require(den != 0.0, std::string(what) + " has a zero denominator");
  return num / den;
}

inline ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto where = [&] { return "config line " + std::to_string(lineno); };
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    require(eq != std::string::npos, where() + " is not 'key = value'");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    require(!key.empty() && !val.empty(), where() + " has an empty key or value");
    if (key == "experiment") {
      cfg.experiment = val;
    } else if (key == "out") {
      cfg.out = val;
    } else if (key == "grid_h") {
      cfg.grid_h.clear();
      for (const auto& tok : split(val, ',')) {
        double h = parse_number(trim(tok), "grid_h");
        require(h > 0.0 && h <= 1.0, where() + ": grid_h wants values in (0,1]");
        cfg.grid_h.push_back(h);
      }
    } else if (key == "box") {
      cfg.box = parse_number(val, "box");
      require(*cfg.box > 0.0, where() + ": box must be positive");
    } else if (key == "norm") {
      cfg.norm = parse_norm(val);
    } else if (key == "radius_cap") {
      if (val == "none") {
        cfg.radius_cap_none = true;
      } else {
        cfg.radius_cap = parse_number(val, "radius_cap");
        require(*cfg.radius_cap > 0.0, where() + ": radius_cap must be positive");
      }
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(parse_number(val, "threads"));
      require(cfg.threads >= 0, where() + ": threads must be nonnegative");
    } else if (key == "seed") {
      double s = parse_number(val, "seed");
      require(s >= 0.0 && s == std::floor(s), where() + ": seed must be a nonnegative integer");
      cfg.seed = static_cast<std::uint64_t>(s);
    } else if (key == "corpus") {
      cfg.corpus_sel = val;
    } else if (key == "m_max") {
      cfg.m_max = static_cast<int>(parse_number(val, "m_max"));
      require(cfg.m_max >= 1 && cfg.m_max <= 4096, where() + ": m_max out of range");
    } else if (key == "threshold") {
      cfg.threshold = parse_number(val, "threshold");
      require(*cfg.threshold > 0.0, where() + ": threshold must be positive");
    } else {
      fail(where() + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

inline ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  require(bool(is), "cannot read config " + path.string());
  return parse_config(is);
}

// ---------------------------------------------------------------------------
// shared plumbing

struct ExperimentResult {
  bool pass = true;
  std::vector<std::string> lines;
  nlohmann::json summary;

  void check(bool ok, const std::string& msg) {
    pass = pass && ok;
    lines.push_back(std::string(ok ? "ok: " : "FAIL: ") + msg);
  }
};

struct Stopwatch {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

// wall-clock sidecar; the only outputs exempt from byte reproducibility
class TimingLog {
 public:
  TimingLog(std::filesystem::path path) : path_(std::move(path)) {}
  void add(const std::string& label, double seconds) { rows_.push_back({label, seconds}); }
  void write() const {
    std::ofstream os(path_);
    require(bool(os), "cannot open " + path_.string() + " for writing");
    os << "# maxreg-timing v1 (wall clock; not covered by reproducibility)\n";
    os << "label,seconds\n";
    char buf[32];
    for (const auto& [label, sec] : rows_) {
      std::snprintf(buf, sizeof buf, "%.3f", sec);
      os << label << "," << buf << "\n";
    }
  }

 private:
  std::filesystem::path path_;
  std::vector<std::pair<std::string, double>> rows_;
};

inline std::ofstream open_out(const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / name);
  require(bool(os), "cannot open " + (dir / name).string() + " for writing");
  return os;
}

inline void write_summary(const ExperimentConfig& cfg, const std::string& name,
                          const nlohmann::json& j) {
  auto os = open_out(cfg.out, name);
  os << j.dump(2) << "\n";
}

inline double effective_cap(const ExperimentConfig& cfg, double fallback) {
  if (cfg.radius_cap_none) return std::numeric_limits<double>::infinity();
  return cfg.radius_cap.value_or(fallback);
}

inline std::string cap_name(double cap) { return std::isfinite(cap) ? fmt17(cap) : "none"; }

// norm names may contain commas (rect:2,1); keep CSV cells comma-free
inline std::string csv_name(const NormSpec& norm) {
  std::string s = norm.name();
  std::replace(s.begin(), s.end(), ',', 'x');
  return s;
}

inline std::vector<NormSpec> norm_set(const ExperimentConfig& cfg, int dim) {
  if (cfg.norm) {
    require(cfg.norm->warity == 0 || cfg.norm->warity == dim,
            "configured norm does not fit dimension " + std::to_string(dim));
    return {*cfg.norm};
  }
  std::vector<NormSpec> v{norm_linf(), norm_l1(), norm_l2()};
  std::vector<double> w(static_cast<std::size_t>(dim), 1.0);
  w[0] = 2.0;
  v.push_back(norm_rect(w));
  return v;
}

inline std::vector<ProfileSpec> random_corpus(int dim, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uside(0.8, 1.6), up(0.31, 1.0), urate(2.0, 6.0),
      upexp(1.2, 3.0);
  std::uniform_int_distribution<int> unorm(0, 3), ushape(0, 2);
  std::vector<ProfileSpec> out;
  for (int i = 0; i < count; ++i) {
    ProfileSpec spec;
    spec.dim = dim;
    switch (i % 3) {
      case 0:
        spec.family = ProfileSpec::Family::Square;
        spec.side = uside(rng);
        spec.box = 1.25;
        break;
      case 1:
        spec.family = ProfileSpec::Family::QuasiBall;
        spec.p = up(rng);
        spec.box = 1.25;
        break;
      default: {
        spec.family = ProfileSpec::Family::Radial;
        int pick = unorm(rng);
        spec.norm = pick == 0   ? norm_linf()
                    : pick == 1 ? norm_l1()
                    : pick == 2 ? norm_l2()
                                : norm_lp(upexp(rng));
        int sh = ushape(rng);
        spec.shape = sh == 0   ? ProfileSpec::Shape::Exp
                     : sh == 1 ? ProfileSpec::Shape::Gauss
                               : ProfileSpec::Shape::Ramp;
        spec.rate = urate(rng);
        spec.box = spec.shape == ProfileSpec::Shape::Ramp ? 1.25 : 1.5;
        break;
      }
    }
    validate_profile(spec);
    out.push_back(spec);
  }
  return out;
}

inline std::vector<ProfileSpec> select_corpus(int dim, const ExperimentConfig& cfg) {
  if (cfg.corpus_sel.rfind("random:", 0) == 0) {
    int count = static_cast<int>(parse_double(cfg.corpus_sel.substr(7), "corpus count"));
    require(count >= 1 && count <= 64, "random corpus count out of range");
    return random_corpus(dim, count, cfg.seed);
  }
  auto all = corpus(dim);
  if (cfg.corpus_sel == "all") return all;
  std::vector<ProfileSpec> out;
  for (const auto& tok : split(cfg.corpus_sel, ','))
    out.push_back(find_profile(all, trim(tok)));
  require(!out.empty(), "empty corpus selection");
  return out;
}

inline bool is_indicator(const ProfileSpec& spec) {
  return spec.family == ProfileSpec::Family::Square ||
         spec.family == ProfileSpec::Family::QuasiBall;
}

inline bool selected(const std::vector<ProfileSpec>& specs, const std::string& id) {
  for (const ProfileSpec& s : specs)
    if (s.id() == id) return true;
  return false;
}

// ---------------------------------------------------------------------------
// square-demo: directional variation of the unit-square indicator

inline ExperimentResult run_square_demo(const ExperimentConfig& cfg) {
  ExperimentResult res;
  std::filesystem::create_directories(cfg.out);
  double h = cfg.grid_h.empty() ? 1.0 / 64 : cfg.grid_h.front();
  double E = cfg.box.value_or(2.0);
  ProfileSpec sq = parse_profile("square side=1");
  sq.box = E;
  GridFunction f = generate(sq, make_grid(2, E, h));
  VariationReport rep = variation_directional(f);
  write_variation_json(cfg.out / "square_variation.json", rep);
  double rel = std::abs(rep.directional_sum - 4.0) / 4.0;
  res.check(rel <= 0.02, "square directional_sum=" + fmt17(rep.directional_sum) +
                             " within 2% of 4 (off by " + fmt17(100 * rel) + "%)");
  res.summary = {{"experiment", "square-demo"},
                 {"extension", extension_name(f.extension)},
                 {"h", h},
                 {"box", E},
                 {"directional_sum", rep.directional_sum},
                 {"target", 4.0},
                 {"tolerance", 0.02},
                 {"relative_error", rel},
                 {"pass", res.pass}};
  write_summary(cfg, "square_demo_summary.json", res.summary);
  return res;
}

// ---------------------------------------------------------------------------
// theorem1-sweep: variation ratios V_upper(Mf) / V_lower(f) across the corpus

inline ExperimentResult run_theorem1_sweep(const ExperimentConfig& cfg) {
  ExperimentResult res;
  std::vector<double> hs = cfg.grid_h.empty() ? std::vector<double>{1.0 / 32, 1.0 / 64}
                                              : cfg.grid_h;
  double cap = effective_cap(cfg, 1.0);
  auto specs = select_corpus(2, cfg);
  auto norms = norm_set(cfg, 2);
  auto csv = open_out(cfg.out, "theorem1.csv");
  csv << "# maxreg-theorem1 v1 extension=zero radius_cap=" << cap_name(cap) << "\n";
  csv << "h,function,box,norm,v_lower_f,v_upper_f,v_upper_m,ratio,verdict\n";
  TimingLog timing(cfg.out / "theorem1_timing.csv");

  std::map<double, double> per_h_max;
  double max_ratio = 0.0;
  nlohmann::json max_at;
  std::int64_t degenerate = 0, nonfinite = 0;
  for (double h : hs) {
    for (const ProfileSpec& spec : specs) {
      GridFunction f = generate(spec, h);
      VariationReport vf = variation_directional(f);
      for (const NormSpec& norm : norms) {
        Stopwatch sw;
        MaxField mf = maximal_bd_pruned(
            f, norm, {.radius_cap = cap, .threads = cfg.threads, .record_witnesses = false});
        VariationReport vm = variation_directional(mf.as_grid_function());
        timing.add(spec.id() + ":" + csv_name(norm) + ":h=" + fmt17(h), sw.seconds());
        csv << fmt17(h) << "," << spec.id() << "," << fmt17(spec.box) << "," << csv_name(norm) << ","
            << fmt17(vf.v_lower) << "," << fmt17(vf.v_upper) << "," << fmt17(vm.v_upper) << ",";
        if (vf.v_lower == 0.0) {
          ++degenerate;
          csv << "degenerate,degenerate\n";
          continue;
        }
        double ratio = vm.v_upper / vf.v_lower;
        bool ok = std::isfinite(ratio);
        if (!ok) ++nonfinite;
        csv << fmt17(ratio) << "," << (ok ? "ok" : "FAIL") << "\n";
        if (ok && ratio > per_h_max[h]) per_h_max[h] = ratio;
        if (ok && ratio > max_ratio) {
          max_ratio = ratio;
          max_at = {{"h", h}, {"function", spec.id()}, {"norm", norm.name()}};
        }
      }
    }
  }
  timing.write();
  res.check(nonfinite == 0, "all variation ratios finite (degenerate rows: " +
                                std::to_string(degenerate) + ")");
  nlohmann::json per_h;
  for (const auto& [h, r] : per_h_max) per_h[fmt17(h)] = r;
  for (std::size_t i = 0; i + 1 < hs.size(); ++i) {
    double a = per_h_max[hs[i]], b = per_h_max[hs[i + 1]];
    double drift = std::abs(a - b) / std::max(b, 1e-300);
    res.check(drift <= 0.15, "max ratio drift h=" + fmt17(hs[i]) + " vs h=" + fmt17(hs[i + 1]) +
                                 ": " + fmt17(100 * drift) + "% within 15%");
  }
  res.summary = {{"experiment", "theorem1-sweep"},
                 {"extension", "zero"},
                 {"radius_cap", cap_name(cap)},
                 {"h", hs},
                 {"functions", specs.size()},
                 {"norms", norms.size()},
                 {"max_ratio", max_ratio},
                 {"max_at", max_at},
                 {"per_h_max_ratio", per_h},
                 {"degenerate", degenerate},
                 {"pass", res.pass}};
  write_summary(cfg, "theorem1_summary.json", res.summary);
  return res;
}

// ---------------------------------------------------------------------------
// counterexample: V_2 of the separable family and of its maximal image

inline ExperimentResult run_counterexample(const ExperimentConfig& cfg) {
  ExperimentResult res;
  double hbase = cfg.grid_h.empty() ? 1.0 / 64 : cfg.grid_h.front();
  double E = cfg.box.value_or(4.5);
  double cap = effective_cap(cfg, 0.5);
  auto csv = open_out(cfg.out, "counterexample.csv");
  csv << "# maxreg-counterexample v1 extension=zero norm=linf radius_cap=" << cap_name(cap)
      << " box=" << fmt17(E) << " base_h=" << fmt17(hbase) << "\n";
  csv << "m,h,v2_f,v2_m\n";
  TimingLog timing(cfg.out / "counterexample_timing.csv");

  std::vector<int> ms;
  for (int m = 1; m <= cfg.m_max; m *= 2) ms.push_back(m);
  std::vector<double> v2f, v2m;
  for (int m : ms) {
    double h = std::min(1.0 / (8.0 * m), hbase);
    ProfileSpec spec;
    spec.family = ProfileSpec::Family::Separable;
    spec.m = m;
    spec.box = E;
    Stopwatch sw;
    GridFunction f = generate(spec, make_grid(2, E, h));
    v2f.push_back(partial_variation(f, 1));
    MaxField mf = maximal_bd_pruned(
        f, norm_linf(), {.radius_cap = cap, .threads = cfg.threads, .record_witnesses = false});
    v2m.push_back(partial_variation(mf.as_grid_function(), 1));
    timing.add("m=" + std::to_string(m), sw.seconds());
    csv << m << "," << fmt17(h) << "," << fmt17(v2f.back()) << "," << fmt17(v2m.back()) << "\n";
  }
  timing.write();

  bool flats_ok = true;
  for (std::size_t i = 0; i < ms.size(); ++i) {
    if (std::abs(v2f[i] - 4.0) > 0.03 * 4.0) {
      flats_ok = false;
      res.check(false, "V2(f_m) off target at m=" + std::to_string(ms[i]) + ": " +
                           fmt17(v2f[i]) + " outside 4 +- 3%");
    }
  }
  if (flats_ok) res.check(true, "V2(f_m) = 4 within 3% for every m");
  bool growth_ok = true;
  for (std::size_t i = 0; i + 1 < ms.size(); ++i) {
    if (!(v2m[i + 1] >= 1.01 * v2m[i])) {
      growth_ok = false;
      res.check(false, "V2(M f_m) growth stalls between m=" + std::to_string(ms[i]) + " and m=" +
                           std::to_string(ms[i + 1]) + ": " + fmt17(v2m[i]) + " -> " +
                           fmt17(v2m[i + 1]));
    }
  }
  if (growth_ok && ms.size() > 1)
    res.check(true, "V2(M f_m) grows by at least 1% per doubling of m");
  res.summary = {{"experiment", "counterexample"},
                 {"extension", "zero"},
                 {"norm", "linf"},
                 {"radius_cap", cap_name(cap)},
                 {"box", E},
                 {"base_h", hbase},
                 {"m", ms},
                 {"v2_f", v2f},
                 {"v2_m", v2m},
                 {"pass", res.pass}};
  write_summary(cfg, "counterexample_summary.json", res.summary);
  return res;
}

// ---------------------------------------------------------------------------
// continuity: jump collapse under M, the centered comparison, and the
// quasiball cusp persistence

// largest face jump along the cusp approach ray (x2 = 0, 0.4 <= x1 <= 1.1)
inline double cusp_ray_jump(double h, int threads) {
  ProfileSpec qb = parse_profile("qball p=0.5");
  GridFunction f = generate(qb, h);
  MaxField mf = maximal_bd_pruned(f, norm_linf(),
                                  {.threads = threads, .record_witnesses = false});
  GridFunction m = mf.as_grid_function();
  const Grid& g = f.grid;
  double peak = 0.0;
  for (int j = 0; j * g.spacing <= 1.1; ++j) {
    if (j * g.spacing < 0.4) continue;
    Ivec iv{};
    iv[0] = g.center(0) + j;
    iv[1] = g.center(1);
    Ivec jv = iv;
    ++jv[0];
    if (!g.in_bounds(jv)) continue;
    peak = std::max(peak, std::abs(m.at(jv) - m.at(iv)));
  }
  return peak;
}

inline ExperimentResult run_continuity(const ExperimentConfig& cfg) {
  ExperimentResult res;
  std::vector<double> hs = cfg.grid_h.empty()
                               ? std::vector<double>{1.0 / 16, 1.0 / 32, 1.0 / 64}
                               : cfg.grid_h;
  double finest = *std::min_element(hs.begin(), hs.end());
  double thr_ind = cfg.threshold.value_or(0.25);
  NormSpec norm = cfg.norm.value_or(norm_linf());
  auto specs = select_corpus(2, cfg);
  auto csv = open_out(cfg.out, "continuity.csv");
  csv << "# maxreg-continuity v1 extension=zero norm=" << norm.name()
      << " indicator_threshold=" << fmt17(thr_ind) << " smooth_threshold=10h\n";
  csv << "block,h,function,threshold,len_f,len_m,verdict\n";
  TimingLog timing(cfg.out / "continuity_timing.csv");

  MaxOptions opt{.threads = cfg.threads, .record_witnesses = false};

  if (selected(specs, "square-1")) {
    // jump elimination for the square across resolutions
    ProfileSpec sq = parse_profile("square side=1");
    sq.box = cfg.box.value_or(2.0);
    bool all_zero = true;
    for (double h : hs) {
      Stopwatch sw;
      GridFunction f = generate(sq, make_grid(2, sq.box, h));
      double len_f = jump_estimate(f, thr_ind).total_length;
      MaxField mf = maximal_bd_pruned(f, norm, opt);
      double len_m = jump_estimate(mf.as_grid_function(), thr_ind).total_length;
      timing.add("elimination:h=" + fmt17(h), sw.seconds());
      bool ok = len_m == 0.0;
      all_zero = all_zero && ok;
      csv << "elimination," << fmt17(h) << ",square-1," << fmt17(thr_ind) << "," << fmt17(len_f)
          << "," << fmt17(len_m) << "," << (ok ? "ok" : "FAIL") << "\n";
    }
    res.check(all_zero, "maximal image of the square keeps no jumps at any tested h");

    // centered comparison keeps the square's perimeter
    Stopwatch sw;
    GridFunction f = generate(sq, make_grid(2, sq.box, finest));
    MaxField mc = maximal_centered(f, norm, opt);
    double len_c = jump_estimate(mc.as_grid_function(), thr_ind).total_length;
    timing.add("centered", sw.seconds());
    bool cok = std::abs(len_c - 4.0) <= 0.05 * 4.0;
    csv << "centered," << fmt17(finest) << ",square-1," << fmt17(thr_ind) << ",4,"
        << fmt17(len_c) << "," << (cok ? "ok" : "FAIL") << "\n";
    res.check(cok, "centered square jump length " + fmt17(len_c) + " within 5% of 4");
    res.summary["centered_length"] = len_c;
  }

  // jump collapse across the corpus at the finest resolution
  bool collapse_ok = true;
  for (const ProfileSpec& spec : specs) {
    double thr = is_indicator(spec) ? thr_ind : 10.0 * finest;
    Stopwatch sw;
    GridFunction f = generate(spec, finest);
    double len_f = jump_estimate(f, thr).total_length;
    MaxField mf = maximal_bd_pruned(f, norm, opt);
    double len_m = jump_estimate(mf.as_grid_function(), thr).total_length;
    timing.add("collapse:" + spec.id(), sw.seconds());
    std::string verdict = "na";
    if (len_f > 0.0) {
      bool ok = len_m <= 0.05 * len_f;
      collapse_ok = collapse_ok && ok;
      verdict = ok ? "ok" : "FAIL";
    }
    csv << "collapse," << fmt17(finest) << "," << spec.id() << "," << fmt17(thr) << ","
        << fmt17(len_f) << "," << fmt17(len_m) << "," << verdict << "\n";
  }
  res.check(collapse_ok, "jump length of M f at most 5% of f's wherever f has jumps");

  if (selected(specs, "qball-p0.5")) {
    double oracle_h = 1.0 / 128;
    Stopwatch sw;
    double delta0 = cusp_ray_jump(oracle_h, cfg.threads);
    auto pcsv = open_out(cfg.out, "persistence.csv");
    pcsv << "# maxreg-persistence v1 statistic=cusp-ray-max-face-jump x1=[0.4,1.1] x2=0"
         << " oracle_h=" << fmt17(oracle_h) << "\n";
    pcsv << "h,delta,delta0,rel_err,verdict\n";
    bool pok = true;
    nlohmann::json deltas;
    for (double h : {1.0 / 32, 1.0 / 64}) {
      double d = cusp_ray_jump(h, cfg.threads);
      double rel = std::abs(d - delta0) / delta0;
      bool ok = rel <= 0.20 && d >= delta0 * 0.999999;
      pok = pok && ok;
      pcsv << fmt17(h) << "," << fmt17(d) << "," << fmt17(delta0) << "," << fmt17(rel) << ","
           << (ok ? "ok" : "FAIL") << "\n";
      deltas[fmt17(h)] = d;
    }
    timing.add("persistence", sw.seconds());
    res.check(pok, "quasiball cusp jump stays within 20% of the fine oracle delta0=" +
                       fmt17(delta0));
    res.summary["delta0"] = delta0;
    res.summary["delta"] = deltas;
  }
  timing.write();

  res.summary["experiment"] = "continuity";
  res.summary["extension"] = "zero";
  res.summary["norm"] = norm.name();
  res.summary["h"] = hs;
  res.summary["indicator_threshold"] = thr_ind;
  res.summary["pass"] = res.pass;
  write_summary(cfg, "continuity_summary.json", res.summary);
  return res;
}

// ---------------------------------------------------------------------------
// lipschitz-enk: gradient quotients on the good sets

namespace detail {

struct PairScan {
  double max_quotient = 0.0;
  std::int64_t pairs = 0;
};

inline PairScan scan_masked_pairs(const Grid& g, const std::vector<double>& vals,
                                  const std::vector<std::uint8_t>& mask) {
  PairScan out;
  std::int64_t n = g.node_count();
  for (int axis = 0; axis < g.dim; ++axis) {
    std::int64_t stride = 1;
    for (int a = axis + 1; a < g.dim; ++a) stride *= g.counts[a];
    for (std::int64_t i = 0; i < n; ++i) {
      if (g.unflat(i)[axis] + 1 >= g.counts[axis]) continue;
      std::int64_t j = i + stride;
      if (!mask[static_cast<std::size_t>(i)] || !mask[static_cast<std::size_t>(j)]) continue;
      ++out.pairs;
      double q = std::abs(vals[static_cast<std::size_t>(j)] -
                          vals[static_cast<std::size_t>(i)]) /
                 g.spacing;
      out.max_quotient = std::max(out.max_quotient, q);
    }
  }
  return out;
}

} // namespace detail

inline ExperimentResult run_lipschitz_enk(const ExperimentConfig& cfg) {
  ExperimentResult res;
  double h = cfg.grid_h.empty() ? 1.0 / 32 : cfg.grid_h.front();
  double cap = effective_cap(cfg, 0.5);
  std::vector<ProfileSpec> specs;
  if (cfg.corpus_sel == "all") {
    auto all = corpus(2);
    for (const char* id : {"square-1", "radial-linf-exp4", "radial-l2-exp4"})
      specs.push_back(find_profile(all, id));
  } else {
    specs = select_corpus(2, cfg);
  }
  std::vector<NormSpec> norms =
      cfg.norm ? std::vector<NormSpec>{*cfg.norm} : std::vector<NormSpec>{norm_linf(), norm_l2()};

  auto csv = open_out(cfg.out, "lipschitz.csv");
  csv << "# maxreg-lipschitz v1 extension=zero h=" << fmt17(h) << "\n";
  csv << "function,norm,variant,n,k,radius_cap,bound,max_quotient,pairs,verdict\n";
  TimingLog timing(cfg.out / "lipschitz_timing.csv");

  bool all_ok = true;
  for (const ProfileSpec& spec : specs) {
    GridFunction f = generate(spec, h);
    double v_upper = variation_directional(f).v_upper;
    for (const NormSpec& norm : norms) {
      double c = l2_equivalence_constant(norm, 2);
      Stopwatch sw;
      MaxField mfull = maximal_bd_pruned(f, norm, {.threads = cfg.threads});
      for (double n : {1.0, 2.0, 4.0}) {
        for (double k : {0.25, 0.5, 1.0}) {
          auto mask = enk_classify(mfull, n, k);
          auto scan = detail::scan_masked_pairs(f.grid, mfull.values, mask);
          double bound = c * 2.0 * k * n;
          bool ok = scan.max_quotient <= bound * (1.0 + 1e-12);
          all_ok = all_ok && ok;
          csv << spec.id() << "," << csv_name(norm) << ",enk," << fmt17(n) << "," << fmt17(k)
              << ",none," << fmt17(bound) << "," << fmt17(scan.max_quotient) << ","
              << scan.pairs << "," << (ok ? "ok" : "FAIL") << "\n";
        }
      }
      MaxField mcap = maximal_bd_pruned(f, norm, {.radius_cap = cap, .threads = cfg.threads});
      for (double n : {1.0, 2.0, 4.0}) {
        auto mask = ern_classify(mcap, n);
        auto scan = detail::scan_masked_pairs(f.grid, mcap.values, mask);
        double bound = c * n * n * v_upper;
        bool ok = scan.max_quotient <= bound * (1.0 + 1e-12);
        all_ok = all_ok && ok;
        csv << spec.id() << "," << csv_name(norm) << ",ern," << fmt17(n) << ",-,"
            << cap_name(cap) << "," << fmt17(bound) << "," << fmt17(scan.max_quotient) << ","
            << scan.pairs << "," << (ok ? "ok" : "FAIL") << "\n";
      }
      timing.add(spec.id() + ":" + csv_name(norm), sw.seconds());
    }
  }
  timing.write();
  res.check(all_ok, "all masked gradient quotients within their bounds");
  res.summary = {{"experiment", "lipschitz-enk"}, {"extension", "zero"},
                 {"h", h},                        {"radius_cap", cap_name(cap)},
                 {"functions", specs.size()},     {"pass", res.pass}};
  write_summary(cfg, "lipschitz_summary.json", res.summary);
  return res;
}

// ---------------------------------------------------------------------------
// oracle-equivalence: pruned engine must reproduce the brute reference

inline ExperimentResult run_oracle_equivalence(const ExperimentConfig& cfg) {
  ExperimentResult res;
  double h = cfg.grid_h.empty() ? 1.0 / 8 : cfg.grid_h.front();
  auto csv = open_out(cfg.out, "equivalence.csv");
  csv << "# maxreg-equivalence v1 radius_cap=none\n";
  csv << "dim,h,function,norm,nodes,mismatches,verdict\n";
  TimingLog timing(cfg.out / "equivalence_timing.csv");

  std::int64_t total_mismatches = 0, combos = 0;
  for (int dim : {2, 3}) {
    auto specs = select_corpus(dim, cfg);
    auto norms = norm_set(cfg, dim);
    for (const ProfileSpec& spec : specs) {
      GridFunction f = generate(spec, h);
      require(f.grid.node_count() <= 100000,
              "brute oracle guard: " + spec.id() + " has " +
                  std::to_string(f.grid.node_count()) + " nodes (limit 100000)");
      for (const NormSpec& norm : norms) {
        Stopwatch sw;
        MaxOptions opt{.threads = cfg.threads};
        MaxField brute = maximal_brute(f, norm, opt);
        MaxField pruned = maximal_bd_pruned(f, norm, opt);
        FieldMismatch cmp = compare_values(brute, pruned);
        timing.add(std::to_string(dim) + "d:" + spec.id() + ":" + csv_name(norm), sw.seconds());
        ++combos;
        total_mismatches += cmp.count;
        csv << dim << "," << fmt17(h) << "," << spec.id() << "," << csv_name(norm) << ","
            << f.grid.node_count() << "," << cmp.count << ","
            << (cmp.count == 0 ? "ok" : "FAIL") << "\n";
        if (cmp.count != 0) {
          std::string stem = "equiv_" + std::to_string(dim) + "d_" + spec.id();
          write_witness_csv(cfg.out / (stem + "_brute.csv"), brute);
          write_witness_csv(cfg.out / (stem + "_pruned.csv"), pruned);
          MaxRecord a = brute.record(cmp.first), b = pruned.record(cmp.first);
          res.check(false, spec.id() + " " + norm.name() + " d=" + std::to_string(dim) +
                               ": first mismatch at node " + std::to_string(cmp.first) +
                               " brute=" + fmt17(a.value) + "@r=" + fmt17(a.radius) +
                               " pruned=" + fmt17(b.value) + "@r=" + fmt17(b.radius) +
                               " (witness dumps written)");
        }
      }
    }
  }
  timing.write();
  if (total_mismatches == 0)
    res.check(true, "pruned equals brute on all " + std::to_string(combos) + " corpus combos");
  res.summary = {{"experiment", "oracle-equivalence"},
                 {"h", h},
                 {"combos", combos},
                 {"mismatches", total_mismatches},
                 {"pass", res.pass}};
  write_summary(cfg, "equivalence_summary.json", res.summary);
  return res;
}

// ---------------------------------------------------------------------------
// bench: brute vs pruned on the square indicator

inline ExperimentResult run_bench(const ExperimentConfig& cfg) {
  ExperimentResult res;
  NormSpec norm = cfg.norm.value_or(norm_linf());
  double E = cfg.box.value_or(2.0);
  std::vector<double> hs = cfg.grid_h.empty() ? std::vector<double>{1.0 / 16, 1.0 / 64}
                                              : cfg.grid_h;
  auto csv = open_out(cfg.out, "bench.csv");
  csv << "# maxreg-bench v1 norm=" << norm.name()
      << " box=" << fmt17(E) << " (timings; not covered by reproducibility)\n";
  csv << "n,d,norm,algo,seconds\n";

  ProfileSpec sq = parse_profile("square side=1");
  sq.box = E;
  double speedup_last = 0.0;
  bool equal_ok = true, small_ok = true;
  char buf[32];
  for (double h : hs) {
    GridFunction f = generate(sq, make_grid(2, E, h));
    MaxOptions opt{.threads = cfg.threads};
    Stopwatch swb;
    MaxField brute = maximal_brute(f, norm, opt);
    double tb = swb.seconds();
    Stopwatch swp;
    MaxField pruned = maximal_bd_pruned(f, norm, opt);
    double tp = swp.seconds();
    equal_ok = equal_ok && compare_values(brute, pruned).count == 0;
    std::int64_t n = f.grid.node_count();
    std::snprintf(buf, sizeof buf, "%.4f", tb);
    csv << n << ",2," << csv_name(norm) << ",brute," << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.4f", tp);
    csv << n << ",2," << csv_name(norm) << ",pruned," << buf << "\n";
    if (n <= 5000) small_ok = small_ok && tb < 60.0 && tp < 60.0;
    speedup_last = tb / std::max(tp, 1e-9);
  }
  res.check(equal_ok, "pruned output equals brute on every benched instance");
  res.check(small_ok, "small instances finish under a minute per engine");
  res.check(speedup_last >= 5.0,
            "pruned speedup on the largest instance: " + fmt17(speedup_last) + "x >= 5x");
  bool soft = speedup_last >= 20.0;
  res.summary = {{"experiment", "bench"},
                 {"norm", norm.name()},
                 {"box", E},
                 {"h", hs},
                 {"speedup", speedup_last},
                 {"soft_target_20x", soft},
                 {"pass", res.pass}};
  write_summary(cfg, "bench_summary.json", res.summary);
  return res;
}

// ---------------------------------------------------------------------------
// randomized invariant suite (fixed seed): dominance, cap monotonicity,
// dyadic scaling, stencil monotonicity, reflection closure, variation sandwich

struct InvariantReport {
  bool pass = true;
  int checks = 0;
  std::vector<std::string> lines;

  void check(bool ok, const std::string& msg) {
    ++checks;
    pass = pass && ok;
    if (!ok) lines.push_back("FAIL: " + msg);
  }
};

inline InvariantReport run_invariant_suite(std::uint64_t seed, int threads = 1) {
  InvariantReport rep;
  struct Trial {
    int dim;
    double h;
  };
  const Trial trials[] = {{1, 1.0 / 8}, {2, 1.0 / 8}, {2, 1.0 / 8},
                          {3, 1.0 / 4}, {2, 1.0 / 8}, {1, 1.0 / 16}};
  int t = 0;
  for (const Trial& trial : trials) {
    ProfileSpec spec = random_corpus(trial.dim, 1 + t % 3, seed + 1000 + t).back();
    Extension ext = t % 2 ? Extension::Clamp : Extension::Zero;
    std::mt19937_64 rng(seed + 77 * t);
    std::uniform_int_distribution<int> unorm(0, 3);
    int pick = unorm(rng);
    NormSpec norm = pick == 0   ? norm_linf()
                    : pick == 1 ? norm_l1()
                    : pick == 2 ? norm_l2()
                                : norm_lp(1.0 + (t % 4) * 0.5);
    Grid g = make_grid(trial.dim, std::min(spec.box, 1.25), trial.h);
    GridFunction f = generate(spec, g, ext);
    std::string tag = spec.id() + "/" + norm.name() + "/" + extension_name(ext) +
                      "/d=" + std::to_string(trial.dim);
    ++t;

    MaxOptions opt{.threads = threads, .record_witnesses = false};
    MaxField mf = maximal_brute(f, norm, opt);
    std::int64_t n = g.node_count();

    // dominance, weakened by the oscillation over one stencil step
    auto st = stencil(g, norm, g.spacing);
    bool dom = true;
    for (std::int64_t i = 0; i < n && dom; ++i) {
      Ivec iv = g.unflat(i);
      double avg = ball_average(f, iv, st);
      double eps = 0.0;
      for (const Ivec& o : st.offsets) {
        Ivec jv = iv;
        for (int a = 0; a < g.dim; ++a) jv[a] += o[a];
        eps = std::max(eps, std::abs(f.extended(jv) - f[i]));
      }
      dom = mf.values[static_cast<std::size_t>(i)] >= avg - 1e-12 &&
            mf.values[static_cast<std::size_t>(i)] >= f[i] - eps - 1e-12;
    }
    rep.check(dom, tag + ": dominance up to one-step oscillation");

    // radius caps only ever lower the field, exactly
    MaxOptions c1 = opt, c2 = opt;
    c1.radius_cap = 2.0 * g.spacing;
    c2.radius_cap = 4.0 * g.spacing;
    MaxField m1 = maximal_brute(f, norm, c1);
    MaxField m2 = maximal_brute(f, norm, c2);
    bool capmono = true;
    for (std::int64_t i = 0; i < n && capmono; ++i) {
      auto u = static_cast<std::size_t>(i);
      capmono = m1.values[u] <= m2.values[u] && m2.values[u] <= mf.values[u];
    }
    rep.check(capmono, tag + ": radius-cap monotonicity");

    // dyadic scaling commutes exactly through the averages
    GridFunction f4 = f;
    for (double& v : f4.values) v *= 4.0;
    f4.ceiling *= 4.0;
    MaxField mf4 = maximal_brute(f4, norm, opt);
    bool scal = true;
    for (std::int64_t i = 0; i < n && scal; ++i)
      scal = mf4.values[static_cast<std::size_t>(i)] ==
             4.0 * mf.values[static_cast<std::size_t>(i)];
    rep.check(scal, tag + ": dyadic scaling equivariance");

    // stencils grow with the radius and stay mirror closed
    auto radii = radius_ladder(g, norm);
    bool grow = true, mirror = true;
    std::set<Ivec> prev;
    for (std::size_t r = 0; r < std::min<std::size_t>(radii.size(), 4); ++r) {
      auto cur = stencil(g, norm, radii[r]);
      std::set<Ivec> curset(cur.offsets.begin(), cur.offsets.end());
      for (const Ivec& o : prev)
        if (!curset.count(o)) grow = false;
      for (const Ivec& o : cur.offsets) {
        for (int a = 0; a < g.dim; ++a) {
          Ivec m = o;
          m[a] = -m[a];
          if (!curset.count(m)) mirror = false;
        }
      }
      prev = curset;
    }
    rep.check(grow, tag + ": stencil monotonicity in the radius");
    rep.check(mirror, tag + ": stencil reflection closure");

    // boundary sum sandwich for the block-decreasing input
    VariationReport vr = variation_directional(f);
    bool sandwich = vr.bd_boundary_sum.has_value();
    if (sandwich) {
      double S = *vr.bd_boundary_sum;
      double root = std::sqrt(static_cast<double>(g.dim));
      sandwich = S >= 0.95 * vr.v_lower && S <= 1.05 * root * vr.v_upper;
    }
    rep.check(sandwich, tag + ": boundary sum inside the banded sandwich");
  }
  return rep;
}

// ---------------------------------------------------------------------------

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  std::filesystem::create_directories(cfg.out);
  if (cfg.experiment == "square-demo") return run_square_demo(cfg);
  if (cfg.experiment == "theorem1-sweep") return run_theorem1_sweep(cfg);
  if (cfg.experiment == "counterexample") return run_counterexample(cfg);
  if (cfg.experiment == "continuity") return run_continuity(cfg);
  if (cfg.experiment == "lipschitz-enk") return run_lipschitz_enk(cfg);
  if (cfg.experiment == "oracle-equivalence") return run_oracle_equivalence(cfg);
  if (cfg.experiment == "bench") return run_bench(cfg);
  fail("unknown experiment '" + cfg.experiment +
       "' (want square-demo|theorem1-sweep|counterexample|continuity|lipschitz-enk|"
       "oracle-equivalence|bench)");
}

} // namespace maxreg
