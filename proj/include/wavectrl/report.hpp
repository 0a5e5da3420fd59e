// Configuration parsing (flat key=value files), CSV emission for runs and
// parameter sweeps, standalone SVG figures, and the CLI entry point.
#pragma once

#include "wavectrl/control.hpp"
#include "wavectrl/iterate.hpp"
#include "wavectrl/mesh.hpp"
#include "wavectrl/replay.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wavectrl {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& msg)
      : std::runtime_error(line > 0 ? "config line " + std::to_string(line) + ": " + msg : "config: " + msg),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct Config {
  RunConfig run;
  std::string out_dir = "out";
  std::vector<double> sweep_c_f;   // empty = just run.c_f
  std::vector<double> sweep_c_u0;  // empty = just run.c_u0
  int replay_M = 400;
  double replay_cfl = 0.9;
  std::vector<std::string> figures = {"error_vs_k", "lambda_vs_k", "control_t"};
};

enum class FigureKind { ErrorVsK, LambdaVsK, NormT, ControlT };

inline std::optional<FigureKind> figure_kind_from(std::string_view s) {
  if (s == "error_vs_k") return FigureKind::ErrorVsK;
  if (s == "lambda_vs_k") return FigureKind::LambdaVsK;
  if (s == "norm_t") return FigureKind::NormT;
  if (s == "control_t") return FigureKind::ControlT;
  return std::nullopt;
}

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) return std::nullopt;
    return v;
  } catch (...) {
    return std::nullopt;
  }
}

inline std::optional<long long> parse_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) return std::nullopt;
    return v;
  } catch (...) {
    return std::nullopt;
  }
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

inline std::string fmt_sci(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.5e", x);
  return buf;
}

inline std::string fmt_g(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

// temp file + rename so partially written outputs never appear
inline void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os << content;
    if (!os.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, p);
}

}  // namespace detail

inline Config parse_config(std::string_view text) {
  Config cfg;
  std::istringstream is{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(lineno, "expected key=value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    auto as_double = [&]() {
      const auto v = detail::parse_double(val);
      if (!v) throw ConfigError(lineno, "expected a number for '" + key + "'");
      return *v;
    };
    auto as_int = [&]() {
      const auto v = detail::parse_int(val);
      if (!v) throw ConfigError(lineno, "expected an integer for '" + key + "'");
      return static_cast<int>(*v);
    };
    auto as_list = [&]() {
      std::vector<double> out;
      for (const auto& item : detail::split(val, ',')) {
        const auto v = detail::parse_double(item);
        if (!v) throw ConfigError(lineno, "expected a comma-separated number list for '" + key + "'");
        out.push_back(*v);
      }
      if (out.empty()) throw ConfigError(lineno, "empty list for '" + key + "'");
      return out;
    };

    if (key == "algorithm") {
      if (val == "ls")
        cfg.run.algorithm = Algorithm::LS;
      else if (val == "newton")
        cfg.run.algorithm = Algorithm::Newton;
      else if (val == "pf1")
        cfg.run.algorithm = Algorithm::PF1;
      else if (val == "pf2")
        cfg.run.algorithm = Algorithm::PF2;
      else
        throw ConfigError(lineno, "algorithm must be ls, newton, pf1 or pf2");
    } else if (key == "nonlinearity") {
      if (val == "paper_log2")
        cfg.run.nonlinearity = Nonlinearity::paper_log2(cfg.run.nonlinearity.c_f);
      else if (val == "linear")
        cfg.run.nonlinearity = Nonlinearity::linear(cfg.run.nonlinearity.c_f);
      else
        throw ConfigError(lineno, "nonlinearity must be paper_log2 or linear");
    } else if (key == "c_f") {
      cfg.run.nonlinearity.c_f = as_double();
    } else if (key == "data") {
      if (val == "cosine")
        cfg.run.data_family = DataFamily::Cosine;
      else if (val == "ramp100")
        cfg.run.data_family = DataFamily::Ramp100;
      else if (val == "mixed")
        cfg.run.data_family = DataFamily::Mixed;
      else
        throw ConfigError(lineno, "data must be cosine, ramp100 or mixed");
    } else if (key == "c_u0") {
      cfg.run.c_u0 = as_double();
    } else if (key == "c_u1") {
      cfg.run.c_u1 = as_double();
    } else if (key == "nx") {
      cfg.run.nx = as_int();
      if (cfg.run.nx < 1) throw ConfigError(lineno, "nx must be >= 1");
    } else if (key == "nt") {
      cfg.run.nt = as_int();
      if (cfg.run.nt < 1) throw ConfigError(lineno, "nt must be >= 1");
    } else if (key == "T") {
      cfg.run.T = as_double();
      if (!(cfg.run.T > 2.0)) throw ConfigError(lineno, "controllability time must exceed 2");
    } else if (key == "quad_order") {
      cfg.run.quad_order = as_int();
      if (cfg.run.quad_order < 1 || cfg.run.quad_order > 10)
        throw ConfigError(lineno, "quad_order must be in [1,10]");
    } else if (key == "tol") {
      cfg.run.tol = as_double();
      if (!(cfg.run.tol > 0.0)) throw ConfigError(lineno, "tol must be positive");
    } else if (key == "kmax") {
      cfg.run.kmax = as_int();
      if (cfg.run.kmax < 1) throw ConfigError(lineno, "kmax must be >= 1");
    } else if (key == "blowup") {
      cfg.run.blowup = as_double();
      if (!(cfg.run.blowup > 0.0)) throw ConfigError(lineno, "blowup must be positive");
    } else if (key == "ls_tol") {
      cfg.run.ls_tol = as_double();
      if (!(cfg.run.ls_tol > 0.0)) throw ConfigError(lineno, "ls_tol must be positive");
    } else if (key == "out") {
      if (val.empty()) throw ConfigError(lineno, "out must not be empty");
      cfg.out_dir = val;
    } else if (key == "sweep_c_f") {
      cfg.sweep_c_f = as_list();
    } else if (key == "sweep_c_u0") {
      cfg.sweep_c_u0 = as_list();
    } else if (key == "replay_M") {
      cfg.replay_M = as_int();
      if (cfg.replay_M < 16) throw ConfigError(lineno, "replay_M must be >= 16");
    } else if (key == "replay_cfl") {
      cfg.replay_cfl = as_double();
      if (!(cfg.replay_cfl > 0.0) || cfg.replay_cfl > 1.0)
        throw ConfigError(lineno, "replay_cfl must lie in (0,1]");
    } else if (key == "figures") {
      cfg.figures.clear();
      for (const auto& item : detail::split(val, ',')) {
        if (!figure_kind_from(item)) throw ConfigError(lineno, "unknown figure kind '" + item + "'");
        cfg.figures.push_back(item);
      }
    } else {
      throw ConfigError(lineno, "unknown key '" + key + "'");
    }
  }
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError(0, "cannot open config file " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

// --- CSV -------------------------------------------------------------

inline const char* kRunCsvHeader = "k,sqrt2E,lambda,norm_y_L2QT,norm_v_L2_0T,rel_dy,rel_dv";

inline void write_csv(const RunReport& report, const std::string& path) {
  std::string out = std::string(kRunCsvHeader) + "\n";
  for (const auto& rec : report.records) {
    out += std::to_string(rec.k);
    out += ',' + detail::fmt_sci(rec.sqrt2E);
    out += ',' + (rec.lambda ? detail::fmt_sci(*rec.lambda) : std::string());
    out += ',' + detail::fmt_sci(rec.norm_y);
    out += ',' + detail::fmt_sci(rec.norm_v);
    out += ',' + (rec.rel_dy ? detail::fmt_sci(*rec.rel_dy) : std::string());
    out += ',' + (rec.rel_dv ? detail::fmt_sci(*rec.rel_dv) : std::string());
    out += '\n';
  }
  out += std::string("# status=") + to_string(report.status) + "\n";
  detail::atomic_write(path, out);
}

struct CsvRun {
  std::vector<IterationRecord> records;
  std::string status;
};

inline CsvRun read_run_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line) || detail::trim(line) != kRunCsvHeader)
    throw std::runtime_error(path + ": unexpected CSV header");
  CsvRun run;
  while (std::getline(is, line)) {
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      const std::size_t eq = t.find("status=");
      if (eq != std::string::npos) run.status = detail::trim(t.substr(eq + 7));
      continue;
    }
    const auto parts = detail::split(t, ',');
    if (parts.size() != 7) throw std::runtime_error(path + ": malformed row '" + t + "'");
    IterationRecord rec;
    const auto k = detail::parse_int(parts[0]);
    if (!k) throw std::runtime_error(path + ": bad iteration index");
    rec.k = static_cast<int>(*k);
    auto need = [&](const std::string& s) {
      const auto v = detail::parse_double(s);
      if (!v) throw std::runtime_error(path + ": bad number '" + s + "'");
      return *v;
    };
    rec.sqrt2E = need(parts[1]);
    if (!parts[2].empty()) rec.lambda = need(parts[2]);
    rec.norm_y = need(parts[3]);
    rec.norm_v = need(parts[4]);
    if (!parts[5].empty()) rec.rel_dy = need(parts[5]);
    if (!parts[6].empty()) rec.rel_dv = need(parts[6]);
    run.records.push_back(rec);
  }
  return run;
}

struct SweepRow {
  double c_f = 0.0;
  double c_u0 = 0.0;
  Algorithm algorithm = Algorithm::LS;
  std::optional<int> k_star;
  double sqrt2E_final = 0.0;
  double norm_y = 0.0;
  double norm_v = 0.0;
  RunStatus status = RunStatus::MaxIter;
};

inline void write_summary_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::string out = "c_f,c_u0,algorithm,k_star,sqrt2E_final,norm_y,norm_v,status\n";
  for (const auto& r : rows) {
    out += detail::fmt_sci(r.c_f) + ',' + detail::fmt_sci(r.c_u0) + ',' + to_string(r.algorithm) + ',';
    out += r.k_star ? std::to_string(*r.k_star) : std::string("inf");
    out += ',' + detail::fmt_sci(r.sqrt2E_final) + ',' + detail::fmt_sci(r.norm_y) + ',' +
           detail::fmt_sci(r.norm_v) + ',' + to_string(r.status) + '\n';
  }
  detail::atomic_write(path, out);
}

// control interchange: two columns t,v at the trace quadrature times
inline void write_control_csv(const BoundaryTrace& v, const std::string& path) {
  std::string out = "t,v\n";
  for (std::size_t i = 0; i < v.times.size(); ++i)
    out += detail::fmt_g(v.times[i]) + ',' + detail::fmt_g(v.values[i]) + '\n';
  detail::atomic_write(path, out);
}

inline BoundaryTrace read_control_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open control file " + path);
  std::string line;
  if (!std::getline(is, line) || detail::trim(line) != "t,v")
    throw std::runtime_error(path + ": expected header 't,v'");
  BoundaryTrace tr;
  while (std::getline(is, line)) {
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto parts = detail::split(t, ',');
    if (parts.size() != 2) throw std::runtime_error(path + ": malformed row '" + t + "'");
    const auto tv = detail::parse_double(parts[0]);
    const auto vv = detail::parse_double(parts[1]);
    if (!tv || !vv) throw std::runtime_error(path + ": bad number in row '" + t + "'");
    tr.times.push_back(*tv);
    tr.values.push_back(*vv);
  }
  tr.nt = static_cast<int>(tr.times.size());
  tr.order = 1;
  return tr;
}

// two-column generic curve (t,value), used by the figure subcommand
inline std::pair<std::vector<double>, std::vector<double>> read_curve_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(path + ": empty file");
  std::vector<double> xs, ys;
  while (std::getline(is, line)) {
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto parts = detail::split(t, ',');
    if (parts.size() < 2) throw std::runtime_error(path + ": malformed row '" + t + "'");
    const auto x = detail::parse_double(parts[0]);
    const auto y = detail::parse_double(parts[1]);
    if (!x || !y) throw std::runtime_error(path + ": bad number in row '" + t + "'");
    xs.push_back(*x);
    ys.push_back(*y);
  }
  return {std::move(xs), std::move(ys)};
}

// --- SVG -------------------------------------------------------------

struct Series {
  std::string label;
  std::vector<double> x, y;
};

namespace detail {

inline std::string svg_axis_label(FigureKind kind, bool vertical) {
  switch (kind) {
    case FigureKind::ErrorVsK: return vertical ? "sqrt(2E)" : "iteration k";
    case FigureKind::LambdaVsK: return vertical ? "lambda" : "iteration k";
    case FigureKind::NormT: return vertical ? "||y(.,t)||_L2" : "t";
    case FigureKind::ControlT: return vertical ? "v(t)" : "t";
  }
  return "";
}

}  // namespace detail

// Standalone SVG 1.1 polyline plot; ordinate is log10 for ErrorVsK.
// Byte-deterministic for identical input.
inline void write_svg(const std::vector<Series>& series, FigureKind kind, const std::string& path) {
  if (series.empty()) throw std::invalid_argument("write_svg: no series");
  for (const auto& s : series)
    if (s.x.empty() || s.x.size() != s.y.size()) throw std::invalid_argument("write_svg: empty or ragged series");

  const bool logy = kind == FigureKind::ErrorVsK;
  const double W = 640, H = 480, L = 72, R = 16, Tm = 18, B = 48;
  double xmin = series[0].x[0], xmax = xmin, ymin = 0, ymax = 0;
  bool first = true;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      double yv = s.y[i];
      if (logy) yv = std::log10(std::max(yv, 1e-300));
      if (first) {
        ymin = ymax = yv;
        xmin = xmax = s.x[i];
        first = false;
      }
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, yv);
      ymax = std::max(ymax, yv);
    }
  if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
  if (ymax - ymin < 1e-12) ymax = ymin + 1.0;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - B - Tm); };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"640\" height=\"480\" "
         "viewBox=\"0 0 640 480\">\n";
  out += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  char buf[256];
  auto fmt = [&](const char* f, auto... a) {
    std::snprintf(buf, sizeof(buf), f, a...);
    out += buf;
  };
  // axes
  fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n", L, H - B, W - R, H - B);
  fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n", L, H - B, L, Tm);
  const int nticks = 5;
  for (int i = 0; i <= nticks; ++i) {
    const double fx = xmin + (xmax - xmin) * i / nticks;
    const double fy = ymin + (ymax - ymin) * i / nticks;
    fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n", px(fx), H - B, px(fx),
        H - B + 5);
    fmt("<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\" text-anchor=\"middle\">%.4g</text>\n", px(fx), H - B + 18,
        fx);
    fmt("<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"black\"/>\n", L - 5, py(fy), L, py(fy));
    if (logy)
      fmt("<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\" text-anchor=\"end\">1e%.3g</text>\n", L - 8, py(fy) + 4,
          fy);
    else
      fmt("<text x=\"%.2f\" y=\"%.2f\" font-size=\"11\" text-anchor=\"end\">%.4g</text>\n", L - 8, py(fy) + 4, fy);
  }
  fmt("<text x=\"%.2f\" y=\"%.2f\" font-size=\"13\" text-anchor=\"middle\">%s</text>\n", (L + W - R) / 2, H - 10,
      detail::svg_axis_label(kind, false).c_str());
  fmt("<text x=\"14\" y=\"%.2f\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 %.2f)\">%s"
      "</text>\n",
      (Tm + H - B) / 2, (Tm + H - B) / 2, detail::svg_axis_label(kind, true).c_str());

  static const char* palette[4] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    out += "<polyline fill=\"none\" stroke=\"";
    out += palette[si % 4];
    out += "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      double yv = s.y[i];
      if (logy) yv = std::log10(std::max(yv, 1e-300));
      fmt("%.2f,%.2f ", px(s.x[i]), py(yv));
    }
    out += "\"/>\n";
    if (!s.label.empty()) {
      fmt("<text x=\"%.2f\" y=\"%.2f\" font-size=\"12\" fill=\"%s\">%s</text>\n", W - R - 150.0,
          Tm + 16.0 * (si + 1), palette[si % 4], s.label.c_str());
    }
  }
  out += "</svg>\n";
  detail::atomic_write(path, out);
}

inline void write_svg(const RunReport& report, FigureKind kind, const std::string& path) {
  Series s;
  switch (kind) {
    case FigureKind::ErrorVsK:
      s.label = "sqrt(2E)";
      for (const auto& rec : report.records) {
        s.x.push_back(rec.k);
        s.y.push_back(rec.sqrt2E);
      }
      break;
    case FigureKind::LambdaVsK:
      s.label = "lambda";
      for (const auto& rec : report.records)
        if (rec.lambda) {
          s.x.push_back(rec.k);
          s.y.push_back(*rec.lambda);
        }
      break;
    case FigureKind::ControlT:
      s.label = "v";
      s.x = report.v.times;
      s.y = report.v.values;
      break;
    case FigureKind::NormT:
      throw std::invalid_argument("write_svg: NormT needs a curve, not a report");
  }
  write_svg(std::vector<Series>{std::move(s)}, kind, path);
}

// --- CLI -------------------------------------------------------------

int cli_main(const std::vector<std::string>& args);  // defined in cli.hpp

}  // namespace wavectrl
