#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dgsqp/harness/config.hpp"
#include "dgsqp/harness/montecarlo.hpp"
#include "dgsqp/scenarios/scenario.hpp"

namespace dgsqp::harness {

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr const char* kTrialsHeader =
    "trial,seed,scenario,variant,status,iterations,qp_solves,wall_time_s,"
    "stationarity,max_violation,complementarity,relaxed_steps";

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Splits one CSV record (RFC 4180 quoting, no embedded newlines).
inline std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

inline std::string trials_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream out;
  out << kTrialsHeader << "\n";
  for (const auto& r : records) {
    out << r.trial << ',' << r.seed << ',' << csv_escape(r.scenario) << ','
        << csv_escape(r.variant) << ',' << csv_escape(r.status) << ',' << r.iterations << ','
        << r.qp_solves << ',' << format_double(r.wall_time) << ','
        << format_double(r.stationarity) << ',' << format_double(r.max_violation) << ','
        << format_double(r.complementarity) << ',' << r.relaxed_steps << "\n";
  }
  return out.str();
}

inline std::vector<TrialRecord> parse_trials_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || csv_split(line).size() != 12) {
    throw Error("trials.csv: missing or malformed header");
  }
  std::vector<TrialRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = csv_split(line);
    if (f.size() != 12) throw Error("trials.csv: wrong field count in '" + line + "'");
    TrialRecord r;
    r.trial = std::stoi(f[0]);
    r.seed = std::stoull(f[1]);
    r.scenario = f[2];
    r.variant = f[3];
    r.status = f[4];
    r.iterations = std::stoi(f[5]);
    r.qp_solves = std::stoi(f[6]);
    r.wall_time = std::stod(f[7]);
    r.stationarity = std::stod(f[8]);
    r.max_violation = std::stod(f[9]);
    r.complementarity = std::stod(f[10]);
    r.relaxed_steps = std::stoi(f[11]);
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "'");
  }
}

// ---------------------------------------------------------------------------
// Summary JSON
// ---------------------------------------------------------------------------

inline json report_to_json(const BenchmarkReport& r) {
  json counts = json::object();
  for (const auto& [k, v] : r.status_counts) counts[k] = v;
  return {
      {"trials", r.trials},
      {"status_counts", counts},
      {"conv", r.converged},
      {"conv_relative", r.converged_relative},
      {"fail", r.failed},
      {"max_iters", r.max_iterations},
      {"mean_time_s", r.mean_time},
      {"std_time_s", r.std_time},
      {"mean_iterations", r.mean_iterations},
      {"mean_qp_solves", r.mean_qp_solves},
      {"mean_qp_solves_all", r.mean_qp_solves_all},
      {"median_stationarity", r.median_stationarity},
      {"median_violation_max_iters", r.median_violation_max_iterations},
      {"violation_success", r.violation_success},
      {"violation_failure", r.violation_failure},
      {"assumption2_checked", r.assumption2_checked},
      {"assumption2_holds", r.assumption2_holds},
  };
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

namespace detail {

class SvgCanvas {
 public:
  SvgCanvas(double width, double height) : width_(width), height_(height) {}

  void raw(const std::string& s) { body_ << s << "\n"; }

  void text(double x, double y, const std::string& s, const char* anchor = "middle",
            int size = 12) {
    body_ << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size
          << "\" text-anchor=\"" << anchor << "\" font-family=\"sans-serif\">" << s
          << "</text>\n";
  }

  void line(double x1, double y1, double x2, double y2, const char* stroke = "#000",
            double w = 1.0) {
    body_ << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2
          << "\" stroke=\"" << stroke << "\" stroke-width=\"" << w << "\"/>\n";
  }

  std::string str() const {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\""
        << height_ << "\" viewBox=\"0 0 " << width_ << " " << height_ << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << body_.str() << "</svg>\n";
    return out.str();
  }

 private:
  double width_, height_;
  std::ostringstream body_;
};

inline const char* agent_color(int i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  return colors[i % 4];
}

}  // namespace detail

/**
 * Road edges, one polyline per agent and one collision circle per state
 * x_0 .. x_N of each agent.
 */
inline std::string trajectory_svg(const scenarios::Scenario& scenario, const DynamicGame& game,
                                  const Vector& u) {
  using namespace scenarios;
  const Trajectory traj = rollout(game, u);
  const int agents = game.num_agents();
  const auto& track = scenario.track();

  // Road edges sampled along the arc length covered by the agents.
  double s_lo = std::numeric_limits<double>::infinity(), s_hi = -s_lo;
  for (const auto& x : traj.states) {
    for (int i = 0; i < agents; ++i) {
      s_lo = std::min(s_lo, x(i * kStateDim + kS));
      s_hi = std::max(s_hi, x(i * kStateDim + kS));
    }
  }
  s_lo -= 1.0;
  s_hi += 1.0;
  std::vector<std::vector<Eigen::Vector2d>> edges(2 + (agents > 2 ? 1 : 0));
  for (int k = 0; k <= 200; ++k) {
    const double s = s_lo + (s_hi - s_lo) * k / 200.0;
    edges[0].push_back(track.to_cartesian(s, scenario.bounds(0).upper));
    edges[1].push_back(track.to_cartesian(s, scenario.bounds(0).lower_at(s)));
    if (edges.size() > 2) edges[2].push_back(track.to_cartesian(s, scenario.bounds(2).lower_at(s)));
  }

  Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector2d hi = -lo;
  auto grow = [&](const Eigen::Vector2d& p, double r) {
    lo = lo.cwiseMin(p - Eigen::Vector2d::Constant(r));
    hi = hi.cwiseMax(p + Eigen::Vector2d::Constant(r));
  };
  for (const auto& e : edges)
    for (const auto& p : e) grow(p, 0.0);
  for (const auto& x : traj.states)
    for (int i = 0; i < agents; ++i)
      grow({x(i * kStateDim + kPx), x(i * kStateDim + kPy)}, scenario.vehicles()[i].radius);

  const double margin = 20.0, size = 600.0;
  const double scale = size / std::max(hi.x() - lo.x(), hi.y() - lo.y());
  const double w = (hi.x() - lo.x()) * scale + 2 * margin;
  const double h = (hi.y() - lo.y()) * scale + 2 * margin;
  auto px = [&](double x) { return margin + (x - lo.x()) * scale; };
  auto py = [&](double y) { return h - margin - (y - lo.y()) * scale; };

  detail::SvgCanvas svg(w, h);
  for (const auto& e : edges) {
    std::ostringstream pts;
    for (const auto& p : e) pts << px(p.x()) << ',' << py(p.y()) << ' ';
    svg.raw("<polyline class=\"road-edge\" fill=\"none\" stroke=\"#555\" stroke-width=\"1.5\" points=\"" +
            pts.str() + "\"/>");
  }
  for (int i = 0; i < agents; ++i) {
    const char* color = detail::agent_color(i);
    std::ostringstream pts;
    for (const auto& x : traj.states) {
      pts << px(x(i * kStateDim + kPx)) << ',' << py(x(i * kStateDim + kPy)) << ' ';
    }
    svg.raw(std::string("<polyline class=\"agent-path\" data-agent=\"") + std::to_string(i) +
            "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\" points=\"" + pts.str() +
            "\"/>");
    const double r = scenario.vehicles()[i].radius * scale;
    for (const auto& x : traj.states) {
      std::ostringstream c;
      c << "<circle class=\"agent-circle\" data-agent=\"" << i << "\" cx=\""
        << px(x(i * kStateDim + kPx)) << "\" cy=\"" << py(x(i * kStateDim + kPy)) << "\" r=\""
        << r << "\" fill=\"" << color << "\" fill-opacity=\"0.08\" stroke=\"" << color
        << "\" stroke-width=\"0.8\"/>";
      svg.raw(c.str());
    }
  }
  return svg.str();
}

struct HistogramBins {
  std::vector<double> edges;  // log10 violation
  std::vector<int> success;
  std::vector<int> failure;
};

/// Counts of nonzero violations in unit-width log10 bins; values outside the
/// range land in the first or last bin.
inline HistogramBins violation_bins(const BenchmarkReport& report, int lo = -16, int hi = 2) {
  HistogramBins b;
  for (int e = lo; e <= hi; ++e) b.edges.push_back(e);
  const int nbins = hi - lo;
  b.success.assign(nbins, 0);
  b.failure.assign(nbins, 0);
  auto bin = [&](double v) {
    const int idx = static_cast<int>(std::floor(std::log10(v))) - lo;
    return std::clamp(idx, 0, nbins - 1);
  };
  for (double v : report.violation_success)
    if (v > 0) ++b.success[bin(v)];
  for (double v : report.violation_failure)
    if (v > 0) ++b.failure[bin(v)];
  return b;
}

/// Terminal max constraint violation by outcome; zero violations are
/// counted in the caption only.
inline std::string violation_histogram_svg(const BenchmarkReport& report) {
  const HistogramBins b = violation_bins(report);
  const int nbins = static_cast<int>(b.success.size());
  int peak = 1;
  for (int i = 0; i < nbins; ++i) peak = std::max({peak, b.success[i], b.failure[i]});
  const double w = 720, h = 360, left = 50, right = 20, top = 40, bottom = 50;
  const double bw = (w - left - right) / nbins;
  detail::SvgCanvas svg(w, h);
  auto y_of = [&](int count) { return top + (h - top - bottom) * (1.0 - double(count) / peak); };
  svg.line(left, h - bottom, w - right, h - bottom);
  svg.line(left, top, left, h - bottom);
  auto zeros = [](const std::vector<double>& v) {
    return std::count_if(v.begin(), v.end(), [](double x) { return x <= 0; });
  };
  std::ostringstream caption;
  caption << "terminal max violation: success (blue) / failure (red); zero-violation trials: "
          << zeros(report.violation_success) << " / " << zeros(report.violation_failure);
  svg.text(w / 2, 20, caption.str());
  for (int i = 0; i < nbins; ++i) {
    const double x = left + i * bw;
    std::ostringstream s;
    s << "<rect class=\"bin-success\" data-count=\"" << b.success[i] << "\" x=\"" << x + 1
      << "\" y=\"" << y_of(b.success[i]) << "\" width=\"" << bw / 2 - 1 << "\" height=\""
      << (h - bottom) - y_of(b.success[i]) << "\" fill=\"#1f77b4\"/>";
    svg.raw(s.str());
    std::ostringstream f;
    f << "<rect class=\"bin-failure\" data-count=\"" << b.failure[i] << "\" x=\"" << x + bw / 2
      << "\" y=\"" << y_of(b.failure[i]) << "\" width=\"" << bw / 2 - 1 << "\" height=\""
      << (h - bottom) - y_of(b.failure[i]) << "\" fill=\"#d62728\"/>";
    svg.raw(f.str());
    if (i % 2 == 0) svg.text(x, h - bottom + 16, "1e" + std::to_string(int(b.edges[i])), "middle", 10);
  }
  svg.text(left - 8, top + 4, std::to_string(peak), "end", 10);
  svg.text(w / 2, h - 10, "log10 of terminal max violation");
  return svg.str();
}

/// Box plot (log10 scale) of terminal stationarity per labelled sample.
inline std::string stationarity_boxplot_svg(
    const std::vector<std::pair<std::string, std::vector<double>>>& series) {
  const double w = 480, h = 400, left = 60, top = 30, bottom = 50;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  auto lg = [](double v) { return std::log10(std::max(v, 1e-16)); };
  for (const auto& [name, vals] : series)
    for (double v : vals) {
      lo = std::min(lo, lg(v));
      hi = std::max(hi, lg(v));
    }
  if (!std::isfinite(lo)) lo = -1, hi = 1;
  lo = std::floor(lo);
  hi = std::ceil(hi);
  if (hi <= lo) hi = lo + 1;
  auto y_of = [&](double v) { return top + (h - top - bottom) * (hi - lg(v)) / (hi - lo); };
  detail::SvgCanvas svg(w, h);
  svg.line(left, top, left, h - bottom);
  for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); ++e) {
    const double y = top + (h - top - bottom) * (hi - e) / (hi - lo);
    svg.line(left - 4, y, left, y);
    svg.text(left - 6, y + 4, "1e" + std::to_string(e), "end", 10);
  }
  const double slot = (w - left) / std::max<std::size_t>(1, series.size());
  for (std::size_t s = 0; s < series.size(); ++s) {
    std::vector<double> v = series[s].second;
    const double cx = left + slot * (s + 0.5);
    svg.text(cx, h - bottom + 20, series[s].first);
    if (v.empty()) continue;
    std::sort(v.begin(), v.end());
    auto quantile = [&](double q) {
      const double pos = q * (v.size() - 1);
      const std::size_t i = static_cast<std::size_t>(pos);
      const double frac = pos - i;
      return i + 1 < v.size() ? v[i] * (1 - frac) + v[i + 1] * frac : v[i];
    };
    const double q1 = quantile(0.25), q2 = quantile(0.5), q3 = quantile(0.75);
    const double bw = slot * 0.4;
    std::ostringstream box;
    box << "<rect class=\"box\" data-median=\"" << format_double(q2) << "\" x=\"" << cx - bw / 2
        << "\" y=\"" << y_of(q3) << "\" width=\"" << bw << "\" height=\""
        << std::max(0.5, y_of(q1) - y_of(q3)) << "\" fill=\"#cfe2f3\" stroke=\"#000\"/>";
    svg.raw(box.str());
    svg.line(cx - bw / 2, y_of(q2), cx + bw / 2, y_of(q2), "#d62728", 2);
    svg.line(cx, y_of(v.front()), cx, y_of(q1));
    svg.line(cx, y_of(q3), cx, y_of(v.back()));
    for (double x : v) {
      std::ostringstream c;
      c << "<circle cx=\"" << cx + bw * 0.7 << "\" cy=\"" << y_of(x)
        << "\" r=\"2\" fill=\"#555\" fill-opacity=\"0.5\"/>";
      svg.raw(c.str());
    }
  }
  svg.text(w / 2, h - 10, "terminal stationarity ||grad L||_inf");
  return svg.str();
}

/// Writes trials.csv, summary.json and violations.svg into `dir`.
inline void emit_artifacts(const BenchmarkReport& report, const std::vector<TrialRecord>& records,
                           const std::filesystem::path& dir, const json& extra = json::object()) {
  ensure_directory(dir);
  write_text(dir / "trials.csv", trials_csv(records));
  json summary = {{"report", report_to_json(report)}};
  for (auto it = extra.begin(); it != extra.end(); ++it) summary[it.key()] = it.value();
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  write_text(dir / "violations.svg", violation_histogram_svg(report));
}

}  // namespace dgsqp::harness
