#include "medlearn/experiments.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace medlearn {

namespace {

const char* to_string(RunDecision decision) {
  switch (decision) {
    case RunDecision::undecided: return "undecided";
    case RunDecision::accepted: return "accepted";
    case RunDecision::rejected: return "rejected";
  }
  return "?";
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

}  // namespace

void write_replication_csv(const ReplicationReport& report, const std::string& path) {
  auto out = open_out(path);
  out << "rep,seed,scenario,decision,chosen_k,leaf_count,p_leaf,n_covariates,covariates,"
         "selected_leaf,region_size,region_lower,truth_region_size,"
         "sel_tte,sel_ite,sel_med_prop,sel_p_med,truth_tte,truth_ite,truth_med_prop\n";
  for (const auto& r : report.records) {
    out << r.rep << ',' << r.seed << ',' << to_string(report.scenario.id) << ','
        << to_string(r.decision) << ',' << r.chosen_k << ',' << r.leaf_count << ','
        << format_double(r.p_leaf) << ',' << r.covariates.size() << ',';
    for (size_t i = 0; i < r.covariates.size(); ++i) out << (i ? "|" : "") << r.covariates[i];
    out << ',' << r.selected_leaf << ',' << r.region_size << ',';
    bool first = true;
    for (const auto& [name, lower] : r.region_lower) {
      out << (first ? "" : "|") << name << '=' << format_double(lower);
      first = false;
    }
    out << ',' << r.truth_region_size << ',';
    if (r.has_selected_mediation) {
      const auto& m = r.selected_mediation;
      out << format_double(m.tte) << ',' << format_double(m.ite) << ','
          << (m.med_prop_defined ? format_double(m.med_prop) : "") << ','
          << format_double(m.p_med);
    } else {
      out << ",,,";
    }
    out << ',';
    if (r.has_truth_mediation) {
      const auto& m = r.truth_mediation;
      out << format_double(m.tte) << ',' << format_double(m.ite) << ','
          << (m.med_prop_defined ? format_double(m.med_prop) : "");
    } else {
      out << ",,";
    }
    out << '\n';
  }
}

void write_hit_table_csv(const HitCounts& hits, int replications, const std::string& path) {
  auto out = open_out(path);
  out << "metric,count,replications\n";
  out << "x1," << hits.x1 << ',' << replications << '\n';
  out << "x2," << hits.x2 << ',' << replications << '\n';
  out << "x1_and_x2," << hits.both << ',' << replications << '\n';
}

void write_covariate_distribution_csv(const std::array<int, 6>& bins, const std::string& path) {
  auto out = open_out(path);
  out << "n_covariates,count\n";
  for (size_t b = 0; b < bins.size(); ++b) {
    out << (b == 5 ? ">=5" : std::to_string(b)) << ',' << bins[b] << '\n';
  }
}

void write_ecdf_csv(const std::vector<std::pair<double, double>>& curve, const std::string& path) {
  auto out = open_out(path);
  out << "p,F\n";
  for (const auto& [p, f] : curve) out << format_double(p) << ',' << format_double(f) << '\n';
}

void write_region_comparison_csv(const RegionComparison& cmp, const std::string& path) {
  auto out = open_out(path);
  out << "region,count,n_mean,n_sd,med_prop_mean,med_prop_sd\n";
  out << "truth," << cmp.truth_count << ',' << format_double(cmp.truth_n_mean) << ','
      << format_double(cmp.truth_n_sd) << ',' << format_double(cmp.truth_med_mean) << ','
      << format_double(cmp.truth_med_sd) << '\n';
  out << "selected," << cmp.selected_count << ',' << format_double(cmp.selected_n_mean) << ','
      << format_double(cmp.selected_n_sd) << ',' << format_double(cmp.selected_med_mean) << ','
      << format_double(cmp.selected_med_sd) << '\n';
}

void write_surface_csv(const std::vector<SurfacePoint>& surface, const std::string& path) {
  auto out = open_out(path);
  out << "cov1,cov2,mean_tau\n";
  for (const auto& point : surface) {
    out << format_double(point.cov1) << ',' << format_double(point.cov2) << ','
        << format_double(point.mean_tau) << '\n';
  }
}

void write_ecdf_svg(
    const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>& curves,
    const std::string& title, const std::string& path) {
  constexpr int width = 640, height = 480;
  constexpr int left = 60, right = 610, top = 40, bottom = 430;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                 "#ff7f0e", "#8c564b", "#17becf"};

  auto sx = [&](double p) { return left + p * (right - left); };
  auto sy = [&](double f) { return bottom - f * (bottom - top); };

  auto out = open_out(path);
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
      << "' viewBox='0 0 " << width << ' ' << height << "'>\n";
  out << "<rect width='" << width << "' height='" << height << "' fill='white'/>\n";
  out << "<text x='" << (width / 2) << "' y='24' text-anchor='middle' font-size='16'>" << title
      << "</text>\n";

  // Axes with ticks every 0.2.
  out << "<line x1='" << left << "' y1='" << bottom << "' x2='" << right << "' y2='" << bottom
      << "' stroke='black'/>\n";
  out << "<line x1='" << left << "' y1='" << bottom << "' x2='" << left << "' y2='" << top
      << "' stroke='black'/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double v = t / 5.0;
    out << "<line x1='" << sx(v) << "' y1='" << bottom << "' x2='" << sx(v) << "' y2='"
        << bottom + 5 << "' stroke='black'/>\n";
    out << "<text x='" << sx(v) << "' y='" << bottom + 20 << "' text-anchor='middle' font-size='11'>"
        << v << "</text>\n";
    out << "<line x1='" << left - 5 << "' y1='" << sy(v) << "' x2='" << left << "' y2='" << sy(v)
        << "' stroke='black'/>\n";
    out << "<text x='" << left - 10 << "' y='" << sy(v) + 4 << "' text-anchor='end' font-size='11'>"
        << v << "</text>\n";
  }

  for (size_t c = 0; c < curves.size(); ++c) {
    const auto& [label, curve] = curves[c];
    const char* color = colors[c % (sizeof(colors) / sizeof(colors[0]))];
    std::ostringstream pts;
    double prev_f = 0.0;
    pts << sx(0) << ',' << sy(0) << ' ';
    for (const auto& [p, f] : curve) {
      pts << sx(p) << ',' << sy(prev_f) << ' ';  // step function
      pts << sx(p) << ',' << sy(f) << ' ';
      prev_f = f;
    }
    pts << sx(1) << ',' << sy(prev_f);
    out << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='"
        << pts.str() << "'/>\n";
    out << "<text x='" << right - 120 << "' y='" << top + 18 * (c + 1) << "' font-size='12' fill='"
        << color << "'>" << label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace medlearn
