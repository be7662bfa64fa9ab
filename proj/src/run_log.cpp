#include "fluxobs/run_log.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace fluxobs {

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> columns{
      "t",     "theta", "theta_hat", "x1",     "x2",    "x1_hat", "x2_hat",
      "err_flux", "err_angle", "y",  "phi1",   "phi2",  "d_true", "d_hat",
      "q11",   "q12",   "q22",       "Y1",     "Y2",    "pi_norm"};
  return columns;
}

std::string format_double(double value) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

namespace {

void put(std::ostream& out, double v, bool comma = true) {
  out << format_double(v);
  if (comma) out << ',';
}

void put_opt(std::ostream& out, const std::optional<double>& v, bool comma = true) {
  if (v) out << format_double(*v);
  if (comma) out << ',';
}

std::optional<double> parse_field(const std::string& field) {
  if (field.empty()) return std::nullopt;
  double value = 0.0;
  const auto result = std::from_chars(field.data(), field.data() + field.size(), value);
  if (result.ec != std::errc() || result.ptr != field.data() + field.size()) {
    throw std::runtime_error("bad CSV number '" + field + "'");
  }
  return value;
}

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<RunRow>& rows) {
  const auto& cols = csv_columns();
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out << cols[c] << (c + 1 < cols.size() ? "," : "\n");
  }
  for (const RunRow& r : rows) {
    put(out, r.t);
    put(out, r.theta);
    put(out, r.theta_hat);
    put(out, r.x.x());
    put(out, r.x.y());
    put(out, r.x_hat.x());
    put(out, r.x_hat.y());
    put(out, r.err_flux);
    put(out, r.err_angle);
    put(out, r.y);
    put(out, r.phi.x());
    put(out, r.phi.y());
    put_opt(out, r.d_true);
    put(out, r.d_hat);
    if (r.q) {
      put(out, (*r.q)(0, 0));
      put(out, (*r.q)(0, 1));
      put(out, (*r.q)(1, 1));
    } else {
      out << ",,,";
    }
    if (r.Y) {
      put(out, r.Y->x());
      put(out, r.Y->y());
    } else {
      out << ",,";
    }
    put_opt(out, r.pi_norm, false);
    out << '\n';
  }
}

std::vector<RunRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV");
  std::vector<RunRow> rows;
  const std::size_t ncols = csv_columns().size();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != ncols) throw std::runtime_error("CSV row has wrong column count");
    auto num = [&](std::size_t c) {
      const auto v = parse_field(fields[c]);
      if (!v) throw std::runtime_error("missing required CSV field " + csv_columns()[c]);
      return *v;
    };
    RunRow r;
    r.t = num(0);
    r.theta = num(1);
    r.theta_hat = num(2);
    r.x = Vec2(num(3), num(4));
    r.x_hat = Vec2(num(5), num(6));
    r.err_flux = num(7);
    r.err_angle = num(8);
    r.y = num(9);
    r.phi = Vec2(num(10), num(11));
    r.d_true = parse_field(fields[12]);
    r.d_hat = num(13);
    if (!fields[14].empty()) {
      Mat2 q;
      q << num(14), num(15), num(15), num(16);
      r.q = q;
      r.Y = Vec2(num(17), num(18));
    }
    r.pi_norm = parse_field(fields[19]);
    rows.push_back(r);
  }
  return rows;
}

nlohmann::json summary_to_json(const RunSummary& s) {
  nlohmann::json j;
  j["settling_time_flux_5pct"] = opt(s.settling_flux_5pct);
  j["settling_time_flux_1pct"] = opt(s.settling_flux_1pct);
  j["settling_time_angle"] = opt(s.settling_angle);
  if (s.rate) {
    j["fitted_rate"] = {{"rate", s.rate->rate},
                        {"r_squared", s.rate->r_squared},
                        {"points", s.rate->points},
                        {"t_start", s.rate_window_start},
                        {"t_end", opt(s.rate_window_end)}};
  } else {
    j["fitted_rate"] = nullptr;
  }
  j["steady_state_flux_error"] = opt(s.steady_state_flux_error);
  j["final_flux_error"] = opt(s.final_flux_error);
  j["final_angle_error"] = opt(s.final_angle_error);
  if (s.pe) {
    j["pe"] = {{"window", s.pe->window},
               {"delta_hat", s.pe->delta_hat},
               {"phi_sup", s.pe->phi_sup},
               {"delta_min", s.pe->delta_min},
               {"excited", s.pe->excited}};
  } else {
    j["pe"] = nullptr;
  }
  j["q_min_after_window"] = opt(s.q_min_after_window);
  j["max_pi"] = opt(s.max_pi);
  j["max_Y"] = opt(s.max_Y);
  return j;
}

nlohmann::json run_to_json(const RunLog& log, const ScenarioConfig& config) {
  nlohmann::json j;
  j["observer"] = to_string(log.observer);
  j["gamma"] = config.gamma;
  j["a"] = config.a;
  j["alpha"] = config.alpha;
  j["rows"] = log.rows.size();
  j["aborted"] = log.aborted;
  j["fault"] = log.aborted ? nlohmann::json(log.fault) : nlohmann::json(nullptr);
  j["summary"] = summary_to_json(log.summary);
  return j;
}

}  // namespace fluxobs
