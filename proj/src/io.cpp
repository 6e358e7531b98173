#include "causalvar/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "causalvar/error.hpp"

namespace causalvar {

namespace {

// JSON has no NaN or infinity; both become null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double getNumber(const Json& j, const char* key) {
  if (!j.contains(key)) throw InvalidInput(std::string("json: missing '") + key + "'");
  if (!j.at(key).is_number()) throw InvalidInput(std::string("json: '") + key + "' must be a number");
  return j.at(key).get<double>();
}

int getInt(const Json& j, const char* key) {
  if (!j.at(key).is_number_integer()) throw InvalidInput(std::string("json: '") + key + "' must be an integer");
  return j.at(key).get<int>();
}

Eigen::MatrixXd blockFromJson(const Json& b, int d) {
  Eigen::MatrixXd a(d, d);
  if (b.is_number()) {
    if (d != 1) throw InvalidInput("json: scalar coefficient given for d > 1");
    a(0, 0) = b.get<double>();
    return a;
  }
  if (!b.is_array()) throw InvalidInput("json: coefficient block must be an array");
  if (b.size() == static_cast<std::size_t>(d) && !b.empty() && b.front().is_array()) {
    for (int r = 0; r < d; ++r) {
      const Json& row = b.at(static_cast<std::size_t>(r));
      if (!row.is_array() || row.size() != static_cast<std::size_t>(d))
        throw InvalidInput("json: coefficient rows must have d entries");
      for (int c = 0; c < d; ++c) a(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    return a;
  }
  if (b.size() != static_cast<std::size_t>(d) * d)
    throw InvalidInput("json: coefficient block must hold d*d = " + std::to_string(d * d) + " entries");
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) a(r, c) = b.at(static_cast<std::size_t>(r * d + c)).get<double>();
  return a;
}

}  // namespace

std::string formatNumber(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json toJson(const VarModel& model) {
  Json coeffs = Json::array();
  for (const Eigen::MatrixXd& a : model.coeffs()) {
    Json flat = Json::array();
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      for (Eigen::Index c = 0; c < a.cols(); ++c) flat.push_back(a(r, c));
    coeffs.push_back(flat);
  }
  return Json{{"d", model.dim()}, {"p", model.order()}, {"coeffs", coeffs},
              {"noise_variance", model.noiseVariance()}};
}

VarModel modelFromJson(const Json& j) {
  if (!j.is_object()) throw InvalidInput("json: model must be an object");
  if (!j.contains("coeffs") || !j.at("coeffs").is_array() || j.at("coeffs").empty())
    throw InvalidInput("json: model needs a non-empty 'coeffs' array");
  const Json& coeffs = j.at("coeffs");
  int d = j.contains("d") ? getInt(j, "d") : 0;
  if (d == 0) {
    const Json& first = coeffs.front();
    if (first.is_number()) d = 1;
    else if (first.is_array() && !first.empty() && first.front().is_array()) d = static_cast<int>(first.size());
    else d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(first.size()))));
  }
  if (d < 1) throw InvalidInput("json: d must be >= 1");
  if (j.contains("p") && getInt(j, "p") != static_cast<int>(coeffs.size()))
    throw InvalidInput("json: 'p' disagrees with the number of coefficient blocks");
  std::vector<Eigen::MatrixXd> blocks;
  for (const Json& b : coeffs) blocks.push_back(blockFromJson(b, d));
  const double s2 = j.contains("noise_variance") ? getNumber(j, "noise_variance") : 1.0;
  return VarModel(std::move(blocks), s2);
}

std::string toString(InterventionKind kind) {
  switch (kind) {
    case InterventionKind::atomicFixed: return "atomicFixed";
    case InterventionKind::atomicAveraged: return "atomicAveraged";
    case InterventionKind::relativeShift: return "relativeShift";
  }
  return "?";
}

std::string toString(RiskMethod method) {
  switch (method) {
    case RiskMethod::analytic: return "analytic";
    case RiskMethod::monteCarlo: return "monteCarlo";
    case RiskMethod::empiricalSample: return "empiricalSample";
  }
  return "?";
}

Json toJson(const InterventionSpec& spec) {
  Json comps = Json::array();
  for (int c : spec.components) comps.push_back(c + 1);
  Json j{{"kind", toString(spec.kind)}, {"omega", spec.omega}, {"components", comps},
         {"steps", spec.steps}};
  if (spec.kind == InterventionKind::atomicFixed) j["values"] = spec.values;
  if (spec.kind == InterventionKind::relativeShift) j["alpha"] = spec.alpha;
  return j;
}

InterventionSpec specFromJson(const Json& j) {
  if (!j.is_object()) throw InvalidInput("json: intervention must be an object");
  InterventionSpec s;
  const std::string kind = j.value("kind", std::string("atomicAveraged"));
  if (kind == "atomicFixed") s.kind = InterventionKind::atomicFixed;
  else if (kind == "atomicAveraged") s.kind = InterventionKind::atomicAveraged;
  else if (kind == "relativeShift") s.kind = InterventionKind::relativeShift;
  else throw InvalidInput("json: unknown intervention kind '" + kind + "'");
  if (j.contains("omega")) s.omega = getInt(j, "omega");
  if (j.contains("steps")) s.steps = getInt(j, "steps");
  if (!j.contains("components") || !j.at("components").is_array())
    throw InvalidInput("json: intervention needs a 'components' array");
  for (const Json& c : j.at("components")) {
    if (!c.is_number_integer()) throw InvalidInput("json: components must be integers");
    s.components.push_back(c.get<int>() - 1);
  }
  if (j.contains("values")) {
    for (const Json& v : j.at("values")) s.values.push_back(v.get<double>());
  }
  if (j.contains("alpha")) s.alpha = getNumber(j, "alpha");
  if (s.kind == InterventionKind::relativeShift && !j.contains("alpha"))
    throw InvalidInput("json: relativeShift needs 'alpha'");
  return s;
}

Json toJson(const RiskReport& r) {
  return Json{{"s_omega", number(r.sOmega)},
              {"g_do", number(r.gDo)},
              {"g_avg", number(r.gAvg)},
              {"g_shift", number(r.gShift)},
              {"diff", number(r.diff)},
              {"cross_term_diff", number(r.crossTermDiff)},
              {"noise_floor", number(r.noiseFloor)},
              {"quotient", number(r.quotient)},
              {"full_window_quotient", number(r.fullWindowQuotient)},
              {"method", toString(r.method)},
              {"omega", r.omega},
              {"component", r.component + 1},
              {"spec", toJson(r.spec)}};
}

Json toJson(const BoundReport& r) {
  Json inputs = Json::object();
  for (const auto& [k, v] : r.inputs) inputs[k] = number(v);
  return Json{{"name", toString(r.name)}, {"value", number(r.value)}, {"lhs", number(r.lhs)},
              {"holds", r.holds},          {"slack", number(r.slack)}, {"inputs", inputs}};
}

Json toJson(const FitResult& f) {
  const Json m = toJson(f.model);
  return Json{{"estimator", toString(f.estimator)},
              {"coeffs", m.at("coeffs")},
              {"noise_variance", f.model.noiseVariance()},
              {"lambda", f.lambda},
              {"mu_mix", f.muMix},
              {"cv_score", number(f.cvScore)},
              {"rank_flag", f.rankDeficient}};
}

Json readJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw InvalidInput("'" + path + "' is not valid JSON: " + e.what());
  }
}

void writePathCsv(std::ostream& out, const SamplePath& path) {
  out << 't';
  for (int i = 1; i <= path.dim(); ++i) out << ",x_" << i;
  out << '\n';
  for (int t = 0; t < path.length(); ++t) {
    out << t;
    for (int i = 0; i < path.dim(); ++i) out << ',' << formatNumber(path.values(t, i));
    out << '\n';
  }
}

void writePathCsv(const std::string& file, const SamplePath& path) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw InvalidInput("cannot write '" + file + "'");
  writePathCsv(out, path);
}

SamplePath readPathCsv(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw InvalidInput("cannot open '" + file + "'");
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("'" + file + "' is empty");
  const int d = static_cast<int>(std::count(line.begin(), line.end(), ','));
  if (d < 1 || line.rfind("t,", 0) != 0) throw InvalidInput("'" + file + "': expected header t,x_1,...");
  std::vector<double> flat;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    int cols = 0;
    while (std::getline(row, cell, ',')) {
      try {
        flat.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InvalidInput("'" + file + "' row " + std::to_string(rows + 1) + ": bad number '" + cell + "'");
      }
      ++cols;
    }
    if (cols != d) throw InvalidInput("'" + file + "' row " + std::to_string(rows + 1) + ": expected " + std::to_string(d) + " values");
    ++rows;
  }
  SamplePath p;
  p.values = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(flat.data(), rows, d);
  return p;
}

std::map<std::string, std::string> parseKeyValue(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineNo = 0;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineNo;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(source + ":" + std::to_string(lineNo) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineNo) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

std::map<std::string, std::string> readKeyValueFile(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config '" + file + "'");
  return parseKeyValue(in, file);
}

}  // namespace causalvar
