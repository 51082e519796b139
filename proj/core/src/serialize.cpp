#include "mslab/serialize.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "mslab/error.hpp"

namespace mslab {

Json number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

namespace {

double read_number(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw InvalidInput("expected a number, got " + j.dump());
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InvalidInput(std::string("missing JSON field '") + key + "'");
  return j.at(key);
}

}  // namespace

Json matrix_to_json(const CMatrix& a) {
  Json re = Json::array(), im = Json::array();
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    Json rr = Json::array(), ii = Json::array();
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      rr.push_back(a(r, c).real());
      ii.push_back(a(r, c).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ii));
  }
  return {{"n", a.rows()}, {"re", std::move(re)}, {"im", std::move(im)}};
}

CMatrix matrix_from_json(const Json& j) {
  const int n = field(j, "n").get<int>();
  if (n < 1) throw InvalidInput("matrix JSON: n must be positive");
  const Json& re = field(j, "re");
  const Json& im = field(j, "im");
  if (!re.is_array() || !im.is_array() || static_cast<int>(re.size()) != n || static_cast<int>(im.size()) != n)
    throw InvalidInput("matrix JSON: re/im must have n rows");
  CMatrix a(n, n);
  for (int r = 0; r < n; ++r) {
    if (static_cast<int>(re[static_cast<std::size_t>(r)].size()) != n ||
        static_cast<int>(im[static_cast<std::size_t>(r)].size()) != n)
      throw InvalidInput("matrix JSON: row " + std::to_string(r) + " has the wrong length");
    for (int c = 0; c < n; ++c)
      a(r, c) = Complex(re[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>(),
                        im[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>());
  }
  return a;
}

HermitianMatrix hermitian_from_json(const Json& j) { return HermitianMatrix(matrix_from_json(j)); }
UnitaryMatrix unitary_from_json(const Json& j) { return UnitaryMatrix(matrix_from_json(j)); }

Json base_to_json(const std::vector<HermitianTuple>& base) {
  Json groups = Json::array();
  for (const auto& t : base) {
    Json g = Json::array();
    for (const auto& a : t.matrices()) g.push_back(matrix_to_json(a.matrix()));
    groups.push_back(std::move(g));
  }
  return {{"groups", std::move(groups)}};
}

std::vector<HermitianTuple> base_from_json(const Json& j) {
  const Json& groups = field(j, "groups");
  if (!groups.is_array() || groups.empty()) throw InvalidInput("base JSON: 'groups' must be a nonempty array");
  std::vector<HermitianTuple> out;
  for (const auto& g : groups) {
    std::vector<HermitianMatrix> mats;
    for (const auto& m : g) mats.push_back(hermitian_from_json(m));
    out.emplace_back(std::move(mats));
  }
  return out;
}

Json law_to_json(const NCLaw& law) {
  const Alphabet& al = law.alphabet();
  Json groups = Json::array();
  for (int g = 0; g < al.group_count(); ++g) {
    Json rho = Json::array();
    for (double r : law.rho()[static_cast<std::size_t>(g)]) rho.push_back(r);
    groups.push_back({{"r", al.arity(g)}, {"rho", std::move(rho)}});
  }
  Json moments = Json::array();
  const WordSpace& space = law.space();
  for (std::size_t k = 1; k < space.size(); ++k) {
    const Complex z = law.moment_at(k);
    moments.push_back({{"word", al.format(space.word(k))}, {"re", z.real()}, {"im", z.imag()}});
  }
  return {{"groups", std::move(groups)},
          {"unitaries", al.unitary_count()},
          {"max_degree", law.max_degree()},
          {"label", law.label()},
          {"moments", std::move(moments)}};
}

NCLaw law_from_json(const Json& j) {
  std::vector<int> arities;
  std::vector<std::vector<double>> rho;
  for (const auto& g : field(j, "groups")) {
    arities.push_back(field(g, "r").get<int>());
    std::vector<double> r;
    for (const auto& x : field(g, "rho")) r.push_back(read_number(x));
    rho.push_back(std::move(r));
  }
  const int unitaries = j.value("unitaries", 0);
  const int m = field(j, "max_degree").get<int>();
  if (m < 1 || m > kMaxLawDegree)
    throw InvalidInput("law JSON: max_degree " + std::to_string(m) + " outside 1.." + std::to_string(kMaxLawDegree));
  Alphabet al(arities, unitaries);
  WordSpace space(al.symbol_count(), m);
  std::vector<Complex> moments(space.size(), Complex(0.0, 0.0));
  std::vector<bool> seen(space.size(), false);
  moments[0] = 1.0;
  seen[0] = true;
  for (const auto& e : field(j, "moments")) {
    const Word w = al.parse(field(e, "word").get<std::string>());
    if (static_cast<int>(w.size()) > m) continue;
    const std::size_t k = space.rank(w);
    moments[k] = Complex(read_number(field(e, "re")), e.contains("im") ? read_number(e.at("im")) : 0.0);
    seen[k] = true;
  }
  for (std::size_t k = 0; k < seen.size(); ++k)
    if (!seen[k]) throw InvalidInput("law JSON: missing moment for word " + al.format(space.word(k)));
  NCLaw law(al, std::move(rho), m, std::move(moments));
  law.set_label(j.value("label", std::string("file")));
  return law;
}

Json membership_to_json(const MembershipReport& report, const Alphabet& alphabet) {
  Json violations = Json::array();
  for (const auto& v : report.norm_violations)
    violations.push_back({{"group", v.group + 1}, {"variable", v.index + 1}, {"op_norm", number(v.norm)}});
  Json j{{"member", report.member},
         {"max_deviation", number(report.max_deviation)},
         {"norm_violations", std::move(violations)},
         {"slack_consumed", report.slack_consumed},
         {"early_exit", report.early_exit}};
  j["worst_word"] = report.worst_word ? Json(alphabet.format(*report.worst_word)) : Json(nullptr);
  return j;
}

Json volume_to_json(const VolumeEstimate& e) {
  Json j{{"hits", e.hits},
         {"samples", e.samples},
         {"p_hat", number(e.p_hat)},
         {"stderr", number(e.std_error)},
         {"log_measure", number(e.log_measure)},
         {"log_per_N2", number(e.log_measure_per_N2)},
         {"p_upper95", number(e.p_upper95)}};
  if (e.log_reference != 0.0) j["log_reference"] = number(e.log_reference);
  if (e.forced_zero) j["forced_zero"] = true;
  if (!e.warnings.empty()) j["warnings"] = e.warnings;
  return j;
}

Json fubini_to_json(const FubiniRecord& r) {
  Json fractions = Json::array(), fractions_se = Json::array();
  for (double f : r.group_fraction) fractions.push_back(number(f));
  for (double f : r.group_fraction_se) fractions_se.push_back(number(f));
  return {{"lhs", number(r.lhs)},
          {"lhs_se", number(r.lhs_se)},
          {"lhs_hits", r.lhs_hits},
          {"rhs", number(r.rhs)},
          {"rhs_se", number(r.rhs_se)},
          {"group_fraction", std::move(fractions)},
          {"group_fraction_se", std::move(fractions_se)},
          {"inner_mean", number(r.inner_mean)},
          {"inner_se", number(r.inner_se)},
          {"z", number(r.z)},
          {"outer", r.outer},
          {"inner", r.inner}};
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace mslab
