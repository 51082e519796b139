#include "mslab/laws.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace mslab {
namespace {

std::size_t ipow(std::size_t base, int exp) {
  std::size_t out = 1;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

double catalan(int k) {
  double c = 1.0;
  for (int i = 0; i < k; ++i) c = c * 2.0 * (2.0 * i + 1.0) / (i + 2.0);
  return c;
}

void require_degree(int m, const char* what) {
  if (m < 1 || m > kMaxLawDegree)
    throw InvalidInput(std::string(what) + ": degree must lie in [1, " + std::to_string(kMaxLawDegree) + "]");
}

}  // namespace

// ---------------------------------------------------------------------------
// Alphabet

Alphabet::Alphabet(std::vector<int> group_arities, int unitaries)
    : arities_(std::move(group_arities)), unitaries_(unitaries) {
  if (unitaries_ < 0) throw InvalidInput("Alphabet: negative unitary count");
  for (int r : arities_) {
    if (r < 1) throw InvalidInput("Alphabet: every group needs at least one variable");
    offsets_.push_back(variables_);
    variables_ += r;
  }
  if (symbol_count() > std::numeric_limits<Symbol>::max())
    throw InvalidInput("Alphabet: too many letters");
}

Symbol Alphabet::symbol(const Letter& l) const {
  if (l.kind == Letter::Kind::Variable) {
    if (l.group < 0 || l.group >= group_count() || l.index < 0 || l.index >= arity(l.group))
      throw InvalidInput("Alphabet: variable letter out of range");
    return static_cast<Symbol>(offsets_[static_cast<std::size_t>(l.group)] + l.index);
  }
  if (l.group < 0 || l.group >= unitaries_ || (l.exponent != 1 && l.exponent != -1))
    throw InvalidInput("Alphabet: unitary letter out of range");
  return static_cast<Symbol>(variables_ + 2 * l.group + (l.exponent == -1 ? 1 : 0));
}

Letter Alphabet::letter(Symbol s) const {
  if (s >= symbol_count()) throw InvalidInput("Alphabet: symbol out of range");
  Letter l;
  if (s < variables_) {
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), static_cast<int>(s));
    l.group = static_cast<int>(it - offsets_.begin()) - 1;
    l.index = s - offsets_[static_cast<std::size_t>(l.group)];
    return l;
  }
  l.kind = Letter::Kind::Unitary;
  l.group = (s - variables_) / 2;
  l.exponent = ((s - variables_) % 2 == 0) ? 1 : -1;
  return l;
}

int Alphabet::group_of(Symbol s) const {
  if (s >= variables_) return -1;
  return letter(s).group;
}

Symbol Alphabet::adjoint(Symbol s) const {
  if (s < variables_) return s;
  return static_cast<Symbol>(((s - variables_) % 2 == 0) ? s + 1 : s - 1);
}

std::string Alphabet::name(Symbol s) const {
  const Letter l = letter(s);
  if (l.kind == Letter::Kind::Variable)
    return "X[" + std::to_string(l.group + 1) + "," + std::to_string(l.index + 1) + "]";
  return "V[" + std::to_string(l.group + 1) + "]" + (l.exponent == -1 ? "*" : "");
}

std::string Alphabet::format(const Word& w) const {
  std::string out;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (k) out += ' ';
    out += name(w[k]);
  }
  return out;
}

Word Alphabet::parse(const std::string& text) const {
  Word w;
  std::size_t pos = 0;
  auto fail = [&text]() -> Word { throw InvalidInput("Alphabet: cannot parse word '" + text + "'"); };
  auto read_int = [&](std::size_t& p) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(text.substr(p), &used);
    } catch (const std::exception&) {
      fail();
    }
    p += used;
    return v;
  };
  while (pos < text.size()) {
    const char c = text[pos];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
      continue;
    }
    if ((c != 'X' && c != 'V') || pos + 1 >= text.size() || text[pos + 1] != '[') return fail();
    pos += 2;
    Letter l;
    if (c == 'X') {
      l.group = read_int(pos) - 1;
      if (pos >= text.size() || text[pos] != ',') return fail();
      ++pos;
      l.index = read_int(pos) - 1;
    } else {
      l.kind = Letter::Kind::Unitary;
      l.group = read_int(pos) - 1;
    }
    if (pos >= text.size() || text[pos] != ']') return fail();
    ++pos;
    if (l.kind == Letter::Kind::Unitary && pos < text.size() && text[pos] == '*') {
      l.exponent = -1;
      ++pos;
    }
    w.push_back(symbol(l));
  }
  return w;
}

Word adjoint_word(const Alphabet& alphabet, const Word& w) {
  Word out(w.rbegin(), w.rend());
  for (auto& s : out) s = alphabet.adjoint(s);
  return out;
}

// ---------------------------------------------------------------------------
// WordSpace

WordSpace::WordSpace(int symbols, int max_degree) : symbols_(symbols), max_degree_(max_degree) {
  if (symbols < 0 || max_degree < 0) throw InvalidInput("WordSpace: negative size");
  offsets_.assign(1, 0);
  std::size_t level = 1;
  for (int d = 0; d <= max_degree; ++d) {
    const std::size_t next = offsets_.back() + level;
    if (next > kMaxTableEntries)
      throw InvalidInput("WordSpace: " + std::to_string(symbols) + " letters at degree " +
                         std::to_string(max_degree) + " exceeds the moment-table size cap");
    offsets_.push_back(next);
    level *= static_cast<std::size_t>(symbols);
  }
}

std::size_t WordSpace::rank(const Word& w) const {
  const int d = static_cast<int>(w.size());
  if (d > max_degree_) throw InvalidInput("WordSpace: word degree exceeds the table degree");
  std::size_t v = 0;
  for (Symbol s : w) {
    if (s >= symbols_) throw InvalidInput("WordSpace: symbol out of range");
    v = v * static_cast<std::size_t>(symbols_) + s;
  }
  return offsets_[static_cast<std::size_t>(d)] + v;
}

int WordSpace::degree(std::size_t rank) const {
  if (rank >= size()) throw InvalidInput("WordSpace: rank out of range");
  auto it = std::upper_bound(offsets_.begin(), offsets_.end(), rank);
  return static_cast<int>(it - offsets_.begin()) - 1;
}

Word WordSpace::word(std::size_t rank) const {
  const int d = degree(rank);
  std::size_t v = rank - offsets_[static_cast<std::size_t>(d)];
  Word w(static_cast<std::size_t>(d));
  for (int k = d - 1; k >= 0; --k) {
    w[static_cast<std::size_t>(k)] = static_cast<Symbol>(v % static_cast<std::size_t>(symbols_));
    v /= static_cast<std::size_t>(symbols_);
  }
  return w;
}

// ---------------------------------------------------------------------------
// ScalarDistribution

double ScalarDistribution::moment(int k) const {
  if (k == 0) return 1.0;
  switch (kind) {
    case Kind::Semicircular:
      return (k % 2) ? 0.0 : std::pow(a, k) * catalan(k / 2);
    case Kind::TwoPoint:
      return w * std::pow(a, k) + (1.0 - w) * std::pow(b, k);
    case Kind::Projection:
      return a;
    case Kind::PointMass:
      return std::pow(a, k);
  }
  return 0.0;
}

double ScalarDistribution::norm_bound() const {
  switch (kind) {
    case Kind::Semicircular:
      return 2.0 * a;
    case Kind::TwoPoint: {
      double r = 0.0;
      if (w > 0.0) r = std::max(r, std::abs(a));
      if (w < 1.0) r = std::max(r, std::abs(b));
      return r;
    }
    case Kind::Projection:
      return 1.0;
    case Kind::PointMass:
      return std::abs(a);
  }
  return 0.0;
}

double ScalarDistribution::quantile(double u) const {
  switch (kind) {
    case Kind::Semicircular: {
      const double r = 2.0 * a;
      auto cdf = [r](double x) {
        const double y = std::clamp(x / r, -1.0, 1.0);
        return 0.5 + (y * std::sqrt(1.0 - y * y) + std::asin(y)) / std::numbers::pi;
      };
      double lo = -r, hi = r;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * r; ++it) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < u ? lo : hi) = mid;
      }
      return 0.5 * (lo + hi);
    }
    case Kind::TwoPoint: {
      double lo = a, hi = b, wlo = w;
      if (b < a) {
        lo = b;
        hi = a;
        wlo = 1.0 - w;
      }
      return u <= wlo ? lo : hi;
    }
    case Kind::Projection:
      return u <= 1.0 - a ? 0.0 : 1.0;
    case Kind::PointMass:
      return a;
  }
  return 0.0;
}

std::string ScalarDistribution::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::Semicircular:
      os << "semicircular(" << a << ")";
      break;
    case Kind::TwoPoint:
      os << "two_point(" << a << "," << b << "," << w << ")";
      break;
    case Kind::Projection:
      os << "projection(" << a << ")";
      break;
    case Kind::PointMass:
      os << "point_mass(" << a << ")";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// NCLaw

NCLaw::NCLaw(Alphabet alphabet, std::vector<std::vector<double>> rho, int max_degree, std::vector<Complex> moments)
    : alphabet_(std::move(alphabet)),
      space_(alphabet_.symbol_count(), max_degree),
      rho_(std::move(rho)),
      moments_(std::move(moments)),
      distributions_(static_cast<std::size_t>(alphabet_.group_count())) {
  if (max_degree < 1) throw InvalidInput("NCLaw: degree must be positive");
  if (moments_.size() != space_.size()) throw InvalidInput("NCLaw: moment table does not cover every word");
  if (rho_.size() != static_cast<std::size_t>(alphabet_.group_count()))
    throw InvalidInput("NCLaw: one norm-bound list per group required");
  for (int g = 0; g < alphabet_.group_count(); ++g)
    if (rho_[static_cast<std::size_t>(g)].size() != static_cast<std::size_t>(alphabet_.arity(g)))
      throw InvalidInput("NCLaw: norm bounds do not match group arity");
  moments_[0] = 1.0;
}

double NCLaw::norm_bound() const {
  double r = 0.0;
  for (const auto& g : rho_)
    for (double v : g) r = std::max(r, v);
  return r;
}

Complex NCLaw::moment(const Word& w) const {
  if (static_cast<int>(w.size()) > max_degree())
    throw InvalidInput("NCLaw: word degree " + std::to_string(w.size()) + " exceeds table degree " +
                       std::to_string(max_degree()));
  return moments_[space_.rank(w)];
}

void NCLaw::set_distribution(int group, std::optional<ScalarDistribution> d) {
  if (d && alphabet_.arity(group) != 1) throw InvalidInput("NCLaw: spectral distributions need single-variable groups");
  distributions_.at(static_cast<std::size_t>(group)) = d;
}

// ---------------------------------------------------------------------------
// Empirical laws

WordTraceEvaluator::WordTraceEvaluator(std::vector<CMatrix> mats, int max_degree)
    : half_((max_degree + 1) / 2),
      space_(static_cast<int>(mats.size()), max_degree),
      half_space_(static_cast<int>(mats.size()), (max_degree + 1) / 2) {
  if (mats.empty()) throw InvalidInput("WordTraceEvaluator: no matrices");
  n_ = static_cast<int>(mats.front().rows());
  for (const auto& m : mats)
    if (m.rows() != n_ || m.cols() != n_) throw InvalidInput("WordTraceEvaluator: size mismatch");
  const std::size_t a = mats.size();
  products_.resize(half_space_.size());
  products_[0] = CMatrix::Identity(n_, n_);
  for (int d = 1; d <= half_; ++d) {
    for (std::size_t v = 0; v < half_space_.count(d); ++v) {
      const std::size_t prefix = half_space_.offset(d - 1) + v / a;
      products_[half_space_.offset(d) + v] = (d == 1) ? mats[v] : CMatrix(products_[prefix] * mats[v % a]);
    }
  }
}

Complex WordTraceEvaluator::trace_at(std::size_t rank) const {
  const int d = space_.degree(rank);
  if (d == 0) return 1.0;
  const int left_len = (d + 1) / 2;
  const int right_len = d - left_len;
  const std::size_t v = rank - space_.offset(d);
  const std::size_t split = ipow(static_cast<std::size_t>(space_.symbols()), right_len);
  const CMatrix& left = products_[half_space_.offset(left_len) + v / split];
  if (right_len == 0) return left.trace() / static_cast<double>(n_);
  const CMatrix& right = products_[half_space_.offset(right_len) + v % split];
  return left.cwiseProduct(right.transpose()).sum() / static_cast<double>(n_);
}

std::vector<CMatrix> symbol_matrices(const std::vector<HermitianTuple>& tuples, const UnitaryTuple* unitaries) {
  std::vector<CMatrix> out;
  int n = -1;
  for (const auto& t : tuples) {
    if (n >= 0 && t.size() != n) throw InvalidInput("symbol_matrices: groups of different sizes");
    n = t.size();
    for (const auto& m : t.matrices()) out.push_back(m.matrix());
  }
  if (unitaries) {
    if (n >= 0 && unitaries->count() > 0 && unitaries->size() != n)
      throw InvalidInput("symbol_matrices: unitaries and variables differ in size");
    for (const auto& u : unitaries->unitaries()) {
      out.push_back(u.matrix());
      out.push_back(u.matrix().adjoint());
    }
  }
  return out;
}

namespace {

NCLaw empirical_impl(const std::vector<HermitianTuple>& tuples, const UnitaryTuple* unitaries, int m) {
  require_degree(m, "empirical_law");
  std::vector<int> arities;
  std::vector<std::vector<double>> rho;
  for (const auto& t : tuples) {
    arities.push_back(t.arity());
    std::vector<double> r;
    for (const auto& mat : t.matrices()) r.push_back(op_norm(mat));
    rho.push_back(std::move(r));
  }
  Alphabet alphabet(std::move(arities), unitaries ? unitaries->count() : 0);
  WordTraceEvaluator eval(symbol_matrices(tuples, unitaries), m);
  std::vector<Complex> moments(eval.space().size());
  for (std::size_t k = 0; k < moments.size(); ++k) moments[k] = eval.trace_at(k);
  NCLaw law(std::move(alphabet), std::move(rho), m, std::move(moments));
  law.set_label("empirical");
  return law;
}

}  // namespace

NCLaw empirical_law(const std::vector<HermitianTuple>& tuples, int m) {
  if (tuples.empty()) throw InvalidInput("empirical_law: no groups");
  return empirical_impl(tuples, nullptr, m);
}

NCLaw empirical_law(const std::vector<HermitianTuple>& tuples, const UnitaryTuple& unitaries, int m) {
  if (tuples.empty() && unitaries.count() == 0) throw InvalidInput("empirical_law: empty alphabet");
  return empirical_impl(tuples, &unitaries, m);
}

// ---------------------------------------------------------------------------
// Free products

FreeProductEvaluator::FreeProductEvaluator(std::vector<NCLaw> components) : components_(std::move(components)) {
  if (components_.empty()) throw InvalidInput("free product: no components");
  std::vector<int> arities;
  int unitaries = 0;
  for (const auto& c : components_) {
    for (int r : c.alphabet().arities()) arities.push_back(r);
    unitaries += c.alphabet().unitary_count();
  }
  alphabet_ = Alphabet(std::move(arities), unitaries);
  component_of_.assign(static_cast<std::size_t>(alphabet_.symbol_count()), 0);
  local_of_.assign(static_cast<std::size_t>(alphabet_.symbol_count()), 0);
  int var = 0;
  int uni = 0;
  for (int c = 0; c < static_cast<int>(components_.size()); ++c) {
    const Alphabet& local = components_[static_cast<std::size_t>(c)].alphabet();
    for (int s = 0; s < local.variable_count(); ++s, ++var) {
      component_of_[static_cast<std::size_t>(var)] = c;
      local_of_[static_cast<std::size_t>(var)] = static_cast<Symbol>(s);
    }
    for (int k = 0; k < local.unitary_count(); ++k, ++uni) {
      for (int e = 0; e < 2; ++e) {
        const auto global = static_cast<std::size_t>(alphabet_.variable_count() + 2 * uni + e);
        component_of_[global] = c;
        local_of_[global] = static_cast<Symbol>(local.variable_count() + 2 * k + e);
      }
    }
  }
}

Complex FreeProductEvaluator::marginal(const Block& b) const {
  return components_[static_cast<std::size_t>(b.component)].moment(b.local);
}

Complex FreeProductEvaluator::moment(const Word& w) {
  if (w.empty()) return 1.0;
  std::string key(w.begin(), w.end());
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;

  std::vector<Block> blocks;
  Word globals;  // parallel global words, concatenated per block
  std::vector<Word> global_blocks;
  for (Symbol s : w) {
    if (s >= alphabet_.symbol_count()) throw InvalidInput("free product: symbol out of range");
    const int c = component_of_[s];
    if (blocks.empty() || blocks.back().component != c) {
      blocks.push_back({c, {}});
      global_blocks.emplace_back();
    }
    blocks.back().local.push_back(local_of_[s]);
    global_blocks.back().push_back(s);
  }
  // Traciality: fold the last block onto the first when they share a component.
  if (blocks.size() >= 3 && blocks.front().component == blocks.back().component) {
    Block merged{blocks.front().component, blocks.back().local};
    merged.local.insert(merged.local.end(), blocks.front().local.begin(), blocks.front().local.end());
    Word merged_global = global_blocks.back();
    merged_global.insert(merged_global.end(), global_blocks.front().begin(), global_blocks.front().end());
    blocks.front() = std::move(merged);
    global_blocks.front() = std::move(merged_global);
    blocks.pop_back();
    global_blocks.pop_back();
  }

  Complex result;
  if (blocks.size() == 1) {
    result = marginal(blocks.front());
  } else {
    const std::size_t k = blocks.size();
    std::vector<Complex> tau(k);
    for (std::size_t j = 0; j < k; ++j) tau[j] = marginal(blocks[j]);
    Complex sum = 0.0;
    const std::uint32_t full = (std::uint32_t{1} << k) - 1;
    for (std::uint32_t mask = 0; mask < full; ++mask) {
      Complex coeff = 1.0;
      int outside = 0;
      for (std::size_t j = 0; j < k; ++j) {
        if (!(mask >> j & 1u)) {
          coeff *= tau[j];
          ++outside;
        }
      }
      if (coeff == Complex(0.0)) continue;
      if (outside % 2) coeff = -coeff;
      Word sub;
      for (std::size_t j = 0; j < k; ++j)
        if (mask >> j & 1u) sub.insert(sub.end(), global_blocks[j].begin(), global_blocks[j].end());
      sum += coeff * moment(sub);
    }
    result = -sum;
  }
  memo_.emplace(std::move(key), result);
  return result;
}

NCLaw restrict_degree(const NCLaw& law, int m) {
  if (m < 1 || m > law.max_degree()) throw InvalidInput("restrict_degree: degree out of range");
  std::vector<Complex> moments(law.moments().begin(),
                               law.moments().begin() + static_cast<std::ptrdiff_t>(law.space().offset(m + 1)));
  NCLaw out(law.alphabet(), law.rho(), m, std::move(moments));
  for (int g = 0; g < law.alphabet().group_count(); ++g) out.set_distribution(g, law.distribution(g));
  out.set_label(law.label());
  return out;
}

NCLaw free_product_law(const std::vector<NCLaw>& marginals, int m) {
  require_degree(m, "free_product_law");
  if (marginals.empty()) throw InvalidInput("free_product_law: no marginals");
  for (const auto& mg : marginals)
    if (mg.max_degree() < m)
      throw InvalidInput("free_product_law: marginal covers degree " + std::to_string(mg.max_degree()) +
                         " < requested " + std::to_string(m));
  if (marginals.size() == 1) return restrict_degree(marginals.front(), m);

  FreeProductEvaluator eval(marginals);
  const WordSpace space(eval.alphabet().symbol_count(), m);
  std::vector<Complex> moments(space.size());
  for (std::size_t k = 0; k < space.size(); ++k) moments[k] = eval.moment(space.word(k));

  std::vector<std::vector<double>> rho;
  std::vector<std::optional<ScalarDistribution>> dists;
  std::string label = "free(";
  for (std::size_t c = 0; c < marginals.size(); ++c) {
    for (int g = 0; g < marginals[c].alphabet().group_count(); ++g) {
      rho.push_back(marginals[c].rho()[static_cast<std::size_t>(g)]);
      dists.push_back(marginals[c].distribution(g));
    }
    label += (c ? "," : "") + marginals[c].label();
  }
  NCLaw out(eval.alphabet(), std::move(rho), m, std::move(moments));
  for (int g = 0; g < out.alphabet().group_count(); ++g) out.set_distribution(g, dists[static_cast<std::size_t>(g)]);
  out.set_label(label + ")");
  return out;
}

// ---------------------------------------------------------------------------
// Standard laws

NCLaw scalar_law(const ScalarDistribution& d, int m) {
  require_degree(m, "standard_law");
  Alphabet alphabet({1}, 0);
  const WordSpace space(1, m);
  std::vector<Complex> moments(space.size());
  for (int k = 0; k <= m; ++k) moments[space.offset(k)] = d.moment(k);
  NCLaw law(std::move(alphabet), {{d.norm_bound()}}, m, std::move(moments));
  law.set_distribution(0, d);
  law.set_label(d.describe());
  return law;
}

NCLaw semicircular_law(double sigma, int m) {
  if (!(sigma > 0.0)) throw InvalidInput("semicircular: sigma must be positive");
  return scalar_law({ScalarDistribution::Kind::Semicircular, sigma, 0.0, 1.0}, m);
}

NCLaw two_point_law(double a, double b, double weight, int m) {
  if (!(weight >= 0.0 && weight <= 1.0) || !std::isfinite(a) || !std::isfinite(b))
    throw InvalidInput("two_point: weight must lie in [0, 1] and atoms must be finite");
  return scalar_law({ScalarDistribution::Kind::TwoPoint, a, b, weight}, m);
}

NCLaw projection_law(double alpha, int m) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("projection: alpha must lie in (0, 1)");
  return scalar_law({ScalarDistribution::Kind::Projection, alpha, 0.0, 1.0}, m);
}

NCLaw point_mass_law(double c, int m) {
  if (!std::isfinite(c)) throw InvalidInput("point_mass: location must be finite");
  return scalar_law({ScalarDistribution::Kind::PointMass, c, 0.0, 1.0}, m);
}

NCLaw unitary_law(const std::vector<double>& power_moments, int m) {
  if (m < 1 || m > 3 * kMaxLawDegree) throw InvalidInput("unitary_law: degree out of range");
  if (power_moments.size() < static_cast<std::size_t>(m) + 1)
    throw InvalidInput("unitary_law: not enough power moments");
  Alphabet alphabet({}, 1);
  const WordSpace space(2, m);
  std::vector<Complex> moments(space.size());
  for (std::size_t k = 0; k < space.size(); ++k) {
    int power = 0;
    for (Symbol s : space.word(k)) power += (s == 0) ? 1 : -1;
    moments[k] = power_moments[static_cast<std::size_t>(std::abs(power))];
  }
  return NCLaw(std::move(alphabet), {}, m, std::move(moments));
}

double free_unitary_bm_moment(double t, int k) {
  k = std::abs(k);
  if (k == 0) return 1.0;
  double sum = 0.0;
  for (int j = 0; j < k; ++j) {
    const double log_binom = std::lgamma(k + 1.0) - std::lgamma(j + 2.0) - std::lgamma(k - j);
    const double term = std::pow(k, j - 1) * std::exp(log_binom - std::lgamma(j + 1.0)) * std::pow(t, j);
    sum += (j % 2 ? -term : term);
  }
  return std::exp(-k * t / 2.0) * sum;
}

NCLaw free_unitary_bm_law(double t, int m) {
  if (!(t >= 0.0)) throw InvalidInput("free_unitary_bm: time must be nonnegative");
  std::vector<double> powers(static_cast<std::size_t>(m) + 1);
  for (int k = 0; k <= m; ++k) powers[static_cast<std::size_t>(k)] = free_unitary_bm_moment(t, k);
  NCLaw law = unitary_law(powers, m);
  std::ostringstream os;
  os << "free_unitary_bm(" << t << ")";
  law.set_label(os.str());
  return law;
}

NCLaw conjugated_presence_law(const std::vector<NCLaw>& group_marginals, const std::vector<NCLaw>& unitary_laws, int m) {
  require_degree(m, "conjugated_presence_law");
  if (3 * m > kMaxLawDegree) throw InvalidInput("conjugated_presence_law: degree must satisfy 3m <= 12");
  int groups = 0;
  for (const auto& g : group_marginals) {
    if (g.alphabet().unitary_count() != 0) throw InvalidInput("conjugated_presence_law: marginals carry unitaries");
    groups += g.alphabet().group_count();
  }
  if (static_cast<int>(unitary_laws.size()) != groups)
    throw InvalidInput("conjugated_presence_law: need one unitary law per group");
  for (const auto& u : unitary_laws)
    if (u.alphabet().group_count() != 0 || u.alphabet().unitary_count() != 1)
      throw InvalidInput("conjugated_presence_law: unitary laws must have a single unitary generator");

  std::vector<NCLaw> components = group_marginals;
  components.insert(components.end(), unitary_laws.begin(), unitary_laws.end());
  FreeProductEvaluator eval(std::move(components));
  const Alphabet& alphabet = eval.alphabet();
  const WordSpace space(alphabet.symbol_count(), m);

  std::vector<Complex> moments(space.size());
  for (std::size_t k = 0; k < space.size(); ++k) {
    Word expanded;
    auto push = [&](Symbol s) {
      if (!expanded.empty() && alphabet.group_of(s) < 0 && expanded.back() == alphabet.adjoint(s))
        expanded.pop_back();
      else
        expanded.push_back(s);
    };
    for (Symbol s : space.word(k)) {
      const int g = alphabet.group_of(s);
      if (g < 0) {
        push(s);
        continue;
      }
      const Letter v{Letter::Kind::Unitary, g, 0, 1};
      push(alphabet.symbol(v));
      push(s);
      push(alphabet.adjoint(alphabet.symbol(v)));
    }
    moments[k] = eval.moment(expanded);
  }

  std::vector<std::vector<double>> rho;
  std::vector<std::optional<ScalarDistribution>> dists;
  for (const auto& g : group_marginals)
    for (int i = 0; i < g.alphabet().group_count(); ++i) {
      rho.push_back(g.rho()[static_cast<std::size_t>(i)]);
      dists.push_back(g.distribution(i));
    }
  NCLaw out(alphabet, std::move(rho), m, std::move(moments));
  for (int g = 0; g < groups; ++g) out.set_distribution(g, dists[static_cast<std::size_t>(g)]);
  out.set_label("conjugated_presence");
  return out;
}

NCLaw standard_law(const std::string& spec, int m) {
  const auto open = spec.find('(');
  const auto close = spec.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw InvalidInput("standard_law: cannot parse '" + spec + "'");
  std::string name = spec.substr(0, open);
  name.erase(std::remove_if(name.begin(), name.end(), [](unsigned char c) { return std::isspace(c); }), name.end());
  std::vector<double> args;
  std::stringstream ss(spec.substr(open + 1, close - open - 1));
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      args.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw InvalidInput("standard_law: bad argument '" + item + "' in '" + spec + "'");
    }
  }
  auto want = [&](std::size_t n) {
    if (args.size() != n) throw InvalidInput("standard_law: '" + name + "' takes " + std::to_string(n) + " arguments");
  };
  if (name == "semicircular" || name == "semicircle") {
    want(1);
    return semicircular_law(args[0], m);
  }
  if (name == "two_point") {
    want(3);
    return two_point_law(args[0], args[1], args[2], m);
  }
  if (name == "projection") {
    want(1);
    return projection_law(args[0], m);
  }
  if (name == "point_mass") {
    want(1);
    return point_mass_law(args[0], m);
  }
  if (name == "free_unitary_bm") {
    want(1);
    return free_unitary_bm_law(args[0], m);
  }
  throw InvalidInput("standard_law: unknown law '" + name + "'");
}

// ---------------------------------------------------------------------------
// Comparison and restriction

LawDeviation law_deviation(const NCLaw& a, const NCLaw& b, int m) {
  if (!(a.alphabet() == b.alphabet())) throw InvalidInput("law_deviation: alphabets differ");
  if (m < 1 || m > a.max_degree() || m > b.max_degree()) throw InvalidInput("law_deviation: degree not covered");
  LawDeviation out;
  out.max_deviation = -1.0;
  std::size_t worst = a.space().offset(1);
  for (std::size_t k = a.space().offset(1); k < a.space().offset(m + 1); ++k) {
    const double dev = std::abs(a.moment_at(k) - b.moment_at(k));
    if (dev > out.max_deviation) {
      out.max_deviation = dev;
      worst = k;
    }
  }
  out.worst_word = a.space().word(worst);
  return out;
}

NCLaw restrict_groups(const NCLaw& law, const std::vector<int>& groups, bool keep_unitaries) {
  const Alphabet& old = law.alphabet();
  std::vector<int> arities;
  std::vector<std::vector<double>> rho;
  std::vector<Symbol> map;  // new symbol -> old symbol
  std::vector<bool> seen(static_cast<std::size_t>(old.group_count()), false);
  for (int g : groups) {
    if (g < 0 || g >= old.group_count() || seen[static_cast<std::size_t>(g)])
      throw InvalidInput("restrict_groups: bad group index");
    seen[static_cast<std::size_t>(g)] = true;
    arities.push_back(old.arity(g));
    rho.push_back(law.rho()[static_cast<std::size_t>(g)]);
    for (int j = 0; j < old.arity(g); ++j) map.push_back(static_cast<Symbol>(old.variable_symbol(g, j)));
  }
  const int unitaries = keep_unitaries ? old.unitary_count() : 0;
  for (int k = 0; k < unitaries; ++k) {
    map.push_back(static_cast<Symbol>(old.variable_count() + 2 * k));
    map.push_back(static_cast<Symbol>(old.variable_count() + 2 * k + 1));
  }
  if (map.empty()) throw InvalidInput("restrict_groups: empty restriction");
  Alphabet alphabet(std::move(arities), unitaries);
  const WordSpace space(alphabet.symbol_count(), law.max_degree());
  std::vector<Complex> moments(space.size());
  for (std::size_t k = 0; k < space.size(); ++k) {
    Word w = space.word(k);
    for (auto& s : w) s = map[s];
    moments[k] = law.moment(w);
  }
  NCLaw out(std::move(alphabet), std::move(rho), law.max_degree(), std::move(moments));
  for (std::size_t i = 0; i < groups.size(); ++i)
    out.set_distribution(static_cast<int>(i), law.distribution(groups[i]));
  out.set_label(law.label());
  return out;
}

LawInvariantReport check_law_invariants(const NCLaw& law) {
  LawInvariantReport r;
  const Alphabet& alphabet = law.alphabet();
  for (std::size_t k = 1; k < law.space().size(); ++k) {
    const Word w = law.space().word(k);
    const Complex tau = law.moment_at(k);
    r.adjoint_defect = std::max(r.adjoint_defect, std::abs(law.moment(adjoint_word(alphabet, w)) - std::conj(tau)));
    Word rotated(w.begin() + 1, w.end());
    rotated.push_back(w.front());
    r.cyclic_defect = std::max(r.cyclic_defect, std::abs(law.moment(rotated) - tau));
    double bound = 1.0;
    for (Symbol s : w) {
      const Letter l = alphabet.letter(s);
      if (l.kind == Letter::Kind::Variable) bound *= law.rho(l.group, l.index);
    }
    r.bound_excess = std::max(r.bound_excess, std::abs(tau) - bound);
  }
  return r;
}

}  // namespace mslab
