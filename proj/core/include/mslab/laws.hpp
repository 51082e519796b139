#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mslab/linalg.hpp"

namespace mslab {

/// Degree cap for moment tables and free-product computations.
inline constexpr int kMaxLawDegree = 12;
/// Largest number of words a dense moment table may hold.
inline constexpr std::size_t kMaxTableEntries = std::size_t{1} << 24;

/// One letter of a word: a self-adjoint variable X[i,j] or a unitary V[k] / V[k]*.
/// Indices are zero-based here and one-based in text.
struct Letter {
  enum class Kind : std::uint8_t { Variable, Unitary };
  Kind kind = Kind::Variable;
  int group = 0;     // variable: group i; unitary: generator k
  int index = 0;     // variable: j within the group
  int exponent = 1;  // unitary: +1 or -1

  bool operator==(const Letter&) const = default;
};

/// Canonical letter encoding. Symbols are ordered by (group, variable) and then
/// V[1], V[1]*, V[2], V[2]*, ... so that symbol order gives the deterministic
/// word enumeration order.
using Symbol = std::uint8_t;
using Word = std::vector<Symbol>;

class Alphabet {
 public:
  Alphabet() = default;
  Alphabet(std::vector<int> group_arities, int unitaries);

  int group_count() const noexcept { return static_cast<int>(arities_.size()); }
  int arity(int group) const { return arities_.at(static_cast<std::size_t>(group)); }
  const std::vector<int>& arities() const noexcept { return arities_; }
  int unitary_count() const noexcept { return unitaries_; }
  int variable_count() const noexcept { return variables_; }
  int symbol_count() const noexcept { return variables_ + 2 * unitaries_; }

  Symbol symbol(const Letter& letter) const;
  Letter letter(Symbol s) const;
  /// Group of a variable symbol, -1 for unitary symbols.
  int group_of(Symbol s) const;
  /// Symbol of the adjoint letter (variables are self-adjoint).
  Symbol adjoint(Symbol s) const;
  int variable_symbol(int group, int index) const { return offsets_.at(static_cast<std::size_t>(group)) + index; }

  std::string name(Symbol s) const;  // "X[1,2]", "V[1]", "V[1]*"
  std::string format(const Word& w) const;
  Word parse(const std::string& text) const;

  bool operator==(const Alphabet& other) const {
    return arities_ == other.arities_ && unitaries_ == other.unitaries_;
  }

 private:
  std::vector<int> arities_;
  std::vector<int> offsets_;
  int variables_ = 0;
  int unitaries_ = 0;
};

/// Adjoint word: reversed, with unitary exponents flipped.
Word adjoint_word(const Alphabet& alphabet, const Word& w);

/// Dense ranking of all words of degree 0..max_degree over `symbols` letters.
/// Rank order is (degree, lexicographic on symbols); rank 0 is the empty word.
class WordSpace {
 public:
  WordSpace() = default;
  WordSpace(int symbols, int max_degree);

  int symbols() const noexcept { return symbols_; }
  int max_degree() const noexcept { return max_degree_; }
  std::size_t size() const noexcept { return offsets_.back(); }
  /// First rank of degree d (d <= max_degree + 1).
  std::size_t offset(int degree) const { return offsets_.at(static_cast<std::size_t>(degree)); }
  std::size_t count(int degree) const { return offset(degree + 1) - offset(degree); }

  std::size_t rank(const Word& w) const;
  Word word(std::size_t rank) const;
  int degree(std::size_t rank) const;

 private:
  int symbols_ = 0;
  int max_degree_ = 0;
  std::vector<std::size_t> offsets_{0};
};

/// Spectral distribution of a single self-adjoint variable, when known in closed
/// form. Used to build quantile-diagonal microstates.
struct ScalarDistribution {
  enum class Kind { Semicircular, TwoPoint, Projection, PointMass };
  Kind kind = Kind::PointMass;
  double a = 0.0;  // semicircular: sigma; two_point: first atom; projection: alpha; point mass: location
  double b = 0.0;  // two_point: second atom
  double w = 1.0;  // two_point: weight of the first atom

  double moment(int k) const;
  double norm_bound() const;
  /// Left-continuous inverse CDF on (0, 1).
  double quantile(double u) const;
  std::string describe() const;
};

/// Joint moment table of grouped self-adjoint variables and optional unitary
/// generators. Every word of degree <= max_degree has an entry.
class NCLaw {
 public:
  NCLaw() = default;
  NCLaw(Alphabet alphabet, std::vector<std::vector<double>> rho, int max_degree, std::vector<Complex> moments);

  const Alphabet& alphabet() const noexcept { return alphabet_; }
  int max_degree() const noexcept { return space_.max_degree(); }
  const WordSpace& space() const noexcept { return space_; }
  const std::vector<std::vector<double>>& rho() const noexcept { return rho_; }
  double rho(int group, int index) const { return rho_.at(static_cast<std::size_t>(group)).at(static_cast<std::size_t>(index)); }
  /// max over all variables of rho.
  double norm_bound() const;

  Complex moment(const Word& w) const;
  Complex moment_at(std::size_t rank) const { return moments_.at(rank); }
  const std::vector<Complex>& moments() const noexcept { return moments_; }

  const std::optional<ScalarDistribution>& distribution(int group) const {
    return distributions_.at(static_cast<std::size_t>(group));
  }
  void set_distribution(int group, std::optional<ScalarDistribution> d);

  /// Free-form label carried into experiment records ("two_point(1,-1,0.5)").
  const std::string& label() const noexcept { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

 private:
  Alphabet alphabet_;
  WordSpace space_;
  std::vector<std::vector<double>> rho_;
  std::vector<Complex> moments_;
  std::vector<std::optional<ScalarDistribution>> distributions_;
  std::string label_;
};

/// Normalized traces of all words up to a degree, for a fixed assignment of one
/// matrix per symbol. Products of the first ceil(m/2) letters are cached, so each
/// trace costs O(N^2).
class WordTraceEvaluator {
 public:
  WordTraceEvaluator(std::vector<CMatrix> symbol_matrices, int max_degree);

  const WordSpace& space() const noexcept { return space_; }
  Complex trace_at(std::size_t rank) const;
  Complex trace(const Word& w) const { return trace_at(space_.rank(w)); }

 private:
  int n_ = 0;
  int half_ = 0;
  WordSpace space_;
  WordSpace half_space_;
  std::vector<CMatrix> products_;  // indexed by rank in half_space_
};

/// One matrix per symbol of the alphabet induced by `tuples` and `unitaries`
/// (unitaries contribute V and V^*).
std::vector<CMatrix> symbol_matrices(const std::vector<HermitianTuple>& tuples, const UnitaryTuple* unitaries);

NCLaw empirical_law(const std::vector<HermitianTuple>& tuples, int m);
NCLaw empirical_law(const std::vector<HermitianTuple>& tuples, const UnitaryTuple& unitaries, int m);

/// Mixed moments of freely independent components, evaluated on demand.
///
/// The output alphabet lists the groups of every component in order, followed by
/// the unitary generators of every component in order. For a word split into
/// maximal same-component blocks b_1 ... b_k (cyclically merged), freeness says
/// tau of the product of centred blocks vanishes, which gives
///   tau(b_1...b_k) = -sum_{S proper subset} (-1)^{k-|S|} prod_{j not in S} tau(b_j) tau(prod_{j in S} b_j).
/// Results are memoized per word.
class FreeProductEvaluator {
 public:
  explicit FreeProductEvaluator(std::vector<NCLaw> components);

  const Alphabet& alphabet() const noexcept { return alphabet_; }
  Complex moment(const Word& w);

 private:
  struct Block {
    int component;
    Word local;  // in the component's alphabet
  };
  Complex marginal(const Block& b) const;
  Complex alternating(const std::vector<Block>& blocks);

  std::vector<NCLaw> components_;
  Alphabet alphabet_;
  std::vector<int> component_of_;  // per output symbol
  std::vector<Symbol> local_of_;   // per output symbol
  std::unordered_map<std::string, Complex> memo_;
};

NCLaw free_product_law(const std::vector<NCLaw>& marginals, int m);

/// Single-variable standard laws.
NCLaw semicircular_law(double sigma, int m);
NCLaw two_point_law(double a, double b, double weight, int m);
NCLaw projection_law(double alpha, int m);
NCLaw point_mass_law(double c, int m);
NCLaw scalar_law(const ScalarDistribution& d, int m);

/// Law of one unitary generator u with tau(u^k) = moments[|k|] (real, symmetric).
NCLaw unitary_law(const std::vector<double>& power_moments, int m);
/// tau(u_t^k) = e^{-kt/2} sum_{j<k} (-t)^j/j! k^{j-1} C(k, j+1) for the free unitary Brownian motion.
double free_unitary_bm_moment(double t, int k);
NCLaw free_unitary_bm_law(double t, int m);

/// Law of (v_i X_i v_i^*, v_i)_{i} with the v_i free from each other and from the
/// X-groups, which are themselves free. One unitary generator per variable group.
NCLaw conjugated_presence_law(const std::vector<NCLaw>& group_marginals, const std::vector<NCLaw>& unitary_laws, int m);

/// Parses "semicircular(s)", "two_point(a,b,w)", "projection(alpha)", "point_mass(c)".
NCLaw standard_law(const std::string& spec, int m);

struct LawDeviation {
  double max_deviation = 0.0;
  Word worst_word;
};

/// max_{1 <= deg w <= m} |a(w) - b(w)|; ties resolved to the first word in rank order.
LawDeviation law_deviation(const NCLaw& a, const NCLaw& b, int m);

NCLaw restrict_degree(const NCLaw& law, int m);
/// Keeps the listed groups (in the given order); unitary generators are kept when `keep_unitaries`.
NCLaw restrict_groups(const NCLaw& law, const std::vector<int>& groups, bool keep_unitaries = false);

struct LawInvariantReport {
  double adjoint_defect = 0.0;    // |tau(w^*) - conj tau(w)|
  double cyclic_defect = 0.0;     // |tau(rotated w) - tau(w)|
  double bound_excess = 0.0;      // max(0, |tau(w)| - prod rho)
};
LawInvariantReport check_law_invariants(const NCLaw& law);

}  // namespace mslab
