#pragma once

// Upper half-plane primitives, the rank-2 free Fuchsian group generated by
// z -> z + 2 and z -> z / (2z + 1), its ideal-quadrilateral fundamental
// domain, and enumeration of group elements by word length or displacement.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypgap {

struct PlanePoint {
  double x = 0.0;
  double y = 1.0;
};

/// Element of SL(2, R); m and -m act identically.
struct MoebiusMatrix {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

  static constexpr MoebiusMatrix identity() { return {1.0, 0.0, 0.0, 1.0}; }

  double det() const { return a * d - b * c; }

  MoebiusMatrix inverse() const { return {d, -b, -c, a}; }

  /// Divides by sqrt(det) so long products stay on SL(2, R).
  MoebiusMatrix normalized() const {
    const double s = std::sqrt(det());
    return {a / s, b / s, c / s, d / s};
  }

  friend MoebiusMatrix operator*(const MoebiusMatrix& l, const MoebiusMatrix& r) {
    return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d, l.c * r.a + l.d * r.c,
            l.c * r.b + l.d * r.d};
  }

  /// Entrywise distance modulo the sign ambiguity of PSL(2, R).
  friend double projective_distance(const MoebiusMatrix& l, const MoebiusMatrix& r) {
    const double plus = std::max({std::abs(l.a - r.a), std::abs(l.b - r.b), std::abs(l.c - r.c),
                                  std::abs(l.d - r.d)});
    const double minus = std::max({std::abs(l.a + r.a), std::abs(l.b + r.b), std::abs(l.c + r.c),
                                   std::abs(l.d + r.d)});
    return std::min(plus, minus);
  }
};

inline PlanePoint mobius_apply(const MoebiusMatrix& m, PlanePoint z) {
  // (az + b) / (cz + d) with z = x + iy
  const double nr = m.a * z.x + m.b;
  const double ni = m.a * z.y;
  const double dr = m.c * z.x + m.d;
  const double di = m.c * z.y;
  const double den = dr * dr + di * di;
  return {(nr * dr + ni * di) / den, z.y * m.det() / den};
}

/// sinh^2(d/2) for the hyperbolic distance d; monotone in d and cheap.
inline double half_sinh_sq(PlanePoint z, PlanePoint w) {
  const double dx = z.x - w.x;
  const double dy = z.y - w.y;
  return (dx * dx + dy * dy) / (4.0 * z.y * w.y);
}

inline double hyp_dist(PlanePoint z, PlanePoint w) {
  return 2.0 * std::asinh(std::sqrt(half_sinh_sq(z, w)));
}

/// Threshold on half_sinh_sq equivalent to d <= r.
inline double half_sinh_sq_of(double r) {
  const double s = std::sinh(0.5 * r);
  return s * s;
}

/// Reduced word over the letters +-1..+-d; letter -i denotes the inverse of
/// generator i.
using Word = std::vector<int>;

inline Word reduce_word(const Word& w) {
  Word out;
  out.reserve(w.size());
  for (int letter : w) {
    if (letter == 0) throw std::invalid_argument("reduce_word: letter 0 is not a generator");
    if (!out.empty() && out.back() == -letter)
      out.pop_back();
    else
      out.push_back(letter);
  }
  return out;
}

inline Word inverse_word(const Word& w) {
  Word out(w.rbegin(), w.rend());
  for (int& l : out) l = -l;
  return out;
}

inline std::string word_to_string(const Word& w) {
  if (w.empty()) return "e";
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) s += ' ';
    s += std::to_string(w[i]);
  }
  return s;
}

struct GroupElement {
  Word word;
  MoebiusMatrix matrix = MoebiusMatrix::identity();

  bool is_identity() const { return word.empty(); }
};

struct Cusp {
  /// Conjugator taking the cusp point to infinity; the cusp height of z is
  /// Im(conjugator z). Several conjugators may describe the same cusp class
  /// when it appears at more than one vertex of the domain.
  std::vector<MoebiusMatrix> conjugators;
  double width = 2.0;
  std::string label;
};

/// Concrete free group of rank two with its fundamental domain
/// {|x| < 1, |2z + 1| > 1, |2z - 1| > 1}: three cusps at infinity, 0 and 1,
/// each of width 2, total area 2 pi.
struct DomainSpec {
  std::vector<MoebiusMatrix> generators;
  std::vector<Cusp> cusps;
  /// Points whose height exceeds this value in some cusp are outside the
  /// compact part.
  double height_cutoff = 2.0;

  int rank() const { return static_cast<int>(generators.size()); }

  MoebiusMatrix letter_matrix(int letter) const {
    const int idx = std::abs(letter) - 1;
    if (idx < 0 || idx >= rank()) throw std::out_of_range("letter outside generator alphabet");
    return letter > 0 ? generators[idx] : generators[idx].inverse();
  }

  /// Largest height of z over all cusps.
  double max_cusp_height(PlanePoint z) const {
    double h = 0.0;
    for (const auto& c : cusps)
      for (const auto& m : c.conjugators) h = std::max(h, mobius_apply(m, z).y);
    return h;
  }

  /// Height of z in cusp k (largest over its conjugators).
  double cusp_height(std::size_t k, PlanePoint z) const {
    double h = 0.0;
    for (const auto& m : cusps.at(k).conjugators) h = std::max(h, mobius_apply(m, z).y);
    return h;
  }

  double total_area() const { return 2.0 * std::numbers::pi; }
};

inline DomainSpec gamma2_domain(double height_cutoff = 2.0) {
  DomainSpec spec;
  spec.generators = {{1.0, 2.0, 0.0, 1.0}, {1.0, 0.0, 2.0, 1.0}};
  spec.height_cutoff = height_cutoff;
  // z -> -1/(z - p) sends p to infinity.
  spec.cusps.push_back({{MoebiusMatrix::identity()}, 2.0, "inf"});
  spec.cusps.push_back({{{0.0, -1.0, 1.0, 0.0}}, 2.0, "0"});
  spec.cusps.push_back({{{0.0, -1.0, 1.0, -1.0}, {0.0, -1.0, 1.0, 1.0}}, 2.0, "1"});
  return spec;
}

/// Membership in the ideal quadrilateral. Boundary convention: the sides
/// x = -1 and |2z + 1| = 1 belong to the domain, their images x = 1 and
/// |2z - 1| = 1 do not.
inline bool in_domain(PlanePoint z, const DomainSpec& /*spec*/) {
  if (!(z.y > 0.0)) return false;
  if (z.x < -1.0 || z.x >= 1.0) return false;
  const double left = (2.0 * z.x + 1.0) * (2.0 * z.x + 1.0) + 4.0 * z.y * z.y;
  const double right = (2.0 * z.x - 1.0) * (2.0 * z.x - 1.0) + 4.0 * z.y * z.y;
  return left >= 1.0 && right > 1.0;
}

inline GroupElement word_to_element(const Word& word, const DomainSpec& spec) {
  GroupElement g;
  g.word = reduce_word(word);
  for (int letter : g.word) g.matrix = (g.matrix * spec.letter_matrix(letter)).normalized();
  return g;
}

/// Number of reduced words of length <= L in a free group of rank d.
inline std::uint64_t ball_size(int rank, int radius) {
  if (radius <= 0) return 1;
  std::uint64_t total = 1, layer = 2ull * rank;
  for (int l = 1; l <= radius; ++l) {
    total += layer;
    layer *= (2ull * rank - 1);
  }
  return total;
}

/// Letters in canonical order: -d..-1, 1..d.
inline std::vector<int> alphabet(int rank) {
  std::vector<int> letters;
  for (int i = -rank; i <= rank; ++i)
    if (i != 0) letters.push_back(i);
  return letters;
}

/// All reduced words of length <= L, breadth first, each exactly once.
inline std::vector<GroupElement> enumerate_ball(int radius, const DomainSpec& spec) {
  if (radius < 0) throw std::invalid_argument("enumerate_ball: radius must be >= 0");
  const auto letters = alphabet(spec.rank());
  std::vector<GroupElement> out;
  out.reserve(static_cast<std::size_t>(ball_size(spec.rank(), radius)));
  out.push_back({});
  std::size_t layer_begin = 0, layer_end = 1;
  for (int l = 1; l <= radius; ++l) {
    for (std::size_t i = layer_begin; i < layer_end; ++i) {
      for (int letter : letters) {
        if (!out[i].word.empty() && out[i].word.back() == -letter) continue;
        GroupElement g;
        g.word = out[i].word;
        g.word.push_back(letter);
        g.matrix = (out[i].matrix * spec.letter_matrix(letter)).normalized();
        out.push_back(std::move(g));
      }
    }
    layer_begin = layer_end;
    layer_end = out.size();
  }
  return out;
}

/// Smallest hyperbolic distance d(g x, y) over sample points x, y.
inline double min_displacement(const MoebiusMatrix& g, const std::vector<PlanePoint>& points) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& x : points) {
    const PlanePoint gx = mobius_apply(g, x);
    for (const auto& y : points) best = std::min(best, half_sinh_sq(gx, y));
  }
  return 2.0 * std::asinh(std::sqrt(best));
}

struct EnumerateOptions {
  /// BFS fails if words of this length are still being extended.
  int max_word_length = 4096;
  /// Prefixes whose minimal displacement exceeds T + 1 + margin are not
  /// extended. Negative means: use the diameter of the sample set.
  double prune_margin = -1.0;
};

/// Diameter of a finite point set in the hyperbolic metric.
inline double point_set_diameter(const std::vector<PlanePoint>& points) {
  double best = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      best = std::max(best, half_sinh_sq(points[i], points[j]));
  return 2.0 * std::asinh(std::sqrt(best));
}

/// Every group element g with min_{x, y in K} d(g x, y) <= T + 1, found by
/// breadth-first search over reduced words.
inline std::vector<GroupElement> enumerate_S(double T, const std::vector<PlanePoint>& K,
                                             const DomainSpec& spec,
                                             const EnumerateOptions& opts = {}) {
  if (K.empty()) throw std::invalid_argument("enumerate_S: sample set K is empty");
  if (!(T > 0.0)) throw std::invalid_argument("enumerate_S: T must be positive");

  const double diam = point_set_diameter(K);
  const double margin = opts.prune_margin >= 0.0 ? opts.prune_margin : diam;
  const double member_q = half_sinh_sq_of(T + 1.0);
  const double prune_r = T + 1.0 + margin;

  // Bounding ball around the first point gives a cheap lower bound
  // d(gx, y) >= d(gc, c) - 2 radius.
  const PlanePoint center = K.front();
  double radius = 0.0;
  for (const auto& p : K) radius = std::max(radius, hyp_dist(p, center));

  // Returns the exact minimal displacement, or a lower bound that already
  // exceeds the prune radius.
  auto displacement = [&](const MoebiusMatrix& g) {
    const double lower = hyp_dist(mobius_apply(g, center), center) - 2.0 * radius;
    if (lower > prune_r) return lower;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& x : K) {
      const PlanePoint gx = mobius_apply(g, x);
      for (const auto& y : K) {
        const double q = half_sinh_sq(gx, y);
        if (q < best) {
          best = q;
          if (best <= member_q) return 2.0 * std::asinh(std::sqrt(best));
        }
      }
    }
    return 2.0 * std::asinh(std::sqrt(best));
  };

  const auto letters = alphabet(spec.rank());
  std::vector<GroupElement> result;
  std::vector<GroupElement> frontier{GroupElement{}};
  result.push_back({});
  for (int length = 1; !frontier.empty(); ++length) {
    if (length > opts.max_word_length)
      throw std::runtime_error("enumerate_S: search not closed at word length " +
                               std::to_string(opts.max_word_length) +
                               "; K or T too large for this cap");
    std::vector<GroupElement> next;
    for (const auto& w : frontier) {
      for (int letter : letters) {
        if (!w.word.empty() && w.word.back() == -letter) continue;
        GroupElement g;
        g.word = w.word;
        g.word.push_back(letter);
        g.matrix = (w.matrix * spec.letter_matrix(letter)).normalized();
        const double disp = displacement(g.matrix);
        if (disp > prune_r) continue;
        if (disp <= T + 1.0) result.push_back(g);
        next.push_back(std::move(g));
      }
    }
    frontier = std::move(next);
  }
  return result;
}

/// key = value serialization; generator entries row-major.
inline std::string serialize_domain(const DomainSpec& spec) {
  std::ostringstream out;
  out.precision(17);
  out << "rank = " << spec.rank() << "\n";
  for (int i = 0; i < spec.rank(); ++i) {
    const auto& g = spec.generators[i];
    out << "g" << (i + 1) << " = " << g.a << " " << g.b << " " << g.c << " " << g.d << "\n";
  }
  out << "height_cutoff = " << spec.height_cutoff << "\n";
  return out.str();
}

/// Parses a key = value block. Unknown keys are rejected; missing keys keep
/// the Gamma(2) defaults.
inline DomainSpec parse_domain(const std::string& text) {
  DomainSpec spec = gamma2_domain();
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  int rank = spec.rank();
  if (auto it = kv.find("rank"); it != kv.end()) rank = std::stoi(it->second);
  std::vector<MoebiusMatrix> gens(rank);
  for (int i = 0; i < rank; ++i) {
    const std::string key = "g" + std::to_string(i + 1);
    auto it = kv.find(key);
    if (it == kv.end()) {
      if (i < spec.rank()) {
        gens[i] = spec.generators[i];
        continue;
      }
      throw std::invalid_argument("parse_domain: missing " + key);
    }
    std::istringstream vals(it->second);
    MoebiusMatrix m;
    if (!(vals >> m.a >> m.b >> m.c >> m.d))
      throw std::invalid_argument("parse_domain: " + key + " needs four entries");
    if (std::abs(m.det() - 1.0) > 1e-12)
      throw std::invalid_argument("parse_domain: " + key + " does not have determinant 1");
    gens[i] = m;
    kv.erase(it);
  }
  kv.erase("rank");
  if (auto it = kv.find("height_cutoff"); it != kv.end()) {
    spec.height_cutoff = std::stod(it->second);
    kv.erase(it);
  }
  if (!kv.empty()) throw std::invalid_argument("parse_domain: unknown key " + kv.begin()->first);
  spec.generators = std::move(gens);
  return spec;
}

}  // namespace hypgap
