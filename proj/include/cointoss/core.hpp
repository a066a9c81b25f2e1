#pragma once

// States, truth tables, sign words and the two shift-and-append maps.
//
// A window (x_1, ..., x_d) of the last d coin results is encoded as the
// integer s = sum_i 2^(d-i) (1 + x_i) / 2, so x_1 (the oldest result) is the
// most significant bit. A truth table stores bit s = (1 + phi(s)) / 2.

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cointoss {

/// Largest supported window length. State sets are 64-bit masks.
inline constexpr int kMaxDim = 6;

/// Raised when a mathematical invariant that must always hold is violated.
/// This always signals a bug, never bad input.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised when an exploration exceeds its configured node budget.
class CapacityExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using StateId = std::uint32_t;

enum class Sign : std::int8_t { minus = -1, plus = 1 };

constexpr int to_int(Sign s) { return static_cast<int>(s); }
constexpr Sign sign_of(int v) { return v > 0 ? Sign::plus : Sign::minus; }
constexpr Sign operator-(Sign s) { return s == Sign::plus ? Sign::minus : Sign::plus; }
constexpr Sign operator*(Sign a, Sign b) { return a == b ? Sign::plus : Sign::minus; }
// Array slot used by the step maps: + explores before -.
constexpr int slot(Sign s) { return s == Sign::plus ? 0 : 1; }
inline constexpr std::array<Sign, 2> kSigns{Sign::plus, Sign::minus};

inline void check_dim(int d) {
  if (d < 0 || d > kMaxDim) {
    throw std::out_of_range("window length " + std::to_string(d) + " outside [0, " +
                            std::to_string(kMaxDim) + "]");
  }
}

constexpr StateId state_count(int d) { return StateId{1} << d; }

/// Decodes a state into (x_1, ..., x_d), x_1 first.
inline std::vector<int> decode_state(int d, StateId s) {
  std::vector<int> x(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) x[i] = ((s >> (d - 1 - i)) & 1U) ? 1 : -1;
  return x;
}

inline StateId encode_state(std::span<const int> x) {
  StateId s = 0;
  for (int v : x) s = (s << 1) | (v > 0 ? 1U : 0U);
  return s;
}

/// A subset of E_d stored as a bit mask, bit s for state s.
class StateSet {
 public:
  constexpr StateSet() = default;
  constexpr explicit StateSet(std::uint64_t mask) : mask_(mask) {}

  static constexpr std::uint64_t full_mask(int d) {
    return d >= kMaxDim ? ~std::uint64_t{0} : (std::uint64_t{1} << (1U << d)) - 1;
  }
  static constexpr StateSet full(int d) { return StateSet(full_mask(d)); }
  static constexpr StateSet singleton(StateId s) { return StateSet(std::uint64_t{1} << s); }

  constexpr std::uint64_t mask() const { return mask_; }
  constexpr bool empty() const { return mask_ == 0; }
  constexpr int size() const { return std::popcount(mask_); }
  constexpr bool contains(StateId s) const { return (mask_ >> s) & 1U; }
  constexpr void insert(StateId s) { mask_ |= std::uint64_t{1} << s; }
  constexpr StateId min() const { return static_cast<StateId>(std::countr_zero(mask_)); }

  /// Elements in ascending order.
  std::vector<StateId> elements() const {
    std::vector<StateId> out;
    out.reserve(static_cast<std::size_t>(size()));
    for (std::uint64_t m = mask_; m != 0; m &= m - 1) {
      out.push_back(static_cast<StateId>(std::countr_zero(m)));
    }
    return out;
  }

  /// 1-based rank of s among the elements, 0 if absent.
  constexpr int rank_of(StateId s) const {
    if (!contains(s)) return 0;
    return std::popcount(mask_ & ((std::uint64_t{1} << s) - 1)) + 1;
  }

  /// Element with the given 1-based rank.
  StateId nth(int rank) const {
    std::uint64_t m = mask_;
    for (int i = 1; i < rank && m != 0; ++i) m &= m - 1;
    if (m == 0 || rank < 1) throw std::out_of_range("rank outside state set");
    return static_cast<StateId>(std::countr_zero(m));
  }

  constexpr StateSet operator|(StateSet o) const { return StateSet(mask_ | o.mask_); }
  constexpr StateSet operator&(StateSet o) const { return StateSet(mask_ & o.mask_); }
  constexpr bool operator==(const StateSet&) const = default;

 private:
  std::uint64_t mask_ = 0;
};

/// A finite word alpha_1 ... alpha_l over {+, -}. alpha_1 is applied first.
class SignWord {
 public:
  SignWord() = default;
  explicit SignWord(std::vector<Sign> signs) : signs_(std::move(signs)) {}

  static SignWord parse(std::string_view text) {
    std::vector<Sign> signs;
    signs.reserve(text.size());
    for (char c : text) {
      if (c == '+') {
        signs.push_back(Sign::plus);
      } else if (c == '-') {
        signs.push_back(Sign::minus);
      } else {
        throw std::invalid_argument(std::string("sign word may only contain '+' and '-', got '") +
                                    c + "'");
      }
    }
    return SignWord(std::move(signs));
  }

  std::string to_string() const {
    std::string out;
    out.reserve(signs_.size());
    for (Sign s : signs_) out.push_back(s == Sign::plus ? '+' : '-');
    return out;
  }

  std::size_t size() const { return signs_.size(); }
  bool empty() const { return signs_.empty(); }
  Sign operator[](std::size_t i) const { return signs_[i]; }
  const std::vector<Sign>& signs() const { return signs_; }
  auto begin() const { return signs_.begin(); }
  auto end() const { return signs_.end(); }

  void push_back(Sign s) { signs_.push_back(s); }
  SignWord then(const SignWord& next) const {
    std::vector<Sign> joined = signs_;
    joined.insert(joined.end(), next.signs_.begin(), next.signs_.end());
    return SignWord(std::move(joined));
  }

  bool operator==(const SignWord&) const = default;

 private:
  std::vector<Sign> signs_;
};

/// The map phi: {-1,1}^d -> {-1,1}, one bit per state.
class TruthTable {
 public:
  TruthTable() = default;
  TruthTable(int d, std::uint64_t bits) : dim_(d), bits_(bits) {
    check_dim(d);
    if ((bits & ~StateSet::full_mask(d)) != 0) {
      throw std::invalid_argument("truth table has bits beyond 2^d states");
    }
  }

  /// Builds a table from f(x) where x[0] = x_1 is the oldest coordinate.
  template <typename F>
  static TruthTable from_function(int d, F&& f) {
    check_dim(d);
    std::uint64_t bits = 0;
    for (StateId s = 0; s < state_count(d); ++s) {
      const std::vector<int> x = decode_state(d, s);
      if (std::invoke(f, std::span<const int>(x)) > 0) bits |= std::uint64_t{1} << s;
    }
    return TruthTable(d, bits);
  }

  static TruthTable constant(int d, int value) {
    return TruthTable(d, value > 0 ? StateSet::full_mask(d) : 0);
  }

  /// phi(x_1, ..., x_d) = x_1 at d = 1.
  static TruthTable phi1() { return TruthTable(1, 0b10); }

  /// Hex digits, most significant first; bit s of the number is state s.
  /// Shorter strings are zero-padded; bits beyond 2^d are rejected.
  static TruthTable from_hex(std::string_view hex, int d) {
    check_dim(d);
    if (hex.empty()) throw std::invalid_argument("empty hex truth table");
    if (hex.size() > 16) throw std::invalid_argument("hex truth table longer than 16 digits");
    std::uint64_t bits = 0;
    for (char c : hex) {
      int v;
      if (c >= '0' && c <= '9') {
        v = c - '0';
      } else if (c >= 'a' && c <= 'f') {
        v = c - 'a' + 10;
      } else if (c >= 'A' && c <= 'F') {
        v = c - 'A' + 10;
      } else {
        throw std::invalid_argument(std::string("invalid hex digit '") + c + "'");
      }
      bits = (bits << 4) | static_cast<std::uint64_t>(v);
    }
    if ((bits & ~StateSet::full_mask(d)) != 0) {
      throw std::invalid_argument("hex table " + std::string(hex) + " sets bits beyond 2^" +
                                  std::to_string(d) + " states");
    }
    return TruthTable(d, bits);
  }

  static constexpr std::size_t hex_digits(int d) { return ((std::size_t{1} << d) + 3) / 4; }

  std::string to_hex() const {
    static constexpr char kDigits[] = "0123456789ABCDEF";
    const std::size_t n = hex_digits(dim_);
    std::string out(n, '0');
    for (std::size_t i = 0; i < n; ++i) out[n - 1 - i] = kDigits[(bits_ >> (4 * i)) & 0xF];
    return out;
  }

  int dim() const { return dim_; }
  StateId states() const { return state_count(dim_); }
  std::uint64_t bits() const { return bits_; }
  bool bit(StateId s) const { return (bits_ >> s) & 1U; }
  int value(StateId s) const { return bit(s) ? 1 : -1; }
  int ones() const { return std::popcount(bits_); }

  TruthTable negated() const { return TruthTable(dim_, ~bits_ & StateSet::full_mask(dim_)); }

  bool operator==(const TruthTable&) const = default;

 private:
  int dim_ = 0;
  std::uint64_t bits_ = 1;  // phi = 1 at d = 0: the identity transformation
};

/// f_alpha(x_1, ..., x_d) = (x_2, ..., x_d, alpha * phi(x_1, ..., x_d)).
inline StateId apply_step(const TruthTable& t, StateId s, Sign alpha) {
  if (s >= t.states()) {
    throw std::out_of_range("state " + std::to_string(s) + " outside E_" + std::to_string(t.dim()));
  }
  if (t.dim() == 0) return 0;
  const StateId shifted = (s << 1) & (t.states() - 1);
  return shifted | ((to_int(alpha) * t.value(s)) > 0 ? 1U : 0U);
}

/// Union of per-state masks over a state set, by 8-bit chunk lookup.
class MaskUnion {
 public:
  MaskUnion() = default;
  explicit MaskUnion(std::span<const std::uint64_t> per_state)
      : chunks_((per_state.size() + 7) / 8), table_(chunks_ * 256, 0) {
    for (std::size_t c = 0; c < chunks_; ++c) {
      const std::size_t width = std::min<std::size_t>(8, per_state.size() - 8 * c);
      std::uint64_t* row = table_.data() + 256 * c;
      for (std::size_t v = 1; v < (std::size_t{1} << width); ++v) {
        row[v] = row[v & (v - 1)] | per_state[8 * c + static_cast<std::size_t>(std::countr_zero(v))];
      }
    }
  }

  std::uint64_t operator()(std::uint64_t mask) const {
    std::uint64_t out = 0;
    for (std::size_t c = 0; c < chunks_ && mask != 0; ++c, mask >>= 8) out |= table_[256 * c + (mask & 0xFF)];
    return out;
  }

 private:
  std::size_t chunks_ = 0;
  std::vector<std::uint64_t> table_;
};

/// Precomputed successor tables for f_+ and f_-, with set images and
/// preimages.
class StepMap {
 public:
  explicit StepMap(const TruthTable& t) : dim_(t.dim()) {
    const StateId n = t.states();
    for (Sign a : kSigns) {
      std::vector<std::uint64_t> img(n, 0);
      std::vector<std::uint64_t> pre(n, 0);
      for (StateId s = 0; s < n; ++s) {
        const StateId x = apply_step(t, s, a);
        next_[slot(a)][s] = static_cast<std::uint8_t>(x);
        img[s] = std::uint64_t{1} << x;
        pre[x] |= std::uint64_t{1} << s;
      }
      image_[slot(a)] = MaskUnion(img);
      preimage_[slot(a)] = MaskUnion(pre);
    }
  }

  int dim() const { return dim_; }
  StateId states() const { return state_count(dim_); }
  StateId operator()(Sign a, StateId s) const { return next_[slot(a)][s]; }
  StateId step(int a_slot, StateId s) const { return next_[a_slot][s]; }

  StateSet image(int a_slot, StateSet set) const { return StateSet(image_[a_slot](set.mask())); }
  StateSet image(Sign a, StateSet set) const { return image(slot(a), set); }

  StateSet image(const SignWord& w, StateSet set) const {
    for (Sign a : w) set = image(a, set);
    return set;
  }

  /// States sent into `set` by f_alpha.
  StateSet preimage(int a_slot, StateSet set) const { return StateSet(preimage_[a_slot](set.mask())); }

  StateId apply(const SignWord& w, StateId s) const {
    for (Sign a : w) s = (*this)(a, s);
    return s;
  }

 private:
  int dim_;
  std::array<std::array<std::uint8_t, 64>, 2> next_{};
  std::array<MaskUnion, 2> image_;
  std::array<MaskUnion, 2> preimage_;
};

/// Image of a set under f_{alpha_l} o ... o f_{alpha_1}.
inline StateSet apply_word(const TruthTable& t, StateSet set, const SignWord& w) {
  if ((set.mask() & ~StateSet::full_mask(t.dim())) != 0) {
    throw std::out_of_range("state set outside E_" + std::to_string(t.dim()));
  }
  return StepMap(t).image(w, set);
}

/// Smallest d' such that phi only reads its last d' arguments, with the
/// table restricted to those arguments.
struct Reduction {
  int length;
  TruthTable table;
};

inline Reduction effective_length(const TruthTable& t) {
  for (int len = 0; len < t.dim(); ++len) {
    const StateId low = state_count(len) - 1;
    bool factors = true;
    for (StateId s = 0; s < t.states() && factors; ++s) factors = t.bit(s) == t.bit(s & low);
    if (factors) return {len, TruthTable(len, t.bits() & StateSet::full_mask(len))};
  }
  return {t.dim(), t};
}

/// Extends a table to a longer window; the new leading coordinates are ignored.
inline TruthTable widen(const TruthTable& t, int d) {
  check_dim(d);
  if (d < t.dim()) throw std::invalid_argument("cannot widen to a shorter window");
  const StateId low = t.states() - 1;
  std::uint64_t bits = 0;
  for (StateId s = 0; s < state_count(d); ++s) {
    if (t.bit(s & low)) bits |= std::uint64_t{1} << s;
  }
  return TruthTable(d, bits);
}

/// Table of outer o inner, i.e. the transformation applying `inner` first.
/// Both tables must be given at their true length; the result has length
/// inner.dim() + outer.dim().
inline TruthTable compose(const TruthTable& outer, const TruthTable& inner) {
  if (effective_length(outer).length != outer.dim() ||
      effective_length(inner).length != inner.dim()) {
    throw std::invalid_argument("compose needs tables at their effective length; reduce first");
  }
  const int p = inner.dim();
  const int q = outer.dim();
  check_dim(p + q);
  const StateId pmask = state_count(p) - 1;
  return TruthTable::from_function(p + q, [&](std::span<const int> x) {
    const StateId s = encode_state(x);
    // y_k = phi(t_k .. t_{k+p-1}) t_{k+p}, k = 1..q
    StateId y = 0;
    for (int k = 0; k < q; ++k) {
      const StateId window = (s >> (q - k)) & pmask;
      y = (y << 1) | ((inner.value(window) * x[k + p]) > 0 ? 1U : 0U);
    }
    return outer.value(y) * inner.value(s & pmask);
  });
}

/// A coin-tossing sample; the first d values form the initial window.
struct EpsilonStream {
  std::vector<Sign> values;
};

/// The transformed sequence zeta_n = H_n eps_n.
struct ZetaStream {
  std::vector<Sign> values;
};

/// zeta_j = phi(eps_j, ..., eps_{j+d-1}) * eps_{j+d}.
inline ZetaStream transform_stream(const TruthTable& t, const EpsilonStream& eps) {
  const auto d = static_cast<std::size_t>(t.dim());
  if (eps.values.size() < d) throw std::invalid_argument("stream shorter than the window length");
  ZetaStream out;
  out.values.reserve(eps.values.size() - d);
  const StateId mask = t.states() - 1;
  StateId window = 0;
  for (std::size_t i = 0; i < d; ++i) window = (window << 1) | (eps.values[i] == Sign::plus ? 1U : 0U);
  for (std::size_t i = d; i < eps.values.size(); ++i) {
    const Sign e = eps.values[i];
    out.values.push_back(sign_of(t.value(window)) * e);
    window = ((window << 1) | (e == Sign::plus ? 1U : 0U)) & mask;
  }
  return out;
}

/// "+1 -1 ..." text form of a +-1 sequence.
inline std::string format_signs(std::span<const Sign> values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i != 0) out.push_back(' ');
    out += values[i] == Sign::plus ? "+1" : "-1";
  }
  return out;
}

/// Accepts whitespace-separated "1", "+1" and "-1" tokens.
inline std::vector<Sign> parse_signs(std::string_view text) {
  std::vector<Sign> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && (text[i] == ' ' || text[i] == '\n' || text[i] == '\t' || text[i] == ',')) ++i;
    if (i == text.size()) break;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ' && text[j] != '\n' && text[j] != '\t' && text[j] != ',') ++j;
    const std::string_view tok = text.substr(i, j - i);
    if (tok == "1" || tok == "+1") {
      out.push_back(Sign::plus);
    } else if (tok == "-1") {
      out.push_back(Sign::minus);
    } else {
      throw std::invalid_argument("expected +1 or -1, got '" + std::string(tok) + "'");
    }
    i = j;
  }
  return out;
}

/// Packs +1 as bit 1, least significant bit first within each byte.
inline std::vector<std::uint8_t> pack_signs(std::span<const Sign> values) {
  std::vector<std::uint8_t> out((values.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == Sign::plus) out[i / 8] |= static_cast<std::uint8_t>(1U << (i % 8));
  }
  return out;
}

inline std::vector<Sign> unpack_signs(std::span<const std::uint8_t> bytes, std::size_t count) {
  if (count > bytes.size() * 8) throw std::invalid_argument("not enough packed bytes");
  std::vector<Sign> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = ((bytes[i / 8] >> (i % 8)) & 1U) ? Sign::plus : Sign::minus;
  return out;
}

}  // namespace cointoss
