#pragma once

// Formal Lie series in bracket words over generators f1..fN.
//
// Each term is coeff * alpha^e * tau^d * word with an exact rational
// coefficient. Terms are kept antisymmetry-normalized and merged: children of
// every bracket are ordered by word_less, and [Z,Z] vanishes.
//
// Two series represent the same Lie element iff their expansions in the free
// associative algebra agree; canonical() re-expresses a series in the Lyndon
// basis, which makes that comparison structural.

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "error.hpp"
#include "lie.hpp"

namespace bchd_orbit {

using Rational = boost::multiprecision::cpp_rational;
using AlphaMonomial = std::vector<int>;
using AssocWord = std::vector<int>;

inline std::string to_string(const Rational& r)
{
    return boost::multiprecision::numerator(r).str() +
           (boost::multiprecision::denominator(r) == 1 ? std::string() : "/" + boost::multiprecision::denominator(r).str());
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

struct LieSeriesTerm {
    Rational coeff;
    AlphaMonomial alpha;
    int tau_degree = 0;
    BracketWord word;
};

/// Antisymmetry normal form of a word: sign and ordered tree, or nullopt when it vanishes.
inline std::optional<std::pair<int, BracketWord>> normalize_word(const BracketWord& w)
{
    if (w.is_leaf()) return std::make_pair(1, w);
    auto l = normalize_word(w.left());
    if (!l) return std::nullopt;
    auto r = normalize_word(w.right());
    if (!r) return std::nullopt;
    if (l->second == r->second) return std::nullopt;
    int sign = l->first * r->first;
    if (word_less(r->second, l->second)) {
        std::swap(l, r);
        sign = -sign;
    }
    return std::make_pair(sign, BracketWord::bracket(l->second, r->second));
}

/// Image of a bracket word in the free associative algebra: [a,b] -> ab - ba.
inline std::map<AssocWord, long long> expand_associative(const BracketWord& w)
{
    if (w.is_leaf()) return {{AssocWord{w.generator()}, 1}};
    const auto a = expand_associative(w.left());
    const auto b = expand_associative(w.right());
    std::map<AssocWord, long long> out;
    for (const auto& [wa, ca] : a) {
        for (const auto& [wb, cb] : b) {
            AssocWord ab = wa;
            ab.insert(ab.end(), wb.begin(), wb.end());
            AssocWord ba = wb;
            ba.insert(ba.end(), wa.begin(), wa.end());
            out[ab] += ca * cb;
            out[ba] -= ca * cb;
        }
    }
    std::erase_if(out, [](const auto& kv) { return kv.second == 0; });
    return out;
}

inline bool is_lyndon(const AssocWord& w)
{
    if (w.empty()) return false;
    for (std::size_t i = 1; i < w.size(); ++i) {
        if (!std::lexicographical_compare(w.begin(), w.end(), w.begin() + std::ptrdiff_t(i), w.end())) return false;
    }
    return true;
}

/// Standard bracketing of a Lyndon word: w = uv with v the longest proper Lyndon suffix.
inline BracketWord lyndon_bracket(const AssocWord& w)
{
    if (!is_lyndon(w)) throw InvalidArgument("lyndon_bracket: not a Lyndon word");
    if (w.size() == 1) return BracketWord::leaf(w[0]);
    for (std::size_t i = 1; i < w.size(); ++i) {
        AssocWord v(w.begin() + std::ptrdiff_t(i), w.end());
        if (is_lyndon(v)) {
            AssocWord u(w.begin(), w.begin() + std::ptrdiff_t(i));
            return BracketWord::bracket(lyndon_bracket(u), lyndon_bracket(v));
        }
    }
    throw Error("lyndon_bracket: no Lyndon suffix found");
}

class LieSeries {
public:
    LieSeries(int generators, int order) : generators_(generators), order_(order)
    {
        if (generators < 1) throw InvalidArgument("LieSeries: at least one generator required");
        if (order < 1) throw InvalidArgument("LieSeries: order must be >= 1");
    }

    /// tau * alpha_k * f_k (or tau * f_k when with_alpha is false).
    static LieSeries generator(int generators, int k, int order, bool with_alpha = true)
    {
        if (k < 1 || k > generators) throw InvalidArgument("LieSeries::generator: index out of range");
        LieSeries s(generators, order);
        AlphaMonomial a(generators, 0);
        if (with_alpha) a[k - 1] = 1;
        s.add(Rational(1), a, BracketWord::leaf(k));
        return s;
    }

    int generators() const { return generators_; }
    int order() const { return order_; }
    std::size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }

    /// Adds coeff * alpha * word after normalization; terms beyond the order are discarded.
    void add(const Rational& coeff, const AlphaMonomial& alpha, const BracketWord& word)
    {
        if (int(alpha.size()) != generators_) throw DimensionError("LieSeries::add: alpha monomial has wrong length");
        if (word.max_generator() > generators_) throw InvalidArgument("LieSeries::add: word uses a missing generator");
        if (coeff == 0 || word.length() > order_) return;
        auto norm = normalize_word(word);
        if (!norm) return;
        const auto& w = norm->second;
        Key key{w.length(), w.key(), alpha};
        auto it = terms_.find(key);
        const Rational c = norm->first > 0 ? coeff : Rational(-coeff);
        if (it == terms_.end()) {
            terms_.emplace(std::move(key), Entry{c, w});
        } else {
            it->second.coeff += c;
            if (it->second.coeff == 0) terms_.erase(it);
        }
    }

    void add(const LieSeries& other, const Rational& scale = Rational(1))
    {
        check_compatible(other);
        for (const auto& [k, e] : other.terms_) add(scale * e.coeff, std::get<2>(k), e.word);
    }

    std::vector<LieSeriesTerm> terms() const
    {
        std::vector<LieSeriesTerm> out;
        out.reserve(terms_.size());
        for (const auto& [k, e] : terms_) out.push_back({e.coeff, std::get<2>(k), std::get<0>(k), e.word});
        return out;
    }

    /// Coefficient of the (normalized) word with the given alpha monomial.
    Rational coefficient(const BracketWord& word, const AlphaMonomial& alpha) const
    {
        auto norm = normalize_word(word);
        if (!norm) return Rational(0);
        auto it = terms_.find(Key{norm->second.length(), norm->second.key(), alpha});
        if (it == terms_.end()) return Rational(0);
        return norm->first > 0 ? it->second.coeff : Rational(-it->second.coeff);
    }

    int max_depth() const
    {
        int d = 0;
        for (const auto& [k, e] : terms_) d = std::max(d, e.word.depth());
        return d;
    }

    LieSeries truncated(int order) const
    {
        LieSeries s(generators_, std::min(order, order_));
        for (const auto& [k, e] : terms_)
            if (std::get<0>(k) <= s.order_) s.terms_.emplace(k, e);
        return s;
    }

    /// Same Lie element expressed in the Lyndon basis (standard bracketing).
    LieSeries canonical() const
    {
        std::map<std::pair<AlphaMonomial, int>, std::map<AssocWord, Rational>> groups;
        for (const auto& [k, e] : terms_) {
            auto& g = groups[{std::get<2>(k), std::get<0>(k)}];
            for (const auto& [aw, c] : expand_associative(e.word)) g[aw] += e.coeff * c;
        }
        LieSeries out(generators_, order_);
        for (auto& [gk, poly] : groups) {
            std::erase_if(poly, [](const auto& kv) { return kv.second == 0; });
            while (!poly.empty()) {
                const AssocWord lead = poly.begin()->first;
                const Rational c = poly.begin()->second;
                if (!is_lyndon(lead)) throw Error("LieSeries::canonical: series is not a Lie element");
                const BracketWord tree = lyndon_bracket(lead);
                out.add(c, gk.first, tree);
                for (const auto& [aw, k] : expand_associative(tree)) {
                    auto& slot = poly[aw];
                    slot -= c * k;
                    if (slot == 0) poly.erase(aw);
                }
            }
        }
        return out;
    }

    /// One term per line: `coeff * alpha^(e1,...,eN) * tau^d * word`.
    std::string dump() const
    {
        std::ostringstream os;
        for (const auto& [k, e] : terms_) {
            os << to_string(e.coeff) << " * alpha^(";
            const auto& a = std::get<2>(k);
            for (std::size_t i = 0; i < a.size(); ++i) os << (i ? "," : "") << a[i];
            os << ") * tau^" << std::get<0>(k) << " * " << e.word.to_string() << '\n';
        }
        return os.str();
    }

    /// Inverse of dump().
    static LieSeries parse_dump(const std::string& text, int generators, int order)
    {
        LieSeries s(generators, order);
        std::istringstream is(text);
        std::string line;
        while (std::getline(is, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const auto p1 = line.find(" * alpha^(");
            const auto p2 = line.find(") * tau^", p1);
            const auto p3 = line.find(" * ", p2 + 8);
            if (p1 == std::string::npos || p2 == std::string::npos || p3 == std::string::npos)
                throw InvalidArgument("LieSeries::parse_dump: malformed line '" + line + "'");
            Rational c(line.substr(0, p1));
            AlphaMonomial a;
            std::stringstream as(line.substr(p1 + 10, p2 - p1 - 10));
            std::string tok;
            while (std::getline(as, tok, ',')) a.push_back(std::stoi(tok));
            s.add(c, a, BracketWord::parse(line.substr(p3 + 3)));
        }
        return s;
    }

    /// FNV-1a over the dump text.
    std::uint64_t checksum() const
    {
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char ch : dump()) {
            h ^= ch;
            h *= 1099511628211ull;
        }
        return h;
    }

    friend bool operator==(const LieSeries& a, const LieSeries& b)
    {
        return a.generators_ == b.generators_ && a.order_ == b.order_ && a.terms_ == b.terms_;
    }

private:
    using Key = std::tuple<int, std::string, AlphaMonomial>;
    struct Entry {
        Rational coeff;
        BracketWord word;
        bool operator==(const Entry& o) const { return coeff == o.coeff && word == o.word; }
    };

    void check_compatible(const LieSeries& other) const
    {
        if (other.generators_ != generators_) throw DimensionError("LieSeries: generator sets differ");
    }

    int generators_;
    int order_;
    std::map<Key, Entry> terms_;
};

/// True when both series are the same Lie element (equal after Lyndon canonicalization).
inline bool equivalent(const LieSeries& a, const LieSeries& b)
{
    if (a.generators() != b.generators()) return false;
    return a.canonical().dump() == b.canonical().dump();
}

} // namespace bchd_orbit
