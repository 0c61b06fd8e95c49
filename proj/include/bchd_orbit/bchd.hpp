#pragma once

// Truncated BCHD series for the composition of N flows
//
//   e^{a1 tau f1} e^{a2 tau f2} ... e^{aN tau fN} = e^F,
//
// built three ways (closed form up to tau^3, the tabulated N=2 expansion up to
// tau^6, and the recursive Dynkin product), plus binding a series to concrete
// fields as an evaluable vector field.

#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "lie.hpp"
#include "lie_series.hpp"
#include "vector_field.hpp"

namespace bchd_orbit {

inline constexpr int kDefaultOrderCap = 6;

namespace detail {

inline AlphaMonomial letter_counts(const BracketWord& w, int generators)
{
    AlphaMonomial a(generators, 0);
    for (int g : w.letters()) ++a[g - 1];
    return a;
}

inline void add_word(LieSeries& s, const Rational& c, const BracketWord& w)
{
    s.add(c, letter_counts(w, s.generators()), w);
}

inline BracketWord br(const BracketWord& a, const BracketWord& b) { return BracketWord::bracket(a, b); }

} // namespace detail

/// Closed-form F through tau^order (order <= 3), general N.
///
/// The tau^3 part is log(e^X1 ... e^XN) at third order:
///   sum_{i<j} (a_i^2 a_j/12 [fi,[fi,fj]] - a_i a_j^2/12 [fj,[fi,fj]])
///   + sum_{i<j<k} a_i a_j a_k (-1/4 [fk,[fi,fj]] + 1/12 [fi,[fj,fk]] + 1/12 [fj,[fi,fk]]).
inline LieSeries terms_general(int generators, int order)
{
    if (generators < 1) throw InvalidArgument("terms_general: N >= 1 required");
    if (order < 1) throw InvalidArgument("terms_general: order >= 1 required");
    if (order > 3) throw UnsupportedError("terms_general: closed form available up to order 3; use the recursive construction");
    using detail::add_word;
    using detail::br;
    auto f = [](int i) { return BracketWord::leaf(i); };
    LieSeries s(generators, order);
    const int n = generators;
    for (int i = 1; i <= n; ++i) add_word(s, Rational(1), f(i));
    if (order >= 2) {
        for (int i = 1; i <= n; ++i)
            for (int j = i + 1; j <= n; ++j) add_word(s, Rational(1, 2), br(f(i), f(j)));
    }
    if (order >= 3) {
        for (int i = 1; i <= n; ++i) {
            for (int j = i + 1; j <= n; ++j) {
                add_word(s, Rational(1, 12), br(f(i), br(f(i), f(j))));
                add_word(s, Rational(-1, 12), br(f(j), br(f(i), f(j))));
                for (int k = j + 1; k <= n; ++k) {
                    add_word(s, Rational(-1, 4), br(f(k), br(f(i), f(j))));
                    add_word(s, Rational(1, 12), br(f(i), br(f(j), f(k))));
                    add_word(s, Rational(1, 12), br(f(j), br(f(i), f(k))));
                }
            }
        }
    }
    return s;
}

/// Tabulated two-generator expansion of F through tau^order (order <= 6).
inline LieSeries terms_n2_appendix(int order)
{
    if (order < 1) throw InvalidArgument("terms_n2_appendix: order >= 1 required");
    if (order > 6) throw UnsupportedError("terms_n2_appendix: tabulated through order 6");
    static const std::vector<std::pair<const char*, const char*>> table = {
        {"1", "f1"},
        {"1", "f2"},
        {"1/2", "[f1,f2]"},
        {"1/12", "[f1,[f1,f2]]"},
        {"-1/12", "[f2,[f1,f2]]"},
        {"-1/24", "[f2,[f1,[f1,f2]]]"},
        {"-1/720", "[f2,[f2,[f2,[f2,f1]]]]"},
        {"-1/720", "[f1,[f1,[f1,[f1,f2]]]]"},
        {"1/360", "[f1,[f2,[f2,[f2,f1]]]]"},
        {"1/360", "[f2,[f1,[f1,[f1,f2]]]]"},
        {"1/120", "[f2,[f1,[f2,[f1,f2]]]]"},
        {"1/120", "[f1,[f2,[f1,[f2,f1]]]]"},
        {"1/240", "[f1,[f2,[f1,[f2,[f1,f2]]]]]"},
        {"1/720", "[f1,[f2,[f1,[f1,[f1,f2]]]]]"},
        {"-1/720", "[f1,[f1,[f2,[f2,[f1,f2]]]]]"},
        {"1/1440", "[f1,[f2,[f2,[f2,[f1,f2]]]]]"},
        {"-1/1440", "[f1,[f1,[f2,[f1,[f1,f2]]]]]"},
    };
    LieSeries s(2, order);
    for (const auto& [c, w] : table) detail::add_word(s, Rational(c), BracketWord::parse(w));
    return s;
}

/// Dynkin coefficients of log(e^X e^Y) per letter word (0 = X, 1 = Y), right-nested,
/// through length `order`. Words whose innermost bracket is [Z,Z] are omitted.
inline std::map<std::vector<int>, Rational> dynkin_letter_coefficients(int order)
{
    std::map<std::vector<int>, Rational> out;
    std::vector<int> letters;
    // blocks: number of (r,s) blocks so far; denom: prod r! s!
    auto rec = [&](auto&& self, int blocks, const Rational& inv_fact) -> void {
        if (blocks > 0) {
            const int m = int(letters.size());
            const bool vanishes = m >= 2 && letters[m - 1] == letters[m - 2];
            if (!vanishes) {
                Rational c = inv_fact / Rational(blocks * m);
                if (blocks % 2 == 0) c = -c;
                out[letters] += c;
            }
        }
        const int room = order - int(letters.size());
        for (int r = 0; r <= room; ++r) {
            for (int s = 0; r + s <= room; ++s) {
                if (r + s == 0) continue;
                Rational f = inv_fact;
                for (int k = 2; k <= r; ++k) f /= k;
                for (int k = 2; k <= s; ++k) f /= k;
                letters.insert(letters.end(), r, 0);
                letters.insert(letters.end(), s, 1);
                self(self, blocks + 1, f);
                letters.resize(letters.size() - std::size_t(r + s));
            }
        }
    };
    rec(rec, 0, Rational(1));
    std::erase_if(out, [](const auto& kv) { return kv.second == 0; });
    return out;
}

/// log(e^A e^B) truncated at tau-degree `order`, with A and B Lie series over the same generators.
inline LieSeries dynkin_product(const LieSeries& a, const LieSeries& b, int order, int cap = kDefaultOrderCap)
{
    if (a.generators() != b.generators()) throw DimensionError("dynkin_product: generator sets differ");
    if (order < 1) throw InvalidArgument("dynkin_product: order >= 1 required");
    if (order > cap) throw UnsupportedError("dynkin_product: order " + std::to_string(order) + " exceeds cap " + std::to_string(cap));
    const int n = a.generators();
    const std::vector<LieSeriesTerm> ta = a.truncated(order).terms();
    const std::vector<LieSeriesTerm> tb = b.truncated(order).terms();
    LieSeries out(n, order);
    if (ta.empty() && tb.empty()) return out;
    auto min_degree = [](const std::vector<LieSeriesTerm>& t) {
        int d = 1 << 20;
        for (const auto& x : t) d = std::min(d, x.tau_degree);
        return d;
    };
    const int min_deg = std::min(min_degree(ta), min_degree(tb));

    for (const auto& [letters, c] : dynkin_letter_coefficients(order)) {
        const int m = int(letters.size());
        if (m * min_deg > order) continue;
        std::vector<const LieSeriesTerm*> chosen(m);
        auto rec = [&](auto&& self, int pos, int degree) -> void {
            if (pos == m) {
                Rational coeff = c;
                AlphaMonomial alpha(n, 0);
                for (const auto* t : chosen) {
                    coeff *= t->coeff;
                    for (int i = 0; i < n; ++i) alpha[i] += t->alpha[i];
                }
                BracketWord w = chosen[m - 1]->word;
                for (int i = m - 2; i >= 0; --i) w = BracketWord::bracket(chosen[i]->word, w);
                out.add(coeff, alpha, w);
                return;
            }
            const auto& pool = letters[pos] == 0 ? ta : tb;
            for (const auto& t : pool) {
                const int d = degree + t.tau_degree;
                if (d + (m - pos - 1) * min_deg > order) continue;
                chosen[pos] = &t;
                self(self, pos + 1, d);
            }
        };
        rec(rec, 0, 0);
    }
    return out;
}

/// F_2 = B(tau a1 f1, tau a2 f2), F_k = B(F_{k-1}, tau a_k f_k).
/// Intermediate F_k are reduced to the Lyndon basis to keep term counts small.
inline LieSeries recursive_F(int generators, int order, int cap = kDefaultOrderCap)
{
    if (generators < 1) throw InvalidArgument("recursive_F: N >= 1 required");
    if (order > cap) throw UnsupportedError("recursive_F: order " + std::to_string(order) + " exceeds cap " + std::to_string(cap));
    if (generators == 1) return LieSeries::generator(1, 1, order);
    LieSeries f = dynkin_product(LieSeries::generator(generators, 1, order), LieSeries::generator(generators, 2, order),
                                 order, cap);
    for (int k = 3; k <= generators; ++k)
        f = dynkin_product(f.canonical(), LieSeries::generator(generators, k, order), order, cap);
    return f;
}

enum class SeriesMethod { General, Appendix, Recursive };

inline SeriesMethod parse_series_method(const std::string& s)
{
    if (s == "general") return SeriesMethod::General;
    if (s == "appendix") return SeriesMethod::Appendix;
    if (s == "recursive") return SeriesMethod::Recursive;
    throw InvalidArgument("unknown series method '" + s + "' (expected general, appendix or recursive)");
}

inline std::string to_string(SeriesMethod m)
{
    switch (m) {
    case SeriesMethod::General: return "general";
    case SeriesMethod::Appendix: return "appendix";
    case SeriesMethod::Recursive: return "recursive";
    }
    return "?";
}

inline LieSeries build_series(SeriesMethod method, int generators, int order, int cap = kDefaultOrderCap)
{
    switch (method) {
    case SeriesMethod::General: return terms_general(generators, order);
    case SeriesMethod::Appendix:
        if (generators != 2) throw UnsupportedError("appendix method requires N = 2");
        return terms_n2_appendix(order);
    case SeriesMethod::Recursive: return recursive_F(generators, order, cap);
    }
    throw InvalidArgument("build_series: bad method");
}

/// Default method: tabulated for N=2 (<= 6), closed form (<= 3), recursive otherwise.
inline SeriesMethod default_series_method(int generators, int order)
{
    if (generators == 2 && order <= 6) return SeriesMethod::Appendix;
    if (order <= 3) return SeriesMethod::General;
    return SeriesMethod::Recursive;
}

namespace detail {

inline bool is_identity_seed(const VectorField::JetVector& x, int n)
{
    if (x.empty() || !x.front().layout()) return false;
    const auto& layout = x.front().layout();
    if (layout->nvars() != n) return false;
    for (int i = 0; i < n; ++i) {
        if (x[i].layout() != layout) return false;
        for (std::size_t k = 1; k < layout->size(); ++k) {
            const double expect = (layout->degree(k) == 1 && layout->exponents(k)[i] == 1) ? 1.0 : 0.0;
            if (x[i].coeff(k) != expect) return false;
        }
    }
    return true;
}

/// P(h) with h_i = x_i - x_i(0): substitute jets into a polynomial in the displacement.
inline Jet compose_polynomial(const Jet& poly, const VectorField::JetVector& x)
{
    const auto& pl = poly.layout();
    if (!pl) return x.empty() || !x.front().layout() ? Jet(poly.value()) : Jet(x.front().layout(), poly.value());
    const int n = pl->nvars();
    const int q = pl->order();
    std::vector<std::vector<Jet>> powers(n);
    for (int i = 0; i < n; ++i) {
        Jet h = x[i] - x[i].value();
        powers[i].push_back(Jet(1.0));
        for (int k = 1; k <= q; ++k) powers[i].push_back(powers[i].back() * h);
    }
    Jet r(0.0);
    for (std::size_t m = 0; m < pl->size(); ++m) {
        const double c = poly.coeff(m);
        if (c == 0.0) continue;
        Jet term(c);
        const auto e = pl->exponents(m);
        for (int i = 0; i < n; ++i)
            if (e[i] > 0) term = term * powers[i][e[i]];
        r += term;
    }
    return r;
}

} // namespace detail

/// Bind a series to fields: x -> sum coeff * prod alpha_i^e_i * tau^d * word(x).
/// `alphas` are the interval fractions of the switching schedule.
inline VectorField bind_series(const LieSeries& series, const std::vector<VectorField>& fields, const std::vector<double>& alphas,
                        double tau, std::string name = "F")
{
    const int n_gen = series.generators();
    if (int(fields.size()) != n_gen) throw DimensionError("bind_series: number of fields does not match the series generators");
    if (int(alphas.size()) != n_gen) throw DimensionError("bind_series: number of alphas does not match the series generators");
    if (!(tau > 0.0)) throw InvalidArgument("bind_series: tau must be positive");
    const int n = fields.front().dim();
    std::optional<Box> domain;
    for (const auto& f : fields) {
        if (f.dim() != n) throw DimensionError("bind_series: fields differ in dimension");
        if (f.domain()) domain = f.domain();
    }

    struct Weighted {
        double weight;
        BracketWord word;
    };
    std::map<std::string, Weighted> merged;
    for (const auto& t : series.terms()) {
        double w = to_double(t.coeff) * std::pow(tau, t.tau_degree);
        for (int i = 0; i < n_gen; ++i) w *= std::pow(alphas[i], t.alpha[i]);
        auto [it, inserted] = merged.try_emplace(t.word.key(), Weighted{0.0, t.word});
        it->second.weight += w;
    }
    std::vector<Weighted> terms;
    for (auto& [k, v] : merged)
        if (v.weight != 0.0) terms.push_back(v);
    const int depth = series.max_depth();

    auto value = [fields, terms, depth, n](const Vec& x) {
        Vec y = Vec::Zero(n);
        if (terms.empty()) return y;
        BracketEvaluator ev(fields, x, depth);
        for (const auto& t : terms) y += t.weight * ev.value(t.word);
        return y;
    };

    auto jet = [fields, terms, depth, n](const VectorField::JetVector& x) {
        const int q = x.front().order();
        Vec x0(n);
        for (int i = 0; i < n; ++i) x0(i) = x[i].value();
        const auto out_layout = JetLayout::get(n, q);
        VectorField::JetVector poly(n, Jet(out_layout, 0.0));
        if (!terms.empty()) {
            BracketEvaluator ev(fields, x0, depth + q);
            for (const auto& t : terms) {
                const auto& tv = ev.eval(t.word);
                for (int i = 0; i < n; ++i) poly[i] += t.weight * tv.comps[i].restricted(out_layout);
            }
        }
        if (q == 0 || detail::is_identity_seed(x, n)) return poly;
        VectorField::JetVector y;
        y.reserve(n);
        for (int i = 0; i < n; ++i) y.push_back(detail::compose_polynomial(poly[i], x));
        return y;
    };

    return VectorField(n, value, jet, std::move(name), domain);
}

} // namespace bchd_orbit
