#pragma once

// Lie brackets of vector fields evaluated through truncated Taylor jets.
//
// [X,Y](x) = DY(x) X(x) - DX(x) Y(x)
//
// Nested brackets are computed on Taylor polynomials: each generator is expanded
// at x to the depth of the bracket tree, and every bracket costs one degree of
// validity (one differentiation).

#include <cctype>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "error.hpp"
#include "jet.hpp"
#include "linalg.hpp"
#include "vector_field.hpp"

namespace bchd_orbit {

/// Binary commutator tree over generator indices 1..N.
class BracketWord {
public:
    static BracketWord leaf(int generator)
    {
        if (generator < 1) throw InvalidArgument("BracketWord: generator index must be >= 1");
        auto n = std::make_shared<Node>();
        n->generator = generator;
        n->length = 1;
        n->depth = 0;
        n->max_generator = generator;
        n->key = std::to_string(generator);
        return BracketWord(std::move(n));
    }

    static BracketWord bracket(const BracketWord& left, const BracketWord& right)
    {
        auto n = std::make_shared<Node>();
        n->left = left.node_;
        n->right = right.node_;
        n->length = left.length() + right.length();
        n->depth = 1 + std::max(left.depth(), right.depth());
        n->max_generator = std::max(left.max_generator(), right.max_generator());
        n->key = "[" + left.key() + "," + right.key() + "]";
        return BracketWord(std::move(n));
    }

    /// Right-nested [w0,[w1,[...,[w_{k-2},w_{k-1}]]]].
    static BracketWord right_nested(const std::vector<int>& letters)
    {
        if (letters.empty()) throw InvalidArgument("BracketWord::right_nested: empty word");
        BracketWord w = leaf(letters.back());
        for (auto it = letters.rbegin() + 1; it != letters.rend(); ++it) w = bracket(leaf(*it), w);
        return w;
    }

    /// Accepts "[f1,[f1,f2]]" or "[1,[1,2]]".
    static BracketWord parse(std::string_view text)
    {
        std::size_t pos = 0;
        BracketWord w = parse_at(text, pos);
        skip_ws(text, pos);
        if (pos != text.size()) throw InvalidArgument("BracketWord::parse: trailing characters in '" + std::string(text) + "'");
        return w;
    }

    bool is_leaf() const { return node_->generator > 0; }
    int generator() const { return node_->generator; }
    BracketWord left() const { return BracketWord(node_->left); }
    BracketWord right() const { return BracketWord(node_->right); }
    int length() const { return node_->length; }
    int depth() const { return node_->depth; }
    int max_generator() const { return node_->max_generator; }
    /// Structural key; equal keys mean identical trees.
    const std::string& key() const { return node_->key; }

    std::string to_string() const
    {
        if (is_leaf()) return "f" + std::to_string(generator());
        return "[" + left().to_string() + "," + right().to_string() + "]";
    }

    /// Leaves from left to right.
    std::vector<int> letters() const
    {
        std::vector<int> out;
        collect(out);
        return out;
    }

    friend bool operator==(const BracketWord& a, const BracketWord& b) { return a.key() == b.key(); }

    /// Total order used for canonical child ordering: by length, then key.
    friend bool word_less(const BracketWord& a, const BracketWord& b)
    {
        if (a.length() != b.length()) return a.length() < b.length();
        return a.key() < b.key();
    }

private:
    struct Node {
        int generator = 0;
        std::shared_ptr<const Node> left, right;
        int length = 0;
        int depth = 0;
        int max_generator = 0;
        std::string key;
    };

    explicit BracketWord(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    void collect(std::vector<int>& out) const
    {
        if (is_leaf()) {
            out.push_back(generator());
            return;
        }
        left().collect(out);
        right().collect(out);
    }

    static void skip_ws(std::string_view s, std::size_t& pos)
    {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    static BracketWord parse_at(std::string_view s, std::size_t& pos)
    {
        skip_ws(s, pos);
        if (pos >= s.size()) throw InvalidArgument("BracketWord::parse: unexpected end");
        if (s[pos] == '[') {
            ++pos;
            BracketWord l = parse_at(s, pos);
            skip_ws(s, pos);
            if (pos >= s.size() || s[pos] != ',') throw InvalidArgument("BracketWord::parse: expected ','");
            ++pos;
            BracketWord r = parse_at(s, pos);
            skip_ws(s, pos);
            if (pos >= s.size() || s[pos] != ']') throw InvalidArgument("BracketWord::parse: expected ']'");
            ++pos;
            return bracket(l, r);
        }
        if (s[pos] == 'f') ++pos;
        std::size_t start = pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        if (start == pos) throw InvalidArgument("BracketWord::parse: expected generator index");
        return leaf(std::stoi(std::string(s.substr(start, pos - start))));
    }

    std::shared_ptr<const Node> node_;
};

/// Vector of Taylor polynomials with the highest degree whose coefficients are exact.
struct TaylorVector {
    std::vector<Jet> comps;
    int valid = 0;
};

/// [A,B] on Taylor polynomials: DB.A - DA.B, valid to min(valid) - 1.
inline TaylorVector taylor_bracket(const TaylorVector& a, const TaylorVector& b)
{
    const int n = int(a.comps.size());
    if (int(b.comps.size()) != n) throw DimensionError("taylor_bracket: dimension mismatch");
    if (std::min(a.valid, b.valid) < 1) throw Error("taylor_bracket: operands not expanded to sufficient order");
    TaylorVector r;
    r.valid = std::min(a.valid, b.valid) - 1;
    r.comps.assign(n, Jet(0.0));
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            r.comps[i] += b.comps[i].derivative(j) * a.comps[j];
            r.comps[i] -= a.comps[i].derivative(j) * b.comps[j];
        }
    }
    return r;
}

/// Expands generator fields at a point and evaluates bracket words with memoization.
class BracketEvaluator {
public:
    BracketEvaluator(const std::vector<VectorField>& fields, const Vec& x, int order)
        : fields_(fields), x_(x), order_(order)
    {
        if (fields_.empty()) throw DimensionError("BracketEvaluator: no generator fields");
        const int n = fields_.front().dim();
        for (const auto& f : fields_)
            if (f.dim() != n) throw DimensionError("BracketEvaluator: generator fields differ in dimension");
        require_size(x_, n, "BracketEvaluator");
        for (const auto& f : fields_)
            if (!f.in_domain(x_)) throw DomainError("BracketEvaluator: point outside the domain of '" + f.name() + "'");
    }

    int dim() const { return fields_.front().dim(); }

    /// Taylor polynomial of the word at x, valid to order - depth(word).
    const TaylorVector& eval(const BracketWord& w)
    {
        if (auto it = memo_.find(w.key()); it != memo_.end()) return it->second;
        if (w.max_generator() > int(fields_.size()))
            throw InvalidArgument("bracket word " + w.to_string() + " references a missing generator");
        if (w.depth() > order_) throw Error("BracketEvaluator: word deeper than expansion order");
        TaylorVector r;
        if (w.is_leaf()) {
            const auto& f = fields_[w.generator() - 1];
            r.comps = f.taylor(x_, order_);
            r.valid = order_;
        } else if (w.left() == w.right()) {
            r.comps.assign(dim(), Jet(JetLayout::get(dim(), order_), 0.0));
            r.valid = order_ - w.depth();
        } else {
            const TaylorVector& a = eval(w.left());
            const TaylorVector& b = eval(w.right());
            r = taylor_bracket(a, b);
        }
        return memo_.emplace(w.key(), std::move(r)).first->second;
    }

    Vec value(const BracketWord& w)
    {
        const auto& t = eval(w);
        Vec v(dim());
        for (int i = 0; i < dim(); ++i) v(i) = t.comps[i].value();
        return v;
    }

private:
    std::vector<VectorField> fields_;
    Vec x_;
    int order_;
    std::unordered_map<std::string, TaylorVector> memo_;
};

/// Jacobian of X at x by first-order jets.
inline Mat jacobian(const VectorField& field, const Vec& x)
{
    require_size(x, field.dim(), "jacobian");
    if (!field.in_domain(x)) throw DomainError("jacobian: point outside the domain of '" + field.name() + "'");
    return field.jacobian(x);
}

/// [X,Y](x) = DY(x) X(x) - DX(x) Y(x)
inline Vec lie_bracket(const VectorField& x_field, const VectorField& y_field, const Vec& x)
{
    if (x_field.dim() != y_field.dim()) throw DimensionError("lie_bracket: fields differ in dimension");
    require_size(x, x_field.dim(), "lie_bracket");
    const auto tx = x_field.taylor(x, 1);
    const auto ty = y_field.taylor(x, 1);
    const int n = x_field.dim();
    Vec r = Vec::Zero(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) r(i) += ty[i].first(j) * tx[j].value() - tx[i].first(j) * ty[j].value();
    if (!r.allFinite()) throw DomainError("lie_bracket: non-finite result");
    return r;
}

inline Vec eval_bracket_word(const BracketWord& word, const std::vector<VectorField>& fields, const Vec& x)
{
    if (word.max_generator() > int(fields.size()))
        throw InvalidArgument("eval_bracket_word: leaf index exceeds the number of fields");
    BracketEvaluator ev(fields, x, word.depth());
    Vec v = ev.value(word);
    if (!v.allFinite()) throw DomainError("eval_bracket_word: non-finite result");
    return v;
}

} // namespace bchd_orbit
