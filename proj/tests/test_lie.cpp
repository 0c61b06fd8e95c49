#include <gtest/gtest.h>

#include <random>

#include "bchd_orbit/lie.hpp"
#include "bchd_orbit/models.hpp"

using namespace bchd_orbit;

namespace {

Mat fd_jacobian(const VectorField& f, const Vec& x, double h = 1e-6)
{
    Mat j(f.dim(), f.dim());
    for (int k = 0; k < f.dim(); ++k) {
        Vec xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        j.col(k) = (f(xp) - f(xm)) / (2 * h);
    }
    return j;
}

// Matrix of the linear field obtained by evaluating `w` on the fields x -> A_k x.
Mat word_matrix(const BracketWord& w, const std::vector<Mat>& mats)
{
    if (w.is_leaf()) return mats[w.generator() - 1];
    const Mat u = word_matrix(w.left(), mats);
    const Mat v = word_matrix(w.right(), mats);
    return v * u - u * v;
}

struct CstrFields {
    ControlAffineSystem sys = build_cstr2();
    VectorField f1 = sys.frozen(sys.control_max(), "f1");
    VectorField f2 = sys.frozen(sys.control_min(), "f2");
};

Mat mat2(double a, double b, double c, double d)
{
    Mat m(2, 2);
    m << a, b, c, d;
    return m;
}

} // namespace

TEST(BracketWord, ParseAndPrint)
{
    auto w = BracketWord::parse("[f1,[f1,f2]]");
    EXPECT_EQ(w.to_string(), "[f1,[f1,f2]]");
    EXPECT_EQ(w.length(), 3);
    EXPECT_EQ(w.depth(), 2);
    EXPECT_EQ(w.max_generator(), 2);
    EXPECT_EQ(BracketWord::parse("[1, [1,2]]"), w);
    EXPECT_EQ(BracketWord::right_nested({1, 1, 2}), w);
    EXPECT_EQ(w.letters(), (std::vector<int>{1, 1, 2}));
    EXPECT_THROW(BracketWord::parse("[f1,f2"), InvalidArgument);
    EXPECT_THROW(BracketWord::parse("f0"), InvalidArgument);
}

TEST(Jacobian, ConstantFieldIsZero)
{
    auto c = constant_field((Vec(2) << 3.0, -1.0).finished());
    EXPECT_TRUE(jacobian(c, Vec::Ones(2)).isZero());
}

TEST(Jacobian, LinearFieldIsMatrix)
{
    const Mat a = mat2(1, 2, 3, 4);
    EXPECT_TRUE(jacobian(linear_field(a), Vec::Zero(2)).isApprox(a));
}

TEST(Jacobian, CstrDriftMatchesFiniteDifferences)
{
    CstrFields c;
    for (const Vec& x : {Vec(Vec::Zero(2)), Vec((Vec(2) << -0.4, -0.02).finished()), Vec((Vec(2) << 0.3, 0.2).finished())}) {
        const Mat j = jacobian(c.sys.drift, x);
        const Mat fd = fd_jacobian(c.sys.drift, x);
        EXPECT_LT((j - fd).cwiseAbs().maxCoeff(), 1e-6) << "at " << x.transpose();
    }
}

TEST(Jacobian, ErrorsOutsideDomainAndOnBadSize)
{
    CstrFields c;
    EXPECT_THROW(jacobian(c.sys.drift, (Vec(2) << -1.5, 0.0).finished()), DomainError);
    EXPECT_THROW(jacobian(c.sys.drift, Vec::Zero(3)), DimensionError);
}

TEST(LieBracket, ConstantFieldsCommute)
{
    auto x = constant_field((Vec(2) << 1, 0).finished());
    auto y = constant_field((Vec(2) << 0, 1).finished());
    EXPECT_TRUE(lie_bracket(x, y, Vec::Random(2)).isZero());
}

TEST(LieBracket, SelfBracketVanishes)
{
    CstrFields c;
    EXPECT_TRUE(lie_bracket(c.f1, c.f1, (Vec(2) << 0.1, -0.05).finished()).isZero());
}

TEST(LieBracket, MatrixCommutatorOracle)
{
    const Mat a = mat2(0, 1, 0, 0), b = mat2(0, 0, 1, 0);
    const Vec x = (Vec(2) << 1, 0).finished();
    const Vec r = lie_bracket(linear_field(a), linear_field(b), x);
    EXPECT_TRUE(r.isApprox((b * a - a * b) * x));
    EXPECT_DOUBLE_EQ(r(0), -1.0);
    EXPECT_DOUBLE_EQ(r(1), 0.0);
}

TEST(LieBracket, DimensionMismatchThrows)
{
    EXPECT_THROW(lie_bracket(linear_field(Mat::Identity(2, 2)), linear_field(Mat::Identity(3, 3)), Vec::Zero(2)),
                 DimensionError);
}

TEST(BracketWordEval, LeafIsFieldValue)
{
    CstrFields c;
    const Vec x = (Vec(2) << 0.2, 0.1).finished();
    EXPECT_TRUE(eval_bracket_word(BracketWord::leaf(1), {c.f1, c.f2}, x).isApprox(c.f1(x)));
}

TEST(BracketWordEval, LinearWordsMatchMatrixCommutators)
{
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Mat> mats;
    for (int k = 0; k < 3; ++k) {
        Mat m(3, 3);
        for (int i = 0; i < 9; ++i) m.data()[i] = u(rng);
        mats.push_back(m);
    }
    std::vector<VectorField> fields;
    for (const auto& m : mats) fields.push_back(linear_field(m));
    const Vec x = (Vec(3) << 0.3, -0.7, 1.1).finished();
    for (const char* text : {"[f1,[f1,f2]]", "[[f1,f2],[f2,f3]]", "[f3,[f2,[f1,[f1,f2]]]]", "[[f1,[f1,f3]],[f2,[f1,f2]]]"}) {
        const auto w = BracketWord::parse(text);
        const Vec got = eval_bracket_word(w, fields, x);
        const Vec expect = word_matrix(w, mats) * x;
        EXPECT_LE((got - expect).norm(), 1e-12 * expect.norm()) << text;
    }
    const Mat a = mat2(0, 1, 0, 0), b = mat2(0, 0, 1, 0);
    const Vec x2 = (Vec(2) << 1, 0).finished();
    const Vec r = eval_bracket_word(BracketWord::parse("[1,[1,2]]"), {linear_field(a), linear_field(b)}, x2);
    // [A,[A,B]] in field convention: M = [B,A]A - A[B,A] applied to x
    const Mat ab = b * a - a * b;
    EXPECT_TRUE(r.isApprox((ab * a - a * ab) * x2));
}

TEST(BracketWordEval, CstrNestedBracketMatchesFiniteDifferences)
{
    CstrFields c;
    const Vec x = Vec::Zero(2);
    auto z = [&](const Vec& p) { return lie_bracket(c.f1, c.f2, p); };
    const double h = 1e-5;
    Mat dz(2, 2);
    for (int k = 0; k < 2; ++k) {
        Vec xp = x, xm = x;
        xp(k) += h;
        xm(k) -= h;
        dz.col(k) = (z(xp) - z(xm)) / (2 * h);
    }
    const Vec fd = dz * c.f2(x) - jacobian(c.f2, x) * z(x);
    const Vec got = eval_bracket_word(BracketWord::parse("[2,[1,2]]"), {c.f1, c.f2}, x);
    EXPECT_LE((got - fd).norm(), 1e-4 * got.norm());
}

TEST(BracketWordEval, IdenticalChildrenGiveExactZero)
{
    CstrFields c;
    const Vec r = eval_bracket_word(BracketWord::parse("[[f1,f2],[f1,f2]]"), {c.f1, c.f2}, Vec::Zero(2));
    EXPECT_EQ(r(0), 0.0);
    EXPECT_EQ(r(1), 0.0);
}

TEST(BracketWordEval, LeafOutOfRangeThrows)
{
    CstrFields c;
    EXPECT_THROW(eval_bracket_word(BracketWord::parse("[f1,f3]"), {c.f1, c.f2}, Vec::Zero(2)), InvalidArgument);
}

TEST(BracketProperties, AntisymmetryAndJacobiOnCstrFields)
{
    CstrFields c;
    const VectorField f0 = c.sys.drift;
    const std::vector<VectorField> fields{c.f1, c.f2, f0};
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> u(-0.9, 0.9);
    const auto xy = BracketWord::parse("[1,2]");
    const auto yx = BracketWord::parse("[2,1]");
    const auto j1 = BracketWord::parse("[1,[2,3]]");
    const auto j2 = BracketWord::parse("[2,[3,1]]");
    const auto j3 = BracketWord::parse("[3,[1,2]]");
    for (int s = 0; s < 100; ++s) {
        const Vec x = (Vec(2) << u(rng), u(rng)).finished();
        BracketEvaluator ev(fields, x, 2);
        const Vec a = ev.value(xy), b = ev.value(yx);
        EXPECT_LE((a + b).norm(), 1e-12 * std::max(a.norm(), 1e-300));
        const Vec t1 = ev.value(j1), t2 = ev.value(j2), t3 = ev.value(j3);
        const double scale = std::max({t1.norm(), t2.norm(), t3.norm()});
        EXPECT_LE((t1 + t2 + t3).norm(), 1e-10 * scale) << "at " << x.transpose();
    }
}
