#include "tvblf/feasibility.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "doctest.h"

#include "tvblf/errors.hpp"

using namespace tvblf;

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// The bench experiment inputs, converted to radians at construction just as
// config ingestion does.
FeasibilityInputs bench_inputs() {
    FeasibilityInputs in;
    in.bounds = default_bounds(HelicopterParams::quanser());
    in.phiE = std::make_shared<PpfEnvelope>(11.0 * kDegToRad, 1.0 * kDegToRad,
                                            0.2, 1.0);
    in.phiEdot = std::make_shared<PpfEnvelope>(4.5 * kDegToRad,
                                               1.5 * kDegToRad, 0.1, 1.0);
    in.phiTau = std::make_shared<PpfEnvelope>(6.0, 5.0, 0.2, 1.0);
    in.phiQdotd =
        std::make_shared<ConstantEnvelope>(2.0 * 0.5 * kDegToRad);
    in.phiQddotd =
        std::make_shared<ConstantEnvelope>(2.0 * 0.25 * kDegToRad);
    in.K = Mat2(Vec2(1.5, 0.2).asDiagonal());
    in.grid = TimeGrid::over(60.0, 0.01);
    return in;
}

}  // namespace

TEST_CASE("quadratic coefficient of the demand bound") {
    BoundConstants b = default_bounds(HelicopterParams::quanser());
    CHECK(psi1(b) == doctest::Approx(6.0 * 0.91 * 0.03365).epsilon(1e-15));
    CHECK(psi1(b) == doctest::Approx(0.1837).epsilon(1e-3));

    BoundConstants noCoriolis = b;
    noCoriolis.kv = 0.0;
    CHECK(psi1(noCoriolis) == 0.0);
    BoundConstants doubled = b;
    doubled.thetaBar *= 2.0;
    CHECK(psi1(doubled) == doctest::Approx(2.0 * psi1(b)).epsilon(1e-15));
}

TEST_CASE("linear coefficient reduces to the gain ceiling") {
    Mat2 K = Mat2(Vec2(1.5, 0.2).asDiagonal());
    BoundConstants zero;
    zero.km1 = zero.km2 = 1.0;  // irrelevant here
    ConstantEnvelope still(0.0);
    CHECK(psi2(0.0, zero, 0.5, K, 1.0, still) ==
          doctest::Approx(1.5).epsilon(1e-15));

    // Term-by-term evaluation against the closed formula.
    BoundConstants b = default_bounds(HelicopterParams::quanser());
    const double alpha = 0.359090909090909, phiE0 = 11.0 * kDegToRad;
    ConstantEnvelope qdotd(2.0 * 0.5 * kDegToRad);
    double expected =
        b.thetaBar * (2.0 * alpha * b.km2 +
                      5.0 * b.kv * (alpha * phiE0 + qdotd.value(3.0)) +
                      2.0 * b.kf2) +
        1.5;
    CHECK(psi2(3.0, b, alpha, K, phiE0, qdotd) ==
          doctest::Approx(expected).epsilon(1e-14));

    // Monotone in the reference-velocity bound.
    ConstantEnvelope faster(1.0);
    CHECK(psi2(3.0, b, alpha, K, phiE0, faster) >
          psi2(3.0, b, alpha, K, phiE0, qdotd));
}

TEST_CASE("constant demand term is floored by gravity") {
    BoundConstants b = default_bounds(HelicopterParams::quanser());
    ConstantEnvelope still(0.0);

    // Static reference and no filtering: only gravity and static friction.
    CHECK(psi3(0.0, b, 0.0, 1.0, still, still) ==
          doctest::Approx(b.thetaBar * (b.kg + b.kf1)).epsilon(1e-14));

    const double alpha = 0.359090909090909, phiE0 = 11.0 * kDegToRad;
    ConstantEnvelope qdotd(2.0 * 0.5 * kDegToRad), qddotd(2.0 * 0.25 * kDegToRad);
    double speed = alpha * phiE0 + qdotd.value(1.0);
    double expected =
        b.thetaBar * (b.km2 * (alpha * alpha * phiE0 + qddotd.value(1.0)) +
                      b.kv * speed * speed + b.kg + b.kf1 + b.kf2 * speed);
    double got = psi3(1.0, b, alpha, phiE0, qdotd, qddotd);
    CHECK(got == doctest::Approx(expected).epsilon(1e-14));
    CHECK(got >= b.thetaBar * b.kg);
    CHECK(got == doctest::Approx(0.91 * 2.514).epsilon(0.05));  // dominated
}

TEST_CASE("margin assembles the demand terms against the input bound") {
    BoundConstants b = default_bounds(HelicopterParams::quanser());
    Mat2 K = Mat2(Vec2(1.5, 0.2).asDiagonal());
    ConstantEnvelope phiTau(1.0e6), phiR(0.5);
    const double p1 = psi1(b), p2 = 7.0, p3 = 2.5;

    double m = c1_margin(1.0, phiTau, phiR, b, p1, p2, p3, K, false);
    // Static tube: |phiRdot| = 0; lammin(K) = 0.2.
    double required = (p1 * 0.5 + (p2 - 0.2)) * 0.5 + p3;
    CHECK(m == doctest::Approx(1.0e6 - required).epsilon(1e-12));
    CHECK(m > 0.0);

    CHECK(c1_margin(1.0, phiTau, phiR, b, p1, p2, p3, K, true) ==
          doctest::Approx(m - b.dBar).epsilon(1e-12));

    // A 0.01 ceiling is below the gravity floor of the demand.
    ConstantEnvelope tiny(0.01);
    CHECK(c1_margin(1.0, tiny, phiR, b, p1, p2, p3, K, false) < 0.0);
}

TEST_CASE("bench certificate is feasible with the selected gain") {
    FeasibilityInputs in = bench_inputs();
    FeasibilityReport rep = check_feasibility(in);
    CHECK(rep.feasible);
    CHECK(rep.failureReason.empty());
    CHECK(rep.alphaSelected ==
          doctest::Approx(4.5 / 11.0 - 0.05).epsilon(1e-12));
    CHECK(rep.worstMargin ==
          doctest::Approx(2.6938510273729244).epsilon(1e-9));
    CHECK(rep.worstTime == doctest::Approx(60.0).epsilon(1e-12));
    CHECK(rep.gridStep == doctest::Approx(0.01).epsilon(1e-15));
    CHECK(rep.margins.size() == in.grid.size());
    CHECK(rep.margins.front().t == 0.0);
    CHECK(rep.margins.back().t == 60.0);
    CHECK(rep.phiR);
    CHECK_FALSE(rep.phiRDescriptor.empty());

    // Every grid sample is consistent: margin = phiTau - required.
    for (std::size_t i = 0; i < rep.margins.size(); i += 500) {
        const MarginSample& s = rep.margins[i];
        CHECK(s.margin ==
              doctest::Approx(s.phiTau - s.required).epsilon(1e-12));
        CHECK(s.margin > 0.0);
    }
}

TEST_CASE("shrinking the input envelope flips the verdict") {
    FeasibilityInputs in = bench_inputs();
    in.phiTau = std::make_shared<ScaledEnvelope>(in.phiTau, 1e-3);
    FeasibilityReport rep = check_feasibility(in);
    CHECK_FALSE(rep.feasible);
    CHECK(rep.failureReason == "C1Violated");
    CHECK(rep.worstMargin ==
          doctest::Approx(-2.417579496021722).epsilon(1e-9));
    CHECK_FALSE(rep.detail.empty());
    CHECK(rep.phiR);  // the tube itself was fine
}

TEST_CASE("disturbed margins shift down by the disturbance bound") {
    FeasibilityInputs in = bench_inputs();
    FeasibilityReport plain = check_feasibility(in);
    in.disturbed = true;
    FeasibilityReport shifted = check_feasibility(in);
    CHECK(shifted.feasible);
    CHECK(shifted.disturbed);
    REQUIRE(shifted.margins.size() == plain.margins.size());
    for (std::size_t i = 0; i < plain.margins.size(); i += 100)
        CHECK(shifted.margins[i].margin ==
              doctest::Approx(plain.margins[i].margin - in.bounds.dBar)
                  .epsilon(1e-12));
}

TEST_CASE("enlarging the input envelope never hurts; shrinking the tube helps") {
    FeasibilityInputs in = bench_inputs();
    FeasibilityReport base = check_feasibility(in);

    FeasibilityInputs roomier = in;
    roomier.phiTau = std::make_shared<ScaledEnvelope>(in.phiTau, 2.0);
    FeasibilityReport wide = check_feasibility(roomier);
    CHECK(wide.feasible);
    REQUIRE(wide.margins.size() == base.margins.size());
    for (std::size_t i = 0; i < base.margins.size(); i += 100)
        CHECK(wide.margins[i].margin >= base.margins[i].margin - 1e-12);

    // Larger eps2 means a smaller tube and (phiRdot unchanged by the shift)
    // a demand that can only go down.
    FeasibilityInputs tighter = in;
    tighter.eps2 = 0.5 * base.eps2;
    FeasibilityReport lessShrunk = check_feasibility(tighter);
    FeasibilityInputs shrunkMore = in;
    shrunkMore.eps2 = 2.0 * base.eps2;
    FeasibilityReport moreShrunk = check_feasibility(shrunkMore);
    CHECK(moreShrunk.worstMargin >= lessShrunk.worstMargin - 1e-12);
}

TEST_CASE("explicit slope gain is honored or rejected") {
    FeasibilityInputs in = bench_inputs();
    in.alpha = 0.25;
    FeasibilityReport rep = check_feasibility(in);
    CHECK(rep.alphaSelected == 0.25);
    CHECK(rep.feasible);

    // The rate-ratio inequality is strict; a gain at or above the infimum
    // ratio cannot certify anything.
    in.alpha = 4.5 / 11.0 + 1e-9;
    FeasibilityReport degenerate = check_feasibility(in);
    CHECK_FALSE(degenerate.feasible);
    CHECK(degenerate.failureReason == "GainDegenerate");
    CHECK_FALSE(degenerate.phiR);
    CHECK_FALSE(degenerate.detail.empty());
}

TEST_CASE("collapsed conversion branch reports a degenerate envelope") {
    FeasibilityInputs in = bench_inputs();
    in.phiE = std::make_shared<ConstantEnvelope>(2.0);
    in.phiEdot = std::make_shared<ConstantEnvelope>(1.0 + 1e-9);
    in.alpha = 0.5;   // admissible: ratio is 0.5 + 5e-10 > alpha... strictly
    in.eps2 = 0.01;   // but larger than the collapsed branch
    FeasibilityReport rep = check_feasibility(in);
    CHECK_FALSE(rep.feasible);
    CHECK(rep.failureReason == "EnvelopeDegenerate");
    CHECK_FALSE(rep.phiR);
}

TEST_CASE("selection failure surfaces as a degenerate gain") {
    FeasibilityInputs in = bench_inputs();
    in.phiE = std::make_shared<ConstantEnvelope>(2.0);
    in.phiEdot = std::make_shared<ConstantEnvelope>(0.05);
    in.eps1 = 0.5;  // exceeds the rate ratio 0.025
    FeasibilityReport rep = check_feasibility(in);
    CHECK_FALSE(rep.feasible);
    CHECK(rep.failureReason == "GainDegenerate");
}
