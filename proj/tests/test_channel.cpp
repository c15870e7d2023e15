#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

using namespace qsb;

TEST_CASE("identity channel leaves states untouched") {
    std::mt19937_64 rng(21);
    DensityMatrix rho = testing::random_density(rng, 3);
    Matrix out = apply_channel(KrausChannel::identity(3), rho.mat);
    CHECK((out - rho.mat).norm() < 1e-15);
}

TEST_CASE("amplitude damping decays the excited state") {
    TimedChannelFamily fam = amplitude_damping_family(1.5);
    Matrix excited = Matrix::Zero(2, 2);
    excited(1, 1) = 1.0;
    for (double t : {0.1, 0.5, 1.0}) {
        double lambda = 1.0 - std::exp(-1.5 * t);
        Matrix out = apply_channel(fam(0.0, t), excited);
        CHECK(std::abs(out(0, 0).real() - lambda) < 1e-14);
        CHECK(std::abs(out(1, 1).real() - (1.0 - lambda)) < 1e-14);
    }
}

TEST_CASE("channel outputs remain valid density matrices") {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 100; ++trial) {
        KrausChannel ch = testing::random_channel(rng, 3, 3);
        DensityMatrix rho = testing::random_density(rng, 3);
        DensityMatrix out = apply_channel(ch, rho);
        CHECK_NOTHROW(validate_density(out.mat, tol::hermiticity, -1e-10, 1e-12));
    }
}

TEST_CASE("adjoint channel is unital for complete families") {
    std::mt19937_64 rng(23);
    KrausChannel ch = testing::random_channel(rng, 4, 2);
    Matrix out = apply_adjoint_channel(ch, Matrix::Identity(4, 4));
    CHECK((out - Matrix::Identity(4, 4)).norm() < 1e-10);
}

TEST_CASE("adjoint of amplitude damping on the excited projector") {
    TimedChannelFamily fam = amplitude_damping_family(1.5);
    Matrix proj = Matrix::Zero(2, 2);
    proj(1, 1) = 1.0;
    Matrix out = apply_adjoint_channel(fam(0.0, 1.0), proj);
    double lambda = 1.0 - std::exp(-1.5);
    CHECK(std::abs(out(0, 0)) < 1e-14);
    CHECK(std::abs(out(1, 1).real() - (1.0 - lambda)) < 1e-14);
}

TEST_CASE("trace duality between channel and adjoint") {
    std::mt19937_64 rng(24);
    for (int trial = 0; trial < 25; ++trial) {
        KrausChannel ch = testing::random_channel(rng, 3, 2);
        Matrix x = testing::random_complex_matrix(rng, 3);
        DensityMatrix rho = testing::random_density(rng, 3);
        Complex lhs = (x * apply_channel(ch, rho.mat)).trace();
        Complex rhs = (apply_adjoint_channel(ch, x) * rho.mat).trace();
        CHECK(std::abs(lhs - rhs) < 1e-10);
    }
}

TEST_CASE("composing with the identity reproduces the channel as a map") {
    std::mt19937_64 rng(25);
    KrausChannel ch = testing::random_channel(rng, 2, 2);
    KrausChannel composed = compose_channels(KrausChannel::identity(2), ch);
    CHECK(map_distance(composed.ops, ch.ops, 2) < 1e-14);
}

TEST_CASE("amplitude damping segments compose to the full interval") {
    TimedChannelFamily fam = amplitude_damping_family(1.5);
    for (double tau : {0.25, 0.5, 0.8}) {
        KrausChannel composed = compose_channels(fam(0.0, tau), fam(tau, 1.0));
        CHECK(map_distance(composed.ops, fam(0.0, 1.0).ops, 2) < 1e-14);
        CHECK(composed.completeness_violation() < 1e-10);
    }
}

TEST_CASE("composition preserves completeness for random channels") {
    std::mt19937_64 rng(26);
    for (int trial = 0; trial < 20; ++trial) {
        KrausChannel a = testing::random_channel(rng, 2, 2);
        KrausChannel b = testing::random_channel(rng, 2, 3);
        CHECK(compose_channels(a, b).completeness_violation() < 1e-10);
    }
}

TEST_CASE("timed families are the identity at equal times") {
    for (const TimedChannelFamily& fam :
         {amplitude_damping_family(1.5), depolarizing_family(2, 0.8),
          identity_family(2)}) {
        KrausChannel at_t = fam(0.7, 0.7);
        REQUIRE(at_t.ops.size() == 1);
        CHECK((at_t.ops[0] - Matrix::Identity(2, 2)).norm() < 1e-12);
    }
}

TEST_CASE("timed families satisfy the Markov composition law on a grid") {
    std::mt19937_64 rng(27);
    std::vector<TimedChannelFamily> fams{
        amplitude_damping_family(1.5), depolarizing_family(2, 1.1),
        testing::unitary_family(
            testing::fix_hamiltonian(testing::random_complex_matrix(rng, 2)))};
    for (const TimedChannelFamily& fam : fams) {
        for (double t1 : {0.0, 0.3}) {
            for (double t2 : {0.4, 0.6}) {
                for (double t3 : {0.75, 1.0}) {
                    KrausChannel stepwise =
                        compose_channels(fam(t1, t2), fam(t2, t3));
                    CHECK(map_distance(stepwise.ops, fam(t1, t3).ops, 2) < 1e-10);
                }
            }
        }
    }
}

TEST_CASE("depolarizing at full strength is completely mixing") {
    TimedChannelFamily fam = depolarizing_family(3, 50.0);
    std::mt19937_64 rng(28);
    DensityMatrix rho = testing::random_density(rng, 3);
    Matrix out = apply_channel(fam(0.0, 1.0), rho.mat);
    CHECK((out - Matrix::Identity(3, 3) / 3.0).norm() < 1e-12);
}

TEST_CASE("dimension mismatches are rejected") {
    KrausChannel ch = KrausChannel::identity(2);
    Matrix rho3 = Matrix::Identity(3, 3) / 3.0;
    CHECK_THROWS_AS(apply_channel(ch, rho3), DimensionMismatch);
    CHECK_THROWS_AS(compose_channels(ch, KrausChannel::identity(3)),
                    DimensionMismatch);
}
