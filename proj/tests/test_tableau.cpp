#include <catch2/catch_amalgamated.hpp>

#include "rfm/tableau.hpp"

using namespace rfm;

TEST_CASE("ars443: structure of the printed tableau") {
    Tableau t = ars443();
    REQUIRE(t.stages == 4);
    REQUIRE(t.order == 3);

    // Implicit part: lower triangular with nonzero diagonal (DIRK).
    for (int i = 0; i < 4; ++i) {
        CHECK(t.a(i, i) == 0.5);
        for (int j = i + 1; j < 4; ++j) CHECK(t.a(i, j) == 0.0);
    }
    // Explicit part: strictly lower triangular over padded arguments.
    for (int i = 0; i < 5; ++i)
        for (int j = i; j < 5; ++j) CHECK(t.a_hat(i, j) == 0.0);

    // Stiffly accurate in both parts: the update is the last stage.
    CHECK(t.b.transpose() == t.a.row(3));
    CHECK(t.b_hat.transpose() == t.a_hat.row(4));

    // Padded explicit abscissae are (0, c).
    CHECK(t.c_hat[0] == 0.0);
    for (int i = 0; i < 4; ++i) CHECK(t.c_hat[i + 1] == t.c[i]);
}

TEST_CASE("ars443: all consistency and order-3 residuals vanish to rounding") {
    Tableau t = ars443();
    auto residuals = order_condition_residuals(t);
    CHECK(residuals.size() >= 12);
    for (const auto& r : residuals) {
        INFO(r.name);
        CHECK(r.residual <= 1e-14);
    }
}

TEST_CASE("imex1 is backward/forward Euler") {
    Tableau t = imex1();
    REQUIRE(t.stages == 1);
    CHECK(t.a(0, 0) == 1.0);
    CHECK(t.b[0] == 1.0);
    CHECK(t.c[0] == 1.0);
    CHECK(t.a_hat(1, 0) == 1.0);
    CHECK(t.b_hat[0] == 1.0);
    CHECK(t.b_hat[1] == 0.0);
    for (const auto& r : order_condition_residuals(t)) {
        INFO(r.name);
        CHECK(r.residual <= 1e-14);
    }
}

TEST_CASE("tableau lookup by name") {
    CHECK(tableau_by_name("ars443").name == "ars443");
    CHECK(tableau_by_name("imex1").stages == 1);
    CHECK_THROWS(tableau_by_name("rk4"));
}
