#include <algorithm>
#include <sstream>

#include "doctest.h"
#include "qcd/tables.hpp"
#include "support.hpp"

using namespace qcd;

TEST_CASE("table invariants on the example model") {
    const auto model = qcd::testing::reduced_model();
    const DivergenceTables tables(model);
    REQUIRE(tables.num_actions() == 10);
    REQUIRE(tables.num_params() == 11);
    for (std::uint32_t t = 0; t < tables.num_params(); ++t) {
        const ParamId th{t};
        double row_max = 0.0;
        for (std::uint32_t a = 0; a < tables.num_actions(); ++a) {
            const ActionId act{a};
            CHECK(tables.kl(act, th) >= 0.0);
            row_max = std::max(row_max, tables.kl(act, th));
            CHECK(tables.cross_drift(act, th, th) == doctest::Approx(tables.kl(act, th)).epsilon(1e-10));
            for (std::uint32_t u = 0; u < tables.num_params(); ++u) {
                const ParamId uu{u};
                CHECK(tables.cross_drift(act, th, uu) <= tables.kl(act, th) + 1e-12);
                const double r = tables.bhattacharyya(act, th, uu);
                CHECK(r > 0.0);
                CHECK(r <= 1.0);
            }
        }
        CHECK(tables.kl_max(th) == row_max);
        CHECK(tables.kl_max(th) > 0.0);
        CHECK(tables.kl(tables.best_action(th), th) == tables.kl_max(th));
    }
    CHECK(tables.rho() > 0.0);
    CHECK(tables.rho() < 1.0);
    CHECK(tables.rho() == doctest::Approx(rho_max(model)));
    CHECK(tables.second_moment() == doctest::Approx(1.25));
}

TEST_CASE("best action and maximizers") {
    const auto model = qcd::testing::reduced_model();
    const DivergenceTables tables(model);
    const ParamId target = model.find_param({0, 1, 2});
    CHECK(tables.best_action(target) == ActionId{2});
    CHECK(tables.kl_max(target) == 0.5);
    REQUIRE(tables.maximizing_actions(target).size() == 1);

    const MultichannelGaussianModel wide({1.0, 0.5, 1.0, 1.0}, {{0, 2, 3}, {1}});
    const DivergenceTables wt(wide);
    const auto m = wt.maximizing_actions(ParamId{0});
    REQUIRE(m.size() == 3);
    CHECK(m[0] == ActionId{0});
    CHECK(m[2] == ActionId{3});
    CHECK(wt.best_action(ParamId{0}) == ActionId{0});
}

TEST_CASE("validate_assumptions") {
    const auto model = qcd::testing::reduced_model();
    const DivergenceTables tables(model);
    const auto ok = validate_assumptions(model, tables);
    CHECK(ok.passed);
    CHECK(ok.failures.empty());
    // Channel 1 alone does not separate {2} from {3}, but channels 2 and 3 do.
    CHECK(model.kl_between(ActionId{0}, model.find_param({1}), model.find_param({2})) == 0.0);

    const MultichannelGaussianModel blind({0.0, 1.0}, {{0}, {1}});
    const DivergenceTables bt(blind);
    const auto bad = validate_assumptions(blind, bt);
    CHECK_FALSE(bad.passed);
    CHECK_FALSE(bad.detectable[0]);
    CHECK(bad.detectable[1]);
}

TEST_CASE("lazy tables for large parameter spaces agree with the model") {
    const auto model = MultichannelGaussianModel::with_all_subsets({0.5, 0.5, 1, 1, 1, 1, 1, 1});
    const DivergenceTables tables(model);
    REQUIRE(tables.num_params() > DivergenceTables::kDenseParamLimit);
    const ParamId a = model.find_param({0, 1, 2});
    const ParamId b = model.find_param({3});
    CHECK(tables.cross_drift(ActionId{2}, a, b) == model.cross_drift(ActionId{2}, a, b));
    CHECK(tables.bhattacharyya(ActionId{3}, a, b) == model.bhattacharyya(ActionId{3}, a, b));
    CHECK(tables.bhattacharyya(ActionId{3}, a, a) == 1.0);
    CHECK(tables.rho() < 1.0);
}

TEST_CASE("tables CSV") {
    const auto model = qcd::testing::reduced_model();
    const DivergenceTables tables(model);
    std::ostringstream out;
    write_tables_csv(out, model, tables);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "action,theta,I,is_best");
    int rows = 0, best = 0;
    while (std::getline(in, line)) {
        ++rows;
        if (line.back() == '1') ++best;
    }
    CHECK(rows == 110);
    CHECK(best >= 11);
    CHECK(out.str().find("3,\"{1,2,3}\",0.5,1") != std::string::npos);
}
