#include <catch2/catch_amalgamated.hpp>

#include "fic/subset.hpp"

using namespace fic;

TEST_CASE("subset ids are canonical sorted sets") {
  SubsetId a({3, 1, 2});
  SubsetId b({1, 2, 3});
  CHECK(a == b);
  CHECK(a.size() == 3);
  CHECK(SubsetId({2, 2, 1}) == SubsetId({1, 2}));
  CHECK_THROWS_AS(SubsetId({0, 1}), validation_error);
  CHECK_THROWS_AS(SubsetId({-2}), validation_error);
}

TEST_CASE("complement and membership") {
  SubsetId s({1, 3});
  CHECK(s.contains(1));
  CHECK_FALSE(s.contains(2));
  CHECK(s.complement(4) == SubsetId({2, 4}));
  CHECK(SubsetId::empty().complement(3) == SubsetId::full(3));
  CHECK_THROWS_AS(s.validate_within(2), validation_error);
}

TEST_CASE("projection matrix selects rows") {
  SubsetId s({2});
  Eigen::MatrixXd pi = s.projection(3);
  REQUIRE(pi.rows() == 1);
  REQUIRE(pi.cols() == 3);
  CHECK(pi(0, 1) == 1.0);
  CHECK(pi.sum() == 1.0);
  Eigen::VectorXd v(3);
  v << 5, 7, 9;
  CHECK(s.pick(v)(0) == 7.0);
}

TEST_CASE("family enumeration") {
  SECTION("all") {
    auto fam = subset_family(SubsetFamily::all, 3);
    CHECK(fam.size() == 8);
  }
  SECTION("nested gives q+1 candidates") {
    auto fam = subset_family(SubsetFamily::nested, 3);
    REQUIRE(fam.size() == 4);
    CHECK(fam[0] == SubsetId::empty());
    CHECK(fam[1] == SubsetId({1}));
    CHECK(fam[2] == SubsetId({1, 2}));
    CHECK(fam[3] == SubsetId({1, 2, 3}));
  }
  SECTION("explicit list is sorted and deduplicated") {
    auto fam = subset_family(SubsetFamily::explicit_list, 4,
                             {SubsetId({2, 1}), SubsetId({1, 2}), SubsetId({3})});
    REQUIRE(fam.size() == 2);
    CHECK(fam[0] == SubsetId({3}));      // parsimony order: size first
    CHECK(fam[1] == SubsetId({1, 2}));
  }
  SECTION("2^q guard") {
    CHECK_THROWS_AS(subset_family(SubsetFamily::all, 21), validation_error);
    CHECK_NOTHROW(subset_family(SubsetFamily::nested, 21));
  }
}

TEST_CASE("parsimony tie-break order") {
  CHECK(subset_parsimony_less(SubsetId({1}), SubsetId({2})));
  CHECK(subset_parsimony_less(SubsetId({3}), SubsetId({1, 2})));
  CHECK(subset_lex_less(SubsetId({1, 3}), SubsetId({2})));
}
