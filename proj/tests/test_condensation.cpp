#include "test_helpers.hpp"

#include <bcmer/condensation.hpp>

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace bcmer;
using bcmer::testing::make_pool;
using bcmer::testing::three_point_pool;

TEST(NearestEnemy, OnlyEnemy)
{
	auto pool = make_pool(2, 2, {{{0, 0}, {0}}, {{2, 0}, {1}}});
	EXPECT_EQ(nearest_enemy(pool, 0), std::optional<std::size_t>{1});
}

TEST(NearestEnemy, SkipsSameActionNeighbour)
{
	EXPECT_EQ(nearest_enemy(three_point_pool(), 1), std::optional<std::size_t>{2});
}

TEST(NearestEnemy, NoneInSingleActionPool)
{
	auto pool = make_pool(2, 2, {{{0, 0}, {0}}, {{1, 0}, {0}}});
	EXPECT_FALSE(nearest_enemy(pool, 0).has_value());
	EXPECT_FALSE(nearest_enemy(pool, 1).has_value());
}

TEST(NearestEnemy, TieGoesToLowestIndex)
{
	auto pool = make_pool(1, 2, {{{0}, {0}}, {{1}, {1}}, {{-1}, {1}}});
	EXPECT_EQ(nearest_enemy(pool, 0), std::optional<std::size_t>{1});
}

TEST(NearestEnemy, IndexOutOfRange)
{
	EXPECT_THROW(nearest_enemy(three_point_pool(), 3), IndexError);
}

TEST(WitnessSet, HandExamples)
{
	auto pool = three_point_pool();
	EXPECT_EQ(witness_set(pool, 0, 2), (std::vector<std::size_t>{1}));
	EXPECT_TRUE(witness_set(pool, 1, 2).empty());
	auto two = make_pool(2, 2, {{{0, 0}, {0}}, {{2, 0}, {1}}});
	EXPECT_TRUE(witness_set(two, 0, 1).empty());
}

TEST(WitnessSet, StrictInequality)
{
	// (2,0) sits exactly on the sphere around (1,0) of radius 1
	auto pool = make_pool(2, 2, {{{0, 0}, {0}}, {{2, 0}, {0}}, {{1, 0}, {1}}});
	EXPECT_TRUE(witness_set(pool, 0, 2).empty());
	EXPECT_EQ(classify_point(pool, 0), PointClass::Boundary);
}

TEST(WitnessSet, RejectsWrongEnemy)
{
	auto pool = make_pool(2, 2, {{{0, 0}, {0}}, {{1, 0}, {1}}, {{5, 0}, {1}}});
	EXPECT_THROW(witness_set(pool, 0, 2), ContractError);
	EXPECT_THROW(witness_set(pool, 0, 9), IndexError);
}

TEST(ClassifyPoint, HandExamples)
{
	auto two = make_pool(2, 2, {{{0, 0}, {0}}, {{2, 0}, {1}}});
	EXPECT_EQ(classify_point(two, 0), PointClass::Boundary);
	auto pool = three_point_pool();
	EXPECT_EQ(classify_point(pool, 0), PointClass::Interior);
	EXPECT_EQ(classify_point(pool, 1), PointClass::Boundary);
	EXPECT_EQ(classify_point(pool, 2), PointClass::Boundary);
	EXPECT_THROW(classify_point(pool, 7), IndexError);
}

TEST(Condense, ThreePointExample)
{
	auto [kept, result] = condense(three_point_pool());
	EXPECT_EQ(result.boundary_indices, (std::vector<std::size_t>{1, 2}));
	EXPECT_EQ(result.interior_indices, (std::vector<std::size_t>{0}));
	EXPECT_DOUBLE_EQ(result.retained_fraction, 2.0 / 3.0);
	ASSERT_EQ(kept.size(), 2u);
	EXPECT_EQ(kept.experience(0), (Experience{{1, 0}, {0}}));
	EXPECT_EQ(kept.experience(1), (Experience{{3, 0}, {1}}));
}

TEST(Condense, TwoPointTwoActionKeepsBoth)
{
	std::mt19937_64 rng(1);
	std::uniform_real_distribution<double> u(-5, 5);
	for(int i = 0; i < 20; ++i)
	{
		auto pool = make_pool(3, 2, {{{u(rng), u(rng), u(rng)}, {0}}, {{u(rng), u(rng), u(rng)}, {1}}});
		EXPECT_EQ(condense(pool).pool.size(), 2u);
	}
}

TEST(Condense, SingleActionPoolRetainedWhole)
{
	auto pool = make_pool(2, 3, {{{0, 0}, {2}}, {{1, 0}, {2}}, {{0.5, 0.5}, {2}}});
	auto c = condense(pool);
	EXPECT_EQ(c.pool, pool);
	EXPECT_EQ(c.result.retained_fraction, 1.0);
}

TEST(Condense, EmptyPoolThrows)
{
	EXPECT_THROW(condense(ExperiencePool(2, 2)), EmptyPoolError);
}

TEST(Condense, PartitionsEveryIndex)
{
	std::mt19937_64 rng(21);
	for(int trial = 0; trial < 30; ++trial)
	{
		auto pool = bcmer::testing::random_pool(rng, 50 + trial * 10, 1 + trial % 4, 2 + trial % 3);
		auto r = condense(pool).result;
		std::vector<int> seen(pool.size(), 0);
		for(auto i : r.boundary_indices)
			++seen[i];
		for(auto i : r.interior_indices)
			++seen[i];
		for(auto s : seen)
			EXPECT_EQ(s, 1);
		EXPECT_TRUE(std::is_sorted(r.boundary_indices.begin(), r.boundary_indices.end()));
		EXPECT_DOUBLE_EQ(r.retained_fraction, double(r.boundary_indices.size()) / double(pool.size()));
		for(auto i : r.boundary_indices)
			EXPECT_EQ(classify_point(pool, i), PointClass::Boundary);
		for(auto i : r.interior_indices)
			EXPECT_EQ(classify_point(pool, i), PointClass::Interior);
	}
}

TEST(Condense, LatticeTiesMatchPointwiseClassification)
{
	// integer states: many equal distances and exact duplicates
	std::mt19937_64 rng(17);
	std::uniform_int_distribution<int> cell(-3, 3);
	for(int trial = 0; trial < 20; ++trial)
	{
		std::size_t const dim = 1 + trial % 3;
		std::uniform_int_distribution<std::uint32_t> act(0, 1 + trial % 3);
		ExperiencePool pool(dim, 4);
		StateVector s(dim);
		for(int i = 0; i < 120; ++i)
		{
			for(auto& v : s)
				v = cell(rng);
			pool.push_back(s, ActionId{act(rng)});
		}
		auto r = condense(pool, {3}).result;
		for(auto i : r.boundary_indices)
			EXPECT_EQ(classify_point(pool, i), PointClass::Boundary) << trial << ' ' << i;
		for(auto i : r.interior_indices)
			EXPECT_EQ(classify_point(pool, i), PointClass::Interior) << trial << ' ' << i;
	}
}

TEST(Condense, MutualNearestEnemiesAreBoundary)
{
	std::mt19937_64 rng(8);
	for(int trial = 0; trial < 20; ++trial)
	{
		auto pool = bcmer::testing::random_pool(rng, 300, 2 + trial % 3, 3);
		for(std::size_t i = 0; i < pool.size(); ++i)
		{
			auto e = nearest_enemy(pool, i);
			if(e && nearest_enemy(pool, *e) == i)
			{
				EXPECT_EQ(classify_point(pool, i), PointClass::Boundary);
				EXPECT_EQ(classify_point(pool, *e), PointClass::Boundary);
			}
		}
	}
}

TEST(Condense, DeterministicAcrossRunsAndWorkerCounts)
{
	std::mt19937_64 rng(99);
	auto pool = bcmer::testing::random_pool(rng, 1500, 3, 3);
	auto reference = condense(pool, {1});
	for(unsigned w : {1u, 2u, 3u, 8u, 0u})
	{
		auto again = condense(pool, {w});
		EXPECT_EQ(again.result, reference.result);
		EXPECT_EQ(again.pool, reference.pool);
	}
}

TEST(CondensationFile, RoundTrip)
{
	auto r = condense(three_point_pool()).result;
	std::stringstream ss;
	write_condensation(ss, r);
	EXPECT_EQ(ss.str(), "#condensation retained=2 total=3\n0 I\n1 B\n2 B\n");
	EXPECT_EQ(read_condensation(ss), r);
}

TEST(CondensationFile, RejectsMismatchedCounts)
{
	std::stringstream ss("#condensation retained=1 total=3\n0 I\n1 B\n2 B\n");
	EXPECT_THROW(read_condensation(ss), FormatError);
}

TEST(SimplexOracle, PointInsideTriangle)
{
	auto pool = make_pool(2, 2, {{{0.5, 0.25}, {0}}, {{0, 0}, {0}}, {{2, 0}, {0}}, {{0, 2}, {0}}});
	EXPECT_TRUE(simplex_interior_oracle(pool, 0));
}

TEST(SimplexOracle, PointOutsideHull)
{
	auto pool = make_pool(2, 2, {{{3, 3}, {0}}, {{0, 0}, {0}}, {{2, 0}, {0}}, {{0, 2}, {0}}, {{1, 1}, {0}}});
	EXPECT_FALSE(simplex_interior_oracle(pool, 0));
}

TEST(SimplexOracle, OtherActionsDoNotFormTriangles)
{
	auto pool = make_pool(2, 2, {{{0.5, 0.25}, {1}}, {{0, 0}, {0}}, {{2, 0}, {0}}, {{0, 2}, {0}}});
	EXPECT_FALSE(simplex_interior_oracle(pool, 0));
}

TEST(SimplexOracle, CoincidentWithVertex)
{
	auto pool = make_pool(2, 2, {{{0, 0}, {0}}, {{0, 0}, {0}}, {{2, 0}, {0}}, {{0, 2}, {0}}});
	EXPECT_TRUE(simplex_interior_oracle(pool, 0));
}

TEST(SimplexOracle, PreconditionErrors)
{
	auto pool3 = make_pool(3, 2, {{{0, 0, 0}, {0}}});
	EXPECT_THROW(simplex_interior_oracle(pool3, 0), UnsupportedDimensionError);
	std::mt19937_64 rng(2);
	auto big = bcmer::testing::random_pool(rng, 201, 2, 2);
	EXPECT_THROW(simplex_interior_oracle(big, 0), SizeError);
	EXPECT_NO_THROW(simplex_interior_oracle(big, 0, {.max_pool_size = 300}));
}

// Invariants expected of the boundary test that it does not guarantee in
// general. Registered as a separate ctest entry.

TEST(ClaimedInvariant, RecondenseRemovesNothing)
{
	for(std::uint64_t seed = 0; seed < 10; ++seed)
	{
		std::mt19937_64 rng(seed);
		auto pool = bcmer::testing::random_pool(rng, 500, 2, 3);
		auto once = condense(pool).pool;
		auto twice = condense(once).pool;
		EXPECT_EQ(twice.size(), once.size()) << "seed " << seed;
	}
}

TEST(ClaimedInvariant, NearestNeighbourActionPreserved)
{
	for(std::uint64_t seed = 0; seed < 5; ++seed)
	{
		std::mt19937_64 rng(seed);
		auto pool = bcmer::testing::random_pool(rng, 400, 2, 2);
		auto kept = condense(pool).pool;
		std::uniform_real_distribution<double> u(-1.2, 1.2);
		std::size_t mismatches = 0;
		for(int q = 0; q < 10000; ++q)
		{
			std::vector<double> s{u(rng), u(rng)};
			mismatches += pool.action(bcmer::testing::scan_nearest(pool, s)) !=
			              kept.action(bcmer::testing::scan_nearest(kept, s));
		}
		EXPECT_EQ(mismatches, 0u) << "seed " << seed;
	}
}
