#include "test_helpers.hpp"

#include <bcmer/condensation.hpp>
#include <bcmer/nearest_boundary.hpp>

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace bcmer;
using bcmer::testing::make_pool;

namespace
{

constexpr Backend all_backends[] = {Backend::Brute, Backend::KDTree, Backend::BallTree};

ExperiencePool grid_pool(std::mt19937_64& rng, std::size_t n, std::size_t dim)
{
	std::uniform_int_distribution<int> v(-4, 4);
	std::uniform_int_distribution<std::uint32_t> a(0, 3);
	ExperiencePool pool(dim, 4);
	StateVector s(dim);
	for(std::size_t i = 0; i < n; ++i)
	{
		for(auto& x : s)
			x = v(rng);
		pool.push_back(s, ActionId{a(rng)});
	}
	return pool;
}

} // namespace

TEST(Predict, HandExamples)
{
	auto pool = make_pool(2, 2, {{{0, 0}, {0}}, {{3, 0}, {1}}});
	for(auto b : all_backends)
	{
		auto m = fit(pool, b);
		std::vector<double> q{1, 0}, tie{1.5, 0};
		auto p = m.predict(q);
		EXPECT_EQ(p.action, ActionId{0});
		EXPECT_EQ(p.explanation.nearest_index, 0u);
		EXPECT_EQ(p.explanation.nearest_distance, 1.0);
		auto t = m.predict(tie);
		EXPECT_EQ(t.action, ActionId{0});
		EXPECT_EQ(t.explanation.nearest_index, 0u);
	}
}

TEST(Predict, CondensedFixtureMatchesFullPool)
{
	auto full = bcmer::testing::three_point_pool();
	auto kept = condense(full).pool;
	std::vector<double> q{-5, 0};
	ASSERT_EQ(full.action(bcmer::testing::scan_nearest(full, q)), ActionId{0});
	for(auto b : all_backends)
	{
		auto p = fit(kept, b).predict(q);
		EXPECT_EQ(p.action, ActionId{0});
		EXPECT_EQ(p.explanation.nearest_index, 0u);
		EXPECT_EQ(p.explanation.nearest_distance, 6.0);
	}
}

TEST(Predict, Errors)
{
	EXPECT_THROW(fit(ExperiencePool(2, 2), Backend::KDTree), EmptyPoolError);
	auto m = fit(bcmer::testing::three_point_pool(), Backend::BallTree);
	std::vector<double> q{1, 2, 3};
	EXPECT_THROW(m.predict(q), DimensionError);
	EXPECT_THROW(parse_backend("octree"), NameError);
}

TEST(Predict, StoresPoolVerbatim)
{
	auto pool = bcmer::testing::three_point_pool();
	for(auto b : all_backends)
		EXPECT_EQ(fit(pool, b).pool(), pool);
}

TEST(Backends, EquivalentOnRandomRealPools)
{
	std::mt19937_64 rng(1234);
	for(std::size_t dim : {2u, 3u, 4u, 8u})
		for(std::size_t n : {10u, 17u, 100u, 700u, 2000u})
		{
			auto pool = bcmer::testing::random_pool(rng, n, dim, 3);
			auto brute = fit(pool, Backend::Brute);
			auto kd = fit(pool, Backend::KDTree);
			auto ball = fit(pool, Backend::BallTree);
			std::uniform_real_distribution<double> u(-1.5, 1.5);
			StateVector q(dim);
			for(int i = 0; i < 500; ++i)
			{
				for(auto& v : q)
					v = u(rng);
				auto oracle = bcmer::testing::scan_nearest(pool, q);
				auto pb = brute.predict(q), pk = kd.predict(q), pl = ball.predict(q);
				ASSERT_EQ(pb.explanation.nearest_index, oracle);
				ASSERT_EQ(pk.explanation.nearest_index, oracle) << "kd d=" << dim << " n=" << n;
				ASSERT_EQ(pl.explanation.nearest_index, oracle) << "ball d=" << dim << " n=" << n;
				ASSERT_EQ(pk.action, pb.action);
				ASSERT_EQ(pl.action, pb.action);
				ASSERT_DOUBLE_EQ(pb.explanation.nearest_distance, distance(q, pool.state(oracle)));
			}
		}
}

TEST(Backends, EquivalentUnderHeavyTies)
{
	// integer lattice states with integer queries produce many equidistant candidates
	std::mt19937_64 rng(77);
	for(std::size_t dim : {2u, 3u})
		for(std::size_t n : {30u, 400u, 1500u})
		{
			auto pool = grid_pool(rng, n, dim);
			auto kd = fit(pool, Backend::KDTree);
			auto ball = fit(pool, Backend::BallTree);
			std::uniform_int_distribution<int> v(-6, 6);
			StateVector q(dim);
			for(int i = 0; i < 1000; ++i)
			{
				for(auto& x : q)
					x = v(rng) * 0.5;
				auto oracle = bcmer::testing::scan_nearest(pool, q);
				ASSERT_EQ(kd.predict(q).explanation.nearest_index, oracle);
				ASSERT_EQ(ball.predict(q).explanation.nearest_index, oracle);
			}
		}
}

TEST(Backends, IdenticalPointsDoNotBreakConstruction)
{
	ExperiencePool pool(2, 2);
	std::vector<double> s{1, 1};
	for(int i = 0; i < 100; ++i)
		pool.push_back(s, ActionId{static_cast<std::uint32_t>(i % 2)});
	for(auto b : all_backends)
	{
		auto p = fit(pool, b).predict(s);
		EXPECT_EQ(p.explanation.nearest_index, 0u);
		EXPECT_EQ(p.action, ActionId{0});
	}
}

TEST(Backends, PredictIsPure)
{
	std::mt19937_64 rng(3);
	auto pool = bcmer::testing::random_pool(rng, 300, 3, 2);
	auto m = fit(pool, Backend::KDTree);
	std::vector<double> q{0.1, 0.2, 0.3};
	auto first = m.predict(q);
	for(int i = 0; i < 10; ++i)
	{
		auto again = m.predict(q);
		EXPECT_EQ(again.explanation.nearest_index, first.explanation.nearest_index);
		EXPECT_EQ(again.explanation.nearest_distance, first.explanation.nearest_distance);
	}
}

TEST(ModelFile, RoundTripRebuildsIndex)
{
	std::mt19937_64 rng(4);
	auto pool = bcmer::testing::random_pool(rng, 200, 2, 3);
	for(auto b : all_backends)
	{
		auto m = fit(pool, b);
		std::stringstream ss;
		write_model(ss, m);
		EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), "#nbmodel backend=" + std::string(to_string(b)));
		auto back = read_model(ss);
		EXPECT_EQ(back.backend(), b);
		EXPECT_EQ(back.pool(), pool);
		std::vector<double> q{0.3, -0.7};
		EXPECT_EQ(back.predict(q).explanation.nearest_index, m.predict(q).explanation.nearest_index);
	}
}
