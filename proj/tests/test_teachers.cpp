#include <bcmer/environments.hpp>
#include <bcmer/evaluation.hpp>
#include <bcmer/teachers.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace bcmer;

namespace
{

ActionId ask(Policy const& p, std::vector<double> s)
{
	return p(s);
}

/// One-state environment whose reward is infinite; Q-learning must refuse it.
class ExplodingEnv final : public Environment
{
public:
	EnvDescriptor const& descriptor() const noexcept override { return d_; }
	StateVector reset(RngSeed seed) override
	{
		begin_episode(seed);
		return state();
	}
	StateVector state() const override { return {0.0}; }

protected:
	std::pair<double, bool> advance(ActionId) override { return {std::numeric_limits<double>::infinity(), true}; }

private:
	EnvDescriptor d_{"exploding", 1, 2, 10, {{-1, 1}}};
};

} // namespace

TEST(Scripted, ForcedChoices)
{
	auto pp = scripted_teacher("predator-prey");
	EXPECT_EQ(ask(pp, {3, -2}), ActionId{3});
	EXPECT_EQ(ask(pp, {-3, 2}), ActionId{2});
	EXPECT_EQ(ask(pp, {1, -4}), ActionId{1});
	EXPECT_EQ(ask(pp, {0, 4}), ActionId{0});
	EXPECT_EQ(ask(pp, {2, 2}), ActionId{3}); // tie -> x axis

	auto mc = scripted_teacher("mountain-car");
	EXPECT_EQ(ask(mc, {-0.5, 0.01}), ActionId{2});
	EXPECT_EQ(ask(mc, {-0.5, -0.01}), ActionId{0});
	EXPECT_EQ(ask(mc, {-0.5, 0.0}), ActionId{0});

	auto cp = scripted_teacher("cart-pole");
	EXPECT_EQ(ask(cp, {0, 0, 0.1, 0}), ActionId{1});
	EXPECT_EQ(ask(cp, {0, 0, 0.1, -0.3}), ActionId{0});

	auto fb = scripted_teacher("flappy-bird");
	EXPECT_EQ(ask(fb, {10, -3, 0}), ActionId{1});
	EXPECT_EQ(ask(fb, {10, -3, 3}), ActionId{0});
	EXPECT_EQ(ask(fb, {10, 3, -5}), ActionId{0});

	EXPECT_THROW(scripted_teacher("pong"), NameError);
}

TEST(QLearning, ZeroEpisodesGivesActionZeroEverywhere)
{
	PredatorPrey env;
	auto r = train_q_teacher(env, default_grid("predator-prey"), {.episodes = 0});
	EXPECT_TRUE(r.episode_returns.empty());
	auto p = r.policy();
	for(int dx = -19; dx <= 19; dx += 3)
		for(int dy = -19; dy <= 19; dy += 3)
			EXPECT_EQ(ask(p, {double(dx), double(dy)}), ActionId{0});
}

TEST(QLearning, GammaZeroLearnsImmediateReward)
{
	PredatorPrey env;
	auto r = train_q_teacher(env, default_grid("predator-prey"),
	                         {.episodes = 5000, .alpha = 0.02, .gamma = 0.0, .epsilon_start = 1.0, .epsilon_end = 1.0,
	                          .seed = 3});
	for(double v : r.table->values())
	{
		EXPECT_GE(v, -1.0);
		EXPECT_LE(v, 0.0);
	}
	// next to the prey only the closing move can end the episode this step
	EXPECT_EQ(ask(r.policy(), {1, 0}), ActionId{3});
	EXPECT_EQ(ask(r.policy(), {-1, 0}), ActionId{2});
	EXPECT_EQ(ask(r.policy(), {0, 1}), ActionId{0});
	EXPECT_EQ(ask(r.policy(), {0, -1}), ActionId{1});
}

TEST(QLearning, PredatorPreyTeacherChasesWell)
{
	PredatorPrey env;
	auto r = train_q_teacher(env, default_grid("predator-prey"),
	                         {.episodes = 20000, .alpha = 0.1, .gamma = 0.99, .seed = 7});
	EXPECT_EQ(r.episode_returns.size(), 20000u);
	auto q = rollout_return(r.policy(), env, 1000, 11);
	auto expert = rollout_return(scripted_teacher("predator-prey"), env, 1000, 11);
	EXPECT_GE(q.mean, -40.0) << "scripted expert: " << expert.mean;
}

TEST(QLearning, GreedyPolicyInvariantUnderPositiveAffineMaps)
{
	PredatorPrey env;
	auto r = train_q_teacher(env, default_grid("predator-prey"), {.episodes = 500, .seed = 1});
	for(auto [scale, shift] : {std::pair{2.5, -3.0}, std::pair{0.01, 100.0}, std::pair{1.0, 7.0}})
	{
		auto t = r.table->affine(scale, shift);
		for(std::size_t c = 0; c < t.grid().cell_count(); ++c)
			EXPECT_EQ(t.greedy_in(c), r.table->greedy_in(c));
	}
}

TEST(QLearning, RejectsBadParametersAndDivergence)
{
	PredatorPrey env;
	EXPECT_THROW(train_q_teacher(env, default_grid("predator-prey"), {.alpha = 0.0}), ValueError);
	EXPECT_THROW(train_q_teacher(env, default_grid("predator-prey"), {.gamma = 1.5}), ValueError);
	EXPECT_THROW(train_q_teacher(env, default_grid("cart-pole"), {.episodes = 1}), DimensionError);
	ExplodingEnv boom;
	EXPECT_THROW(train_q_teacher(boom, Discretizer(std::vector<std::vector<double>>{{0.0}}), {.episodes = 3}), TrainingError);
}

TEST(QLearning, DefaultGridsExistForAllEnvironments)
{
	for(auto const& name : environment_names())
		EXPECT_EQ(default_grid(name).dim(), make_environment(name)->descriptor().state_dim);
}

TEST(External, EchoZeroStub)
{
	auto p = external_teacher("while read l; do echo 0; done", 4);
	EXPECT_EQ(ask(p, {1, 2}), ActionId{0});
	EXPECT_EQ(ask(p, {-3.5, 0.25}), ActionId{0});
}

TEST(External, ReplyIsTheAction)
{
	auto p = external_teacher("while read l; do echo 2; done", 4);
	for(int i = 0; i < 50; ++i)
		EXPECT_EQ(ask(p, {double(i), 0}), ActionId{2});
}

TEST(External, ProtocolViolationsFailClosed)
{
	{
		auto p = external_teacher("while read l; do echo left; done", 4);
		EXPECT_THROW(ask(p, {0, 0}), ExternalTeacherError);
		EXPECT_THROW(ask(p, {0, 0}), ExternalTeacherError);
	}
	{
		auto p = external_teacher("while read l; do echo 9; done", 4);
		EXPECT_THROW(ask(p, {0, 0}), ExternalTeacherError);
	}
	{
		auto p = external_teacher("exit 0", 4);
		EXPECT_THROW(ask(p, {0, 0}), ExternalTeacherError);
	}
	{
		auto p = external_teacher("read l; echo 1", 4);
		EXPECT_EQ(ask(p, {0, 0}), ActionId{1});
		EXPECT_THROW(ask(p, {0, 0}), ExternalTeacherError);
	}
}

TEST(External, SeesTheStateLine)
{
	// the child re-implements the scripted chase rule from the state line
	auto cmd = "while read dx dy; do "
	           "ax=${dx#-}; ay=${dy#-}; "
	           "if [ $ax -ge $ay ]; then if [ $dx -gt 0 ]; then echo 3; else echo 2; fi; "
	           "else if [ $dy -gt 0 ]; then echo 0; else echo 1; fi; fi; done";
	auto external = external_teacher(cmd, 4);
	PredatorPrey env;
	auto a = collect(env, external, 300, 5);
	auto b = collect(env, scripted_teacher("predator-prey"), 300, 5);
	EXPECT_EQ(a.raw, b.raw);
}

TEST(Collect, ExactCountAndDeterminism)
{
	for(auto const& name : environment_names())
	{
		auto env = make_environment(name);
		auto teacher = scripted_teacher(name);
		auto a = collect(*env, teacher, 777, 42);
		auto b = collect(*env, teacher, 777, 42);
		EXPECT_EQ(a.raw.size(), 777u);
		EXPECT_LE(a.pool.size(), 777u);
		EXPECT_EQ(a.pool, dedupe(a.raw));
		EXPECT_EQ(a.raw, b.raw);
		EXPECT_GE(a.episodes, 1u);
	}
	PredatorPrey env;
	auto one = collect(env, scripted_teacher("predator-prey"), 1, 0);
	EXPECT_EQ(one.raw.size(), 1u);
	EXPECT_EQ(one.pool.size(), 1u);
	EXPECT_THROW(collect(env, scripted_teacher("predator-prey"), 0, 0), ValueError);
}

TEST(Collect, PredatorPreyExperienceConcentratesNearOrigin)
{
	PredatorPrey env;
	auto c = collect(env, scripted_teacher("predator-prey"), 500, 9);
	auto near = [](StateView s) { return std::abs(s[0]) + std::abs(s[1]) <= 3.0; };
	std::size_t near_pool = 0;
	for(std::size_t i = 0; i < c.raw.size(); ++i)
		near_pool += near(c.raw.state(i));
	// reference: offsets of independent uniform starts
	std::size_t near_reset = 0;
	std::size_t const resets = 20000;
	for(std::size_t i = 0; i < resets; ++i)
		near_reset += near(env.reset(i));
	double const pool_frac = double(near_pool) / double(c.raw.size());
	double const reset_frac = double(near_reset) / double(resets);
	EXPECT_GT(pool_frac, 3.0 * reset_frac) << pool_frac << " vs " << reset_frac;
}
