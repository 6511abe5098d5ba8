#pragma once

#include <bcmer/errors.hpp>
#include <bcmer/experience.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace bcmer
{

using RngSeed = std::uint64_t;

/// splitmix64 finaliser; derives independent per-episode seeds from a base
/// seed, a stream id and an episode counter.
inline RngSeed derive_seed(RngSeed base, std::uint64_t stream, std::uint64_t episode) noexcept
{
	auto mix = [](std::uint64_t z) {
		z += 0x9e3779b97f4a7c15ULL;
		z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
		z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
		return z ^ (z >> 31);
	};
	return mix(mix(mix(base) ^ stream) ^ episode);
}

struct Bounds
{
	double lo, hi;
};

struct EnvDescriptor
{
	std::string name;
	std::size_t state_dim;
	std::size_t action_count;
	std::size_t max_steps;
	std::vector<Bounds> state_bounds;
};

struct Transition
{
	StateVector state;
	ActionId action;
	double reward = 0.0;
	StateVector next_state;
	/// Terminal state reached.
	bool done = false;
	/// Step cap reached without a terminal state.
	bool truncated = false;

	bool episode_over() const noexcept { return done || truncated; }
};

/// Uniform reset/step interface. Instances hold mutable episode state and
/// are not shared between threads.
class Environment
{
public:
	virtual ~Environment() = default;

	virtual EnvDescriptor const& descriptor() const noexcept = 0;
	virtual StateVector reset(RngSeed seed) = 0;
	virtual StateVector state() const = 0;

	Transition step(ActionId action)
	{
		if(action.value >= descriptor().action_count)
			throw ActionError("action " + std::to_string(action.value) + " invalid for " + descriptor().name);
		if(over_)
			throw ContractError(descriptor().name + ": step after episode end; reset first");
		Transition t;
		t.state = state();
		t.action = action;
		auto [reward, done] = advance(action);
		++steps_;
		t.reward = reward;
		t.done = done;
		t.truncated = !done && steps_ >= descriptor().max_steps;
		t.next_state = state();
		over_ = t.episode_over();
		return t;
	}

	std::size_t steps() const noexcept { return steps_; }

protected:
	void begin_episode(RngSeed seed)
	{
		rng_.seed(seed);
		steps_ = 0;
		over_ = false;
	}

	/// Applies one action; returns (reward, terminal).
	virtual std::pair<double, bool> advance(ActionId action) = 0;

	std::mt19937_64 rng_;

private:
	std::size_t steps_ = 0;
	bool over_ = true;
};

/// 20x20 grid chase. State is (prey_x - predator_x, prey_y - predator_y).
/// Actions: 0 up (+y), 1 down (-y), 2 left (-x), 3 right (+x).
class PredatorPrey final : public Environment
{
public:
	static constexpr int grid = 20;

	enum class PreyMove
	{
		Stay,
		Up,
		Down,
		Left,
		Right,
	};

	struct Cell
	{
		int x, y;
		friend bool operator==(Cell, Cell) = default;
	};

	EnvDescriptor const& descriptor() const noexcept override { return descriptor_; }

	StateVector reset(RngSeed seed) override
	{
		begin_episode(seed);
		std::uniform_int_distribution<int> coord(0, grid - 1);
		do
		{
			predator_ = {coord(rng_), coord(rng_)};
			prey_ = {coord(rng_), coord(rng_)};
		} while(predator_ == prey_);
		return state();
	}

	StateVector state() const override
	{
		return {static_cast<double>(prey_.x - predator_.x), static_cast<double>(prey_.y - predator_.y)};
	}

	/// Starts an episode from explicit cells.
	void place(Cell predator, Cell prey, RngSeed seed = 0)
	{
		begin_episode(seed);
		predator_ = clamp(predator);
		prey_ = clamp(prey);
	}

	/// Steps with the prey's move forced instead of drawn.
	Transition step_with_prey_move(ActionId action, PreyMove move)
	{
		forced_ = move;
		forced_active_ = true;
		try
		{
			auto t = step(action);
			forced_active_ = false;
			return t;
		}
		catch(...)
		{
			forced_active_ = false;
			throw;
		}
	}

	Cell predator() const noexcept { return predator_; }
	Cell prey() const noexcept { return prey_; }

protected:
	std::pair<double, bool> advance(ActionId action) override
	{
		predator_ = clamp(shift(predator_, action.value));
		PreyMove move = forced_active_ ? forced_ : static_cast<PreyMove>(std::uniform_int_distribution<int>(0, 4)(rng_));
		prey_ = clamp(shift(prey_, move));
		bool const caught = predator_ == prey_;
		return {caught ? 0.0 : -1.0, caught};
	}

private:
	static Cell clamp(Cell c) noexcept { return {std::clamp(c.x, 0, grid - 1), std::clamp(c.y, 0, grid - 1)}; }

	static Cell shift(Cell c, std::uint32_t action) noexcept
	{
		switch(action)
		{
		case 0: return {c.x, c.y + 1};
		case 1: return {c.x, c.y - 1};
		case 2: return {c.x - 1, c.y};
		default: return {c.x + 1, c.y};
		}
	}

	static Cell shift(Cell c, PreyMove m) noexcept
	{
		if(m == PreyMove::Stay)
			return c;
		return shift(c, static_cast<std::uint32_t>(m) - 1);
	}

	EnvDescriptor descriptor_{"predator-prey", 2, 4, 200, {{-19.0, 19.0}, {-19.0, 19.0}}};
	Cell predator_{0, 0}, prey_{1, 0};
	PreyMove forced_ = PreyMove::Stay;
	bool forced_active_ = false;
};

/// Classic mountain car. State (position, velocity); actions 0 push left,
/// 1 no push, 2 push right.
class MountainCar final : public Environment
{
public:
	static constexpr double min_position = -1.2;
	static constexpr double max_position = 0.6;
	static constexpr double max_speed = 0.07;
	static constexpr double goal_position = 0.5;
	static constexpr double force = 0.001;
	static constexpr double gravity = 0.0025;

	static bool at_goal(double position) noexcept { return position >= goal_position; }

	EnvDescriptor const& descriptor() const noexcept override { return descriptor_; }

	StateVector reset(RngSeed seed) override
	{
		begin_episode(seed);
		position_ = std::uniform_real_distribution<double>(-0.6, -0.4)(rng_);
		velocity_ = 0.0;
		return state();
	}

	StateVector state() const override { return {position_, velocity_}; }

	void set_state(double position, double velocity)
	{
		begin_episode(0);
		position_ = position;
		velocity_ = velocity;
	}

protected:
	std::pair<double, bool> advance(ActionId action) override
	{
		velocity_ += (static_cast<double>(action.value) - 1.0) * force - gravity * std::cos(3.0 * position_);
		velocity_ = std::clamp(velocity_, -max_speed, max_speed);
		position_ = std::clamp(position_ + velocity_, min_position, max_position);
		if(position_ == min_position && velocity_ < 0.0)
			velocity_ = 0.0;
		return {-1.0, at_goal(position_)};
	}

private:
	EnvDescriptor descriptor_{"mountain-car", 2, 3, 200, {{min_position, max_position}, {-max_speed, max_speed}}};
	double position_ = -0.5;
	double velocity_ = 0.0;
};

/// Classic cart-pole with explicit Euler integration. State
/// (x, x_dot, theta, theta_dot); actions 0 push left, 1 push right.
class CartPole final : public Environment
{
public:
	static constexpr double gravity = 9.8;
	static constexpr double cart_mass = 1.0;
	static constexpr double pole_mass = 0.1;
	static constexpr double total_mass = cart_mass + pole_mass;
	static constexpr double half_length = 0.5;
	static constexpr double pole_mass_length = pole_mass * half_length;
	static constexpr double force_mag = 10.0;
	static constexpr double tau = 0.02;
	static constexpr double theta_limit = 12.0 * 2.0 * std::numbers::pi / 360.0;
	static constexpr double x_limit = 2.4;

	static bool failed(StateView s) noexcept
	{
		return s[0] < -x_limit || s[0] > x_limit || s[2] < -theta_limit || s[2] > theta_limit;
	}

	EnvDescriptor const& descriptor() const noexcept override { return descriptor_; }

	StateVector reset(RngSeed seed) override
	{
		begin_episode(seed);
		std::uniform_real_distribution<double> u(-0.05, 0.05);
		for(auto& v : s_)
			v = u(rng_);
		return state();
	}

	StateVector state() const override { return {s_.begin(), s_.end()}; }

	void set_state(std::array<double, 4> s)
	{
		begin_episode(0);
		s_ = s;
	}

protected:
	std::pair<double, bool> advance(ActionId action) override
	{
		auto& [x, x_dot, theta, theta_dot] = s_;
		double const f = action.value == 1 ? force_mag : -force_mag;
		double const cos_t = std::cos(theta);
		double const sin_t = std::sin(theta);
		double const temp = (f + pole_mass_length * theta_dot * theta_dot * sin_t) / total_mass;
		double const theta_acc = (gravity * sin_t - cos_t * temp) /
		                         (half_length * (4.0 / 3.0 - pole_mass * cos_t * cos_t / total_mass));
		double const x_acc = temp - pole_mass_length * theta_acc * cos_t / total_mass;
		x += tau * x_dot;
		x_dot += tau * x_acc;
		theta += tau * theta_dot;
		theta_dot += tau * theta_acc;
		bool const done = failed(s_);
		return {done ? 0.0 : 1.0, done};
	}

private:
	EnvDescriptor descriptor_{
		"cart-pole", 4, 2, 500, {{-x_limit, x_limit}, {-3.0, 3.0}, {-theta_limit, theta_limit}, {-3.5, 3.5}}};
	std::array<double, 4> s_{};
};

/// Simplified side-scrolling flapper. State is (distance to the next pipe,
/// bird height minus gap centre, vertical velocity); actions 0 glide,
/// 1 flap. This variant is artifact-defined, not the original game.
class FlappyBird final : public Environment
{
public:
	static constexpr double gravity = 1.0;
	static constexpr double flap_velocity = 4.0;
	static constexpr double max_speed = 8.0;
	static constexpr int pipe_spacing = 30;
	static constexpr double gap_half_height = 6.0;
	static constexpr double gap_range = 20.0;
	static constexpr double world_half_height = 40.0;

	EnvDescriptor const& descriptor() const noexcept override { return descriptor_; }

	StateVector reset(RngSeed seed) override
	{
		begin_episode(seed);
		bird_x_ = 0;
		bird_y_ = 0.0;
		velocity_ = 0.0;
		pipe_x_ = pipe_spacing;
		gap_y_ = draw_gap();
		return state();
	}

	StateVector state() const override
	{
		return {static_cast<double>(pipe_x_ - bird_x_), bird_y_ - gap_y_, velocity_};
	}

	/// Starts an episode with the bird `to_pipe` columns before a pipe.
	void place(double bird_y, double velocity, int to_pipe, double gap_y, RngSeed seed = 0)
	{
		begin_episode(seed);
		bird_x_ = 0;
		bird_y_ = bird_y;
		velocity_ = velocity;
		pipe_x_ = to_pipe;
		gap_y_ = gap_y;
	}

	double bird_y() const noexcept { return bird_y_; }
	double velocity() const noexcept { return velocity_; }

protected:
	std::pair<double, bool> advance(ActionId action) override
	{
		velocity_ = action.value == 1 ? flap_velocity : velocity_ - gravity;
		velocity_ = std::clamp(velocity_, -max_speed, max_speed);
		bird_y_ += velocity_;
		bird_x_ += 1;
		if(std::abs(bird_y_) > world_half_height)
			return {0.0, true};
		if(bird_x_ == pipe_x_)
		{
			if(std::abs(bird_y_ - gap_y_) > gap_half_height)
				return {0.0, true};
			pipe_x_ += pipe_spacing;
			gap_y_ = draw_gap();
			return {1.0, false};
		}
		return {0.0, false};
	}

private:
	double draw_gap() { return std::uniform_real_distribution<double>(-gap_range, gap_range)(rng_); }

	EnvDescriptor descriptor_{"flappy-bird",
	                          3,
	                          2,
	                          1000,
	                          {{1.0, static_cast<double>(pipe_spacing)},
	                           {-world_half_height - gap_range, world_half_height + gap_range},
	                           {-max_speed, max_speed}}};
	int bird_x_ = 0;
	double bird_y_ = 0.0;
	double velocity_ = 0.0;
	int pipe_x_ = pipe_spacing;
	double gap_y_ = 0.0;
};

inline std::vector<std::string> const& environment_names()
{
	static std::vector<std::string> const names{"predator-prey", "mountain-car", "cart-pole", "flappy-bird"};
	return names;
}

inline std::unique_ptr<Environment> make_environment(std::string_view name)
{
	if(name == "predator-prey")
		return std::make_unique<PredatorPrey>();
	if(name == "mountain-car")
		return std::make_unique<MountainCar>();
	if(name == "cart-pole")
		return std::make_unique<CartPole>();
	if(name == "flappy-bird")
		return std::make_unique<FlappyBird>();
	throw NameError("unknown environment '" + std::string(name) + "'");
}

} // namespace bcmer
