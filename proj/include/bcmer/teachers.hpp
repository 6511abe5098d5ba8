#pragma once

#include <bcmer/environments.hpp>
#include <bcmer/errors.hpp>
#include <bcmer/experience.hpp>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

namespace bcmer
{

/// Deterministic state -> action mapping. Teachers and students alike are
/// carried as a named callable.
class Policy
{
public:
	using Fn = std::function<ActionId(StateView)>;

	Policy(std::string name, Fn fn)
		: name_(std::move(name))
		, fn_(std::move(fn))
	{
	}

	ActionId operator()(StateView state) const { return fn_(state); }
	std::string const& name() const noexcept { return name_; }

private:
	std::string name_;
	Fn fn_;
};

inline Policy constant_policy(ActionId action)
{
	return Policy("constant-" + std::to_string(action.value), [action](StateView) { return action; });
}

/// Hand-written experts, one per environment.
inline Policy scripted_teacher(std::string_view env_name)
{
	if(env_name == "predator-prey")
		return Policy("scripted", [](StateView s) {
			double const dx = s[0], dy = s[1];
			if(std::abs(dx) >= std::abs(dy))
				return ActionId{dx > 0.0 ? 3u : 2u};
			return ActionId{dy > 0.0 ? 0u : 1u};
		});
	if(env_name == "mountain-car")
		return Policy("scripted", [](StateView s) { return ActionId{s[1] > 0.0 ? 2u : 0u}; });
	if(env_name == "cart-pole")
		return Policy("scripted", [](StateView s) { return ActionId{s[2] + 0.5 * s[3] > 0.0 ? 1u : 0u}; });
	if(env_name == "flappy-bird")
		return Policy("scripted", [](StateView s) { return ActionId{s[1] < 0.0 && s[2] < 2.0 ? 1u : 0u}; });
	throw NameError("no scripted teacher for environment '" + std::string(env_name) + "'");
}

/// Axis-aligned binning. Each dimension has sorted interior edges; a value
/// v lands in bin upper_bound(edges, v), so there are edges+1 bins.
class Discretizer
{
public:
	explicit Discretizer(std::vector<std::vector<double>> edges)
		: edges_(std::move(edges))
	{
		cells_ = 1;
		for(auto& e : edges_)
		{
			if(!std::is_sorted(e.begin(), e.end()))
				throw ValueError("bin edges must be sorted");
			cells_ *= e.size() + 1;
		}
	}

	/// `bins` equal-width bins across [lo, hi].
	static std::vector<double> uniform(double lo, double hi, std::size_t bins)
	{
		std::vector<double> e;
		for(std::size_t b = 1; b < bins; ++b)
			e.push_back(lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins));
		return e;
	}

	std::size_t cell(StateView s) const
	{
		require_same_dim(s.size(), edges_.size());
		std::size_t idx = 0;
		for(std::size_t k = 0; k < edges_.size(); ++k)
		{
			auto bin = static_cast<std::size_t>(std::upper_bound(edges_[k].begin(), edges_[k].end(), s[k]) -
			                                    edges_[k].begin());
			idx = idx * (edges_[k].size() + 1) + bin;
		}
		return idx;
	}

	std::size_t cell_count() const noexcept { return cells_; }
	std::size_t dim() const noexcept { return edges_.size(); }

private:
	std::vector<std::vector<double>> edges_;
	std::size_t cells_ = 1;
};

inline Discretizer default_grid(std::string_view env_name)
{
	if(env_name == "predator-prey")
	{
		// one bin per integer offset in [-19, 19]
		std::vector<double> e;
		for(int k = -19; k < 19; ++k)
			e.push_back(k + 0.5);
		return Discretizer({e, e});
	}
	if(env_name == "mountain-car")
		return Discretizer({Discretizer::uniform(-1.2, 0.6, 24), Discretizer::uniform(-0.07, 0.07, 24)});
	if(env_name == "cart-pole")
		return Discretizer({Discretizer::uniform(-2.4, 2.4, 3), Discretizer::uniform(-2.0, 2.0, 6),
		                    Discretizer::uniform(-0.21, 0.21, 12), Discretizer::uniform(-2.0, 2.0, 12)});
	if(env_name == "flappy-bird")
		return Discretizer({Discretizer::uniform(0.0, 30.0, 6), Discretizer::uniform(-30.0, 30.0, 30),
		                    Discretizer::uniform(-8.0, 8.0, 8)});
	throw NameError("no default grid for environment '" + std::string(env_name) + "'");
}

class QTable
{
public:
	QTable(Discretizer grid, std::size_t action_count)
		: grid_(std::move(grid))
		, actions_(action_count)
		, values_(grid_.cell_count() * action_count, 0.0)
	{
	}

	double& at(std::size_t cell, ActionId a) { return values_[cell * actions_ + a.value]; }
	double at(std::size_t cell, ActionId a) const { return values_[cell * actions_ + a.value]; }

	/// Argmax over actions, lowest id on ties.
	ActionId greedy_in(std::size_t cell) const
	{
		auto first = values_.begin() + static_cast<std::ptrdiff_t>(cell * actions_);
		auto best = std::max_element(first, first + static_cast<std::ptrdiff_t>(actions_));
		return ActionId{static_cast<std::uint32_t>(best - first)};
	}

	ActionId greedy(StateView s) const { return greedy_in(grid_.cell(s)); }

	double max_in(std::size_t cell) const { return at(cell, greedy_in(cell)); }

	QTable affine(double scale, double shift) const
	{
		QTable out = *this;
		for(auto& v : out.values_)
			v = scale * v + shift;
		return out;
	}

	Discretizer const& grid() const noexcept { return grid_; }
	std::size_t action_count() const noexcept { return actions_; }
	std::span<double const> values() const noexcept { return values_; }

private:
	Discretizer grid_;
	std::size_t actions_;
	std::vector<double> values_;
};

inline Policy greedy_policy(std::shared_ptr<QTable const> table)
{
	return Policy("qlearn", [table = std::move(table)](StateView s) { return table->greedy(s); });
}

struct QTrainingConfig
{
	std::size_t episodes = 20000;
	double alpha = 0.1;
	double gamma = 0.99;
	double epsilon_start = 1.0;
	double epsilon_end = 0.05;
	RngSeed seed = 0;
};

struct QTrainingResult
{
	std::shared_ptr<QTable const> table;
	std::vector<double> episode_returns;

	Policy policy() const { return greedy_policy(table); }
};

/// One-step Q-learning with linearly decayed epsilon-greedy exploration.
/// Truncated episodes bootstrap; terminal ones do not.
inline QTrainingResult train_q_teacher(Environment& env, Discretizer grid, QTrainingConfig const& cfg)
{
	if(!(cfg.alpha > 0.0 && cfg.alpha <= 1.0))
		throw ValueError("alpha must lie in (0, 1]");
	if(!(cfg.gamma >= 0.0 && cfg.gamma <= 1.0))
		throw ValueError("gamma must lie in [0, 1]");
	require_same_dim(grid.dim(), env.descriptor().state_dim);

	auto const actions = env.descriptor().action_count;
	auto table = std::make_shared<QTable>(std::move(grid), actions);
	std::mt19937_64 rng(derive_seed(cfg.seed, 0x51, 0));
	std::uniform_real_distribution<double> unit(0.0, 1.0);
	std::uniform_int_distribution<std::uint32_t> any_action(0, static_cast<std::uint32_t>(actions - 1));

	QTrainingResult result;
	result.episode_returns.reserve(cfg.episodes);
	for(std::size_t ep = 0; ep < cfg.episodes; ++ep)
	{
		double const frac = cfg.episodes > 1 ? static_cast<double>(ep) / static_cast<double>(cfg.episodes - 1) : 1.0;
		double const epsilon = cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
		auto s = env.reset(derive_seed(cfg.seed, 0x52, ep));
		std::size_t cell = table->grid().cell(s);
		double ret = 0.0;
		while(true)
		{
			ActionId a = unit(rng) < epsilon ? ActionId{any_action(rng)} : table->greedy_in(cell);
			auto t = env.step(a);
			ret += t.reward;
			std::size_t const next = table->grid().cell(t.next_state);
			double const target = t.reward + (t.done ? 0.0 : cfg.gamma * table->max_in(next));
			double& q = table->at(cell, a);
			q += cfg.alpha * (target - q);
			if(!std::isfinite(q))
				throw TrainingError("Q-value diverged in episode " + std::to_string(ep));
			if(t.episode_over())
				break;
			cell = next;
		}
		result.episode_returns.push_back(ret);
	}
	result.table = std::move(table);
	return result;
}

/// Teacher living in a child process. Each query writes the state as one
/// space-separated line to the child's stdin and reads one action id line
/// from its stdout. Any protocol violation raises ExternalTeacherError.
class ExternalTeacher
{
public:
	ExternalTeacher(std::string command, std::size_t action_count,
	                std::chrono::milliseconds timeout = std::chrono::seconds(30))
		: command_(std::move(command))
		, action_count_(action_count)
		, timeout_(timeout)
	{
		int fds[2];
		if(::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0)
			throw ExternalTeacherError(std::string("socketpair: ") + std::strerror(errno));
		pid_ = ::fork();
		if(pid_ < 0)
		{
			::close(fds[0]);
			::close(fds[1]);
			throw ExternalTeacherError(std::string("fork: ") + std::strerror(errno));
		}
		if(pid_ == 0)
		{
			::dup2(fds[1], STDIN_FILENO);
			::dup2(fds[1], STDOUT_FILENO);
			::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
			::_exit(127);
		}
		::close(fds[1]);
		fd_ = fds[0];
	}

	ExternalTeacher(ExternalTeacher const&) = delete;
	ExternalTeacher& operator=(ExternalTeacher const&) = delete;

	~ExternalTeacher()
	{
		if(fd_ >= 0)
			::close(fd_);
		if(pid_ > 0)
		{
			::kill(pid_, SIGTERM);
			int status = 0;
			::waitpid(pid_, &status, 0);
		}
	}

	ActionId query(StateView state)
	{
		if(failed_)
			throw ExternalTeacherError("external teacher already failed: " + command_);
		try
		{
			std::string line;
			for(std::size_t k = 0; k < state.size(); ++k)
			{
				if(k)
					line += ' ';
				line += text::format_double(state[k]);
			}
			line += '\n';
			send_all(line);
			auto reply = text::trim(read_line());
			std::uint64_t a = 0;
			try
			{
				a = text::parse_uint(reply);
			}
			catch(FormatError const&)
			{
				throw ExternalTeacherError("malformed reply '" + std::string(reply) + "'");
			}
			if(a >= action_count_)
				throw ExternalTeacherError("reply action " + std::to_string(a) + " out of range");
			return ActionId{static_cast<std::uint32_t>(a)};
		}
		catch(...)
		{
			failed_ = true;
			throw;
		}
	}

private:
	void send_all(std::string_view data)
	{
		while(!data.empty())
		{
			auto n = ::send(fd_, data.data(), data.size(), MSG_NOSIGNAL);
			if(n < 0)
			{
				if(errno == EINTR)
					continue;
				throw ExternalTeacherError("child closed its input");
			}
			data.remove_prefix(static_cast<std::size_t>(n));
		}
	}

	std::string read_line()
	{
		while(true)
		{
			auto nl = buffer_.find('\n');
			if(nl != std::string::npos)
			{
				std::string line = buffer_.substr(0, nl);
				buffer_.erase(0, nl + 1);
				return line;
			}
			pollfd p{fd_, POLLIN, 0};
			int r = ::poll(&p, 1, static_cast<int>(timeout_.count()));
			if(r == 0)
				throw ExternalTeacherError("timed out waiting for child reply");
			if(r < 0)
			{
				if(errno == EINTR)
					continue;
				throw ExternalTeacherError(std::string("poll: ") + std::strerror(errno));
			}
			char buf[4096];
			auto n = ::recv(fd_, buf, sizeof(buf), 0);
			if(n < 0 && errno == EINTR)
				continue;
			if(n <= 0)
				throw ExternalTeacherError("child exited without replying");
			buffer_.append(buf, static_cast<std::size_t>(n));
		}
	}

	std::string command_;
	std::size_t action_count_;
	std::chrono::milliseconds timeout_;
	pid_t pid_ = -1;
	int fd_ = -1;
	std::string buffer_;
	bool failed_ = false;
};

/// Launches the child once; the returned policy shares it across queries.
inline Policy external_teacher(std::string command, std::size_t action_count)
{
	auto child = std::make_shared<ExternalTeacher>(std::move(command), action_count);
	return Policy("external", [child](StateView s) { return child->query(s); });
}

struct Collection
{
	/// Every recorded (state, action) pair, in collection order.
	ExperiencePool raw;
	/// `raw` after exact-duplicate collapse.
	ExperiencePool pool;
	std::size_t episodes = 0;
};

/// Runs the policy from successive seeded resets, recording the
/// pre-transition state and chosen action, until exactly `n` pairs exist.
inline Collection collect(Environment& env, Policy const& policy, std::size_t n, RngSeed seed)
{
	if(n == 0)
		throw ValueError("collect needs n >= 1");
	auto const& d = env.descriptor();
	ExperiencePool raw(d.state_dim, d.action_count);
	raw.reserve(n);
	std::size_t episode = 0;
	while(raw.size() < n)
	{
		auto s = env.reset(derive_seed(seed, 0x01, episode++));
		while(raw.size() < n)
		{
			auto a = policy(s);
			raw.push_back(s, a);
			auto t = env.step(a);
			if(t.episode_over())
				break;
			s = std::move(t.next_state);
		}
	}
	auto pool = dedupe(raw);
	return {std::move(raw), std::move(pool), episode};
}

} // namespace bcmer
