#pragma once

#include <bcmer/errors.hpp>
#include <bcmer/text.hpp>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace bcmer
{

struct ActionId
{
	std::uint32_t value = 0;

	friend auto operator<=>(ActionId, ActionId) = default;
};

inline std::ostream& operator<<(std::ostream& os, ActionId a)
{
	return os << 'a' << a.value;
}

using StateVector = std::vector<double>;
using StateView = std::span<double const>;

struct Experience
{
	StateVector state;
	ActionId action;

	friend bool operator==(Experience const&, Experience const&) = default;
};

inline void require_same_dim(std::size_t a, std::size_t b)
{
	if(a != b)
		throw DimensionError("dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
}

/// Sum of squared coordinate differences, accumulated in index order.
/// Every search backend uses this exact routine so that distances compare
/// bit-identically across them.
inline double squared_distance(StateView a, StateView b) noexcept
{
	double acc = 0.0;
	for(std::size_t k = 0; k < a.size(); ++k)
	{
		double const diff = a[k] - b[k];
		acc += diff * diff;
	}
	return acc;
}

inline double distance(StateView a, StateView b)
{
	require_same_dim(a.size(), b.size());
	return std::sqrt(squared_distance(a, b));
}

/// Ordered, dimension-consistent collection of (state, action) pairs.
/// States are stored row-major in one contiguous buffer.
class ExperiencePool
{
public:
	ExperiencePool(std::size_t dim, std::size_t action_count)
		: dim_(dim)
		, action_count_(action_count)
	{
		if(dim == 0)
			throw DimensionError("pool dimension must be >= 1");
		if(action_count == 0)
			throw ActionError("pool action count must be >= 1");
	}

	static ExperiencePool from(std::size_t dim, std::size_t action_count, std::span<Experience const> points)
	{
		ExperiencePool pool(dim, action_count);
		pool.reserve(points.size());
		for(auto const& e : points)
			pool.push_back(e.state, e.action);
		return pool;
	}

	void reserve(std::size_t n)
	{
		states_.reserve(n * dim_);
		actions_.reserve(n);
	}

	void push_back(StateView state, ActionId action)
	{
		require_same_dim(state.size(), dim_);
		for(double v : state)
			if(!std::isfinite(v))
				throw ValueError("state entries must be finite");
		if(action.value >= action_count_)
			throw ActionError("action " + std::to_string(action.value) + " out of range for " +
			                  std::to_string(action_count_) + " actions");
		states_.insert(states_.end(), state.begin(), state.end());
		actions_.push_back(action);
	}

	std::size_t dim() const noexcept { return dim_; }
	std::size_t action_count() const noexcept { return action_count_; }
	std::size_t size() const noexcept { return actions_.size(); }
	bool empty() const noexcept { return actions_.empty(); }

	StateView state(std::size_t i) const noexcept { return {states_.data() + i * dim_, dim_}; }
	ActionId action(std::size_t i) const noexcept { return actions_[i]; }
	Experience experience(std::size_t i) const
	{
		auto s = state(i);
		return {StateVector(s.begin(), s.end()), actions_[i]};
	}

	std::span<double const> raw_states() const noexcept { return states_; }
	std::span<ActionId const> actions() const noexcept { return actions_; }

	ExperiencePool subset(std::span<std::size_t const> indices) const
	{
		ExperiencePool out(dim_, action_count_);
		out.reserve(indices.size());
		for(auto i : indices)
		{
			if(i >= size())
				throw IndexError("subset index out of range");
			out.states_.insert(out.states_.end(), state(i).begin(), state(i).end());
			out.actions_.push_back(actions_[i]);
		}
		return out;
	}

	friend bool operator==(ExperiencePool const&, ExperiencePool const&) = default;

private:
	std::size_t dim_;
	std::size_t action_count_;
	std::vector<double> states_;
	std::vector<ActionId> actions_;
};

/// Collapses exact duplicate (state, action) pairs onto their earliest copy.
inline ExperiencePool dedupe(ExperiencePool const& pool)
{
	std::set<std::pair<StateVector, std::uint32_t>> seen;
	std::vector<std::size_t> keep;
	keep.reserve(pool.size());
	for(std::size_t i = 0; i < pool.size(); ++i)
	{
		auto s = pool.state(i);
		if(seen.emplace(StateVector(s.begin(), s.end()), pool.action(i).value).second)
			keep.push_back(i);
	}
	return pool.subset(keep);
}

/// Maps every dimension onto [0, 1] using the pool's own extent.
/// Constant dimensions map to 0.
inline ExperiencePool minmax_scaled(ExperiencePool const& pool)
{
	auto const d = pool.dim();
	std::vector<double> lo(d, std::numeric_limits<double>::infinity());
	std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
	for(std::size_t i = 0; i < pool.size(); ++i)
		for(std::size_t k = 0; k < d; ++k)
		{
			lo[k] = std::min(lo[k], pool.state(i)[k]);
			hi[k] = std::max(hi[k], pool.state(i)[k]);
		}
	ExperiencePool out(d, pool.action_count());
	out.reserve(pool.size());
	StateVector s(d);
	for(std::size_t i = 0; i < pool.size(); ++i)
	{
		for(std::size_t k = 0; k < d; ++k)
		{
			double const span = hi[k] - lo[k];
			s[k] = span > 0.0 ? (pool.state(i)[k] - lo[k]) / span : 0.0;
		}
		out.push_back(s, pool.action(i));
	}
	return out;
}

// Text format:
//   #pool dim=<d> actions=<k>
//   s_0,...,s_{d-1},action

inline void write_pool(std::ostream& os, ExperiencePool const& pool)
{
	os << "#pool dim=" << pool.dim() << " actions=" << pool.action_count() << '\n';
	for(std::size_t i = 0; i < pool.size(); ++i)
	{
		for(double v : pool.state(i))
			os << text::format_double(v) << ',';
		os << pool.action(i).value << '\n';
	}
}

/// Reads a pool whose header line has already been consumed.
inline ExperiencePool read_pool_body(std::istream& is, std::string_view header)
{
	if(!header.starts_with("#pool"))
		throw FormatError("expected '#pool' header, got: " + std::string(header));
	auto const dim = text::parse_uint(text::header_field(header, "dim"));
	auto const actions = text::parse_uint(text::header_field(header, "actions"));
	ExperiencePool pool(dim, actions);
	StateVector s(dim);
	std::string line;
	std::size_t lineno = 1;
	while(std::getline(is, line))
	{
		++lineno;
		auto t = text::trim(line);
		if(t.empty())
			continue;
		auto fields = text::split(t, ',');
		if(fields.size() != dim + 1)
			throw FormatError("line " + std::to_string(lineno) + ": expected " + std::to_string(dim + 1) +
			                  " fields, got " + std::to_string(fields.size()));
		for(std::size_t k = 0; k < dim; ++k)
			s[k] = text::parse_double(fields[k]);
		auto a = text::parse_uint(fields[dim]);
		if(a >= actions)
			throw FormatError("line " + std::to_string(lineno) + ": action " + std::to_string(a) + " out of range");
		try
		{
			pool.push_back(s, ActionId{static_cast<std::uint32_t>(a)});
		}
		catch(Error const& e)
		{
			throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
		}
	}
	return pool;
}

inline ExperiencePool read_pool(std::istream& is)
{
	std::string header;
	if(!std::getline(is, header))
		throw FormatError("empty pool file");
	return read_pool_body(is, text::trim(header));
}

} // namespace bcmer
