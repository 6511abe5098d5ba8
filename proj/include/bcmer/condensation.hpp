#pragma once

#include <bcmer/errors.hpp>
#include <bcmer/experience.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace bcmer
{

enum class PointClass
{
	Boundary,
	Interior,
};

struct CondensationResult
{
	std::vector<std::size_t> boundary_indices;
	std::vector<std::size_t> interior_indices;
	double retained_fraction = 0.0;

	std::size_t total() const noexcept { return boundary_indices.size() + interior_indices.size(); }

	friend bool operator==(CondensationResult const&, CondensationResult const&) = default;
};

struct Condensed
{
	ExperiencePool pool;
	CondensationResult result;
};

struct CondenseOptions
{
	/// 0 selects std::thread::hardware_concurrency().
	unsigned workers = 0;
};

namespace detail
{

inline void check_index(ExperiencePool const& pool, std::size_t i)
{
	if(i >= pool.size())
		throw IndexError("index " + std::to_string(i) + " out of range for pool of " + std::to_string(pool.size()));
}

inline std::optional<std::size_t> nearest_enemy_unchecked(ExperiencePool const& pool, std::size_t i)
{
	auto const self = pool.state(i);
	auto const label = pool.action(i);
	std::optional<std::size_t> best;
	double best_sq = 0.0;
	for(std::size_t j = 0; j < pool.size(); ++j)
	{
		if(pool.action(j) == label)
			continue;
		double const sq = squared_distance(self, pool.state(j));
		if(!best || sq < best_sq)
		{
			best = j;
			best_sq = sq;
		}
	}
	return best;
}

inline bool has_witness(ExperiencePool const& pool, std::size_t i, std::size_t enemy)
{
	auto const centre = pool.state(enemy);
	auto const label = pool.action(i);
	double const radius_sq = squared_distance(pool.state(i), centre);
	for(std::size_t j = 0; j < pool.size(); ++j)
	{
		if(j == i || pool.action(j) != label)
			continue;
		if(squared_distance(pool.state(j), centre) < radius_sq)
			return true;
	}
	return false;
}

inline PointClass classify_unchecked(ExperiencePool const& pool, std::size_t i)
{
	auto enemy = nearest_enemy_unchecked(pool, i);
	if(!enemy)
		return PointClass::Boundary;
	return has_witness(pool, i, *enemy) ? PointClass::Interior : PointClass::Boundary;
}

/// Points regrouped by action with their states copied contiguously, so
/// the scans in `condense` run without a per-point label test.
struct ActionGroups
{
	std::vector<std::vector<double>> states;
	std::vector<std::vector<std::size_t>> index;

	explicit ActionGroups(ExperiencePool const& pool)
		: states(pool.action_count())
		, index(pool.action_count())
	{
		for(std::size_t i = 0; i < pool.size(); ++i)
		{
			auto a = pool.action(i).value;
			auto s = pool.state(i);
			states[a].insert(states[a].end(), s.begin(), s.end());
			index[a].push_back(i);
		}
	}
};

/// Same answer as classify_unchecked.
inline PointClass classify_grouped(ExperiencePool const& pool, ActionGroups const& groups, std::size_t i)
{
	std::size_t const dim = pool.dim();
	auto const self = pool.state(i);
	auto const label = pool.action(i).value;
	std::size_t enemy = pool.size();
	double best_sq = std::numeric_limits<double>::infinity();
	for(std::size_t g = 0; g < groups.index.size(); ++g)
	{
		if(g == label)
			continue;
		double const* p = groups.states[g].data();
		auto const& idx = groups.index[g];
		for(std::size_t k = 0; k < idx.size(); ++k, p += dim)
		{
			double const sq = squared_distance(self, StateView(p, dim));
			if(sq < best_sq || (sq == best_sq && idx[k] < enemy))
			{
				best_sq = sq;
				enemy = idx[k];
			}
		}
	}
	if(enemy == pool.size())
		return PointClass::Boundary;

	auto const centre = pool.state(enemy);
	double const radius_sq = squared_distance(self, centre);
	double const* p = groups.states[label].data();
	auto const& idx = groups.index[label];
	for(std::size_t k = 0; k < idx.size(); ++k, p += dim)
		if(squared_distance(StateView(p, dim), centre) < radius_sq && idx[k] != i)
			return PointClass::Interior;
	return PointClass::Boundary;
}

} // namespace detail

/// Closest point carrying a different action; lowest index on ties.
inline std::optional<std::size_t> nearest_enemy(ExperiencePool const& pool, std::size_t i)
{
	detail::check_index(pool, i);
	return detail::nearest_enemy_unchecked(pool, i);
}

/// Same-action points strictly inside the sphere centred on `enemy` whose
/// radius is the distance from point `i` to that enemy.
inline std::vector<std::size_t> witness_set(ExperiencePool const& pool, std::size_t i, std::size_t enemy)
{
	detail::check_index(pool, i);
	detail::check_index(pool, enemy);
	if(detail::nearest_enemy_unchecked(pool, i) != enemy)
		throw ContractError("index " + std::to_string(enemy) + " is not the nearest enemy of " + std::to_string(i));

	auto const centre = pool.state(enemy);
	auto const label = pool.action(i);
	double const radius_sq = squared_distance(pool.state(i), centre);
	std::vector<std::size_t> out;
	for(std::size_t j = 0; j < pool.size(); ++j)
		if(j != i && pool.action(j) == label && squared_distance(pool.state(j), centre) < radius_sq)
			out.push_back(j);
	return out;
}

/// A point with no enemy, or whose enemy sphere holds no same-action
/// witness, is Boundary.
inline PointClass classify_point(ExperiencePool const& pool, std::size_t i)
{
	detail::check_index(pool, i);
	return detail::classify_unchecked(pool, i);
}

/// Classifies every point against the original pool and keeps the
/// Boundary ones in their original order. Per-point work is fanned out
/// over `options.workers` threads; results do not depend on the count.
inline Condensed condense(ExperiencePool const& pool, CondenseOptions options = {})
{
	if(pool.empty())
		throw EmptyPoolError("cannot condense an empty pool");

	std::size_t const n = pool.size();
	unsigned workers = options.workers != 0 ? options.workers : std::max(1u, std::thread::hardware_concurrency());
	workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));

	detail::ActionGroups const groups(pool);
	std::vector<PointClass> classes(n);
	auto work = [&](std::size_t first) {
		for(std::size_t i = first; i < n; i += workers)
			classes[i] = detail::classify_grouped(pool, groups, i);
	};
	if(workers == 1)
	{
		work(0);
	}
	else
	{
		std::vector<std::jthread> threads;
		threads.reserve(workers);
		for(unsigned w = 0; w < workers; ++w)
			threads.emplace_back(work, w);
	}

	CondensationResult result;
	for(std::size_t i = 0; i < n; ++i)
		(classes[i] == PointClass::Boundary ? result.boundary_indices : result.interior_indices).push_back(i);
	result.retained_fraction = static_cast<double>(result.boundary_indices.size()) / static_cast<double>(n);
	return {pool.subset(result.boundary_indices), std::move(result)};
}

struct SimplexOracleOptions
{
	std::size_t max_pool_size = 200;
	double area_tolerance = 1e-9;
};

/// Brute-force 2-D containment test: true when some triangle of three other
/// same-action points contains point `i`, judged by the sub-triangle area
/// identity. Combinatorial in pool size; for verification only.
inline bool simplex_interior_oracle(ExperiencePool const& pool, std::size_t i, SimplexOracleOptions options = {})
{
	if(pool.dim() != 2)
		throw UnsupportedDimensionError("simplex oracle supports 2-D pools only");
	if(pool.size() > options.max_pool_size)
		throw SizeError("pool of " + std::to_string(pool.size()) + " exceeds oracle cap " +
		                std::to_string(options.max_pool_size));
	detail::check_index(pool, i);

	auto area = [](StateView a, StateView b, StateView c) {
		return std::abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])) / 2.0;
	};

	std::vector<std::size_t> same;
	for(std::size_t j = 0; j < pool.size(); ++j)
		if(j != i && pool.action(j) == pool.action(i))
			same.push_back(j);

	auto const e = pool.state(i);
	for(std::size_t a = 0; a < same.size(); ++a)
		for(std::size_t b = a + 1; b < same.size(); ++b)
			for(std::size_t c = b + 1; c < same.size(); ++c)
			{
				auto const p0 = pool.state(same[a]);
				auto const p1 = pool.state(same[b]);
				auto const p2 = pool.state(same[c]);
				double const whole = area(p0, p1, p2);
				if(whole == 0.0)
					continue;
				double const parts = area(e, p1, p2) + area(p0, e, p2) + area(p0, p1, e);
				if(std::abs(parts - whole) <= options.area_tolerance * std::max(whole, parts))
					return true;
			}
	return false;
}

inline void write_condensation(std::ostream& os, CondensationResult const& r)
{
	os << "#condensation retained=" << r.boundary_indices.size() << " total=" << r.total() << '\n';
	std::size_t b = 0;
	for(std::size_t i = 0; i < r.total(); ++i)
	{
		if(b < r.boundary_indices.size() && r.boundary_indices[b] == i)
		{
			os << i << " B\n";
			++b;
		}
		else
		{
			os << i << " I\n";
		}
	}
}

inline CondensationResult read_condensation(std::istream& is)
{
	std::string line;
	if(!std::getline(is, line) || !text::trim(line).starts_with("#condensation"))
		throw FormatError("expected '#condensation' header");
	auto const retained = text::parse_uint(text::header_field(text::trim(line), "retained"));
	auto const total = text::parse_uint(text::header_field(text::trim(line), "total"));
	CondensationResult r;
	std::size_t expect = 0;
	while(std::getline(is, line))
	{
		auto t = text::trim(line);
		if(t.empty())
			continue;
		auto sp = t.find(' ');
		if(sp == std::string_view::npos)
			throw FormatError("malformed condensation row: " + std::string(t));
		auto idx = text::parse_uint(t.substr(0, sp));
		auto tag = text::trim(t.substr(sp + 1));
		if(idx != expect++)
			throw FormatError("condensation rows must list indices in order");
		if(tag == "B")
			r.boundary_indices.push_back(idx);
		else if(tag == "I")
			r.interior_indices.push_back(idx);
		else
			throw FormatError("unknown tag '" + std::string(tag) + "'");
	}
	if(r.total() != total || r.boundary_indices.size() != retained)
		throw FormatError("condensation counts disagree with header");
	r.retained_fraction = total == 0 ? 0.0 : static_cast<double>(retained) / static_cast<double>(total);
	return r;
}

} // namespace bcmer
