#pragma once

#include <bcmer/experience.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

/// Exact single-nearest-neighbour search structures over an ExperiencePool.
/// All of them order candidates by (squared distance, index) so that every
/// backend resolves ties to the lowest index.
namespace bcmer::spatial
{

struct Neighbor
{
	std::size_t index = std::numeric_limits<std::size_t>::max();
	double squared = std::numeric_limits<double>::infinity();

	bool valid() const noexcept { return index != std::numeric_limits<std::size_t>::max(); }
};

inline bool closer(std::size_t index, double squared, Neighbor const& best) noexcept
{
	return squared < best.squared || (squared == best.squared && index < best.index);
}

inline void offer(ExperiencePool const& pool, std::size_t index, StateView query, Neighbor& best) noexcept
{
	double const sq = squared_distance(query, pool.state(index));
	if(closer(index, sq, best))
		best = {index, sq};
}

inline Neighbor brute_nearest(ExperiencePool const& pool, StateView query) noexcept
{
	Neighbor best;
	for(std::size_t i = 0; i < pool.size(); ++i)
		offer(pool, i, query, best);
	return best;
}

inline constexpr std::size_t default_leaf_size = 16;

class KDTree
{
public:
	KDTree() = default;

	explicit KDTree(ExperiencePool const& pool, std::size_t leaf_size = default_leaf_size)
		: leaf_size_(std::max<std::size_t>(1, leaf_size))
	{
		order_.resize(pool.size());
		std::iota(order_.begin(), order_.end(), std::size_t{0});
		if(!order_.empty())
			build(pool, 0, order_.size());
	}

	Neighbor nearest(ExperiencePool const& pool, StateView query) const noexcept
	{
		Neighbor best;
		if(!nodes_.empty())
			search(pool, 0, query, best);
		return best;
	}

	std::size_t node_count() const noexcept { return nodes_.size(); }

private:
	struct Node
	{
		std::size_t begin, end;
		std::size_t split_dim = 0;
		double split_value = 0.0;
		std::size_t left = 0, right = 0;
		bool leaf = true;
	};

	std::size_t build(ExperiencePool const& pool, std::size_t begin, std::size_t end)
	{
		std::size_t const id = nodes_.size();
		nodes_.push_back({begin, end});
		if(end - begin <= leaf_size_)
			return id;

		// widest spread, lowest dimension on ties
		std::size_t dim = 0;
		double widest = -1.0;
		for(std::size_t k = 0; k < pool.dim(); ++k)
		{
			double lo = std::numeric_limits<double>::infinity();
			double hi = -lo;
			for(std::size_t p = begin; p < end; ++p)
			{
				double v = pool.state(order_[p])[k];
				lo = std::min(lo, v);
				hi = std::max(hi, v);
			}
			if(hi - lo > widest)
			{
				widest = hi - lo;
				dim = k;
			}
		}
		if(widest <= 0.0)
			return id;

		std::size_t const mid = begin + (end - begin) / 2;
		std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
		                 [&](std::size_t a, std::size_t b) {
			                 double va = pool.state(a)[dim], vb = pool.state(b)[dim];
			                 return va < vb || (va == vb && a < b);
		                 });

		double const split = pool.state(order_[mid])[dim];
		std::size_t const left = build(pool, begin, mid);
		std::size_t const right = build(pool, mid, end);
		auto& node = nodes_[id];
		node.leaf = false;
		node.split_dim = dim;
		node.split_value = split;
		node.left = left;
		node.right = right;
		return id;
	}

	void search(ExperiencePool const& pool, std::size_t id, StateView query, Neighbor& best) const noexcept
	{
		auto const& node = nodes_[id];
		if(node.leaf)
		{
			for(std::size_t p = node.begin; p < node.end; ++p)
				offer(pool, order_[p], query, best);
			return;
		}
		double const diff = query[node.split_dim] - node.split_value;
		std::size_t const near = diff <= 0.0 ? node.left : node.right;
		std::size_t const far = diff <= 0.0 ? node.right : node.left;
		search(pool, near, query, best);
		// equality must still descend: an equidistant point may carry a lower index
		if(diff * diff <= best.squared)
			search(pool, far, query, best);
	}

	std::size_t leaf_size_ = default_leaf_size;
	std::vector<std::size_t> order_;
	std::vector<Node> nodes_;
};

class BallTree
{
public:
	BallTree() = default;

	explicit BallTree(ExperiencePool const& pool, std::size_t leaf_size = default_leaf_size)
		: leaf_size_(std::max<std::size_t>(1, leaf_size))
		, dim_(pool.dim())
	{
		order_.resize(pool.size());
		std::iota(order_.begin(), order_.end(), std::size_t{0});
		if(!order_.empty())
			build(pool, 0, order_.size());
	}

	Neighbor nearest(ExperiencePool const& pool, StateView query) const noexcept
	{
		Neighbor best;
		if(!nodes_.empty())
			search(pool, 0, query, best);
		return best;
	}

	std::size_t node_count() const noexcept { return nodes_.size(); }

private:
	struct Node
	{
		std::size_t begin, end;
		double radius = 0.0;
		std::size_t left = 0, right = 0;
		bool leaf = true;
	};

	StateView centre(std::size_t id) const noexcept { return {centres_.data() + id * dim_, dim_}; }

	std::size_t farthest_from(ExperiencePool const& pool, std::size_t begin, std::size_t end, StateView from) const
	{
		std::size_t best = order_[begin];
		double best_sq = -1.0;
		for(std::size_t p = begin; p < end; ++p)
		{
			double sq = squared_distance(from, pool.state(order_[p]));
			if(sq > best_sq || (sq == best_sq && order_[p] < best))
			{
				best = order_[p];
				best_sq = sq;
			}
		}
		return best;
	}

	std::size_t build(ExperiencePool const& pool, std::size_t begin, std::size_t end)
	{
		std::size_t const id = nodes_.size();
		nodes_.push_back({begin, end});

		std::vector<double> c(dim_, 0.0);
		for(std::size_t p = begin; p < end; ++p)
			for(std::size_t k = 0; k < dim_; ++k)
				c[k] += pool.state(order_[p])[k];
		for(auto& v : c)
			v /= static_cast<double>(end - begin);
		double radius = 0.0;
		for(std::size_t p = begin; p < end; ++p)
			radius = std::max(radius, std::sqrt(squared_distance(c, pool.state(order_[p]))));
		centres_.insert(centres_.end(), c.begin(), c.end());
		nodes_[id].radius = radius;

		if(end - begin <= leaf_size_ || radius == 0.0)
			return id;

		std::size_t const seed_a = farthest_from(pool, begin, end, c);
		std::size_t const seed_b = farthest_from(pool, begin, end, pool.state(seed_a));
		auto const sa = pool.state(seed_a);
		auto const sb = pool.state(seed_b);
		auto const split = std::stable_partition(order_.begin() + begin, order_.begin() + end, [&](std::size_t i) {
			return squared_distance(pool.state(i), sa) <= squared_distance(pool.state(i), sb);
		});
		std::size_t mid = static_cast<std::size_t>(split - order_.begin());
		if(mid == begin || mid == end)
			return id;

		std::size_t const left = build(pool, begin, mid);
		std::size_t const right = build(pool, mid, end);
		nodes_[id].leaf = false;
		nodes_[id].left = left;
		nodes_[id].right = right;
		return id;
	}

	// Lower bound on the distance from `query` to anything inside the ball,
	// shrunk slightly so rounding never prunes a ball holding the answer.
	double lower_bound(std::size_t id, StateView query) const noexcept
	{
		double const to_centre = std::sqrt(squared_distance(query, centre(id)));
		double const r = nodes_[id].radius;
		double const slack = 1e-9 * (to_centre + r) + std::numeric_limits<double>::min();
		return std::max(0.0, to_centre - r - slack);
	}

	void search(ExperiencePool const& pool, std::size_t id, StateView query, Neighbor& best) const noexcept
	{
		auto const& node = nodes_[id];
		if(node.leaf)
		{
			for(std::size_t p = node.begin; p < node.end; ++p)
				offer(pool, order_[p], query, best);
			return;
		}
		double const bl = lower_bound(node.left, query);
		double const br = lower_bound(node.right, query);
		std::size_t first = node.left, second = node.right;
		double first_bound = bl, second_bound = br;
		if(br < bl)
		{
			std::swap(first, second);
			std::swap(first_bound, second_bound);
		}
		if(first_bound * first_bound <= best.squared)
			search(pool, first, query, best);
		if(second_bound * second_bound <= best.squared)
			search(pool, second, query, best);
	}

	std::size_t leaf_size_ = default_leaf_size;
	std::size_t dim_ = 0;
	std::vector<std::size_t> order_;
	std::vector<Node> nodes_;
	std::vector<double> centres_;
};

} // namespace bcmer::spatial
