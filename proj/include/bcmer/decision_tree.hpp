#pragma once

#include <bcmer/errors.hpp>
#include <bcmer/experience.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace bcmer
{

enum class SplitCriterion
{
	Entropy,
	Gini,
};

inline std::string_view to_string(SplitCriterion c)
{
	return c == SplitCriterion::Entropy ? "entropy" : "gini";
}

inline SplitCriterion parse_criterion(std::string_view name)
{
	if(name == "entropy")
		return SplitCriterion::Entropy;
	if(name == "gini")
		return SplitCriterion::Gini;
	throw NameError("unknown split criterion '" + std::string(name) + "'");
}

inline double impurity(SplitCriterion c, std::span<std::size_t const> counts, std::size_t total)
{
	if(total == 0)
		return 0.0;
	double acc = 0.0;
	for(auto n : counts)
	{
		if(n == 0)
			continue;
		double const p = static_cast<double>(n) / static_cast<double>(total);
		acc += c == SplitCriterion::Gini ? p * p : -p * std::log2(p);
	}
	return c == SplitCriterion::Gini ? 1.0 - acc : acc;
}

/// Depth-capped binary classification tree. The root is layer 1, so a
/// tree of max_depth 1 is a single leaf.
class DecisionTreeModel
{
public:
	struct Node
	{
		bool leaf = true;
		std::size_t dim = 0;
		double threshold = 0.0;
		ActionId action;
		std::size_t left = 0, right = 0;

		friend bool operator==(Node const&, Node const&) = default;
	};

	DecisionTreeModel(SplitCriterion criterion, std::size_t max_depth, std::size_t dim, std::size_t action_count,
	                  std::vector<Node> nodes)
		: criterion_(criterion)
		, max_depth_(max_depth)
		, dim_(dim)
		, action_count_(action_count)
		, nodes_(std::move(nodes))
	{
	}

	ActionId predict(StateView state) const
	{
		require_same_dim(state.size(), dim_);
		std::size_t id = 0;
		while(!nodes_[id].leaf)
			id = state[nodes_[id].dim] <= nodes_[id].threshold ? nodes_[id].left : nodes_[id].right;
		return nodes_[id].action;
	}

	/// Number of layers on the longest root-to-leaf path.
	std::size_t depth() const { return depth_from(0); }

	SplitCriterion criterion() const noexcept { return criterion_; }
	std::size_t max_depth() const noexcept { return max_depth_; }
	std::size_t dim() const noexcept { return dim_; }
	std::size_t action_count() const noexcept { return action_count_; }
	std::vector<Node> const& nodes() const noexcept { return nodes_; }

	friend bool operator==(DecisionTreeModel const&, DecisionTreeModel const&) = default;

private:
	std::size_t depth_from(std::size_t id) const
	{
		if(nodes_[id].leaf)
			return 1;
		return 1 + std::max(depth_from(nodes_[id].left), depth_from(nodes_[id].right));
	}

	SplitCriterion criterion_;
	std::size_t max_depth_;
	std::size_t dim_;
	std::size_t action_count_;
	std::vector<Node> nodes_;
};

namespace detail
{

class TreeBuilder
{
public:
	TreeBuilder(ExperiencePool const& pool, SplitCriterion criterion, std::size_t max_depth)
		: pool_(pool)
		, criterion_(criterion)
		, max_depth_(max_depth)
	{
	}

	std::vector<DecisionTreeModel::Node> run()
	{
		std::vector<std::size_t> all(pool_.size());
		std::iota(all.begin(), all.end(), std::size_t{0});
		grow(all, 1);
		return std::move(nodes_);
	}

private:
	struct Split
	{
		double gain = 0.0;
		std::size_t dim = 0;
		double threshold = 0.0;
		bool found = false;
	};

	std::vector<std::size_t> count(std::span<std::size_t const> rows) const
	{
		std::vector<std::size_t> c(pool_.action_count(), 0);
		for(auto r : rows)
			++c[pool_.action(r).value];
		return c;
	}

	Split best_split(std::vector<std::size_t> const& rows, std::vector<std::size_t> const& counts) const
	{
		constexpr double min_gain = 1e-12;
		double const parent = impurity(criterion_, counts, rows.size());
		double const n = static_cast<double>(rows.size());
		Split best;
		std::vector<std::size_t> sorted = rows;
		std::vector<std::size_t> left(counts.size()), right(counts.size());
		for(std::size_t k = 0; k < pool_.dim(); ++k)
		{
			std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
				return pool_.state(a)[k] < pool_.state(b)[k];
			});
			std::fill(left.begin(), left.end(), 0);
			right = counts;
			for(std::size_t p = 0; p + 1 < sorted.size(); ++p)
			{
				auto const a = pool_.action(sorted[p]).value;
				++left[a];
				--right[a];
				double const lo = pool_.state(sorted[p])[k];
				double const hi = pool_.state(sorted[p + 1])[k];
				if(!(lo < hi))
					continue;
				double const t = lo + (hi - lo) / 2.0;
				if(!(lo < t && t < hi))
					continue;
				double const nl = static_cast<double>(p + 1);
				double const nr = n - nl;
				double const gain = parent - (nl / n) * impurity(criterion_, left, p + 1) -
				                    (nr / n) * impurity(criterion_, right, sorted.size() - p - 1);
				if(gain > min_gain && (!best.found || gain > best.gain + min_gain))
					best = {gain, k, t, true};
			}
		}
		return best;
	}

	std::size_t grow(std::vector<std::size_t> const& rows, std::size_t layer)
	{
		auto const counts = count(rows);
		// majority, lowest action id on ties
		auto const majority = static_cast<std::uint32_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
		std::size_t const id = nodes_.size();
		nodes_.push_back({true, 0, 0.0, ActionId{majority}});

		bool const pure = counts[majority] == rows.size();
		if(layer >= max_depth_ || pure)
			return id;
		auto const split = best_split(rows, counts);
		if(!split.found)
			return id;

		std::vector<std::size_t> lrows, rrows;
		for(auto r : rows)
			(pool_.state(r)[split.dim] <= split.threshold ? lrows : rrows).push_back(r);
		std::size_t const l = grow(lrows, layer + 1);
		std::size_t const r = grow(rrows, layer + 1);
		auto& node = nodes_[id];
		node.leaf = false;
		node.action = ActionId{};
		node.dim = split.dim;
		node.threshold = split.threshold;
		node.left = l;
		node.right = r;
		return id;
	}

	ExperiencePool const& pool_;
	SplitCriterion criterion_;
	std::size_t max_depth_;
	std::vector<DecisionTreeModel::Node> nodes_;
};

} // namespace detail

/// Greedy top-down induction. Candidate thresholds are midpoints between
/// consecutive distinct values; ties go to the lowest dimension, then the
/// lowest threshold.
inline DecisionTreeModel fit_tree(ExperiencePool const& pool, SplitCriterion criterion, std::size_t max_depth)
{
	if(pool.empty())
		throw EmptyPoolError("cannot fit a tree to an empty pool");
	if(max_depth == 0)
		throw ValueError("max_depth must be >= 1");
	auto nodes = detail::TreeBuilder(pool, criterion, max_depth).run();
	return DecisionTreeModel(criterion, max_depth, pool.dim(), pool.action_count(), std::move(nodes));
}

// Text format: header, then one node per line in pre-order, indented two
// spaces per layer:
//   #tree criterion=gini max_depth=5 dim=1 actions=2
//   dim 0 <= 1.5
//     leaf 0
//     leaf 1

inline void write_tree(std::ostream& os, DecisionTreeModel const& tree)
{
	os << "#tree criterion=" << to_string(tree.criterion()) << " max_depth=" << tree.max_depth()
	   << " dim=" << tree.dim() << " actions=" << tree.action_count() << '\n';
	auto const& nodes = tree.nodes();
	auto emit = [&](auto const& self, std::size_t id, std::size_t indent) -> void {
		os << std::string(indent * 2, ' ');
		if(nodes[id].leaf)
		{
			os << "leaf " << nodes[id].action.value << '\n';
			return;
		}
		os << "dim " << nodes[id].dim << " <= " << text::format_double(nodes[id].threshold) << '\n';
		self(self, nodes[id].left, indent + 1);
		self(self, nodes[id].right, indent + 1);
	};
	emit(emit, 0, 0);
}

/// Reads a tree whose `#tree` header line has already been consumed.
inline DecisionTreeModel read_tree_body(std::istream& is, std::string_view header)
{
	if(!header.starts_with("#tree"))
		throw FormatError("expected '#tree' header");
	auto const criterion = parse_criterion(text::header_field(header, "criterion"));
	auto const max_depth = text::parse_uint(text::header_field(header, "max_depth"));
	auto const dim = text::parse_uint(text::header_field(header, "dim"));
	auto const actions = text::parse_uint(text::header_field(header, "actions"));

	std::vector<std::string> lines;
	for(std::string line; std::getline(is, line);)
		if(!text::trim(line).empty())
			lines.push_back(line);

	std::vector<DecisionTreeModel::Node> nodes;
	std::size_t cursor = 0;
	auto parse = [&](auto const& self, std::size_t indent) -> std::size_t {
		if(cursor >= lines.size())
			throw FormatError("tree ends early");
		std::string_view line = lines[cursor++];
		auto const lead = line.find_first_not_of(' ');
		if(lead != indent * 2)
			throw FormatError("bad indentation in tree line: " + std::string(line));
		auto fields = text::split(text::trim(line), ' ');
		std::size_t const id = nodes.size();
		nodes.emplace_back();
		if(fields.size() == 2 && fields[0] == "leaf")
		{
			auto a = text::parse_uint(fields[1]);
			if(a >= actions)
				throw FormatError("leaf action out of range");
			nodes[id].action = ActionId{static_cast<std::uint32_t>(a)};
			return id;
		}
		if(fields.size() != 4 || fields[0] != "dim" || fields[2] != "<=")
			throw FormatError("malformed tree line: " + std::string(line));
		auto d = text::parse_uint(fields[1]);
		if(d >= dim)
			throw FormatError("split dimension out of range");
		double t = text::parse_double(fields[3]);
		std::size_t l = self(self, indent + 1);
		std::size_t r = self(self, indent + 1);
		nodes[id].leaf = false;
		nodes[id].dim = d;
		nodes[id].threshold = t;
		nodes[id].left = l;
		nodes[id].right = r;
		return id;
	};
	parse(parse, 0);
	if(cursor != lines.size())
		throw FormatError("trailing lines after tree");
	return DecisionTreeModel(criterion, max_depth, dim, actions, std::move(nodes));
}

inline DecisionTreeModel read_tree(std::istream& is)
{
	std::string header;
	if(!std::getline(is, header))
		throw FormatError("empty tree file");
	return read_tree_body(is, text::trim(header));
}

} // namespace bcmer
