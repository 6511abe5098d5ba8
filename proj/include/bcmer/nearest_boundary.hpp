#pragma once

#include <bcmer/errors.hpp>
#include <bcmer/experience.hpp>
#include <bcmer/spatial.hpp>

#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <variant>

namespace bcmer
{

enum class Backend
{
	Brute,
	KDTree,
	BallTree,
};

inline std::string_view to_string(Backend b)
{
	switch(b)
	{
	case Backend::Brute: return "brute";
	case Backend::KDTree: return "kdtree";
	case Backend::BallTree: return "balltree";
	}
	return "?";
}

inline Backend parse_backend(std::string_view name)
{
	if(name == "brute")
		return Backend::Brute;
	if(name == "kdtree" || name == "kd")
		return Backend::KDTree;
	if(name == "balltree" || name == "ball")
		return Backend::BallTree;
	throw NameError("unknown backend '" + std::string(name) + "'");
}

/// The experience that supports a prediction.
struct Explanation
{
	std::size_t nearest_index = 0;
	double nearest_distance = 0.0;
};

struct Prediction
{
	ActionId action;
	Explanation explanation;
};

/// Student policy answering with the action of the nearest stored
/// experience. Immutable after construction; the backend affects speed only.
class NearestBoundaryModel
{
public:
	NearestBoundaryModel(ExperiencePool pool, Backend backend)
		: pool_(std::move(pool))
		, backend_(backend)
	{
		if(pool_.empty())
			throw EmptyPoolError("cannot fit a nearest-boundary model to an empty pool");
		switch(backend_)
		{
		case Backend::Brute: break;
		case Backend::KDTree: index_.emplace<spatial::KDTree>(pool_); break;
		case Backend::BallTree: index_.emplace<spatial::BallTree>(pool_); break;
		}
	}

	Prediction predict(StateView state) const
	{
		require_same_dim(state.size(), pool_.dim());
		spatial::Neighbor n;
		switch(backend_)
		{
		case Backend::Brute: n = spatial::brute_nearest(pool_, state); break;
		case Backend::KDTree: n = std::get<spatial::KDTree>(index_).nearest(pool_, state); break;
		case Backend::BallTree: n = std::get<spatial::BallTree>(index_).nearest(pool_, state); break;
		}
		return {pool_.action(n.index), {n.index, std::sqrt(n.squared)}};
	}

	ExperiencePool const& pool() const noexcept { return pool_; }
	Backend backend() const noexcept { return backend_; }

private:
	ExperiencePool pool_;
	Backend backend_;
	std::variant<std::monostate, spatial::KDTree, spatial::BallTree> index_;
};

inline NearestBoundaryModel fit(ExperiencePool pool, Backend backend)
{
	return NearestBoundaryModel(std::move(pool), backend);
}

inline void write_model(std::ostream& os, NearestBoundaryModel const& model)
{
	os << "#nbmodel backend=" << to_string(model.backend()) << '\n';
	write_pool(os, model.pool());
}

/// Reads a model whose `#nbmodel` header line has already been consumed.
inline NearestBoundaryModel read_model_body(std::istream& is, std::string_view header)
{
	if(!header.starts_with("#nbmodel"))
		throw FormatError("expected '#nbmodel' header");
	auto backend = parse_backend(text::header_field(header, "backend"));
	return NearestBoundaryModel(read_pool(is), backend);
}

inline NearestBoundaryModel read_model(std::istream& is)
{
	std::string header;
	if(!std::getline(is, header))
		throw FormatError("empty model file");
	return read_model_body(is, text::trim(header));
}

} // namespace bcmer
