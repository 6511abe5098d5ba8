#pragma once

#include <bcmer/condensation.hpp>
#include <bcmer/environments.hpp>
#include <bcmer/errors.hpp>
#include <bcmer/experience.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <vector>

namespace bcmer::viz
{

struct Rgb
{
	std::uint8_t r, g, b;
};

/// Fixed palette indexed by action id (wraps after ten).
inline constexpr std::array<Rgb, 10> palette{{
	{31, 119, 180},
	{255, 127, 14},
	{44, 160, 44},
	{214, 39, 40},
	{148, 103, 189},
	{140, 86, 75},
	{227, 119, 194},
	{127, 127, 127},
	{188, 189, 34},
	{23, 190, 207},
}};

inline Rgb colour(ActionId a) { return palette[a.value % palette.size()]; }

struct PlotArea
{
	Bounds x, y;
};

/// Extent of the pool padded by 5% (and by 1 on degenerate axes).
inline PlotArea extent(ExperiencePool const& pool)
{
	PlotArea a{{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()},
	           {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
	for(std::size_t i = 0; i < pool.size(); ++i)
	{
		a.x.lo = std::min(a.x.lo, pool.state(i)[0]);
		a.x.hi = std::max(a.x.hi, pool.state(i)[0]);
		a.y.lo = std::min(a.y.lo, pool.state(i)[1]);
		a.y.hi = std::max(a.y.hi, pool.state(i)[1]);
	}
	for(Bounds* b : {&a.x, &a.y})
	{
		if(pool.empty())
			*b = {-1.0, 1.0};
		double pad = (b->hi - b->lo) * 0.05;
		if(pad == 0.0)
			pad = 1.0;
		b->lo -= pad;
		b->hi += pad;
	}
	return a;
}

/// Scatter plot of a 2-D pool: colour by action, boundary points filled,
/// interior points hollow. `classes` may be empty (all drawn filled).
inline void scatter_svg(std::ostream& os, ExperiencePool const& pool, std::span<PointClass const> classes,
                        int width = 600, int height = 600)
{
	if(pool.dim() != 2)
		throw UnsupportedDimensionError("scatter plots need a 2-D pool");
	if(!classes.empty() && classes.size() != pool.size())
		throw LengthError("one class per point required");
	auto const area = extent(pool);
	auto px = [&](double v) { return (v - area.x.lo) / (area.x.hi - area.x.lo) * width; };
	auto py = [&](double v) { return height - (v - area.y.lo) / (area.y.hi - area.y.lo) * height; };

	os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
	   << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
	os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
	char buf[256];
	for(std::size_t i = 0; i < pool.size(); ++i)
	{
		auto c = colour(pool.action(i));
		bool const interior = !classes.empty() && classes[i] == PointClass::Interior;
		std::snprintf(buf, sizeof(buf),
		              "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" data-action=\"%u\" class=\"%s\" "
		              "fill=\"%s\" stroke=\"rgb(%d,%d,%d)\"",
		              px(pool.state(i)[0]), py(pool.state(i)[1]), pool.action(i).value,
		              interior ? "interior" : "boundary", interior ? "none" : "currentColor", c.r, c.g, c.b);
		os << buf;
		std::snprintf(buf, sizeof(buf), " color=\"rgb(%d,%d,%d)\"/>\n", c.r, c.g, c.b);
		os << buf;
	}
	os << "</svg>\n";
}

/// Predicted action at every cell centre of a width x height grid; row 0
/// is the top (largest y).
inline std::vector<ActionId> region_grid(std::function<ActionId(StateView)> const& predict, PlotArea area,
                                         int width, int height)
{
	if(width <= 0 || height <= 0)
		throw ValueError("raster size must be positive");
	std::vector<ActionId> cells;
	cells.reserve(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
	double q[2];
	for(int row = 0; row < height; ++row)
	{
		q[1] = area.y.hi - (row + 0.5) * (area.y.hi - area.y.lo) / height;
		for(int col = 0; col < width; ++col)
		{
			q[0] = area.x.lo + (col + 0.5) * (area.x.hi - area.x.lo) / width;
			cells.push_back(predict(StateView(q, 2)));
		}
	}
	return cells;
}

/// Binary portable pixmap (P6).
inline void write_ppm(std::ostream& os, std::span<ActionId const> cells, int width, int height)
{
	if(cells.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
		throw LengthError("cell count does not match raster size");
	os << "P6\n" << width << ' ' << height << "\n255\n";
	for(auto a : cells)
	{
		auto c = colour(a);
		os.put(static_cast<char>(c.r)).put(static_cast<char>(c.g)).put(static_cast<char>(c.b));
	}
}

} // namespace bcmer::viz
